//! Matrix Lie algebra substrate: traceless bases, commutators, structure
//! constants and the Killing form.

use nalgebra::{DMatrix, DVector};

use crate::error::{GeomError, Result};

/// Gram matrices with a worse condition number are rejected.
pub const MAX_GRAM_CONDITION: f64 = 1e10;
/// Maximum Frobenius norm of the part of `[E_l, E_p]` not spanned by the
/// basis, relative to the commutator's own scale.
pub const EXPANSION_TOLERANCE: f64 = 1e-10;

/// Ordered list of traceless generators of a Lie subalgebra of `M_n(R)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivationBasis {
    n: usize,
    generators: Vec<DMatrix<f64>>,
    gram: DMatrix<f64>,
}

impl DerivationBasis {
    /// Validates shape, tracelessness and Frobenius independence.
    pub fn new(generators: Vec<DMatrix<f64>>) -> Result<Self> {
        let n = generators
            .first()
            .map(|g| g.nrows())
            .ok_or_else(|| GeomError::InvalidDimension("empty generator list".into()))?;
        for g in &generators {
            if g.nrows() != n || g.ncols() != n {
                return Err(GeomError::DimensionMismatch {
                    expected: n,
                    found: g.nrows().max(g.ncols()),
                });
            }
            if g.iter().any(|x| !x.is_finite()) {
                return Err(GeomError::NonFinite("generator"));
            }
            let scale = g.amax().max(1.0);
            if g.trace().abs() > 1e-12 * scale {
                return Err(GeomError::InvalidDimension(format!(
                    "generator has trace {:.3e}",
                    g.trace()
                )));
            }
        }
        let d = generators.len();
        let gram = DMatrix::from_fn(d, d, |i, j| frobenius(&generators[i], &generators[j]));
        let condition = condition_number(&gram);
        if !(condition < MAX_GRAM_CONDITION) {
            return Err(GeomError::DegenerateBasis { condition });
        }
        Ok(Self {
            n,
            generators,
            gram,
        })
    }

    pub fn matrix_size(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.generators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.generators.is_empty()
    }

    pub fn generators(&self) -> &[DMatrix<f64>] {
        &self.generators
    }

    /// Frobenius pairings `tr(E_iᵀ E_j)`.
    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    /// Coordinates of `x` in the basis, plus the Frobenius norm of the
    /// unexplained remainder.
    pub fn expand(&self, x: &DMatrix<f64>) -> (DVector<f64>, f64) {
        let rhs = DVector::from_iterator(self.len(), self.generators.iter().map(|e| frobenius(e, x)));
        let coeffs = self
            .gram
            .clone()
            .lu()
            .solve(&rhs)
            .expect("Gram matrix was checked to be nonsingular");
        let mut rest = x.clone();
        for (c, e) in coeffs.iter().zip(&self.generators) {
            rest -= e * *c;
        }
        (coeffs, rest.norm())
    }
}

/// Standard basis of `sl(n, R)`: off-diagonal units `e_ab` in lexicographic
/// `(a, b)` order, then `e_aa - e_(a+1)(a+1)` for `a = 1..n-1`.
pub fn sl_basis(n: usize) -> Result<DerivationBasis> {
    if n < 2 {
        return Err(GeomError::InvalidDimension(format!(
            "sl(n) needs n >= 2, got {n}"
        )));
    }
    let mut gens = Vec::with_capacity(n * n - 1);
    for a in 0..n {
        for b in 0..n {
            if a != b {
                let mut e = DMatrix::zeros(n, n);
                e[(a, b)] = 1.0;
                gens.push(e);
            }
        }
    }
    for a in 0..n - 1 {
        let mut e = DMatrix::zeros(n, n);
        e[(a, a)] = 1.0;
        e[(a + 1, a + 1)] = -1.0;
        gens.push(e);
    }
    DerivationBasis::new(gens)
}

pub fn commutator(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if a.shape() != b.shape() || a.nrows() != a.ncols() {
        return Err(GeomError::DimensionMismatch {
            expected: a.nrows(),
            found: b.nrows(),
        });
    }
    Ok(a * b - b * a)
}

pub(crate) fn frobenius(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

pub(crate) fn condition_number(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 1.0;
    }
    let sv = m.clone().singular_values();
    let max = sv.max();
    let min = sv.min();
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Real array `c^r_{lp}` with `[E_l, E_p] = c^r_{lp} E_r`.
#[derive(Debug, Clone, PartialEq)]
pub struct StructureTensor {
    d: usize,
    data: Vec<f64>,
}

impl StructureTensor {
    pub fn zeros(d: usize) -> Self {
        Self {
            d,
            data: vec![0.0; d * d * d],
        }
    }

    /// Builds from `f(r, l, p) = c^r_{lp}`.
    pub fn from_fn(d: usize, mut f: impl FnMut(usize, usize, usize) -> f64) -> Self {
        let mut c = Self::zeros(d);
        for r in 0..d {
            for l in 0..d {
                for p in 0..d {
                    c.data[(r * d + l) * d + p] = f(r, l, p);
                }
            }
        }
        c
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    #[inline]
    pub fn get(&self, r: usize, l: usize, p: usize) -> f64 {
        self.data[(r * self.d + l) * self.d + p]
    }

    #[inline]
    pub fn set(&mut self, r: usize, l: usize, p: usize, v: f64) {
        self.data[(r * self.d + l) * self.d + p] = v;
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn is_abelian(&self) -> bool {
        self.data.iter().all(|&x| x == 0.0)
    }

    /// `max |c^r_{lp} + c^r_{pl}|`.
    pub fn antisymmetry_residual(&self) -> f64 {
        let d = self.d;
        let mut worst = 0.0_f64;
        for r in 0..d {
            for l in 0..d {
                for p in 0..d {
                    worst = worst.max((self.get(r, l, p) + self.get(r, p, l)).abs());
                }
            }
        }
        worst
    }

    /// Structure constants after the change of basis `E'_i = Σ_a M_{ai} E_a`.
    pub fn transformed(&self, m: &DMatrix<f64>) -> Result<Self> {
        let d = self.d;
        if m.shape() != (d, d) {
            return Err(GeomError::DimensionMismatch {
                expected: d,
                found: m.nrows(),
            });
        }
        let minv = m
            .clone()
            .try_inverse()
            .ok_or_else(|| GeomError::InvalidDimension("basis change is singular".into()))?;
        // c'^r_{lp} = (M⁻¹)_{r a} c^a_{b e} M_{b l} M_{e p}
        let mut out = Self::zeros(d);
        for r in 0..d {
            for l in 0..d {
                for p in 0..d {
                    let mut acc = 0.0;
                    for a in 0..d {
                        let w = minv[(r, a)];
                        if w == 0.0 {
                            continue;
                        }
                        for b in 0..d {
                            for e in 0..d {
                                acc += w * self.get(a, b, e) * m[(b, l)] * m[(e, p)];
                            }
                        }
                    }
                    out.set(r, l, p, acc);
                }
            }
        }
        Ok(out)
    }
}

/// Expands every commutator of the basis in the basis itself.
pub fn structure_constants(basis: &DerivationBasis) -> Result<StructureTensor> {
    let d = basis.len();
    let gens = basis.generators();
    let mut c = StructureTensor::zeros(d);
    for l in 0..d {
        for p in (l + 1)..d {
            let bracket = &gens[l] * &gens[p] - &gens[p] * &gens[l];
            let (coeffs, residual) = basis.expand(&bracket);
            let scale = bracket.norm().max(1.0);
            if residual > EXPANSION_TOLERANCE * scale {
                return Err(GeomError::NotClosed { residual });
            }
            for r in 0..d {
                c.set(r, l, p, coeffs[r]);
                c.set(r, p, l, -coeffs[r]);
            }
        }
    }
    Ok(c)
}

/// Largest cyclic Jacobi sum `Σ_s (c^m_{ls} c^s_{pq} + c^m_{ps} c^s_{ql} + c^m_{qs} c^s_{lp})`.
pub fn jacobi_residual(c: &StructureTensor) -> f64 {
    let d = c.dim();
    let mut worst = 0.0_f64;
    for m in 0..d {
        for l in 0..d {
            for p in 0..d {
                for q in 0..d {
                    let mut acc = 0.0;
                    for s in 0..d {
                        acc += c.get(m, l, s) * c.get(s, p, q)
                            + c.get(m, p, s) * c.get(s, q, l)
                            + c.get(m, q, s) * c.get(s, l, p);
                    }
                    worst = worst.max(acc.abs());
                }
            }
        }
    }
    worst
}

/// Jacobi residual divided by `max|c|²`, the natural scale of the sum.
pub fn relative_jacobi_residual(c: &StructureTensor) -> f64 {
    let scale = c.max_abs();
    if scale == 0.0 {
        0.0
    } else {
        jacobi_residual(c) / (scale * scale)
    }
}

/// Killing form `K_{jp} = Σ_{r,s} c^r_{js} c^s_{pr} = tr(ad E_j ∘ ad E_p)`.
#[derive(Debug, Clone, PartialEq)]
pub struct KillingMatrix(pub DMatrix<f64>);

impl KillingMatrix {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    /// `max |K_{rm} c^r_{lj} + K_{jr} c^r_{lm}|`.
    pub fn ad_invariance_residual(&self, c: &StructureTensor) -> f64 {
        let d = c.dim();
        let k = &self.0;
        let mut worst = 0.0_f64;
        for l in 0..d {
            for j in 0..d {
                for m in 0..d {
                    let mut acc = 0.0;
                    for r in 0..d {
                        acc += k[(r, m)] * c.get(r, l, j) + k[(j, r)] * c.get(r, l, m);
                    }
                    worst = worst.max(acc.abs());
                }
            }
        }
        worst
    }
}

pub fn killing_form(c: &StructureTensor) -> KillingMatrix {
    let d = c.dim();
    let k = DMatrix::from_fn(d, d, |j, p| {
        let mut acc = 0.0;
        for r in 0..d {
            for s in 0..d {
                acc += c.get(r, j, s) * c.get(s, p, r);
            }
        }
        acc
    });
    KillingMatrix(k)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn h_x_y() -> DerivationBasis {
        let h = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        let x = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        let y = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 1.0, 0.0]);
        DerivationBasis::new(vec![h, x, y]).unwrap()
    }

    #[test]
    fn sl2_basis_order() {
        let b = sl_basis(2).unwrap();
        assert_eq!(b.len(), 3);
        assert_eq!(b.generators()[0], DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]));
        assert_eq!(b.generators()[1], DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 1.0, 0.0]));
        assert_eq!(b.generators()[2], DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]));
        assert_eq!(sl_basis(3).unwrap().len(), 8);
        assert!(matches!(sl_basis(1), Err(GeomError::InvalidDimension(_))));
    }

    #[test]
    fn sl2_gram_is_permuted_diagonal() {
        // Pairings computed by hand: e12·e21 = e21·e12 = 0 off-diagonal,
        // tr(e12ᵀ e12) = 1, tr(hᵀh) = 2.
        let b = sl_basis(2).unwrap();
        let expected = DMatrix::from_row_slice(3, 3, &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 2.0]);
        assert_eq!(b.gram(), &expected);
    }

    #[test]
    fn commutator_examples() {
        let f = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        let j = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        assert_eq!(
            commutator(&f, &j).unwrap(),
            DMatrix::from_row_slice(2, 2, &[0.0, -2.0, -2.0, 0.0])
        );
        assert_eq!(commutator(&f, &f).unwrap(), DMatrix::zeros(2, 2));
        assert!(commutator(&f, &DMatrix::zeros(3, 3)).is_err());
    }

    #[test]
    fn sl2_structure_constants_h_x_y() {
        let c = structure_constants(&h_x_y()).unwrap();
        let (h, x, y) = (0, 1, 2);
        for r in 0..3 {
            for l in 0..3 {
                for p in 0..3 {
                    let expected = match (r, l, p) {
                        (r, l, p) if (r, l, p) == (x, h, x) => 2.0,
                        (r, l, p) if (r, l, p) == (x, x, h) => -2.0,
                        (r, l, p) if (r, l, p) == (y, h, y) => -2.0,
                        (r, l, p) if (r, l, p) == (y, y, h) => 2.0,
                        (r, l, p) if (r, l, p) == (h, x, y) => 1.0,
                        (r, l, p) if (r, l, p) == (h, y, x) => -1.0,
                        _ => 0.0,
                    };
                    assert!((c.get(r, l, p) - expected).abs() < 1e-14, "c^{r}_{l}{p}");
                }
            }
        }
    }

    #[test]
    fn killing_hh_is_eight() {
        let c = structure_constants(&h_x_y()).unwrap();
        let k = killing_form(&c);
        // ad(H) = diag(0, 2, -2) on (H, X, Y); trace of its square is 8.
        assert!((k.0[(0, 0)] - 8.0).abs() < 1e-14);
        assert!((k.0[(1, 2)] - 4.0).abs() < 1e-14);
        assert_eq!(k.0, k.0.transpose());
    }

    #[test]
    fn abelian_generators() {
        let mut f1 = DMatrix::zeros(4, 4);
        f1[(0, 1)] = 1.0;
        f1[(1, 0)] = -1.0;
        let mut f2 = DMatrix::zeros(4, 4);
        f2[(2, 3)] = 1.0;
        f2[(3, 2)] = -1.0;
        let c = structure_constants(&DerivationBasis::new(vec![f1, f2]).unwrap()).unwrap();
        assert!(c.is_abelian());
        assert_eq!(killing_form(&c).0, DMatrix::zeros(2, 2));
        assert_eq!(jacobi_residual(&StructureTensor::zeros(3)), 0.0);
    }

    #[test]
    fn sl_n_identities() {
        for n in [2, 3] {
            let c = structure_constants(&sl_basis(n).unwrap()).unwrap();
            let d = c.dim();
            let scale = c.max_abs();
            assert!(c.antisymmetry_residual() <= 1e-12 * scale);
            assert!(relative_jacobi_residual(&c) < 1e-12);
            for r in 0..d {
                for l in 0..d {
                    assert_eq!(c.get(r, l, l), 0.0);
                }
            }
            let k = killing_form(&c);
            assert!(k.ad_invariance_residual(&c) < 1e-12 * k.0.amax());
            // Killing form of sl(n) is 2n tr(XY).
            let b = sl_basis(n).unwrap();
            for i in 0..d {
                for j in 0..d {
                    let direct = 2.0 * n as f64 * (&b.generators()[i] * &b.generators()[j]).trace();
                    assert!((k.0[(i, j)] - direct).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn round_trip_reconstructs_commutators() {
        let b = sl_basis(3).unwrap();
        let c = structure_constants(&b).unwrap();
        let g = b.generators();
        for l in 0..8 {
            for p in 0..8 {
                let direct = commutator(&g[l], &g[p]).unwrap();
                let mut rebuilt = DMatrix::zeros(3, 3);
                for r in 0..8 {
                    rebuilt += &g[r] * c.get(r, l, p);
                }
                assert!((direct - rebuilt).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn corrupted_tensor_breaks_jacobi() {
        // sl(2) is too small: flipping [X, Y] = H to −H is still a Lie
        // algebra. In sl(3), flip [e12, e23] = e13.
        let b = sl_basis(3).unwrap();
        let mut c = structure_constants(&b).unwrap();
        let (e12, e23, e13) = (0, 3, 1);
        assert_eq!(c.get(e13, e12, e23), 1.0);
        c.set(e13, e12, e23, -1.0);
        c.set(e13, e23, e12, 1.0);
        assert!(jacobi_residual(&c) >= 1.0);
    }

    #[test]
    fn rejects_bad_bases() {
        let id = DMatrix::<f64>::identity(2, 2);
        assert!(DerivationBasis::new(vec![id]).is_err());
        let x = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        assert!(matches!(
            DerivationBasis::new(vec![x.clone(), x.clone() * 2.0]),
            Err(GeomError::DegenerateBasis { .. })
        ));
        let y = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 1.0, 0.0]);
        assert!(matches!(
            structure_constants(&DerivationBasis::new(vec![x, y]).unwrap()),
            Err(GeomError::NotClosed { .. })
        ));
    }
}
