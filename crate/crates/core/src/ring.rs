//! Coefficient rings and frames of derivations.
//!
//! A [`Frame`] is an ordered set of derivations `X_1..X_D` together with the
//! structure constants of their brackets and the rule by which each `X_i`
//! acts on coefficients. Inner derivations act by commutator with a fixed
//! matrix, coordinate derivations by finite differences on a lattice.

use nalgebra::{DMatrix, SMatrix};

use crate::liealg::{structure_constants, DerivationBasis, StructureTensor};
use crate::scalar::Real;
use crate::error::Result;

pub trait CoefficientRing: Sync {
    type Elem: Clone + Send + Sync;

    fn zero(&self) -> Self::Elem;
    /// `x · 1`.
    fn constant(&self, x: f64) -> Self::Elem;
    fn add(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn sub(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn mul(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn scale(&self, a: &Self::Elem, s: f64) -> Self::Elem;
    fn max_abs(&self, a: &Self::Elem) -> f64;
    /// Trace down to the reals: matrix trace for matrix coefficients,
    /// `n ·` value for centre-valued coefficients of `M_n`, and the
    /// quadrature of that over a lattice.
    fn trace(&self, a: &Self::Elem) -> f64;

    fn one(&self) -> Self::Elem {
        self.constant(1.0)
    }

    /// `a += b · c`
    fn add_mul(&self, acc: &mut Self::Elem, b: &Self::Elem, c: &Self::Elem) {
        *acc = self.add(acc, &self.mul(b, c));
    }
}

/// Coefficients valued in the centre, so pointwise they are plain reals.
/// Metrics with such entries can be inverted point by point.
pub trait CentreRing: CoefficientRing {
    fn num_points(&self) -> usize;
    fn value_at(&self, a: &Self::Elem, point: usize) -> f64;
    fn gather(&self, values: Vec<f64>) -> Self::Elem;
}

pub type Elem<F> = <<F as Frame>::Ring as CoefficientRing>::Elem;

pub trait Frame: Sync {
    type Ring: CoefficientRing;

    fn ring(&self) -> &Self::Ring;
    fn structure(&self) -> &StructureTensor;
    /// Action of the derivation `X_i` on a coefficient.
    fn act(&self, i: usize, a: &Elem<Self>) -> Elem<Self>;

    fn dim(&self) -> usize {
        self.structure().dim()
    }
}

/// Reals, viewed as the centre of `M_n(R)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RealRing {
    /// Size of the matrix algebra; the trace of `x · 1` is `n x`.
    pub algebra_size: usize,
}

impl CoefficientRing for RealRing {
    type Elem = f64;

    fn zero(&self) -> f64 {
        0.0
    }
    fn constant(&self, x: f64) -> f64 {
        x
    }
    fn add(&self, a: &f64, b: &f64) -> f64 {
        a + b
    }
    fn sub(&self, a: &f64, b: &f64) -> f64 {
        a - b
    }
    fn mul(&self, a: &f64, b: &f64) -> f64 {
        a * b
    }
    fn scale(&self, a: &f64, s: f64) -> f64 {
        a * s
    }
    fn max_abs(&self, a: &f64) -> f64 {
        a.abs()
    }
    fn trace(&self, a: &f64) -> f64 {
        self.algebra_size as f64 * a
    }
    fn add_mul(&self, acc: &mut f64, b: &f64, c: &f64) {
        *acc += b * c;
    }
}

impl CentreRing for RealRing {
    fn num_points(&self) -> usize {
        1
    }
    fn value_at(&self, a: &f64, _point: usize) -> f64 {
        *a
    }
    fn gather(&self, values: Vec<f64>) -> f64 {
        values[0]
    }
}

/// Inner derivations of `M_n(R)` acting on centre-valued (real) coefficients.
/// The action is identically zero; only the brackets matter.
#[derive(Debug, Clone)]
pub struct ScalarFrame {
    ring: RealRing,
    structure: StructureTensor,
}

impl ScalarFrame {
    pub fn new(algebra_size: usize, structure: StructureTensor) -> Self {
        Self {
            ring: RealRing { algebra_size },
            structure,
        }
    }

    pub fn from_basis(basis: &DerivationBasis) -> Result<Self> {
        Ok(Self::new(basis.matrix_size(), structure_constants(basis)?))
    }
}

impl Frame for ScalarFrame {
    type Ring = RealRing;

    fn ring(&self) -> &RealRing {
        &self.ring
    }
    fn structure(&self) -> &StructureTensor {
        &self.structure
    }
    fn act(&self, _i: usize, _a: &f64) -> f64 {
        0.0
    }
}

/// `N × N` matrices over a scalar type.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct MatrixRing<T, const N: usize> {
    _scalar: std::marker::PhantomData<T>,
}

impl<T: Real, const N: usize> MatrixRing<T, N> {
    pub fn new() -> Self {
        Self {
            _scalar: std::marker::PhantomData,
        }
    }
}

impl<T: Real, const N: usize> CoefficientRing for MatrixRing<T, N> {
    type Elem = SMatrix<T, N, N>;

    fn zero(&self) -> Self::Elem {
        SMatrix::zeros()
    }
    fn constant(&self, x: f64) -> Self::Elem {
        SMatrix::from_diagonal_element(T::from_f64(x))
    }
    fn add(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem {
        a + b
    }
    fn sub(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem {
        a - b
    }
    fn mul(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem {
        a * b
    }
    fn scale(&self, a: &Self::Elem, s: f64) -> Self::Elem {
        a.map(|x| x * T::from_f64(s))
    }
    fn max_abs(&self, a: &Self::Elem) -> f64 {
        a.iter().fold(0.0, |m, x| m.max(x.to_f64().abs()))
    }
    fn trace(&self, a: &Self::Elem) -> f64 {
        let mut t = T::zero();
        for i in 0..N {
            t += a[(i, i)];
        }
        t.to_f64()
    }
}

/// Inner derivations `[F_i, ·]` of `M_N(R)` acting on matrix coefficients.
#[derive(Debug, Clone)]
pub struct InnerMatrixFrame<T, const N: usize> {
    ring: MatrixRing<T, N>,
    generators: Vec<SMatrix<T, N, N>>,
    structure: StructureTensor,
}

impl<T: Real, const N: usize> InnerMatrixFrame<T, N> {
    pub fn from_basis(basis: &DerivationBasis) -> Result<Self> {
        let structure = structure_constants(basis)?;
        let generators = basis
            .generators()
            .iter()
            .map(|g: &DMatrix<f64>| SMatrix::from_fn(|r, c| T::from_f64(g[(r, c)])))
            .collect();
        Ok(Self {
            ring: MatrixRing::new(),
            generators,
            structure,
        })
    }

    pub fn generators(&self) -> &[SMatrix<T, N, N>] {
        &self.generators
    }
}

impl<T: Real, const N: usize> Frame for InnerMatrixFrame<T, N> {
    type Ring = MatrixRing<T, N>;

    fn ring(&self) -> &Self::Ring {
        &self.ring
    }
    fn structure(&self) -> &StructureTensor {
        &self.structure
    }
    fn act(&self, i: usize, a: &SMatrix<T, N, N>) -> SMatrix<T, N, N> {
        let f = &self.generators[i];
        f * a - a * f
    }
}
