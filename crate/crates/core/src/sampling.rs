//! Seeded random inputs. Every sample is drawn from a ChaCha stream selected
//! by `(seed, stream)`, so batch element `i` is the same whether batches run
//! sequentially or in parallel.

use nalgebra::{DMatrix, Matrix4};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::engine::Connection;
use crate::liealg::condition_number;
use crate::palatini::{BlockMetric, M4Connection, M8};

pub fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn uniform4(rng: &mut impl Rng) -> Matrix4<f64> {
    Matrix4::from_fn(|_, _| rng.random_range(-1.0..1.0))
}

/// Block metric with `g_11`, `g_22`, `g_12 = g_21` entries uniform in
/// `[−1, 1]`, resampled until the 8×8 condition number is below `max_condition`.
pub fn random_block_metric(rng: &mut impl Rng, max_condition: f64) -> BlockMetric {
    loop {
        let (g11, g12, g22) = (uniform4(rng), uniform4(rng), uniform4(rng));
        if let Ok(g) = BlockMetric::new(g11, g12, g22) {
            if g.condition() < max_condition {
                return g;
            }
        }
    }
}

/// Admissible metric variation (`h_12 = h_21`), entries standard-uniform.
pub fn random_admissible_variation(rng: &mut impl Rng) -> M8<f64> {
    let (h11, h12, h22) = (uniform4(rng), uniform4(rng), uniform4(rng));
    M8::from_fn(|r, c| {
        let b = match (r / 4, c / 4) {
            (0, 0) => &h11,
            (1, 1) => &h22,
            _ => &h12,
        };
        b[(r % 4, c % 4)]
    })
}

pub fn random_connection(rng: &mut impl Rng) -> M4Connection<f64> {
    Connection::from_fn(2, |_, _, _| uniform4(rng))
}

/// Frobenius norm of a whole connection, summing over symbols.
pub fn connection_norm(conn: &M4Connection<f64>) -> f64 {
    conn.entries().iter().map(|m| m.norm_squared()).sum::<f64>().sqrt()
}

/// Symmetric metric with entries uniform in `[−1, 1]` (any signature),
/// resampled until the condition number is below `max_condition`.
pub fn random_symmetric_metric(rng: &mut impl Rng, d: usize, max_condition: f64) -> DMatrix<f64> {
    loop {
        let a = DMatrix::from_fn(d, d, |_, _| rng.random_range(-1.0..1.0));
        let g = (&a + a.transpose()) * 0.5;
        if condition_number(&g) < max_condition {
            return g;
        }
    }
}

/// Positive-definite metric `A Aᵀ / d + ½ I` with `A` uniform in `[−1, 1]`.
pub fn random_spd_metric(rng: &mut impl Rng, d: usize) -> DMatrix<f64> {
    let a = DMatrix::from_fn(d, d, |_, _| rng.random_range(-1.0..1.0));
    &a * a.transpose() / d as f64 + DMatrix::identity(d, d) * 0.5
}

/// Symmetric positive-definite block metric: SPD diagonal blocks and a
/// small symmetric coupling, so the 8×8 matrix is symmetric with `g_12 = g_21`.
pub fn random_spd_block_metric(rng: &mut impl Rng) -> BlockMetric {
    let to4 = |m: &DMatrix<f64>| Matrix4::from_fn(|r, c| m[(r, c)]);
    loop {
        let g11 = to4(&random_spd_metric(rng, 4));
        let g22 = to4(&random_spd_metric(rng, 4));
        let a = uniform4(rng);
        let g12 = (a + a.transpose()) * 0.125;
        if let Ok(g) = BlockMetric::new(g11, g12, g22) {
            if g.assembled().cholesky().is_some() {
                return g;
            }
        }
    }
}

/// Invertible matrix normalized to `|det| = 1`.
pub fn random_unimodular(rng: &mut impl Rng, d: usize) -> DMatrix<f64> {
    loop {
        let m = DMatrix::from_fn(d, d, |_, _| rng.random_range(-1.0..1.0)) + DMatrix::identity(d, d);
        let det: f64 = m.clone().lu().determinant();
        if det.abs() > 1e-2 && condition_number(&m) < 1e3 {
            return m / det.abs().powf(1.0 / d as f64);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a = random_block_metric(&mut rng(7, 3), 1e6);
        let b = random_block_metric(&mut rng(7, 3), 1e6);
        let c = random_block_metric(&mut rng(7, 4), 1e6);
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_eq!(a.block(0, 1), a.block(1, 0));
    }

    #[test]
    fn spd_block_metric_is_symmetric_positive() {
        let g = random_spd_block_metric(&mut rng(2, 0));
        let m = g.assembled();
        assert_eq!(m, m.transpose());
        assert!(m.symmetric_eigenvalues().min() > 0.0);
    }

    #[test]
    fn unimodular_has_unit_determinant() {
        let m = random_unimodular(&mut rng(1, 0), 5);
        assert!((m.determinant().abs() - 1.0).abs() < 1e-12);
    }
}
