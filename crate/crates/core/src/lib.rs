//! Derivation-based noncommutative Riemannian geometry on matrix algebras.
//!
//! * [`liealg`]: traceless bases, structure constants, Killing form.
//! * [`ring`], [`engine`]: frames of derivations and the connection calculus
//!   over real, matrix and lattice-field coefficients.
//! * [`action`]: the Einstein action for `M_n(R)` with centre-valued metrics.
//! * [`palatini`]: the `M_4(R)` model with algebra-valued block metrics.
//! * [`lattice`]: matrix-valued functions on a periodic torus grid.
//! * [`solver`]: Gauss–Newton search for critical points of the `M_4` action.

pub mod action;
pub mod engine;
pub mod error;
pub mod exec;
pub mod lattice;
pub mod liealg;
pub mod palatini;
pub mod ring;
pub mod sampling;
pub mod scalar;
pub mod solver;

pub use error::{GeomError, Result};
pub use exec::Exec;
