//! Exact Wiener-chaos calculus for polynomials in independent Gaussians,
//! directional influences, decompositions along strongest directions,
//! multilinear polynomials over general orthonormal ensembles, and
//! reproducible Monte Carlo diagnostics.

pub mod cli;
pub mod decompose;
pub mod ensembles;
pub mod error;
pub mod format;
pub mod influence;
pub mod linalg;
pub mod malliavin;
pub mod montecarlo;
pub mod multi_index;
pub mod poly;
pub mod scalar;

pub use error::{ChaosError, Result};
pub use multi_index::{MultiIndex, VarId};
pub use poly::{compose_hermite, ChaosPoly};
pub use scalar::Rational;
