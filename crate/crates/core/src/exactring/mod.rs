//! Exact coefficient field and multivariate polynomials.
//!
//! Functions on the manifolds are polynomials with Gaussian-rational
//! coefficients, so every identity in the engine can be checked bit-exactly.

mod context;
mod gauss;
mod matrix;
mod poly;

pub use context::{Context, Var};
pub use gauss::GaussRat;
pub use matrix::Matrix;
pub use poly::{Monomial, Poly};

pub(crate) use context::same_context;
pub(crate) use poly::join_signed;
