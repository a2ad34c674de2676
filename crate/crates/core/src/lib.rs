//! Exact computer algebra for quantum microformal morphisms.
//!
//! A morphism `M1 => M2` is given by a generating function `S_h(x, q)`, a
//! polynomial in the source coordinates and the target momenta with
//! coefficients in `Q(i)[[h]]`. It acts on oscillatory wave functions
//! `A e^{(i/h) b}` by a formal differential operator of infinite order
//! followed by a substitution, and in the limit `h -> 0` it reproduces the
//! nonlinear classical pullback of functions.
//!
//! Modules, bottom up:
//!
//! * [`exactring`]: Gaussian rationals, polynomials, small matrices.
//! * [`biseries`]: the `(l, h)` graded truncated ring with exp/log.
//! * [`genfun`]: generating functions and the classical pullback.
//! * [`quantum`]: wave functions, quantum pullback, composition, linear
//!   coordinate changes.
//! * [`verify`]: seeded oracle checks that pit independent computations
//!   against each other.

pub mod biseries;
pub mod error;
pub mod exactring;
pub mod genfun;
pub mod quantum;
pub mod verify;

pub use biseries::{BiSeries, Bigrade, Truncation};
pub use error::{Error, Result};
pub use exactring::{Context, GaussRat, Matrix, Monomial, Poly, Var};
pub use genfun::{classical_pullback, gateaux_derivative, ClassicalGenFun, Decomposition, GenFun};
pub use quantum::{
    compose, exponent_extract, linear_change, quantum_pullback, PulledBack, WaveFunction, WaveTerm,
};
pub use verify::{Check, Mutation, Sizes, Verdict};
