//! Numerical laboratory for thermo field dynamics of open quantum systems:
//! doubled-space operator algebra, master equations, quantum stochastic
//! calculus and the linear Langevin systems of the damped oscillator and the
//! quantum Kramers model.

// `!(x <= tol)` is used on purpose so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod config;
pub mod dynamics;
pub mod error;
pub mod generators;
pub mod heisenberg;
pub mod io;
pub mod ito;
pub mod linalg;
pub mod noise_space;
pub mod propagators;
pub mod scenarios;
pub mod sde;
pub mod thermal;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
