//! Correct extensions of minimal operators through bounded finite-rank
//! perturbations of a fixed inverse, `L⁻¹ = L_N⁻¹ + K`.
//!
//! The crate evaluates the domain-equality and normality criteria as
//! numerical residuals and checks them against discretizations of two
//! concrete operators: `y'' + y'` on the unit interval ([`ode`]) and the
//! Cauchy–Riemann operator on the unit square ([`cauchy_riemann`]).

pub mod cauchy_riemann;
pub mod error;
pub mod expsum;
pub mod extension;
pub mod linops;
pub mod ode;
pub mod spec;
pub mod thresholds;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
