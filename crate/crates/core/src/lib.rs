//! Numerical laboratory for finite-time blow-up of the perturbed semilinear wave equation
//! `u_tt = Δu + |u|^{p-1}u + f(u) + g(u_t)` at the conformal-critical exponent `p = 1 + 4/(N-1)`.

// Guards are written as `!(x > 0.0)` on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod blowup;
pub mod covering;
pub mod error;
pub mod fields;
pub mod functionals;
pub mod initial;
pub mod params;
pub mod pipeline;
pub mod quadrature;
pub mod similarity;
pub mod solver;
pub mod verifier;

pub use error::{LabError, Result};
pub use fields::{Boundary, Geometry, Grid, RadialSnapshot, WState};
pub use params::ModelParams;
