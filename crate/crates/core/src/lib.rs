//! Total-power minimization for cell-free massive MIMO downlinks.
//!
//! The crate jointly chooses which access points (APs) stay switched on and
//! designs their precoders so that every user meets an SINR target at the
//! lowest total power consumption. The binary on/off choice is handled by a
//! penalized convex-concave procedure whose convex subproblems are
//! second-order cone programs.
//!
//! Module map:
//! - [`chanmod`]: large-scale fading, spatial covariances, Rayleigh channel
//!   draws, pilot projection and MMSE estimation.
//! - [`probform`]: system parameters, SINR/rate/power formulas and assembly
//!   of the convex subproblem in conic form.
//! - [`socp`]: conic program container, solver and independent KKT checks.
//! - [`pccp`]: the penalized CCP outer loop, fixed-active-set baseline,
//!   rounding and the exhaustive small-instance oracle.
//! - [`bench`]: seeded Monte Carlo campaigns and aggregation.
//! - [`cli`]: configuration files, CSV output and the command front end.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod chanmod;
pub mod cli;
mod error;
pub mod par;
pub mod pccp;
pub mod probform;
pub mod socp;

pub use error::{Error, Result};

pub use num_complex::Complex64;

/// Column vector of complex baseband samples.
pub type CVector = nalgebra::DVector<Complex64>;
/// Dense complex matrix.
pub type CMatrix = nalgebra::DMatrix<Complex64>;

/// Converts a ratio in dB to linear scale.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Converts a linear ratio (or watts relative to 1 W) to dB.
pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}
