//! Laplace exponents, jump measures and Monte Carlo checks for Lévy
//! subordinators arising as scaling limits of integrated reflected
//! diffusions (Wright–Fisher, Feller/CIR, reflected Brownian motion), plus the
//! binned spiking models they drive.

// `!(x > 0.0)` is the intended NaN-rejecting form throughout.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// Published coefficients are kept digit for digit.
#![allow(clippy::excessive_precision)]

pub mod analytic;
pub mod diffusion;
pub mod error;
pub mod quad;
pub mod rng;
pub mod sampling;
pub mod scalar;
pub mod specfun;
pub mod spiking;
pub mod stats;
pub mod subordinator;
pub mod verify;
pub mod wf_exponent;

pub use error::{Error, Result};
pub use scalar::{CompensatedSum, Real};
