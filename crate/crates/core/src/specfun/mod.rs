//! Special functions used across the crate. Pure and deterministic.

pub mod airy;
pub mod bessel;
pub mod gamma;
pub mod kummer;
pub mod rayleigh;

pub use airy::{airy_ai, airy_bi, airy_tail_bounds, ln_airy_ai};
pub use bessel::{
    bessel_i, bessel_i_ratio, bessel_i_scaled, bessel_j, bessel_j_zeros, mcmahon_zero, BesselZeroTable,
};
pub use gamma::{beta_ln, gamma, gamma_ln, upper_incomplete_gamma, upper_regularized_gamma};
pub use kummer::kummer_u;
pub use rayleigh::{rayleigh_sigma, RayleighTable};
