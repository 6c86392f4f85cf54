//! Desk-scale laboratory for three-term progressions in the primes.
//!
//! The pipeline sieves the primes, restricts them to one residue class modulo
//! the primorial `W` (the W-trick), rescales the result into a function `a` on
//! Z/PZ, smooths it over a Bohr set built from its large spectrum, and
//! compares the progression counts of `a` and of the smoothed `h = a * sigma`
//! against the sieve and density bounds that control them.
//!
//! The Fourier layer is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix the double-precision types the pipeline uses.

// Range checks are written as !(x > 0.0) so that NaN fails them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bohr;
pub mod bounds;
pub mod error;
pub mod formats;
pub mod pipeline;
pub mod prime_engine;
pub mod scalar;
pub mod sieve_bounds;
pub mod threeap;
pub mod wtrick;
pub mod zp_fourier;

pub use error::{LabError, Result};
pub use scalar::Scalar;

/// Double-precision function on Z/PZ.
pub type Function64 = zp_fourier::CyclicFunction<f64>;
/// Single-precision function on Z/PZ.
pub type Function32 = zp_fourier::CyclicFunction<f32>;
pub type Spectrum64 = zp_fourier::Spectrum<f64>;
pub type Spectrum32 = zp_fourier::Spectrum<f32>;
/// Exact Bohr radius.
pub type Radius = num_rational::Ratio<u64>;
