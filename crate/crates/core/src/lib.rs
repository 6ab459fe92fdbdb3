//! Norms of exponentials `e^{iλφ}` in the spaces `A_p(T^m)` of functions on the
//! m-dimensional torus whose Fourier coefficients are `p`-summable.
//!
//! The crate is organised bottom-up:
//!
//! * [`torus_spectra`]: uniform grids, the normalised discrete Fourier transform and
//!   compensated `ℓ^p` sums.
//! * [`phases`]: the catalog of phase functions together with gradient-modulus fits and
//!   gradient-range measures.
//! * [`apnorm`]: `A_p` norms with grid control, dyadic shell profiles and the
//!   Bernstein-type upper bounds.
//! * [`lower_cert`]: triangle windows, concentration checks and assembled lower-bound
//!   certificates.
//! * [`growth`]: λ sweeps with caching, log-log exponent fits, theoretical exponents and
//!   the slow-growth reference scales.
//! * [`oracles`]: slow independent references (direct Fourier sums, Bessel coefficients).
//! * [`acceptance`]: the end-to-end acceptance criteria, shared by the test suite and the
//!   `verify` command.

// `!(x > 0.0)` is the NaN-rejecting form used throughout
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod acceptance;
pub mod apnorm;
mod error;
pub mod growth;
pub mod lower_cert;
pub mod oracles;
pub mod phases;
pub mod summation;
pub mod torus_spectra;

pub use error::{Error, Result};
pub use rustfft::num_complex::Complex64;

/// Crate version echoed into output metadata.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
