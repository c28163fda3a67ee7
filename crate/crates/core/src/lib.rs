//! Random Cantor sets and measures, their Fourier transforms, and numerical
//! probes of the fractal uncertainty principle.
//!
//! The crate is organised bottom-up:
//!
//! * [`cantor`] builds the three random ensembles exactly (integer numerators
//!   over `M^j`), along with interval geometry and regularity audits.
//! * [`spectral`] evaluates Fourier transforms of the Cantor measures in
//!   closed form and fits decay exponents.
//! * [`fup`] estimates operator norms for the discrete, measure and
//!   neighborhood formulations and extracts exponents.
//! * [`concentration`] checks the tail, variance and Bernstein-type bounds for
//!   the alphabet fluctuation function by enumeration and Monte Carlo.
//! * [`harness`] drives campaigns and writes CSV/JSON reports.

pub mod cantor;
pub mod concentration;
pub mod error;
pub mod fup;
pub mod harness;
pub mod seed;
pub mod spectral;
pub mod stats;

pub use error::{Error, Result};

/// Complex amplitude used for every transform value in the crate.
pub type ComplexAmp = num_complex::Complex64;
