//! Closed-form Fourier transforms of the Cantor measures, the alphabet
//! fluctuation function, and decay-exponent fitting.

mod decay;
mod phase;
mod transform;

pub use decay::{
    dyadic_windows, fit_decay, sample_decay, sample_envelope, write_decay_csv, DecayFit,
    DecaySample, WindowMax,
};
pub use phase::{
    alphabet_average, f_eta, geometric_phase_sum, reduce_angle, sinc_factor, INV_SQRT_TAU,
};
pub use transform::{
    atomic_fourier, direct_average, fluctuation_average, fourier_char, fourier_char_quadrature,
    fourier_nu, fourier_nu_quadrature, g_diff, point_average, Quadrature,
};
