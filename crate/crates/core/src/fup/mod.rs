//! Operator norms for the discrete, measure and neighborhood forms of the
//! fractal uncertainty principle, and exponent extraction from `h` sweeps.

mod exponent;
mod linalg;
mod operators;

pub use exponent::{
    depth_for_scale, deterministic_exponent_log10, fit_exponent, norm_curve, norm_curve_from, norm_curve_with,
    target_exponent, volume_exponent, CurvePoint, ExponentReport, NormCurve, Operator,
};
pub use linalg::{
    power_norm, spectral_norm, GridSpec, Solver, POWER_MAX_ITERATIONS, POWER_TOLERANCE,
};
pub use operators::{
    dft_matrix, dft_submatrix_norm, dft_submatrix_norm_with, measure_fup_norm,
    measure_fup_norm_with, measure_matrix, neighborhood_fup_norm, schur_upper_bound,
    submultiplicativity_check, submultiplicativity_for, NeighborhoodNorm,
};
