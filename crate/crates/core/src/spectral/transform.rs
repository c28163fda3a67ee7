use std::collections::BTreeMap;

use num_complex::Complex64;

use super::phase::{alphabet_average, f_eta, sinc_factor, INV_SQRT_TAU};
use crate::cantor::{Alphabet, CantorApprox};
use crate::{ComplexAmp, Error, Result};

/// `(1/A^j) * sum_{b in B_j} e^{-i xi b}`.
///
/// Uses the per-level product when every level shares one alphabet; otherwise
/// sums directly over all `A^j` points.
pub fn point_average(approx: &CantorApprox, xi: f64) -> ComplexAmp {
    match approx.shared_alphabets() {
        Some(levels) => product_average(approx.base(), &levels, xi),
        None => direct_average(approx, xi),
    }
}

fn product_average(base: u32, levels: &[&Alphabet], xi: f64) -> ComplexAmp {
    let mut scale = 1.0;
    let mut acc = Complex64::new(1.0, 0.0);
    for a in levels {
        scale /= base as f64;
        acc *= alphabet_average(a, xi * scale);
    }
    acc
}

/// Direct summation over the points of `B_j`.
pub fn direct_average(approx: &CantorApprox, xi: f64) -> ComplexAmp {
    let d = approx.denominator() as f64;
    let sum: Complex64 = approx
        .numerators()
        .iter()
        .map(|&n| Complex64::from_polar(1.0, -xi * (n as f64 / d)))
        .sum();
    sum / approx.len() as f64
}

/// Transform of the atomic measure `A^{-j} sum_b delta_b`.
pub fn atomic_fourier(approx: &CantorApprox, xi: f64) -> ComplexAmp {
    point_average(approx, xi) * INV_SQRT_TAU
}

/// Closed-form transform of the Cantor measure `nu_j` (uniform probability
/// on `C_j`).
pub fn fourier_nu(approx: &CantorApprox, xi: f64) -> ComplexAmp {
    sinc_factor(xi * approx.cell()) * point_average(approx, xi)
}

/// Transform of the indicator of `C_j`: `(A/M)^j` times [`fourier_nu`].
pub fn fourier_char(approx: &CantorApprox, xi: f64) -> ComplexAmp {
    fourier_nu(approx, xi) * volume_fraction(approx)
}

fn volume_fraction(approx: &CantorApprox) -> f64 {
    (approx.card() as f64 / approx.base() as f64).powi(approx.depth() as i32)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: ComplexAmp,
    /// Midpoint-rule error bound `|xi|^2 w^2 / (24 sqrt(2 pi))`, `w` the panel width.
    pub error_bound: f64,
}

/// Composite midpoint rule for `(2 pi)^{-1/2} int e^{-i x xi} rho_j(x) dx`,
/// with `panels / A^j` panels on every cell of `C_j`.
pub fn fourier_nu_quadrature(approx: &CantorApprox, xi: f64, panels: usize) -> Result<Quadrature> {
    let cells = approx.len();
    if panels < cells {
        return Err(Error::Precision(format!(
            "{panels} panels cannot cover {cells} cells"
        )));
    }
    let per_cell = panels / cells;
    let d = approx.denominator() as f64;
    let width = approx.cell() / per_cell as f64;
    let mut acc = Complex64::new(0.0, 0.0);
    for &n in approx.numerators() {
        let left = n as f64 / d;
        let mut cell_sum = Complex64::new(0.0, 0.0);
        for k in 0..per_cell {
            let x = left + (k as f64 + 0.5) * width;
            cell_sum += Complex64::from_polar(1.0, -x * xi);
        }
        acc += cell_sum;
    }
    let value = acc * (INV_SQRT_TAU / (cells * per_cell) as f64);
    Ok(Quadrature {
        value,
        error_bound: INV_SQRT_TAU * xi * xi * width * width / 24.0,
    })
}

/// Quadrature of the indicator transform; scales [`fourier_nu_quadrature`].
pub fn fourier_char_quadrature(approx: &CantorApprox, xi: f64, panels: usize) -> Result<Quadrature> {
    let q = fourier_nu_quadrature(approx, xi, panels)?;
    let f = volume_fraction(approx);
    Ok(Quadrature {
        value: q.value * f,
        error_bound: q.error_bound * f,
    })
}

/// Bracketed average in `G`:
/// `(1/A^{j-1}) sum_{b in B_{j-1}} e^{-i M^j eta b} F_eta(A(b))`, which has
/// period `2 pi` in `eta`.
pub fn fluctuation_average(
    parent: &CantorApprox,
    child_alphabets: &BTreeMap<u128, Alphabet>,
    eta: f64,
) -> Result<ComplexAmp> {
    let d = parent.denominator() as f64;
    let m = parent.base() as f64;
    let xi = eta * m * d;
    let mut acc = Complex64::new(0.0, 0.0);
    for &n in parent.numerators() {
        let a = child_alphabets.get(&n).ok_or_else(|| {
            Error::InvalidArgument(format!("no child alphabet for parent numerator {n}"))
        })?;
        acc += Complex64::from_polar(1.0, -xi * (n as f64 / d)) * f_eta(a, eta);
    }
    Ok(acc / parent.len() as f64)
}

/// Consecutive-level difference `G(eta)`, satisfying
/// `F nu_j(xi) - F nu_{j-1}(xi) = G(xi / M^j)`.
pub fn g_diff(
    parent: &CantorApprox,
    child_alphabets: &BTreeMap<u128, Alphabet>,
    eta: f64,
) -> Result<ComplexAmp> {
    Ok(sinc_factor(eta) * fluctuation_average(parent, child_alphabets, eta)?)
}
