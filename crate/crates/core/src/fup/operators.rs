use std::f64::consts::TAU;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::linalg::{spectral_norm, GridSpec};
use crate::cantor::{build_cantor, Alphabet, CantorApprox, EnsembleKind, EnsembleSpec, IntervalSet};
use crate::spectral::point_average;
use crate::{Error, Result};

fn add_mod(a: u128, b: u128, n: u128) -> u128 {
    let (s, overflow) = a.overflowing_add(b);
    if overflow || s >= n {
        s.wrapping_sub(n)
    } else {
        s
    }
}

/// `a * b mod n` without overflow.
pub(crate) fn mul_mod(a: u128, b: u128, n: u128) -> u128 {
    if let Some(p) = a.checked_mul(b) {
        return p % n;
    }
    let (mut a, mut b, mut acc) = (a % n, b, 0u128);
    while b > 0 {
        if b & 1 == 1 {
            acc = add_mod(acc, a, n);
        }
        a = add_mod(a, a, n);
        b >>= 1;
    }
    acc
}

fn check_h(h: f64) -> Result<()> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::InvalidParameter(format!("h must be positive, got {h}")));
    }
    Ok(())
}

/// `K_{p,q} = N^{-1/2} e^{-2 pi i n_p n_q / N}` on the numerators of `B_j`.
/// Phases are reduced modulo `N` in exact integer arithmetic.
pub fn dft_matrix(approx: &CantorApprox) -> DMatrix<Complex64> {
    let nums = approx.numerators();
    let n = approx.denominator();
    let scale = 1.0 / (n as f64).sqrt();
    DMatrix::from_fn(nums.len(), nums.len(), |p, q| {
        let r = mul_mod(nums[p], nums[q], n);
        Complex64::from_polar(scale, -TAU * (r as f64 / n as f64))
    })
}

/// `||1_{B_j} F_N 1_{B_j}||` on `l^2(Z_N)`, `N = M^j`.
pub fn dft_submatrix_norm(approx: &CantorApprox) -> Result<f64> {
    dft_submatrix_norm_with(approx, &GridSpec::default())
}

pub fn dft_submatrix_norm_with(approx: &CantorApprox, grid: &GridSpec) -> Result<f64> {
    grid.check_dimension(approx.len())?;
    spectral_norm(&dft_matrix(approx), grid.solver_for(approx.len()))
}

/// Depth-`j1 + j2` norm against the product of the depth-`j1` and depth-`j2`
/// norms, all with the single alphabet of a kind I draw.
pub fn submultiplicativity_check(spec: &EnsembleSpec, j1: u32, j2: u32) -> Result<(f64, f64)> {
    if spec.kind != EnsembleKind::I {
        return Err(Error::InvalidArgument(format!(
            "submultiplicativity holds for kind I ensembles, got kind {}",
            spec.kind
        )));
    }
    if j1 == 0 || j2 == 0 {
        return Err(Error::InvalidParameter("depths must be at least 1".into()));
    }
    let full = build_cantor(&spec.with_depth(j1 + j2))?;
    let alphabet = full.shared_alphabets().expect("kind I levels are shared")[0].clone();
    submultiplicativity_for(&alphabet, j1, j2)
}

/// [`submultiplicativity_check`] for a given alphabet.
pub fn submultiplicativity_for(alphabet: &Alphabet, j1: u32, j2: u32) -> Result<(f64, f64)> {
    if j1 == 0 || j2 == 0 {
        return Err(Error::InvalidParameter("depths must be at least 1".into()));
    }
    let at = |j: u32| CantorApprox::from_level_alphabets(EnsembleKind::I, &vec![alphabet.clone(); j as usize]);
    let lhs = dft_submatrix_norm(&at(j1 + j2)?)?;
    let rhs = dft_submatrix_norm(&at(j1)?)? * dft_submatrix_norm(&at(j2)?)?;
    Ok((lhs, rhs))
}

/// `K_{p,q} = e^{-i b_p b_q / h}` on the points of `B_j`.
pub fn measure_matrix(approx: &CantorApprox, h: f64) -> DMatrix<Complex64> {
    let b = approx.points();
    DMatrix::from_fn(b.len(), b.len(), |p, q| Complex64::from_polar(1.0, -b[p] * b[q] / h))
}

/// Norm of `(Tu)(xi) = sum_b w e^{-i b xi / h} u(b)` on `L^2` of the atomic
/// measure with weights `w = A^{-j}`, i.e. `A^{-j} sigma_max(K)`.
pub fn measure_fup_norm(approx: &CantorApprox, h: f64) -> Result<f64> {
    measure_fup_norm_with(approx, h, &GridSpec::default())
}

pub fn measure_fup_norm_with(approx: &CantorApprox, h: f64, grid: &GridSpec) -> Result<f64> {
    check_h(h)?;
    grid.check_dimension(approx.len())?;
    let sigma = spectral_norm(&measure_matrix(approx, h), grid.solver_for(approx.len()))?;
    Ok(sigma / approx.len() as f64)
}

/// Schur-test majorant `max_xi sum_b w |K(xi, b)|` for `T* T`, with
/// `|K(xi, b)| = |sum_x w e^{i (xi - b) x / h}|`.
///
/// The maximum runs over every atom and over `xi_samples` stratified
/// midpoints of the support's bounding interval. Maximizing over the atoms
/// alone already makes the result dominate the squared norm.
pub fn schur_upper_bound(approx: &CantorApprox, h: f64, xi_samples: usize) -> Result<f64> {
    check_h(h)?;
    GridSpec::default().check_dimension(approx.len())?;
    let atoms = approx.points();
    let (lo, hi) = (atoms[0], atoms[atoms.len() - 1]);
    let strata = (0..xi_samples).map(|k| lo + (k as f64 + 0.5) * (hi - lo) / xi_samples as f64);
    let xis: Vec<f64> = atoms.iter().copied().chain(strata).collect();
    let w = 1.0 / atoms.len() as f64;
    let row = |xi: f64| -> f64 {
        atoms
            .iter()
            .map(|&b| point_average(approx, (b - xi) / h).norm())
            .sum::<f64>()
            * w
    };
    Ok(xis.par_iter().map(|&xi| row(xi)).reduce(|| 0.0, f64::max))
}

/// Nystrom estimate of `||1_X F_h 1_X||` with its grid-refinement check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NeighborhoodNorm {
    pub norm: f64,
    pub points: usize,
    /// Norm at twice the points per wavelength; absent when that grid exceeds
    /// `max_dimension`.
    pub refined_norm: Option<f64>,
    pub refinement_delta: Option<f64>,
    /// Refinement moved the norm by more than 5%.
    pub precision_warning: bool,
}

/// Lattice `x_k = (k + 1/2) step` with `2 pi h / step^2` an integer `P`, so
/// the kernel on any `P` consecutive nodes is a unitary DFT and every
/// restriction has norm at most 1.
fn lattice_step(h: f64, ppw: usize) -> f64 {
    let target = h / ppw as f64;
    let period = (TAU * h / (target * target)).ceil();
    (TAU * h / period).sqrt()
}

fn lattice_nodes(cset: &IntervalSet, step: f64) -> Vec<f64> {
    let mut nodes = Vec::new();
    for iv in cset.intervals() {
        let first = (iv.lo / step - 0.5).ceil() as i64;
        let last = (iv.hi / step - 0.5).floor() as i64;
        nodes.extend((first..=last).map(|k| (k as f64 + 0.5) * step));
    }
    nodes
}

fn lattice_norm(cset: &IntervalSet, h: f64, ppw: usize, grid: &GridSpec) -> Result<(f64, usize)> {
    let step = lattice_step(h, ppw);
    let x = lattice_nodes(cset, step);
    grid.check_dimension(x.len())?;
    let scale = step / (TAU * h).sqrt();
    let k = DMatrix::from_fn(x.len(), x.len(), |p, q| Complex64::from_polar(scale, -x[p] * x[q] / h));
    Ok((spectral_norm(&k, grid.solver_for(x.len()))?, x.len()))
}

pub fn neighborhood_fup_norm(cset: &IntervalSet, h: f64, grid: &GridSpec) -> Result<NeighborhoodNorm> {
    check_h(h)?;
    grid.validate()?;
    if cset.intervals().iter().any(|iv| !iv.lo.is_finite() || !iv.hi.is_finite()) {
        return Err(Error::InvalidArgument("interval set must be bounded".into()));
    }
    let (norm, points) = lattice_norm(cset, h, grid.points_per_wavelength, grid)?;
    let refined = match lattice_norm(cset, h, 2 * grid.points_per_wavelength, grid) {
        Ok((n, _)) => Some(n),
        Err(Error::Resource { .. }) => None,
        Err(e) => return Err(e),
    };
    let delta = refined.map(|r| (r - norm).abs());
    Ok(NeighborhoodNorm {
        norm,
        points,
        refined_norm: refined,
        refinement_delta: delta,
        precision_warning: delta.is_some_and(|d| d > 0.05 * norm),
    })
}
