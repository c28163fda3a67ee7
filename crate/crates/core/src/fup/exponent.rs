use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::linalg::GridSpec;
use super::operators::{dft_submatrix_norm_with, measure_fup_norm_with, neighborhood_fup_norm};
use crate::cantor::{build_cantor, hausdorff_dim, neighborhood, CantorApprox, EnsembleSpec};
use crate::stats::ols;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Operator {
    Discrete,
    Measure,
    Neighborhood,
}

impl fmt::Display for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Operator::Discrete => "discrete",
            Operator::Measure => "measure",
            Operator::Neighborhood => "neighborhood",
        })
    }
}

impl FromStr for Operator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "discrete" => Ok(Operator::Discrete),
            "measure" => Ok(Operator::Measure),
            "neighborhood" => Ok(Operator::Neighborhood),
            _ => Err(Error::InvalidParameter(format!("unknown operator `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub h: f64,
    pub norm: f64,
    pub method: Operator,
    /// Construction depth used for this `h`.
    pub j: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormCurve {
    pub delta: f64,
    pub points: Vec<CurvePoint>,
}

impl NormCurve {
    /// CSV with columns `h, norm, method, j`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["h", "norm", "method", "j"])?;
        for p in &self.points {
            wr.write_record([p.h.to_string(), p.norm.to_string(), p.method.to_string(), p.j.to_string()])?;
        }
        wr.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }
}

/// Largest `J` with `M^{-J} >= h`, tolerant of rounding in `h = M^{-j}`.
pub fn depth_for_scale(base: u32, h: f64) -> Result<u32> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::InvalidParameter(format!("h must be positive, got {h}")));
    }
    let mut j = 0u32;
    while (base as f64).powi(j as i32 + 1) * h <= 1.0 + 1e-9 {
        j += 1;
    }
    if j == 0 {
        return Err(Error::InvalidParameter(format!(
            "h = {h} exceeds 1/M; no construction depth resolves it"
        )));
    }
    Ok(j)
}

pub fn norm_curve(spec: &EnsembleSpec, h_list: &[f64], method: Operator) -> Result<NormCurve> {
    norm_curve_with(spec, h_list, method, &GridSpec::default())
}

/// Norms along a decreasing list of `h`, all from one sample path: depth
/// `J(h)` reuses the spec's master seed, so shallower draws are prefixes of
/// deeper ones.
pub fn norm_curve_with(
    spec: &EnsembleSpec,
    h_list: &[f64],
    method: Operator,
    grid: &GridSpec,
) -> Result<NormCurve> {
    norm_curve_from(spec.base, spec.card, h_list, method, grid, |j| {
        build_cantor(&spec.with_depth(j))
    })
}

/// As [`norm_curve_with`], with the depth-`J` approximation supplied by `build`.
pub fn norm_curve_from<F>(
    base: u32,
    card: u32,
    h_list: &[f64],
    method: Operator,
    grid: &GridSpec,
    build: F,
) -> Result<NormCurve>
where
    F: Fn(u32) -> Result<CantorApprox>,
{
    if h_list.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidParameter("h values must be strictly decreasing".into()));
    }
    let mut points = Vec::with_capacity(h_list.len());
    for &h in h_list {
        let j = depth_for_scale(base, h)?;
        let approx = build(j)?;
        let norm = match method {
            Operator::Discrete => dft_submatrix_norm_with(&approx, grid)?,
            Operator::Measure => measure_fup_norm_with(&approx, h, grid)?,
            Operator::Neighborhood => neighborhood_fup_norm(&neighborhood(&approx, h)?, h, grid)?.norm,
        };
        points.push(CurvePoint { h, norm, method, j });
    }
    Ok(NormCurve {
        delta: hausdorff_dim(base, card),
        points,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentReport {
    pub delta: f64,
    pub epsilon: f64,
    pub beta_hat: f64,
    pub beta_vol: f64,
    pub beta_target: f64,
    pub residual_rms: f64,
}

impl ExponentReport {
    pub fn to_json(&self) -> Value {
        json!({
            "delta": self.delta,
            "epsilon": self.epsilon,
            "beta_hat": self.beta_hat,
            "beta_vol": self.beta_vol,
            "beta_target": self.beta_target,
            "residual_rms": self.residual_rms,
        })
    }
}

/// `max(1/2 - delta, 0)`.
pub fn volume_exponent(delta: f64) -> f64 {
    (0.5 - delta).max(0.0)
}

/// `1/2 - 3 delta / 4 - epsilon`.
pub fn target_exponent(delta: f64, epsilon: f64) -> f64 {
    0.5 - 0.75 * delta - epsilon
}

/// Slope of `-log norm` against `-log h`.
pub fn fit_exponent(curve: &NormCurve, epsilon: f64) -> Result<ExponentReport> {
    let usable: Vec<&CurvePoint> = curve.points.iter().filter(|p| p.norm > 0.0).collect();
    if usable.len() < 3 {
        return Err(Error::InsufficientData {
            needed: 3,
            got: usable.len(),
        });
    }
    let xs: Vec<f64> = usable.iter().map(|p| -p.h.ln()).collect();
    let ys: Vec<f64> = usable.iter().map(|p| -p.norm.ln()).collect();
    let fit = ols(&xs, &ys)?;
    Ok(ExponentReport {
        delta: curve.delta,
        epsilon,
        beta_hat: fit.slope,
        beta_vol: volume_exponent(curve.delta),
        beta_target: target_exponent(curve.delta, epsilon),
        residual_rms: fit.residual_rms,
    })
}

/// `log10` of the lower bound on `beta - beta_vol` for a `delta`-regular set
/// with constant `R`.
///
/// For `delta <= 1/2` this is `-40 / (delta (1 - delta)) log10(5 R)`. Above
/// 1/2 the bound is `exp(-exp(C (R / (delta (1 - delta)))^{C / (1 - delta)^2}))`
/// with an unspecified absolute constant `C`, so that branch is illustrative
/// only; it can overflow to `-inf`.
pub fn deterministic_exponent_log10(delta: f64, r: f64, c: f64) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidParameter(format!("delta must lie in (0, 1), got {delta}")));
    }
    if !(r >= 1.0) {
        return Err(Error::InvalidParameter(format!("R must be at least 1, got {r}")));
    }
    let spread = delta * (1.0 - delta);
    if delta <= 0.5 {
        return Ok(-40.0 / spread * (5.0 * r).log10());
    }
    if !(c > 0.0) {
        return Err(Error::InvalidParameter(format!("C must be positive, got {c}")));
    }
    let inner = c * (r / spread).powf(c / ((1.0 - delta) * (1.0 - delta)));
    Ok(-inner.exp() / std::f64::consts::LN_10)
}
