use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::seed::{self, tag};
use crate::{Error, Result};

pub const POWER_TOLERANCE: f64 = 1e-10;
pub const POWER_MAX_ITERATIONS: usize = 10_000;

/// Dimension policy shared by every norm computation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridSpec {
    /// Nystrom grid points per semiclassical wavelength `h`.
    pub points_per_wavelength: usize,
    pub max_dimension: usize,
    /// Largest dimension handled by a full SVD; power iteration above it.
    pub svd_threshold: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            points_per_wavelength: 8,
            max_dimension: 4096,
            svd_threshold: 1024,
        }
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if self.points_per_wavelength < 4 {
            return Err(Error::InvalidParameter(format!(
                "points_per_wavelength must be at least 4, got {}",
                self.points_per_wavelength
            )));
        }
        if self.max_dimension == 0 {
            return Err(Error::InvalidParameter("max_dimension must be positive".into()));
        }
        Ok(())
    }

    pub fn check_dimension(&self, dim: usize) -> Result<()> {
        if dim > self.max_dimension {
            return Err(Error::resource("max_dimension", dim, self.max_dimension));
        }
        Ok(())
    }

    pub fn solver_for(&self, dim: usize) -> Solver {
        if dim <= self.svd_threshold {
            Solver::Svd
        } else {
            Solver::Power
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Solver {
    Svd,
    Power,
}

/// Largest singular value.
pub fn spectral_norm(k: &DMatrix<Complex64>, solver: Solver) -> Result<f64> {
    if k.is_empty() {
        return Ok(0.0);
    }
    match solver {
        Solver::Svd => Ok(k.clone().singular_values().max()),
        Solver::Power => power_norm(k),
    }
}

/// Krylov steps per restart.
const KRYLOV_BLOCK: usize = 96;

/// Power iteration on `K* K` with Lanczos acceleration: each restart builds a
/// fully reorthogonalized Krylov basis from the current vector and restarts
/// from the top Ritz vector. Stops once the Ritz residual is at most
/// `1e-10 lambda` or the Krylov space is exhausted. The start vector is drawn
/// from a fixed stream keyed by the shape.
pub fn power_norm(k: &DMatrix<Complex64>) -> Result<f64> {
    let n = k.ncols();
    let mut rng = seed::substream(k.nrows() as u64, tag::POWER, n as u64);
    let mut v = DVector::from_fn(n, |_, _| {
        Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    });
    let block = KRYLOV_BLOCK.min(n);
    let mut steps = 0;
    while steps < POWER_MAX_ITERATIONS {
        v /= Complex64::from(v.norm());
        let mut basis: Vec<DVector<Complex64>> = vec![v.clone()];
        let (mut alpha, mut beta) = (Vec::with_capacity(block), Vec::with_capacity(block));
        let mut exhausted = false;
        while alpha.len() < block && steps < POWER_MAX_ITERATIONS {
            let q = basis.last().expect("basis is non-empty");
            let mut w = k.ad_mul(&(k * q));
            steps += 1;
            alpha.push(q.dotc(&w).re);
            for _ in 0..2 {
                for b in &basis {
                    let c = b.dotc(&w);
                    w -= b * c;
                }
            }
            let b = w.norm();
            beta.push(b);
            let scale = alpha.iter().chain(&beta).fold(0.0f64, |m, x| m.max(x.abs()));
            if b <= 1e-14 * scale {
                exhausted = true;
                break;
            }
            if alpha.len() < block {
                basis.push(w / Complex64::from(b));
            }
        }
        let m = alpha.len();
        let t = DMatrix::from_fn(m, m, |i, j| {
            if i == j {
                alpha[i]
            } else if i + 1 == j {
                beta[i]
            } else if j + 1 == i {
                beta[j]
            } else {
                0.0
            }
        });
        let eig = t.symmetric_eigen();
        let top = eig.eigenvalues.imax();
        let theta = eig.eigenvalues[top];
        if theta <= 0.0 {
            return Ok(0.0);
        }
        let y = eig.eigenvectors.column(top);
        if exhausted || beta[m - 1] * y[m - 1].abs() <= POWER_TOLERANCE * theta {
            return Ok(theta.sqrt());
        }
        v = basis.iter().zip(y.iter()).fold(DVector::zeros(n), |acc, (b, &c)| acc + b * Complex64::from(c));
    }
    Err(Error::Numerical(format!(
        "power iteration did not converge in {POWER_MAX_ITERATIONS} steps (dimension {n})"
    )))
}
