//! Empirical delta-regularity audit.
//!
//! The witness measure puts weight `A^{-j}` on each depth-`j` point, which
//! stands in for the Cantor measure on scales at least `M^{-j}`. Only finitely
//! many intervals can be audited, so the reported constant is a lower bound
//! for the true one.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::approx::CantorApprox;
use super::interval::Interval;
use crate::{Error, Result};

/// One audited interval `[center - length/2, center + length/2]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Audit {
    pub center: f64,
    pub length: f64,
}

impl Audit {
    pub fn interval(&self) -> Interval {
        Interval::new(self.center - self.length / 2.0, self.center + self.length / 2.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegularityReport {
    pub delta: f64,
    /// Smallest `R` with `R^{-1}|I|^delta <= nu(I) <= R|I|^delta` on every audit.
    pub r_observed: f64,
    pub scale_min: f64,
    pub scale_max: f64,
    pub worst_interval: Interval,
    pub worst_ratio: f64,
    pub audited: usize,
    /// Set when `scale_min < M^{-j}`: the finite depth cannot resolve those scales.
    pub precision_warning: bool,
}

/// Intervals centered at random points of `B_j` with log-uniform lengths.
pub fn audit_intervals<R: Rng + ?Sized>(
    approx: &CantorApprox,
    scale_min: f64,
    scale_max: f64,
    samples: usize,
    rng: &mut R,
) -> Result<Vec<Audit>> {
    check_scales(scale_min, scale_max)?;
    let points = approx.points();
    let (lmin, lmax) = (scale_min.ln(), scale_max.ln());
    Ok((0..samples)
        .map(|_| {
            let center = points[rng.gen_range(0..points.len())];
            let length = if lmax > lmin {
                rng.gen_range(lmin..=lmax).exp()
            } else {
                scale_min
            };
            Audit { center, length }
        })
        .collect())
}

fn check_scales(scale_min: f64, scale_max: f64) -> Result<()> {
    if !(scale_min > 0.0 && scale_min <= scale_max && scale_max <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "scales must satisfy 0 < min <= max <= 1, got [{scale_min}, {scale_max}]"
        )));
    }
    Ok(())
}

/// Regularity constant over an explicit list of audits.
pub fn regularity_over(
    approx: &CantorApprox,
    delta: f64,
    scale_min: f64,
    scale_max: f64,
    audits: &[Audit],
) -> RegularityReport {
    let points = approx.points();
    let weight = 1.0 / points.len() as f64;
    let mut r_observed = 1.0;
    let mut worst = (Interval::new(0.0, 0.0), 1.0);
    for audit in audits {
        let iv = audit.interval();
        let count = points.partition_point(|&p| p <= iv.hi) - points.partition_point(|&p| p < iv.lo);
        let ratio = count as f64 * weight / audit.length.powf(delta);
        let r = ratio.max(1.0 / ratio);
        if r > r_observed {
            r_observed = r;
            worst = (iv, ratio);
        }
    }
    RegularityReport {
        delta,
        r_observed,
        scale_min,
        scale_max,
        worst_interval: worst.0,
        worst_ratio: worst.1,
        audited: audits.len(),
        precision_warning: scale_min < approx.cell() * (1.0 - 1e-12),
    }
}

pub fn verify_regularity<R: Rng + ?Sized>(
    approx: &CantorApprox,
    delta: f64,
    scale_min: f64,
    scale_max: f64,
    samples: usize,
    rng: &mut R,
) -> Result<RegularityReport> {
    let audits = audit_intervals(approx, scale_min, scale_max, samples, rng)?;
    Ok(regularity_over(approx, delta, scale_min, scale_max, &audits))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cantor::{build_cantor, hausdorff_dim, Alphabet, EnsembleKind, EnsembleSpec};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn middle_third(depth: u32) -> CantorApprox {
        let a = Alphabet::new(3, vec![0, 2]).unwrap();
        CantorApprox::from_level_alphabets(EnsembleKind::I, &vec![a; depth as usize]).unwrap()
    }

    #[test]
    fn middle_third_constant_is_four_to_the_delta() {
        let j = 7;
        let approx = middle_third(j);
        let delta = hausdorff_dim(3, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let report =
            verify_regularity(&approx, delta, 3f64.powi(-(j as i32)), 1.0, 20_000, &mut rng).unwrap();
        // The supremum over all centered intervals is 4^delta: centered at 0 with
        // length just under 4*3^-k the interval holds mass 2^-k.
        let sup = 4f64.powf(delta);
        assert!(report.r_observed <= sup + 1e-12, "{}", report.r_observed);
        assert!(report.r_observed > 2.0);
        assert!(!report.precision_warning);

        let k = 3;
        let worst = Audit {
            center: 0.0,
            length: 4.0 * 3f64.powi(-k) * (1.0 - 1e-9),
        };
        let r = regularity_over(&approx, delta, 1e-3, 1.0, &[worst]);
        assert!((r.r_observed - sup).abs() < 1e-6);
    }

    #[test]
    fn full_alphabet_lebesgue() {
        let approx =
            CantorApprox::from_level_alphabets(EnsembleKind::I, &[Alphabet::full(2).unwrap()]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let report = verify_regularity(&approx, 1.0, 0.5, 1.0, 1000, &mut rng).unwrap();
        // one atom of mass 1/2 in every interval shorter than 1: ratio 1/(2L)
        assert!(report.r_observed >= 1.0 && report.r_observed < 2.0);
        let exact = regularity_over(&approx, 1.0, 0.5, 1.0, &[Audit { center: 0.0, length: 0.5 }]);
        assert_eq!(exact.r_observed, 1.0);
    }

    #[test]
    fn random_audit_matches_brute_force() {
        let approx = build_cantor(&EnsembleSpec::new(EnsembleKind::III, 5, 2, 6, 77)).unwrap();
        let delta = hausdorff_dim(5, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let smin = 5f64.powi(-6);
        let audits = audit_intervals(&approx, smin, 1.0, 10_000, &mut rng).unwrap();
        let report = regularity_over(&approx, delta, smin, 1.0, &audits);
        assert!(report.r_observed.is_finite());

        let pts = approx.points();
        let brute = audits
            .iter()
            .map(|a| {
                let iv = a.interval();
                let m = pts.iter().filter(|&&p| p >= iv.lo && p <= iv.hi).count() as f64
                    / pts.len() as f64;
                let ratio = m / a.length.powf(delta);
                ratio.max(1.0 / ratio)
            })
            .fold(1.0f64, f64::max);
        assert_eq!(report.r_observed, brute);
    }

    #[test]
    fn scale_checks() {
        let approx = middle_third(3);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(verify_regularity(&approx, 0.6, 0.0, 1.0, 10, &mut rng).is_err());
        assert!(verify_regularity(&approx, 0.6, 0.5, 0.4, 10, &mut rng).is_err());
        let r = verify_regularity(&approx, 0.6, 1e-3, 1.0, 10, &mut rng).unwrap();
        assert!(r.precision_warning);
    }
}
