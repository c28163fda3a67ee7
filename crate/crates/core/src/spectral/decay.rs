use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::transform::fourier_nu;
use crate::cantor::CantorApprox;
use crate::stats::ols;
use crate::{Error, Result};

const GOLDEN_STEPS: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecaySample {
    pub xi: f64,
    pub amp: f64,
    pub is_window_max: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowMax {
    pub xi: f64,
    pub amp: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    /// `s` in `amp ~ xi^{-s}`.
    pub exponent: f64,
    pub intercept: f64,
    pub residual_rms: f64,
    pub windows: Vec<WindowMax>,
}

impl DecayFit {
    pub fn to_json(&self) -> Value {
        json!({
            "exponent": self.exponent,
            "intercept": self.intercept,
            "residual_rms": self.residual_rms,
            "windows": self.windows.iter().map(|w| json!({"xi": w.xi, "amp": w.amp})).collect::<Vec<_>>(),
        })
    }
}

/// Splits `[xi_min, xi_max]` into windows `[xi_min 2^k, xi_min 2^{k+1})`.
/// A trailing remainder narrower than a factor `sqrt 2` joins the previous window.
pub fn dyadic_windows(xi_min: f64, xi_max: f64) -> Result<Vec<(f64, f64)>> {
    if !(xi_min > 0.0 && xi_min < xi_max && xi_max.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "frequency range must satisfy 0 < min < max, got [{xi_min}, {xi_max}]"
        )));
    }
    let mut out: Vec<(f64, f64)> = Vec::new();
    let mut lo = xi_min;
    while lo < xi_max {
        let hi = (2.0 * lo).min(xi_max);
        match out.last_mut() {
            Some(last) if hi / lo < std::f64::consts::SQRT_2 => last.1 = hi,
            _ => out.push((lo, hi)),
        }
        lo = hi;
    }
    Ok(out)
}

/// Samples `|F nu_j|` on dyadic windows; see [`sample_envelope`].
pub fn sample_decay<R: Rng + ?Sized>(
    approx: &CantorApprox,
    xi_min: f64,
    xi_max: f64,
    per_window: usize,
    rng: &mut R,
) -> Result<Vec<DecaySample>> {
    sample_envelope(|xi| fourier_nu(approx, xi).norm(), xi_min, xi_max, per_window, rng)
}

/// Draws `per_window` log-uniform frequencies per dyadic window, then refines
/// the best one by golden-section search on a neighbourhood one sample spacing
/// wide. Exactly one sample per window carries `is_window_max`.
pub fn sample_envelope<F, R>(
    amp: F,
    xi_min: f64,
    xi_max: f64,
    per_window: usize,
    rng: &mut R,
) -> Result<Vec<DecaySample>>
where
    F: Fn(f64) -> f64,
    R: Rng + ?Sized,
{
    if per_window == 0 {
        return Err(Error::InvalidParameter("per_window must be at least 1".into()));
    }
    let mut out = Vec::new();
    for (lo, hi) in dyadic_windows(xi_min, xi_max)? {
        let (llo, lhi) = (lo.ln(), hi.ln());
        let mut window: Vec<DecaySample> = (0..per_window)
            .map(|_| {
                let xi = rng.gen_range(llo..lhi).exp();
                DecaySample {
                    xi,
                    amp: amp(xi),
                    is_window_max: false,
                }
            })
            .collect();
        let best = window
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.amp.total_cmp(&b.1.amp))
            .map(|(i, _)| i)
            .unwrap();
        let spacing = (hi - lo) / per_window as f64;
        let centre = window[best].xi;
        let refined = golden_max(&amp, (centre - spacing).max(lo), (centre + spacing).min(hi));
        if refined.amp > window[best].amp {
            window.push(DecaySample {
                xi: refined.xi,
                amp: refined.amp,
                is_window_max: true,
            });
        } else {
            window[best].is_window_max = true;
        }
        window.sort_by(|a, b| a.xi.total_cmp(&b.xi));
        out.extend(window);
    }
    Ok(out)
}

fn golden_max<F: Fn(f64) -> f64>(f: &F, mut a: f64, mut b: f64) -> WindowMax {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..GOLDEN_STEPS {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    if fc > fd {
        WindowMax { xi: c, amp: fc }
    } else {
        WindowMax { xi: d, amp: fd }
    }
}

/// Least squares of `log(max amp)` against `-log xi` over the window maxima.
pub fn fit_decay(samples: &[DecaySample]) -> Result<DecayFit> {
    let windows: Vec<WindowMax> = samples
        .iter()
        .filter(|s| s.is_window_max && s.amp > 0.0 && s.xi > 0.0)
        .map(|s| WindowMax { xi: s.xi, amp: s.amp })
        .collect();
    if windows.len() < 3 {
        return Err(Error::InsufficientData {
            needed: 3,
            got: windows.len(),
        });
    }
    let xs: Vec<f64> = windows.iter().map(|w| -w.xi.ln()).collect();
    let ys: Vec<f64> = windows.iter().map(|w| w.amp.ln()).collect();
    let fit = ols(&xs, &ys)?;
    Ok(DecayFit {
        exponent: fit.slope,
        intercept: fit.intercept,
        residual_rms: fit.residual_rms,
        windows,
    })
}

/// CSV with columns `xi, amp, is_window_max`.
pub fn write_decay_csv<W: Write>(samples: &[DecaySample], w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["xi", "amp", "is_window_max"])?;
    for s in samples {
        wr.write_record([s.xi.to_string(), s.amp.to_string(), s.is_window_max.to_string()])?;
    }
    wr.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cantor::{Alphabet, EnsembleKind};
    use crate::spectral::sinc_factor;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn synthetic(f: impl Fn(f64) -> f64) -> Vec<DecaySample> {
        (0..8)
            .map(|k| {
                let xi = 100.0 * 2f64.powi(k);
                DecaySample {
                    xi,
                    amp: f(xi),
                    is_window_max: true,
                }
            })
            .collect()
    }

    #[test]
    fn windows() {
        assert_eq!(dyadic_windows(50.0, 100.0).unwrap(), vec![(50.0, 100.0)]);
        let w = dyadic_windows(1e2, 1e5).unwrap();
        assert_eq!(w.first().unwrap().0, 1e2);
        assert_eq!(w.last().unwrap().1, 1e5);
        assert!(w.windows(2).all(|p| p[0].1 == p[1].0));
        assert!(dyadic_windows(10.0, 10.0).is_err());
        assert!(dyadic_windows(0.0, 10.0).is_err());
    }

    #[test]
    fn exact_power_laws() {
        let fit = fit_decay(&synthetic(|x| x.powf(-0.3))).unwrap();
        assert!((fit.exponent - 0.3).abs() < 1e-9);
        let fit = fit_decay(&synthetic(|x| 2.0 * x.powf(-0.5))).unwrap();
        assert!((fit.exponent - 0.5).abs() < 1e-9);
        assert!((fit.intercept - 2f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn too_few_maxima() {
        let mut s = synthetic(|x| 1.0 / x);
        s.truncate(2);
        assert!(matches!(fit_decay(&s), Err(Error::InsufficientData { .. })));
    }

    #[test]
    fn sinc_envelope_decays_like_one_over_xi() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let samples =
            sample_envelope(|xi| sinc_factor(xi).norm(), 10.0, 1e4, 64, &mut rng).unwrap();
        let fit = fit_decay(&samples).unwrap();
        assert!((0.9..=1.1).contains(&fit.exponent), "{}", fit.exponent);
    }

    #[test]
    fn window_max_dominates_window() {
        let approx = crate::cantor::build_cantor(&crate::cantor::EnsembleSpec::new(
            EnsembleKind::III,
            5,
            2,
            5,
            3,
        ))
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let samples = sample_decay(&approx, 10.0, 3000.0, 16, &mut rng).unwrap();
        let windows = dyadic_windows(10.0, 3000.0).unwrap();
        for (lo, hi) in windows {
            let inside: Vec<_> = samples.iter().filter(|s| s.xi >= lo && s.xi < hi).collect();
            let maxes: Vec<_> = inside.iter().filter(|s| s.is_window_max).collect();
            assert_eq!(maxes.len(), 1);
            assert!(inside.iter().all(|s| s.amp <= maxes[0].amp));
        }
    }

    #[test]
    fn point_mass_follows_sinc() {
        let approx = CantorApprox::from_level_alphabets(
            EnsembleKind::I,
            &vec![Alphabet::new(4, vec![0]).unwrap(); 3],
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for s in sample_decay(&approx, 1.0, 1e3, 8, &mut rng).unwrap() {
            let env = sinc_factor(s.xi / 64.0).norm();
            assert!((s.amp - env).abs() < 1e-14);
        }
    }

    #[test]
    fn csv_header() {
        let mut buf = Vec::new();
        write_decay_csv(&synthetic(|x| 1.0 / x), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("xi,amp,is_window_max\n"));
        assert_eq!(text.lines().count(), 9);
    }
}
