//! Exact-enumeration and Monte Carlo checks of the alphabet concentration
//! estimates: mean zero, the `1/A` Lipschitz bound, the sub-Gaussian tail,
//! the variance bound and the Bernstein bound for sums over a point set.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cantor::{enumerate_alphabets, sample_alphabet, Alphabet};
use crate::seed::{self, tag};
use crate::spectral::f_eta;
use crate::stats::{mean_and_stderr, wilson_upper};
use crate::{ComplexAmp, Error, Result};

/// Frequencies probed by default; none is a multiple of `2 pi`.
pub const ETA_PANEL: [f64; 5] = [0.1, 0.7, 1.0, 2.5, PI];

pub const MIN_SAMPLES: usize = 1000;

/// Confidence level, in standard deviations, of every statistical pass.
pub const SIGMAS: f64 = 3.0;

const CHUNK: usize = 1024;

/// `E[F_eta]` over every alphabet in `A(M, A)`.
pub fn exact_mean_f(base: u32, card: u32, eta: f64) -> Result<ComplexAmp> {
    let all = enumerate_alphabets(base, card)?;
    let n = all.len() as f64;
    Ok(all.map(|a| f_eta(&a, eta)).sum::<Complex64>() / n)
}

/// `E|F_eta|^2` over every alphabet in `A(M, A)`.
pub fn exact_second_moment(base: u32, card: u32, eta: f64) -> Result<f64> {
    let all = enumerate_alphabets(base, card)?;
    let n = all.len() as f64;
    Ok(all.map(|a| f_eta(&a, eta).norm_sqr()).sum::<f64>() / n)
}

/// `|F_eta(a1) - F_eta(a2)| / d(a1, a2)`, `d` the size of the symmetric difference.
pub fn lipschitz_ratio(a1: &Alphabet, a2: &Alphabet, eta: f64) -> Result<f64> {
    if a1.base() != a2.base() || a1.card() != a2.card() {
        return Err(Error::InvalidArgument(format!(
            "alphabets come from different spaces: (M, A) = ({}, {}) and ({}, {})",
            a1.base(),
            a1.card(),
            a2.base(),
            a2.card()
        )));
    }
    if a1 == a2 {
        return Err(Error::InvalidArgument(format!("identical alphabets {a1}: ratio undefined")));
    }
    Ok((f_eta(a1, eta) - f_eta(a2, eta)).norm() / a1.distance(a2) as f64)
}

/// Largest Lipschitz ratio over all ordered pairs of distinct alphabets.
pub fn max_lipschitz_ratio(base: u32, card: u32, eta: f64) -> Result<f64> {
    let all: Vec<Alphabet> = enumerate_alphabets(base, card)?.collect();
    let values: Vec<Complex64> = all.iter().map(|a| f_eta(a, eta)).collect();
    Ok((0..all.len())
        .into_par_iter()
        .map(|i| {
            ((i + 1)..all.len())
                .map(|k| (values[i] - values[k]).norm() / all[i].distance(&all[k]) as f64)
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max))
}

/// `2 exp(-t^2 / (16 A lip^2))`.
pub fn concentration_bound(t: f64, card: u32, lip: f64) -> f64 {
    2.0 * (-t * t / (16.0 * card as f64 * lip * lip)).exp()
}

/// Tail bound for `|F_eta|`: [`concentration_bound`] with `lip = 1/A`.
pub fn tail_bound(card: u32, t: f64) -> f64 {
    concentration_bound(t, card, 1.0 / card as f64)
}

/// `2 exp(-Card(B) A t^2 / (64 + (4/3) A t))`.
pub fn bernstein_bound(card_b: usize, card: u32, t: f64) -> f64 {
    let a = card as f64;
    2.0 * (-(card_b as f64) * a * t * t / (64.0 + 4.0 / 3.0 * a * t)).exp()
}

/// Runs `n` independent trials. Trials are grouped in fixed chunks, each with
/// its own stream, so the output does not depend on the thread count.
fn run_trials<F>(stream_seed: u64, n: usize, trial: F) -> Vec<f64>
where
    F: Fn(&mut ChaCha8Rng) -> Result<f64> + Sync,
{
    let chunks: Vec<Result<Vec<f64>>> = (0..n.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut rng = seed::substream(stream_seed, tag::MONTE_CARLO, c as u64);
            let len = CHUNK.min(n - c * CHUNK);
            (0..len).map(|_| trial(&mut rng)).collect()
        })
        .collect();
    chunks
        .into_iter()
        .flat_map(|c| c.expect("alphabet parameters were validated"))
        .collect()
}

fn check_samples(n: usize) -> Result<()> {
    if n < MIN_SAMPLES {
        return Err(Error::InvalidParameter(format!(
            "Monte Carlo needs at least {MIN_SAMPLES} samples, got {n}"
        )));
    }
    Ok(())
}

fn check_alphabet_space(base: u32, card: u32) -> Result<()> {
    if card == 0 || card > base {
        return Err(Error::InvalidParameter(format!("need 1 <= A <= M, got A={card} M={base}")));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailReport {
    pub t_values: Vec<f64>,
    pub exceedances: Vec<u64>,
    pub empirical: Vec<f64>,
    pub wilson_upper: Vec<f64>,
    pub analytic: Vec<f64>,
    pub pass: Vec<bool>,
    pub n_samples: usize,
}

impl TailReport {
    /// Pass where the Wilson upper bound is below the analytic value, or the
    /// analytic value is vacuous (at least 1).
    pub fn from_values(values: &[f64], t_values: &[f64], analytic: impl Fn(f64) -> f64) -> Self {
        let n = values.len() as u64;
        let mut report = TailReport {
            t_values: t_values.to_vec(),
            exceedances: Vec::new(),
            empirical: Vec::new(),
            wilson_upper: Vec::new(),
            analytic: Vec::new(),
            pass: Vec::new(),
            n_samples: values.len(),
        };
        for &t in t_values {
            let k = values.iter().filter(|&&v| v >= t).count() as u64;
            let upper = wilson_upper(k, n, SIGMAS);
            let rhs = analytic(t);
            report.exceedances.push(k);
            report.empirical.push(if n == 0 { 0.0 } else { k as f64 / n as f64 });
            report.wilson_upper.push(upper);
            report.analytic.push(rhs);
            report.pass.push(rhs >= 1.0 || upper <= rhs);
        }
        report
    }

    pub fn all_pass(&self) -> bool {
        self.pass.iter().all(|&p| p)
    }

    /// CSV with columns `t, empirical, wilson_upper, analytic, pass`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["t", "empirical", "wilson_upper", "analytic", "pass"])?;
        for i in 0..self.t_values.len() {
            wr.write_record([
                self.t_values[i].to_string(),
                self.empirical[i].to_string(),
                self.wilson_upper[i].to_string(),
                self.analytic[i].to_string(),
                self.pass[i].to_string(),
            ])?;
        }
        wr.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }
}

/// `|F_eta(A)|` for `n` uniformly random alphabets.
pub fn sample_abs_f<R: Rng + ?Sized>(base: u32, card: u32, eta: f64, n: usize, rng: &mut R) -> Result<Vec<f64>> {
    check_alphabet_space(base, card)?;
    let stream = rng.gen();
    Ok(run_trials(stream, n, |r| Ok(f_eta(&sample_alphabet(base, card, r)?, eta).norm())))
}

/// Empirical tail of `|F_eta|` against `2 exp(-A t^2 / 16)`.
pub fn mc_tail_f<R: Rng + ?Sized>(
    base: u32,
    card: u32,
    eta: f64,
    t_values: &[f64],
    n: usize,
    rng: &mut R,
) -> Result<TailReport> {
    check_samples(n)?;
    let values = sample_abs_f(base, card, eta, n, rng)?;
    Ok(TailReport::from_values(&values, t_values, |t| tail_bound(card, t)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SecondMoment {
    /// Sample mean of `|F_eta|^2`; the true mean of `F_eta` is exactly zero,
    /// so this estimates the variance.
    pub value: f64,
    pub stderr: f64,
    /// `min(4, 32 / A)`.
    pub bound: f64,
    pub n_samples: usize,
}

impl SecondMoment {
    pub fn passes(&self) -> bool {
        self.value <= self.bound + SIGMAS * self.stderr
    }
}

pub fn mc_variance_f<R: Rng + ?Sized>(base: u32, card: u32, eta: f64, n: usize, rng: &mut R) -> Result<SecondMoment> {
    check_samples(n)?;
    let squares: Vec<f64> = sample_abs_f(base, card, eta, n, rng)?.iter().map(|v| v * v).collect();
    let (value, stderr) = mean_and_stderr(&squares);
    Ok(SecondMoment {
        value,
        stderr,
        bound: 4f64.min(32.0 / card as f64),
        n_samples: n,
    })
}

/// A fixed point set `B` (numerators over `denominator`) with the frequency
/// scale `N` of the phases `e^{i N eta b}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BernsteinInstance {
    pub numerators: Vec<u128>,
    pub denominator: u128,
    pub n_scale: u128,
    pub eta: f64,
    pub card: u32,
    pub base: u32,
}

impl BernsteinInstance {
    /// `B = {k / Card(B)}`.
    pub fn uniform_grid(base: u32, card: u32, card_b: usize, n_scale: u128, eta: f64) -> Self {
        BernsteinInstance {
            numerators: (0..card_b as u128).collect(),
            denominator: card_b as u128,
            n_scale,
            eta,
            card,
            base,
        }
    }

    pub fn card_b(&self) -> usize {
        self.numerators.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.numerators.is_empty() {
            return Err(Error::InvalidParameter("B must contain at least one point".into()));
        }
        if self.denominator == 0 {
            return Err(Error::InvalidParameter("denominator must be positive".into()));
        }
        check_alphabet_space(self.base, self.card)
    }

    /// `N b`, exact whenever `N n` fits in 128 bits.
    fn scaled_points(&self) -> Vec<f64> {
        let d = self.denominator;
        self.numerators
            .iter()
            .map(|&n| match self.n_scale.checked_mul(n) {
                Some(p) => (p / d) as f64 + (p % d) as f64 / d as f64,
                None => self.n_scale as f64 * (n as f64 / d as f64),
            })
            .collect()
    }
}

/// Empirical tail of `|(1/Card B) sum_b e^{i N eta b} F_eta(A(b))|`, one fresh
/// alphabet per point per trial, against [`bernstein_bound`].
pub fn mc_bernstein_sum<R: Rng + ?Sized>(
    inst: &BernsteinInstance,
    t_values: &[f64],
    n: usize,
    rng: &mut R,
) -> Result<TailReport> {
    check_samples(n)?;
    inst.validate()?;
    let phases: Vec<Complex64> = inst
        .scaled_points()
        .iter()
        .map(|x| Complex64::from_polar(1.0, inst.eta * x))
        .collect();
    let inv = 1.0 / phases.len() as f64;
    let stream = rng.gen();
    let values = run_trials(stream, n, |r| {
        let mut acc = Complex64::new(0.0, 0.0);
        for p in &phases {
            acc += p * f_eta(&sample_alphabet(inst.base, inst.card, r)?, inst.eta);
        }
        Ok((acc * inv).norm())
    });
    let card_b = inst.card_b();
    Ok(TailReport::from_values(&values, t_values, |t| bernstein_bound(card_b, inst.card, t)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::binomial_consistent;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn mean_zero_examples() {
        assert!(exact_mean_f(3, 2, 1.0).unwrap().norm() < 1e-14);
        assert!(exact_mean_f(6, 3, 2.5).unwrap().norm() < 1e-12);
        assert_eq!(exact_mean_f(5, 5, 0.9).unwrap(), Complex64::new(0.0, 0.0));
        assert!(matches!(exact_mean_f(60, 30, 1.0), Err(Error::Resource { .. })));
    }

    #[test]
    fn lipschitz_examples() {
        let a1 = Alphabet::new(3, vec![0, 1]).unwrap();
        let a2 = Alphabet::new(3, vec![0, 2]).unwrap();
        assert!((lipschitz_ratio(&a1, &a2, PI).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(lipschitz_ratio(&a1, &a2, 0.0).unwrap(), 0.0);
        assert!(matches!(lipschitz_ratio(&a1, &a1, 1.0), Err(Error::InvalidArgument(_))));
        let other = Alphabet::new(4, vec![0, 1]).unwrap();
        assert!(lipschitz_ratio(&a1, &other, 1.0).is_err());
        assert!(max_lipschitz_ratio(8, 3, 0.7).unwrap() <= 1.0 / 3.0 + 1e-12);
    }

    #[test]
    fn bound_examples() {
        assert!((concentration_bound(4.0, 16, 1.0 / 16.0) - 2.0 * (-16f64).exp()).abs() < 1e-20);
        assert!((concentration_bound(1e-9, 16, 0.1) - 2.0).abs() < 1e-12);
        assert!((tail_bound(64, 1.0) - 2.0 * (-4f64).exp()).abs() < 1e-15);
        let b = bernstein_bound(16, 4, 0.5);
        assert!((b - 2.0 * (-16.0f64 / (64.0 + 8.0 / 3.0)).exp()).abs() < 1e-15);
        assert!((b - 1.5732).abs() < 1e-4);
        assert!((bernstein_bound(16, 4, 1e-9) - 2.0).abs() < 1e-12);
        let (c, a, t) = (5, 8, 0.7);
        assert!((bernstein_bound(2 * c, a, t) - bernstein_bound(c, a, t).powi(2) / 2.0).abs() < 1e-15);
    }

    #[test]
    fn tail_report_full_alphabet_and_large_t() {
        let r = mc_tail_f(16, 16, 1.0, &[0.01, 0.5], 2000, &mut rng(1)).unwrap();
        assert!(r.empirical.iter().all(|&e| e == 0.0));
        let r = mc_tail_f(16, 3, 1.0, &[2.0 + 1e-9, 3.0], 2000, &mut rng(2)).unwrap();
        assert!(r.exceedances.iter().all(|&k| k == 0));
        assert!(mc_tail_f(16, 3, 1.0, &[1.0], 999, &mut rng(2)).is_err());
    }

    #[test]
    fn tail_report_passes_at_moderate_size() {
        let r = mc_tail_f(512, 32, 1.0, &[0.25, 0.5, 1.0], 5000, &mut rng(3)).unwrap();
        assert!(r.all_pass(), "{r:?}");
        assert_eq!(r.empirical.len(), 3);
        assert!(r.empirical.iter().all(|e| (0.0..=1.0).contains(e)));
    }

    #[test]
    fn variance_matches_enumeration() {
        let exact = exact_second_moment(6, 3, 1.3).unwrap();
        let mc = mc_variance_f(6, 3, 1.3, 200_000, &mut rng(4)).unwrap();
        assert!((mc.value - exact).abs() <= SIGMAS * mc.stderr, "{} vs {exact}", mc.value);
        assert!(mc.passes());
        assert!(mc.value <= 4.0);
        let full = mc_variance_f(6, 6, 1.3, 1000, &mut rng(5)).unwrap();
        assert_eq!(full.value, 0.0);
    }

    #[test]
    fn bernstein_degenerate_and_single_point() {
        let inst = BernsteinInstance::uniform_grid(16, 4, 8, 256, 0.0);
        let r = mc_bernstein_sum(&inst, &[1e-6, 0.1], 1000, &mut rng(6)).unwrap();
        assert!(r.exceedances.iter().all(|&k| k == 0));

        let ts = [0.25, 0.5, 1.0];
        let single = BernsteinInstance::uniform_grid(16, 4, 1, 256, 1.0);
        let a = mc_bernstein_sum(&single, &ts, 20_000, &mut rng(7)).unwrap();
        let b = mc_tail_f(16, 4, 1.0, &ts, 20_000, &mut rng(8)).unwrap();
        for i in 0..ts.len() {
            assert!(binomial_consistent(a.exceedances[i], 20_000, b.exceedances[i], 20_000, SIGMAS));
        }
    }

    #[test]
    fn scaled_points_are_exact() {
        let inst = BernsteinInstance {
            numerators: vec![0, 1, 3, 7],
            denominator: 8,
            n_scale: 64,
            eta: 1.0,
            card: 2,
            base: 4,
        };
        assert_eq!(inst.scaled_points(), vec![0.0, 8.0, 24.0, 56.0]);
        let empty = BernsteinInstance { numerators: vec![], ..inst };
        assert!(empty.validate().is_err());
    }

    #[test]
    fn trials_ignore_thread_count() {
        let run = || sample_abs_f(64, 8, 0.7, 5000, &mut rng(9)).unwrap();
        let many = run();
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap().install(run);
        assert_eq!(many, one);
    }

    #[test]
    fn csv_columns() {
        let r = TailReport::from_values(&[0.1, 0.2, 0.9], &[0.5], |_| 0.4);
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("t,empirical,wilson_upper,analytic,pass\n"));
        assert_eq!(r.exceedances, vec![1]);
    }

    proptest! {
        #[test]
        fn lipschitz_holds_for_random_pairs(
            base in 2u32..40,
            eta in -20.0f64..20.0,
            seed in any::<u64>(),
        ) {
            let mut r = rng(seed);
            let card = r.gen_range(1..=base);
            let a1 = sample_alphabet(base, card, &mut r).unwrap();
            let a2 = sample_alphabet(base, card, &mut r).unwrap();
            prop_assume!(a1 != a2);
            prop_assert!(lipschitz_ratio(&a1, &a2, eta).unwrap() <= 1.0 / card as f64 + 1e-12);
        }
    }
}
