//! The `verify` panel: one check per acceptance criterion.

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::json;

use super::campaign::{ensemble_seed, run_experiment, CampaignSummary, Check, Row};
use super::config::{Experiment, ExperimentConfig, Scale};
use super::report::{emit_report, Format};
use crate::cantor::{build_cantor, hausdorff_dim, refine, Alphabet, CantorApprox, EnsembleKind, EnsembleSpec};
use crate::concentration::{
    exact_mean_f, max_lipschitz_ratio, mc_bernstein_sum, mc_tail_f, mc_variance_f, BernsteinInstance, ETA_PANEL,
    SIGMAS,
};
use crate::fup::{
    dft_matrix, dft_submatrix_norm, fit_exponent, measure_fup_norm, norm_curve, schur_upper_bound, spectral_norm,
    submultiplicativity_for, volume_exponent, Operator, Solver,
};
use crate::seed::{self, tag};
use crate::spectral::{fit_decay, fourier_nu, fourier_nu_quadrature, g_diff, sample_decay, INV_SQRT_TAU};
use crate::stats::{binomial_consistent, median};
use crate::Result;

pub const CRITERIA: [&str; 13] = [
    "golden constructions",
    "exact mean zero",
    "difference identity",
    "closed form vs quadrature",
    "envelope and conjugate symmetry",
    "discrete norms",
    "submultiplicativity",
    "concentration suite",
    "Bernstein suite",
    "decay trend",
    "FUP trend",
    "Schur domination",
    "reproducibility",
];

fn stream(master: u64, criterion: usize) -> ChaCha8Rng {
    seed::substream(master, tag::CAMPAIGN, 1000 + criterion as u64)
}

fn pick(scale: Scale, full: usize, quick: usize) -> usize {
    match scale {
        Scale::Full => full,
        Scale::Quick => quick,
    }
}

fn alphabet(base: u32, digits: &[u32]) -> Alphabet {
    Alphabet::new(base, digits.to_vec()).expect("fixed alphabet is valid")
}

/// A random ensemble member of random kind with at most `max_points` points.
fn random_instance(rng: &mut ChaCha8Rng, max_points: u128) -> Result<CantorApprox> {
    let kind = [EnsembleKind::I, EnsembleKind::II, EnsembleKind::III][rng.gen_range(0..3)];
    let base = rng.gen_range(3..=9);
    let card = rng.gen_range(2..base);
    let max_depth = (1..=6u32).rev().find(|&j| (card as u128).pow(j) <= max_points).unwrap_or(1);
    let depth = rng.gen_range(1..=max_depth);
    build_cantor(&EnsembleSpec::new(kind, base, card, depth, rng.gen()))
}

/// Runs criterion `k` (1-based).
pub fn run_criterion(k: usize, scale: Scale, master: u64) -> Result<Check> {
    if !(1..=CRITERIA.len()).contains(&k) {
        return Err(crate::Error::InvalidParameter(format!("no criterion {k}")));
    }
    let name = format!("{k}. {}", CRITERIA[k - 1]);
    let (passed, detail) = match k {
        1 => golden()?,
        2 => mean_zero()?,
        3 => difference_identity(scale, master)?,
        4 => quadrature(scale, master)?,
        5 => envelope(scale, master)?,
        6 => discrete_norms(master)?,
        7 => submultiplicativity()?,
        8 => concentration_suite(scale, master)?,
        9 => bernstein_suite(scale, master)?,
        10 => decay_trend(scale, master)?,
        11 => fup_trend(scale, master)?,
        12 => schur_domination(scale, master)?,
        13 => reproducibility(master)?,
        _ => unreachable!(),
    };
    Ok(Check::new(name, passed, detail))
}

pub(crate) fn run_panel(config: &ExperimentConfig, summary: &mut CampaignSummary) -> Result<()> {
    let checks: Vec<Check> = (1..=CRITERIA.len())
        .into_par_iter()
        .map(|k| {
            run_criterion(k, config.scale, config.master_seed)
                .unwrap_or_else(|e| Check::new(format!("{k}. {}", CRITERIA[k - 1]), false, format!("error: {e}")))
        })
        .collect();
    let rows: Vec<Row> = checks
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let mut row = Row::new();
            row.insert("criterion".into(), json!(i + 1));
            row.insert("name".into(), json!(CRITERIA[i]));
            row.insert("passed".into(), json!(c.passed));
            row.insert("detail".into(), json!(c.detail));
            row
        })
        .collect();
    summary.columns = ["criterion", "detail", "name", "passed"].map(String::from).to_vec();
    summary.rows = rows;
    summary.checks = checks;
    Ok(())
}

fn golden() -> Result<(bool, String)> {
    let fig1 = CantorApprox::from_level_alphabets(EnsembleKind::I, &[alphabet(3, &[0, 2]), alphabet(3, &[0, 2])])?;
    let fig2 = CantorApprox::from_level_alphabets(EnsembleKind::II, &[alphabet(3, &[0, 1]), alphabet(3, &[0, 2])])?;
    let level1 = CantorApprox::from_level_alphabets(EnsembleKind::III, &[alphabet(3, &[0, 1])])?;
    let map = BTreeMap::from([(0, alphabet(3, &[0, 2])), (1, alphabet(3, &[1, 2]))]);
    let fig3 = refine(&level1, &map)?;
    let got = [fig1, fig2, fig3].map(|a| (a.numerators().to_vec(), a.denominator()));
    let want = [vec![0, 2, 6, 8], vec![0, 2, 3, 5], vec![0, 2, 4, 5]];
    let ok = got.iter().zip(&want).all(|((n, d), w)| n == w && *d == 9);
    Ok((ok, format!("{:?}", got.map(|g| g.0))))
}

fn mean_zero() -> Result<(bool, String)> {
    let mut worst = 0.0f64;
    for m in 2..=8 {
        for a in 1..m {
            for eta in [0.1, 1.0, 2.5] {
                worst = worst.max(exact_mean_f(m, a, eta)?.norm());
            }
        }
    }
    Ok((worst <= 1e-12, format!("max |mean| {worst:.3e}")))
}

fn difference_identity(scale: Scale, master: u64) -> Result<(bool, String)> {
    let mut rng = stream(master, 3);
    let mut worst = 0.0f64;
    for _ in 0..pick(scale, 20, 5) {
        let depth = rng.gen_range(1..=5);
        let approx = build_cantor(&EnsembleSpec::new(EnsembleKind::III, 5, 2, depth, rng.gen()))?;
        let parent = approx.parent().expect("depth is positive");
        let map = approx.last_level_map().expect("depth is positive");
        let scale_j = 5f64.powi(depth as i32);
        for _ in 0..100 {
            let xi = rng.gen_range(-1e3..=1e3);
            let lhs = fourier_nu(&approx, xi) - fourier_nu(&parent, xi);
            worst = worst.max((lhs - g_diff(&parent, &map, xi / scale_j)?).norm());
        }
    }
    Ok((worst <= 1e-10, format!("max residual {worst:.3e}")))
}

fn quadrature(scale: Scale, master: u64) -> Result<(bool, String)> {
    let mut rng = stream(master, 4);
    let mut worst = 0.0f64;
    let kinds = [EnsembleKind::I, EnsembleKind::II, EnsembleKind::III];
    for i in 0..pick(scale, 10, 3) {
        let depth = rng.gen_range(2..=4);
        let approx = build_cantor(&EnsembleSpec::new(kinds[i % 3], 5, 2, depth, rng.gen()))?;
        for _ in 0..pick(scale, 20, 5) {
            let xi: f64 = rng.gen_range(-100.0..=100.0);
            // panel width w with |xi|^2 w^2 / (24 sqrt(2 pi)) <= 1e-10
            let w = (24.0 * TAU.sqrt() * 1e-10).sqrt() / xi.abs().max(1.0);
            let per_cell = (approx.cell() / w).ceil() as usize;
            let q = fourier_nu_quadrature(&approx, xi, per_cell * approx.len())?;
            worst = worst.max((q.value - fourier_nu(&approx, xi)).norm());
        }
    }
    Ok((worst <= 1e-8, format!("max difference {worst:.3e}")))
}

fn envelope(scale: Scale, master: u64) -> Result<(bool, String)> {
    let mut rng = stream(master, 5);
    let pool: Vec<CantorApprox> = (0..50).map(|_| random_instance(&mut rng, 4096)).collect::<Result<_>>()?;
    let (mut excess, mut asym) = (f64::NEG_INFINITY, 0.0f64);
    for _ in 0..pick(scale, 10_000, 1000) {
        let approx = &pool[rng.gen_range(0..pool.len())];
        let mag = 10f64.powf(rng.gen_range(-3.0..6.0));
        let xi = if rng.gen_bool(0.5) { mag } else { -mag };
        let v = fourier_nu(approx, xi);
        let bound = INV_SQRT_TAU * 1f64.min(2.0 * approx.denominator() as f64 / xi.abs());
        excess = excess.max(v.norm() - bound);
        asym = asym.max((fourier_nu(approx, -xi) - v.conj()).norm());
    }
    Ok((
        excess <= 1e-12 && asym <= 1e-12,
        format!("max excess over envelope {excess:.3e}, max asymmetry {asym:.3e}"),
    ))
}

fn discrete_norms(master: u64) -> Result<(bool, String)> {
    let mut suite: Vec<CantorApprox> = Vec::new();
    let mut worst_full = 0.0f64;
    for m in 2..=6u32 {
        for j in 1..=2usize {
            let full = CantorApprox::from_level_alphabets(EnsembleKind::I, &vec![Alphabet::full(m)?; j])?;
            worst_full = worst_full.max((dft_submatrix_norm(&full)? - 1.0).abs());
            suite.push(full);
        }
    }
    let mut worst_single = 0.0f64;
    for m in 2..=8u32 {
        for j in 1..=4usize {
            let single = CantorApprox::from_level_alphabets(EnsembleKind::I, &vec![alphabet(m, &[m - 1]); j])?;
            let expected = (m as f64).powf(-(j as f64) / 2.0);
            worst_single = worst_single.max((dft_submatrix_norm(&single)? - expected).abs());
            suite.push(single);
        }
    }
    let third = CantorApprox::from_level_alphabets(EnsembleKind::I, &[alphabet(3, &[0, 2])])?;
    let third_err = (dft_submatrix_norm(&third)? - 1.0).abs();
    suite.push(third);
    let mut rng = stream(master, 6);
    for _ in 0..40 {
        suite.push(random_instance(&mut rng, 64)?);
    }
    let mut worst_rel = 0.0f64;
    for approx in suite.iter().filter(|a| a.len() <= 64) {
        let k = dft_matrix(approx);
        let svd = spectral_norm(&k, Solver::Svd)?;
        let power = spectral_norm(&k, Solver::Power)?;
        worst_rel = worst_rel.max((svd - power).abs() / svd);
    }
    Ok((
        worst_full <= 1e-10 && worst_single <= 1e-10 && third_err <= 1e-9 && worst_rel <= 1e-9,
        format!(
            "full {worst_full:.3e}, singleton {worst_single:.3e}, middle third {third_err:.3e}, power vs svd {worst_rel:.3e} over {} cases",
            suite.len()
        ),
    ))
}

fn submultiplicativity() -> Result<(bool, String)> {
    let third = alphabet(3, &[0, 2]);
    let mut worst = f64::NEG_INFINITY;
    let mut cases = 0;
    for j1 in 1..=6 {
        for j2 in 1..=(7 - j1) {
            let (lhs, rhs) = submultiplicativity_for(&third, j1, j2)?;
            worst = worst.max(lhs / rhs - 1.0);
            cases += 1;
        }
    }
    Ok((worst <= 1e-8, format!("max lhs/rhs - 1 = {worst:.3e} over {cases} pairs")))
}

fn concentration_suite(scale: Scale, master: u64) -> Result<(bool, String)> {
    let n = pick(scale, 100_000, 10_000);
    let mut rng = stream(master, 8);
    let tail = mc_tail_f(4096, 64, 1.0, &[0.5, 1.0], n, &mut rng)?;
    let var = mc_variance_f(4096, 64, 1.0, n, &mut rng)?;
    let var_ok = var.value <= 32.0 / 64.0 + SIGMAS * var.stderr;
    let mut lip = 0.0f64;
    for eta in ETA_PANEL {
        lip = lip.max(max_lipschitz_ratio(8, 3, eta)?);
    }
    let lip_ok = lip <= 1.0 / 3.0 + 1e-12;
    Ok((
        tail.all_pass() && var_ok && lip_ok,
        format!(
            "tail empirical {:?} vs analytic {:?}; second moment {:.4e} +- {:.1e}; Lipschitz max {lip:.6}",
            tail.empirical, tail.analytic, var.value, var.stderr
        ),
    ))
}

fn bernstein_suite(scale: Scale, master: u64) -> Result<(bool, String)> {
    let n = pick(scale, 10_000, 5000);
    let ts = [0.25, 0.5, 1.0];
    let mut rng = stream(master, 9);
    let inst = BernsteinInstance::uniform_grid(64, 8, 64, 64 * 64, 1.0);
    let report = mc_bernstein_sum(&inst, &ts, n, &mut rng)?;
    let single = BernsteinInstance::uniform_grid(64, 8, 1, 64 * 64, 1.0);
    let a = mc_bernstein_sum(&single, &ts, n, &mut rng)?;
    let b = mc_tail_f(64, 8, 1.0, &ts, n, &mut rng)?;
    let consistent = (0..ts.len())
        .all(|i| binomial_consistent(a.exceedances[i], n as u64, b.exceedances[i], n as u64, SIGMAS));
    Ok((
        report.all_pass() && consistent,
        format!(
            "empirical {:?} vs bound {:?}; single point {:?} vs tail {:?}",
            report.empirical, report.analytic, a.empirical, b.empirical
        ),
    ))
}

/// Median fitted decay exponent for the `M = 8, A = 2` kind III ensemble at
/// depth 7.
pub fn decay_exponents(seeds: usize, master: u64) -> Result<Vec<f64>> {
    (0..seeds)
        .into_par_iter()
        .map(|s| {
            let es = ensemble_seed(master, s);
            let approx = build_cantor(&EnsembleSpec::new(EnsembleKind::III, 8, 2, 7, es))?;
            let mut rng = seed::substream(es, tag::DECAY, 0);
            Ok(fit_decay(&sample_decay(&approx, 1e2, 1e5, 64, &mut rng)?)?.exponent)
        })
        .collect()
}

fn decay_trend(scale: Scale, master: u64) -> Result<(bool, String)> {
    let exps = decay_exponents(pick(scale, 50, 5), seed::derive(master, &[10]))?;
    let med = median(&exps).unwrap_or(f64::NAN);
    let half = hausdorff_dim(8, 2) / 2.0;
    Ok((
        (0.5 * half..=1.5 * half).contains(&med),
        format!("median exponent {med:.4} in [{:.4}, {:.4}]", 0.5 * half, 1.5 * half),
    ))
}

/// Fitted `beta_hat` per seed for `h = 8^{-j}`, `j = 2..5`.
pub fn fup_slopes(op: Operator, seeds: usize, master: u64) -> Result<Vec<f64>> {
    let hs: Vec<f64> = (2..=5).map(|j| 8f64.powi(-j)).collect();
    (0..seeds)
        .into_par_iter()
        .map(|s| {
            let spec = EnsembleSpec::new(EnsembleKind::III, 8, 2, 1, ensemble_seed(master, s));
            Ok(fit_exponent(&norm_curve(&spec, &hs, op)?, 0.01)?.beta_hat)
        })
        .collect()
}

fn fup_trend(scale: Scale, master: u64) -> Result<(bool, String)> {
    let seeds = pick(scale, 20, 4);
    let base = seed::derive(master, &[11]);
    let measure = median(&fup_slopes(Operator::Measure, seeds, base)?).unwrap_or(f64::NAN);
    let discrete = median(&fup_slopes(Operator::Discrete, seeds, base)?).unwrap_or(f64::NAN);
    let delta = hausdorff_dim(8, 2);
    let beta_vol = volume_exponent(delta);
    let target = crate::fup::target_exponent(delta, 0.01);
    Ok((
        measure >= delta / 4.0 - 0.08 && discrete >= beta_vol - 0.05,
        format!(
            "measure median {measure:.4} (floor {:.4}); discrete median {discrete:.4} (floor {:.4}); beta_target {target:.4}",
            delta / 4.0 - 0.08,
            beta_vol - 0.05
        ),
    ))
}

fn schur_domination(scale: Scale, master: u64) -> Result<(bool, String)> {
    let mut rng = stream(master, 12);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..pick(scale, 20, 5) {
        let approx = random_instance(&mut rng, 256)?;
        let h = approx.cell() * 10f64.powf(rng.gen_range(-1.0..2.0));
        let n = measure_fup_norm(&approx, h)?;
        worst = worst.max(n * n - schur_upper_bound(&approx, h, 64)?);
    }
    Ok((worst <= 1e-8, format!("max norm^2 - bound = {worst:.3e}")))
}

fn reproducibility(master: u64) -> Result<(bool, String)> {
    let mut cfg = ExperimentConfig::new(Experiment::Decay, seed::derive(master, &[13]));
    cfg.depth = 5;
    cfg.seeds = 4;
    cfg.xi_max = 1e4;
    cfg.per_window = 8;
    let render = |workers: usize| -> Result<Vec<String>> {
        let s = run_experiment(&ExperimentConfig { workers, ..cfg.clone() })?;
        let mut out = vec![emit_report(&s, Format::Json)?, emit_report(&s, Format::Csv)?];
        out.extend(s.artifacts.iter().map(|a| a.content.clone()));
        Ok(out)
    };
    let one = render(1)?;
    let four = render(4)?;
    let again = render(4)?;
    Ok((one == four && four == again, format!("{} documents compared", one.len())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cheap_criteria_pass() {
        for k in [1, 2, 6, 7, 13] {
            let c = run_criterion(k, Scale::Quick, 5).unwrap();
            assert!(c.passed, "{c:?}");
        }
    }

    #[test]
    fn quick_criteria_pass() {
        for k in [3, 4, 5, 12] {
            let c = run_criterion(k, Scale::Quick, 5).unwrap();
            assert!(c.passed, "{c:?}");
        }
        assert!(run_criterion(14, Scale::Quick, 0).is_err());
    }
}
