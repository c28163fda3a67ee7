use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::config::{Experiment, ExperimentConfig};
use super::verify;
use crate::cantor::{
    binomial, build_cantor, hausdorff_dim, intervals, refine, refine_shared, verify_regularity, CantorApprox,
    EnsembleKind,
};
use crate::concentration::{
    max_lipschitz_ratio, mc_bernstein_sum, mc_tail_f, mc_variance_f, BernsteinInstance,
};
use crate::fup::{
    fit_exponent, norm_curve_from, schur_upper_bound, measure_fup_norm_with, target_exponent,
    volume_exponent, NormCurve, Operator,
};
use crate::seed::{self, tag};
use crate::spectral::{fit_decay, sample_decay, write_decay_csv};
use crate::stats::Spread;
use crate::{Error, Result};

/// One per-seed result; keys are column names.
pub type Row = BTreeMap<String, Value>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Check {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub config_hash: String,
    pub code_version: String,
    pub master_seed: u64,
    pub seeds: usize,
}

/// An auxiliary output file, such as a per-seed curve.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub content: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignSummary {
    pub experiment: String,
    pub columns: Vec<String>,
    pub rows: Vec<Row>,
    /// Median and quartiles of numeric columns over rows with `status = ok`.
    pub statistics: BTreeMap<String, Spread>,
    /// Predicted values the statistics are compared with.
    pub reference: BTreeMap<String, f64>,
    pub checks: Vec<Check>,
    pub warnings: Vec<String>,
    pub provenance: Provenance,
    #[serde(skip)]
    pub artifacts: Vec<Artifact>,
}

impl CampaignSummary {
    pub fn empty(experiment: &str, provenance: Provenance) -> Self {
        CampaignSummary {
            experiment: experiment.to_string(),
            columns: Vec::new(),
            rows: Vec::new(),
            statistics: BTreeMap::new(),
            reference: BTreeMap::new(),
            checks: Vec::new(),
            warnings: Vec::new(),
            provenance,
            artifacts: Vec::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failed_checks(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }

    /// Median and quartiles of `column` over successful rows.
    pub fn spread_of(rows: &[Row], column: &str) -> Option<Spread> {
        let values: Vec<f64> = rows
            .iter()
            .filter(|r| r.get("status").and_then(Value::as_str) == Some("ok"))
            .filter_map(|r| r.get(column).and_then(Value::as_f64))
            .collect();
        Spread::of(&values)
    }

    fn set_rows(&mut self, rows: Vec<Row>, stat_columns: &[&str]) {
        let mut columns: Vec<String> = rows.iter().flat_map(|r| r.keys().cloned()).collect();
        columns.sort();
        columns.dedup();
        self.columns = columns;
        for c in stat_columns {
            if let Some(s) = Self::spread_of(&rows, c) {
                self.statistics.insert(c.to_string(), s);
            }
        }
        let failed = rows
            .iter()
            .filter(|r| r.get("status").and_then(Value::as_str).is_some_and(|s| s != "ok"))
            .count();
        if failed > 0 {
            self.warnings.push(format!("{failed} of {} rows failed", rows.len()));
        }
        self.rows = rows;
    }

    fn median(&self, column: &str) -> Option<f64> {
        self.statistics.get(column).map(|s| s.median)
    }
}

/// Seed of the `index`-th ensemble draw of a campaign.
pub fn ensemble_seed(master: u64, index: usize) -> u64 {
    seed::derive(master, &[tag::CAMPAIGN, index as u64])
}

/// Runs the configured campaign. Seeds run in parallel on a pool of
/// `config.workers` threads; results do not depend on the thread count.
pub fn run_experiment(config: &ExperimentConfig) -> Result<CampaignSummary> {
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| Error::InvalidParameter(format!("cannot start {} workers: {e}", config.workers)))?;
    let provenance = Provenance {
        config_hash: config.hash(),
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        master_seed: config.master_seed,
        seeds: config.seeds,
    };
    let mut summary = CampaignSummary::empty(config.experiment.name(), provenance);
    summary.warnings = config.warnings();
    pool.install(|| match config.experiment {
        Experiment::Construct => construct(config, &mut summary),
        Experiment::Decay => decay(config, &mut summary),
        Experiment::FupDiscrete => fup(config, Operator::Discrete, &mut summary),
        Experiment::FupMeasure => fup(config, Operator::Measure, &mut summary),
        Experiment::FupNeighborhood => fup(config, Operator::Neighborhood, &mut summary),
        Experiment::Concentration => concentration(config, &mut summary),
        Experiment::Verify => verify::run_panel(config, &mut summary),
    })?;
    Ok(summary)
}

/// The configured approximation for draw `index`: the explicit alphabets when
/// given, otherwise a random ensemble member.
pub fn approximation(config: &ExperimentConfig, index: usize) -> Result<CantorApprox> {
    match &config.alphabets {
        Some(levels) => explicit(config.kind, config.base, config.card, levels),
        None => build_cantor(&config.ensemble(ensemble_seed(config.master_seed, index))),
    }
}

fn explicit(
    kind: EnsembleKind,
    base: u32,
    card: u32,
    levels: &[Vec<crate::cantor::Alphabet>],
) -> Result<CantorApprox> {
    let mut approx = CantorApprox::root(base, card, kind)?;
    for (l, level) in levels.iter().enumerate() {
        approx = match level.as_slice() {
            [shared] => refine_shared(&approx, shared)?,
            nodes if kind == EnsembleKind::III => {
                if nodes.len() != approx.len() {
                    return Err(Error::InvalidParameter(format!(
                        "level {} lists {} alphabets for {} parent points",
                        l + 1,
                        nodes.len(),
                        approx.len()
                    )));
                }
                let map = approx.numerators().iter().copied().zip(nodes.iter().cloned()).collect();
                refine(&approx, &map)?
            }
            _ => {
                return Err(Error::InvalidParameter(format!(
                    "ensemble {kind} takes one alphabet per level"
                )))
            }
        };
    }
    if kind == EnsembleKind::I && levels.windows(2).any(|w| w[0] != w[1]) {
        return Err(Error::InvalidParameter("ensemble I uses one alphabet at every level".into()));
    }
    Ok(approx)
}

fn per_seed<F>(config: &ExperimentConfig, f: F) -> Vec<(Row, Vec<Artifact>)>
where
    F: Fn(usize, &mut Row, &mut Vec<Artifact>) -> Result<()> + Sync,
{
    (0..config.seeds)
        .into_par_iter()
        .map(|s| {
            let mut row = Row::new();
            row.insert("seed".into(), json!(s));
            if config.alphabets.is_none() {
                row.insert("ensemble_seed".into(), json!(ensemble_seed(config.master_seed, s)));
            }
            let mut artifacts = Vec::new();
            let status = match f(s, &mut row, &mut artifacts) {
                Ok(()) => "ok".to_string(),
                Err(e) => format!("error: {e}"),
            };
            row.insert("status".into(), json!(status));
            (row, artifacts)
        })
        .collect()
}

fn collect(summary: &mut CampaignSummary, results: Vec<(Row, Vec<Artifact>)>, stats: &[&str]) {
    let mut rows = Vec::with_capacity(results.len());
    for (row, artifacts) in results {
        rows.push(row);
        summary.artifacts.extend(artifacts);
    }
    summary.set_rows(rows, stats);
}

fn all_rows_ok(summary: &CampaignSummary) -> Check {
    let failed = summary
        .rows
        .iter()
        .filter(|r| r.get("status").and_then(Value::as_str) != Some("ok"))
        .count();
    Check::new("all seeds completed", failed == 0, format!("{failed} failed"))
}

fn csv_text(write: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<String> {
    let mut buf = Vec::new();
    write(&mut buf)?;
    Ok(String::from_utf8(buf).expect("csv output is UTF-8"))
}

fn construct(config: &ExperimentConfig, summary: &mut CampaignSummary) -> Result<()> {
    let results = per_seed(config, |s, row, artifacts| {
        let approx = approximation(config, s)?;
        let set = intervals(&approx);
        let mut rng = seed::substream(ensemble_seed(config.master_seed, s), tag::AUDIT, 0);
        let cell = approx.cell();
        let regularity = verify_regularity(
            &approx,
            hausdorff_dim(config.base, config.card),
            cell,
            1.0,
            config.audit_samples,
            &mut rng,
        )?;
        row.insert("kind".into(), json!(config.kind.to_string()));
        row.insert("base".into(), json!(config.base));
        row.insert("card".into(), json!(config.card));
        row.insert("depth".into(), json!(approx.depth()));
        row.insert("points".into(), json!(approx.len()));
        row.insert("intervals".into(), json!(set.len()));
        row.insert("total_length".into(), json!(set.total_length()));
        row.insert("dimension".into(), json!(hausdorff_dim(config.base, config.card)));
        row.insert("regularity_r".into(), json!(regularity.r_observed));
        let nums: Vec<String> = approx.numerators().iter().map(u128::to_string).collect();
        row.insert("numerators".into(), json!(nums));
        artifacts.push(Artifact {
            name: format!("construct_seed{s}.json"),
            content: serde_json::to_string_pretty(&approx.to_json())? + "\n",
        });
        artifacts.push(Artifact {
            name: format!("intervals_seed{s}.csv"),
            content: csv_text(|b| set.write_csv(b))?,
        });
        Ok(())
    });
    collect(summary, results, &["regularity_r", "total_length"]);
    summary.checks.push(all_rows_ok(summary));
    Ok(())
}

fn decay(config: &ExperimentConfig, summary: &mut CampaignSummary) -> Result<()> {
    let results = per_seed(config, |s, row, artifacts| {
        let approx = approximation(config, s)?;
        let mut rng = seed::substream(ensemble_seed(config.master_seed, s), tag::DECAY, 0);
        let samples = sample_decay(&approx, config.xi_min, config.xi_max, config.per_window, &mut rng)?;
        artifacts.push(Artifact {
            name: format!("decay_seed{s}.csv"),
            content: csv_text(|b| write_decay_csv(&samples, b))?,
        });
        let fit = fit_decay(&samples)?;
        row.insert("exponent".into(), json!(fit.exponent));
        row.insert("intercept".into(), json!(fit.intercept));
        row.insert("residual_rms".into(), json!(fit.residual_rms));
        row.insert("windows".into(), json!(fit.windows.len()));
        Ok(())
    });
    collect(summary, results, &["exponent"]);
    let half = hausdorff_dim(config.base, config.card) / 2.0;
    summary.reference.insert("delta".into(), 2.0 * half);
    summary.reference.insert("predicted_exponent".into(), half);
    summary.checks.push(all_rows_ok(summary));
    let med = summary.median("exponent");
    summary.checks.push(Check::new(
        "median decay exponent within [delta/4, 3 delta/4]",
        med.is_some_and(|m| (0.5 * half..=1.5 * half).contains(&m)),
        format!("median {med:?}, window [{:.6}, {:.6}]", 0.5 * half, 1.5 * half),
    ));
    Ok(())
}

fn fup(config: &ExperimentConfig, op: Operator, summary: &mut CampaignSummary) -> Result<()> {
    let (base, card) = (config.base, config.card);
    let dim = (card as u128).pow(config.j_max);
    if op != Operator::Neighborhood && dim > config.grid.max_dimension as u128 {
        return Err(Error::resource("max_dimension", dim, config.grid.max_dimension));
    }
    let hs: Vec<f64> = (config.j_min..=config.j_max).map(|j| (base as f64).powi(-(j as i32))).collect();
    let results = per_seed(config, |s, row, artifacts| {
        let full = match &config.alphabets {
            Some(_) => Some(approximation(config, s)?),
            None => None,
        };
        let spec = config.ensemble(ensemble_seed(config.master_seed, s));
        let build = |j: u32| match &full {
            Some(a) => a.prefix(j),
            None => build_cantor(&spec.with_depth(j)),
        };
        let curve: NormCurve = norm_curve_from(base, card, &hs, op, &config.grid, build)?;
        artifacts.push(Artifact {
            name: format!("fup_{op}_seed{s}.csv"),
            content: csv_text(|b| curve.write_csv(b))?,
        });
        let norms: Vec<f64> = curve.points.iter().map(|p| p.norm).collect();
        row.insert("norms".into(), json!(norms));
        if op == Operator::Measure {
            let mut dominated = true;
            for p in &curve.points {
                let approx = build(p.j)?;
                let n = measure_fup_norm_with(&approx, p.h, &config.grid)?;
                dominated &= n * n <= schur_upper_bound(&approx, p.h, config.schur_samples)? + 1e-8;
            }
            row.insert("schur_dominated".into(), json!(dominated));
        }
        let report = fit_exponent(&curve, config.epsilon)?;
        row.insert("beta_hat".into(), json!(report.beta_hat));
        row.insert("residual_rms".into(), json!(report.residual_rms));
        Ok(())
    });
    collect(summary, results, &["beta_hat"]);
    let delta = hausdorff_dim(base, card);
    let beta_vol = volume_exponent(delta);
    summary.reference.insert("delta".into(), delta);
    summary.reference.insert("epsilon".into(), config.epsilon);
    summary.reference.insert("beta_vol".into(), beta_vol);
    summary.reference.insert("beta_target".into(), target_exponent(delta, config.epsilon));
    summary.checks.push(all_rows_ok(summary));
    let med = summary.median("beta_hat");
    match op {
        Operator::Discrete => summary.checks.push(Check::new(
            "median beta_hat >= beta_vol - 0.05",
            med.is_some_and(|m| m >= beta_vol - 0.05),
            format!("median {med:?}, beta_vol {beta_vol:.6}"),
        )),
        Operator::Measure => {
            summary.reference.insert("measure_floor".into(), delta / 4.0 - 0.08);
            summary.checks.push(Check::new(
                "median beta_hat >= delta/4 - 0.08",
                med.is_some_and(|m| m >= delta / 4.0 - 0.08),
                format!("median {med:?}, floor {:.6}", delta / 4.0 - 0.08),
            ));
            let dominated = summary.rows.iter().all(|r| r.get("schur_dominated") != Some(&json!(false)));
            summary.checks.push(Check::new("schur domination", dominated, ""));
        }
        Operator::Neighborhood => {
            let capped = summary.rows.iter().all(|r| {
                r.get("norms")
                    .and_then(Value::as_array)
                    .is_none_or(|v| v.iter().all(|n| n.as_f64().is_some_and(|n| n <= 1.0 + 1e-9)))
            });
            summary.checks.push(Check::new("unitarity cap", capped, "all norms <= 1 + 1e-9"));
        }
    }
    Ok(())
}

fn concentration(config: &ExperimentConfig, summary: &mut CampaignSummary) -> Result<()> {
    let (base, card) = (config.base, config.card);
    let inst_for = |eta: f64| BernsteinInstance::uniform_grid(base, card, config.card_b, config.n_scale(), eta);
    let nested: Vec<Vec<(Row, Vec<Artifact>)>> = (0..config.seeds)
        .into_par_iter()
        .map(|s| {
            let stream = ensemble_seed(config.master_seed, s);
            config
                .eta
                .iter()
                .enumerate()
                .map(|(k, &eta)| {
                    let mut row = Row::new();
                    row.insert("seed".into(), json!(s));
                    row.insert("ensemble_seed".into(), json!(stream));
                    row.insert("eta".into(), json!(eta));
                    let mut artifacts = Vec::new();
                    let mut run = || -> Result<()> {
                        let idx = 3 * k as u64;
                        let tail = mc_tail_f(
                            base,
                            card,
                            eta,
                            &config.t_values,
                            config.samples,
                            &mut seed::substream(stream, tag::MONTE_CARLO, idx),
                        )?;
                        let var = mc_variance_f(
                            base,
                            card,
                            eta,
                            config.samples,
                            &mut seed::substream(stream, tag::MONTE_CARLO, idx + 1),
                        )?;
                        let bern = mc_bernstein_sum(
                            &inst_for(eta),
                            &config.bernstein_t_values,
                            config.samples,
                            &mut seed::substream(stream, tag::MONTE_CARLO, idx + 2),
                        )?;
                        row.insert("tail_empirical".into(), json!(tail.empirical));
                        row.insert("tail_pass".into(), json!(tail.all_pass()));
                        row.insert("second_moment".into(), json!(var.value));
                        row.insert("second_moment_stderr".into(), json!(var.stderr));
                        row.insert("variance_pass".into(), json!(var.passes()));
                        row.insert("bernstein_empirical".into(), json!(bern.empirical));
                        row.insert("bernstein_pass".into(), json!(bern.all_pass()));
                        artifacts.push(Artifact {
                            name: format!("tail_seed{s}_eta{k}.csv"),
                            content: csv_text(|b| tail.write_csv(b))?,
                        });
                        artifacts.push(Artifact {
                            name: format!("bernstein_seed{s}_eta{k}.csv"),
                            content: csv_text(|b| bern.write_csv(b))?,
                        });
                        Ok(())
                    };
                    let status = match run() {
                        Ok(()) => "ok".to_string(),
                        Err(e) => format!("error: {e}"),
                    };
                    row.insert("status".into(), json!(status));
                    (row, artifacts)
                })
                .collect()
        })
        .collect();
    collect(summary, nested.into_iter().flatten().collect(), &["second_moment"]);
    summary.reference.insert("variance_bound".into(), 4f64.min(32.0 / card as f64));
    summary.checks.push(all_rows_ok(summary));
    for (col, name) in [
        ("tail_pass", "sub-Gaussian tail (Wilson 3 sigma)"),
        ("variance_pass", "second moment <= min(4, 32/A) + 3 sigma"),
        ("bernstein_pass", "Bernstein tail (Wilson 3 sigma)"),
    ] {
        let ok = summary.rows.iter().all(|r| r.get(col) != Some(&json!(false)));
        summary.checks.push(Check::new(name, ok, ""));
    }
    if binomial(base, card).is_some_and(|c| c <= 1000) {
        let mut worst = 0.0f64;
        for &eta in &config.eta {
            worst = worst.max(max_lipschitz_ratio(base, card, eta)?);
        }
        summary.reference.insert("lipschitz_max".into(), worst);
        summary.checks.push(Check::new(
            "Lipschitz ratio <= 1/A (exhaustive)",
            worst <= 1.0 / card as f64 + 1e-12,
            format!("max ratio {worst:.6e}"),
        ));
    }
    Ok(())
}
