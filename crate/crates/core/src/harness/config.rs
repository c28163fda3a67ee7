//! Flat `key = value` experiment configuration.
//!
//! Blank lines and lines starting with `#` are ignored. Lists are
//! comma-separated. Explicit alphabets use `;` between levels and `|` between
//! the per-node alphabets of one level, e.g. `alphabets = 0,1; 0,2 | 1,2`.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use sha2::{Digest, Sha256};

use crate::cantor::{hausdorff_dim, Alphabet, EnsembleKind, EnsembleSpec, Limits};
use crate::fup::GridSpec;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Experiment {
    Construct,
    Decay,
    FupDiscrete,
    FupMeasure,
    FupNeighborhood,
    Concentration,
    Verify,
}

impl Experiment {
    pub const ALL: [Experiment; 7] = [
        Experiment::Construct,
        Experiment::Decay,
        Experiment::FupDiscrete,
        Experiment::FupMeasure,
        Experiment::FupNeighborhood,
        Experiment::Concentration,
        Experiment::Verify,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Construct => "construct",
            Experiment::Decay => "decay",
            Experiment::FupDiscrete => "fup-discrete",
            Experiment::FupMeasure => "fup-measure",
            Experiment::FupNeighborhood => "fup-neighborhood",
            Experiment::Concentration => "concentration",
            Experiment::Verify => "verify",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown experiment `{s}`")))
    }
}

/// Size of the `verify` panel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    /// Sample sizes and seed counts as stated in the acceptance panel.
    Full,
    /// Reduced counts for smoke runs.
    Quick,
}

impl FromStr for Scale {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(Scale::Full),
            "quick" => Ok(Scale::Quick),
            _ => Err(Error::InvalidParameter(format!("unknown scale `{s}`"))),
        }
    }
}

impl fmt::Display for Scale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scale::Full => "full",
            Scale::Quick => "quick",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub master_seed: u64,
    pub kind: EnsembleKind,
    pub base: u32,
    pub card: u32,
    pub depth: u32,
    /// Fixed alphabets, outer index the level; one entry means shared.
    pub alphabets: Option<Vec<Vec<Alphabet>>>,
    pub seeds: usize,
    pub epsilon: f64,
    pub xi_min: f64,
    pub xi_max: f64,
    pub per_window: usize,
    pub j_min: u32,
    pub j_max: u32,
    pub grid: GridSpec,
    pub schur_samples: usize,
    pub eta: Vec<f64>,
    pub t_values: Vec<f64>,
    pub bernstein_t_values: Vec<f64>,
    pub samples: usize,
    pub card_b: usize,
    /// Frequency scale `N` of the Bernstein sum; 0 means `M^2`.
    pub n_scale: u128,
    pub audit_samples: usize,
    pub scale: Scale,
    /// Thread count; 0 uses every available core. Never affects results.
    pub workers: usize,
}

impl ExperimentConfig {
    pub fn new(experiment: Experiment, master_seed: u64) -> Self {
        ExperimentConfig {
            experiment,
            master_seed,
            kind: EnsembleKind::III,
            base: 8,
            card: 2,
            depth: 7,
            alphabets: None,
            seeds: 1,
            epsilon: 0.01,
            xi_min: 1e2,
            xi_max: 1e5,
            per_window: 64,
            j_min: 2,
            j_max: 5,
            grid: GridSpec::default(),
            schur_samples: 64,
            eta: vec![1.0],
            t_values: vec![0.5, 1.0],
            bernstein_t_values: vec![0.25, 0.5, 1.0],
            samples: 10_000,
            card_b: 64,
            n_scale: 0,
            audit_samples: 2000,
            scale: Scale::Full,
            workers: 0,
        }
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }

    /// Parses a config document; `origin` labels error messages.
    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        let err = |line: usize, msg: String| Error::Config {
            path: origin.to_string(),
            line,
            msg,
        };
        let mut entries: BTreeMap<String, (usize, String)> = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let (key, value) = trimmed
                .split_once('=')
                .ok_or_else(|| err(line, format!("expected `key = value`, got `{trimmed}`")))?;
            let key = key.trim().to_string();
            if !KEYS.contains(&key.as_str()) {
                return Err(err(line, format!("unknown key `{key}`")));
            }
            if entries.insert(key.clone(), (line, value.trim().to_string())).is_some() {
                return Err(err(line, format!("duplicate key `{key}`")));
            }
        }
        let experiment = match entries.remove("experiment") {
            Some((line, v)) => v.parse().map_err(|e: Error| err(line, e.to_string()))?,
            None => return Err(err(0, "missing required key `experiment`".into())),
        };
        let master_seed = match entries.remove("master_seed") {
            Some((line, v)) => v.parse().map_err(|_| err(line, format!("invalid master_seed `{v}`")))?,
            None => return Err(err(0, "missing required key `master_seed`".into())),
        };
        let mut cfg = ExperimentConfig::new(experiment, master_seed);
        let alphabets = entries.remove("alphabets");
        for (key, (line, value)) in entries.into_iter().chain(alphabets.map(|e| ("alphabets".to_string(), e))) {
            cfg.set(&key, &value).map_err(|e| err(line, e.to_string()))?;
        }
        cfg.validate().map_err(|e| err(0, e.to_string()))?;
        Ok(cfg)
    }

    fn set(&mut self, key: &str, v: &str) -> Result<()> {
        match key {
            "kind" => self.kind = v.parse()?,
            "base" => self.base = num(key, v)?,
            "card" => self.card = num(key, v)?,
            "depth" => self.depth = num(key, v)?,
            "alphabets" => self.alphabets = Some(parse_alphabets(v, self.base)?),
            "seeds" => self.seeds = num(key, v)?,
            "epsilon" => self.epsilon = num(key, v)?,
            "xi_min" => self.xi_min = num(key, v)?,
            "xi_max" => self.xi_max = num(key, v)?,
            "per_window" => self.per_window = num(key, v)?,
            "j_min" => self.j_min = num(key, v)?,
            "j_max" => self.j_max = num(key, v)?,
            "points_per_wavelength" => self.grid.points_per_wavelength = num(key, v)?,
            "max_dimension" => self.grid.max_dimension = num(key, v)?,
            "svd_threshold" => self.grid.svd_threshold = num(key, v)?,
            "schur_samples" => self.schur_samples = num(key, v)?,
            "eta" => self.eta = list(key, v)?,
            "t_values" => self.t_values = list(key, v)?,
            "bernstein_t_values" => self.bernstein_t_values = list(key, v)?,
            "samples" => self.samples = num(key, v)?,
            "card_b" => self.card_b = num(key, v)?,
            "n_scale" => self.n_scale = num(key, v)?,
            "audit_samples" => self.audit_samples = num(key, v)?,
            "scale" => self.scale = v.parse()?,
            "workers" => self.workers = num(key, v)?,
            _ => unreachable!("key list and setter disagree on `{key}`"),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.experiment == Experiment::Verify {
            return Ok(());
        }
        self.grid.validate()?;
        if let Some(levels) = &self.alphabets {
            for level in levels {
                for a in level {
                    if a.base() != self.base || a.card() != self.card {
                        return Err(Error::InvalidParameter(format!(
                            "alphabet {a} does not match base = {} and card = {}",
                            self.base, self.card
                        )));
                    }
                }
            }
            if levels.len() != self.depth as usize {
                return Err(Error::InvalidParameter(format!(
                    "{} alphabet levels given for depth {}",
                    levels.len(),
                    self.depth
                )));
            }
        } else {
            self.ensemble(0).validate()?;
        }
        if self.j_min < 1 || self.j_min > self.j_max {
            return Err(Error::InvalidParameter(format!(
                "need 1 <= j_min <= j_max, got {}..{}",
                self.j_min, self.j_max
            )));
        }
        if !(self.xi_min > 0.0 && self.xi_min < self.xi_max) {
            return Err(Error::InvalidParameter("need 0 < xi_min < xi_max".into()));
        }
        if self.eta.is_empty() {
            return Err(Error::InvalidParameter("eta list is empty".into()));
        }
        Ok(())
    }

    /// Non-fatal issues, such as `epsilon` outside `(0, delta/2)`.
    pub fn warnings(&self) -> Vec<String> {
        let delta = hausdorff_dim(self.base, self.card);
        let mut out = Vec::new();
        let fup = matches!(
            self.experiment,
            Experiment::FupDiscrete | Experiment::FupMeasure | Experiment::FupNeighborhood
        );
        if fup && !(self.epsilon > 0.0 && self.epsilon < delta / 2.0) {
            out.push(format!(
                "epsilon = {} lies outside (0, delta/2) = (0, {:.6})",
                self.epsilon,
                delta / 2.0
            ));
        }
        out
    }

    pub fn ensemble(&self, ensemble_seed: u64) -> EnsembleSpec {
        EnsembleSpec {
            kind: self.kind,
            base: self.base,
            card: self.card,
            depth: self.depth,
            master_seed: ensemble_seed,
            limits: Limits {
                allow_full: true,
                ..Limits::default()
            },
        }
    }

    pub fn n_scale(&self) -> u128 {
        if self.n_scale == 0 {
            (self.base as u128).pow(2)
        } else {
            self.n_scale
        }
    }

    /// Every key with its value, one `key = value` line each, sorted by key.
    /// `workers` is left out: it never changes results.
    pub fn canonical(&self) -> String {
        let f = |v: &[f64]| v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(",");
        let mut kv: BTreeMap<&str, String> = BTreeMap::new();
        kv.insert("experiment", self.experiment.to_string());
        kv.insert("master_seed", self.master_seed.to_string());
        kv.insert("kind", self.kind.to_string());
        kv.insert("base", self.base.to_string());
        kv.insert("card", self.card.to_string());
        kv.insert("depth", self.depth.to_string());
        if let Some(levels) = &self.alphabets {
            kv.insert("alphabets", format_alphabets(levels));
        }
        kv.insert("seeds", self.seeds.to_string());
        kv.insert("epsilon", format!("{:?}", self.epsilon));
        kv.insert("xi_min", format!("{:?}", self.xi_min));
        kv.insert("xi_max", format!("{:?}", self.xi_max));
        kv.insert("per_window", self.per_window.to_string());
        kv.insert("j_min", self.j_min.to_string());
        kv.insert("j_max", self.j_max.to_string());
        kv.insert("points_per_wavelength", self.grid.points_per_wavelength.to_string());
        kv.insert("max_dimension", self.grid.max_dimension.to_string());
        kv.insert("svd_threshold", self.grid.svd_threshold.to_string());
        kv.insert("schur_samples", self.schur_samples.to_string());
        kv.insert("eta", f(&self.eta));
        kv.insert("t_values", f(&self.t_values));
        kv.insert("bernstein_t_values", f(&self.bernstein_t_values));
        kv.insert("samples", self.samples.to_string());
        kv.insert("card_b", self.card_b.to_string());
        kv.insert("n_scale", self.n_scale.to_string());
        kv.insert("audit_samples", self.audit_samples.to_string());
        kv.insert("scale", self.scale.to_string());
        kv.into_iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    /// SHA-256 of [`canonical`](Self::canonical), hex encoded.
    pub fn hash(&self) -> String {
        Sha256::digest(self.canonical().as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

const KEYS: &[&str] = &[
    "experiment",
    "master_seed",
    "kind",
    "base",
    "card",
    "depth",
    "alphabets",
    "seeds",
    "epsilon",
    "xi_min",
    "xi_max",
    "per_window",
    "j_min",
    "j_max",
    "points_per_wavelength",
    "max_dimension",
    "svd_threshold",
    "schur_samples",
    "eta",
    "t_values",
    "bernstein_t_values",
    "samples",
    "card_b",
    "n_scale",
    "audit_samples",
    "scale",
    "workers",
];

fn num<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::InvalidParameter(format!("invalid value `{v}` for `{key}`")))
}

fn list(key: &str, v: &str) -> Result<Vec<f64>> {
    v.split(',').map(|s| num(key, s.trim())).collect()
}

fn parse_alphabets(v: &str, base: u32) -> Result<Vec<Vec<Alphabet>>> {
    v.split(';')
        .map(|level| {
            level
                .split('|')
                .map(|node| {
                    let digits = node
                        .split(',')
                        .map(|d| num::<u32>("alphabets", d.trim()))
                        .collect::<Result<Vec<_>>>()?;
                    Alphabet::new(base, digits)
                })
                .collect()
        })
        .collect()
}

fn format_alphabets(levels: &[Vec<Alphabet>]) -> String {
    levels
        .iter()
        .map(|level| {
            level
                .iter()
                .map(|a| a.digits().iter().map(u32::to_string).collect::<Vec<_>>().join(","))
                .collect::<Vec<_>>()
                .join("|")
        })
        .collect::<Vec<_>>()
        .join(";")
}
