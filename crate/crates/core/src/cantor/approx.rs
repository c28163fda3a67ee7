use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::alphabet::{sample_alphabet, Alphabet};
use crate::seed;
use crate::{Error, Result};

/// Which random procedure picks the alphabets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EnsembleKind {
    /// One alphabet used at every level.
    I,
    /// One fresh alphabet per level.
    II,
    /// One fresh alphabet per surviving interval per level.
    III,
}

impl fmt::Display for EnsembleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EnsembleKind::I => "I",
            EnsembleKind::II => "II",
            EnsembleKind::III => "III",
        })
    }
}

impl FromStr for EnsembleKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "I" | "i" | "1" => Ok(EnsembleKind::I),
            "II" | "ii" | "2" => Ok(EnsembleKind::II),
            "III" | "iii" | "3" => Ok(EnsembleKind::III),
            other => Err(Error::InvalidParameter(format!(
                "unknown ensemble kind `{other}`"
            ))),
        }
    }
}

/// Size caps for a construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Limits {
    /// Upper bound on `A^j`.
    pub max_points: u64,
    /// Upper bound on `log2(M^j)`.
    pub max_bits: u32,
    /// Permit `A = M`, where the fluctuation function vanishes identically.
    pub allow_full: bool,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            max_points: 1 << 20,
            max_bits: 120,
            allow_full: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EnsembleSpec {
    pub kind: EnsembleKind,
    pub base: u32,
    pub card: u32,
    pub depth: u32,
    pub master_seed: u64,
    pub limits: Limits,
}

impl EnsembleSpec {
    pub fn new(kind: EnsembleKind, base: u32, card: u32, depth: u32, master_seed: u64) -> Self {
        EnsembleSpec {
            kind,
            base,
            card,
            depth,
            master_seed,
            limits: Limits::default(),
        }
    }

    pub fn with_depth(&self, depth: u32) -> Self {
        EnsembleSpec {
            depth,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.base < 2 {
            return Err(Error::InvalidParameter(format!(
                "M must be at least 2, got {}",
                self.base
            )));
        }
        if self.card < 1 || self.card > self.base {
            return Err(Error::InvalidParameter(format!(
                "A must lie in [1, M], got A={} M={}",
                self.card, self.base
            )));
        }
        if self.card == self.base && !self.limits.allow_full {
            return Err(Error::InvalidParameter(
                "A = M makes the construction trivial; set allow_full to override".into(),
            ));
        }
        if self.depth < 1 {
            return Err(Error::InvalidParameter("depth must be at least 1".into()));
        }
        check_caps(self.base, self.card, self.depth, &self.limits)
    }
}

pub(crate) fn check_caps(base: u32, card: u32, depth: u32, limits: &Limits) -> Result<()> {
    let points = (card as u128).checked_pow(depth);
    if points.is_none_or(|p| p > limits.max_points as u128) {
        return Err(Error::resource(
            "A^depth",
            points.map_or_else(|| "overflow".into(), |p| p.to_string()),
            limits.max_points,
        ));
    }
    let denom = (base as u128).checked_pow(depth);
    let bits = denom.map(|d| 128 - (d - 1).leading_zeros());
    if bits.is_none_or(|b| b > limits.max_bits) {
        return Err(Error::resource(
            "depth*log2(M)",
            bits.map_or_else(|| "overflow".into(), |b| b.to_string()),
            limits.max_bits,
        ));
    }
    Ok(())
}

/// Alphabets used at one refinement level.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LevelAlphabets {
    /// Every parent point uses the same alphabet (ensembles I and II).
    Shared(Alphabet),
    /// One alphabet per parent point, aligned with the sorted parent numerators.
    PerNode(Vec<Alphabet>),
}

/// The depth-`j` point set `B_j`, stored as exact numerators over `M^j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CantorApprox {
    base: u32,
    card: u32,
    depth: u32,
    kind: EnsembleKind,
    master_seed: Option<u64>,
    numerators: Vec<u128>,
    levels: Vec<LevelAlphabets>,
}

impl CantorApprox {
    /// Depth-0 approximation: the single point 0 and the interval `[0, 1]`.
    pub fn root(base: u32, card: u32, kind: EnsembleKind) -> Result<Self> {
        if base < 2 || card < 1 || card > base {
            return Err(Error::InvalidParameter(format!(
                "invalid (M, A) = ({base}, {card})"
            )));
        }
        Ok(CantorApprox {
            base,
            card,
            depth: 0,
            kind,
            master_seed: None,
            numerators: vec![0],
            levels: Vec::new(),
        })
    }

    /// Builds `B_j` from an explicit per-level alphabet list (ensembles I/II).
    pub fn from_level_alphabets(kind: EnsembleKind, levels: &[Alphabet]) -> Result<Self> {
        let first = levels
            .first()
            .ok_or_else(|| Error::InvalidArgument("at least one level is required".into()))?;
        if kind == EnsembleKind::I && levels.iter().any(|a| a != first) {
            return Err(Error::InvalidArgument(
                "ensemble I uses a single alphabet at every level".into(),
            ));
        }
        let mut approx = CantorApprox::root(first.base(), first.card(), kind)?;
        for a in levels {
            approx = refine_shared(&approx, a)?;
        }
        Ok(approx)
    }

    /// Rebuilds an approximation from its numerators, recovering the
    /// per-node alphabets and checking every structural invariant.
    pub fn from_numerators(
        base: u32,
        card: u32,
        depth: u32,
        kind: EnsembleKind,
        master_seed: Option<u64>,
        numerators: Vec<u128>,
    ) -> Result<Self> {
        let mut approx = CantorApprox::root(base, card, kind)?;
        check_caps(
            base,
            card,
            depth,
            &Limits {
                max_points: u64::MAX,
                ..Limits::default()
            },
        )?;
        if numerators.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument(
                "numerators must be strictly increasing".into(),
            ));
        }
        let mut per_level: Vec<Vec<u128>> = vec![numerators];
        for _ in 0..depth {
            let mut up: Vec<u128> = per_level.last().unwrap().iter().map(|n| n / base as u128).collect();
            up.dedup();
            per_level.push(up);
        }
        if per_level.last().unwrap() != &[0] {
            return Err(Error::InvalidArgument(format!(
                "numerators are not all below {base}^{depth}"
            )));
        }
        for level in 1..=depth {
            let parent = &per_level[(depth - level + 1) as usize];
            let child = &per_level[(depth - level) as usize];
            let mut map = BTreeMap::new();
            let mut idx = 0;
            for &p in parent {
                let mut digits = Vec::new();
                while idx < child.len() && child[idx] / base as u128 == p {
                    digits.push((child[idx] % base as u128) as u32);
                    idx += 1;
                }
                map.insert(p, Alphabet::new(base, digits)?);
            }
            let shared = {
                let first = map.values().next().unwrap();
                map.values().all(|a| a == first).then(|| first.clone())
            };
            approx = match shared {
                Some(a) if kind != EnsembleKind::III || level == 1 => refine_shared(&approx, &a)?,
                None if kind != EnsembleKind::III => {
                    return Err(Error::InvalidArgument(format!(
                        "ensemble {kind} needs one alphabet per level, level {level} varies by node"
                    )))
                }
                _ => refine(&approx, &map)?,
            };
        }
        if kind == EnsembleKind::I {
            if let Some(a) = approx.level_alphabets().first() {
                if approx.level_alphabets().iter().any(|l| l != a) {
                    return Err(Error::InvalidArgument(
                        "ensemble I numerators must use one alphabet at every level".into(),
                    ));
                }
            }
        }
        approx.master_seed = master_seed;
        Ok(approx)
    }

    pub fn base(&self) -> u32 {
        self.base
    }

    pub fn card(&self) -> u32 {
        self.card
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn kind(&self) -> EnsembleKind {
        self.kind
    }

    pub fn master_seed(&self) -> Option<u64> {
        self.master_seed
    }

    pub fn numerators(&self) -> &[u128] {
        &self.numerators
    }

    pub fn len(&self) -> usize {
        self.numerators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.numerators.is_empty()
    }

    /// `M^j`.
    pub fn denominator(&self) -> u128 {
        (self.base as u128).pow(self.depth)
    }

    /// Side length `M^{-j}` of each interval of `C_j`.
    pub fn cell(&self) -> f64 {
        (self.base as f64).powi(-(self.depth as i32))
    }

    pub fn points(&self) -> Vec<f64> {
        let d = self.denominator() as f64;
        self.numerators.iter().map(|&n| n as f64 / d).collect()
    }

    pub fn levels(&self) -> &[LevelAlphabets] {
        &self.levels
    }

    /// Per-level alphabets when every level is shared (ensembles I and II).
    pub fn shared_alphabets(&self) -> Option<Vec<&Alphabet>> {
        self.levels
            .iter()
            .map(|l| match l {
                LevelAlphabets::Shared(a) => Some(a),
                LevelAlphabets::PerNode(_) => None,
            })
            .collect()
    }

    fn level_alphabets(&self) -> Vec<&Alphabet> {
        self.shared_alphabets().unwrap_or_default()
    }

    /// The depth-`(j-1)` truncation `n div M`, with provenance for the first
    /// `j-1` levels.
    pub fn parent(&self) -> Option<CantorApprox> {
        if self.depth == 0 {
            return None;
        }
        let mut numerators: Vec<u128> =
            self.numerators.iter().map(|n| n / self.base as u128).collect();
        numerators.dedup();
        Some(CantorApprox {
            depth: self.depth - 1,
            numerators,
            levels: self.levels[..self.levels.len() - 1].to_vec(),
            ..self.clone()
        })
    }

    /// Truncation to `depth` levels.
    pub fn prefix(&self, depth: u32) -> Result<CantorApprox> {
        if depth > self.depth {
            return Err(Error::InvalidArgument(format!(
                "cannot extend depth {} to {depth} by truncation",
                self.depth
            )));
        }
        let mut out = self.clone();
        while out.depth > depth {
            out = out.parent().expect("positive depth has a parent");
        }
        Ok(out)
    }

    /// Alphabets used for the last refinement, keyed by parent numerator.
    pub fn last_level_map(&self) -> Option<BTreeMap<u128, Alphabet>> {
        let parent = self.parent()?;
        let level = self.levels.last()?;
        Some(
            parent
                .numerators
                .iter()
                .enumerate()
                .map(|(i, &p)| {
                    let a = match level {
                        LevelAlphabets::Shared(a) => a.clone(),
                        LevelAlphabets::PerNode(v) => v[i].clone(),
                    };
                    (p, a)
                })
                .collect(),
        )
    }

    /// JSON document `{A, M, j, kind, master_seed, numerators}`; numerators
    /// are decimal strings since they can exceed 64 bits.
    pub fn to_json(&self) -> Value {
        json!({
            "M": self.base,
            "A": self.card,
            "j": self.depth,
            "kind": self.kind.to_string(),
            "master_seed": self.master_seed,
            "numerators": self.numerators.iter().map(|n| n.to_string()).collect::<Vec<_>>(),
        })
    }

    pub fn from_json(value: &Value) -> Result<Self> {
        let field = |k: &str| {
            value
                .get(k)
                .ok_or_else(|| Error::InvalidArgument(format!("missing field `{k}`")))
        };
        let as_u32 = |k: &str| -> Result<u32> {
            field(k)?
                .as_u64()
                .and_then(|v| u32::try_from(v).ok())
                .ok_or_else(|| Error::InvalidArgument(format!("field `{k}` must be a u32")))
        };
        let kind: EnsembleKind = field("kind")?
            .as_str()
            .ok_or_else(|| Error::InvalidArgument("field `kind` must be a string".into()))?
            .parse()?;
        let master_seed = match field("master_seed")? {
            Value::Null => None,
            v => Some(v.as_u64().ok_or_else(|| {
                Error::InvalidArgument("field `master_seed` must be a u64 or null".into())
            })?),
        };
        let numerators = field("numerators")?
            .as_array()
            .ok_or_else(|| Error::InvalidArgument("field `numerators` must be an array".into()))?
            .iter()
            .map(|v| {
                v.as_str()
                    .and_then(|s| s.parse::<u128>().ok())
                    .ok_or_else(|| Error::InvalidArgument(format!("bad numerator {v}")))
            })
            .collect::<Result<Vec<_>>>()?;
        CantorApprox::from_numerators(
            as_u32("M")?,
            as_u32("A")?,
            as_u32("j")?,
            kind,
            master_seed,
            numerators,
        )
    }
}

/// One refinement step with a single alphabet for every parent point.
pub fn refine_shared(parent: &CantorApprox, alphabet: &Alphabet) -> Result<CantorApprox> {
    check_alphabet(parent, alphabet)?;
    let m = parent.base as u128;
    let numerators = parent
        .numerators
        .iter()
        .flat_map(|&n| alphabet.digits().iter().map(move |&a| n * m + a as u128))
        .collect();
    let mut levels = parent.levels.clone();
    levels.push(LevelAlphabets::Shared(alphabet.clone()));
    Ok(CantorApprox {
        depth: parent.depth + 1,
        numerators,
        levels,
        ..parent.clone()
    })
}

/// One refinement step: child numerators are `n*M + a` for `a` in the
/// alphabet attached to parent numerator `n`.
pub fn refine(parent: &CantorApprox, alphabets: &BTreeMap<u128, Alphabet>) -> Result<CantorApprox> {
    if alphabets.len() != parent.numerators.len() {
        return Err(Error::InvalidArgument(format!(
            "expected {} alphabets, got {}",
            parent.numerators.len(),
            alphabets.len()
        )));
    }
    let per_node = parent
        .numerators
        .iter()
        .map(|n| {
            let a = alphabets.get(n).ok_or_else(|| {
                Error::InvalidArgument(format!("no alphabet for parent numerator {n}"))
            })?;
            check_alphabet(parent, a)?;
            Ok(a.clone())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(refine_per_node(parent, per_node))
}

fn refine_per_node(parent: &CantorApprox, per_node: Vec<Alphabet>) -> CantorApprox {
    let m = parent.base as u128;
    let numerators = parent
        .numerators
        .iter()
        .zip(&per_node)
        .flat_map(|(&n, a)| a.digits().iter().map(move |&d| n * m + d as u128))
        .collect();
    let level = if parent.depth == 0 {
        LevelAlphabets::Shared(per_node.into_iter().next().unwrap())
    } else {
        LevelAlphabets::PerNode(per_node)
    };
    let mut levels = parent.levels.clone();
    levels.push(level);
    CantorApprox {
        depth: parent.depth + 1,
        numerators,
        levels,
        ..parent.clone()
    }
}

fn check_alphabet(parent: &CantorApprox, a: &Alphabet) -> Result<()> {
    if a.base() != parent.base || a.card() != parent.card {
        return Err(Error::InvalidArgument(format!(
            "alphabet {a} (M={}, A={}) does not match approximation (M={}, A={})",
            a.base(),
            a.card(),
            parent.base,
            parent.card
        )));
    }
    Ok(())
}

/// Builds a random approximation. Level `l` alphabets come from the stream
/// keyed by `(master_seed, l, parent numerator)` (parent 0 for the shared
/// kinds), so deeper builds extend shallower ones along the same sample path.
pub fn build_cantor(spec: &EnsembleSpec) -> Result<CantorApprox> {
    spec.validate()?;
    let (m, a, seed) = (spec.base, spec.card, spec.master_seed);
    let draw = |level: u32, parent: u128| {
        sample_alphabet(m, a, &mut seed::node_stream(seed, level, parent))
            .expect("validated alphabet size")
    };
    let mut approx = CantorApprox::root(m, a, spec.kind)?;
    approx.master_seed = Some(seed);
    let first = draw(1, 0);
    for level in 1..=spec.depth {
        approx = match spec.kind {
            EnsembleKind::I => refine_shared(&approx, &first)?,
            EnsembleKind::II => refine_shared(&approx, &draw(level, 0))?,
            EnsembleKind::III if level == 1 => refine_shared(&approx, &first)?,
            EnsembleKind::III => {
                let per_node: Vec<Alphabet> = approx
                    .numerators
                    .par_iter()
                    .map(|&n| draw(level, n))
                    .collect();
                refine_per_node(&approx, per_node)
            }
        };
    }
    Ok(approx)
}

pub fn hausdorff_dim(base: u32, card: u32) -> f64 {
    (card as f64).ln() / (base as f64).ln()
}
