//! Experiment configuration files (TOML, `schema_version = 1`).

use std::path::Path;

use serde::Deserialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::family::{
    all_subsets_of_size, blocked_family, small_weight, subsets_within, BlockStructure, SetFamily,
    WeightedFamily,
};
use crate::matrix::ProductSpec;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    /// Master seed; `--seed` overrides it.
    #[serde(default)]
    pub seed: u64,
    /// Cap on the exact-engine cost estimate.
    #[serde(default = "default_budget")]
    pub budget: u64,
    #[serde(default)]
    pub method: MethodChoice,
    #[serde(default)]
    pub tolerances: Tolerances,
    pub verify_eq1: Option<SecondMomentConfig>,
    pub scaling_sweep: Option<SweepConfig>,
    pub counting_bounds: Option<CountingConfig>,
    pub mc_vs_exact: Option<McVsExactConfig>,
    pub weighted_sum_sweep: Option<WeightedSumConfig>,
}

fn default_budget() -> u64 {
    100_000_000
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodChoice {
    /// Exact when within budget, otherwise Monte Carlo.
    #[default]
    Auto,
    Exact,
    Mc,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Relative tolerance for exact identities.
    pub relative: f64,
    /// Monte Carlo assertions allow this many standard errors.
    pub stderr_multiple: f64,
    /// Boundedness rule: every ratio <= slack * max(first two ratios).
    pub slack: f64,
    /// Fewer trials than this skip Monte Carlo assertions.
    pub min_trials: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            relative: 1e-9,
            stderr_multiple: 4.0,
            slack: 1.5,
            min_trials: 30,
        }
    }
}

/// Family generators, evaluated at a given dimension.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FamilyDescriptor {
    AllSize {
        sizes: Vec<usize>,
    },
    SubsetsWithin {
        coords: Vec<usize>,
        sizes: Vec<usize>,
    },
    Blocked {
        exponents: Vec<f64>,
        sizes: Vec<usize>,
    },
    Explicit {
        members: Vec<Vec<usize>>,
    },
}

/// A family together with the degree used in scales and weight rules.
#[derive(Debug, Clone)]
pub struct BuiltFamily {
    pub family: SetFamily,
    /// Effective degree for blocked families, degree bound otherwise.
    pub degree: f64,
    pub naive_degree: usize,
}

impl FamilyDescriptor {
    pub fn build(&self, d: usize) -> Result<BuiltFamily> {
        let plain = |family: SetFamily| {
            let p = family.degree_bound();
            BuiltFamily {
                family,
                degree: p as f64,
                naive_degree: p,
            }
        };
        match self {
            FamilyDescriptor::AllSize { sizes } => Ok(plain(all_subsets_of_size(d, sizes)?)),
            FamilyDescriptor::SubsetsWithin { coords, sizes } => {
                Ok(plain(subsets_within(d, coords, sizes)?))
            }
            FamilyDescriptor::Explicit { members } => {
                Ok(plain(SetFamily::from_index_lists(d, members)?))
            }
            FamilyDescriptor::Blocked { exponents, sizes } => {
                let structure = BlockStructure::from_exponents(d, exponents, sizes)?;
                let b = blocked_family(&structure, sizes)?;
                Ok(BuiltFamily {
                    family: b.family,
                    degree: b.effective_degree,
                    naive_degree: b.naive_degree,
                })
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case", deny_unknown_fields)]
pub enum WeightRule {
    /// `c · min(n^{-1/2}, d^{-p/2})` with `p` the family degree.
    Small {
        #[serde(default = "one")]
        constant: f64,
    },
    Constant {
        value: f64,
    },
    InverseSqrtN,
}

fn one() -> f64 {
    1.0
}

impl Default for WeightRule {
    fn default() -> Self {
        WeightRule::Small { constant: 1.0 }
    }
}

impl WeightRule {
    pub fn weight(&self, n: usize, d: usize, degree: f64) -> f64 {
        match *self {
            WeightRule::Small { constant } => small_weight(n, d, degree, constant),
            WeightRule::Constant { value } => value,
            WeightRule::InverseSqrtN => 1.0 / (n as f64).sqrt(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PositionConfig {
    pub family: FamilyDescriptor,
    #[serde(default)]
    pub weight: WeightRule,
}

/// Sample size as a function of `d`.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case", deny_unknown_fields)]
pub enum SampleRule {
    /// `n = round(coefficient · d^exponent)`.
    Power {
        #[serde(default = "one")]
        coefficient: f64,
        exponent: f64,
    },
    Fixed {
        value: usize,
    },
    /// One value per schedule entry.
    List {
        values: Vec<usize>,
    },
}

impl Default for SampleRule {
    fn default() -> Self {
        SampleRule::Power {
            coefficient: 1.0,
            exponent: 3.0,
        }
    }
}

impl SampleRule {
    pub fn n_at(&self, index: usize, d: usize) -> Result<usize> {
        let n = match self {
            SampleRule::Power {
                coefficient,
                exponent,
            } => (coefficient * (d as f64).powf(*exponent)).round(),
            SampleRule::Fixed { value } => *value as f64,
            SampleRule::List { values } => *values
                .get(index)
                .ok_or_else(|| Error::Config(format!("no sample size for schedule entry {index}")))?
                as f64,
        };
        if !(n >= 1.0 && n < 9.0e15) {
            return Err(Error::Config(format!("sample size {n} at d = {d} is out of range")));
        }
        Ok(n as usize)
    }

    /// The exponent `α` when `n = c·d^α`.
    pub fn exponent(&self) -> Option<f64> {
        match self {
            SampleRule::Power { exponent, .. } => Some(*exponent),
            _ => None,
        }
    }
}

/// Builds the chain at dimension `d` and sample size `n`.
pub fn build_chain(positions: &[PositionConfig], n: usize, d: usize) -> Result<(ProductSpec, Vec<BuiltFamily>)> {
    let built = positions
        .iter()
        .map(|p| p.family.build(d))
        .collect::<Result<Vec<_>>>()?;
    let chain = built
        .iter()
        .zip(positions)
        .map(|(b, p)| WeightedFamily::uniform(b.family.clone(), p.weight.weight(n, d, b.degree)))
        .collect::<Result<Vec<_>>>()?;
    Ok((ProductSpec::new(n, chain)?, built))
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SecondMomentConfig {
    pub cases: Vec<SecondMomentCase>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SecondMomentCase {
    pub d: usize,
    pub n: Vec<usize>,
    pub s: FamilyDescriptor,
    pub s_prime: FamilyDescriptor,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub schedule: Vec<usize>,
    #[serde(default)]
    pub n: SampleRule,
    pub chain: Vec<PositionConfig>,
    /// 1-based middle index; defaults to the qualifying position of
    /// smallest degree.
    pub j: Option<usize>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    /// Allow Monte Carlo when the exact engine is over budget.
    #[serde(default = "yes")]
    pub mc_fallback: bool,
}

fn default_trials() -> usize {
    2000
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CountingConfig {
    #[serde(default = "four")]
    pub d_max: usize,
    #[serde(default = "four")]
    pub q_max: usize,
    /// Largest total `p` for `m_p` and largest `‖p‖₁` for the constrained sets.
    #[serde(default = "six")]
    pub p_max: usize,
    /// Skip the constrained grid (only `m_p` and the recursion).
    #[serde(default)]
    pub mp_only: bool,
}

fn four() -> usize {
    4
}

fn six() -> usize {
    6
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McVsExactConfig {
    pub d: usize,
    pub n: usize,
    pub chain: Vec<PositionConfig>,
    pub trials: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SumShape {
    /// `Σ b_{S_q} E[x^{S_1} .. x^{S_q}]`.
    BSum,
    /// As `BSum` with the target monomial appended.
    BSumTarget,
    /// `Σ a_{S_{q-1}} b_{S_q} E[x^{S_1} .. x^{S_q}]`.
    AbSum,
    /// As `AbSum` with the target monomial appended.
    AbSumTarget,
}

impl SumShape {
    pub const ALL: [SumShape; 4] = [SumShape::BSum, SumShape::BSumTarget, SumShape::AbSum, SumShape::AbSumTarget];

    pub fn name(self) -> &'static str {
        match self {
            SumShape::BSum => "b_sum",
            SumShape::BSumTarget => "b_sum_target",
            SumShape::AbSum => "ab_sum",
            SumShape::AbSumTarget => "ab_sum_target",
        }
    }

    pub fn uses_a(self) -> bool {
        matches!(self, SumShape::AbSum | SumShape::AbSumTarget)
    }

    pub fn uses_target(self) -> bool {
        matches!(self, SumShape::BSumTarget | SumShape::AbSumTarget)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightedSumConfig {
    pub schedule: Vec<usize>,
    pub families: Vec<FamilyDescriptor>,
    /// Coordinates of the target monomial.
    #[serde(default)]
    pub target: Vec<usize>,
    #[serde(default = "all_shapes")]
    pub shapes: Vec<SumShape>,
    /// Random weight vectors averaged per point.
    #[serde(default = "sixteen")]
    pub draws: usize,
    /// `random` (nonnegative, unit norm), `uniform` (unit norm) or `zero`.
    #[serde(default)]
    pub weights: SumWeights,
}

fn all_shapes() -> Vec<SumShape> {
    SumShape::ALL.to_vec()
}

fn sixteen() -> usize {
    16
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SumWeights {
    #[default]
    Random,
    Uniform,
    Zero,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        if cfg.schema_version != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                cfg.schema_version
            )));
        }
        let t = &cfg.tolerances;
        if !(t.relative > 0.0 && t.stderr_multiple > 0.0 && t.slack >= 1.0) {
            return Err(Error::Config("tolerances must be positive and slack >= 1".into()));
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<(Self, String)> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let cfg = Self::from_toml(&text)?;
        Ok((cfg, config_hash(&text)))
    }
}

/// Hex SHA-256 of the configuration text.
pub fn config_hash(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_full_config() {
        let cfg = ExperimentConfig::from_toml(
            r#"
schema_version = 1
seed = 7

[scaling_sweep]
schedule = [4, 6]
n = { rule = "power", exponent = 3.0 }

[[scaling_sweep.chain]]
family = { kind = "all_size", sizes = [1] }

[[scaling_sweep.chain]]
family = { kind = "blocked", exponents = [1.0, 0.5], sizes = [1, 1] }
weight = { rule = "small", constant = 2.0 }

[[scaling_sweep.chain]]
family = { kind = "explicit", members = [[0], [1]] }
weight = { rule = "inverse_sqrt_n" }
"#,
        )
        .unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.budget, 100_000_000);
        let sweep = cfg.scaling_sweep.unwrap();
        assert_eq!(sweep.chain.len(), 3);
        assert_eq!(sweep.chain[1].weight, WeightRule::Small { constant: 2.0 });
        assert_eq!(sweep.n.n_at(0, 4).unwrap(), 64);
        let b = sweep.chain[1].family.build(16).unwrap();
        assert_eq!(b.degree, 1.5);
        assert_eq!(b.naive_degree, 2);
        assert_eq!(b.family.len(), 12 * 4);
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(matches!(ExperimentConfig::from_toml("schema_version = 2"), Err(Error::Config(_))));
        assert!(matches!(ExperimentConfig::from_toml("seed = 1"), Err(Error::Config(_))));
        assert!(matches!(
            ExperimentConfig::from_toml("schema_version = 1\nunknown = 3"),
            Err(Error::Config(_))
        ));
        assert!(ExperimentConfig::from_toml("schema_version = 1\n[tolerances]\nslack = 0.5").is_err());
        assert!(SampleRule::List { values: vec![4] }.n_at(1, 4).is_err());
    }
}
