//! Run configuration: a TOML (or JSON) document with one optional block per
//! concern. Unknown keys are rejected everywhere.

use std::path::Path;

use catalysis_core::cascade::CascadeConfig;
use catalysis_core::fock::C64;
use catalysis_core::metrics::linspace;
use catalysis_core::optimizer::{NelderMeadOptions, OptimizationProblem, DEFAULT_RESTARTS, DEFAULT_SCAN_BUDGET};
use catalysis_core::realistic::ImperfectionParams;
use catalysis_core::targets::{TargetKind, TargetSpec};
use serde::{Deserialize, Deserializer, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("cannot parse config: {0}")]
    Parse(String),
    #[error("invalid config: {0}")]
    Invalid(String),
}

fn invalid(msg: impl std::fmt::Display) -> ConfigError {
    ConfigError::Invalid(msg.to_string())
}

/// Numbers may be written natively or as decimal strings (`"0.25"`).
#[derive(Deserialize)]
#[serde(untagged)]
enum Decimal {
    Float(f64),
    Int(i64),
    Text(String),
}

impl Decimal {
    fn value<E: serde::de::Error>(self) -> Result<f64, E> {
        match self {
            Decimal::Float(v) => Ok(v),
            Decimal::Int(v) => Ok(v as f64),
            Decimal::Text(s) => s
                .trim()
                .parse()
                .map_err(|_| E::custom(format!("`{s}` is not a decimal number"))),
        }
    }
}

fn decimal<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
    Decimal::deserialize(d)?.value()
}

fn opt_decimal<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
    Option::<Decimal>::deserialize(d)?.map(Decimal::value).transpose()
}

fn decimals<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
    Vec::<Decimal>::deserialize(d)?.into_iter().map(Decimal::value).collect()
}

fn opt_decimals<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Vec<f64>>, D::Error> {
    Option::<Vec<Decimal>>::deserialize(d)?
        .map(|v| v.into_iter().map(Decimal::value).collect())
        .transpose()
}

fn complex_pairs<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<[f64; 2]>, D::Error> {
    Vec::<[Decimal; 2]>::deserialize(d)?
        .into_iter()
        .map(|[re, im]| Ok([re.value()?, im.value()?]))
        .collect()
}

fn zero() -> f64 {
    0.0
}

#[derive(Clone, Debug, Default, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: Option<u64>,
    /// Fock-space cutoff override (photon number).
    #[serde(default)]
    pub cutoff: Option<usize>,
    #[serde(default)]
    pub threads: Option<usize>,
    #[serde(default)]
    pub cascade: Option<CascadeBlock>,
    #[serde(default)]
    pub target: Option<TargetBlock>,
    #[serde(default)]
    pub wigner: Option<WignerBlock>,
    #[serde(default)]
    pub realistic: Option<RealisticBlock>,
    #[serde(default)]
    pub optimizer: Option<OptimizerBlock>,
    #[serde(default)]
    pub scan: Option<ScanBlock>,
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct CascadeBlock {
    /// Mean photon number `|α|²` of the coherent input.
    #[serde(deserialize_with = "decimal")]
    pub alpha_sq: f64,
    /// Phase of `α` in radians.
    #[serde(default = "zero", deserialize_with = "decimal")]
    pub alpha_phase: f64,
    /// Power reflectivities `R_1..R_l`, each in [0, 1].
    #[serde(deserialize_with = "decimals")]
    pub reflectivities: Vec<f64>,
}

impl CascadeBlock {
    pub fn to_config(&self) -> Result<CascadeConfig, ConfigError> {
        if !(self.alpha_sq >= 0.0) || !self.alpha_sq.is_finite() {
            return Err(invalid(format!("cascade.alpha_sq = {} must be finite and >= 0", self.alpha_sq)));
        }
        let alpha = C64::from_polar(self.alpha_sq.sqrt(), self.alpha_phase);
        CascadeConfig::new(alpha, self.reflectivities.clone()).map_err(invalid)
    }
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum TargetBlock {
    /// Displaced Fock state `|n⟩`; the displacement follows the cascade output.
    Fock {
        n: usize,
        #[serde(default)]
        l: Option<usize>,
    },
    Lscs {
        g: usize,
        h: usize,
        /// `|γ|²` in photons.
        #[serde(deserialize_with = "decimal")]
        gamma_sq: f64,
        #[serde(default = "zero", deserialize_with = "decimal")]
        gamma_phase: f64,
        #[serde(default)]
        l: Option<usize>,
    },
    Fsns {
        /// `[re, im]` pairs, squared norm 1.
        #[serde(deserialize_with = "complex_pairs")]
        coefficients: Vec<[f64; 2]>,
        #[serde(default)]
        l: Option<usize>,
    },
    On {
        #[serde(deserialize_with = "decimal")]
        a: f64,
        #[serde(default = "zero", deserialize_with = "decimal")]
        a_phase: f64,
        n: usize,
        #[serde(default)]
        l: Option<usize>,
    },
    Cps {
        #[serde(deserialize_with = "decimal")]
        a: f64,
        #[serde(default = "zero", deserialize_with = "decimal")]
        a_phase: f64,
        #[serde(default)]
        l: Option<usize>,
    },
}

impl TargetBlock {
    /// Qudit order the target is matched at, if given.
    pub fn l(&self) -> Option<usize> {
        match self {
            TargetBlock::Fock { l, n } => Some(l.unwrap_or(*n)),
            TargetBlock::Lscs { l, .. }
            | TargetBlock::Fsns { l, .. }
            | TargetBlock::On { l, .. }
            | TargetBlock::Cps { l, .. } => *l,
        }
    }

    pub fn to_spec(&self, cutoff: usize) -> Result<TargetSpec, ConfigError> {
        let kind = match self {
            TargetBlock::Fock { n, .. } => TargetKind::Fock { n: *n, displacement: C64::new(0.0, 0.0) },
            TargetBlock::Lscs { g, h, gamma_sq, gamma_phase, .. } => {
                if !(*gamma_sq >= 0.0) {
                    return Err(invalid("target.gamma_sq must be >= 0"));
                }
                TargetKind::Lscs { g: *g, h: *h, gamma: C64::from_polar(gamma_sq.sqrt(), *gamma_phase) }
            }
            TargetBlock::Fsns { coefficients, .. } => TargetKind::Fsns {
                coefficients: coefficients.iter().map(|[re, im]| C64::new(*re, *im)).collect(),
            },
            TargetBlock::On { a, a_phase, n, .. } => TargetKind::On { a: C64::from_polar(*a, *a_phase), n: *n },
            TargetBlock::Cps { a, a_phase, .. } => TargetKind::Cps { a: C64::from_polar(*a, *a_phase) },
        };
        TargetSpec::new(kind, cutoff).map_err(invalid)
    }
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct WignerBlock {
    /// Phase-space coordinates are `β = x + i p` (vacuum variance 1/4).
    #[serde(deserialize_with = "decimal")]
    pub x_min: f64,
    #[serde(deserialize_with = "decimal")]
    pub x_max: f64,
    pub x_points: usize,
    #[serde(deserialize_with = "decimal")]
    pub p_min: f64,
    #[serde(deserialize_with = "decimal")]
    pub p_max: f64,
    pub p_points: usize,
}

impl WignerBlock {
    pub fn axes(&self) -> Result<(Vec<f64>, Vec<f64>), ConfigError> {
        for (name, lo, hi, n) in [
            ("x", self.x_min, self.x_max, self.x_points),
            ("p", self.p_min, self.p_max, self.p_points),
        ] {
            if n == 0 || !(lo <= hi) {
                return Err(invalid(format!("wigner.{name} range must have min <= max and >= 1 point")));
            }
        }
        Ok((linspace(self.x_min, self.x_max, self.x_points), linspace(self.p_min, self.p_max, self.p_points)))
    }
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RealisticBlock {
    /// Detector efficiency, dimensionless in [0, 1].
    #[serde(deserialize_with = "decimal")]
    pub eta_d: f64,
    /// Explicit source efficiencies; overrides the min/max/points range.
    #[serde(default, deserialize_with = "opt_decimals")]
    pub eta_s: Option<Vec<f64>>,
    #[serde(default, deserialize_with = "opt_decimal")]
    pub eta_s_min: Option<f64>,
    #[serde(default, deserialize_with = "opt_decimal")]
    pub eta_s_max: Option<f64>,
    #[serde(default)]
    pub eta_s_points: Option<usize>,
    #[serde(default)]
    pub povm_terms: Option<usize>,
}

impl RealisticBlock {
    pub fn eta_s_values(&self) -> Result<Vec<f64>, ConfigError> {
        let values = match (&self.eta_s, self.eta_s_min, self.eta_s_max, self.eta_s_points) {
            (Some(v), None, None, None) => v.clone(),
            (None, Some(lo), Some(hi), Some(n)) if n >= 1 && lo <= hi => linspace(lo, hi, n),
            _ => {
                return Err(invalid(
                    "realistic needs either eta_s = [...] or eta_s_min, eta_s_max and eta_s_points",
                ))
            }
        };
        for v in std::iter::once(self.eta_d).chain(values.iter().copied()) {
            ImperfectionParams::new(self.eta_d, v, self.povm_terms).map_err(invalid)?;
        }
        Ok(values)
    }
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct OptimizerBlock {
    pub l: usize,
    #[serde(default)]
    pub restarts: Option<usize>,
    #[serde(default)]
    pub max_evals: Option<usize>,
    /// Warm-start values for the leading reflectivities.
    #[serde(default, deserialize_with = "opt_decimals")]
    pub reflectivity_prefix: Option<Vec<f64>>,
}

impl OptimizerBlock {
    pub fn problem(&self, target: &TargetSpec, seed: u64) -> Result<OptimizationProblem, ConfigError> {
        let pnd = target.qudit_pnd(self.l).map_err(invalid)?;
        let amps = target.qudit_amplitudes(self.l).map_err(invalid)?;
        let mut p = OptimizationProblem::new(self.l, pnd)
            .map_err(invalid)?
            .with_seed(seed)
            .with_restarts(self.restarts.unwrap_or(DEFAULT_RESTARTS))
            .with_reflectivity_prefix(self.reflectivity_prefix.clone().unwrap_or_default());
        if !matches!(target.kind, TargetKind::Fock { .. }) {
            p = p.with_target_amplitudes(amps);
        }
        if let Some(m) = self.max_evals {
            p.local = NelderMeadOptions { max_evals: m, ..p.local };
        }
        if p.restarts == 0 {
            return Err(invalid("optimizer.restarts must be >= 1"));
        }
        p.validate().map_err(invalid)?;
        Ok(p)
    }
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ScanBlock {
    pub l: usize,
    /// Range of `|α|` (not `|α|²`).
    #[serde(deserialize_with = "decimal")]
    pub alpha_min: f64,
    #[serde(deserialize_with = "decimal")]
    pub alpha_max: f64,
    pub alpha_points: usize,
    #[serde(default = "zero", deserialize_with = "decimal")]
    pub r_min: f64,
    #[serde(default = "one", deserialize_with = "decimal")]
    pub r_max: f64,
    pub r_points: usize,
    #[serde(default)]
    pub budget: Option<u64>,
}

fn one() -> f64 {
    1.0
}

impl ScanBlock {
    pub fn grids(&self) -> Result<(Vec<f64>, Vec<f64>, u64), ConfigError> {
        if self.alpha_points == 0 || self.r_points == 0 || !(self.alpha_min <= self.alpha_max) || !(self.r_min <= self.r_max) {
            return Err(invalid("scan ranges must have min <= max and >= 1 point"));
        }
        Ok((
            linspace(self.alpha_min, self.alpha_max, self.alpha_points),
            linspace(self.r_min, self.r_max, self.r_points),
            self.budget.unwrap_or(DEFAULT_SCAN_BUDGET),
        ))
    }
}

impl RunConfig {
    /// TOML, or JSON when the document starts with `{`.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        if text.trim_start().starts_with('{') {
            serde_json::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))
        } else {
            toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))
        }
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn cascade(&self) -> Result<CascadeConfig, ConfigError> {
        self.cascade
            .as_ref()
            .ok_or_else(|| invalid("missing [cascade] block"))?
            .to_config()
    }

    pub fn target_block(&self) -> Result<&TargetBlock, ConfigError> {
        self.target.as_ref().ok_or_else(|| invalid("missing [target] block"))
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_with_decimal_strings() {
        let c = RunConfig::parse(
            r#"
            seed = 3
            [cascade]
            alpha_sq = "5.0"
            reflectivities = ["0.5", 0.8]
            [target]
            kind = "fock"
            n = 2
            "#,
        )
        .unwrap();
        let cascade = c.cascade.as_ref().unwrap();
        assert_eq!(cascade.alpha_sq, 5.0);
        assert_eq!(cascade.reflectivities, vec![0.5, 0.8]);
        assert_eq!(c.target_block().unwrap().l(), Some(2));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(RunConfig::parse("sed = 1").is_err());
        assert!(RunConfig::parse("[cascade]\nalpha_sq = 1\nreflectivities = [0.5]\nbeta = 2").is_err());
        assert!(RunConfig::parse("[target]\nkind = \"cps\"\na = 0.5\nn = 3").is_err());
    }

    #[test]
    fn json_round_trip() {
        let c = RunConfig::parse("[cascade]\nalpha_sq = 2\nreflectivities = [0.5]").unwrap();
        let json = serde_json::to_string(&c).unwrap();
        assert_eq!(RunConfig::parse(&json).unwrap(), c);
    }

    #[test]
    fn validation() {
        let c = RunConfig::parse("[cascade]\nalpha_sq = 2\nreflectivities = [1.5]").unwrap();
        assert!(matches!(c.cascade(), Err(ConfigError::Invalid(_))));
        assert!(RunConfig::parse("[cascade]\nalpha_sq = \"two\"\nreflectivities = []").is_err());
        let r = RealisticBlock {
            eta_d: 0.98,
            eta_s: None,
            eta_s_min: Some(0.9),
            eta_s_max: Some(1.0),
            eta_s_points: Some(11),
            povm_terms: None,
        };
        assert_eq!(r.eta_s_values().unwrap().len(), 11);
    }
}
