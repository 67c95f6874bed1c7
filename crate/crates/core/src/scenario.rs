//! Scenario files: a flat TOML description of the hypothesis class, the
//! target, the players, the algorithm variant, and every tunable constant,
//! validated up front and materialized into protocol inputs.
//!
//! All numeric fields are decimal. Example:
//!
//! ```toml
//! algorithm = "pl"
//! epsilon = 0.1
//! delta = 0.1
//! seed = 7
//! trials = 20
//!
//! [class]
//! kind = "threshold1d"
//!
//! [target]
//! kind = "threshold"
//! t = 0.5
//! polarity = "positive"
//!
//! [[players]]
//! dist = "uniform-box"
//! lo = [0.0]
//! hi = [1.0]
//! eta = 0.0
//!
//! [sweep]
//! axis = "k"
//! values = [2, 4, 8]
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::boosting::BoostConfig;
use crate::centralized::{CentralizedConfig, CentralizedVariant};
use crate::distribution::{CleanDistribution, Player, TargetConcept};
use crate::hypothesis::{Hypothesis, HypothesisClass, HypothesisClassSpec, Polarity};
use crate::personalized::{PersonalizedConfig, PersonalizedVariant};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read scenario file: {0}")]
    Io(#[from] std::io::Error),
    #[error("cannot parse scenario file: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("player {player}: noise rate {eta} is not in [0, 1/2)")]
    NoiseRateTooHigh { player: usize, eta: f64 },
    #[error("noise rate {eta_max} exceeds epsilon {epsilon}: the noisy boosting variants only run with eta_max <= epsilon")]
    NoiseAboveEpsilon { eta_max: f64, epsilon: f64 },
    #[error("invalid scenario: {0}")]
    Invalid(String),
}

fn invalid(msg: impl Into<String>) -> ScenarioError {
    ScenarioError::Invalid(msg.into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Baseline,
    Pl,
    PlBoost,
    PlCn,
    PlCnBoost,
    Central,
    CentralBoost,
    CentralCn,
    CentralCnBoost,
}

impl Algorithm {
    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::Baseline => "baseline",
            Algorithm::Pl => "pl",
            Algorithm::PlBoost => "pl-boost",
            Algorithm::PlCn => "pl-cn",
            Algorithm::PlCnBoost => "pl-cn-boost",
            Algorithm::Central => "central",
            Algorithm::CentralBoost => "central-boost",
            Algorithm::CentralCn => "central-cn",
            Algorithm::CentralCnBoost => "central-cn-boost",
        }
    }

    pub fn is_centralized(&self) -> bool {
        matches!(
            self,
            Algorithm::Central
                | Algorithm::CentralBoost
                | Algorithm::CentralCn
                | Algorithm::CentralCnBoost
        )
    }

    /// Variants that run the agnostic booster and need eta_max <= epsilon.
    pub fn needs_noise_within_epsilon(&self) -> bool {
        matches!(self, Algorithm::PlCnBoost | Algorithm::CentralCnBoost)
    }

    pub fn personalized_variant(&self) -> Option<PersonalizedVariant> {
        match self {
            Algorithm::Baseline => Some(PersonalizedVariant::Baseline),
            Algorithm::Pl => Some(PersonalizedVariant::Pl),
            Algorithm::PlBoost => Some(PersonalizedVariant::PlBoost),
            Algorithm::PlCn => Some(PersonalizedVariant::PlCn),
            Algorithm::PlCnBoost => Some(PersonalizedVariant::PlCnBoost),
            _ => None,
        }
    }

    pub fn centralized_variant(&self) -> Option<CentralizedVariant> {
        match self {
            Algorithm::Central => Some(CentralizedVariant::Central),
            Algorithm::CentralBoost => Some(CentralizedVariant::CentralBoost),
            Algorithm::CentralCn => Some(CentralizedVariant::CentralCn),
            Algorithm::CentralCnBoost => Some(CentralizedVariant::CentralCnBoost),
            _ => None,
        }
    }
}

/// Constant presets: the headline configuration vs the desk-scale one used
/// for Monte-Carlo experiments (only the centralized round multiplier
/// differs).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    PaperFaithful,
    Desk,
}

impl Mode {
    fn t_multiplier(&self) -> u32 {
        match self {
            Mode::PaperFaithful => 150,
            Mode::Desk => 10,
        }
    }
}

/// Every pinned constant, overridable per scenario. A `None` t_multiplier
/// defers to the mode preset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Constants {
    pub c_pac: f64,
    pub c_cn: f64,
    pub c_test: f64,
    pub c_cntest: f64,
    pub c_fasttest: f64,
    pub c_boost: f64,
    pub c_round: f64,
    pub c_cap: f64,
    pub c_ag: f64,
    pub c_vc: f64,
    pub boost_gamma: f64,
    pub boost_max_rounds: usize,
    pub agnostic_beta: f64,
    pub weight_sync_bits: u64,
    pub round_cap_multiplier: u32,
    pub t_multiplier: Option<u32>,
}

impl Default for Constants {
    fn default() -> Self {
        Self {
            c_pac: 4.0,
            c_cn: 4.0,
            c_test: 32.0,
            c_cntest: 32.0,
            c_fasttest: 56.0,
            c_boost: 1.0,
            c_round: 10.0,
            c_cap: 4.0,
            c_ag: 8.0,
            c_vc: 1.0,
            boost_gamma: 0.1,
            boost_max_rounds: 32,
            agnostic_beta: 0.25,
            weight_sync_bits: 64,
            round_cap_multiplier: 4,
            t_multiplier: None,
        }
    }
}

impl Constants {
    pub fn boost_config(&self) -> BoostConfig {
        BoostConfig {
            edge_gamma: self.boost_gamma,
            max_rounds: self.boost_max_rounds,
            target_training_error: 0.0,
            c_boost: self.c_boost,
            c_round: self.c_round,
            c_cap: self.c_cap,
            c_ag: self.c_ag,
            c_vc: self.c_vc,
            weight_sync_bits: self.weight_sync_bits,
        }
    }

    /// Verbatim record of every constant in effect, kept with each result
    /// row.
    pub fn provenance(&self, mode: Mode) -> String {
        format!(
            "c_pac={} c_cn={} c_test={} c_cntest={} c_fasttest={} c_boost={} c_round={} \
             c_cap={} c_ag={} c_vc={} boost_gamma={} boost_max_rounds={} agnostic_beta={} \
             weight_sync_bits={} round_cap_multiplier={} t_multiplier={}",
            self.c_pac,
            self.c_cn,
            self.c_test,
            self.c_cntest,
            self.c_fasttest,
            self.c_boost,
            self.c_round,
            self.c_cap,
            self.c_ag,
            self.c_vc,
            self.boost_gamma,
            self.boost_max_rounds,
            self.agnostic_beta,
            self.weight_sync_bits,
            self.round_cap_multiplier,
            self.t_multiplier.unwrap_or(mode.t_multiplier()),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassConfig {
    /// "threshold1d" | "interval1d" | "stumpnd"
    pub kind: String,
    #[serde(default)]
    pub features: Option<usize>,
    /// Required for stumpnd (the budget dimension the center assumes);
    /// fixed by the class otherwise.
    #[serde(default)]
    pub vc_dimension: Option<usize>,
    #[serde(default)]
    pub grid_resolution: Option<usize>,
    #[serde(default)]
    pub domain_lo: Option<f64>,
    #[serde(default)]
    pub domain_hi: Option<f64>,
}

impl ClassConfig {
    pub fn build(&self) -> Result<HypothesisClassSpec, ScenarioError> {
        let mut spec = match self.kind.as_str() {
            "threshold1d" => HypothesisClassSpec::threshold_1d(),
            "interval1d" => HypothesisClassSpec::interval_1d(),
            "stumpnd" => {
                let features = self
                    .features
                    .ok_or_else(|| invalid("stumpnd needs `features`"))?;
                let d = self
                    .vc_dimension
                    .ok_or_else(|| invalid("stumpnd needs `vc_dimension`"))?;
                HypothesisClassSpec::stump_nd(features, d)
            }
            other => return Err(invalid(format!("unknown class kind `{other}`"))),
        };
        if let Some(d) = self.vc_dimension {
            if !matches!(spec.class, HypothesisClass::StumpND { .. }) && d != spec.vc_dimension {
                return Err(invalid(format!(
                    "vc_dimension {d} does not match class `{}`",
                    self.kind
                )));
            }
        }
        if let Some(g) = self.grid_resolution {
            spec.grid_resolution = g;
        }
        if let Some(lo) = self.domain_lo {
            spec.domain_lo = lo;
        }
        if let Some(hi) = self.domain_hi {
            spec.domain_hi = hi;
        }
        spec.validate().map_err(|e| invalid(e.to_string()))?;
        Ok(spec)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetConfig {
    /// "threshold" | "interval" | "stump"
    pub kind: String,
    #[serde(default)]
    pub t: Option<f64>,
    /// "positive" | "negative" (default positive)
    #[serde(default)]
    pub polarity: Option<String>,
    #[serde(default)]
    pub lo: Option<f64>,
    #[serde(default)]
    pub hi: Option<f64>,
    #[serde(default)]
    pub feature: Option<usize>,
}

fn parse_polarity(s: Option<&str>) -> Result<Polarity, ScenarioError> {
    match s.unwrap_or("positive") {
        "positive" => Ok(Polarity::Positive),
        "negative" => Ok(Polarity::Negative),
        other => Err(invalid(format!("unknown polarity `{other}`"))),
    }
}

impl TargetConfig {
    pub fn build(&self) -> Result<Hypothesis, ScenarioError> {
        match self.kind.as_str() {
            "threshold" => {
                let t = self
                    .t
                    .ok_or_else(|| invalid("threshold target needs `t`"))?;
                Ok(Hypothesis::threshold(
                    t,
                    parse_polarity(self.polarity.as_deref())?,
                ))
            }
            "interval" => {
                let lo = self
                    .lo
                    .ok_or_else(|| invalid("interval target needs `lo`"))?;
                let hi = self
                    .hi
                    .ok_or_else(|| invalid("interval target needs `hi`"))?;
                if lo > hi {
                    return Err(invalid("interval target needs lo <= hi"));
                }
                Ok(Hypothesis::interval(lo, hi))
            }
            "stump" => {
                let feature = self
                    .feature
                    .ok_or_else(|| invalid("stump target needs `feature`"))?;
                let t = self.t.ok_or_else(|| invalid("stump target needs `t`"))?;
                Ok(Hypothesis::stump(
                    feature,
                    t,
                    parse_polarity(self.polarity.as_deref())?,
                ))
            }
            other => Err(invalid(format!("unknown target kind `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlayerConfig {
    /// "uniform-box" | "discrete"
    pub dist: String,
    #[serde(default)]
    pub lo: Option<Vec<f64>>,
    #[serde(default)]
    pub hi: Option<Vec<f64>>,
    #[serde(default)]
    pub points: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub probs: Option<Vec<f64>>,
    #[serde(default)]
    pub eta: f64,
}

impl PlayerConfig {
    pub fn build_distribution(&self) -> Result<CleanDistribution, ScenarioError> {
        match self.dist.as_str() {
            "uniform-box" => {
                let lo = self
                    .lo
                    .clone()
                    .ok_or_else(|| invalid("uniform-box player needs `lo`"))?;
                let hi = self
                    .hi
                    .clone()
                    .ok_or_else(|| invalid("uniform-box player needs `hi`"))?;
                CleanDistribution::uniform_box(lo, hi).map_err(|e| invalid(e.to_string()))
            }
            "discrete" => {
                let points = self
                    .points
                    .clone()
                    .ok_or_else(|| invalid("discrete player needs `points`"))?;
                let probs = self
                    .probs
                    .clone()
                    .ok_or_else(|| invalid("discrete player needs `probs`"))?;
                if points.len() != probs.len() {
                    return Err(invalid("discrete player needs |points| == |probs|"));
                }
                CleanDistribution::discrete(points.into_iter().zip(probs).collect())
                    .map_err(|e| invalid(e.to_string()))
            }
            other => Err(invalid(format!("unknown player dist `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepAxis {
    #[default]
    None,
    K,
    Epsilon,
    Eta,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
}

fn default_trials() -> u64 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub algorithm: Algorithm,
    pub epsilon: f64,
    pub delta: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_trials")]
    pub trials: u64,
    pub class: ClassConfig,
    pub target: TargetConfig,
    pub players: Vec<PlayerConfig>,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub constants: Constants,
}

/// Materialized protocol inputs for one run.
#[derive(Debug, Clone)]
pub struct BuiltScenario {
    pub spec: HypothesisClassSpec,
    pub target: TargetConcept,
    pub players: Vec<Player>,
}

impl ScenarioConfig {
    pub fn from_toml_str(s: &str) -> Result<Self, ScenarioError> {
        let cfg: ScenarioConfig = toml::from_str(s)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ScenarioError> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        for (name, v) in [("epsilon", self.epsilon), ("delta", self.delta)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(invalid(format!("{name} must be in (0,1), got {v}")));
            }
        }
        if self.trials == 0 {
            return Err(invalid("trials must be >= 1"));
        }
        if self.players.is_empty() {
            return Err(invalid("at least one player is required"));
        }

        let spec = self.class.build()?;
        let target = TargetConcept::new(self.target.build()?);
        if !target.matches_class(&spec) {
            return Err(invalid(
                "target concept does not belong to the declared hypothesis class",
            ));
        }

        let mut eta_max = 0.0f64;
        for (i, p) in self.players.iter().enumerate() {
            if !(0.0..0.5).contains(&p.eta) {
                return Err(ScenarioError::NoiseRateTooHigh {
                    player: i,
                    eta: p.eta,
                });
            }
            eta_max = eta_max.max(p.eta);
            let dist = p.build_distribution()?;
            if dist.dim() != spec.dim() {
                return Err(invalid(format!(
                    "player {i}: distribution dimension {} does not match class dimension {}",
                    dist.dim(),
                    spec.dim()
                )));
            }
        }
        if self.algorithm.needs_noise_within_epsilon() && eta_max > self.epsilon {
            return Err(ScenarioError::NoiseAboveEpsilon {
                eta_max,
                epsilon: self.epsilon,
            });
        }

        match self.sweep.axis {
            SweepAxis::None => {}
            SweepAxis::K => {
                if self.sweep.values.is_empty()
                    || self
                        .sweep
                        .values
                        .iter()
                        .any(|v| *v < 1.0 || v.fract() != 0.0)
                {
                    return Err(invalid("sweep over k needs positive integer values"));
                }
            }
            SweepAxis::Epsilon => {
                if self.sweep.values.is_empty()
                    || self.sweep.values.iter().any(|v| !(*v > 0.0 && *v < 1.0))
                {
                    return Err(invalid("sweep over epsilon needs values in (0,1)"));
                }
            }
            SweepAxis::Eta => {
                if self.sweep.values.is_empty()
                    || self.sweep.values.iter().any(|v| !(0.0..0.5).contains(v))
                {
                    return Err(invalid("sweep over eta needs values in [0, 1/2)"));
                }
                if self.algorithm.needs_noise_within_epsilon()
                    && self.sweep.values.iter().any(|v| *v > self.epsilon)
                {
                    return Err(ScenarioError::NoiseAboveEpsilon {
                        eta_max: self.sweep.values.iter().copied().fold(0.0, f64::max),
                        epsilon: self.epsilon,
                    });
                }
            }
        }
        Ok(())
    }

    /// A copy of this scenario specialized to one sweep value.
    pub fn with_axis_value(&self, axis: SweepAxis, value: f64) -> ScenarioConfig {
        let mut out = self.clone();
        out.sweep = SweepConfig::default();
        match axis {
            SweepAxis::None => {}
            SweepAxis::K => {
                let k = value as usize;
                // Replicate the configured players cyclically up to k.
                out.players = (0..k)
                    .map(|i| self.players[i % self.players.len()].clone())
                    .collect();
            }
            SweepAxis::Epsilon => out.epsilon = value,
            SweepAxis::Eta => {
                for p in out.players.iter_mut() {
                    p.eta = value;
                }
            }
        }
        out
    }

    /// Build the protocol inputs with `seed` as the master seed.
    pub fn build(&self, seed: u64) -> Result<BuiltScenario, ScenarioError> {
        let spec = self.class.build()?;
        let target = TargetConcept::new(self.target.build()?);
        let players = self
            .players
            .iter()
            .enumerate()
            .map(|(i, p)| {
                Player::new(i, p.build_distribution()?, p.eta, seed)
                    .map_err(|e| invalid(e.to_string()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(BuiltScenario {
            spec,
            target,
            players,
        })
    }

    pub fn personalized_config(&self) -> Option<PersonalizedConfig> {
        let variant = self.algorithm.personalized_variant()?;
        let c = &self.constants;
        Some(PersonalizedConfig {
            epsilon: self.epsilon,
            delta: self.delta,
            variant,
            round_cap_multiplier: c.round_cap_multiplier,
            c_pac: c.c_pac,
            c_cn: c.c_cn,
            c_test: c.c_test,
            c_cntest: c.c_cntest,
            agnostic_beta: c.agnostic_beta,
            boost: c.boost_config(),
        })
    }

    pub fn centralized_config(&self, mode: Mode) -> Option<CentralizedConfig> {
        let variant = self.algorithm.centralized_variant()?;
        let c = &self.constants;
        Some(CentralizedConfig {
            epsilon: self.epsilon,
            delta: self.delta,
            variant,
            t_multiplier: c.t_multiplier.unwrap_or(mode.t_multiplier()),
            c_pac: c.c_pac,
            c_cn: c.c_cn,
            c_fasttest: c.c_fasttest,
            agnostic_beta: c.agnostic_beta,
            boost: c.boost_config(),
        })
    }
}
