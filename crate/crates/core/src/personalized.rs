//! The personalized protocols: per-round mixture draws, a learned
//! hypothesis, and local per-player testing, with passing players leaving
//! the live set. Variants swap the learner (consistent, ERM, distributed
//! boosting, agnostic boosting) and the tester (TEST vs CN-TEST), plus the
//! no-communication baseline where every player learns alone.
//!
//! Round counts use base-2 logs (they count halvings of the live set);
//! sample-size formulas use natural logs. The live-set loop runs up to
//! round_cap_multiplier * ceil(log2 k) rounds and reports success=false
//! past the cap instead of looping forever.

use thiserror::Error;

use crate::boosting::{agnostic_distributed_boost, distributed_boost, BoostConfig, BoostError};
use crate::distribution::{
    noisy_error_formula, sample_clean, sample_mixture, sample_noisy, true_error, DistributionError,
    MixtureSpec, Player, TargetConcept,
};
use crate::hypothesis::{
    empirical_error, learn_consistent, learn_erm, Hypothesis, HypothesisClassSpec, HypothesisError,
};
use crate::network::{charge_samples, charge_test_votes, CommLedger, NetworkError};
use crate::rng::{seeded_rng, stream};

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error("invalid protocol config: {0}")]
    InvalidConfig(String),
    #[error("variant {0} requires noiseless players (all eta_i = 0)")]
    NoiselessRequired(&'static str),
    #[error("noise rate {eta_max} exceeds target error {eps}; boosting past the noise rate is unsupported")]
    NoiseAboveTarget { eta_max: f64, eps: f64 },
    #[error("protocol needs at least one player")]
    NoPlayers,
    #[error("target concept does not belong to the declared hypothesis class")]
    TargetOutsideClass,
    #[error(transparent)]
    Hypothesis(#[from] HypothesisError),
    #[error(transparent)]
    Boost(#[from] BoostError),
    #[error(transparent)]
    Distribution(#[from] DistributionError),
    #[error(transparent)]
    Network(#[from] NetworkError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PersonalizedVariant {
    /// Every player learns alone from local draws; nothing is transmitted.
    Baseline,
    /// Mixture draw + consistent hypothesis + TEST.
    Pl,
    /// Distributed boosting supplies the round hypothesis.
    PlBoost,
    /// Noise-adapted draws + ERM + CN-TEST.
    PlCn,
    /// Agnostic distributed boosting + CN-TEST (requires eta_max <= eps).
    PlCnBoost,
}

impl PersonalizedVariant {
    pub fn name(&self) -> &'static str {
        match self {
            PersonalizedVariant::Baseline => "baseline",
            PersonalizedVariant::Pl => "pl",
            PersonalizedVariant::PlBoost => "pl-boost",
            PersonalizedVariant::PlCn => "pl-cn",
            PersonalizedVariant::PlCnBoost => "pl-cn-boost",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PersonalizedConfig {
    pub epsilon: f64,
    pub delta: f64,
    pub variant: PersonalizedVariant,
    /// The live-set loop runs this multiple of ceil(log2 k) rounds.
    pub round_cap_multiplier: u32,
    pub c_pac: f64,
    pub c_cn: f64,
    pub c_test: f64,
    pub c_cntest: f64,
    /// beta of the agnostic weak learner (CN-Boost only).
    pub agnostic_beta: f64,
    pub boost: BoostConfig,
}

impl PersonalizedConfig {
    pub fn new(epsilon: f64, delta: f64, variant: PersonalizedVariant) -> Self {
        Self {
            epsilon,
            delta,
            variant,
            round_cap_multiplier: 4,
            c_pac: 4.0,
            c_cn: 4.0,
            c_test: 32.0,
            c_cntest: 32.0,
            agnostic_beta: 0.25,
            boost: BoostConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<(), ProtocolError> {
        for (name, v) in [("epsilon", self.epsilon), ("delta", self.delta)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(ProtocolError::InvalidConfig(format!(
                    "{name} must be in (0,1), got {v}"
                )));
            }
        }
        for (name, v) in [
            ("c_pac", self.c_pac),
            ("c_cn", self.c_cn),
            ("c_test", self.c_test),
            ("c_cntest", self.c_cntest),
        ] {
            if !(v > 0.0) {
                return Err(ProtocolError::InvalidConfig(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        if self.round_cap_multiplier == 0 {
            return Err(ProtocolError::InvalidConfig(
                "round_cap_multiplier must be >= 1".into(),
            ));
        }
        if !(self.agnostic_beta > 0.0 && self.agnostic_beta < 0.5) {
            return Err(ProtocolError::InvalidConfig(format!(
                "agnostic_beta must be in (0, 1/2), got {}",
                self.agnostic_beta
            )));
        }
        self.boost.validate()?;
        Ok(())
    }
}

/// Per-player final hypotheses and exact clean errors, plus the run's
/// accounting. `success` means every player was assigned within the round
/// cap; unassigned players carry `None`.
#[derive(Debug, Clone)]
pub struct ProtocolOutcome {
    pub assignments: Vec<Option<Hypothesis>>,
    pub clean_errors: Vec<Option<f64>>,
    pub success: bool,
    pub rounds_used: u64,
    pub ledger: CommLedger,
    pub samples_consumed: u64,
}

impl ProtocolOutcome {
    /// Worst exact clean error over players; an unassigned player counts
    /// as error 1.
    pub fn max_clean_error(&self) -> f64 {
        self.clean_errors
            .iter()
            .map(|e| e.unwrap_or(1.0))
            .fold(0.0, f64::max)
    }
}

/// max(1, ceil(log2 k)) — the halving count behind delta' and round caps.
pub fn ceil_log2_count(k: u64) -> u64 {
    if k <= 1 {
        1
    } else {
        (64 - (k - 1).leading_zeros()) as u64
    }
}

/// delta' = delta / (2 ceil(log2 k)).
pub fn delta_prime(delta: f64, k: u64) -> f64 {
    delta / (2.0 * ceil_log2_count(k) as f64)
}

/// Realizable PAC draw size: ceil((c/eps) (d ln(12/eps) + ln(2/delta))).
pub fn m_realizable(eps: f64, delta: f64, d: u64, c_pac: f64) -> u64 {
    let m = (c_pac / eps) * (d as f64 * (12.0 / eps).ln() + (2.0 / delta).ln());
    (m.ceil() as u64).max(1)
}

/// Noise-adapted ERM draw size: the realizable size inflated by
/// 1/(1-2 eta)^2, applied after the ceiling so eta = 1/4 costs exactly 4x.
pub fn m_cn(eps: f64, delta: f64, d: u64, eta: f64, c_cn: f64) -> Result<u64, ProtocolError> {
    if !(0.0..0.5).contains(&eta) {
        return Err(ProtocolError::InvalidConfig(format!(
            "noise rate must be in [0, 1/2), got {eta}"
        )));
    }
    let base = m_realizable(eps, delta, d, c_cn);
    let slow = 1.0 - 2.0 * eta;
    Ok((base as f64 / (slow * slow)).ceil() as u64)
}

/// Local draws per player in TEST: ceil(c_test ln(|N|/(eps delta')) / eps).
pub fn test_draw_size(n_live: u64, eps: f64, dp: f64, c_test: f64) -> u64 {
    let t = c_test * (n_live as f64 / (eps * dp)).ln() / eps;
    (t.ceil() as u64).max(1)
}

/// Local draws for player i in CN-TEST:
/// ceil(c_cntest ln(|N|/delta') / (eps (1-2 eta_i))).
pub fn cn_test_draw_size(n_live: u64, eps: f64, dp: f64, eta: f64, c_cntest: f64) -> u64 {
    let t = c_cntest * (n_live as f64 / dp).ln() / (eps * (1.0 - 2.0 * eta));
    (t.ceil() as u64).max(1)
}

/// CN-TEST pass threshold: the noisy image of clean error 3 eps / 4.
pub fn cn_test_threshold(eps: f64, eta: f64) -> f64 {
    noisy_error_formula(0.75 * eps, eta)
}

#[derive(Debug, Clone)]
pub struct TestReport {
    /// Ids that passed, ascending.
    pub passed: Vec<usize>,
    /// Local samples drawn by all tested players (consumed, never
    /// transmitted).
    pub samples_drawn: u64,
}

/// Each live player draws clean local samples and votes on whether the
/// candidate's empirical error stays below 3 eps / 4. Draws are local-only;
/// the ledger is charged one vote bit per player.
#[allow(clippy::too_many_arguments)]
pub fn test(
    h: &Hypothesis,
    live: &[usize],
    eps: f64,
    dp: f64,
    players: &[Player],
    target: &TargetConcept,
    cfg: &PersonalizedConfig,
    round: u64,
    ledger: &mut CommLedger,
) -> Result<TestReport, ProtocolError> {
    let t_i = test_draw_size(live.len() as u64, eps, dp, cfg.c_test);
    let mut passed = Vec::new();
    for &i in live {
        let p = &players[i];
        let mut rng = p.stream(&[round, stream::TEST]);
        let local = sample_clean(p, target, t_i, &mut rng);
        if empirical_error(h, &local)? <= 0.75 * eps {
            passed.push(i);
        }
    }
    charge_test_votes(ledger, live.len() as u64, round);
    Ok(TestReport {
        passed,
        samples_drawn: live.len() as u64 * t_i,
    })
}

/// CN-TEST: noisy local draws sized by 1/(eps(1-2 eta_i)), pass threshold
/// eta_i + (3 eps/4)(1 - 2 eta_i).
#[allow(clippy::too_many_arguments)]
pub fn cn_test(
    h: &Hypothesis,
    live: &[usize],
    eps: f64,
    dp: f64,
    players: &[Player],
    target: &TargetConcept,
    cfg: &PersonalizedConfig,
    round: u64,
    ledger: &mut CommLedger,
) -> Result<TestReport, ProtocolError> {
    let mut passed = Vec::new();
    let mut drawn = 0u64;
    for &i in live {
        let p = &players[i];
        let t_i = cn_test_draw_size(live.len() as u64, eps, dp, p.noise_rate, cfg.c_cntest);
        drawn += t_i;
        let mut rng = p.stream(&[round, stream::TEST]);
        let local = sample_noisy(p, target, t_i, &mut rng);
        if empirical_error(h, &local)? <= cn_test_threshold(eps, p.noise_rate) {
            passed.push(i);
        }
    }
    charge_test_votes(ledger, live.len() as u64, round);
    Ok(TestReport {
        passed,
        samples_drawn: drawn,
    })
}

fn require_noiseless(players: &[Player], name: &'static str) -> Result<(), ProtocolError> {
    if players.iter().any(|p| p.noise_rate != 0.0) {
        return Err(ProtocolError::NoiselessRequired(name));
    }
    Ok(())
}

fn check_common(
    players: &[Player],
    target: &TargetConcept,
    spec: &HypothesisClassSpec,
    cfg: &PersonalizedConfig,
) -> Result<(), ProtocolError> {
    cfg.validate()?;
    spec.validate()
        .map_err(|e| ProtocolError::InvalidConfig(e.to_string()))?;
    if players.is_empty() {
        return Err(ProtocolError::NoPlayers);
    }
    if !target.matches_class(spec) {
        return Err(ProtocolError::TargetOutsideClass);
    }
    Ok(())
}

fn finish_outcome(
    players: &[Player],
    target: &TargetConcept,
    assignments: Vec<Option<Hypothesis>>,
    rounds_used: u64,
    ledger: CommLedger,
    samples_consumed: u64,
) -> Result<ProtocolOutcome, ProtocolError> {
    let mut clean_errors = Vec::with_capacity(players.len());
    for (p, a) in players.iter().zip(&assignments) {
        clean_errors.push(match a {
            Some(h) => Some(true_error(h, &p.clean, target)?),
            None => None,
        });
    }
    let success = assignments.iter().all(|a| a.is_some());
    Ok(ProtocolOutcome {
        assignments,
        clean_errors,
        success,
        rounds_used,
        ledger,
        samples_consumed,
    })
}

// How round hypotheses are produced.
enum Learner {
    Consistent,
    Erm,
    Boost,
    AgnosticBoost,
}

fn live_set_loop(
    players: &[Player],
    target: &TargetConcept,
    spec: &HypothesisClassSpec,
    cfg: &PersonalizedConfig,
    master_seed: u64,
    learner: Learner,
    noisy_test: bool,
) -> Result<ProtocolOutcome, ProtocolError> {
    let k = players.len() as u64;
    let dp = delta_prime(cfg.delta, k);
    let round_cap = cfg.round_cap_multiplier as u64 * ceil_log2_count(k);
    let eps_learn = cfg.epsilon / 4.0;
    let d = spec.vc_dimension as u64;

    let mut center = seeded_rng(master_seed, &[stream::CENTER]);
    let mut ledger = CommLedger::new();
    let mut consumed = 0u64;
    let mut assignments: Vec<Option<Hypothesis>> = vec![None; players.len()];
    let mut live: Vec<usize> = (0..players.len()).collect();
    let mut rounds_used = 0u64;

    for j in 1..=round_cap {
        rounds_used = j;
        let h_j = match learner {
            Learner::Consistent => {
                let m = m_realizable(eps_learn, dp, d, cfg.c_pac);
                let mix = MixtureSpec::uniform(live.clone())?;
                let s = sample_mixture(&mix, players, target, m, j, &mut center, &mut ledger)?;
                consumed += m;
                learn_consistent(spec, &s)?
            }
            Learner::Erm => {
                let eta_bar =
                    live.iter().map(|&i| players[i].noise_rate).sum::<f64>() / live.len() as f64;
                let m = m_cn(eps_learn, dp, d, eta_bar, cfg.c_cn)?;
                let mix = MixtureSpec::uniform(live.clone())?;
                let s = sample_mixture(&mix, players, target, m, j, &mut center, &mut ledger)?;
                consumed += m;
                learn_erm(spec, &s)?
            }
            Learner::Boost => {
                let live_players: Vec<Player> = live.iter().map(|&i| players[i].clone()).collect();
                let out = distributed_boost(
                    &live_players,
                    target,
                    spec,
                    eps_learn,
                    &cfg.boost,
                    j,
                    &mut center,
                    &mut ledger,
                )?;
                consumed += out.samples_consumed;
                // Every player holds all broadcast weak hypotheses and
                // rebuilds the ensemble locally; no further charge.
                out.ensemble
            }
            Learner::AgnosticBoost => {
                let live_players: Vec<Player> = live.iter().map(|&i| players[i].clone()).collect();
                // Boosting cannot push the error below the noise rate, so
                // the requested accuracy is floored at eta_max of the live
                // set (the protocol-level regime check already passed).
                let eta_max = live_players
                    .iter()
                    .map(|p| p.noise_rate)
                    .fold(0.0, f64::max);
                let out = agnostic_distributed_boost(
                    &live_players,
                    target,
                    spec,
                    eps_learn.max(eta_max),
                    cfg.agnostic_beta,
                    &cfg.boost,
                    j,
                    &mut center,
                    &mut ledger,
                )?;
                consumed += out.samples_consumed;
                out.ensemble
            }
        };

        let report = if noisy_test {
            cn_test(
                &h_j,
                &live,
                cfg.epsilon,
                dp,
                players,
                target,
                cfg,
                j,
                &mut ledger,
            )?
        } else {
            test(
                &h_j,
                &live,
                cfg.epsilon,
                dp,
                players,
                target,
                cfg,
                j,
                &mut ledger,
            )?
        };
        consumed += report.samples_drawn;

        if report.passed.is_empty() {
            charge_samples(&mut ledger, 0, j, "stall: no players passed");
        }
        for &i in &report.passed {
            assignments[i] = Some(h_j.clone());
        }
        live.retain(|i| !report.passed.contains(i));
        if live.is_empty() {
            break;
        }
    }

    finish_outcome(players, target, assignments, rounds_used, ledger, consumed)
}

/// Mixture draw, consistent hypothesis, TEST, remove passers; noiseless
/// players only.
pub fn personalized_learning(
    players: &[Player],
    target: &TargetConcept,
    spec: &HypothesisClassSpec,
    cfg: &PersonalizedConfig,
    master_seed: u64,
) -> Result<ProtocolOutcome, ProtocolError> {
    check_common(players, target, spec, cfg)?;
    require_noiseless(players, "pl")?;
    live_set_loop(
        players,
        target,
        spec,
        cfg,
        master_seed,
        Learner::Consistent,
        false,
    )
}

/// Same control flow with the round hypothesis produced by distributed
/// boosting over the live set at accuracy eps/4.
pub fn personalized_learning_boost(
    players: &[Player],
    target: &TargetConcept,
    spec: &HypothesisClassSpec,
    cfg: &PersonalizedConfig,
    master_seed: u64,
) -> Result<ProtocolOutcome, ProtocolError> {
    check_common(players, target, spec, cfg)?;
    require_noiseless(players, "pl-boost")?;
    live_set_loop(
        players,
        target,
        spec,
        cfg,
        master_seed,
        Learner::Boost,
        false,
    )
}

/// Noise-adapted variant: draw sizes inflated by the live set's mean noise
/// rate, ERM learner, CN-TEST.
pub fn personalized_learning_cn(
    players: &[Player],
    target: &TargetConcept,
    spec: &HypothesisClassSpec,
    cfg: &PersonalizedConfig,
    master_seed: u64,
) -> Result<ProtocolOutcome, ProtocolError> {
    check_common(players, target, spec, cfg)?;
    live_set_loop(players, target, spec, cfg, master_seed, Learner::Erm, true)
}

/// CN variant with the round hypothesis from agnostic distributed
/// boosting; only valid when eta_max <= eps.
pub fn personalized_learning_cn_boost(
    players: &[Player],
    target: &TargetConcept,
    spec: &HypothesisClassSpec,
    cfg: &PersonalizedConfig,
    master_seed: u64,
) -> Result<ProtocolOutcome, ProtocolError> {
    check_common(players, target, spec, cfg)?;
    let eta_max = players.iter().map(|p| p.noise_rate).fold(0.0, f64::max);
    if eta_max > cfg.epsilon {
        return Err(ProtocolError::NoiseAboveTarget {
            eta_max,
            eps: cfg.epsilon,
        });
    }
    live_set_loop(
        players,
        target,
        spec,
        cfg,
        master_seed,
        Learner::AgnosticBoost,
        true,
    )
}

/// Every player learns locally on m(eps, delta/k) own draws (consistent
/// when noiseless, ERM otherwise). Nothing is ever transmitted: the ledger
/// ends with zero samples, zero bits, zero rounds.
pub fn baseline_personalized(
    players: &[Player],
    target: &TargetConcept,
    spec: &HypothesisClassSpec,
    cfg: &PersonalizedConfig,
    _master_seed: u64,
) -> Result<ProtocolOutcome, ProtocolError> {
    check_common(players, target, spec, cfg)?;
    let k = players.len() as u64;
    let d = spec.vc_dimension as u64;
    let delta_each = cfg.delta / k as f64;
    let mut consumed = 0u64;
    let mut assignments = Vec::with_capacity(players.len());
    for p in players {
        let m = if p.noise_rate == 0.0 {
            m_realizable(cfg.epsilon, delta_each, d, cfg.c_pac)
        } else {
            m_cn(cfg.epsilon, delta_each, d, p.noise_rate, cfg.c_cn)?
        };
        let mut rng = p.stream(&[0, stream::BASELINE]);
        let local = sample_noisy(p, target, m, &mut rng);
        consumed += m;
        let h = if p.noise_rate == 0.0 {
            learn_consistent(spec, &local)?
        } else {
            learn_erm(spec, &local)?
        };
        assignments.push(Some(h));
    }
    finish_outcome(players, target, assignments, 0, CommLedger::new(), consumed)
}

/// Dispatch on the configured variant.
pub fn run_personalized(
    players: &[Player],
    target: &TargetConcept,
    spec: &HypothesisClassSpec,
    cfg: &PersonalizedConfig,
    master_seed: u64,
) -> Result<ProtocolOutcome, ProtocolError> {
    match cfg.variant {
        PersonalizedVariant::Baseline => {
            baseline_personalized(players, target, spec, cfg, master_seed)
        }
        PersonalizedVariant::Pl => personalized_learning(players, target, spec, cfg, master_seed),
        PersonalizedVariant::PlBoost => {
            personalized_learning_boost(players, target, spec, cfg, master_seed)
        }
        PersonalizedVariant::PlCn => {
            personalized_learning_cn(players, target, spec, cfg, master_seed)
        }
        PersonalizedVariant::PlCnBoost => {
            personalized_learning_cn_boost(players, target, spec, cfg, master_seed)
        }
    }
}
