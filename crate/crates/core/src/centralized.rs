//! Centralized learning: t rounds of multiplicative-weights mixture draws,
//! each producing one hypothesis, with FAST-TEST / CN-FAST-TEST doubling
//! the weight of every failing player. The output is the unweighted
//! majority vote of all t round hypotheses, which must generalize on every
//! player's clean distribution at once.
//!
//! Round count: t = t_multiplier * ceil(log2(k/delta)). The headline
//! multiplier is 150; desk-scale Monte-Carlo uses 10. Derived parameters
//! eps' = eps/6 and delta' = delta/(4t) follow exactly.

use crate::boosting::{
    agnostic_distributed_boost_weighted, distributed_boost_weighted, BoostConfig,
};
use crate::distribution::{
    sample_clean, sample_mixture, sample_noisy, true_error, MixtureSpec, Player, TargetConcept,
};
use crate::hypothesis::{
    empirical_error, learn_consistent, learn_erm, Hypothesis, HypothesisClassSpec,
};
use crate::network::{charge_test_votes, CommLedger};
use crate::personalized::{cn_test_threshold, m_cn, m_realizable, ProtocolError};
use crate::rng::{seeded_rng, stream};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CentralizedVariant {
    Central,
    CentralBoost,
    CentralCn,
    CentralCnBoost,
}

impl CentralizedVariant {
    pub fn name(&self) -> &'static str {
        match self {
            CentralizedVariant::Central => "central",
            CentralizedVariant::CentralBoost => "central-boost",
            CentralizedVariant::CentralCn => "central-cn",
            CentralizedVariant::CentralCnBoost => "central-cn-boost",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CentralizedConfig {
    pub epsilon: f64,
    pub delta: f64,
    pub variant: CentralizedVariant,
    /// Rounds are t_multiplier * ceil(log2(k/delta)).
    pub t_multiplier: u32,
    pub c_pac: f64,
    pub c_cn: f64,
    pub c_fasttest: f64,
    pub agnostic_beta: f64,
    pub boost: BoostConfig,
}

impl CentralizedConfig {
    pub fn new(epsilon: f64, delta: f64, variant: CentralizedVariant) -> Self {
        Self {
            epsilon,
            delta,
            variant,
            t_multiplier: 150,
            c_pac: 4.0,
            c_cn: 4.0,
            c_fasttest: 56.0,
            agnostic_beta: 0.25,
            boost: BoostConfig::default(),
        }
    }

    /// Desk-scale preset: the acceptance experiments run thousands of
    /// trials, which the headline multiplier makes impractical.
    pub fn desk(epsilon: f64, delta: f64, variant: CentralizedVariant) -> Self {
        Self {
            t_multiplier: 10,
            ..Self::new(epsilon, delta, variant)
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
        if self.t_multiplier == 0 {
            return Err(ProtocolError::InvalidConfig(
                "t_multiplier must be >= 1".into(),
            ));
        }
        for (name, v) in [
            ("c_pac", self.c_pac),
            ("c_cn", self.c_cn),
            ("c_fasttest", self.c_fasttest),
        ] {
            if !(v > 0.0) {
                return Err(ProtocolError::InvalidConfig(format!(
                    "{name} must be positive, got {v}"
                )));
            }
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

    /// t = t_multiplier * ceil(log2(k/delta)).
    pub fn rounds(&self, k: u64) -> u64 {
        let halvings = ((k as f64 / self.delta).log2().ceil() as u64).max(1);
        self.t_multiplier as u64 * halvings
    }

    /// eps' = eps/6, exactly as derived.
    pub fn eps_prime(&self) -> f64 {
        self.epsilon / 6.0
    }

    /// delta' = delta/(4t), exactly as derived.
    pub fn delta_prime(&self, k: u64) -> f64 {
        self.delta / (4.0 * self.rounds(k) as f64)
    }
}

/// Weighted mean of the players' noise rates under the current
/// multiplicative weights; never reaches 1/2 and is invariant under
/// uniform weight scaling.
pub fn weighted_noise_rate(weights: &[f64], rates: &[f64]) -> f64 {
    let total: f64 = weights.iter().sum();
    weights.iter().zip(rates).map(|(w, r)| w * r).sum::<f64>() / total
}

/// One round's quality polling and the local draws it consumed.
#[derive(Debug, Clone)]
pub struct FastTestReport {
    pub passed: Vec<usize>,
    pub samples_drawn: u64,
}

/// FAST-TEST: ceil(c/eps') clean local draws per player, pass iff the
/// empirical error stays below 3 eps'/4; one vote bit each.
pub fn fast_test(
    h: &Hypothesis,
    players: &[Player],
    target: &TargetConcept,
    eps_prime: f64,
    c_fasttest: f64,
    round: u64,
    ledger: &mut CommLedger,
) -> Result<FastTestReport, ProtocolError> {
    let t_i = ((c_fasttest / eps_prime).ceil() as u64).max(1);
    let mut passed = Vec::new();
    for p in players {
        let mut rng = p.stream(&[round, stream::TEST]);
        let local = sample_clean(p, target, t_i, &mut rng);
        if empirical_error(h, &local)? <= 0.75 * eps_prime {
            passed.push(p.id);
        }
    }
    charge_test_votes(ledger, players.len() as u64, round);
    Ok(FastTestReport {
        passed,
        samples_drawn: players.len() as u64 * t_i,
    })
}

/// CN-FAST-TEST: ceil(c/(eps'(1-2 eta_i))) noisy local draws, pass iff the
/// empirical noisy error stays below eta_i + (3 eps'/4)(1-2 eta_i). The
/// threshold uses the eps' handed in by the caller.
pub fn cn_fast_test(
    h: &Hypothesis,
    players: &[Player],
    target: &TargetConcept,
    eps_prime: f64,
    c_fasttest: f64,
    round: u64,
    ledger: &mut CommLedger,
) -> Result<FastTestReport, ProtocolError> {
    let mut passed = Vec::new();
    let mut drawn = 0u64;
    for p in players {
        let t_i = ((c_fasttest / (eps_prime * (1.0 - 2.0 * p.noise_rate))).ceil() as u64).max(1);
        drawn += t_i;
        let mut rng = p.stream(&[round, stream::TEST]);
        let local = sample_noisy(p, target, t_i, &mut rng);
        if empirical_error(h, &local)? <= cn_test_threshold(eps_prime, p.noise_rate) {
            passed.push(p.id);
        }
    }
    charge_test_votes(ledger, players.len() as u64, round);
    Ok(FastTestReport {
        passed,
        samples_drawn: drawn,
    })
}

/// Per-round records kept for dissecting a centralized run.
#[derive(Debug, Clone)]
pub struct CentralDiagnostics {
    pub final_weights: Vec<f64>,
    pub fail_counts: Vec<u32>,
    pub per_round_pass_counts: Vec<usize>,
    pub round_hypotheses: Vec<Hypothesis>,
}

#[derive(Debug, Clone)]
pub struct CentralOutcome {
    /// Majority vote over all t round hypotheses; the one classifier every
    /// player receives.
    pub hypothesis: Hypothesis,
    pub per_player_clean_errors: Vec<f64>,
    pub rounds_used: u64,
    pub ledger: CommLedger,
    pub samples_consumed: u64,
    pub diagnostics: CentralDiagnostics,
}

impl CentralOutcome {
    pub fn max_clean_error(&self) -> f64 {
        self.per_player_clean_errors
            .iter()
            .copied()
            .fold(0.0, f64::max)
    }
}

enum RoundLearner {
    Consistent,
    Erm,
    Boost,
    AgnosticBoost,
}

fn central_loop(
    players: &[Player],
    target: &TargetConcept,
    spec: &HypothesisClassSpec,
    cfg: &CentralizedConfig,
    master_seed: u64,
    learner: RoundLearner,
    noisy_test: bool,
) -> Result<CentralOutcome, ProtocolError> {
    let k = players.len();
    let t = cfg.rounds(k as u64);
    let eps_prime = cfg.eps_prime();
    let dp = cfg.delta_prime(k as u64);
    let d = spec.vc_dimension as u64;
    let rates: Vec<f64> = players.iter().map(|p| p.noise_rate).collect();

    let mut center = seeded_rng(master_seed, &[stream::CENTER]);
    let mut ledger = CommLedger::new();
    let mut consumed = 0u64;
    let mut weights = vec![1.0f64; k];
    let mut fail_counts = vec![0u32; k];
    let mut round_hypotheses = Vec::with_capacity(t as usize);
    let mut per_round_pass_counts = Vec::with_capacity(t as usize);

    for j in 1..=t {
        let total: f64 = weights.iter().sum();
        let probs: Vec<f64> = weights.iter().map(|w| w / total).collect();

        let h_j = match learner {
            RoundLearner::Consistent => {
                let m = m_realizable(eps_prime / 16.0, dp, d, cfg.c_pac);
                let mix = MixtureSpec::weighted((0..k).collect(), probs.clone())?;
                let s = sample_mixture(&mix, players, target, m, j, &mut center, &mut ledger)?;
                consumed += m;
                learn_consistent(spec, &s)?
            }
            RoundLearner::Erm => {
                let eta_bar = weighted_noise_rate(&weights, &rates);
                let m = m_cn(eps_prime / 16.0, dp, d, eta_bar, cfg.c_cn)?;
                let mix = MixtureSpec::weighted((0..k).collect(), probs.clone())?;
                let s = sample_mixture(&mix, players, target, m, j, &mut center, &mut ledger)?;
                consumed += m;
                learn_erm(spec, &s)?
            }
            RoundLearner::Boost => {
                let out = distributed_boost_weighted(
                    players,
                    &probs,
                    target,
                    spec,
                    eps_prime / 16.0,
                    &cfg.boost,
                    j,
                    &mut center,
                    &mut ledger,
                )?;
                consumed += out.samples_consumed;
                out.ensemble
            }
            RoundLearner::AgnosticBoost => {
                let eta_max = rates.iter().copied().fold(0.0, f64::max);
                let out = agnostic_distributed_boost_weighted(
                    players,
                    &probs,
                    target,
                    spec,
                    (eps_prime / 16.0).max(eta_max),
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
            cn_fast_test(
                &h_j,
                players,
                target,
                eps_prime,
                cfg.c_fasttest,
                j,
                &mut ledger,
            )?
        } else {
            fast_test(
                &h_j,
                players,
                target,
                eps_prime,
                cfg.c_fasttest,
                j,
                &mut ledger,
            )?
        };
        consumed += report.samples_drawn;
        per_round_pass_counts.push(report.passed.len());
        for i in 0..k {
            if !report.passed.contains(&i) {
                weights[i] *= 2.0;
                fail_counts[i] += 1;
            }
        }
        round_hypotheses.push(h_j);
    }

    // Boost variants emit depth-1 ensembles per round; a majority of
    // majorities would break the depth invariant, so the final vote
    // flattens each round ensemble into its members scaled by the round's
    // unit vote.
    let mut members: Vec<(Hypothesis, f64)> = Vec::new();
    for h in &round_hypotheses {
        match h {
            Hypothesis::Majority(ens) => {
                let total: f64 = ens.members().iter().map(|(_, w)| w).sum();
                for (m, w) in ens.members() {
                    members.push((m.clone(), w / total));
                }
            }
            other => members.push((other.clone(), 1.0)),
        }
    }
    let majority = Hypothesis::majority(members)?;

    let mut errors = Vec::with_capacity(k);
    for p in players {
        errors.push(true_error(&majority, &p.clean, target)?);
    }

    Ok(CentralOutcome {
        hypothesis: majority,
        per_player_clean_errors: errors,
        rounds_used: t,
        ledger,
        samples_consumed: consumed,
        diagnostics: CentralDiagnostics {
            final_weights: weights,
            fail_counts,
            per_round_pass_counts,
            round_hypotheses,
        },
    })
}

fn check_common(
    players: &[Player],
    target: &TargetConcept,
    spec: &HypothesisClassSpec,
    cfg: &CentralizedConfig,
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

/// Noiseless centralized learning: consistent hypotheses + FAST-TEST.
pub fn centralized_learning(
    players: &[Player],
    target: &TargetConcept,
    spec: &HypothesisClassSpec,
    cfg: &CentralizedConfig,
    master_seed: u64,
) -> Result<CentralOutcome, ProtocolError> {
    check_common(players, target, spec, cfg)?;
    if players.iter().any(|p| p.noise_rate != 0.0) {
        return Err(ProtocolError::NoiselessRequired("central"));
    }
    central_loop(
        players,
        target,
        spec,
        cfg,
        master_seed,
        RoundLearner::Consistent,
        false,
    )
}

/// Centralized learning with the round hypothesis from distributed
/// boosting over the weighted mixture.
pub fn centralized_learning_boost(
    players: &[Player],
    target: &TargetConcept,
    spec: &HypothesisClassSpec,
    cfg: &CentralizedConfig,
    master_seed: u64,
) -> Result<CentralOutcome, ProtocolError> {
    check_common(players, target, spec, cfg)?;
    if players.iter().any(|p| p.noise_rate != 0.0) {
        return Err(ProtocolError::NoiselessRequired("central-boost"));
    }
    central_loop(
        players,
        target,
        spec,
        cfg,
        master_seed,
        RoundLearner::Boost,
        false,
    )
}

/// Classification-noise centralized learning: noise-adapted draw sizes
/// (weighted mean rate recomputed every round), ERM, CN-FAST-TEST.
pub fn centralized_learning_cn(
    players: &[Player],
    target: &TargetConcept,
    spec: &HypothesisClassSpec,
    cfg: &CentralizedConfig,
    master_seed: u64,
) -> Result<CentralOutcome, ProtocolError> {
    check_common(players, target, spec, cfg)?;
    central_loop(
        players,
        target,
        spec,
        cfg,
        master_seed,
        RoundLearner::Erm,
        true,
    )
}

/// CN centralized learning with agnostic boosting; requires
/// eta_max <= epsilon.
pub fn centralized_learning_cn_boost(
    players: &[Player],
    target: &TargetConcept,
    spec: &HypothesisClassSpec,
    cfg: &CentralizedConfig,
    master_seed: u64,
) -> Result<CentralOutcome, ProtocolError> {
    check_common(players, target, spec, cfg)?;
    let eta_max = players.iter().map(|p| p.noise_rate).fold(0.0, f64::max);
    if eta_max > cfg.epsilon {
        return Err(ProtocolError::NoiseAboveTarget {
            eta_max,
            eps: cfg.epsilon,
        });
    }
    central_loop(
        players,
        target,
        spec,
        cfg,
        master_seed,
        RoundLearner::AgnosticBoost,
        true,
    )
}

/// Dispatch on the configured variant.
pub fn run_centralized(
    players: &[Player],
    target: &TargetConcept,
    spec: &HypothesisClassSpec,
    cfg: &CentralizedConfig,
    master_seed: u64,
) -> Result<CentralOutcome, ProtocolError> {
    match cfg.variant {
        CentralizedVariant::Central => {
            centralized_learning(players, target, spec, cfg, master_seed)
        }
        CentralizedVariant::CentralBoost => {
            centralized_learning_boost(players, target, spec, cfg, master_seed)
        }
        CentralizedVariant::CentralCn => {
            centralized_learning_cn(players, target, spec, cfg, master_seed)
        }
        CentralizedVariant::CentralCnBoost => {
            centralized_learning_cn_boost(players, target, spec, cfg, master_seed)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distribution::CleanDistribution;
    use crate::hypothesis::Polarity;

    #[test]
    fn weighted_noise_rate_cases() {
        assert_eq!(weighted_noise_rate(&[1.0, 1.0], &[0.1, 0.3]), 0.2);
        assert_eq!(weighted_noise_rate(&[0.0, 5.0], &[0.1, 0.3]), 0.3);
        assert!((weighted_noise_rate(&[1.0, 2.0], &[0.0, 0.3]) - 0.2).abs() < 1e-15);
    }

    #[test]
    fn weighted_noise_rate_scale_invariant_and_bounded() {
        let w = [1.0, 4.0, 2.0];
        let r = [0.1, 0.4, 0.2];
        let a = weighted_noise_rate(&w, &r);
        let doubled: Vec<f64> = w.iter().map(|x| x * 2.0).collect();
        // Doubling is exact in binary floating point.
        assert_eq!(a, weighted_noise_rate(&doubled, &r));
        assert!(a <= 0.4);
    }

    #[test]
    fn derived_parameters_follow_header() {
        let cfg = CentralizedConfig::desk(0.2, 0.1, CentralizedVariant::Central);
        // ceil(log2(4/0.1)) = ceil(5.32) = 6 halvings.
        assert_eq!(cfg.rounds(4), 60);
        assert_eq!(cfg.eps_prime(), 0.2 / 6.0);
        assert_eq!(cfg.delta_prime(4), 0.1 / 240.0);
        // Reconstructing the inputs from the derived values.
        assert_eq!(cfg.eps_prime() * 6.0, cfg.epsilon);
        assert_eq!(cfg.delta_prime(4) * 4.0 * cfg.rounds(4) as f64, cfg.delta);
    }

    fn quick_players(k: usize, eta: f64, master: u64) -> Vec<Player> {
        (0..k)
            .map(|i| Player::new(i, CleanDistribution::uniform_unit(1), eta, master).unwrap())
            .collect()
    }

    #[test]
    fn single_round_majority_equals_single_hypothesis() {
        // k=1, delta=0.5 gives ceil(log2(2)) = 1 halving; multiplier 1.
        let mut cfg = CentralizedConfig::new(0.3, 0.5, CentralizedVariant::Central);
        cfg.t_multiplier = 1;
        let players = quick_players(1, 0.0, 42);
        let target = TargetConcept::new(Hypothesis::threshold(0.5, Polarity::Positive));
        let spec = HypothesisClassSpec::threshold_1d();
        let out = centralized_learning(&players, &target, &spec, &cfg, 42).unwrap();
        assert_eq!(out.rounds_used, 1);
        let single = &out.diagnostics.round_hypotheses[0];
        for x in [0.0, 0.2, 0.4, 0.6, 0.8, 1.0] {
            assert_eq!(out.hypothesis.predict(&[x]), single.predict(&[x]));
        }
    }

    #[test]
    fn weights_double_exactly_per_failure() {
        let players = quick_players(3, 0.2, 9);
        let target = TargetConcept::new(Hypothesis::threshold(0.5, Polarity::Positive));
        let spec = HypothesisClassSpec::threshold_1d();
        let mut cfg = CentralizedConfig::desk(0.2, 0.2, CentralizedVariant::CentralCn);
        cfg.t_multiplier = 2;
        let out = centralized_learning_cn(&players, &target, &spec, &cfg, 9).unwrap();
        for (w, f) in out
            .diagnostics
            .final_weights
            .iter()
            .zip(&out.diagnostics.fail_counts)
        {
            assert_eq!(*w, 2.0f64.powi(*f as i32));
        }
    }

    #[test]
    fn passing_every_round_keeps_weight_one() {
        // Identical easy players: the consistent hypothesis is accurate, so
        // everyone passes every round and no weight ever doubles.
        let players = quick_players(2, 0.0, 77);
        let target = TargetConcept::new(Hypothesis::threshold(0.5, Polarity::Positive));
        let spec = HypothesisClassSpec::threshold_1d();
        let mut cfg = CentralizedConfig::desk(0.3, 0.2, CentralizedVariant::Central);
        cfg.t_multiplier = 3;
        let out = centralized_learning(&players, &target, &spec, &cfg, 77).unwrap();
        assert!(out.diagnostics.final_weights.iter().all(|w| *w == 1.0));
        assert!(out.max_clean_error() <= 0.3);
    }

    #[test]
    fn cn_boost_requires_noise_within_target() {
        let players = quick_players(2, 0.25, 5);
        let target = TargetConcept::new(Hypothesis::threshold(0.5, Polarity::Positive));
        let spec = HypothesisClassSpec::threshold_1d();
        let cfg = CentralizedConfig::desk(0.2, 0.1, CentralizedVariant::CentralCnBoost);
        assert!(matches!(
            centralized_learning_cn_boost(&players, &target, &spec, &cfg, 5),
            Err(ProtocolError::NoiseAboveTarget { .. })
        ));
    }

    #[test]
    fn noiseless_required_for_central() {
        let players = quick_players(2, 0.1, 5);
        let target = TargetConcept::new(Hypothesis::threshold(0.5, Polarity::Positive));
        let spec = HypothesisClassSpec::threshold_1d();
        let cfg = CentralizedConfig::desk(0.2, 0.1, CentralizedVariant::Central);
        assert!(matches!(
            centralized_learning(&players, &target, &spec, &cfg, 5),
            Err(ProtocolError::NoiselessRequired(_))
        ));
    }
}
