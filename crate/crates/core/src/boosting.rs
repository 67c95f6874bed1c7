//! AdaBoost, distributed boosting over per-player reservoirs, and a
//! weight-capped smooth booster for the classification-noise regime.
//!
//! The distributed variant follows the reservoir scheme: a one-time
//! multinomial preprocessing step fixes each player's reservoir size so the
//! total pool is exactly the boosting budget, and every round the center
//! requests a small working sample drawn weight-proportionally from the
//! reservoirs. All round weights use the exact weighted error measured on
//! the full pool, so a single player degenerates to AdaBoost on the pooled
//! sample, stream for stream.
//!
//! The agnostic booster replaces the internals of a full agnostic boosting
//! algorithm with a weight cap (no example's normalized weight may exceed
//! C_cap/m) and an ERM weak learner on a larger working draw; it keeps the
//! same interface and the same round/sample budgets.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::distribution::{sample_noisy, DistributionError, Player, TargetConcept};
use crate::hypothesis::{
    empirical_error, learn_erm, weak_learn, Hypothesis, HypothesisClassSpec, HypothesisError,
    LabeledExample,
};
use crate::network::{
    charge_allocation_message, charge_boost_sync, charge_samples, multinomial_allocation,
    CommLedger, NetworkError,
};
use crate::rng::{seeded_rng, stream};

#[derive(Debug, Error)]
pub enum BoostError {
    #[error("weak learner returned weighted error {0} >= 1/2")]
    WeakLearnerContract(f64),
    #[error("sample is empty")]
    EmptySample,
    #[error("reservoir is empty")]
    EmptyReservoir,
    #[error("noise rate {eta_max} exceeds target error {eps}; boosting past the noise rate is unsupported")]
    NoiseAboveTarget { eta_max: f64, eps: f64 },
    #[error("invalid boost config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Hypothesis(#[from] HypothesisError),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Distribution(#[from] DistributionError),
}

/// Boosting knobs and the pinned constants behind every budget.
#[derive(Debug, Clone, PartialEq)]
pub struct BoostConfig {
    /// Edge assumed for round budgeting; measured edges are what the run
    /// actually uses.
    pub edge_gamma: f64,
    /// Maximum boosting rounds T (also the T in the ensemble-VC budget).
    pub max_rounds: usize,
    /// Stop once the pool training error reaches this (default 0).
    pub target_training_error: f64,
    /// Budget multiplier in m_boost.
    pub c_boost: f64,
    /// Working sample per round is ceil(c_round * d).
    pub c_round: f64,
    /// Smooth-booster weight cap is c_cap / m.
    pub c_cap: f64,
    /// Agnostic round-cap multiplier.
    pub c_ag: f64,
    /// Constant in the boosted-ensemble VC bound.
    pub c_vc: f64,
    /// Per-player weight-summary width for sync accounting (0 disables).
    pub weight_sync_bits: u64,
}

impl Default for BoostConfig {
    fn default() -> Self {
        Self {
            edge_gamma: 0.1,
            max_rounds: 32,
            target_training_error: 0.0,
            c_boost: 1.0,
            c_round: 10.0,
            c_cap: 4.0,
            c_ag: 8.0,
            c_vc: 1.0,
            weight_sync_bits: 64,
        }
    }
}

impl BoostConfig {
    pub fn validate(&self) -> Result<(), BoostError> {
        if !(self.edge_gamma > 0.0 && self.edge_gamma <= 0.5) {
            return Err(BoostError::InvalidConfig(format!(
                "edge_gamma must be in (0, 1/2], got {}",
                self.edge_gamma
            )));
        }
        if self.max_rounds == 0 {
            return Err(BoostError::InvalidConfig("max_rounds must be >= 1".into()));
        }
        for (name, v) in [
            ("c_boost", self.c_boost),
            ("c_round", self.c_round),
            ("c_cap", self.c_cap),
            ("c_ag", self.c_ag),
            ("c_vc", self.c_vc),
        ] {
            if !(v > 0.0) {
                return Err(BoostError::InvalidConfig(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        if self.c_cap < 1.0 {
            return Err(BoostError::InvalidConfig(
                "c_cap must be >= 1 or no weight vector can sum to 1".into(),
            ));
        }
        Ok(())
    }
}

/// One player's pool of labeled points. Boosting weights for the pool are
/// tracked by the run, not stored here.
#[derive(Debug, Clone)]
pub struct Reservoir {
    pub owner: usize,
    pub points: Vec<LabeledExample>,
    pub weights: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoostRound {
    pub hypothesis: Hypothesis,
    pub weighted_error: f64,
    pub alpha: f64,
}

#[derive(Debug, Clone)]
pub struct BoostOutcome {
    /// Weighted-majority ensemble of the per-round weak hypotheses.
    pub ensemble: Hypothesis,
    pub rounds: Vec<BoostRound>,
    /// Exact pool training error of the partial ensemble after each round.
    pub training_error_trace: Vec<f64>,
    /// Reservoir budget m_boost (the pooled sample size).
    pub budget: u64,
    pub samples_consumed: u64,
}

impl BoostOutcome {
    pub fn rounds_used(&self) -> usize {
        self.rounds.len()
    }
}

/// Rounds that force zero training error on m points assuming edge gamma:
/// ceil(ln(m) / (2 gamma^2)), clamped to at least 1.
pub fn rounds_needed(m: u64, gamma: f64) -> u64 {
    if m <= 1 {
        return 1;
    }
    let t = (m as f64).ln() / (2.0 * gamma * gamma);
    (t.ceil() as u64).max(1)
}

/// VC budget of a T-round majority ensemble over a base class of dimension
/// d: ceil(c_vc * d * T * ceil(log2(T+1))).
pub fn ensemble_vc_dimension(d: u64, t: u64, c_vc: f64) -> u64 {
    let log_t = (64 - t.leading_zeros()) as u64; // ceil(log2(t+1)) for t >= 1
    ((c_vc * (d * t * log_t) as f64).ceil() as u64).max(1)
}

/// Reservoir budget for boosting to error eps. A function of (d, T, eps)
/// and the pinned constants only — never of the number of players.
pub fn boost_budget(d: u64, eps: f64, cfg: &BoostConfig) -> u64 {
    let dvc = ensemble_vc_dimension(d, cfg.max_rounds as u64, cfg.c_vc);
    ((cfg.c_boost * dvc as f64 / eps).ceil() as u64).max(1)
}

/// A weak learner consuming a weighted sample.
pub trait WeakLearner {
    fn learn(
        &mut self,
        sample: &[LabeledExample],
        weights: &[f64],
    ) -> Result<(Hypothesis, f64), BoostError>;
}

/// Exact weighted stump/threshold ERM.
pub struct ExactWeakLearner;

impl WeakLearner for ExactWeakLearner {
    fn learn(
        &mut self,
        sample: &[LabeledExample],
        weights: &[f64],
    ) -> Result<(Hypothesis, f64), BoostError> {
        Ok(weak_learn(sample, weights)?)
    }
}

/// Weak learner that draws a weight-proportional working sample and fits
/// an exact stump on it — the single-player view of the sampling phase of
/// distributed boosting. Stream derivation matches the reservoir
/// resampling streams of [`distributed_boost`], so a k=1 distributed run
/// can be replayed through [`adaboost`].
pub struct ResamplingWeakLearner {
    pub stream_seed: u64,
    pub round_tag: u64,
    pub working_size: u64,
    next_call: u64,
}

impl ResamplingWeakLearner {
    pub fn new(stream_seed: u64, round_tag: u64, working_size: u64) -> Self {
        Self {
            stream_seed,
            round_tag,
            working_size,
            next_call: 0,
        }
    }
}

impl WeakLearner for ResamplingWeakLearner {
    fn learn(
        &mut self,
        sample: &[LabeledExample],
        weights: &[f64],
    ) -> Result<(Hypothesis, f64), BoostError> {
        let mut rng = seeded_rng(
            self.stream_seed,
            &[self.round_tag, stream::RESAMPLE, self.next_call],
        );
        self.next_call += 1;
        let working = weighted_resample(sample, weights, self.working_size, &mut rng);
        let uniform = vec![1.0 / working.len() as f64; working.len()];
        Ok(weak_learn(&working, &uniform)?)
    }
}

/// n i.i.d. draws with replacement, probability proportional to weights.
pub(crate) fn weighted_resample<R: Rng + ?Sized>(
    points: &[LabeledExample],
    weights: &[f64],
    n: u64,
    rng: &mut R,
) -> Vec<LabeledExample> {
    debug_assert_eq!(points.len(), weights.len());
    let mut cum = Vec::with_capacity(weights.len());
    let mut acc = 0.0;
    for w in weights {
        acc += w;
        cum.push(acc);
    }
    let total = acc;
    (0..n)
        .map(|_| {
            let u = rng.random::<f64>() * total;
            let idx = cum.partition_point(|&c| c <= u).min(points.len() - 1);
            points[idx].clone()
        })
        .collect()
}

/// Weight-proportional i.i.d. redraw from one reservoir; valid even when
/// n exceeds the reservoir size.
pub fn resample_from_reservoir<R: Rng + ?Sized>(
    r: &Reservoir,
    n: u64,
    rng: &mut R,
) -> Result<Vec<LabeledExample>, BoostError> {
    if r.points.is_empty() {
        return Err(BoostError::EmptyReservoir);
    }
    Ok(weighted_resample(&r.points, &r.weights, n, rng))
}

/// Multinomial reservoir sizing: splits m_boost uniformly across k players
/// and charges the size announcement. The sizes always sum to m_boost.
pub fn init_reservoirs(
    m_boost: u64,
    k: usize,
    rng: &mut ChaCha8Rng,
    ledger: &mut CommLedger,
    round: u64,
) -> Result<Vec<u64>, BoostError> {
    let weights = vec![1.0 / k as f64; k];
    let sizes = multinomial_allocation(m_boost, &weights, rng)?;
    charge_allocation_message(ledger, k as u64, m_boost, round);
    Ok(sizes)
}

// Weights and running ensemble margins over one or more point pools.
struct PoolState<'a> {
    pools: Vec<&'a [LabeledExample]>,
    weights: Vec<Vec<f64>>,
    margins: Vec<Vec<f64>>,
    total_points: u64,
}

impl<'a> PoolState<'a> {
    fn new(pools: Vec<&'a [LabeledExample]>) -> Self {
        let total_points: u64 = pools.iter().map(|p| p.len() as u64).sum();
        let w0 = 1.0 / total_points as f64;
        let weights = pools.iter().map(|p| vec![w0; p.len()]).collect();
        let margins = pools.iter().map(|p| vec![0.0; p.len()]).collect();
        Self {
            pools,
            weights,
            margins,
            total_points,
        }
    }

    /// Adopt the reservoirs' points and current weights as the run state.
    fn from_reservoirs(reservoirs: &'a [Reservoir]) -> Self {
        let pools: Vec<&[LabeledExample]> =
            reservoirs.iter().map(|r| r.points.as_slice()).collect();
        let total_points: u64 = pools.iter().map(|p| p.len() as u64).sum();
        let weights = reservoirs.iter().map(|r| r.weights.clone()).collect();
        let margins = pools.iter().map(|p| vec![0.0; p.len()]).collect();
        Self {
            pools,
            weights,
            margins,
            total_points,
        }
    }

    fn pool_weight_totals(&self) -> Vec<f64> {
        self.weights.iter().map(|w| w.iter().sum()).collect()
    }

    /// Exact weighted error of h over the pooled points.
    fn weighted_error(&self, h: &Hypothesis) -> f64 {
        let mut mis = 0.0;
        let mut tot = 0.0;
        for (pool, w) in self.pools.iter().zip(&self.weights) {
            for (ex, wi) in pool.iter().zip(w) {
                tot += wi;
                if h.predict(&ex.x) != ex.y {
                    mis += wi;
                }
            }
        }
        mis / tot
    }

    /// AdaBoost multiplicative update followed by global renormalization.
    fn update_weights(&mut self, h: &Hypothesis, alpha: f64) {
        for (pool, w) in self.pools.iter().zip(self.weights.iter_mut()) {
            for (ex, wi) in pool.iter().zip(w.iter_mut()) {
                let u = if h.predict(&ex.x) { 1.0 } else { -1.0 };
                *wi *= (-alpha * ex.signed_label() * u).exp();
            }
        }
        let mut total = 0.0;
        for w in &self.weights {
            for wi in w {
                total += wi;
            }
        }
        for w in self.weights.iter_mut() {
            for wi in w.iter_mut() {
                *wi /= total;
            }
        }
    }

    /// Clamp normalized weights to `cap` by water-filling: pinned entries
    /// sit exactly at the cap, the rest scale up to keep the sum at 1.
    fn enforce_cap(&mut self, cap: f64) {
        let mut pinned: Vec<Vec<bool>> =
            self.weights.iter().map(|w| vec![false; w.len()]).collect();
        loop {
            let n_pinned: usize = pinned.iter().flatten().filter(|b| **b).count();
            let free_target = 1.0 - cap * n_pinned as f64;
            let mut sum_free = 0.0;
            for (w, p) in self.weights.iter().zip(&pinned) {
                for (wi, pi) in w.iter().zip(p) {
                    if !pi {
                        sum_free += wi;
                    }
                }
            }
            if sum_free <= 0.0 || free_target <= 0.0 {
                break;
            }
            let scale = free_target / sum_free;
            let mut any_new = false;
            for (w, p) in self.weights.iter().zip(pinned.iter_mut()) {
                for (wi, pi) in w.iter().zip(p.iter_mut()) {
                    if !*pi && wi * scale > cap {
                        *pi = true;
                        any_new = true;
                    }
                }
            }
            if !any_new {
                for (w, p) in self.weights.iter_mut().zip(&pinned) {
                    for (wi, pi) in w.iter_mut().zip(p) {
                        if *pi {
                            *wi = cap;
                        } else {
                            *wi *= scale;
                        }
                    }
                }
                break;
            }
        }
    }

    /// Fold h into the running margins and return the exact training error
    /// of the partial ensemble (majority with ties to label 0).
    fn advance_margins(&mut self, h: &Hypothesis, alpha: f64) -> f64 {
        let mut wrong = 0u64;
        for (pool, m) in self.pools.iter().zip(self.margins.iter_mut()) {
            for (ex, mi) in pool.iter().zip(m.iter_mut()) {
                let u = if h.predict(&ex.x) { 1.0 } else { -1.0 };
                *mi += alpha * u;
                if (*mi > 0.0) != ex.y {
                    wrong += 1;
                }
            }
        }
        wrong as f64 / self.total_points as f64
    }

    fn max_weight(&self) -> f64 {
        self.weights.iter().flatten().copied().fold(0.0, f64::max)
    }
}

enum RoundOutcome {
    Continue,
    Perfect,
}

// One boosting round, shared by every variant: guard the round error into
// (0, 1/2), compute alpha, update weights and margins, record the trace.
fn boost_round(
    state: &mut PoolState,
    h_raw: Hypothesis,
    reported_err: f64,
    rounds: &mut Vec<BoostRound>,
    trace: &mut Vec<f64>,
    cap: Option<f64>,
) -> Result<RoundOutcome, BoostError> {
    if reported_err >= 0.5 {
        return Err(BoostError::WeakLearnerContract(reported_err));
    }
    let mut h = h_raw;
    let mut eps = state.weighted_error(&h);
    if eps >= 0.5 {
        // The pool disagrees with the working draw badly enough that the
        // complement is the better vote; alpha must stay positive.
        match h.flipped() {
            Some(f) => {
                h = f;
                eps = state.weighted_error(&h);
            }
            None => return Err(BoostError::WeakLearnerContract(eps)),
        }
        if eps >= 0.5 {
            return Err(BoostError::WeakLearnerContract(eps));
        }
    }
    if eps == 0.0 {
        // Perfect weak hypothesis: it alone is the answer.
        rounds.push(BoostRound {
            hypothesis: h,
            weighted_error: 0.0,
            alpha: 1.0,
        });
        trace.push(0.0);
        return Ok(RoundOutcome::Perfect);
    }
    let alpha = 0.5 * ((1.0 - eps) / eps).ln();
    state.update_weights(&h, alpha);
    if let Some(c) = cap {
        state.enforce_cap(c);
    }
    let train_err = state.advance_margins(&h, alpha);
    rounds.push(BoostRound {
        hypothesis: h,
        weighted_error: eps,
        alpha,
    });
    trace.push(train_err);
    Ok(RoundOutcome::Continue)
}

fn finish(
    rounds: Vec<BoostRound>,
    trace: Vec<f64>,
    budget: u64,
    perfect: bool,
) -> Result<BoostOutcome, BoostError> {
    let members: Vec<(Hypothesis, f64)> = if perfect {
        let last = rounds.last().expect("perfect round recorded");
        vec![(last.hypothesis.clone(), 1.0)]
    } else {
        rounds
            .iter()
            .map(|r| (r.hypothesis.clone(), r.alpha))
            .collect()
    };
    Ok(BoostOutcome {
        ensemble: Hypothesis::majority(members)?,
        rounds,
        training_error_trace: trace,
        budget,
        samples_consumed: budget,
    })
}

/// Standard AdaBoost on {-1,+1}-mapped labels with a pluggable weak
/// learner. Round weights come from the exact weighted error on the full
/// sample; a round with zero error short-circuits to that single
/// hypothesis with weight 1.
pub fn adaboost(
    sample: &[LabeledExample],
    weak: &mut dyn WeakLearner,
    cfg: &BoostConfig,
) -> Result<BoostOutcome, BoostError> {
    cfg.validate()?;
    if sample.is_empty() {
        return Err(BoostError::EmptySample);
    }
    let mut state = PoolState::new(vec![sample]);
    let mut rounds = Vec::new();
    let mut trace = Vec::new();
    for _ in 0..cfg.max_rounds {
        let (h, reported) = weak.learn(sample, &state.weights[0])?;
        match boost_round(&mut state, h, reported, &mut rounds, &mut trace, None)? {
            RoundOutcome::Perfect => return finish(rounds, trace, sample.len() as u64, true),
            RoundOutcome::Continue => {}
        }
        if *trace.last().unwrap() <= cfg.target_training_error {
            break;
        }
    }
    finish(rounds, trace, sample.len() as u64, false)
}

/// Distributed boosting: multinomial reservoir sizing, per-round
/// weight-proportional working draws transmitted to the blackboard, local
/// AdaBoost weight updates, and a per-round weight sync. Stops at zero
/// pool training error or after min(max_rounds, rounds_needed) rounds.
///
/// `round_tag` separates the player streams of independent invocations
/// (the enclosing protocol round) and is also the ledger round charged.
#[allow(clippy::too_many_arguments)]
pub fn distributed_boost(
    players: &[Player],
    target: &TargetConcept,
    spec: &HypothesisClassSpec,
    eps: f64,
    cfg: &BoostConfig,
    round_tag: u64,
    center_rng: &mut ChaCha8Rng,
    ledger: &mut CommLedger,
) -> Result<BoostOutcome, BoostError> {
    let probs = vec![1.0 / players.len().max(1) as f64; players.len()];
    distributed_boost_weighted(
        players, &probs, target, spec, eps, cfg, round_tag, center_rng, ledger,
    )
}

/// [`distributed_boost`] over a weighted mixture of the players: reservoir
/// sizes follow Multinomial(m_boost, mixture_weights) instead of the
/// uniform split, which is all the weighted setting changes.
#[allow(clippy::too_many_arguments)]
pub fn distributed_boost_weighted(
    players: &[Player],
    mixture_weights: &[f64],
    target: &TargetConcept,
    spec: &HypothesisClassSpec,
    eps: f64,
    cfg: &BoostConfig,
    round_tag: u64,
    center_rng: &mut ChaCha8Rng,
    ledger: &mut CommLedger,
) -> Result<BoostOutcome, BoostError> {
    cfg.validate()?;
    if players.is_empty() {
        return Err(BoostError::EmptySample);
    }
    let d = spec.vc_dimension as u64;
    let m_boost = boost_budget(d, eps, cfg);
    let n_work = ((cfg.c_round * d as f64).ceil() as u64).max(1);
    let round_cap = (rounds_needed(m_boost, cfg.edge_gamma) as usize).min(cfg.max_rounds);

    let reservoirs = fill_reservoirs(
        players,
        mixture_weights,
        target,
        m_boost,
        round_tag,
        center_rng,
        ledger,
    )?;
    run_reservoir_boosting(ReservoirRun {
        players,
        reservoirs: &reservoirs,
        m_boost,
        n_work,
        round_cap,
        cfg,
        round_tag,
        center_rng,
        ledger,
        weak_step: &mut |working| {
            let uniform = vec![1.0 / working.len() as f64; working.len()];
            Ok(weak_learn(working, &uniform)?)
        },
        cap: None,
    })
}

/// Smooth agnostic distributed boosting in the regime eta_max <= eps:
/// normalized example weights are capped at c_cap/m so label noise cannot
/// dominate the pool, the weak step is an ERM call on a
/// ceil(c_round*d/beta^2) working draw (the beta-weak agnostic learner),
/// and rounds are capped at ceil(c_ag * ln(1/(eps(1-2 eta_max)))).
#[allow(clippy::too_many_arguments)]
pub fn agnostic_distributed_boost(
    players: &[Player],
    target: &TargetConcept,
    spec: &HypothesisClassSpec,
    eps: f64,
    beta: f64,
    cfg: &BoostConfig,
    round_tag: u64,
    center_rng: &mut ChaCha8Rng,
    ledger: &mut CommLedger,
) -> Result<BoostOutcome, BoostError> {
    let probs = vec![1.0 / players.len().max(1) as f64; players.len()];
    agnostic_distributed_boost_weighted(
        players, &probs, target, spec, eps, beta, cfg, round_tag, center_rng, ledger,
    )
}

/// [`agnostic_distributed_boost`] with weighted reservoir sizing, for the
/// centralized protocols' multiplicative-weights mixtures.
#[allow(clippy::too_many_arguments)]
pub fn agnostic_distributed_boost_weighted(
    players: &[Player],
    mixture_weights: &[f64],
    target: &TargetConcept,
    spec: &HypothesisClassSpec,
    eps: f64,
    beta: f64,
    cfg: &BoostConfig,
    round_tag: u64,
    center_rng: &mut ChaCha8Rng,
    ledger: &mut CommLedger,
) -> Result<BoostOutcome, BoostError> {
    cfg.validate()?;
    if players.is_empty() {
        return Err(BoostError::EmptySample);
    }
    if !(beta > 0.0 && beta < 0.5) {
        return Err(BoostError::InvalidConfig(format!(
            "beta must be in (0, 1/2), got {beta}"
        )));
    }
    let eta_max = players.iter().map(|p| p.noise_rate).fold(0.0, f64::max);
    if eta_max > eps {
        return Err(BoostError::NoiseAboveTarget { eta_max, eps });
    }

    let slowdown = 1.0 - 2.0 * eta_max;
    let t_ag = ((cfg.c_ag * (1.0 / (eps * slowdown)).ln()).ceil() as usize).max(1);
    let d = spec.vc_dimension as u64;
    let dvc = ensemble_vc_dimension(d, t_ag as u64, cfg.c_vc);
    let m_boost = ((cfg.c_boost * dvc as f64 / (eps * slowdown * slowdown)).ceil() as u64).max(1);
    let n_work = ((cfg.c_round * d as f64 / (beta * beta)).ceil() as u64).max(1);
    let cap = cfg.c_cap / m_boost as f64;

    let reservoirs = fill_reservoirs(
        players,
        mixture_weights,
        target,
        m_boost,
        round_tag,
        center_rng,
        ledger,
    )?;
    let erm_spec = spec.clone();
    run_reservoir_boosting(ReservoirRun {
        players,
        reservoirs: &reservoirs,
        m_boost,
        n_work,
        round_cap: t_ag,
        cfg,
        round_tag,
        center_rng,
        ledger,
        weak_step: &mut |working| {
            let h = learn_erm(&erm_spec, working)?;
            let err = empirical_error(&h, working)?;
            Ok((h, err))
        },
        cap: Some(cap),
    })
}

fn fill_reservoirs(
    players: &[Player],
    mixture_weights: &[f64],
    target: &TargetConcept,
    m_boost: u64,
    round_tag: u64,
    center_rng: &mut ChaCha8Rng,
    ledger: &mut CommLedger,
) -> Result<Vec<Reservoir>, BoostError> {
    let sizes = multinomial_allocation(m_boost, mixture_weights, center_rng)?;
    charge_allocation_message(ledger, players.len() as u64, m_boost, round_tag);
    let w0 = 1.0 / m_boost.max(1) as f64;
    Ok(players
        .iter()
        .zip(&sizes)
        .map(|(p, &n)| {
            let mut rng = p.stream(&[round_tag, stream::RESERVOIR]);
            Reservoir {
                owner: p.id,
                points: sample_noisy(p, target, n, &mut rng),
                weights: vec![w0; n as usize],
            }
        })
        .collect())
}

type WeakStep<'b> = &'b mut dyn FnMut(&[LabeledExample]) -> Result<(Hypothesis, f64), BoostError>;

struct ReservoirRun<'a, 'b> {
    players: &'a [Player],
    reservoirs: &'a [Reservoir],
    m_boost: u64,
    n_work: u64,
    round_cap: usize,
    cfg: &'a BoostConfig,
    round_tag: u64,
    center_rng: &'a mut ChaCha8Rng,
    ledger: &'a mut CommLedger,
    weak_step: WeakStep<'b>,
    cap: Option<f64>,
}

// The per-round engine shared by both distributed variants.
fn run_reservoir_boosting(run: ReservoirRun) -> Result<BoostOutcome, BoostError> {
    let ReservoirRun {
        players,
        reservoirs,
        m_boost,
        n_work,
        round_cap,
        cfg,
        round_tag,
        center_rng,
        ledger,
        weak_step,
        cap,
    } = run;

    let k = players.len();
    if reservoirs.iter().all(|r| r.points.is_empty()) {
        return Err(BoostError::EmptyReservoir);
    }
    let mut state = PoolState::from_reservoirs(reservoirs);
    let mut rounds = Vec::new();
    let mut trace = Vec::new();

    for t in 0..round_cap {
        let totals = state.pool_weight_totals();
        let grand: f64 = totals.iter().sum();
        let probs: Vec<f64> = totals.iter().map(|w| w / grand).collect();
        let alloc = multinomial_allocation(n_work, &probs, center_rng)?;
        charge_allocation_message(ledger, k as u64, n_work, round_tag);

        let mut working = Vec::with_capacity(n_work as usize);
        for (i, (&n, p)) in alloc.iter().zip(players).enumerate() {
            if state.pools[i].is_empty() {
                continue;
            }
            let mut rng = p.stream(&[round_tag, stream::RESAMPLE, t as u64]);
            working.extend(weighted_resample(
                state.pools[i],
                &state.weights[i],
                n,
                &mut rng,
            ));
        }
        charge_samples(ledger, n_work, round_tag, "boost working sample");

        let (h, reported) = weak_step(&working)?;
        match boost_round(&mut state, h, reported, &mut rounds, &mut trace, cap)? {
            RoundOutcome::Perfect => return finish(rounds, trace, m_boost, true),
            RoundOutcome::Continue => {}
        }
        charge_boost_sync(ledger, k as u64, cfg.weight_sync_bits, round_tag);

        if let Some(c) = cap {
            debug_assert!(state.max_weight() <= c + 1e-15);
        }
        if *trace.last().unwrap() <= cfg.target_training_error {
            break;
        }
    }
    finish(rounds, trace, m_boost, false)
}
