//! Player distributions, the realizable target, the classification-noise
//! oracle, and exact generalization-error measurement.
//!
//! Noise is applied at draw time and never stored: a player is a clean
//! distribution plus a rate eta < 1/2, so tests can measure both clean and
//! noisy errors of the same player. Every player owns ChaCha streams
//! derived from (master seed, player id, round, purpose); see [`crate::rng`].

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::hypothesis::{
    Hypothesis, HypothesisClass, HypothesisClassSpec, HypothesisError, LabeledExample,
};
use crate::network::{
    charge_allocation_message, charge_samples, multinomial_allocation, CommLedger, NetworkError,
};
use crate::rng::{child_seed, seeded_rng, stream};

#[derive(Debug, Error)]
pub enum DistributionError {
    #[error(
        "discrete support must be nonempty with positive probabilities summing to 1 (sum {0})"
    )]
    BadSupport(f64),
    #[error("uniform box must have positive volume in every coordinate")]
    EmptyBox,
    #[error("noise rate must lie in [0, 1/2), got {0}")]
    NoiseRateOutOfRange(f64),
    #[error("mixture weights must be nonempty, aligned, nonnegative, summing to 1 (sum {0})")]
    BadMixture(f64),
    #[error("exact error is not defined for this hypothesis/distribution combination: {0}")]
    UnsupportedTrueError(String),
    #[error(transparent)]
    Hypothesis(#[from] HypothesisError),
    #[error(transparent)]
    Network(#[from] NetworkError),
}

/// One atom of a discrete support: the point and its probability mass.
pub type SupportPoint = (Vec<f64>, f64);

/// A distribution over feature points (labels come from the target).
#[derive(Debug, Clone, PartialEq)]
pub enum CleanDistribution {
    Discrete { support: Vec<SupportPoint> },
    UniformBox { lo: Vec<f64>, hi: Vec<f64> },
}

impl CleanDistribution {
    pub fn discrete(support: Vec<SupportPoint>) -> Result<Self, DistributionError> {
        let sum: f64 = support.iter().map(|(_, p)| *p).sum();
        if support.is_empty() || (sum - 1.0).abs() > 1e-12 || support.iter().any(|(_, p)| *p <= 0.0)
        {
            return Err(DistributionError::BadSupport(sum));
        }
        Ok(CleanDistribution::Discrete { support })
    }

    pub fn uniform_box(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self, DistributionError> {
        if lo.is_empty() || lo.len() != hi.len() || lo.iter().zip(&hi).any(|(a, b)| !(a < b)) {
            return Err(DistributionError::EmptyBox);
        }
        Ok(CleanDistribution::UniformBox { lo, hi })
    }

    /// Uniform over the unit box in `dim` coordinates.
    pub fn uniform_unit(dim: usize) -> Self {
        CleanDistribution::UniformBox {
            lo: vec![0.0; dim],
            hi: vec![1.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            CleanDistribution::Discrete { support } => support[0].0.len(),
            CleanDistribution::UniformBox { lo, .. } => lo.len(),
        }
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        match self {
            CleanDistribution::Discrete { support } => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                for (x, p) in support {
                    acc += p;
                    if u < acc {
                        return x.clone();
                    }
                }
                support.last().unwrap().0.clone()
            }
            CleanDistribution::UniformBox { lo, hi } => lo
                .iter()
                .zip(hi)
                .map(|(a, b)| a + rng.random::<f64>() * (b - a))
                .collect(),
        }
    }
}

/// The realizable target concept shared by all players.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetConcept {
    h_star: Hypothesis,
}

impl TargetConcept {
    pub fn new(h_star: Hypothesis) -> Self {
        Self { h_star }
    }

    pub fn hypothesis(&self) -> &Hypothesis {
        &self.h_star
    }

    pub fn label(&self, x: &[f64]) -> bool {
        self.h_star.predict(x)
    }

    /// Realizability: the target must be a base member of the learners'
    /// class (never an ensemble).
    pub fn matches_class(&self, spec: &HypothesisClassSpec) -> bool {
        match (&self.h_star, spec.class) {
            (Hypothesis::Threshold { .. }, HypothesisClass::Threshold1D) => true,
            (Hypothesis::Interval { .. }, HypothesisClass::Interval1D) => true,
            (Hypothesis::Stump { feature, .. }, HypothesisClass::StumpND { features }) => {
                *feature < features
            }
            _ => false,
        }
    }
}

/// A clean distribution, a noise rate eta < 1/2, and a private seeded
/// stream root. The center knows every player's rate.
#[derive(Debug, Clone, PartialEq)]
pub struct Player {
    pub id: usize,
    pub clean: CleanDistribution,
    pub noise_rate: f64,
    pub stream_seed: u64,
}

impl Player {
    pub fn new(
        id: usize,
        clean: CleanDistribution,
        noise_rate: f64,
        master_seed: u64,
    ) -> Result<Self, DistributionError> {
        if !(0.0..0.5).contains(&noise_rate) {
            return Err(DistributionError::NoiseRateOutOfRange(noise_rate));
        }
        Ok(Self {
            id,
            clean,
            noise_rate,
            stream_seed: child_seed(master_seed, &[stream::PLAYER, id as u64]),
        })
    }

    /// The player's deterministic stream for a given (round, purpose, ...)
    /// tag list.
    pub fn stream(&self, tags: &[u64]) -> ChaCha8Rng {
        seeded_rng(self.stream_seed, tags)
    }
}

/// A weighted sub-mixture of players (uniform for the personalized
/// protocols, multiplicative-weight-normalized for the centralized ones).
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureSpec {
    members: Vec<usize>,
    weights: Vec<f64>,
}

impl MixtureSpec {
    pub fn uniform(members: Vec<usize>) -> Result<Self, DistributionError> {
        let k = members.len();
        if k == 0 {
            return Err(DistributionError::BadMixture(0.0));
        }
        Ok(Self {
            weights: vec![1.0 / k as f64; k],
            members,
        })
    }

    pub fn weighted(members: Vec<usize>, weights: Vec<f64>) -> Result<Self, DistributionError> {
        let sum: f64 = weights.iter().sum();
        if members.is_empty()
            || members.len() != weights.len()
            || (sum - 1.0).abs() > 1e-12
            || weights.iter().any(|w| *w < 0.0)
        {
            return Err(DistributionError::BadMixture(sum));
        }
        Ok(Self { members, weights })
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

/// n i.i.d. draws labeled by the target, no noise.
pub fn sample_clean<R: Rng + ?Sized>(
    p: &Player,
    target: &TargetConcept,
    n: u64,
    rng: &mut R,
) -> Vec<LabeledExample> {
    (0..n)
        .map(|_| {
            let x = p.clean.draw(rng);
            let y = target.label(&x);
            LabeledExample::new(x, y)
        })
        .collect()
}

/// n i.i.d. draws with each label independently flipped with probability
/// eta_i. At eta_i = 0 no flip randomness is consumed, so the stream
/// matches [`sample_clean`] exactly.
pub fn sample_noisy<R: Rng + ?Sized>(
    p: &Player,
    target: &TargetConcept,
    n: u64,
    rng: &mut R,
) -> Vec<LabeledExample> {
    (0..n)
        .map(|_| {
            let x = p.clean.draw(rng);
            let mut y = target.label(&x);
            if p.noise_rate > 0.0 && rng.random::<f64>() < p.noise_rate {
                y = !y;
            }
            LabeledExample::new(x, y)
        })
        .collect()
}

/// Noisy generalization error as an affine function of the clean error:
/// eta + clean_err * (1 - 2 eta).
pub fn noisy_error_formula(clean_err: f64, eta: f64) -> f64 {
    eta + clean_err * (1.0 - 2.0 * eta)
}

/// Which single coordinate a hypothesis depends on, if any.
fn sole_feature(h: &Hypothesis) -> Option<usize> {
    match h {
        Hypothesis::Threshold { .. } | Hypothesis::Interval { .. } => Some(0),
        Hypothesis::Stump { feature, .. } => Some(*feature),
        Hypothesis::Majority(ens) => {
            let mut it = ens.members().iter().map(|(m, _)| sole_feature(m));
            let first = it.next()??;
            for f in it {
                if f? != first {
                    return None;
                }
            }
            Some(first)
        }
    }
}

fn push_breakpoints(h: &Hypothesis, out: &mut Vec<f64>) {
    match h {
        Hypothesis::Threshold { t, .. } | Hypothesis::Stump { t, .. } => out.push(*t),
        Hypothesis::Interval { lo, hi } => {
            out.push(*lo);
            out.push(*hi);
        }
        Hypothesis::Majority(ens) => {
            for (m, _) in ens.members() {
                push_breakpoints(m, out);
            }
        }
    }
}

/// Exact disagreement mass on one coordinate interval [a, b]: both
/// predictors are piecewise constant between their breakpoints, so summing
/// segment lengths where the midpoint labels differ is exact.
fn segment_disagreement(
    h: &Hypothesis,
    h_star: &Hypothesis,
    a: f64,
    b: f64,
    coord: usize,
    probe: &mut [f64],
) -> Result<f64, DistributionError> {
    let mut cuts = vec![a, b];
    push_breakpoints(h, &mut cuts);
    push_breakpoints(h_star, &mut cuts);
    cuts.retain(|c| *c >= a && *c <= b);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();

    let mut mass = 0.0;
    for w in cuts.windows(2) {
        let mid = 0.5 * (w[0] + w[1]);
        probe[coord] = mid;
        if h.try_predict(probe)? != h_star.try_predict(probe)? {
            mass += w[1] - w[0];
        }
    }
    Ok(mass / (b - a))
}

/// P(h = 1) for a single-coordinate base hypothesis under the box.
fn prob_positive(h: &Hypothesis, lo: &[f64], hi: &[f64]) -> Option<f64> {
    match h {
        Hypothesis::Threshold { t, polarity } => {
            let frac = ((t - lo[0]) / (hi[0] - lo[0])).clamp(0.0, 1.0);
            Some(match polarity {
                crate::hypothesis::Polarity::Positive => frac,
                crate::hypothesis::Polarity::Negative => 1.0 - frac,
            })
        }
        Hypothesis::Stump {
            feature,
            t,
            polarity,
        } => {
            if *feature >= lo.len() {
                return None;
            }
            let frac = ((t - lo[*feature]) / (hi[*feature] - lo[*feature])).clamp(0.0, 1.0);
            Some(match polarity {
                crate::hypothesis::Polarity::Positive => frac,
                crate::hypothesis::Polarity::Negative => 1.0 - frac,
            })
        }
        Hypothesis::Interval { lo: ilo, hi: ihi } => {
            let overlap = (ihi.min(hi[0]) - ilo.max(lo[0])).max(0.0);
            Some(overlap / (hi[0] - lo[0]))
        }
        Hypothesis::Majority(_) => None,
    }
}

/// Exact clean disagreement mass Pr[h(x) != h*(x)]: direct summation for
/// discrete supports; interval-length arithmetic for uniform boxes. On a
/// box, hypotheses sharing one coordinate (including depth-1 ensembles) are
/// handled by slab partition, and two base hypotheses on different
/// coordinates by independence; anything else is unsupported.
pub fn true_error(
    h: &Hypothesis,
    d: &CleanDistribution,
    target: &TargetConcept,
) -> Result<f64, DistributionError> {
    let h_star = target.hypothesis();
    match d {
        CleanDistribution::Discrete { support } => {
            let mut mass = 0.0;
            for (x, p) in support {
                if h.try_predict(x)? != h_star.try_predict(x)? {
                    mass += p;
                }
            }
            Ok(mass)
        }
        CleanDistribution::UniformBox { lo, hi } => {
            let mut probe: Vec<f64> = lo.iter().zip(hi).map(|(a, b)| 0.5 * (a + b)).collect();
            match (sole_feature(h), sole_feature(h_star)) {
                (Some(f), Some(g)) if f == g => {
                    if f >= lo.len() {
                        return Err(HypothesisError::DimensionMismatch {
                            need: f + 1,
                            got: lo.len(),
                        }
                        .into());
                    }
                    segment_disagreement(h, h_star, lo[f], hi[f], f, &mut probe)
                }
                (Some(_), Some(_)) => {
                    // Distinct coordinates of a product measure are
                    // independent.
                    let p = prob_positive(h, lo, hi).ok_or_else(|| {
                        DistributionError::UnsupportedTrueError(
                            "ensemble over several coordinates".into(),
                        )
                    })?;
                    let q = prob_positive(h_star, lo, hi).ok_or_else(|| {
                        DistributionError::UnsupportedTrueError(
                            "ensemble over several coordinates".into(),
                        )
                    })?;
                    Ok(p * (1.0 - q) + q * (1.0 - p))
                }
                _ => Err(DistributionError::UnsupportedTrueError(
                    "ensemble members span several coordinates".into(),
                )),
            }
        }
    }
}

/// Draw `m` examples from the mixture: the center multinomially splits the
/// request among members, charges the allocation message and the `m`
/// transmitted samples, each member draws its quota from its own noisy
/// stream for this round, and the concatenation is shuffled center-side.
pub fn sample_mixture(
    mix: &MixtureSpec,
    players: &[Player],
    target: &TargetConcept,
    m: u64,
    round: u64,
    center_rng: &mut ChaCha8Rng,
    ledger: &mut CommLedger,
) -> Result<Vec<LabeledExample>, DistributionError> {
    let k = mix.members().len() as u64;
    let counts = multinomial_allocation(m, mix.weights(), center_rng)?;
    charge_allocation_message(ledger, k, m, round);

    let mut out = Vec::with_capacity(m as usize);
    for (&id, &n) in mix.members().iter().zip(&counts) {
        let p = &players[id];
        debug_assert_eq!(p.id, id, "player id must equal its slice index");
        let mut rng = p.stream(&[round, stream::MIXTURE]);
        out.extend(sample_noisy(p, target, n, &mut rng));
    }
    charge_samples(ledger, m, round, "mixture sample");
    out.shuffle(center_rng);
    Ok(out)
}


#[cfg(test)]
mod properties {
    use super::*;
    use crate::hypothesis::Polarity;
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]

        // Exact slab arithmetic against a midpoint-rule grid integral.
        #[test]
        fn box_error_matches_grid_integration(
            t_h in 0.0f64..1.0,
            t_star in 0.0f64..1.0,
            pos in any::<bool>(),
        ) {
            let polarity = if pos { Polarity::Positive } else { Polarity::Negative };
            let h = Hypothesis::threshold(t_h, polarity);
            let target = TargetConcept::new(Hypothesis::threshold(t_star, Polarity::Positive));
            let d = CleanDistribution::uniform_unit(1);
            let exact = true_error(&h, &d, &target).unwrap();

            let n = 1_000_000usize;
            let mut wrong = 0u64;
            for i in 0..n {
                let x = [(i as f64 + 0.5) / n as f64];
                if h.predict(&x) != target.label(&x) {
                    wrong += 1;
                }
            }
            let grid = wrong as f64 / n as f64;
            prop_assert!((exact - grid).abs() < 1e-5, "exact {exact} grid {grid}");
        }
    }
}
