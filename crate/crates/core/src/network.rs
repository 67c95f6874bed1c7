//! Simulated broadcast channel with exact accounting of samples, bits, and
//! rounds.
//!
//! Costs follow the shared-blackboard model: anything a player transmits is
//! charged once no matter how many parties read it, and samples a player
//! draws for purely local use (TEST variants, baseline learning) are never
//! charged here at all — they only count toward sample complexity, which
//! the protocols track separately.

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum NetworkError {
    #[error("allocation weights must be nonnegative and sum to 1, got sum {0}")]
    WeightsNotNormalized(f64),
    #[error("allocation needs at least one weight")]
    EmptyWeights,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sender {
    Center,
    Player(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Payload {
    Samples(u64),
    Bits(u64),
}

/// One logged transmission on the shared blackboard.
#[derive(Debug, Clone, PartialEq)]
pub struct BroadcastEvent {
    pub sender: Sender,
    pub payload: Payload,
    pub round: u64,
    pub annotation: String,
}

/// Monotone counters of samples transmitted, bits transmitted, and protocol
/// rounds, plus the per-event log they aggregate.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CommLedger {
    samples_sent: u64,
    bits_sent: u64,
    rounds: u64,
    events: Vec<BroadcastEvent>,
}

impl CommLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn samples_sent(&self) -> u64 {
        self.samples_sent
    }

    pub fn bits_sent(&self) -> u64 {
        self.bits_sent
    }

    pub fn rounds(&self) -> u64 {
        self.rounds
    }

    pub fn events(&self) -> &[BroadcastEvent] {
        &self.events
    }

    fn log(&mut self, sender: Sender, payload: Payload, round: u64, annotation: impl Into<String>) {
        self.rounds = self.rounds.max(round);
        self.events.push(BroadcastEvent {
            sender,
            payload,
            round,
            annotation: annotation.into(),
        });
    }

    /// Per-round (round, samples, bits) aggregation of the event log.
    pub fn per_round_log(&self) -> Vec<(u64, u64, u64)> {
        let mut out: Vec<(u64, u64, u64)> = Vec::new();
        for ev in &self.events {
            if out.last().map(|r| r.0) != Some(ev.round) {
                out.push((ev.round, 0, 0));
            }
            let last = out.last_mut().unwrap();
            match ev.payload {
                Payload::Samples(n) => last.1 += n,
                Payload::Bits(n) => last.2 += n,
            }
        }
        out
    }
}

/// ceil(log2(v)) for v >= 1.
fn ceil_log2(v: u64) -> u64 {
    debug_assert!(v >= 1);
    (64 - (v - 1).leading_zeros()) as u64
}

/// Split `m` draws across cells with the given probabilities; the counts
/// sum to exactly `m` and are jointly Multinomial(m, weights). Implemented
/// as a chain of conditional binomials, so a single cell consumes no
/// randomness at all.
pub fn multinomial_allocation<R: Rng + ?Sized>(
    m: u64,
    weights: &[f64],
    rng: &mut R,
) -> Result<Vec<u64>, NetworkError> {
    if weights.is_empty() {
        return Err(NetworkError::EmptyWeights);
    }
    let sum: f64 = weights.iter().sum();
    if (sum - 1.0).abs() > 1e-9 || weights.iter().any(|w| *w < 0.0) {
        return Err(NetworkError::WeightsNotNormalized(sum));
    }

    let k = weights.len();
    let mut counts = vec![0u64; k];
    let mut remaining = m;
    let mut rem_p = 1.0f64;
    for j in 0..k - 1 {
        if remaining == 0 {
            break;
        }
        let p = (weights[j] / rem_p).clamp(0.0, 1.0);
        let n = if p >= 1.0 - 1e-12 {
            remaining
        } else if p <= 0.0 {
            0
        } else {
            Binomial::new(remaining, p)
                .expect("p is clamped to [0,1]")
                .sample(rng)
        };
        counts[j] = n;
        remaining -= n;
        rem_p -= weights[j];
    }
    counts[k - 1] = remaining;
    Ok(counts)
}

/// Charge `n` transmitted samples.
pub fn charge_samples(ledger: &mut CommLedger, n: u64, round: u64, annotation: impl Into<String>) {
    ledger.samples_sent += n;
    ledger.log(
        Sender::Center,
        Payload::Samples(n),
        round,
        annotation.into(),
    );
}

/// Charge the center's per-player sample-count message: each of the `k`
/// live players is told a count in [0, m], costing ceil(log2(m+2)) bits.
/// (Charging per live player is one reading of the allocation step; a
/// single total broadcast would cost a k-th of this. Only bits accounting
/// is affected.)
pub fn charge_allocation_message(ledger: &mut CommLedger, k: u64, m: u64, round: u64) {
    let bits = k * ceil_log2(m + 2);
    ledger.bits_sent += bits;
    ledger.log(
        Sender::Center,
        Payload::Bits(bits),
        round,
        format!("allocation counts to {k} players"),
    );
}

/// Charge the one pass/fail vote bit each live player sends after a test.
pub fn charge_test_votes(ledger: &mut CommLedger, live_player_count: u64, round: u64) {
    ledger.bits_sent += live_player_count;
    ledger.log(
        Sender::Center,
        Payload::Bits(live_player_count),
        round,
        "test votes",
    );
}

/// Charge the per-round boosting weight synchronisation: `k` players each
/// send a weight summary of `summary_bits` bits (0 disables accounting).
pub fn charge_boost_sync(ledger: &mut CommLedger, k: u64, summary_bits: u64, round: u64) {
    let bits = k * summary_bits;
    ledger.bits_sent += bits;
    ledger.log(
        Sender::Center,
        Payload::Bits(bits),
        round,
        "boost weight sync",
    );
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded_rng;

    #[test]
    fn single_cell_gets_everything() {
        let mut rng = seeded_rng(1, &[]);
        assert_eq!(multinomial_allocation(10, &[1.0], &mut rng).unwrap(), [10]);
        assert_eq!(
            multinomial_allocation(0, &[0.5, 0.5], &mut rng).unwrap(),
            [0, 0]
        );
    }

    #[test]
    fn counts_always_sum_to_m() {
        let mut rng = seeded_rng(7, &[]);
        for &k in &[1usize, 2, 3, 8] {
            let w = vec![1.0 / k as f64; k];
            for m in [0u64, 1, 17, 1000] {
                let c = multinomial_allocation(m, &w, &mut rng).unwrap();
                assert_eq!(c.iter().sum::<u64>(), m);
            }
        }
    }

    #[test]
    fn uniform_counts_within_three_sigma() {
        // m=10^4 over 4 uniform cells: sigma = sqrt(m p (1-p)) = 43.3.
        let mut rng = seeded_rng(1234, &[]);
        let c = multinomial_allocation(10_000, &[0.25; 4], &mut rng).unwrap();
        for &n in &c {
            assert!(
                (n as f64 - 2500.0).abs() <= 3.0 * 43.3,
                "count {n} too far from 2500"
            );
        }
    }

    #[test]
    fn rejects_unnormalized_weights() {
        let mut rng = seeded_rng(1, &[]);
        assert!(matches!(
            multinomial_allocation(5, &[0.4, 0.4], &mut rng),
            Err(NetworkError::WeightsNotNormalized(_))
        ));
        assert!(matches!(
            multinomial_allocation(5, &[], &mut rng),
            Err(NetworkError::EmptyWeights)
        ));
    }

    #[test]
    fn sample_charges_accumulate() {
        let mut ledger = CommLedger::new();
        charge_samples(&mut ledger, 0, 1, "empty");
        assert_eq!(ledger.samples_sent(), 0);
        assert_eq!(ledger.events().len(), 1);
        charge_samples(&mut ledger, 3, 1, "a");
        charge_samples(&mut ledger, 4, 2, "b");
        assert_eq!(ledger.samples_sent(), 7);
        assert_eq!(ledger.rounds(), 2);
    }

    #[test]
    fn allocation_message_bit_widths() {
        let mut ledger = CommLedger::new();
        charge_allocation_message(&mut ledger, 1, 0, 1);
        assert_eq!(ledger.bits_sent(), 1); // ceil(log2(2)) = 1
        let mut ledger = CommLedger::new();
        charge_allocation_message(&mut ledger, 8, 255, 1);
        assert_eq!(ledger.bits_sent(), 72); // ceil(log2(257)) = 9, times 8
    }

    #[test]
    fn doubling_m_adds_at_most_k_bits() {
        for m in [1u64, 7, 64, 1000] {
            let k = 5;
            let mut a = CommLedger::new();
            charge_allocation_message(&mut a, k, m, 1);
            let mut b = CommLedger::new();
            charge_allocation_message(&mut b, k, 2 * m, 1);
            assert!(b.bits_sent() <= a.bits_sent() + k);
        }
    }

    #[test]
    fn vote_and_sync_charges() {
        let mut ledger = CommLedger::new();
        charge_test_votes(&mut ledger, 0, 1);
        assert_eq!(ledger.bits_sent(), 0);
        charge_test_votes(&mut ledger, 8, 1);
        charge_test_votes(&mut ledger, 4, 2);
        charge_test_votes(&mut ledger, 4, 2);
        assert_eq!(ledger.bits_sent(), 16);
        charge_boost_sync(&mut ledger, 1, 64, 3);
        assert_eq!(ledger.bits_sent(), 80);
        charge_boost_sync(&mut ledger, 8, 64, 3);
        assert_eq!(ledger.bits_sent(), 80 + 512);
        charge_boost_sync(&mut ledger, 8, 0, 4);
        assert_eq!(ledger.bits_sent(), 80 + 512);
    }

    #[test]
    fn per_round_log_conserves_samples() {
        let mut ledger = CommLedger::new();
        charge_samples(&mut ledger, 10, 1, "r1");
        charge_test_votes(&mut ledger, 4, 1);
        charge_samples(&mut ledger, 20, 2, "r2");
        let total: u64 = ledger.per_round_log().iter().map(|r| r.1).sum();
        assert_eq!(total, ledger.samples_sent());
    }

    #[test]
    fn replay_is_deterministic() {
        let build = || {
            let mut l = CommLedger::new();
            charge_samples(&mut l, 5, 1, "x");
            charge_allocation_message(&mut l, 3, 5, 1);
            charge_test_votes(&mut l, 3, 1);
            l
        };
        assert_eq!(build(), build());
    }
}
