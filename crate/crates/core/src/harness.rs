//! Experiment harness: deterministic single runs, Monte-Carlo trial
//! batches, sweeps along one axis, and CSV / summary-table emission.

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::centralized::run_centralized;
use crate::personalized::{run_personalized, ProtocolError};
use crate::rng::{child_seed, stream};
use crate::scenario::{Mode, ScenarioConfig, ScenarioError, SweepAxis};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("sweep requested but no sweep axis is configured")]
    SweepAxisMissing,
    #[error("accounting invariant violated: {0}")]
    InvariantViolated(String),
}

/// One run's results. The serialized column order is fixed:
/// run_id, algorithm, k, d, epsilon, delta, eta_max, samples_consumed,
/// samples_communicated, bits_communicated, rounds, success,
/// max_player_clean_error, seed, wall_time_ms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub run_id: String,
    pub algorithm: String,
    pub k: u64,
    pub d: u64,
    pub epsilon: f64,
    pub delta: f64,
    pub eta_max: f64,
    pub samples_consumed: u64,
    pub samples_communicated: u64,
    pub bits_communicated: u64,
    pub rounds: u64,
    pub success: bool,
    pub max_player_clean_error: f64,
    pub seed: u64,
    pub wall_time_ms: u64,
    /// Verbatim constants in effect; not a CSV column.
    #[serde(skip)]
    pub constants: String,
}

/// Execute one protocol run from `seed`, enforcing the accounting
/// invariants every row must satisfy.
pub fn run_with_seed(
    config: &ScenarioConfig,
    mode: Mode,
    seed: u64,
) -> Result<ResultRow, HarnessError> {
    config.validate()?;
    let built = config.build(seed)?;
    let start = Instant::now();

    let (consumed, ledger, rounds, success, max_err) =
        if let Some(cfg) = config.personalized_config() {
            let out = run_personalized(&built.players, &built.target, &built.spec, &cfg, seed)?;
            (
                out.samples_consumed,
                out.ledger.clone(),
                out.rounds_used,
                out.success,
                out.max_clean_error(),
            )
        } else {
            let cfg = config
                .centralized_config(mode)
                .expect("algorithm is either personalized or centralized");
            let out = run_centralized(&built.players, &built.target, &built.spec, &cfg, seed)?;
            (
                out.samples_consumed,
                out.ledger.clone(),
                out.rounds_used,
                true,
                out.max_clean_error(),
            )
        };

    let row = ResultRow {
        run_id: format!(
            "{}-k{}-e{}-s{}",
            config.algorithm.name(),
            built.players.len(),
            config.epsilon,
            seed
        ),
        algorithm: config.algorithm.name().to_string(),
        k: built.players.len() as u64,
        d: built.spec.vc_dimension as u64,
        epsilon: config.epsilon,
        delta: config.delta,
        eta_max: built
            .players
            .iter()
            .map(|p| p.noise_rate)
            .fold(0.0, f64::max),
        samples_consumed: consumed,
        samples_communicated: ledger.samples_sent(),
        bits_communicated: ledger.bits_sent(),
        rounds,
        success,
        max_player_clean_error: max_err,
        seed,
        wall_time_ms: start.elapsed().as_millis() as u64,
        constants: config.constants.provenance(mode),
    };

    if row.samples_communicated > row.samples_consumed {
        return Err(HarnessError::InvariantViolated(format!(
            "samples_communicated {} > samples_consumed {}",
            row.samples_communicated, row.samples_consumed
        )));
    }
    if !(0.0..=1.0).contains(&row.max_player_clean_error) {
        return Err(HarnessError::InvariantViolated(format!(
            "max_player_clean_error {} outside [0,1]",
            row.max_player_clean_error
        )));
    }
    Ok(row)
}

/// One run from the scenario's own seed.
pub fn run(config: &ScenarioConfig, mode: Mode) -> Result<ResultRow, HarnessError> {
    run_with_seed(config, mode, config.seed)
}

/// `trials` independent runs; trial t uses seed hash(master, t).
pub fn run_trials(
    config: &ScenarioConfig,
    mode: Mode,
    trials: u64,
) -> Result<Vec<ResultRow>, HarnessError> {
    (0..trials)
        .map(|t| run_with_seed(config, mode, child_seed(config.seed, &[stream::TRIAL, t])))
        .collect()
}

/// Per-value aggregates of a sweep, including the consecutive-ratio table
/// the scaling experiments read.
#[derive(Debug, Clone, Serialize)]
pub struct SweepSummary {
    pub axis: String,
    pub values: Vec<f64>,
    pub mean_consumed: Vec<f64>,
    pub mean_communicated: Vec<f64>,
    pub mean_bits: Vec<f64>,
    pub success_rate: Vec<f64>,
    /// `mean_consumed[i+1] / mean_consumed[i]`
    pub consumed_ratios: Vec<f64>,
    /// `mean_communicated[i+1] / mean_communicated[i]`
    pub communicated_ratios: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub rows: Vec<ResultRow>,
    pub summary: SweepSummary,
}

/// Run `trials` seeded runs per sweep value. Trial seeds derive from
/// (master seed, value index, trial index), so adding values never
/// perturbs existing ones.
pub fn sweep(
    config: &ScenarioConfig,
    mode: Mode,
    trials: u64,
) -> Result<SweepOutcome, HarnessError> {
    config.validate()?;
    if config.sweep.axis == SweepAxis::None {
        return Err(HarnessError::SweepAxisMissing);
    }
    let axis = config.sweep.axis;
    let values = config.sweep.values.clone();

    let mut rows = Vec::new();
    let mut mean_consumed = Vec::new();
    let mut mean_communicated = Vec::new();
    let mut mean_bits = Vec::new();
    let mut success_rate = Vec::new();

    for (vi, &v) in values.iter().enumerate() {
        let sub = config.with_axis_value(axis, v);
        sub.validate()?;
        let mut consumed = 0.0;
        let mut communicated = 0.0;
        let mut bits = 0.0;
        let mut ok = 0u64;
        for t in 0..trials {
            let seed = child_seed(config.seed, &[stream::TRIAL, vi as u64, t]);
            let row = run_with_seed(&sub, mode, seed)?;
            consumed += row.samples_consumed as f64;
            communicated += row.samples_communicated as f64;
            bits += row.bits_communicated as f64;
            ok += row.success as u64;
            rows.push(row);
        }
        let n = trials as f64;
        mean_consumed.push(consumed / n);
        mean_communicated.push(communicated / n);
        mean_bits.push(bits / n);
        success_rate.push(ok as f64 / n);
    }

    let ratios = |m: &[f64]| -> Vec<f64> {
        m.windows(2)
            .map(|w| if w[0] > 0.0 { w[1] / w[0] } else { f64::NAN })
            .collect()
    };
    let summary = SweepSummary {
        axis: format!("{axis:?}").to_lowercase(),
        values,
        consumed_ratios: ratios(&mean_consumed),
        communicated_ratios: ratios(&mean_communicated),
        mean_consumed,
        mean_communicated,
        mean_bits,
        success_rate,
    };
    Ok(SweepOutcome { rows, summary })
}

/// RFC-4180 CSV with a header row and the fixed column order.
pub fn emit_csv<W: Write>(rows: &[ResultRow], out: W) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn emit_csv_path(rows: &[ResultRow], path: &Path) -> Result<(), HarnessError> {
    let file = std::fs::File::create(path)?;
    emit_csv(rows, file)
}

pub fn read_csv_path(path: &Path) -> Result<Vec<ResultRow>, HarnessError> {
    let mut r = csv::Reader::from_path(path)?;
    let mut rows = Vec::new();
    for rec in r.deserialize() {
        rows.push(rec?);
    }
    Ok(rows)
}

fn mean_sd(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count() as f64;
    if n == 0.0 {
        return (0.0, 0.0);
    }
    let mean = values.clone().sum::<f64>() / n;
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Per-algorithm mean +- sd of each counter, one row per algorithm.
pub fn emit_summary(rows: &[ResultRow]) -> String {
    let mut algos: Vec<String> = rows.iter().map(|r| r.algorithm.clone()).collect();
    algos.sort();
    algos.dedup();

    let mut out = String::new();
    out.push_str(&format!(
        "{:<18} {:>5} {:>24} {:>24} {:>24} {:>9} {:>10}\n",
        "algorithm",
        "runs",
        "samples_consumed",
        "samples_communicated",
        "bits_communicated",
        "success",
        "max_err"
    ));
    for algo in &algos {
        let group: Vec<&ResultRow> = rows.iter().filter(|r| &r.algorithm == algo).collect();
        let (cm, cs) = mean_sd(group.iter().map(|r| r.samples_consumed as f64));
        let (tm, ts) = mean_sd(group.iter().map(|r| r.samples_communicated as f64));
        let (bm, bs) = mean_sd(group.iter().map(|r| r.bits_communicated as f64));
        let succ = group.iter().filter(|r| r.success).count() as f64 / group.len().max(1) as f64;
        let (em, _) = mean_sd(group.iter().map(|r| r.max_player_clean_error));
        out.push_str(&format!(
            "{:<18} {:>5} {:>15.1} ± {:>6.1} {:>15.1} ± {:>6.1} {:>15.1} ± {:>6.1} {:>9.2} {:>10.4}\n",
            algo,
            group.len(),
            cm,
            cs,
            tm,
            ts,
            bm,
            bs,
            succ,
            em
        ));
    }
    out
}

/// Text rendering of a sweep's per-value means and consecutive ratios.
pub fn render_sweep_summary(s: &SweepSummary) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:<10} {:>18} {:>20} {:>18} {:>9}\n",
        "value", "mean_consumed", "mean_communicated", "mean_bits", "success"
    ));
    for i in 0..s.values.len() {
        out.push_str(&format!(
            "{:<10} {:>18.1} {:>20.1} {:>18.1} {:>9.2}\n",
            s.values[i],
            s.mean_consumed[i],
            s.mean_communicated[i],
            s.mean_bits[i],
            s.success_rate[i]
        ));
    }
    if !s.consumed_ratios.is_empty() {
        out.push_str("consecutive ratios (consumed): ");
        out.push_str(
            &s.consumed_ratios
                .iter()
                .map(|r| format!("{r:.3}"))
                .collect::<Vec<_>>()
                .join(", "),
        );
        out.push_str("\nconsecutive ratios (communicated): ");
        out.push_str(
            &s.communicated_ratios
                .iter()
                .map(|r| format!("{r:.3}"))
                .collect::<Vec<_>>()
                .join(", "),
        );
        out.push('\n');
    }
    out
}
