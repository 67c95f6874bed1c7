//! Finite-VC hypothesis classes: 1-D thresholds, 1-D intervals, axis-aligned
//! decision stumps, and weighted-majority ensembles of those, together with
//! exact consistent / ERM / weighted-ERM learners.
//!
//! Labels are stored as {0,1}; boosting maps to {-1,+1} internally. All
//! learners are exact scans over the combinatorially distinct candidate
//! boundaries, with a fixed tie-break (smallest error, widest margin,
//! leftmost parameter) so runs reproduce bit for bit. Everything here is
//! pure and deterministic: no RNG enters this module.

use thiserror::Error;

/// A feature point with a binary label. The unit of both sampling and
/// communication cost.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledExample {
    pub x: Vec<f64>,
    pub y: bool,
}

impl LabeledExample {
    pub fn new(x: Vec<f64>, y: bool) -> Self {
        Self { x, y }
    }

    /// 1-D convenience constructor.
    pub fn point1(x: f64, y: bool) -> Self {
        Self { x: vec![x], y }
    }

    /// Label mapped to {-1,+1} for boosting algebra.
    pub fn signed_label(&self) -> f64 {
        if self.y {
            1.0
        } else {
            -1.0
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Polarity {
    /// Predict 1 iff the feature value is <= the threshold.
    Positive,
    /// Predict 1 iff the feature value is > the threshold.
    Negative,
}

#[derive(Debug, Error)]
pub enum HypothesisError {
    #[error("input has dimension {got}, hypothesis needs at least {need}")]
    DimensionMismatch { need: usize, got: usize },
    #[error("no hypothesis in the class is consistent with the sample")]
    NoConsistentHypothesis,
    #[error("sample is empty")]
    EmptySample,
    #[error("operation does not support class {0}")]
    UnsupportedClass(&'static str),
    #[error("weights length {got} does not match sample length {want}")]
    WeightLengthMismatch { want: usize, got: usize },
    #[error("weights must be nonnegative and sum to 1, got sum {0}")]
    WeightsNotNormalized(f64),
    #[error("majority ensemble needs >= 1 member and a positive total weight")]
    InvalidEnsemble,
    #[error("majority ensemble members must not be ensembles themselves")]
    NestedEnsemble,
    #[error("vc_dimension {got} does not match the known value {want} for {class}")]
    VcDimensionMismatch {
        class: &'static str,
        want: usize,
        got: usize,
    },
    #[error("invalid class spec: {0}")]
    InvalidClassSpec(String),
}

/// Depth-1 weighted majority vote. Members are guaranteed non-ensembles
/// with nonnegative weights, at least one positive.
#[derive(Debug, Clone, PartialEq)]
pub struct MajorityEnsemble {
    members: Vec<(Hypothesis, f64)>,
}

impl MajorityEnsemble {
    pub fn new(members: Vec<(Hypothesis, f64)>) -> Result<Self, HypothesisError> {
        if members.is_empty() {
            return Err(HypothesisError::InvalidEnsemble);
        }
        let mut any_positive = false;
        for (h, w) in &members {
            if matches!(h, Hypothesis::Majority(_)) {
                return Err(HypothesisError::NestedEnsemble);
            }
            if !w.is_finite() || *w < 0.0 {
                return Err(HypothesisError::InvalidEnsemble);
            }
            if *w > 0.0 {
                any_positive = true;
            }
        }
        if !any_positive {
            return Err(HypothesisError::InvalidEnsemble);
        }
        Ok(Self { members })
    }

    pub fn members(&self) -> &[(Hypothesis, f64)] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// A predictor from one of the concrete low-VC classes, or a depth-1
/// weighted majority over them.
#[derive(Debug, Clone, PartialEq)]
pub enum Hypothesis {
    Threshold {
        t: f64,
        polarity: Polarity,
    },
    Interval {
        lo: f64,
        hi: f64,
    },
    Stump {
        feature: usize,
        t: f64,
        polarity: Polarity,
    },
    Majority(MajorityEnsemble),
}

impl Hypothesis {
    pub fn threshold(t: f64, polarity: Polarity) -> Self {
        Hypothesis::Threshold { t, polarity }
    }

    pub fn interval(lo: f64, hi: f64) -> Self {
        assert!(lo <= hi, "interval requires lo <= hi");
        Hypothesis::Interval { lo, hi }
    }

    pub fn stump(feature: usize, t: f64, polarity: Polarity) -> Self {
        Hypothesis::Stump {
            feature,
            t,
            polarity,
        }
    }

    pub fn majority(members: Vec<(Hypothesis, f64)>) -> Result<Self, HypothesisError> {
        Ok(Hypothesis::Majority(MajorityEnsemble::new(members)?))
    }

    /// Minimum input dimension this hypothesis can evaluate.
    pub fn required_dim(&self) -> usize {
        match self {
            Hypothesis::Threshold { .. } | Hypothesis::Interval { .. } => 1,
            Hypothesis::Stump { feature, .. } => feature + 1,
            Hypothesis::Majority(ens) => ens
                .members()
                .iter()
                .map(|(h, _)| h.required_dim())
                .max()
                .unwrap_or(1),
        }
    }

    pub fn try_predict(&self, x: &[f64]) -> Result<bool, HypothesisError> {
        let need = self.required_dim();
        if x.len() < need {
            return Err(HypothesisError::DimensionMismatch { need, got: x.len() });
        }
        Ok(self.predict_unchecked(x))
    }

    /// Deterministic label for `x`. Panics on dimension mismatch; use
    /// [`Hypothesis::try_predict`] to handle that gracefully.
    pub fn predict(&self, x: &[f64]) -> bool {
        self.try_predict(x).expect("dimension mismatch in predict")
    }

    fn predict_unchecked(&self, x: &[f64]) -> bool {
        match self {
            Hypothesis::Threshold { t, polarity } => match polarity {
                Polarity::Positive => x[0] <= *t,
                Polarity::Negative => x[0] > *t,
            },
            Hypothesis::Interval { lo, hi } => *lo <= x[0] && x[0] <= *hi,
            Hypothesis::Stump {
                feature,
                t,
                polarity,
            } => match polarity {
                Polarity::Positive => x[*feature] <= *t,
                Polarity::Negative => x[*feature] > *t,
            },
            Hypothesis::Majority(ens) => {
                // Sign of the weighted +-1 vote; ties go to label 0.
                let mut s = 0.0;
                for (h, w) in ens.members() {
                    s += w * if h.predict_unchecked(x) { 1.0 } else { -1.0 };
                }
                s > 0.0
            }
        }
    }

    /// Complement predictor, when representable inside the class
    /// (polarity flip for thresholds and stumps).
    pub(crate) fn flipped(&self) -> Option<Hypothesis> {
        let flip = |p: Polarity| match p {
            Polarity::Positive => Polarity::Negative,
            Polarity::Negative => Polarity::Positive,
        };
        match self {
            Hypothesis::Threshold { t, polarity } => Some(Hypothesis::Threshold {
                t: *t,
                polarity: flip(*polarity),
            }),
            Hypothesis::Stump {
                feature,
                t,
                polarity,
            } => Some(Hypothesis::Stump {
                feature: *feature,
                t: *t,
                polarity: flip(*polarity),
            }),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HypothesisClass {
    Threshold1D,
    Interval1D,
    /// Axis-aligned stumps over `features` coordinates.
    StumpND {
        features: usize,
    },
}

impl HypothesisClass {
    pub fn name(&self) -> &'static str {
        match self {
            HypothesisClass::Threshold1D => "threshold1d",
            HypothesisClass::Interval1D => "interval1d",
            HypothesisClass::StumpND { .. } => "stumpnd",
        }
    }
}

/// A hypothesis class plus the metadata the learners and budget formulas
/// need: its VC dimension, the candidate-grid resolution used by the
/// brute-force oracle, and the declared feature bounding box (the same
/// [lo, hi] applies to every coordinate; midpoints against +-infinity are
/// clamped to it).
#[derive(Debug, Clone, PartialEq)]
pub struct HypothesisClassSpec {
    pub class: HypothesisClass,
    pub vc_dimension: usize,
    pub grid_resolution: usize,
    pub domain_lo: f64,
    pub domain_hi: f64,
}

impl HypothesisClassSpec {
    pub fn threshold_1d() -> Self {
        Self {
            class: HypothesisClass::Threshold1D,
            vc_dimension: 1,
            grid_resolution: 1024,
            domain_lo: 0.0,
            domain_hi: 1.0,
        }
    }

    pub fn interval_1d() -> Self {
        Self {
            class: HypothesisClass::Interval1D,
            vc_dimension: 2,
            grid_resolution: 1024,
            domain_lo: 0.0,
            domain_hi: 1.0,
        }
    }

    /// Stumps over `features` coordinates. The VC dimension of this class
    /// is Theta(log features); it is recorded explicitly because the center
    /// uses it as the budget dimension in every sample-size formula.
    pub fn stump_nd(features: usize, vc_dimension: usize) -> Self {
        Self {
            class: HypothesisClass::StumpND { features },
            vc_dimension,
            grid_resolution: 1024,
            domain_lo: 0.0,
            domain_hi: 1.0,
        }
    }

    /// Input dimension of the points this class operates on.
    pub fn dim(&self) -> usize {
        match self.class {
            HypothesisClass::Threshold1D | HypothesisClass::Interval1D => 1,
            HypothesisClass::StumpND { features } => features,
        }
    }

    pub fn validate(&self) -> Result<(), HypothesisError> {
        match self.class {
            HypothesisClass::Threshold1D => {
                if self.vc_dimension != 1 {
                    return Err(HypothesisError::VcDimensionMismatch {
                        class: "Threshold1D",
                        want: 1,
                        got: self.vc_dimension,
                    });
                }
            }
            HypothesisClass::Interval1D => {
                if self.vc_dimension != 2 {
                    return Err(HypothesisError::VcDimensionMismatch {
                        class: "Interval1D",
                        want: 2,
                        got: self.vc_dimension,
                    });
                }
            }
            HypothesisClass::StumpND { features } => {
                if features == 0 {
                    return Err(HypothesisError::InvalidClassSpec(
                        "StumpND needs >= 1 feature".into(),
                    ));
                }
                if self.vc_dimension == 0 {
                    return Err(HypothesisError::InvalidClassSpec(
                        "vc_dimension must be positive".into(),
                    ));
                }
            }
        }
        if self.grid_resolution == 0 {
            return Err(HypothesisError::InvalidClassSpec(
                "grid_resolution must be positive".into(),
            ));
        }
        if !(self.domain_lo < self.domain_hi) {
            return Err(HypothesisError::InvalidClassSpec(
                "domain_lo must be < domain_hi".into(),
            ));
        }
        Ok(())
    }
}

/// Exact fraction of disagreements of `h` on `sample`.
pub fn empirical_error(h: &Hypothesis, sample: &[LabeledExample]) -> Result<f64, HypothesisError> {
    if sample.is_empty() {
        return Err(HypothesisError::EmptySample);
    }
    let mut wrong = 0u64;
    for ex in sample {
        if h.try_predict(&ex.x)? != ex.y {
            wrong += 1;
        }
    }
    Ok(wrong as f64 / sample.len() as f64)
}

// ---------------------------------------------------------------------------
// Exact scans over candidate boundaries.
//
// Points are grouped by distinct feature value; a "cut" c in 1..=D places
// groups [0, c) on the <= side. The materialized threshold is the midpoint
// of the gap for interior cuts and exactly the maximum value for c = D, so
// every candidate hypothesis realizes precisely the labeling it was scored
// with. The all-0 (resp. all-1) predictor is reached through the opposite
// polarity at c = D.
// ---------------------------------------------------------------------------

struct Groups {
    values: Vec<f64>,
    pos: Vec<f64>,
    neg: Vec<f64>,
    pos_total: f64,
    neg_total: f64,
}

fn group_by_feature(sample: &[LabeledExample], weights: &[f64], feature: usize) -> Groups {
    let mut pairs: Vec<(f64, bool, f64)> = sample
        .iter()
        .zip(weights)
        .map(|(ex, &w)| (ex.x[feature], ex.y, w))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut g = Groups {
        values: Vec::new(),
        pos: Vec::new(),
        neg: Vec::new(),
        pos_total: 0.0,
        neg_total: 0.0,
    };
    for (v, y, w) in pairs {
        if g.values.last() != Some(&v) {
            g.values.push(v);
            g.pos.push(0.0);
            g.neg.push(0.0);
        }
        let last = g.values.len() - 1;
        if y {
            g.pos[last] += w;
            g.pos_total += w;
        } else {
            g.neg[last] += w;
            g.neg_total += w;
        }
    }
    g
}

#[derive(Debug, Clone, Copy)]
struct ThresholdCandidate {
    t: f64,
    polarity: Polarity,
    err: f64,
    margin: f64,
    feature: usize,
}

/// Tie-break order: smallest error, widest margin, smallest feature,
/// leftmost threshold, Positive before Negative.
fn candidate_better(a: &ThresholdCandidate, b: &ThresholdCandidate) -> bool {
    if a.err != b.err {
        return a.err < b.err;
    }
    if a.margin != b.margin {
        return a.margin > b.margin;
    }
    if a.feature != b.feature {
        return a.feature < b.feature;
    }
    if a.t != b.t {
        return a.t < b.t;
    }
    a.polarity == Polarity::Positive && b.polarity == Polarity::Negative
}

fn scan_threshold_feature(
    g: &Groups,
    feature: usize,
    eff_hi: f64,
    best: &mut Option<ThresholdCandidate>,
) {
    let d = g.values.len();
    let mut pos_p = 0.0;
    let mut neg_p = 0.0;
    for c in 1..=d {
        pos_p += g.pos[c - 1];
        neg_p += g.neg[c - 1];
        let (t, margin) = if c < d {
            (
                0.5 * (g.values[c - 1] + g.values[c]),
                g.values[c] - g.values[c - 1],
            )
        } else {
            (g.values[d - 1], (eff_hi - g.values[d - 1]).max(0.0))
        };
        let err_plus = neg_p + (g.pos_total - pos_p);
        let err_minus = pos_p + (g.neg_total - neg_p);
        for cand in [
            ThresholdCandidate {
                t,
                polarity: Polarity::Positive,
                err: err_plus,
                margin,
                feature,
            },
            ThresholdCandidate {
                t,
                polarity: Polarity::Negative,
                err: err_minus,
                margin,
                feature,
            },
        ] {
            if best.is_none_or(|b| candidate_better(&cand, &b)) {
                *best = Some(cand);
            }
        }
    }
}

fn weighted_threshold_erm(
    spec: &HypothesisClassSpec,
    sample: &[LabeledExample],
    weights: &[f64],
    features: &[usize],
) -> (Hypothesis, f64, f64) {
    let eff_hi = sample
        .iter()
        .flat_map(|ex| ex.x.iter().copied())
        .fold(spec.domain_hi, f64::max);
    let mut best: Option<ThresholdCandidate> = None;
    for &f in features {
        let g = group_by_feature(sample, weights, f);
        scan_threshold_feature(&g, f, eff_hi, &mut best);
    }
    let b = best.expect("nonempty sample always yields a candidate");
    let total: f64 = weights.iter().sum();
    let h = if features == [0] && spec.dim() == 1 {
        Hypothesis::Threshold {
            t: b.t,
            polarity: b.polarity,
        }
    } else {
        Hypothesis::Stump {
            feature: b.feature,
            t: b.t,
            polarity: b.polarity,
        }
    };
    (h, b.err / total, b.margin)
}

fn interval_erm(spec: &HypothesisClassSpec, sample: &[LabeledExample]) -> (Hypothesis, f64) {
    let weights = vec![1.0; sample.len()];
    let g = group_by_feature(sample, &weights, 0);
    let d = g.values.len();
    let eff_lo = g.values[0].min(spec.domain_lo);
    let eff_hi = g.values[d - 1].max(spec.domain_hi);

    let mut pos_p = vec![0.0; d + 1];
    let mut neg_p = vec![0.0; d + 1];
    for c in 1..=d {
        pos_p[c] = pos_p[c - 1] + g.pos[c - 1];
        neg_p[c] = neg_p[c - 1] + g.neg[c - 1];
    }

    // (err, margin, lo, hi); smaller err, then wider margin, then leftmost.
    let mut best: Option<(f64, f64, f64, f64)> = None;
    let mut consider = |err: f64, margin: f64, lo: f64, hi: f64| {
        let better = match best {
            None => true,
            Some((be, bm, blo, bhi)) => {
                if err != be {
                    err < be
                } else if margin != bm {
                    margin > bm
                } else if lo != blo {
                    lo < blo
                } else {
                    hi < bhi
                }
            }
        };
        if better {
            best = Some((err, margin, lo, hi));
        }
    };

    // Intervals covering groups [i, j), i < j.
    for i in 0..d {
        let (lo, left_gap) = if i == 0 {
            (g.values[0], g.values[0] - eff_lo)
        } else {
            (
                0.5 * (g.values[i - 1] + g.values[i]),
                g.values[i] - g.values[i - 1],
            )
        };
        for j in (i + 1)..=d {
            let (hi, right_gap) = if j == d {
                (g.values[d - 1], eff_hi - g.values[d - 1])
            } else {
                (
                    0.5 * (g.values[j - 1] + g.values[j]),
                    g.values[j] - g.values[j - 1],
                )
            };
            let err = (g.pos_total - (pos_p[j] - pos_p[i])) + (neg_p[j] - neg_p[i]);
            consider(err, left_gap.min(right_gap), lo, hi);
        }
    }

    // The empty interval (predicts 0 everywhere on the sample): a degenerate
    // [m, m] placed in the widest point-free gap.
    {
        let mut gap_best = (g.values[0] - eff_lo, 0.5 * (eff_lo + g.values[0]));
        for w in g.values.windows(2) {
            let width = w[1] - w[0];
            if width > gap_best.0 {
                gap_best = (width, 0.5 * (w[0] + w[1]));
            }
        }
        let width = eff_hi - g.values[d - 1];
        if width > gap_best.0 {
            gap_best = (width, 0.5 * (g.values[d - 1] + eff_hi));
        }
        let m = if gap_best.0 > 0.0 {
            gap_best.1
        } else {
            g.values[0] - 1.0
        };
        consider(g.pos_total, gap_best.0, m, m);
    }

    let (err, _, lo, hi) = best.expect("nonempty sample always yields a candidate");
    (Hypothesis::Interval { lo, hi }, err / sample.len() as f64)
}

/// Hypothesis minimizing empirical error over the class, computed exactly
/// by scanning the candidate boundaries (O(m log m) for thresholds and
/// stumps, O(m^2) distinct-value pairs for intervals).
pub fn learn_erm(
    spec: &HypothesisClassSpec,
    sample: &[LabeledExample],
) -> Result<Hypothesis, HypothesisError> {
    if sample.is_empty() {
        return Err(HypothesisError::EmptySample);
    }
    let weights = vec![1.0; sample.len()];
    match spec.class {
        HypothesisClass::Threshold1D => Ok(weighted_threshold_erm(spec, sample, &weights, &[0]).0),
        HypothesisClass::Interval1D => Ok(interval_erm(spec, sample).0),
        HypothesisClass::StumpND { features } => {
            let all: Vec<usize> = (0..features).collect();
            Ok(weighted_threshold_erm(spec, sample, &weights, &all).0)
        }
    }
}

/// Stump or threshold minimizing weighted empirical error. The reported
/// error is always <= 1/2 because both polarities of every cut are scanned.
pub fn weak_learn(
    sample: &[LabeledExample],
    weights: &[f64],
) -> Result<(Hypothesis, f64), HypothesisError> {
    if sample.is_empty() {
        return Err(HypothesisError::EmptySample);
    }
    if weights.len() != sample.len() {
        return Err(HypothesisError::WeightLengthMismatch {
            want: sample.len(),
            got: weights.len(),
        });
    }
    let sum: f64 = weights.iter().sum();
    if (sum - 1.0).abs() > 1e-9 || weights.iter().any(|w| *w < 0.0) {
        return Err(HypothesisError::WeightsNotNormalized(sum));
    }
    let dim = sample[0].x.len();
    let spec = if dim == 1 {
        HypothesisClassSpec::threshold_1d()
    } else {
        HypothesisClassSpec::stump_nd(dim, 1)
    };
    let features: Vec<usize> = (0..dim).collect();
    let (h, err, _) = weighted_threshold_erm(&spec, sample, weights, &features);
    Ok((h, err))
}

/// Zero-empirical-error hypothesis on a realizable sample. For thresholds
/// the returned parameter is the midpoint of the widest consistent gap
/// (ties to the leftmost); gaps against +-infinity clamp to the domain box.
pub fn learn_consistent(
    spec: &HypothesisClassSpec,
    sample: &[LabeledExample],
) -> Result<Hypothesis, HypothesisError> {
    match spec.class {
        HypothesisClass::Threshold1D => {
            let cands = consistent_threshold_candidates(spec, sample, 0);
            pick_widest(cands, sample).map(|(f, t, p)| {
                debug_assert_eq!(f, 0);
                Hypothesis::Threshold { t, polarity: p }
            })
        }
        HypothesisClass::Interval1D => consistent_interval(spec, sample),
        HypothesisClass::StumpND { features } => {
            let mut cands = Vec::new();
            for f in 0..features {
                cands.extend(consistent_threshold_candidates(spec, sample, f));
            }
            pick_widest(cands, sample).map(|(feature, t, polarity)| Hypothesis::Stump {
                feature,
                t,
                polarity,
            })
        }
    }
}

/// Candidate (gap width, feature, t, polarity) tuples that may be
/// consistent on `feature`; each is verified against the sample before use.
fn consistent_threshold_candidates(
    spec: &HypothesisClassSpec,
    sample: &[LabeledExample],
    feature: usize,
) -> Vec<(f64, usize, f64, Polarity)> {
    let eff_lo = sample
        .iter()
        .map(|ex| ex.x[feature])
        .fold(spec.domain_lo, f64::min);
    let eff_hi = sample
        .iter()
        .map(|ex| ex.x[feature])
        .fold(spec.domain_hi, f64::max);

    let max_pos = sample
        .iter()
        .filter(|ex| ex.y)
        .map(|ex| ex.x[feature])
        .fold(None, |acc: Option<f64>, v| {
            Some(acc.map_or(v, |a| a.max(v)))
        });
    let min_pos = sample
        .iter()
        .filter(|ex| ex.y)
        .map(|ex| ex.x[feature])
        .fold(None, |acc: Option<f64>, v| {
            Some(acc.map_or(v, |a| a.min(v)))
        });
    let max_neg = sample
        .iter()
        .filter(|ex| !ex.y)
        .map(|ex| ex.x[feature])
        .fold(None, |acc: Option<f64>, v| {
            Some(acc.map_or(v, |a| a.max(v)))
        });
    let min_neg = sample
        .iter()
        .filter(|ex| !ex.y)
        .map(|ex| ex.x[feature])
        .fold(None, |acc: Option<f64>, v| {
            Some(acc.map_or(v, |a| a.min(v)))
        });

    let mut out = Vec::with_capacity(2);
    // Positive polarity: consistent region is [max_pos, min_neg).
    let lo = max_pos.unwrap_or(eff_lo);
    let hi = min_neg.unwrap_or(eff_hi);
    if lo <= hi {
        out.push((hi - lo, feature, 0.5 * (lo + hi), Polarity::Positive));
    }
    // Negative polarity: consistent region is [max_neg, min_pos).
    let lo = max_neg.unwrap_or(eff_lo);
    let hi = min_pos.unwrap_or(eff_hi);
    if lo <= hi {
        out.push((hi - lo, feature, 0.5 * (lo + hi), Polarity::Negative));
    }
    out
}

/// Verify candidates against the sample, then pick the widest gap
/// (ties: smallest feature, Positive polarity first, leftmost t).
fn pick_widest(
    cands: Vec<(f64, usize, f64, Polarity)>,
    sample: &[LabeledExample],
) -> Result<(usize, f64, Polarity), HypothesisError> {
    let mut best: Option<(f64, usize, f64, Polarity)> = None;
    for (gap, feature, t, polarity) in cands {
        let h = Hypothesis::Stump {
            feature,
            t,
            polarity,
        };
        if sample.iter().any(|ex| h.predict(&ex.x) != ex.y) {
            continue;
        }
        let better = match best {
            None => true,
            Some((bg, bf, bt, bp)) => {
                if gap != bg {
                    gap > bg
                } else if feature != bf {
                    feature < bf
                } else if polarity != bp {
                    polarity == Polarity::Positive
                } else {
                    t < bt
                }
            }
        };
        if better {
            best = Some((gap, feature, t, polarity));
        }
    }
    best.map(|(_, f, t, p)| (f, t, p))
        .ok_or(HypothesisError::NoConsistentHypothesis)
}

fn consistent_interval(
    spec: &HypothesisClassSpec,
    sample: &[LabeledExample],
) -> Result<Hypothesis, HypothesisError> {
    let xs: Vec<f64> = sample.iter().map(|ex| ex.x[0]).collect();
    let eff_lo = xs.iter().copied().fold(spec.domain_lo, f64::min);
    let eff_hi = xs.iter().copied().fold(spec.domain_hi, f64::max);

    let positives: Vec<f64> = sample.iter().filter(|e| e.y).map(|e| e.x[0]).collect();
    let candidate = if positives.is_empty() {
        // Degenerate interval in the widest point-free gap.
        let mut sorted = xs.clone();
        sorted.sort_by(f64::total_cmp);
        sorted.dedup();
        let mut gap = (sorted[0] - eff_lo, 0.5 * (eff_lo + sorted[0]));
        for w in sorted.windows(2) {
            let width = w[1] - w[0];
            if width > gap.0 {
                gap = (width, 0.5 * (w[0] + w[1]));
            }
        }
        let width = eff_hi - sorted[sorted.len() - 1];
        if width > gap.0 {
            gap = (width, 0.5 * (sorted[sorted.len() - 1] + eff_hi));
        }
        let m = if gap.0 > 0.0 { gap.1 } else { sorted[0] - 1.0 };
        Hypothesis::Interval { lo: m, hi: m }
    } else {
        let pmin = positives.iter().copied().fold(f64::INFINITY, f64::min);
        let pmax = positives.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let left_neg = sample
            .iter()
            .filter(|e| !e.y && e.x[0] < pmin)
            .map(|e| e.x[0])
            .fold(None, |acc: Option<f64>, v| {
                Some(acc.map_or(v, |a| a.max(v)))
            });
        let right_neg = sample
            .iter()
            .filter(|e| !e.y && e.x[0] > pmax)
            .map(|e| e.x[0])
            .fold(None, |acc: Option<f64>, v| {
                Some(acc.map_or(v, |a| a.min(v)))
            });
        let lo = 0.5 * (left_neg.unwrap_or(eff_lo.min(pmin)) + pmin);
        let hi = 0.5 * (pmax + right_neg.unwrap_or(eff_hi.max(pmax)));
        Hypothesis::Interval { lo, hi }
    };

    if sample.iter().any(|ex| candidate.predict(&ex.x) != ex.y) {
        return Err(HypothesisError::NoConsistentHypothesis);
    }
    Ok(candidate)
}

/// Independent ground truth for the exact learners: plain enumeration with
/// per-candidate direct error counts, deliberately sharing none of the
/// prefix-sum machinery above. Only the test suites call this.
pub mod oracle {
    use super::*;

    /// Exhaustive minimum empirical error over Threshold1D or Interval1D.
    /// Returns a minimizer and its error.
    pub fn brute_force_best(
        spec: &HypothesisClassSpec,
        sample: &[LabeledExample],
    ) -> Result<(Hypothesis, f64), HypothesisError> {
        if sample.is_empty() {
            return Err(HypothesisError::EmptySample);
        }
        let mut xs: Vec<f64> = sample.iter().map(|e| e.x[0]).collect();
        xs.sort_by(f64::total_cmp);
        xs.dedup();

        // Candidate boundaries: every sample value, every midpoint between
        // neighbors, and points strictly outside the data range.
        let mut cands: Vec<f64> = Vec::new();
        cands.push(xs[0] - 1.0);
        for (i, &v) in xs.iter().enumerate() {
            cands.push(v);
            if i + 1 < xs.len() {
                cands.push(0.5 * (v + xs[i + 1]));
            }
        }
        cands.push(xs[xs.len() - 1] + 1.0);

        let err_of = |h: &Hypothesis| -> f64 {
            let wrong = sample.iter().filter(|e| h.predict(&e.x) != e.y).count();
            wrong as f64 / sample.len() as f64
        };

        let mut best: Option<(Hypothesis, f64)> = None;
        let mut consider = |h: Hypothesis, e: f64| {
            if best.as_ref().is_none_or(|(_, be)| e < *be) {
                best = Some((h, e));
            }
        };

        match spec.class {
            HypothesisClass::Threshold1D => {
                for &t in &cands {
                    for polarity in [Polarity::Positive, Polarity::Negative] {
                        let h = Hypothesis::Threshold { t, polarity };
                        let e = err_of(&h);
                        consider(h, e);
                    }
                }
            }
            HypothesisClass::Interval1D => {
                for i in 0..cands.len() {
                    for j in i..cands.len() {
                        let h = Hypothesis::Interval {
                            lo: cands[i],
                            hi: cands[j],
                        };
                        let e = err_of(&h);
                        consider(h, e);
                    }
                }
            }
            HypothesisClass::StumpND { .. } => {
                return Err(HypothesisError::UnsupportedClass("stumpnd"));
            }
        }
        Ok(best.expect("candidate set is never empty"))
    }
}


#[cfg(test)]
mod properties {
    use super::*;
    use proptest::prelude::*;

    fn arb_sample(max_len: usize) -> impl Strategy<Value = Vec<LabeledExample>> {
        prop::collection::vec((0.0f64..1.0, any::<bool>()), 1..=max_len).prop_map(|v| {
            v.into_iter()
                .map(|(x, y)| LabeledExample::point1(x, y))
                .collect()
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(96))]

        #[test]
        fn erm_equals_brute_force_threshold(sample in arb_sample(64)) {
            let spec = HypothesisClassSpec::threshold_1d();
            let h = learn_erm(&spec, &sample).unwrap();
            let (_, best) = oracle::brute_force_best(&spec, &sample).unwrap();
            prop_assert_eq!(empirical_error(&h, &sample).unwrap(), best);
        }

        #[test]
        fn erm_equals_brute_force_interval(sample in arb_sample(32)) {
            let spec = HypothesisClassSpec::interval_1d();
            let h = learn_erm(&spec, &sample).unwrap();
            let (_, best) = oracle::brute_force_best(&spec, &sample).unwrap();
            prop_assert_eq!(empirical_error(&h, &sample).unwrap(), best);
        }

        #[test]
        fn consistent_is_zero_error_on_realizable(
            t in 0.0f64..1.0,
            xs in prop::collection::vec(0.0f64..1.0, 1..48),
        ) {
            let spec = HypothesisClassSpec::threshold_1d();
            let target = Hypothesis::threshold(t, Polarity::Positive);
            let sample: Vec<_> = xs
                .into_iter()
                .map(|x| LabeledExample::point1(x, target.predict(&[x])))
                .collect();
            let h = learn_consistent(&spec, &sample).unwrap();
            prop_assert_eq!(empirical_error(&h, &sample).unwrap(), 0.0);
        }

        #[test]
        fn weak_learn_error_at_most_half(
            sample in arb_sample(48),
            raw in prop::collection::vec(0.01f64..1.0, 48),
        ) {
            let w: Vec<f64> = raw[..sample.len()].to_vec();
            let total: f64 = w.iter().sum();
            let w: Vec<f64> = w.iter().map(|v| v / total).collect();
            let (_, err) = weak_learn(&sample, &w).unwrap();
            prop_assert!((0.0..=0.5 + 1e-12).contains(&err));
        }

        #[test]
        fn majority_matches_sign_rule(
            params in prop::collection::vec((0.0f64..1.0, any::<bool>(), 0.01f64..2.0), 1..9),
            x in 0.0f64..1.0,
        ) {
            let members: Vec<(Hypothesis, f64)> = params
                .iter()
                .map(|&(t, pos, w)| {
                    let p = if pos { Polarity::Positive } else { Polarity::Negative };
                    (Hypothesis::threshold(t, p), w)
                })
                .collect();
            let ens = Hypothesis::majority(members.clone()).unwrap();
            let s: f64 = members
                .iter()
                .map(|(h, w)| w * if h.predict(&[x]) { 1.0 } else { -1.0 })
                .sum();
            prop_assert_eq!(ens.predict(&[x]), s > 0.0);
        }
    }
}
