//! Simulator for collaborative PAC learning protocols.
//!
//! A center node and `k` synthetic players execute personalized or
//! centralized learning protocols — noiseless or with classification
//! noise, with or without distributed boosting — against concrete low-VC
//! hypothesis classes, while a ledger records exactly how many samples
//! were consumed, how many were transmitted, and how many auxiliary bits
//! crossed the shared blackboard. Runs are deterministic given a master
//! seed, so the protocols' correctness and scaling behavior can be checked
//! empirically.

// Validation guards use negated float comparisons so NaN parameters are
// rejected along with out-of-range ones.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod boosting;
pub mod centralized;
pub mod distribution;
pub mod harness;
pub mod hypothesis;
pub mod network;
pub mod personalized;
pub mod rng;
pub mod scenario;
