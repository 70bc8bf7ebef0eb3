//! Rule-based geometry deduction and proof-space tutoring.
//!
//! The pipeline runs in four stages:
//!
//! 1. [`dsl`] parses rule packs and problem files into canonical [`model::Fact`]s.
//! 2. [`engine::saturate`] forward-chains to a fixpoint, recording every
//!    justification of every derived fact.
//! 3. [`graph::build_graph`] turns the derivation record into the pruned
//!    hypothesis/inference/conclusion graph, whose proofs can be enumerated,
//!    counted and materialized as a [`graph::ProofForest`].
//! 4. [`tutor::Session`] tracks a student's statements against that forest and
//!    produces redaction views and hints.

pub mod dsl;
pub mod engine;
pub mod graph;
pub mod model;
pub mod pipeline;
pub mod synth;
pub mod tutor;

use std::fmt;

use num_bigint::BigUint;

/// Non-fatal conditions surfaced alongside a successful result.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Warning {
    /// The isle configuration disabled every rule.
    EmptyRuleBase,
    /// Only a prefix of the proof forest was materialized.
    CapExceeded { cap: usize, total: BigUint },
}

impl fmt::Display for Warning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Warning::EmptyRuleBase => f.write_str("no rules survive the isle configuration"),
            Warning::CapExceeded { cap, total } => write!(
                f,
                "proof forest capped at {cap} trees out of {total}"
            ),
        }
    }
}
