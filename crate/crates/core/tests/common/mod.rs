#![allow(dead_code)]

use std::collections::BTreeSet;
use std::path::PathBuf;

use geotutor::dsl::{Problem, RuleBase};
use geotutor::engine::DerivationRecord;
use geotutor::graph::{HpdicGraph, ProofTree};
use geotutor::pipeline::{load_problem, load_rule_packs};
use geotutor_oracle::{Saturation, Step};

pub fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("corpus")
}

pub fn read(rel: &str) -> String {
    std::fs::read_to_string(corpus_dir().join(rel)).unwrap_or_else(|e| panic!("{rel}: {e}"))
}

pub fn corpus_base() -> RuleBase {
    let packs = [read("packs/quadrilaterals.qr"), read("packs/bisector.qr")];
    load_rule_packs([
        ("quadrilaterals.qr", packs[0].as_str()),
        ("bisector.qr", packs[1].as_str()),
    ])
    .unwrap()
}

pub fn corpus_problem(name: &str, base: &RuleBase) -> Problem {
    load_problem(name, &read(&format!("problems/{name}.qp")), base).unwrap()
}

/// Step identity with premises as a set, the granularity of graph nodes.
pub type StepKey = (String, BTreeSet<String>, String);

pub fn step_key(s: &Step) -> StepKey {
    (
        s.rule.clone(),
        s.premises.iter().cloned().collect(),
        s.derived.clone(),
    )
}

pub fn record_to_oracle(record: &DerivationRecord) -> Saturation {
    Saturation {
        given: record.given().iter().map(|f| f.key().to_string()).collect(),
        facts: record.facts().iter().map(|f| f.key().to_string()).collect(),
        steps: record
            .justifications()
            .iter()
            .map(|j| {
                Step::new(
                    j.rule(),
                    j.premise_set().iter().map(|f| f.key().to_string()).collect(),
                    j.derived().key(),
                )
            })
            .collect(),
    }
}

pub fn inference_key(g: &HpdicGraph, inference: usize) -> StepKey {
    (
        g.node(inference).label().to_string(),
        g.premises(inference)
            .iter()
            .map(|&p| g.node(p).label().to_string())
            .collect(),
        g.node(g.derived(inference)).label().to_string(),
    )
}

pub fn proof_key(g: &HpdicGraph, t: &ProofTree) -> BTreeSet<StepKey> {
    t.chosen().values().map(|&i| inference_key(g, i)).collect()
}

pub fn oracle_proof_key(p: &geotutor_oracle::Proof) -> BTreeSet<StepKey> {
    p.iter().map(step_key).collect()
}

/// Statement keys and step keys of a graph.
pub fn graph_shape(g: &HpdicGraph) -> (BTreeSet<String>, BTreeSet<String>, BTreeSet<StepKey>) {
    let statements = g.statements().map(|n| n.label().to_string()).collect();
    let hypotheses = g.hypotheses().map(|n| g.node(n).label().to_string()).collect();
    let steps = g.inferences().map(|n| inference_key(g, n.id)).collect();
    (statements, hypotheses, steps)
}

pub fn oracle_shape(g: &geotutor_oracle::Graph) -> (BTreeSet<String>, BTreeSet<String>, BTreeSet<StepKey>) {
    (
        g.statements.clone(),
        g.hypotheses.clone(),
        g.steps.iter().map(step_key).collect(),
    )
}
