mod common;

use std::collections::{BTreeMap, BTreeSet};

use geotutor::dsl::RuleBase;
use geotutor::engine::{saturate_facts, DerivationRecord, Limits, Strategy as Evaluation};
use geotutor::graph::{
    build_graph, build_unpruned_graph, count_proofs, enumerate_proofs, export_dot, export_json,
    import_json, HpdicGraph, NodeClass,
};
use geotutor::model::Fact;
use geotutor::synth::{random_instance, random_record};
use num_bigint::BigUint;
use proptest::prelude::*;

use common::{graph_shape, oracle_proof_key, oracle_shape, proof_key, record_to_oracle};

/// Full comparison of one graph against the oracle. Returns whether the
/// instance was usable (conclusion reachable).
fn check_against_oracle(record: &DerivationRecord, conclusion: &Fact) -> Result<bool, TestCaseError> {
    let sat = record_to_oracle(record);
    let rules = RuleBase::default();
    let oracle = geotutor_oracle::pruned_graph(&sat, conclusion.key());
    let ours = build_graph(record, conclusion, &rules);
    prop_assert_eq!(oracle.is_some(), ours.is_ok());
    let (Some(oracle), Ok(g)) = (oracle, ours) else {
        return Ok(false);
    };
    prop_assert_eq!(graph_shape(&g), oracle_shape(&oracle));

    let expected: BTreeSet<_> = geotutor_oracle::all_proofs(&oracle).iter().map(oracle_proof_key).collect();
    let listed = enumerate_proofs(&g, usize::MAX);
    let got: BTreeSet<_> = listed.proofs.iter().map(|t| proof_key(&g, t)).collect();
    prop_assert_eq!(got.len(), listed.proofs.len(), "enumeration repeats a proof");
    prop_assert_eq!(&got, &expected);
    prop_assert_eq!(count_proofs(&g), BigUint::from(expected.len()));

    // Pruning keeps exactly the proofs of the unpruned graph.
    let full = geotutor_oracle::unpruned_graph(&sat, conclusion.key()).unwrap();
    let unpruned: BTreeSet<_> = geotutor_oracle::all_proofs(&full).iter().map(oracle_proof_key).collect();
    prop_assert_eq!(&unpruned, &expected);
    let g_full = build_unpruned_graph(record, conclusion, &rules).unwrap();
    prop_assert_eq!(count_proofs(&g_full), BigUint::from(expected.len()));

    for t in &listed.proofs {
        check_tree(&g, t)?;
    }
    Ok(true)
}

fn check_tree(g: &HpdicGraph, t: &geotutor::graph::ProofTree) -> Result<(), TestCaseError> {
    prop_assert_eq!(t.root(), g.conclusion());
    prop_assert!(t.chosen().contains_key(&g.conclusion()));
    for (&s, &i) in t.chosen() {
        prop_assert_eq!(g.derived(i), s);
        prop_assert!(!g.is_hypothesis(s));
        for &p in g.premises(i) {
            prop_assert!(g.is_hypothesis(p) || t.chosen().contains_key(&p));
        }
    }
    for &l in t.leaves() {
        prop_assert_eq!(g.node(l).class, NodeClass::Hypothesis);
    }
    // Replaying in derivation order only ever uses established statements.
    let mut known: BTreeSet<usize> = t.leaves().clone();
    let order = t.derived_in_order(g);
    prop_assert_eq!(order.len(), t.size());
    for s in order {
        let i = t.chosen()[&s];
        prop_assert!(g.premises(i).iter().all(|p| known.contains(p)));
        known.insert(s);
    }
    prop_assert!(known.contains(&g.conclusion()));
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn random_records_match_the_oracle(seed in any::<u64>(), statements in 4usize..=12, hyps in 1usize..=3) {
        let (record, conclusion) = random_record(seed, statements, hyps.min(statements - 1));
        check_against_oracle(&record, &conclusion)?;
    }

    #[test]
    fn random_packs_match_the_oracle(seed in any::<u64>(), pick in any::<prop::sample::Index>()) {
        let inst = random_instance(seed);
        let record = saturate_facts(inst.given.clone(), &inst.base, Limits::default(), Evaluation::SemiNaive).unwrap();
        let derived: Vec<&Fact> = record.derived().collect();
        prop_assume!(!derived.is_empty());
        let conclusion = derived[pick.index(derived.len())].clone();
        let g = build_graph(&record, &conclusion, &inst.base).unwrap();
        prop_assume!(g.statement_count() <= 12);
        check_against_oracle(&record, &conclusion)?;
    }
}

#[test]
fn enough_small_instances_are_exercised() {
    let mut usable = 0;
    let mut cyclic = 0;
    for seed in 0..150 {
        let (record, conclusion) = random_record(seed, 4 + (seed as usize % 9), 1 + (seed as usize % 3));
        let Ok(g) = build_graph(&record, &conclusion, &RuleBase::default()) else {
            continue;
        };
        assert!(g.statement_count() <= 12);
        usable += 1;
        let listed = enumerate_proofs(&g, usize::MAX).proofs.len();
        assert_eq!(count_proofs(&g), BigUint::from(listed));
        // A statement that can appear among its own ancestors.
        let has_cycle = (0..g.statement_count()).any(|s| {
            let mut stack: Vec<usize> = g.parents(s).iter().flat_map(|&i| g.premises(i).to_vec()).collect();
            let mut seen = BTreeSet::new();
            while let Some(t) = stack.pop() {
                if t == s {
                    return true;
                }
                if seen.insert(t) {
                    stack.extend(g.parents(t).iter().flat_map(|&i| g.premises(i).to_vec()));
                }
            }
            false
        });
        cyclic += usize::from(has_cycle);
    }
    assert!(usable >= 100, "only {usable} usable instances");
    assert!(cyclic >= 10, "only {cyclic} instances with cycles");
}

#[test]
fn builds_are_deterministic() {
    for seed in 0..30 {
        let (record, conclusion) = random_record(seed, 10, 2);
        let a = build_graph(&record, &conclusion, &RuleBase::default());
        let b = build_graph(&record.clone(), &conclusion, &RuleBase::default());
        match (a, b) {
            (Ok(a), Ok(b)) => {
                assert_eq!(export_dot(&a), export_dot(&b));
                assert_eq!(export_json(&a), export_json(&b));
                let back = import_json(&export_json(&a)).unwrap();
                assert_eq!(export_dot(&back), export_dot(&a));
                let ea: Vec<_> = enumerate_proofs(&a, 50).proofs.iter().map(|t| t.chosen().clone()).collect();
                let eb: Vec<BTreeMap<_, _>> = enumerate_proofs(&b, 50).proofs.iter().map(|t| t.chosen().clone()).collect();
                assert_eq!(ea, eb);
            }
            (Err(a), Err(b)) => assert_eq!(a, b),
            _ => panic!("nondeterministic build"),
        }
    }
}

#[test]
fn enumeration_is_ordered_by_rule_choices() {
    for seed in 0..60 {
        let (record, conclusion) = random_record(seed, 9, 2);
        let Ok(g) = build_graph(&record, &conclusion, &RuleBase::default()) else {
            continue;
        };
        let proofs = enumerate_proofs(&g, usize::MAX).proofs;
        // The conclusion's chosen parent never moves backwards.
        let firsts: Vec<usize> = proofs.iter().map(|t| t.chosen()[&g.conclusion()]).collect();
        let mut sorted = firsts.clone();
        sorted.sort();
        assert_eq!(firsts, sorted);
    }
}

#[test]
fn layered_counts_scale() {
    let start = std::time::Instant::now();
    let g = geotutor::synth::layered_graph(6, 9);
    assert_eq!(count_proofs(&g), BigUint::from(6u64.pow(9)));
    assert!(start.elapsed().as_secs() < 10, "{:?}", start.elapsed());
    let capped = enumerate_proofs(&g, 1000);
    assert_eq!(capped.proofs.len(), 1000);
    assert!(capped.truncated);
    let (forest, warning) = geotutor::graph::to_forest(&g, geotutor::graph::DEFAULT_FOREST_CAP);
    assert_eq!(forest.len(), geotutor::graph::DEFAULT_FOREST_CAP);
    assert!(matches!(warning, Some(geotutor::Warning::CapExceeded { .. })));
}
