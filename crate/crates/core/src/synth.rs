//! Synthetic inputs: closed-form layered graphs for scale checks and seeded
//! random rule packs and derivation records for property tests.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::sync::Arc;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dsl::{parse_rules, RuleBase};
use crate::engine::{Binding, DerivationRecord, Justification};
use crate::graph::{build_graph, HpdicGraph};
use crate::model::{canonicalize, Fact, ObjectId, ObjectKind, PredicateDecl, PredicateRef};

fn scalar_predicate(name: &str) -> PredicateRef {
    Arc::new(PredicateDecl::new(name, vec![ObjectKind::Scalar], vec![]).expect("valid declaration"))
}

fn scalar_fact(pred: &PredicateRef, name: &str) -> Fact {
    let obj = ObjectId::new(name, ObjectKind::Scalar).expect("valid name");
    canonicalize(pred, &[obj]).expect("arity 1")
}

/// A conclusion needing one intermediate per layer, each intermediate having
/// `k` independent justifications from its own hypothesis: `k^layers` proofs.
pub fn layered_record(k: usize, layers: usize) -> (DerivationRecord, Fact) {
    let hyp = scalar_predicate("given");
    let mid = scalar_predicate("step");
    let goal = scalar_predicate("goal");
    let conclusion = scalar_fact(&goal, "g");
    let mut given = Vec::new();
    let mut justifications = Vec::new();
    let mut mids = Vec::new();
    for l in 0..layers {
        let m = scalar_fact(&mid, &format!("m{l}"));
        for j in 0..k {
            let h = scalar_fact(&hyp, &format!("h{l}_{j}"));
            given.push(h.clone());
            justifications.push(Justification::new(
                &format!("way{j}"),
                vec![h],
                m.clone(),
                Binding::new(),
            ));
        }
        mids.push(m);
    }
    justifications.push(Justification::new(
        "combine",
        mids,
        conclusion.clone(),
        Binding::new(),
    ));
    (
        DerivationRecord::from_justifications(given, justifications),
        conclusion,
    )
}

pub fn layered_graph(k: usize, layers: usize) -> HpdicGraph {
    let (record, conclusion) = layered_record(k, layers);
    build_graph(&record, &conclusion, &RuleBase::default()).expect("conclusion is derived")
}

/// A random derivation record over `statements` facts, the first
/// `hypotheses` of which are given, with alternative and cyclic
/// justifications. The last statement is the conclusion.
pub fn random_record(seed: u64, statements: usize, hypotheses: usize) -> (DerivationRecord, Fact) {
    assert!(hypotheses >= 1 && hypotheses < statements);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pred = scalar_predicate("s");
    let facts: Vec<Fact> = (0..statements)
        .map(|i| scalar_fact(&pred, &format!("f{i:02}")))
        .collect();
    let mut justifications = Vec::new();
    for (i, derived) in facts.iter().enumerate().skip(hypotheses) {
        for _ in 0..rng.random_range(1..=3) {
            let n = rng.random_range(1..=3);
            let premises: BTreeSet<Fact> = (0..n)
                .map(|_| {
                    // Mostly earlier statements, occasionally any (cycles).
                    let bound = if rng.random_bool(0.2) { statements } else { i };
                    facts[rng.random_range(0..bound)].clone()
                })
                .filter(|p| p != derived)
                .collect();
            if premises.is_empty() {
                continue;
            }
            let rule = format!("r{}", rng.random_range(0..4));
            justifications.push(Justification::new(
                &rule,
                premises.into_iter().collect(),
                derived.clone(),
                Binding::new(),
            ));
        }
    }
    let conclusion = facts[statements - 1].clone();
    (
        DerivationRecord::from_justifications(facts[..hypotheses].to_vec(), justifications),
        conclusion,
    )
}

/// A random rule pack over a handful of point predicates, together with the
/// objects and given facts of a matching instance.
#[derive(Debug, Clone)]
pub struct RandomInstance {
    pub pack: String,
    pub base: RuleBase,
    pub objects: Vec<ObjectId>,
    pub given: Vec<Fact>,
}

const SYMMETRIES_2: [&str; 2] = ["", " sym(swap 1 2)"];
const SYMMETRIES_3: [&str; 4] = ["", " sym(swap 2 3)", " sym(cycle 1 2 3)", " sym(full)"];

pub fn random_instance(seed: u64) -> RandomInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pack = String::new();
    let arities = [1usize, 2, 2, 3];
    for (i, arity) in arities.iter().enumerate() {
        let kinds = vec!["point"; *arity].join(",");
        let sym = match arity {
            2 => *SYMMETRIES_2.choose(&mut rng).expect("non-empty"),
            3 => *SYMMETRIES_3.choose(&mut rng).expect("non-empty"),
            _ => "",
        };
        let _ = writeln!(pack, "pred p{i}/{arity} kinds({kinds}){sym}");
    }
    let vars = ["A", "B", "C"];
    let tiers = ["coarse", "fine", "default"];
    for r in 0..rng.random_range(2..=5) {
        let mut used = BTreeSet::new();
        let mut premises = Vec::new();
        for _ in 0..rng.random_range(1..=2) {
            let p = rng.random_range(0..arities.len());
            let args: Vec<&str> = (0..arities[p])
                .map(|_| *vars.choose(&mut rng).expect("non-empty"))
                .collect();
            used.extend(args.iter().copied());
            premises.push(format!("p{p}({})", args.iter().map(|a| format!("?{a}")).collect::<Vec<_>>().join(",")));
        }
        let used: Vec<&str> = used.into_iter().collect();
        let c = rng.random_range(0..arities.len());
        let args: Vec<String> = (0..arities[c])
            .map(|_| format!("?{}", used.choose(&mut rng).expect("non-empty")))
            .collect();
        let _ = writeln!(
            pack,
            "rule r{r} {{ level: {} isle: i{} tier: {} if: {} then: p{c}({}) }}",
            rng.random_range(1..=3),
            rng.random_range(0..2),
            tiers.choose(&mut rng).expect("non-empty"),
            premises.join(", "),
            args.join(",")
        );
    }
    let base = parse_rules(&pack).expect("generated packs are well-formed");
    let objects: Vec<ObjectId> = ["P", "Q", "R"]
        .iter()
        .map(|n| ObjectId::new(n, ObjectKind::Point).expect("valid name"))
        .collect();
    let mut given = BTreeSet::new();
    for _ in 0..rng.random_range(2..=5) {
        let decl = base.predicates().choose(&mut rng).expect("non-empty").clone();
        let args: Vec<ObjectId> = (0..decl.arity())
            .map(|_| objects.choose(&mut rng).expect("non-empty").clone())
            .collect();
        given.insert(canonicalize(&decl, &args).expect("kinds match"));
    }
    RandomInstance {
        pack,
        base,
        objects,
        given: given.into_iter().collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::count_proofs;
    use num_bigint::BigUint;

    #[test]
    fn layered_count_is_closed_form() {
        let g = layered_graph(3, 4);
        assert_eq!(count_proofs(&g), BigUint::from(81u32));
        assert_eq!(g.statement_count(), 3 * 4 + 4 + 1);
    }

    #[test]
    fn generators_are_deterministic() {
        let a = random_instance(7);
        let b = random_instance(7);
        assert_eq!(a.pack, b.pack);
        assert_eq!(a.given, b.given);
        let (ra, ca) = random_record(3, 10, 3);
        let (rb, cb) = random_record(3, 10, 3);
        assert_eq!(ra, rb);
        assert_eq!(ca, cb);
    }
}
