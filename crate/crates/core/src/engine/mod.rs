//! Forward-chaining saturation with full justification tracking.
//!
//! The loop mirrors the classic reasoner iteration: starting from the given
//! facts `S`, each round computes every result `R` obtainable from the rules,
//! adds the new ones `N = R - S` to `S`, and stops once `N` is empty. Rounds
//! after the first only consider matches that use at least one fact from the
//! previous round (semi-naive); [`Strategy::Naive`] keeps the plain loop for
//! cross-checking. Once the fact set is stable, one more full round collects
//! alternative justifications of already-known facts.

mod matching;

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dsl::{Problem, Rule, RuleBase};
use crate::model::{Fact, ModelError};

pub use matching::{instantiate, match_premises, Binding, FactStore};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LimitKind {
    Rounds,
    Facts,
}

impl fmt::Display for LimitKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LimitKind::Rounds => "maxRounds",
            LimitKind::Facts => "maxFacts",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    /// A range-restricted pack over finitely many objects cannot run away,
    /// so hitting a limit points at a mis-declared pack.
    #[error("saturation exceeded {kind} = {bound}; check the rule pack")]
    LimitExceeded { kind: LimitKind, bound: usize },
    #[error("rule `{rule}`: {source}")]
    Instantiation {
        rule: String,
        #[source]
        source: ModelError,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Limits {
    pub max_rounds: usize,
    pub max_facts: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            max_rounds: 64,
            max_facts: 200_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Strategy {
    #[default]
    SemiNaive,
    Naive,
}

/// One rule application: `rule` applied to `premises` derives `derived`.
///
/// Identity is `(rule, premise multiset, derived)`; the binding and premise
/// order are carried along for replay and hint rendering.
#[derive(Debug, Clone)]
pub struct Justification {
    rule: Arc<str>,
    premises: Vec<Fact>,
    premise_set: Vec<Fact>,
    derived: Fact,
    binding: Binding,
}

impl Justification {
    pub fn new(rule: &str, premises: Vec<Fact>, derived: Fact, binding: Binding) -> Self {
        let mut premise_set = premises.clone();
        premise_set.sort();
        Justification {
            rule: Arc::from(rule),
            premises,
            premise_set,
            derived,
            binding,
        }
    }

    pub fn rule(&self) -> &str {
        &self.rule
    }

    /// Premises in the order of the rule's premise patterns.
    pub fn premises(&self) -> &[Fact] {
        &self.premises
    }

    /// Premises sorted by key (with repetitions).
    pub fn premise_set(&self) -> &[Fact] {
        &self.premise_set
    }

    pub fn derived(&self) -> &Fact {
        &self.derived
    }

    pub fn binding(&self) -> &Binding {
        &self.binding
    }

    fn is_vacuous(&self) -> bool {
        self.premise_set.contains(&self.derived)
    }
}

impl PartialEq for Justification {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Justification {}

impl PartialOrd for Justification {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Justification {
    fn cmp(&self, other: &Self) -> Ordering {
        self.rule
            .cmp(&other.rule)
            .then_with(|| self.derived.cmp(&other.derived))
            .then_with(|| self.premise_set.cmp(&other.premise_set))
    }
}

impl fmt::Display for Justification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: ", self.rule)?;
        for (i, p) in self.premises.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{p}")?;
        }
        write!(f, " => {}", self.derived)
    }
}

/// Inserts `j`, keeping the smallest binding among equal justifications so
/// the stored representative does not depend on discovery order.
fn insert_justification(set: &mut BTreeSet<Justification>, j: Justification) -> bool {
    match set.get(&j) {
        Some(existing) if j.binding < existing.binding => {
            set.replace(j);
            false
        }
        Some(_) => false,
        None => set.insert(j),
    }
}

/// All justifications `rule` yields over `store`, including ones whose
/// derived fact is already known. Vacuous applications (deriving one of
/// their own premises) are dropped.
pub fn apply_rule(rule: &Rule, store: &FactStore) -> Result<BTreeSet<Justification>, EngineError> {
    let sources = vec![store; rule.premises.len()];
    let order: Vec<usize> = (0..rule.premises.len()).collect();
    collect(rule, &sources, &order)
}

/// Semi-naive variant: only matches using at least one fact of `delta`.
fn apply_rule_delta(
    rule: &Rule,
    store: &FactStore,
    delta: &FactStore,
) -> Result<BTreeSet<Justification>, EngineError> {
    let n = rule.premises.len();
    let mut out = BTreeSet::new();
    for pivot in 0..n {
        if delta.facts_of(rule.premises[pivot].predicate.name()).is_empty() {
            continue;
        }
        let mut sources = vec![store; n];
        sources[pivot] = delta;
        let order: Vec<usize> = std::iter::once(pivot).chain((0..n).filter(|&i| i != pivot)).collect();
        for j in collect(rule, &sources, &order)? {
            insert_justification(&mut out, j);
        }
    }
    Ok(out)
}

fn collect(
    rule: &Rule,
    sources: &[&FactStore],
    order: &[usize],
) -> Result<BTreeSet<Justification>, EngineError> {
    let mut out = BTreeSet::new();
    let mut error = None;
    matching::for_each_match(&rule.premises, sources, order, &mut |binding, facts| {
        if error.is_some() {
            return;
        }
        match instantiate(&rule.conclusion, binding) {
            Ok(derived) => {
                let j = Justification::new(&rule.id, facts.to_vec(), derived, binding.clone());
                if !j.is_vacuous() {
                    insert_justification(&mut out, j);
                }
            }
            Err(source) => {
                error = Some(EngineError::Instantiation {
                    rule: rule.id.clone(),
                    source,
                })
            }
        }
    });
    match error {
        Some(e) => Err(e),
        None => Ok(out),
    }
}

/// The saturated fact set together with every justification found.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DerivationRecord {
    facts: BTreeSet<Fact>,
    given: BTreeSet<Fact>,
    justifications: BTreeSet<Justification>,
    rounds: usize,
}

impl DerivationRecord {
    /// Assembles a record from given facts and justifications; the fact set
    /// is everything mentioned. Used for synthetic graphs.
    pub fn from_justifications(
        given: impl IntoIterator<Item = Fact>,
        justifications: impl IntoIterator<Item = Justification>,
    ) -> Self {
        let given: BTreeSet<Fact> = given.into_iter().collect();
        let mut facts = given.clone();
        let mut set = BTreeSet::new();
        for j in justifications {
            facts.extend(j.premises.iter().cloned());
            facts.insert(j.derived.clone());
            insert_justification(&mut set, j);
        }
        DerivationRecord {
            facts,
            given,
            justifications: set,
            rounds: 0,
        }
    }

    pub fn facts(&self) -> &BTreeSet<Fact> {
        &self.facts
    }

    pub fn given(&self) -> &BTreeSet<Fact> {
        &self.given
    }

    pub fn contains(&self, fact: &Fact) -> bool {
        self.facts.contains(fact)
    }

    pub fn justifications(&self) -> &BTreeSet<Justification> {
        &self.justifications
    }

    pub fn justifications_of<'a>(&'a self, fact: &'a Fact) -> impl Iterator<Item = &'a Justification> {
        self.justifications.iter().filter(move |j| j.derived() == fact)
    }

    pub fn rounds(&self) -> usize {
        self.rounds
    }

    pub fn derived(&self) -> impl Iterator<Item = &Fact> {
        self.facts.iter().filter(|f| !self.given.contains(*f))
    }

    /// Structured export with stable ordering.
    pub fn dump(&self, problem: &str) -> DerivationDump {
        DerivationDump {
            schema_version: 1,
            problem: problem.to_string(),
            rounds: self.rounds,
            given: self.given.iter().map(|f| f.key().to_string()).collect(),
            facts: self.facts.iter().map(|f| f.key().to_string()).collect(),
            justifications: self
                .justifications
                .iter()
                .map(|j| DumpedJustification {
                    rule: j.rule().to_string(),
                    premises: j.premise_set().iter().map(|f| f.key().to_string()).collect(),
                    derived: j.derived().key().to_string(),
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DerivationDump {
    pub schema_version: u32,
    pub problem: String,
    pub rounds: usize,
    pub given: Vec<String>,
    pub facts: Vec<String>,
    pub justifications: Vec<DumpedJustification>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DumpedJustification {
    pub rule: String,
    pub premises: Vec<String>,
    pub derived: String,
}

/// Saturates the problem's hypotheses and super-figure under `base`.
pub fn saturate(
    problem: &Problem,
    base: &RuleBase,
    limits: Limits,
) -> Result<DerivationRecord, EngineError> {
    saturate_facts(problem.given().cloned(), base, limits, Strategy::SemiNaive)
}

pub fn saturate_facts(
    given: impl IntoIterator<Item = Fact>,
    base: &RuleBase,
    limits: Limits,
    strategy: Strategy,
) -> Result<DerivationRecord, EngineError> {
    let given: BTreeSet<Fact> = given.into_iter().collect();
    let mut store: FactStore = given.iter().cloned().collect();
    let mut delta = store.clone();
    let mut justifications = BTreeSet::new();
    let mut rounds = 0;
    if store.len() > limits.max_facts {
        return Err(EngineError::LimitExceeded {
            kind: LimitKind::Facts,
            bound: limits.max_facts,
        });
    }
    loop {
        rounds += 1;
        if rounds > limits.max_rounds {
            return Err(EngineError::LimitExceeded {
                kind: LimitKind::Rounds,
                bound: limits.max_rounds,
            });
        }
        let mut new_facts = BTreeSet::new();
        for rule in base.rules() {
            let found = match strategy {
                Strategy::Naive => apply_rule(rule, &store)?,
                Strategy::SemiNaive => apply_rule_delta(rule, &store, &delta)?,
            };
            for j in found {
                if !store.contains(j.derived()) {
                    new_facts.insert(j.derived().clone());
                }
                insert_justification(&mut justifications, j);
            }
        }
        log::debug!("round {rounds}: {} new fact(s)", new_facts.len());
        if new_facts.is_empty() {
            break;
        }
        delta = FactStore::new();
        for f in new_facts {
            store.insert(f.clone());
            delta.insert(f);
        }
        if store.len() > limits.max_facts {
            return Err(EngineError::LimitExceeded {
                kind: LimitKind::Facts,
                bound: limits.max_facts,
            });
        }
    }
    for rule in base.rules() {
        for j in apply_rule(rule, &store)? {
            insert_justification(&mut justifications, j);
        }
    }
    Ok(DerivationRecord {
        facts: store.sorted().into_iter().collect(),
        given,
        justifications,
        rounds,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReplayError {
    #[error("unknown rule `{0}`")]
    UnknownRule(String),
    #[error("binding leaves variable `?{0}` unbound")]
    Unbound(String),
    #[error("premise {index} instantiates to `{expected}` but the justification lists `{found}`")]
    PremiseMismatch {
        index: usize,
        expected: String,
        found: String,
    },
    #[error("conclusion instantiates to `{expected}` but the justification derives `{found}`")]
    ConclusionMismatch { expected: String, found: String },
    #[error("{0}")]
    Model(#[from] ModelError),
}

/// Re-instantiates the justification's rule under its binding and checks
/// that it reproduces the listed premises and derived fact.
pub fn replay_justification(j: &Justification, base: &RuleBase) -> Result<(), ReplayError> {
    let rule = base
        .rule(j.rule())
        .ok_or_else(|| ReplayError::UnknownRule(j.rule().to_string()))?;
    for pattern in rule.premises.iter().chain(std::iter::once(&rule.conclusion)) {
        if let Some(v) = pattern.variables().find(|v| !j.binding().contains_key(*v)) {
            return Err(ReplayError::Unbound(v.to_string()));
        }
    }
    if rule.premises.len() != j.premises().len() {
        return Err(ReplayError::PremiseMismatch {
            index: rule.premises.len().min(j.premises().len()),
            expected: format!("{} premise(s)", rule.premises.len()),
            found: format!("{} premise(s)", j.premises().len()),
        });
    }
    for (index, (pattern, fact)) in rule.premises.iter().zip(j.premises()).enumerate() {
        let expected = instantiate(pattern, j.binding())?;
        if &expected != fact {
            return Err(ReplayError::PremiseMismatch {
                index,
                expected: expected.key().to_string(),
                found: fact.key().to_string(),
            });
        }
    }
    let expected = instantiate(&rule.conclusion, j.binding())?;
    if &expected != j.derived() {
        return Err(ReplayError::ConclusionMismatch {
            expected: expected.key().to_string(),
            found: j.derived().key().to_string(),
        });
    }
    Ok(())
}

/// Justifications grouped by derived fact.
pub fn parents_by_fact(record: &DerivationRecord) -> BTreeMap<&Fact, Vec<&Justification>> {
    let mut out: BTreeMap<&Fact, Vec<&Justification>> = BTreeMap::new();
    for j in record.justifications() {
        out.entry(j.derived()).or_default().push(j);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::{parse_problem, parse_rules};

    const PACK: &str = "
pred edge/2 kinds(point,point)
pred path/2 kinds(point,point)
rule base { level: 1 isle: g tier: default if: edge(?X,?Y) then: path(?X,?Y) }
rule step { level: 1 isle: g tier: default if: path(?X,?Y), edge(?Y,?Z) then: path(?X,?Z) }
";
    const CHAIN: &str = "problem chain {
  objects: point A point B point C point D
  student:
  hypotheses: edge(A,B) edge(B,C) edge(C,D)
  superfigure:
  conclusion: path(A,D)
}";

    #[test]
    fn transitive_closure_of_a_chain() {
        let base = parse_rules(PACK).unwrap();
        let problem = parse_problem(CHAIN, &base).unwrap();
        let rec = saturate(&problem, &base, Limits::default()).unwrap();
        assert!(rec.contains(&problem.conclusion));
        // 3 edges + 6 paths
        assert_eq!(rec.facts().len(), 9);
        assert_eq!(rec.rounds(), 4);
        for j in rec.justifications() {
            replay_justification(j, &base).unwrap();
        }
    }

    #[test]
    fn empty_rule_base_infers_nothing() {
        let base = parse_rules(PACK).unwrap().with_rules(|_| false);
        let problem = parse_problem(CHAIN, &base).unwrap();
        let rec = saturate(&problem, &base, Limits::default()).unwrap();
        assert_eq!(rec.facts(), rec.given());
        assert!(rec.justifications().is_empty());
        assert_eq!(rec.rounds(), 1);
    }

    #[test]
    fn naive_and_semi_naive_agree() {
        let base = parse_rules(PACK).unwrap();
        let problem = parse_problem(CHAIN, &base).unwrap();
        let a = saturate_facts(problem.given().cloned(), &base, Limits::default(), Strategy::Naive)
            .unwrap();
        let b = saturate(&problem, &base, Limits::default()).unwrap();
        assert_eq!(a.facts(), b.facts());
        assert_eq!(a.justifications(), b.justifications());
    }

    #[test]
    fn limits_are_enforced() {
        let base = parse_rules(PACK).unwrap();
        let problem = parse_problem(CHAIN, &base).unwrap();
        let tight = Limits {
            max_rounds: 2,
            ..Limits::default()
        };
        assert_eq!(
            saturate(&problem, &base, tight),
            Err(EngineError::LimitExceeded {
                kind: LimitKind::Rounds,
                bound: 2
            })
        );
        let tight = Limits {
            max_facts: 5,
            ..Limits::default()
        };
        assert!(matches!(
            saturate(&problem, &base, tight),
            Err(EngineError::LimitExceeded {
                kind: LimitKind::Facts,
                ..
            })
        ));
    }

    #[test]
    fn self_justifications_are_discarded() {
        let base = parse_rules(
            "pred p/2 kinds(point,point) sym(swap 1 2)\n\
             rule flip { level: 1 isle: g tier: default if: p(?X,?Y) then: p(?Y,?X) }",
        )
        .unwrap();
        let problem = parse_problem(
            "problem t { objects: point A point B student: hypotheses: p(A,B) superfigure: conclusion: p(A,A) }",
            &base,
        )
        .unwrap();
        let rec = saturate(&problem, &base, Limits::default()).unwrap();
        assert!(rec.justifications().is_empty());
    }

    #[test]
    fn replay_detects_tampering() {
        let base = parse_rules(PACK).unwrap();
        let problem = parse_problem(CHAIN, &base).unwrap();
        let rec = saturate(&problem, &base, Limits::default()).unwrap();
        let j = rec.justifications().iter().find(|j| j.rule() == "step").unwrap();
        let other = rec.facts().iter().find(|f| !j.premises().contains(f)).unwrap();
        let mut premises = j.premises().to_vec();
        premises[0] = other.clone();
        let forged = Justification::new("step", premises, j.derived().clone(), j.binding().clone());
        assert!(matches!(
            replay_justification(&forged, &base),
            Err(ReplayError::PremiseMismatch { index: 0, .. })
        ));
        let forged = Justification::new("nope", vec![], j.derived().clone(), Binding::new());
        assert!(matches!(replay_justification(&forged, &base), Err(ReplayError::UnknownRule(_))));
    }

    #[test]
    fn dump_is_sorted() {
        let base = parse_rules(PACK).unwrap();
        let problem = parse_problem(CHAIN, &base).unwrap();
        let dump = saturate(&problem, &base, Limits::default()).unwrap().dump("chain");
        let mut sorted = dump.facts.clone();
        sorted.sort();
        assert_eq!(dump.facts, sorted);
        assert_eq!(dump.schema_version, 1);
        assert_eq!(dump.given.len(), 3);
    }
}
