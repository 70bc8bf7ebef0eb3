//! The hypothesis/inference/conclusion graph of a saturated problem.
//!
//! Statement nodes (one per canonical fact) alternate with inference nodes
//! (one per rule applied to a set of premises). Statement ids follow canonical-key order and
//! inference ids follow, ordered by rule id, derived key and premise keys,
//! so two builds from the same record are identical.

mod export;
mod forest;
mod proofs;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dsl::RuleBase;
use crate::engine::{Binding, DerivationRecord};
use crate::model::Fact;

pub use export::{export_dot, export_json, import_json, ExportError, GraphFormat};
pub use forest::{to_forest, ProofForest, DEFAULT_FOREST_CAP};
pub use proofs::{count_proofs, enumerate_proofs, Enumeration, ProofTree};

pub type NodeId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum NodeClass {
    Hypothesis,
    IntermediateResult,
    Conclusion,
    Inference,
}

impl NodeClass {
    pub fn is_statement(self) -> bool {
        self != NodeClass::Inference
    }

    pub fn as_str(self) -> &'static str {
        match self {
            NodeClass::Hypothesis => "hypothesis",
            NodeClass::IntermediateResult => "intermediateResult",
            NodeClass::Conclusion => "conclusion",
            NodeClass::Inference => "inference",
        }
    }
}

impl fmt::Display for NodeClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Payload {
    Statement(Fact),
    Inference { rule: String, hint: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Node {
    pub id: NodeId,
    pub class: NodeClass,
    pub payload: Payload,
}

impl Node {
    pub fn fact(&self) -> Option<&Fact> {
        match &self.payload {
            Payload::Statement(f) => Some(f),
            Payload::Inference { .. } => None,
        }
    }

    pub fn rule(&self) -> Option<&str> {
        match &self.payload {
            Payload::Inference { rule, .. } => Some(rule),
            Payload::Statement(_) => None,
        }
    }

    /// Canonical key for statements, rule id for inferences.
    pub fn label(&self) -> &str {
        match &self.payload {
            Payload::Statement(f) => f.key(),
            Payload::Inference { rule, .. } => rule,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("conclusion `{0}` was not derived; the rule pack or the problem encoding is incomplete")]
    ConclusionNotDerived(String),
}

/// One inference before id assignment.
#[derive(Debug, Clone)]
pub(crate) struct RawInference {
    pub rule: String,
    pub hint: String,
    pub premises: Vec<Fact>,
    pub derived: Fact,
}

#[derive(Debug, Clone)]
pub struct HpdicGraph {
    nodes: Vec<Node>,
    statement_count: usize,
    conclusion: NodeId,
    /// Inference node -> distinct premise statements, in rule order.
    premises: Vec<Vec<NodeId>>,
    /// Inference node -> derived statement.
    derived: Vec<NodeId>,
    /// Statement node -> deriving inferences, in id order.
    parents: Vec<Vec<NodeId>>,
    /// Statement node -> inferences using it.
    uses: Vec<Vec<NodeId>>,
    by_key: HashMap<String, NodeId>,
}

impl HpdicGraph {
    pub(crate) fn assemble(
        statements: BTreeMap<Fact, bool>,
        inferences: Vec<RawInference>,
        conclusion: &Fact,
    ) -> Self {
        let mut nodes = Vec::new();
        let mut by_key = HashMap::new();
        for (fact, given) in statements {
            let class = if &fact == conclusion {
                NodeClass::Conclusion
            } else if given {
                NodeClass::Hypothesis
            } else {
                NodeClass::IntermediateResult
            };
            by_key.insert(fact.key().to_string(), nodes.len());
            nodes.push(Node {
                id: nodes.len(),
                class,
                payload: Payload::Statement(fact),
            });
        }
        let statement_count = nodes.len();
        let mut sorted: Vec<(String, String, Vec<String>, RawInference)> = inferences
            .into_iter()
            .map(|r| {
                let mut keys: Vec<String> = r.premises.iter().map(|f| f.key().to_string()).collect();
                keys.sort();
                keys.dedup();
                (r.rule.clone(), r.derived.key().to_string(), keys, r)
            })
            .collect();
        sorted.sort_by(|a, b| (&a.0, &a.1, &a.2).cmp(&(&b.0, &b.1, &b.2)));
        sorted.dedup_by(|a, b| (&a.0, &a.1, &a.2) == (&b.0, &b.1, &b.2));

        let mut premises = vec![Vec::new(); statement_count];
        let mut derived = vec![usize::MAX; statement_count];
        let mut parents = vec![Vec::new(); statement_count];
        let mut uses = vec![Vec::new(); statement_count];
        for (_, _, _, raw) in sorted {
            let id = nodes.len();
            let d = by_key[raw.derived.key()];
            let mut ps: Vec<NodeId> = Vec::new();
            for p in &raw.premises {
                let pid = by_key[p.key()];
                if !ps.contains(&pid) {
                    ps.push(pid);
                }
            }
            for &p in &ps {
                uses[p].push(id);
            }
            parents[d].push(id);
            nodes.push(Node {
                id,
                class: NodeClass::Inference,
                payload: Payload::Inference {
                    rule: raw.rule,
                    hint: raw.hint,
                },
            });
            premises.push(ps);
            derived.push(d);
            parents.push(Vec::new());
            uses.push(Vec::new());
        }
        let conclusion = by_key[conclusion.key()];
        HpdicGraph {
            nodes,
            statement_count,
            conclusion,
            premises,
            derived,
            parents,
            uses,
            by_key,
        }
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn conclusion(&self) -> NodeId {
        self.conclusion
    }

    /// Statement nodes occupy ids `0..statement_count()`.
    pub fn statement_count(&self) -> usize {
        self.statement_count
    }

    pub fn statements(&self) -> impl Iterator<Item = &Node> {
        self.nodes[..self.statement_count].iter()
    }

    pub fn inferences(&self) -> impl Iterator<Item = &Node> {
        self.nodes[self.statement_count..].iter()
    }

    pub fn is_statement(&self, id: NodeId) -> bool {
        id < self.statement_count
    }

    pub fn is_hypothesis(&self, id: NodeId) -> bool {
        self.nodes[id].class == NodeClass::Hypothesis
    }

    pub fn hypotheses(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.statement_count).filter(|&s| self.is_hypothesis(s))
    }

    /// Distinct premise statements of an inference node.
    pub fn premises(&self, inference: NodeId) -> &[NodeId] {
        &self.premises[inference]
    }

    pub fn derived(&self, inference: NodeId) -> NodeId {
        self.derived[inference]
    }

    /// Inference parents of a statement node.
    pub fn parents(&self, statement: NodeId) -> &[NodeId] {
        &self.parents[statement]
    }

    /// Inferences consuming a statement node.
    pub fn uses(&self, statement: NodeId) -> &[NodeId] {
        &self.uses[statement]
    }

    pub fn node_of_key(&self, key: &str) -> Option<NodeId> {
        self.by_key.get(key).copied()
    }

    pub fn node_of(&self, fact: &Fact) -> Option<NodeId> {
        self.node_of_key(fact.key())
    }

    /// Every edge: for each inference in id order, its premise edges in
    /// premise order followed by the edge to its derived statement.
    pub fn edges(&self) -> Vec<(NodeId, NodeId)> {
        let mut out = Vec::new();
        for i in self.statement_count..self.nodes.len() {
            for &p in &self.premises[i] {
                out.push((p, i));
            }
            out.push((i, self.derived[i]));
        }
        out
    }

    pub fn class_count(&self, class: NodeClass) -> usize {
        self.nodes.iter().filter(|n| n.class == class).count()
    }
}

/// Renders a hint template, substituting `{?V}` with the bound object name.
pub fn render_hint(template: &str, binding: &Binding) -> String {
    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    while let Some(start) = rest.find("{?") {
        out.push_str(&rest[..start]);
        let after = &rest[start + 2..];
        match after.find('}') {
            Some(end) => {
                let var = &after[..end];
                match binding.iter().find(|(k, _)| &***k == var) {
                    Some((_, obj)) => out.push_str(obj.name()),
                    None => {
                        out.push_str("{?");
                        out.push_str(var);
                        out.push('}');
                    }
                }
                rest = &after[end + 1..];
            }
            None => {
                out.push_str(&rest[start..]);
                rest = "";
            }
        }
    }
    out.push_str(rest);
    out
}

fn default_hint(premises: &[Fact]) -> String {
    let keys: Vec<&str> = premises.iter().map(|f| f.key()).collect();
    format!("What can you deduce from {}?", keys.join(", "))
}

fn raw_inferences(record: &DerivationRecord, rules: &RuleBase) -> Vec<RawInference> {
    record
        .justifications()
        .iter()
        .filter(|j| !record.given().contains(j.derived()))
        .map(|j| {
            let hint = match rules.rule(j.rule()).and_then(|r| r.hint.as_deref()) {
                Some(template) => render_hint(template, j.binding()),
                None => default_hint(j.premises()),
            };
            RawInference {
                rule: j.rule().to_string(),
                hint,
                premises: j.premises().to_vec(),
                derived: j.derived().clone(),
            }
        })
        .collect()
}

/// The full graph over every fact and justification of `record`, without
/// relevance pruning. Justifications of given facts are still dropped since
/// hypotheses are never derived.
pub fn build_unpruned_graph(
    record: &DerivationRecord,
    conclusion: &Fact,
    rules: &RuleBase,
) -> Result<HpdicGraph, GraphError> {
    if !record.contains(conclusion) {
        return Err(GraphError::ConclusionNotDerived(conclusion.key().to_string()));
    }
    let statements = record
        .facts()
        .iter()
        .map(|f| (f.clone(), record.given().contains(f)))
        .collect();
    Ok(HpdicGraph::assemble(
        statements,
        raw_inferences(record, rules),
        conclusion,
    ))
}

/// Builds the graph and prunes it to the nodes relevant to `conclusion`:
/// an inference survives when all its premises are derivable from the
/// hypotheses through surviving inferences and its derived statement leads
/// to the conclusion. Inferences consuming the conclusion are dropped since
/// they can only take part in cyclic derivations.
///
/// `rules` supplies hint templates; rules missing from it get a generic hint.
pub fn build_graph(
    record: &DerivationRecord,
    conclusion: &Fact,
    rules: &RuleBase,
) -> Result<HpdicGraph, GraphError> {
    if !record.contains(conclusion) {
        return Err(GraphError::ConclusionNotDerived(conclusion.key().to_string()));
    }
    let mut alive: Vec<RawInference> = raw_inferences(record, rules)
        .into_iter()
        .filter(|r| !r.premises.contains(conclusion))
        .collect();
    loop {
        let before = alive.len();
        // Well-founded forward derivability.
        let mut derivable: BTreeSet<&Fact> = record.given().iter().collect();
        let mut fired = vec![false; alive.len()];
        loop {
            let mut changed = false;
            for (i, r) in alive.iter().enumerate() {
                if !fired[i] && r.premises.iter().all(|p| derivable.contains(p)) {
                    fired[i] = true;
                    changed |= derivable.insert(&r.derived);
                }
            }
            if !changed {
                break;
            }
        }
        // Backward relevance from the conclusion.
        let mut relevant: BTreeSet<&Fact> = [conclusion].into();
        let mut kept = vec![false; alive.len()];
        loop {
            let mut changed = false;
            for (i, r) in alive.iter().enumerate() {
                if fired[i] && !kept[i] && relevant.contains(&r.derived) {
                    kept[i] = true;
                    changed = true;
                    relevant.extend(r.premises.iter());
                }
            }
            if !changed {
                break;
            }
        }
        let reached = derivable.contains(conclusion);
        alive = alive
            .into_iter()
            .zip(kept)
            .filter_map(|(r, k)| k.then_some(r))
            .collect();
        if !reached {
            return Err(GraphError::ConclusionNotDerived(conclusion.key().to_string()));
        }
        if alive.len() == before {
            break;
        }
    }
    let mut statements = BTreeMap::new();
    statements.insert(conclusion.clone(), false);
    for r in &alive {
        statements.insert(r.derived.clone(), false);
        for p in &r.premises {
            statements.insert(p.clone(), record.given().contains(p));
        }
    }
    Ok(HpdicGraph::assemble(statements, alive, conclusion))
}
