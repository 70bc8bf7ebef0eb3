//! Graphviz and JSON renderings of a graph.
//!
//! The JSON form is self-contained: it carries the declarations of every
//! predicate it mentions, so it can be read back without the rule pack.
//!
//! ```json
//! {
//!   "schemaVersion": 1,
//!   "predicates": ["pred perp/2 kinds(line,line) sym(swap 1 2)"],
//!   "conclusion": "rectangle(A,B,C,D)",
//!   "nodes": [{"id": 0, "class": "hypothesis", "fact": "perp(lAB,lBC)"},
//!             {"id": 9, "class": "inference", "rule": "three_right_angles", "hint": "..."}],
//!   "edges": [[0, 9], [9, 4]]
//! }
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{HpdicGraph, NodeClass, Payload, RawInference};
use crate::dsl::{parse_rules, DslError};
use crate::model::{canonicalize, Fact, ModelError, ObjectId};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraphFormat {
    Dot,
    Json,
}

impl FromStr for GraphFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "dot" => Ok(GraphFormat::Dot),
            "json" => Ok(GraphFormat::Json),
            other => Err(format!("unknown graph format `{other}` (expected dot or json)")),
        }
    }
}

#[derive(Debug, Error)]
pub enum ExportError {
    #[error("invalid graph JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported schemaVersion {0}")]
    SchemaVersion(u32),
    #[error("predicate declarations: {0}")]
    Predicates(#[from] DslError),
    #[error("statement `{key}`: {source}")]
    Fact {
        key: String,
        #[source]
        source: ModelError,
    },
    #[error("{0}")]
    Structure(String),
}

fn dot_escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

pub fn export_dot(graph: &HpdicGraph) -> String {
    let mut out = String::from("digraph hpdic {\n  rankdir=BT;\n");
    for node in graph.nodes() {
        let attrs = match node.class {
            NodeClass::Hypothesis => "shape=box",
            NodeClass::IntermediateResult => "shape=box, style=rounded",
            NodeClass::Conclusion => "shape=box, peripheries=2",
            NodeClass::Inference => "shape=ellipse",
        };
        let _ = writeln!(
            out,
            "  n{} [{attrs}, label=\"{}\"];",
            node.id,
            dot_escape(node.label())
        );
    }
    for (a, b) in graph.edges() {
        let _ = writeln!(out, "  n{a} -> n{b};");
    }
    out.push_str("}\n");
    out
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
struct GraphDoc {
    schema_version: u32,
    predicates: Vec<String>,
    conclusion: String,
    nodes: Vec<NodeDoc>,
    edges: Vec<[usize; 2]>,
}

#[derive(Debug, Serialize, Deserialize)]
struct NodeDoc {
    id: usize,
    class: NodeClass,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    fact: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    rule: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    hint: Option<String>,
}

pub fn export_json(graph: &HpdicGraph) -> String {
    let mut predicates = BTreeMap::new();
    for n in graph.statements() {
        let p = n.fact().expect("statement").predicate();
        predicates.entry(p.name().to_string()).or_insert_with(|| p.to_string());
    }
    let nodes = graph
        .nodes()
        .iter()
        .map(|n| match &n.payload {
            Payload::Statement(f) => NodeDoc {
                id: n.id,
                class: n.class,
                fact: Some(f.key().to_string()),
                rule: None,
                hint: None,
            },
            Payload::Inference { rule, hint } => NodeDoc {
                id: n.id,
                class: n.class,
                fact: None,
                rule: Some(rule.clone()),
                hint: Some(hint.clone()),
            },
        })
        .collect();
    let doc = GraphDoc {
        schema_version: SCHEMA_VERSION,
        predicates: predicates.into_values().collect(),
        conclusion: graph.node(graph.conclusion()).label().to_string(),
        nodes,
        edges: graph.edges().into_iter().map(|(a, b)| [a, b]).collect(),
    };
    let mut text = serde_json::to_string_pretty(&doc).expect("graph documents serialize");
    text.push('\n');
    text
}

/// Reads a graph written by [`export_json`]. Node ids are reassigned by the
/// usual ordering, so a round trip yields an identical graph.
pub fn import_json(text: &str) -> Result<HpdicGraph, ExportError> {
    let doc: GraphDoc = serde_json::from_str(text)?;
    if doc.schema_version != SCHEMA_VERSION {
        return Err(ExportError::SchemaVersion(doc.schema_version));
    }
    let decls = parse_rules(&doc.predicates.join("\n"))?;
    let mut facts: BTreeMap<usize, Fact> = BTreeMap::new();
    let mut statements = BTreeMap::new();
    let mut conclusion = None;
    for n in &doc.nodes {
        if n.class == NodeClass::Inference {
            continue;
        }
        let key = n
            .fact
            .as_deref()
            .ok_or_else(|| ExportError::Structure(format!("statement node {} has no fact", n.id)))?;
        let fact = parse_key(key, &decls)?;
        if n.class == NodeClass::Conclusion {
            conclusion = Some(fact.clone());
        }
        statements.insert(fact.clone(), n.class == NodeClass::Hypothesis);
        facts.insert(n.id, fact);
    }
    let conclusion =
        conclusion.ok_or_else(|| ExportError::Structure("no conclusion node".to_string()))?;
    let mut premises: BTreeMap<usize, Vec<Fact>> = BTreeMap::new();
    let mut derived: BTreeMap<usize, Fact> = BTreeMap::new();
    for &[a, b] in &doc.edges {
        match (facts.get(&a), facts.get(&b)) {
            (Some(f), None) => premises.entry(b).or_default().push(f.clone()),
            (None, Some(f)) => {
                if derived.insert(a, f.clone()).is_some() {
                    return Err(ExportError::Structure(format!("inference {a} derives twice")));
                }
            }
            _ => return Err(ExportError::Structure(format!("edge {a} -> {b} is not bipartite"))),
        }
    }
    let mut inferences = Vec::new();
    for n in doc.nodes.iter().filter(|n| n.class == NodeClass::Inference) {
        let missing = || ExportError::Structure(format!("inference node {} is incomplete", n.id));
        inferences.push(RawInference {
            rule: n.rule.clone().ok_or_else(missing)?,
            hint: n.hint.clone().unwrap_or_default(),
            premises: premises.remove(&n.id).unwrap_or_default(),
            derived: derived.remove(&n.id).ok_or_else(missing)?,
        });
    }
    Ok(HpdicGraph::assemble(statements, inferences, &conclusion))
}

fn parse_key(key: &str, decls: &crate::dsl::RuleBase) -> Result<Fact, ExportError> {
    let bad = || ExportError::Structure(format!("malformed statement `{key}`"));
    let (name, rest) = key.split_once('(').ok_or_else(bad)?;
    let inner = rest.strip_suffix(')').ok_or_else(bad)?;
    let decl = decls
        .predicate(name)
        .ok_or_else(|| ExportError::Structure(format!("undeclared predicate `{name}`")))?;
    let names: Vec<&str> = inner.split(',').collect();
    if names.len() != decl.arity() {
        return Err(ExportError::Fact {
            key: key.to_string(),
            source: ModelError::ArityMismatch {
                predicate: name.to_string(),
                expected: decl.arity(),
                found: names.len(),
            },
        });
    }
    let fact_err = |source| ExportError::Fact {
        key: key.to_string(),
        source,
    };
    let args = names
        .iter()
        .zip(decl.arg_kinds())
        .map(|(n, k)| ObjectId::new(n, *k))
        .collect::<Result<Vec<_>, _>>()
        .map_err(fact_err)?;
    let fact = canonicalize(decl, &args).map_err(fact_err)?;
    if fact.key() != key {
        return Err(ExportError::Structure(format!(
            "statement `{key}` is not in canonical form (expected `{}`)",
            fact.key()
        )));
    }
    Ok(fact)
}
