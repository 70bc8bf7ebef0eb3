//! Live tracking of a student's resolution against the proof forest.
//!
//! Each accepted statement checks its graph node. The proof with the highest
//! share of checked nodes is taken as the one the student is working on; it
//! drives the redaction view and the choice of hint targets. Hints escalate
//! from nudges on one missing statement, to a redirect towards another, to
//! a referral to the teacher. The session owns no clock: callers decide when
//! to ask for a hint.

mod replay;

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dsl::{parse_statement, DslError};
use crate::graph::{NodeId, ProofTree};
use crate::model::Fact;
use crate::pipeline::Prepared;

pub use replay::{parse_script, replay, Expectation, ReplayError, ReplayReport, Step};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct TutorPolicy {
    /// Completion needed to unlock the redaction view.
    pub threshold: f64,
    /// Hints given on one target before redirecting.
    pub hints_per_target: usize,
    /// Targets tried before referring the student to the teacher.
    pub max_targets: usize,
    /// Treat hypotheses as already provided and leave them out of completion.
    pub precheck_hypotheses: bool,
}

impl Default for TutorPolicy {
    fn default() -> Self {
        TutorPolicy {
            threshold: 0.5,
            hints_per_target: 3,
            max_targets: 2,
            precheck_hypotheses: true,
        }
    }
}

#[derive(Debug, Error)]
pub enum TutorError {
    #[error("malformed statement: {0}")]
    MalformedStatement(#[source] DslError),
    #[error("the proof is complete; nothing is missing")]
    NothingMissing,
    #[error("the problem has no proof to follow")]
    NoProof,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum SubmitOutcome {
    Matched,
    NotOnGraph,
    Malformed,
}

impl SubmitOutcome {
    pub fn as_str(self) -> &'static str {
        match self {
            SubmitOutcome::Matched => "matched",
            SubmitOutcome::NotOnGraph => "notOnGraph",
            SubmitOutcome::Malformed => "malformed",
        }
    }
}

impl fmt::Display for SubmitOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubmitResult {
    Matched(NodeId),
    NotOnGraph,
}

impl SubmitResult {
    pub fn outcome(self) -> SubmitOutcome {
        match self {
            SubmitResult::Matched(_) => SubmitOutcome::Matched,
            SubmitResult::NotOnGraph => SubmitOutcome::NotOnGraph,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum HintKind {
    Nudge,
    Redirect,
    TeacherReferral,
}

impl HintKind {
    pub fn as_str(self) -> &'static str {
        match self {
            HintKind::Nudge => "nudge",
            HintKind::Redirect => "redirect",
            HintKind::TeacherReferral => "teacherReferral",
        }
    }
}

impl fmt::Display for HintKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Hint {
    pub kind: HintKind,
    pub message: String,
    pub target: Option<NodeId>,
}

pub const REFERRAL_MESSAGE: &str =
    "You have been stuck for a while. Please ask your teacher for help with this step.";

/// Completion of one proof as an exact ratio.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BestProof {
    pub index: usize,
    pub checked: usize,
    pub total: usize,
}

impl BestProof {
    pub fn completion(&self) -> f64 {
        self.checked as f64 / self.total as f64
    }

    fn better_than(&self, other: &BestProof) -> bool {
        (self.checked * other.total).cmp(&(other.checked * self.total)) == Ordering::Greater
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RedactionLine {
    pub node: NodeId,
    /// The statement once provided, `None` for a blank.
    pub text: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RedactionView {
    pub unlocked: bool,
    pub lines: Vec<RedactionLine>,
}

impl RedactionView {
    pub fn blanks(&self) -> usize {
        self.lines.iter().filter(|l| l.text.is_none()).count()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct HintState {
    pub target: Option<NodeId>,
    pub hints_on_target: usize,
    pub targets_tried: usize,
    pub tried: Vec<NodeId>,
    pub referred: bool,
}

/// One entry of the session log.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "camelCase")]
pub enum Event {
    Submit {
        statement: String,
        outcome: SubmitOutcome,
    },
    Hint {
        kind: HintKind,
        target: Option<String>,
    },
    NothingMissing,
}

/// Serializable view of everything that determines future behaviour.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SessionSnapshot {
    pub problem: String,
    pub checked: Vec<String>,
    pub rejected: Vec<String>,
    pub best_proof: Option<usize>,
    pub completion: f64,
    pub unlocked: bool,
    pub hint_state: HintState,
}

#[derive(Debug, Clone)]
pub struct Session {
    exercise: Arc<Prepared>,
    policy: TutorPolicy,
    checked: BTreeSet<NodeId>,
    rejected: Vec<Fact>,
    /// Tree index -> number of checked countable nodes.
    progress: Vec<usize>,
    hint: HintState,
    log: Vec<Event>,
}

impl Session {
    pub fn new(exercise: Arc<Prepared>, policy: TutorPolicy) -> Self {
        let mut checked = BTreeSet::new();
        if policy.precheck_hypotheses {
            checked.extend(exercise.graph.hypotheses());
        }
        let progress = vec![0; exercise.forest.len()];
        Session {
            exercise,
            policy,
            checked,
            rejected: Vec::new(),
            progress,
            hint: HintState::default(),
            log: Vec::new(),
        }
    }

    pub fn exercise(&self) -> &Arc<Prepared> {
        &self.exercise
    }

    pub fn policy(&self) -> &TutorPolicy {
        &self.policy
    }

    pub fn checked(&self) -> &BTreeSet<NodeId> {
        &self.checked
    }

    pub fn is_checked(&self, node: NodeId) -> bool {
        self.checked.contains(&node)
    }

    pub fn rejected(&self) -> &[Fact] {
        &self.rejected
    }

    pub fn hint_state(&self) -> &HintState {
        &self.hint
    }

    pub fn log(&self) -> &[Event] {
        &self.log
    }

    fn countable(&self, tree: &ProofTree, node: NodeId) -> bool {
        tree.chosen().contains_key(&node)
            || (!self.policy.precheck_hypotheses && tree.leaves().contains(&node))
    }

    fn countable_total(&self, tree: &ProofTree) -> usize {
        tree.size()
            + if self.policy.precheck_hypotheses {
                0
            } else {
                tree.leaves().len()
            }
    }

    /// Parses `text` in the problem's scope and submits it.
    pub fn submit_text(&mut self, text: &str) -> Result<SubmitResult, TutorError> {
        let ex = self.exercise.clone();
        match parse_statement(text, &ex.problem, &ex.rules) {
            Ok(fact) => Ok(self.submit(&fact)),
            Err(e) => {
                self.log.push(Event::Submit {
                    statement: text.trim().to_string(),
                    outcome: SubmitOutcome::Malformed,
                });
                Err(TutorError::MalformedStatement(e))
            }
        }
    }

    pub fn submit(&mut self, fact: &Fact) -> SubmitResult {
        let graph = &self.exercise.graph;
        let result = match graph.node_of(fact) {
            Some(node) => {
                if self.checked.insert(node) {
                    let ex = self.exercise.clone();
                    for &t in ex.forest.trees_containing(node) {
                        if self.countable(ex.forest.tree(t as usize), node) {
                            self.progress[t as usize] += 1;
                        }
                    }
                    self.hint = HintState::default();
                }
                SubmitResult::Matched(node)
            }
            None => {
                self.rejected.push(fact.clone());
                SubmitResult::NotOnGraph
            }
        };
        self.log.push(Event::Submit {
            statement: fact.key().to_string(),
            outcome: result.outcome(),
        });
        result
    }

    /// The proof with the highest completion; ties go to the lowest index.
    pub fn best_proof(&self) -> Option<BestProof> {
        let forest = &self.exercise.forest;
        let mut best: Option<BestProof> = None;
        for (index, tree) in forest.trees().iter().enumerate() {
            let candidate = BestProof {
                index,
                checked: self.progress[index],
                total: self.countable_total(tree),
            };
            if best.as_ref().is_none_or(|b| candidate.better_than(b)) {
                best = Some(candidate);
            }
        }
        best
    }

    pub fn completion(&self) -> f64 {
        self.best_proof().map_or(0.0, |b| b.completion())
    }

    /// Countable statements of a proof in the order a written proof would
    /// list them.
    fn lines_of(&self, tree: &ProofTree) -> Vec<NodeId> {
        let mut lines = Vec::new();
        if !self.policy.precheck_hypotheses {
            lines.extend(tree.leaves().iter().copied());
        }
        lines.extend(tree.derived_in_order(&self.exercise.graph));
        lines
    }

    pub fn redaction_view(&self) -> RedactionView {
        let Some(best) = self.best_proof() else {
            return RedactionView {
                unlocked: false,
                lines: Vec::new(),
            };
        };
        let graph = &self.exercise.graph;
        let tree = self.exercise.forest.tree(best.index);
        let lines = self
            .lines_of(tree)
            .into_iter()
            .map(|node| RedactionLine {
                node,
                text: self
                    .is_checked(node)
                    .then(|| graph.node(node).label().to_string()),
            })
            .collect();
        RedactionView {
            unlocked: best.completion() >= self.policy.threshold,
            lines,
        }
    }

    /// Missing countable statements of a proof, most approachable first:
    /// statements whose premises are all checked, then by height, then in
    /// written order.
    fn candidates(&self, tree: &ProofTree) -> Vec<NodeId> {
        let graph = &self.exercise.graph;
        let mut keyed: Vec<(bool, usize, usize, NodeId)> = self
            .lines_of(tree)
            .into_iter()
            .enumerate()
            .filter(|(_, n)| !self.is_checked(*n))
            .map(|(pos, n)| {
                let frontier = tree
                    .chosen()
                    .get(&n)
                    .is_none_or(|&i| graph.premises(i).iter().all(|p| self.is_checked(*p)));
                (!frontier, tree.height(graph, n), pos, n)
            })
            .collect();
        keyed.sort_unstable();
        keyed.into_iter().map(|k| k.3).collect()
    }

    fn message_for(&self, tree: &ProofTree, target: NodeId) -> String {
        let graph = &self.exercise.graph;
        match tree.chosen().get(&target) {
            Some(&inf) => match &graph.node(inf).payload {
                crate::graph::Payload::Inference { hint, .. } => hint.clone(),
                crate::graph::Payload::Statement(_) => unreachable!("parents are inferences"),
            },
            None => "Read the statement again: which of its facts does your proof rely on?".to_string(),
        }
    }

    /// A fresh target, preferring the best proof, then the other proofs in
    /// forest order, skipping targets already tried.
    fn pick_target(&self, best: usize) -> Option<(usize, NodeId)> {
        let forest = &self.exercise.forest;
        std::iter::once(best)
            .chain((0..forest.len()).filter(|&t| t != best))
            .find_map(|t| {
                self.candidates(forest.tree(t))
                    .into_iter()
                    .find(|n| !self.hint.tried.contains(n))
                    .map(|n| (t, n))
            })
    }

    fn refer(&mut self) -> Hint {
        self.hint.referred = true;
        self.hint.target = None;
        self.log.push(Event::Hint {
            kind: HintKind::TeacherReferral,
            target: None,
        });
        Hint {
            kind: HintKind::TeacherReferral,
            message: REFERRAL_MESSAGE.to_string(),
            target: None,
        }
    }

    pub fn next_hint(&mut self) -> Result<Hint, TutorError> {
        let best = self.best_proof().ok_or(TutorError::NoProof)?;
        let ex = self.exercise.clone();
        let forest = &ex.forest;
        let best_tree = forest.tree(best.index);
        if best.checked == best.total {
            self.log.push(Event::NothingMissing);
            return Err(TutorError::NothingMissing);
        }
        if self.hint.referred {
            return Ok(self.refer());
        }
        let (kind, tree, target) = match self.hint.target {
            Some(t) if self.hint.hints_on_target < self.policy.hints_per_target => {
                self.hint.hints_on_target += 1;
                let tree = forest
                    .trees_containing(t)
                    .iter()
                    .map(|&i| forest.tree(i as usize))
                    .find(|tree| tree.chosen().contains_key(&t) || tree.leaves().contains(&t))
                    .unwrap_or(best_tree);
                (HintKind::Nudge, tree, t)
            }
            current => {
                if current.is_some() && self.hint.targets_tried >= self.policy.max_targets {
                    return Ok(self.refer());
                }
                let Some((t, node)) = self.pick_target(best.index) else {
                    return Ok(self.refer());
                };
                self.hint.target = Some(node);
                self.hint.tried.push(node);
                self.hint.targets_tried += 1;
                self.hint.hints_on_target = 1;
                let kind = if current.is_some() {
                    HintKind::Redirect
                } else {
                    HintKind::Nudge
                };
                (kind, forest.tree(t), node)
            }
        };
        let message = self.message_for(tree, target);
        self.log.push(Event::Hint {
            kind,
            target: Some(self.exercise.graph.node(target).label().to_string()),
        });
        Ok(Hint {
            kind,
            message,
            target: Some(target),
        })
    }

    pub fn snapshot(&self) -> SessionSnapshot {
        let graph = &self.exercise.graph;
        let mut checked: Vec<String> = self
            .checked
            .iter()
            .map(|&n| graph.node(n).label().to_string())
            .collect();
        checked.sort();
        let best = self.best_proof();
        SessionSnapshot {
            problem: self.exercise.problem.id.clone(),
            checked,
            rejected: self.rejected.iter().map(|f| f.key().to_string()).collect(),
            best_proof: best.map(|b| b.index),
            completion: best.map_or(0.0, |b| b.completion()),
            unlocked: self.redaction_view().unlocked,
            hint_state: self.hint.clone(),
        }
    }

    /// The log as a replayable script, each event followed by an assertion
    /// of its observed outcome.
    pub fn export_script(&self) -> String {
        let mut out = format!("# session on problem {}\n", self.exercise.problem.id);
        for event in &self.log {
            match event {
                Event::Submit { statement, outcome } => {
                    out.push_str(&format!("SUBMIT {statement}\nEXPECT result {outcome}\n"));
                }
                Event::Hint { kind, target } => {
                    out.push_str(&format!("HINT\nEXPECT hint {kind}\n"));
                    if let Some(t) = target {
                        out.push_str(&format!("EXPECT target {t}\n"));
                    }
                }
                Event::NothingMissing => out.push_str("HINT\nEXPECT hint nothingMissing\n"),
            }
        }
        if let Some(best) = self.best_proof() {
            out.push_str(&format!(
                "EXPECT completion = {}/{}\nEXPECT best-proof {}\n",
                best.checked, best.total, best.index
            ));
        }
        out
    }
}
