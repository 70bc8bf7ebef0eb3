//! Textual formats for rule packs (`.qr`) and problem files (`.qp`), and the
//! isle/level filter a teacher uses to select which rules are in play.
//!
//! Rule pack:
//!
//! ```text
//! pred perp/2 kinds(line,line) sym(swap 1 2)
//! rule perp_right_angle {
//!   level: 1  isle: quadrilaterals  tier: default
//!   if: perp(?L1,?L2), lineThrough(?L1,?P,?Q), lineThrough(?L2,?Q,?R)
//!   then: rightAngle(?P,?Q,?R)
//!   hint: "What do two perpendicular lines form at {?Q}?"
//! }
//! ```
//!
//! Problem file:
//!
//! ```text
//! problem bisector {
//!   objects: point A point B line lXY
//!   student: A B
//!   hypotheses: equidistant(X,A,B) equidistant(Y,A,B)
//!   superfigure: onLine(X,lXY)
//!   conclusion: perpBisector(lXY,sAB)
//! }
//! ```

mod isle;
mod lexer;
mod problem;
mod rules;

use thiserror::Error;

use crate::model::ModelError;

pub use isle::{filter_rules, FilterOutcome, IsleConfig, IsleSet};
pub use problem::{parse_problem, parse_statement, Problem};
pub use rules::{parse_rules, Pattern, Rule, RuleBase, Term, Tier};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DslError {
    #[error("{line}:{col}: syntax error: {message}")]
    Syntax {
        line: usize,
        col: usize,
        message: String,
    },
    #[error("{line}:{col}: undeclared predicate `{name}`")]
    UndeclaredPredicate { name: String, line: usize, col: usize },
    #[error("{line}:{col}: undeclared object `{name}`")]
    UndeclaredObject { name: String, line: usize, col: usize },
    #[error("{line}:{col}: {source}")]
    Model {
        line: usize,
        col: usize,
        #[source]
        source: ModelError,
    },
    #[error("rule `{rule}`: conclusion variable `?{variable}` does not occur in any premise")]
    RangeRestrictionViolation { rule: String, variable: String },
    #[error("rule `{rule}`: variable `?{variable}` is used with different object kinds")]
    VariableKindConflict { rule: String, variable: String },
    #[error("rule `{rule}`: hint refers to unknown variable `?{variable}`")]
    UnknownHintVariable { rule: String, variable: String },
    #[error("duplicate rule id `{0}`")]
    DuplicateRuleId(String),
    #[error("predicate `{0}` is declared twice with different signatures")]
    ConflictingPredicate(String),
    #[error("object `{0}` is declared twice")]
    DuplicateObject(String),
    #[error("problem has no `conclusion:` section")]
    MissingConclusion,
    #[error("conclusion `{0}` is also listed as a hypothesis")]
    ConclusionIsHypothesis(String),
}
