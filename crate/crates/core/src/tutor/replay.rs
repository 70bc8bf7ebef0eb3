//! Line-oriented session scripts.
//!
//! ```text
//! # comments and blank lines are ignored
//! SUBMIT onBisector(X,sAB)
//! EXPECT result matched
//! EXPECT completion = 0.25
//! HINT
//! EXPECT hint nudge
//! EXPECT target lineThrough(lXY,X,Y)
//! ```
//!
//! Assertions: `result matched|notOnGraph|malformed`,
//! `hint nudge|redirect|teacherReferral|nothingMissing`, `target <fact>|none`,
//! `completion [=|>=|<=|>|<] <decimal or a/b>`, `unlocked true|false`,
//! `blanks <n>`, `best-proof <n>`, `checked <fact>`, `rejected <n>`.

use std::fmt::Write as _;

use thiserror::Error;

use super::{HintKind, Session, SubmitOutcome, TutorError};
use crate::dsl::parse_statement;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReplayError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Comparison {
    Eq,
    Ge,
    Le,
    Gt,
    Lt,
}

impl Comparison {
    fn holds(self, actual: f64, expected: f64) -> bool {
        const EPS: f64 = 1e-9;
        match self {
            Comparison::Eq => (actual - expected).abs() < EPS,
            Comparison::Ge => actual >= expected - EPS,
            Comparison::Le => actual <= expected + EPS,
            Comparison::Gt => actual > expected + EPS,
            Comparison::Lt => actual < expected - EPS,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expectation {
    Result(SubmitOutcome),
    /// `None` stands for "nothing missing".
    Hint(Option<HintKind>),
    Target(Option<String>),
    Completion(Comparison, f64),
    Unlocked(bool),
    Blanks(usize),
    BestProof(usize),
    Checked(String),
    Rejected(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Step {
    Submit(String),
    Hint,
    Expect(Expectation),
}

/// Parses a script into `(line number, source line, step)` triples.
pub fn parse_script(text: &str) -> Result<Vec<(usize, String, Step)>, ReplayError> {
    let mut steps = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let src = raw.trim();
        if src.is_empty() || src.starts_with('#') {
            continue;
        }
        let err = |message: String| ReplayError::Parse { line, message };
        let (verb, rest) = src.split_once(char::is_whitespace).unwrap_or((src, ""));
        let rest = rest.trim();
        let step = match verb {
            "SUBMIT" if !rest.is_empty() => Step::Submit(rest.to_string()),
            "SUBMIT" => return Err(err("SUBMIT needs a statement".into())),
            "HINT" if rest.is_empty() => Step::Hint,
            "HINT" => return Err(err("HINT takes no argument".into())),
            "EXPECT" => Step::Expect(parse_expectation(rest).map_err(err)?),
            other => return Err(err(format!("unknown command `{other}`"))),
        };
        steps.push((line, src.to_string(), step));
    }
    Ok(steps)
}

fn parse_number(s: &str) -> Result<f64, String> {
    let bad = || format!("`{s}` is not a number");
    match s.split_once('/') {
        Some((a, b)) => {
            let a: f64 = a.trim().parse().map_err(|_| bad())?;
            let b: f64 = b.trim().parse().map_err(|_| bad())?;
            if b == 0.0 {
                return Err(bad());
            }
            Ok(a / b)
        }
        None => s.parse().map_err(|_| bad()),
    }
}

fn parse_expectation(text: &str) -> Result<Expectation, String> {
    let (what, arg) = text.split_once(char::is_whitespace).unwrap_or((text, ""));
    let arg = arg.trim();
    let count = |s: &str| s.parse::<usize>().map_err(|_| format!("`{s}` is not a count"));
    Ok(match what {
        "result" => Expectation::Result(match arg {
            "matched" => SubmitOutcome::Matched,
            "notOnGraph" => SubmitOutcome::NotOnGraph,
            "malformed" => SubmitOutcome::Malformed,
            other => return Err(format!("unknown submission result `{other}`")),
        }),
        "hint" => Expectation::Hint(match arg {
            "nudge" => Some(HintKind::Nudge),
            "redirect" => Some(HintKind::Redirect),
            "teacherReferral" => Some(HintKind::TeacherReferral),
            "nothingMissing" => None,
            other => return Err(format!("unknown hint kind `{other}`")),
        }),
        "target" if arg == "none" => Expectation::Target(None),
        "target" if !arg.is_empty() => Expectation::Target(Some(arg.to_string())),
        "completion" => {
            let (op, num) = [
                (">=", Comparison::Ge),
                ("<=", Comparison::Le),
                (">", Comparison::Gt),
                ("<", Comparison::Lt),
                ("=", Comparison::Eq),
            ]
            .into_iter()
            .find_map(|(sym, op)| arg.strip_prefix(sym).map(|rest| (op, rest)))
            .unwrap_or((Comparison::Eq, arg));
            Expectation::Completion(op, parse_number(num.trim())?)
        }
        "unlocked" => Expectation::Unlocked(match arg {
            "true" => true,
            "false" => false,
            other => return Err(format!("expected true or false, found `{other}`")),
        }),
        "blanks" => Expectation::Blanks(count(arg)?),
        "best-proof" => Expectation::BestProof(count(arg)?),
        "rejected" => Expectation::Rejected(count(arg)?),
        "checked" if !arg.is_empty() => Expectation::Checked(arg.to_string()),
        other => return Err(format!("unknown assertion `{other}`")),
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReplayReport {
    pub transcript: String,
    pub passed: usize,
    pub failed: usize,
}

impl ReplayReport {
    pub fn success(&self) -> bool {
        self.failed == 0
    }
}

/// Runs a parsed script against `session`, producing a deterministic
/// transcript.
pub fn replay(session: &mut Session, steps: &[(usize, String, Step)]) -> ReplayReport {
    let mut transcript = String::new();
    let mut last_result: Option<SubmitOutcome> = None;
    // Some(kind) for a hint, None for "nothing missing".
    let mut last_hint: Option<Option<HintKind>> = None;
    let mut last_target: Option<String> = None;
    let (mut passed, mut failed) = (0, 0);
    for (line, src, step) in steps {
        let outcome = match step {
            Step::Submit(text) => match session.submit_text(text) {
                Ok(r) => {
                    last_result = Some(r.outcome());
                    r.outcome().to_string()
                }
                Err(e) => {
                    last_result = Some(SubmitOutcome::Malformed);
                    format!("malformed ({e})")
                }
            },
            Step::Hint => match session.next_hint() {
                Ok(h) => {
                    last_hint = Some(Some(h.kind));
                    last_target = h
                        .target
                        .map(|t| session.exercise().graph.node(t).label().to_string());
                    match &last_target {
                        Some(t) => format!("{} on {t}: {}", h.kind, h.message),
                        None => format!("{}: {}", h.kind, h.message),
                    }
                }
                Err(TutorError::NothingMissing) => {
                    last_hint = Some(None);
                    last_target = None;
                    "nothingMissing".to_string()
                }
                Err(e) => {
                    last_hint = None;
                    last_target = None;
                    format!("error ({e})")
                }
            },
            Step::Expect(exp) => match check(session, exp, last_result, last_hint, &last_target) {
                Ok(()) => {
                    passed += 1;
                    "ok".to_string()
                }
                Err(actual) => {
                    failed += 1;
                    format!("FAILED (got {actual})")
                }
            },
        };
        let _ = writeln!(transcript, "{line:>4}  {src}  => {outcome}");
    }
    let _ = writeln!(
        transcript,
        "{passed}/{} expectations passed",
        passed + failed
    );
    ReplayReport {
        transcript,
        passed,
        failed,
    }
}

fn canonical(session: &Session, text: &str) -> String {
    let ex = session.exercise();
    parse_statement(text, &ex.problem, &ex.rules)
        .map(|f| f.key().to_string())
        .unwrap_or_else(|_| text.to_string())
}

fn check(
    session: &Session,
    exp: &Expectation,
    last_result: Option<SubmitOutcome>,
    last_hint: Option<Option<HintKind>>,
    last_target: &Option<String>,
) -> Result<(), String> {
    fn verdict(ok: bool, actual: impl FnOnce() -> String) -> Result<(), String> {
        if ok {
            Ok(())
        } else {
            Err(actual())
        }
    }
    match exp {
        Expectation::Result(r) => verdict(last_result == Some(*r), || {
            last_result.map_or("no submission".to_string(), |r| r.to_string())
        }),
        Expectation::Hint(k) => verdict(last_hint == Some(*k), || match last_hint {
            None => "no hint".to_string(),
            Some(None) => "nothingMissing".to_string(),
            Some(Some(k)) => k.to_string(),
        }),
        Expectation::Target(t) => {
            let expected = t.as_deref().map(|t| canonical(session, t));
            verdict(&expected == last_target, || {
                last_target.clone().unwrap_or_else(|| "none".to_string())
            })
        }
        Expectation::Completion(op, v) => {
            let c = session.completion();
            verdict(op.holds(c, *v), || format!("{c}"))
        }
        Expectation::Unlocked(u) => {
            let actual = session.redaction_view().unlocked;
            verdict(actual == *u, || actual.to_string())
        }
        Expectation::Blanks(n) => {
            let actual = session.redaction_view().blanks();
            verdict(actual == *n, || actual.to_string())
        }
        Expectation::BestProof(n) => {
            let actual = session.best_proof().map(|b| b.index);
            verdict(actual == Some(*n), || {
                actual.map_or("no proof".to_string(), |i| i.to_string())
            })
        }
        Expectation::Checked(text) => {
            let key = canonical(session, text);
            let node = session.exercise().graph.node_of_key(&key);
            verdict(node.is_some_and(|n| session.is_checked(n)), || {
                format!("{key} unchecked")
            })
        }
        Expectation::Rejected(n) => {
            let actual = session.rejected().len();
            verdict(actual == *n, || actual.to_string())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::Tier;
    use crate::tutor::tests::exercise;
    use crate::tutor::TutorPolicy;

    const SCRIPT: &str = "
# fine-grained walk-through
SUBMIT onBisector(X,sAB)
EXPECT result matched
EXPECT completion = 1/4
EXPECT unlocked false
SUBMIT onBisector(Y,sAB)
EXPECT completion >= 0.5
EXPECT unlocked true
EXPECT blanks 2
HINT
EXPECT hint nudge
EXPECT target lineThrough(lXY,Y,X)
SUBMIT distinct(A,B)
EXPECT result notOnGraph
EXPECT rejected 1
SUBMIT nowhere(A)
EXPECT result malformed
EXPECT checked onBisector(X,sAB)
";

    #[test]
    fn script_passes() {
        let steps = parse_script(SCRIPT).unwrap();
        let mut s = Session::new(exercise(&[Tier::Fine]), TutorPolicy::default());
        let report = replay(&mut s, &steps);
        assert!(report.success(), "{}", report.transcript);
        assert_eq!(report.passed, 12);
        let mut again = Session::new(exercise(&[Tier::Fine]), TutorPolicy::default());
        assert_eq!(replay(&mut again, &steps).transcript, report.transcript);
    }

    #[test]
    fn failures_are_reported() {
        let steps = parse_script("EXPECT completion > 0\nEXPECT blanks 0\n").unwrap();
        let mut s = Session::new(exercise(&[Tier::Fine]), TutorPolicy::default());
        let report = replay(&mut s, &steps);
        assert_eq!((report.passed, report.failed), (0, 2));
        assert!(report.transcript.contains("FAILED (got 0)"));
        assert!(report.transcript.contains("FAILED (got 4)"));
    }

    #[test]
    fn syntax_errors_carry_line_numbers() {
        assert_eq!(
            parse_script("HINT\nFLY away"),
            Err(ReplayError::Parse {
                line: 2,
                message: "unknown command `FLY`".into()
            })
        );
        assert!(parse_script("EXPECT completion = x").is_err());
        assert!(parse_script("EXPECT hint loud").is_err());
        assert!(parse_script("SUBMIT").is_err());
    }

    #[test]
    fn exported_script_replays_to_the_same_state() {
        let mut s = Session::new(exercise(&Tier::ALL), TutorPolicy::default());
        s.submit_text("onBisector(X,sAB)").unwrap();
        let _ = s.submit_text("bogus(");
        s.submit_text("distinct(A,B)").unwrap();
        for _ in 0..4 {
            s.next_hint().unwrap();
        }
        let script = s.export_script();
        let steps = parse_script(&script).unwrap();
        let mut again = Session::new(exercise(&Tier::ALL), TutorPolicy::default());
        let report = replay(&mut again, &steps);
        assert!(report.success(), "{}", report.transcript);
        assert_eq!(again.snapshot(), s.snapshot());
    }
}
