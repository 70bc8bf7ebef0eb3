use std::collections::BTreeMap;
use std::fmt;

use super::lexer::Cursor;
use super::rules::RuleBase;
use super::DslError;
use crate::model::{canonicalize, Fact, ObjectId, ObjectKind};

/// A problem statement: declared objects, the figure shown to the student,
/// explicit hypotheses, the super-figure incidence facts and the conclusion.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Problem {
    pub id: String,
    pub objects: Vec<ObjectId>,
    pub student_figure: Vec<ObjectId>,
    pub hypotheses: Vec<Fact>,
    pub super_figure: Vec<Fact>,
    pub conclusion: Fact,
}

impl Problem {
    pub fn object(&self, name: &str) -> Option<&ObjectId> {
        self.objects.iter().find(|o| o.name() == name)
    }

    /// Hypotheses followed by super-figure facts: everything the engine starts from.
    pub fn given(&self) -> impl Iterator<Item = &Fact> {
        self.hypotheses.iter().chain(&self.super_figure)
    }

    /// Short human-readable statement assembled from the formal encoding.
    pub fn statement(&self) -> String {
        let hyps: Vec<&str> = self.hypotheses.iter().map(|f| f.key()).collect();
        format!("Given {}, prove {}.", hyps.join(", "), self.conclusion)
    }
}

impl fmt::Display for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "problem {} {{", self.id)?;
        f.write_str("  objects:")?;
        for o in &self.objects {
            write!(f, " {} {}", o.kind(), o.name())?;
        }
        writeln!(f)?;
        f.write_str("  student:")?;
        for o in &self.student_figure {
            write!(f, " {}", o.name())?;
        }
        writeln!(f)?;
        f.write_str("  hypotheses:")?;
        for h in &self.hypotheses {
            write!(f, " {h}")?;
        }
        writeln!(f)?;
        f.write_str("  superfigure:")?;
        for h in &self.super_figure {
            write!(f, " {h}")?;
        }
        writeln!(f)?;
        writeln!(f, "  conclusion: {}", self.conclusion)?;
        f.write_str("}")
    }
}

struct Scope<'a> {
    objects: &'a BTreeMap<String, ObjectId>,
    base: &'a RuleBase,
}

impl Scope<'_> {
    fn fact(&self, cur: &mut Cursor) -> Result<Fact, DslError> {
        let (name, line, col) = cur.expect_name()?;
        let decl = self
            .base
            .predicate(&name)
            .ok_or(DslError::UndeclaredPredicate {
                name: name.clone(),
                line,
                col,
            })?;
        cur.expect_sym('(')?;
        let mut args = Vec::new();
        loop {
            let (arg, al, ac) = cur.expect_name()?;
            let obj = self
                .objects
                .get(&arg)
                .ok_or(DslError::UndeclaredObject {
                    name: arg,
                    line: al,
                    col: ac,
                })?;
            args.push(obj.clone());
            if cur.is_sym(',') {
                cur.next();
            } else {
                break;
            }
        }
        cur.expect_sym(')')?;
        canonicalize(decl, &args).map_err(|source| DslError::Model { line, col, source })
    }
}

/// Parses a problem file against the predicate declarations of `base`.
/// Every fact is canonicalized; nothing implicit is added.
pub fn parse_problem(text: &str, base: &RuleBase) -> Result<Problem, DslError> {
    let mut cur = Cursor::new(text)?;
    cur.expect_keyword("problem")?;
    let (id, _, _) = cur.expect_name()?;
    cur.expect_sym('{')?;

    cur.expect_section("objects")?;
    let mut objects = Vec::new();
    let mut by_name = BTreeMap::new();
    while !cur.is_any_section() && !cur.is_sym('}') && !cur.at_end() {
        let (kind, kl, kc) = cur.expect_name()?;
        let kind = kind.parse::<ObjectKind>().map_err(|source| DslError::Model {
            line: kl,
            col: kc,
            source,
        })?;
        let (name, nl, nc) = cur.expect_name()?;
        let obj = ObjectId::new(&name, kind).map_err(|source| DslError::Model {
            line: nl,
            col: nc,
            source,
        })?;
        if by_name.insert(name.clone(), obj.clone()).is_some() {
            return Err(DslError::DuplicateObject(name));
        }
        objects.push(obj);
    }
    if objects.is_empty() {
        return Err(cur.error("`objects:` needs at least one declaration"));
    }

    cur.expect_section("student")?;
    let mut student_figure = Vec::new();
    while !cur.is_any_section() && !cur.is_sym('}') && !cur.at_end() {
        let (name, line, col) = cur.expect_name()?;
        let obj = by_name
            .get(&name)
            .ok_or(DslError::UndeclaredObject { name, line, col })?;
        student_figure.push(obj.clone());
    }

    let scope = Scope {
        objects: &by_name,
        base,
    };
    cur.expect_section("hypotheses")?;
    let mut hypotheses = Vec::new();
    while !cur.is_any_section() && !cur.is_sym('}') && !cur.at_end() {
        hypotheses.push(scope.fact(&mut cur)?);
    }
    if hypotheses.is_empty() {
        return Err(cur.error("`hypotheses:` needs at least one fact"));
    }

    if cur.is_sym('}') || cur.at_end() {
        return Err(DslError::MissingConclusion);
    }
    cur.expect_section("superfigure")?;
    let mut super_figure = Vec::new();
    while !cur.is_any_section() && !cur.is_sym('}') && !cur.at_end() {
        super_figure.push(scope.fact(&mut cur)?);
    }

    if !cur.is_section("conclusion") {
        if cur.is_sym('}') || cur.at_end() {
            return Err(DslError::MissingConclusion);
        }
        return Err(cur.error("expected `conclusion:`"));
    }
    cur.next();
    cur.next();
    let conclusion = scope.fact(&mut cur)?;
    cur.expect_sym('}')?;
    if !cur.at_end() {
        return Err(cur.error("unexpected content after the problem block"));
    }
    if hypotheses.contains(&conclusion) || super_figure.contains(&conclusion) {
        return Err(DslError::ConclusionIsHypothesis(conclusion.key().to_string()));
    }
    Ok(Problem {
        id,
        objects,
        student_figure,
        hypotheses,
        super_figure,
        conclusion,
    })
}

/// Parses a single statement such as `onBisector(X,sAB)` in the scope of a
/// problem's objects.
pub fn parse_statement(text: &str, problem: &Problem, base: &RuleBase) -> Result<Fact, DslError> {
    let objects: BTreeMap<String, ObjectId> = problem
        .objects
        .iter()
        .map(|o| (o.name().to_string(), o.clone()))
        .collect();
    let mut cur = Cursor::new(text)?;
    let fact = Scope {
        objects: &objects,
        base,
    }
    .fact(&mut cur)?;
    if !cur.at_end() {
        return Err(cur.error("unexpected content after the statement"));
    }
    Ok(fact)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse_rules;
    use crate::model::ModelError;

    const PREDS: &str = "
pred distinct/2 kinds(point,point) sym(swap 1 2)
pred perp/2 kinds(line,line) sym(swap 1 2)
pred onLine/2 kinds(point,line)
";

    fn base() -> RuleBase {
        parse_rules(PREDS).unwrap()
    }

    const PROBLEM: &str = "
problem tiny {
  objects: point A point B line lAB line lBC
  student: A B
  hypotheses: distinct(B,A) perp(lBC,lAB)
  superfigure: onLine(A,lAB)
  conclusion: onLine(B,lAB)
}";

    #[test]
    fn parses_and_canonicalizes() {
        let p = parse_problem(PROBLEM, &base()).unwrap();
        assert_eq!(p.id, "tiny");
        assert_eq!(p.objects.len(), 4);
        assert_eq!(p.student_figure.len(), 2);
        let keys: Vec<_> = p.hypotheses.iter().map(|f| f.key()).collect();
        assert_eq!(keys, vec!["distinct(A,B)", "perp(lAB,lBC)"]);
        assert_eq!(p.super_figure.len(), 1);
        assert_eq!(p.conclusion.key(), "onLine(B,lAB)");
        assert_eq!(parse_problem(&p.to_string(), &base()).unwrap(), p);
    }

    #[test]
    fn missing_conclusion() {
        let text = "problem t { objects: point A point B student: hypotheses: distinct(A,B) superfigure: }";
        assert_eq!(parse_problem(text, &base()), Err(DslError::MissingConclusion));
        let text = "problem t { objects: point A point B student: hypotheses: distinct(A,B) }";
        assert_eq!(parse_problem(text, &base()), Err(DslError::MissingConclusion));
    }

    #[test]
    fn undeclared_object_and_kind_mismatch() {
        let text = "problem t { objects: point A student: hypotheses: distinct(A,Q) superfigure: conclusion: distinct(A,A) }";
        assert!(matches!(
            parse_problem(text, &base()),
            Err(DslError::UndeclaredObject { ref name, .. }) if name == "Q"
        ));
        let text = "problem t { objects: point A line l student: hypotheses: distinct(A,l) superfigure: conclusion: distinct(A,A) }";
        assert!(matches!(
            parse_problem(text, &base()),
            Err(DslError::Model {
                source: ModelError::KindMismatch { position: 2, .. },
                ..
            })
        ));
        let text = "problem t { objects: point A student: Z hypotheses: distinct(A,A) superfigure: conclusion: distinct(A,A) }";
        assert!(matches!(parse_problem(text, &base()), Err(DslError::UndeclaredObject { .. })));
    }

    #[test]
    fn conclusion_must_not_be_given() {
        let text = "problem t { objects: point A point B student: hypotheses: distinct(A,B) superfigure: conclusion: distinct(B,A) }";
        assert_eq!(
            parse_problem(text, &base()),
            Err(DslError::ConclusionIsHypothesis("distinct(A,B)".into()))
        );
    }

    #[test]
    fn duplicate_objects_rejected() {
        let text = "problem t { objects: point A line A student: hypotheses: distinct(A,A) superfigure: conclusion: distinct(A,A) }";
        assert_eq!(parse_problem(text, &base()), Err(DslError::DuplicateObject("A".into())));
    }

    #[test]
    fn statements_resolve_in_problem_scope() {
        let b = base();
        let p = parse_problem(PROBLEM, &b).unwrap();
        assert_eq!(parse_statement("perp(lBC, lAB)", &p, &b).unwrap().key(), "perp(lAB,lBC)");
        assert!(matches!(
            parse_statement("perp(lAB,lZZ)", &p, &b),
            Err(DslError::UndeclaredObject { .. })
        ));
        assert!(parse_statement("perp(lAB,lBC) extra", &p, &b).is_err());
        assert!(matches!(
            parse_statement("perp(lAB)", &p, &b),
            Err(DslError::Model { source: ModelError::ArityMismatch { .. }, .. })
        ));
    }
}
