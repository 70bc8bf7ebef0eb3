use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::lexer::Cursor;
use super::DslError;
use crate::model::{Generator, ModelError, ObjectKind, PredicateDecl, PredicateRef};

/// Granularity of a rule within its isle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tier {
    /// One-step shortcut standing for a chain of `fine` rules.
    Coarse,
    Fine,
    Default,
}

impl Tier {
    pub const ALL: [Tier; 3] = [Tier::Coarse, Tier::Fine, Tier::Default];

    pub fn as_str(self) -> &'static str {
        match self {
            Tier::Coarse => "coarse",
            Tier::Fine => "fine",
            Tier::Default => "default",
        }
    }
}

impl fmt::Display for Tier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Tier {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Tier::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| format!("unknown tier `{s}` (expected coarse, fine or default)"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Var(Arc<str>),
    Const(Arc<str>),
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => write!(f, "?{v}"),
            Term::Const(c) => f.write_str(c),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pattern {
    pub predicate: PredicateRef,
    pub args: Vec<Term>,
}

impl Pattern {
    pub fn variables(&self) -> impl Iterator<Item = &Arc<str>> {
        self.args.iter().filter_map(|t| match t {
            Term::Var(v) => Some(v),
            Term::Const(_) => None,
        })
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.predicate.name())?;
        for (i, a) in self.args.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{a}")?;
        }
        f.write_str(")")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rule {
    pub id: String,
    pub premises: Vec<Pattern>,
    pub conclusion: Pattern,
    pub level: u32,
    pub isle: String,
    pub tier: Tier,
    pub hint: Option<String>,
}

impl Rule {
    /// Kinds of every variable, in name order.
    pub fn variable_kinds(&self) -> BTreeMap<Arc<str>, ObjectKind> {
        let mut out = BTreeMap::new();
        for p in self.premises.iter().chain(std::iter::once(&self.conclusion)) {
            for (term, kind) in p.args.iter().zip(p.predicate.arg_kinds()) {
                if let Term::Var(v) = term {
                    out.entry(v.clone()).or_insert(*kind);
                }
            }
        }
        out
    }

    fn validate(&self) -> Result<(), DslError> {
        let mut kinds: HashMap<&str, ObjectKind> = HashMap::new();
        for p in self.premises.iter().chain(std::iter::once(&self.conclusion)) {
            for (term, kind) in p.args.iter().zip(p.predicate.arg_kinds()) {
                if let Term::Var(v) = term {
                    if let Some(prev) = kinds.insert(v, *kind) {
                        if prev != *kind {
                            return Err(DslError::VariableKindConflict {
                                rule: self.id.clone(),
                                variable: v.to_string(),
                            });
                        }
                    }
                }
            }
        }
        let bound: BTreeSet<&str> = self
            .premises
            .iter()
            .flat_map(|p| p.variables())
            .map(|v| &**v)
            .collect();
        if let Some(v) = self.conclusion.variables().find(|v| !bound.contains(&***v)) {
            return Err(DslError::RangeRestrictionViolation {
                rule: self.id.clone(),
                variable: v.to_string(),
            });
        }
        if let Some(hint) = &self.hint {
            for var in hint_placeholders(hint) {
                if !kinds.contains_key(var) {
                    return Err(DslError::UnknownHintVariable {
                        rule: self.id.clone(),
                        variable: var.to_string(),
                    });
                }
            }
        }
        Ok(())
    }
}

/// Variable names referenced as `{?Name}` inside a hint template.
pub(crate) fn hint_placeholders(template: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut rest = template;
    while let Some(start) = rest.find("{?") {
        let after = &rest[start + 2..];
        match after.find('}') {
            Some(end) => {
                out.push(&after[..end]);
                rest = &after[end + 1..];
            }
            None => break,
        }
    }
    out
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "rule {} {{", self.id)?;
        writeln!(f, "  level: {}", self.level)?;
        writeln!(f, "  isle: {}", self.isle)?;
        writeln!(f, "  tier: {}", self.tier)?;
        f.write_str("  if: ")?;
        for (i, p) in self.premises.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{p}")?;
        }
        writeln!(f)?;
        writeln!(f, "  then: {}", self.conclusion)?;
        if let Some(h) = &self.hint {
            writeln!(f, "  hint: {}", escape(h))?;
        }
        f.write_str("}")
    }
}

/// Predicate declarations plus the rules over them.
#[derive(Debug, Clone, Default)]
pub struct RuleBase {
    predicates: Vec<PredicateRef>,
    index: HashMap<String, usize>,
    rules: Vec<Rule>,
}

impl PartialEq for RuleBase {
    fn eq(&self, other: &Self) -> bool {
        self.predicates == other.predicates && self.rules == other.rules
    }
}

impl Eq for RuleBase {}

impl RuleBase {
    pub fn new(predicates: Vec<PredicateRef>, rules: Vec<Rule>) -> Result<Self, DslError> {
        let mut base = RuleBase::default();
        for p in predicates {
            base.add_predicate(p)?;
        }
        for r in rules {
            base.add_rule(r)?;
        }
        Ok(base)
    }

    fn add_predicate(&mut self, decl: PredicateRef) -> Result<(), DslError> {
        if let Some(&i) = self.index.get(decl.name()) {
            if self.predicates[i].same_declaration(&decl) {
                return Ok(());
            }
            return Err(DslError::ConflictingPredicate(decl.name().to_string()));
        }
        self.index.insert(decl.name().to_string(), self.predicates.len());
        self.predicates.push(decl);
        Ok(())
    }

    fn add_rule(&mut self, rule: Rule) -> Result<(), DslError> {
        if self.rules.iter().any(|r| r.id == rule.id) {
            return Err(DslError::DuplicateRuleId(rule.id));
        }
        for p in rule.premises.iter().chain(std::iter::once(&rule.conclusion)) {
            match self.predicate(p.predicate.name()) {
                Some(d) if Arc::ptr_eq(d, &p.predicate) || d.same_declaration(&p.predicate) => {}
                Some(_) => {
                    return Err(DslError::ConflictingPredicate(p.predicate.name().to_string()))
                }
                None => {
                    return Err(DslError::UndeclaredPredicate {
                        name: p.predicate.name().to_string(),
                        line: 0,
                        col: 0,
                    })
                }
            }
        }
        rule.validate()?;
        self.rules.push(rule);
        Ok(())
    }

    pub fn predicates(&self) -> &[PredicateRef] {
        &self.predicates
    }

    pub fn predicate(&self, name: &str) -> Option<&PredicateRef> {
        self.index.get(name).map(|&i| &self.predicates[i])
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn rule(&self, id: &str) -> Option<&Rule> {
        self.rules.iter().find(|r| r.id == id)
    }

    /// Same declarations, only the given rules (kept in base order).
    pub fn with_rules<F: Fn(&Rule) -> bool>(&self, keep: F) -> RuleBase {
        RuleBase {
            predicates: self.predicates.clone(),
            index: self.index.clone(),
            rules: self.rules.iter().filter(|r| keep(r)).cloned().collect(),
        }
    }

    /// Union of two packs. Identical predicate declarations are shared;
    /// conflicting ones and repeated rule ids are errors.
    pub fn merge(&self, other: &RuleBase) -> Result<RuleBase, DslError> {
        let mut out = self.clone();
        for p in &other.predicates {
            out.add_predicate(p.clone())?;
        }
        for r in &other.rules {
            let mut r = r.clone();
            for p in r.premises.iter_mut().chain(std::iter::once(&mut r.conclusion)) {
                p.predicate = out.predicate(p.predicate.name()).expect("just added").clone();
            }
            out.add_rule(r)?;
        }
        Ok(out)
    }
}

impl fmt::Display for RuleBase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for p in &self.predicates {
            writeln!(f, "{p}")?;
        }
        for r in &self.rules {
            writeln!(f)?;
            writeln!(f, "{r}")?;
        }
        Ok(())
    }
}

struct RawPattern {
    name: String,
    line: usize,
    col: usize,
    args: Vec<Term>,
}

struct RawRule {
    id: String,
    level: u32,
    isle: String,
    tier: Tier,
    premises: Vec<RawPattern>,
    conclusion: RawPattern,
    hint: Option<String>,
}

/// Parses and validates a rule pack. Predicates may be declared before or
/// after the rules that use them.
pub fn parse_rules(text: &str) -> Result<RuleBase, DslError> {
    let mut cur = Cursor::new(text)?;
    let mut base = RuleBase::default();
    let mut raw_rules = Vec::new();
    while !cur.at_end() {
        if cur.is_name("pred") {
            let (line, col) = cur.position();
            let decl = parse_pred(&mut cur, line, col)?;
            base.add_predicate(Arc::new(decl))?;
        } else if cur.is_name("rule") {
            raw_rules.push(parse_rule(&mut cur)?);
        } else {
            return Err(cur.error("expected `pred` or `rule`"));
        }
    }
    for raw in raw_rules {
        let premises = raw
            .premises
            .into_iter()
            .map(|p| resolve(&base, p))
            .collect::<Result<Vec<_>, _>>()?;
        let conclusion = resolve(&base, raw.conclusion)?;
        base.add_rule(Rule {
            id: raw.id,
            premises,
            conclusion,
            level: raw.level,
            isle: raw.isle,
            tier: raw.tier,
            hint: raw.hint,
        })?;
    }
    Ok(base)
}

fn resolve(base: &RuleBase, raw: RawPattern) -> Result<Pattern, DslError> {
    let decl = base
        .predicate(&raw.name)
        .ok_or_else(|| DslError::UndeclaredPredicate {
            name: raw.name.clone(),
            line: raw.line,
            col: raw.col,
        })?;
    if decl.arity() != raw.args.len() {
        return Err(DslError::Model {
            line: raw.line,
            col: raw.col,
            source: ModelError::ArityMismatch {
                predicate: raw.name,
                expected: decl.arity(),
                found: raw.args.len(),
            },
        });
    }
    Ok(Pattern {
        predicate: decl.clone(),
        args: raw.args,
    })
}

fn parse_pred(cur: &mut Cursor, line: usize, col: usize) -> Result<PredicateDecl, DslError> {
    cur.expect_keyword("pred")?;
    let (name, _, _) = cur.expect_name()?;
    cur.expect_sym('/')?;
    let arity = cur.expect_int()? as usize;
    cur.expect_keyword("kinds")?;
    cur.expect_sym('(')?;
    let mut kinds = Vec::new();
    loop {
        let (kind, kl, kc) = cur.expect_name()?;
        let kind = kind.parse::<ObjectKind>().map_err(|e| DslError::Model {
            line: kl,
            col: kc,
            source: e,
        })?;
        kinds.push(kind);
        if cur.is_sym(',') {
            cur.next();
        } else {
            break;
        }
    }
    cur.expect_sym(')')?;
    if kinds.len() != arity {
        return Err(DslError::Syntax {
            line,
            col,
            message: format!(
                "predicate `{name}` declares arity {arity} but lists {} kind(s)",
                kinds.len()
            ),
        });
    }
    let mut generators = Vec::new();
    if cur.is_name("sym") {
        cur.next();
        cur.expect_sym('(')?;
        loop {
            generators.push(parse_generator(cur)?);
            if cur.is_sym(';') {
                cur.next();
            } else {
                break;
            }
        }
        cur.expect_sym(')')?;
    }
    PredicateDecl::new(&name, kinds, generators).map_err(|e| DslError::Model {
        line,
        col,
        source: e,
    })
}

fn parse_generator(cur: &mut Cursor) -> Result<Generator, DslError> {
    let (kw, _, _) = cur.expect_name()?;
    match kw.as_str() {
        "swap" => {
            let a = cur.expect_int()? as usize;
            let b = cur.expect_int()? as usize;
            Ok(Generator::Swap(a, b))
        }
        "cycle" => {
            let mut points = vec![cur.expect_int()? as usize];
            while cur.is_int() {
                points.push(cur.expect_int()? as usize);
            }
            Ok(Generator::Cycle(points))
        }
        "full" => Ok(Generator::Full),
        other => Err(cur.error(format!(
            "unknown symmetry generator `{other}` (expected swap, cycle or full)"
        ))),
    }
}

fn parse_rule(cur: &mut Cursor) -> Result<RawRule, DslError> {
    cur.expect_keyword("rule")?;
    let (id, _, _) = cur.expect_name()?;
    cur.expect_sym('{')?;
    cur.expect_section("level")?;
    let level = cur.expect_int()?;
    let level = u32::try_from(level)
        .ok()
        .filter(|l| *l >= 1)
        .ok_or_else(|| cur.error(format!("rule `{id}`: level must be an integer >= 1")))?;
    cur.expect_section("isle")?;
    let (isle, _, _) = cur.expect_name()?;
    cur.expect_section("tier")?;
    let (tier_name, tl, tc) = cur.expect_name()?;
    let tier = tier_name.parse::<Tier>().map_err(|message| DslError::Syntax {
        line: tl,
        col: tc,
        message,
    })?;
    cur.expect_section("if")?;
    let mut premises = vec![parse_pattern(cur)?];
    while cur.is_sym(',') {
        cur.next();
        premises.push(parse_pattern(cur)?);
    }
    cur.expect_section("then")?;
    let conclusion = parse_pattern(cur)?;
    let hint = if cur.is_section("hint") {
        cur.next();
        cur.next();
        Some(cur.expect_str()?)
    } else {
        None
    };
    cur.expect_sym('}')?;
    Ok(RawRule {
        id,
        level,
        isle,
        tier,
        premises,
        conclusion,
        hint,
    })
}

fn parse_pattern(cur: &mut Cursor) -> Result<RawPattern, DslError> {
    let (name, line, col) = cur.expect_name()?;
    cur.expect_sym('(')?;
    let mut args = Vec::new();
    loop {
        if cur.is_sym('?') {
            cur.next();
            let (v, _, _) = cur.expect_name()?;
            args.push(Term::Var(Arc::from(v)));
        } else {
            let (c, _, _) = cur.expect_name()?;
            args.push(Term::Const(Arc::from(c)));
        }
        if cur.is_sym(',') {
            cur.next();
        } else {
            break;
        }
    }
    cur.expect_sym(')')?;
    Ok(RawPattern {
        name,
        line,
        col,
        args,
    })
}
