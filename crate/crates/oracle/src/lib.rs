//! Slow, obviously-correct reference implementations used to check the
//! engine, the graph builder and the proof counter.
//!
//! Everything here works on rendered keys (`pred(a,b)`) and shares nothing
//! with the optimized code paths beyond the parsed rule and problem types:
//! canonical forms come from orbit search, rule application from exhaustive
//! substitution and proofs from enumerating every parent-choice function.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use geotutor::dsl::{Pattern, Problem, Rule, RuleBase, Term};
use geotutor::model::{Generator, ObjectId, ObjectKind, PredicateDecl};

/// One rule application: premises are sorted keys, repetitions kept.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Step {
    pub rule: String,
    pub premises: Vec<String>,
    pub derived: String,
}

impl Step {
    pub fn new(rule: &str, mut premises: Vec<String>, derived: &str) -> Self {
        premises.sort();
        Step {
            rule: rule.to_string(),
            premises,
            derived: derived.to_string(),
        }
    }
}

fn render(name: &str, args: &[String]) -> String {
    format!("{name}({})", args.join(","))
}

fn apply_generator(gen: &Generator, args: &[String]) -> Vec<Vec<String>> {
    match gen {
        Generator::Swap(a, b) => {
            let mut out = args.to_vec();
            out.swap(a - 1, b - 1);
            vec![out]
        }
        Generator::Cycle(points) => {
            let mut out = args.to_vec();
            for (i, &p) in points.iter().enumerate() {
                let next = points[(i + 1) % points.len()];
                out[next - 1] = args[p - 1].clone();
            }
            vec![out]
        }
        Generator::Full => {
            // Adjacent transpositions generate the full symmetric group.
            (1..args.len())
                .map(|i| {
                    let mut out = args.to_vec();
                    out.swap(i - 1, i);
                    out
                })
                .collect()
        }
    }
}

/// All argument tuples reachable from `args` under the declared generators.
pub fn orbit(decl: &PredicateDecl, args: &[String]) -> BTreeSet<Vec<String>> {
    let mut seen = BTreeSet::new();
    let mut queue = VecDeque::from([args.to_vec()]);
    while let Some(t) = queue.pop_front() {
        if !seen.insert(t.clone()) {
            continue;
        }
        for g in decl.generators() {
            for next in apply_generator(g, &t) {
                if !seen.contains(&next) {
                    queue.push_back(next);
                }
            }
        }
    }
    seen
}

/// Smallest rendering over the orbit.
pub fn canonical_key(decl: &PredicateDecl, args: &[String]) -> String {
    orbit(decl, args)
        .into_iter()
        .map(|t| render(decl.name(), &t))
        .min()
        .expect("orbit contains the tuple itself")
}

fn instantiate(pattern: &Pattern, env: &BTreeMap<String, String>) -> Option<String> {
    let args = pattern
        .args
        .iter()
        .map(|t| match t {
            Term::Var(v) => env.get(&**v).cloned(),
            Term::Const(c) => Some(c.to_string()),
        })
        .collect::<Option<Vec<_>>>()?;
    Some(canonical_key(&pattern.predicate, &args))
}

fn rule_variables(rule: &Rule) -> Vec<(String, ObjectKind)> {
    let mut out: Vec<(String, ObjectKind)> = Vec::new();
    for p in &rule.premises {
        for (t, k) in p.args.iter().zip(p.predicate.arg_kinds()) {
            if let Term::Var(v) = t {
                if !out.iter().any(|(n, _)| **n == **v) {
                    out.push((v.to_string(), *k));
                }
            }
        }
    }
    out
}

/// Every substitution of the rule's variables by objects of the right kind
/// whose premises all hold in `facts`.
fn applications(rule: &Rule, objects: &[ObjectId], facts: &BTreeSet<String>) -> BTreeSet<Step> {
    let vars = rule_variables(rule);
    let mut out = BTreeSet::new();
    let mut env = BTreeMap::new();
    assign(rule, &vars, 0, objects, facts, &mut env, &mut out);
    out
}

fn assign(
    rule: &Rule,
    vars: &[(String, ObjectKind)],
    depth: usize,
    objects: &[ObjectId],
    facts: &BTreeSet<String>,
    env: &mut BTreeMap<String, String>,
    out: &mut BTreeSet<Step>,
) {
    // Reject early once a premise is fully bound and fails.
    for p in &rule.premises {
        if let Some(key) = instantiate(p, env) {
            if !facts.contains(&key) {
                return;
            }
        }
    }
    if depth == vars.len() {
        let premises: Vec<String> = rule
            .premises
            .iter()
            .map(|p| instantiate(p, env).expect("all bound"))
            .collect();
        let derived = instantiate(&rule.conclusion, env).expect("range restricted");
        if !premises.contains(&derived) {
            out.insert(Step::new(&rule.id, premises, &derived));
        }
        return;
    }
    let (name, kind) = &vars[depth];
    for o in objects.iter().filter(|o| o.kind() == *kind) {
        env.insert(name.clone(), o.name().to_string());
        assign(rule, vars, depth + 1, objects, facts, env, out);
    }
    env.remove(name);
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Saturation {
    pub given: BTreeSet<String>,
    pub facts: BTreeSet<String>,
    pub steps: BTreeSet<Step>,
}

/// Naive fixpoint by exhaustive substitution over `objects`.
pub fn saturate(objects: &[ObjectId], given: &BTreeSet<String>, base: &RuleBase) -> Saturation {
    let mut facts = given.clone();
    loop {
        let mut new = BTreeSet::new();
        for rule in base.rules() {
            for s in applications(rule, objects, &facts) {
                if !facts.contains(&s.derived) {
                    new.insert(s.derived);
                }
            }
        }
        if new.is_empty() {
            break;
        }
        facts.extend(new);
    }
    let steps = base
        .rules()
        .iter()
        .flat_map(|r| applications(r, objects, &facts))
        .collect();
    Saturation {
        given: given.clone(),
        facts,
        steps,
    }
}

pub fn saturate_problem(problem: &Problem, base: &RuleBase) -> Saturation {
    let given = problem.given().map(|f| f.key().to_string()).collect();
    saturate(&problem.objects, &given, base)
}

/// A statement/step graph over keys.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    pub conclusion: String,
    pub hypotheses: BTreeSet<String>,
    pub statements: BTreeSet<String>,
    pub steps: BTreeSet<Step>,
}

impl Graph {
    pub fn parents(&self, statement: &str) -> Vec<&Step> {
        self.steps.iter().filter(|s| s.derived == statement).collect()
    }
}

/// Every fact and step, minus steps re-deriving given facts.
pub fn unpruned_graph(sat: &Saturation, conclusion: &str) -> Option<Graph> {
    if !sat.facts.contains(conclusion) {
        return None;
    }
    Some(Graph {
        conclusion: conclusion.to_string(),
        hypotheses: sat.given.clone(),
        statements: sat.facts.clone(),
        steps: sat
            .steps
            .iter()
            .filter(|s| !sat.given.contains(&s.derived))
            .cloned()
            .collect(),
    })
}

/// Keeps the steps that are reachable from the hypotheses and lead to the
/// conclusion, recomputed until stable.
pub fn pruned_graph(sat: &Saturation, conclusion: &str) -> Option<Graph> {
    let full = unpruned_graph(sat, conclusion)?;
    let mut steps: BTreeSet<Step> = full
        .steps
        .into_iter()
        .filter(|s| !s.premises.iter().any(|p| p == conclusion))
        .collect();
    loop {
        let mut reached = sat.given.clone();
        while let Some(s) = steps
            .iter()
            .find(|s| !reached.contains(&s.derived) && s.premises.iter().all(|p| reached.contains(p)))
        {
            reached.insert(s.derived.clone());
        }
        if !reached.contains(conclusion) {
            return None;
        }
        let mut wanted: BTreeSet<String> = [conclusion.to_string()].into();
        loop {
            let before = wanted.len();
            for s in &steps {
                if wanted.contains(&s.derived) && s.premises.iter().all(|p| reached.contains(p)) {
                    wanted.extend(s.premises.iter().cloned());
                }
            }
            if wanted.len() == before {
                break;
            }
        }
        let kept: BTreeSet<Step> = steps
            .iter()
            .filter(|s| wanted.contains(&s.derived) && s.premises.iter().all(|p| reached.contains(p)))
            .cloned()
            .collect();
        if kept == steps {
            break;
        }
        steps = kept;
    }
    let mut statements: BTreeSet<String> = [conclusion.to_string()].into();
    for s in &steps {
        statements.insert(s.derived.clone());
        statements.extend(s.premises.iter().cloned());
    }
    Some(Graph {
        conclusion: conclusion.to_string(),
        hypotheses: sat.given.intersection(&statements).cloned().collect(),
        statements,
        steps,
    })
}

/// A proof as the set of steps it uses.
pub type Proof = BTreeSet<Step>;

/// Tries every function assigning one parent to every derivable statement,
/// keeps the part reachable from the conclusion when it is acyclic and
/// complete, and deduplicates.
pub fn all_proofs(graph: &Graph) -> BTreeSet<Proof> {
    let open: Vec<&String> = graph
        .statements
        .iter()
        .filter(|s| !graph.hypotheses.contains(*s))
        .collect();
    let options: Vec<Vec<&Step>> = open.iter().map(|s| graph.parents(s)).collect();
    let mut proofs = BTreeSet::new();
    let mut choice = vec![0usize; open.len()];
    loop {
        let f: BTreeMap<&str, &Step> = open
            .iter()
            .zip(&options)
            .zip(&choice)
            .filter(|((_, opts), _)| !opts.is_empty())
            .map(|((s, opts), &c)| (s.as_str(), opts[c]))
            .collect();
        if let Some(p) = restrict(graph, &f) {
            proofs.insert(p);
        }
        // Odometer increment over non-empty option lists.
        let mut i = 0;
        loop {
            if i == open.len() {
                return proofs;
            }
            if options[i].len() > 1 && choice[i] + 1 < options[i].len() {
                choice[i] += 1;
                break;
            }
            choice[i] = 0;
            i += 1;
        }
    }
}

fn restrict(graph: &Graph, f: &BTreeMap<&str, &Step>) -> Option<Proof> {
    let mut needed = BTreeSet::new();
    let mut stack = vec![graph.conclusion.as_str()];
    while let Some(s) = stack.pop() {
        if graph.hypotheses.contains(s) || !needed.insert(s) {
            continue;
        }
        let step = f.get(s)?;
        stack.extend(step.premises.iter().map(String::as_str));
    }
    // Acyclic iff repeatedly removing statements whose premises are settled
    // empties the set.
    let mut settled: BTreeSet<&str> = BTreeSet::new();
    loop {
        let ready: Vec<&str> = needed
            .iter()
            .copied()
            .filter(|s| !settled.contains(s))
            .filter(|s| {
                f[s].premises
                    .iter()
                    .all(|p| graph.hypotheses.contains(p) || settled.contains(p.as_str()))
            })
            .collect();
        if ready.is_empty() {
            break;
        }
        settled.extend(ready);
    }
    (settled.len() == needed.len()).then(|| needed.iter().map(|s| f[s].clone()).collect())
}
