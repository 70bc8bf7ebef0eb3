//! Acceptance checks, one PASS/FAIL line per criterion. Runs without the
//! libtest harness so the lines always reach the output.

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::sync::Arc;
use std::time::Instant;

use geotutor::dsl::{parse_rules, IsleConfig, RuleBase, Tier};
use geotutor::engine::{replay_justification, saturate_facts, DerivationRecord, Limits, Strategy};
use geotutor::graph::{build_graph, count_proofs, enumerate_proofs, NodeClass};
use geotutor::model::{canonicalize, ObjectId, ObjectKind};
use geotutor::pipeline::{load_problem, load_rule_packs, prepare, PipelineConfig, Prepared};
use geotutor::synth::{layered_graph, random_instance, random_record};
use geotutor::tutor::{HintKind, Session, TutorError, TutorPolicy};
use num_bigint::BigUint;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn corpus() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/corpus")
}

fn read(rel: &str) -> String {
    std::fs::read_to_string(corpus().join(rel)).unwrap_or_else(|e| panic!("{rel}: {e}"))
}

fn base() -> RuleBase {
    let (q, b) = (read("packs/quadrilaterals.qr"), read("packs/bisector.qr"));
    load_rule_packs([("quadrilaterals.qr", q.as_str()), ("bisector.qr", b.as_str())]).unwrap()
}

fn prepared(name: &str, tiers: &[Tier]) -> Prepared {
    let base = base();
    let problem = load_problem(name, &read(&format!("problems/{name}.qp")), &base).unwrap();
    let cfg = PipelineConfig {
        isles: IsleConfig::permissive().with_tiers(tiers).unwrap(),
        ..PipelineConfig::default()
    };
    prepare(problem, &base, &cfg).unwrap()
}

fn oracle_count(p: &Prepared) -> usize {
    let sat = geotutor_oracle::saturate_problem(&p.problem, &p.rules);
    let graph = geotutor_oracle::pruned_graph(&sat, p.problem.conclusion.key()).expect("oracle derives the conclusion");
    geotutor_oracle::all_proofs(&graph).len()
}

fn rectangle_pipeline() -> Outcome {
    let start = Instant::now();
    let p = prepared("rectangle", &Tier::ALL);
    let count = count_proofs(&p.graph);
    let elapsed = start.elapsed();
    ensure(p.record.contains(&p.problem.conclusion), || "conclusion not derived".into())?;
    let expected = oracle_count(&p);
    ensure(count == BigUint::from(expected), || format!("count {count}, oracle {expected}"))?;
    ensure(elapsed.as_secs_f64() < 1.0, || format!("took {elapsed:?}"))?;
    Ok(format!("{count} proofs, oracle agrees, {} ms", elapsed.as_millis()))
}

fn deductive_isles() -> Outcome {
    let coarse = prepared("bisector", &[Tier::Coarse]);
    let sizes: Vec<usize> = coarse.forest.trees().iter().map(|t| t.size()).collect();
    ensure(sizes == [1], || format!("coarse proof sizes {sizes:?}"))?;

    let fine = prepared("bisector", &[Tier::Fine]);
    let sizes: Vec<usize> = fine.forest.trees().iter().map(|t| t.size()).collect();
    ensure(sizes == [4], || format!("fine proof sizes {sizes:?}"))?;
    let tree = fine.forest.tree(0);
    let intermediate: BTreeSet<&str> = tree
        .chosen()
        .keys()
        .filter(|&&n| fine.graph.node(n).class == NodeClass::IntermediateResult)
        .map(|&n| fine.graph.node(n).label())
        .collect();
    for needed in ["onBisector(X,sAB)", "onBisector(Y,sAB)"] {
        ensure(intermediate.contains(needed), || format!("fine proof lacks {needed}"))?;
    }

    let both = prepared("bisector", &[Tier::Coarse, Tier::Fine]);
    ensure(both.forest.len() == 2, || format!("{} proofs with both tiers", both.forest.len()))?;
    let parents = both.graph.parents(both.graph.conclusion()).len();
    ensure(parents == 2, || format!("conclusion has {parents} inference parents"))?;
    Ok("coarse 1 proof of size 1, fine 1 of size 4, both 2 proofs with 2 parents".into())
}

fn scale_counting() -> Outcome {
    let start = Instant::now();
    let g = layered_graph(6, 9);
    let count = count_proofs(&g);
    let elapsed = start.elapsed();
    let expected = BigUint::from(6u32).pow(9);
    ensure(count == expected, || format!("count {count}, expected {expected}"))?;
    ensure(elapsed.as_secs_f64() < 10.0, || format!("took {elapsed:?}"))?;
    Ok(format!("{count} proofs in {} ms", elapsed.as_millis()))
}

fn saturate(given: Vec<geotutor::model::Fact>, base: &RuleBase, strategy: Strategy) -> DerivationRecord {
    saturate_facts(given, base, Limits::default(), strategy).unwrap()
}

/// Engine laws on one instance.
fn engine_laws(given: &[geotutor::model::Fact], base: &RuleBase) -> Result<(), String> {
    let rec = saturate(given.to_vec(), base, Strategy::SemiNaive);
    let again = saturate(rec.facts().iter().cloned().collect(), base, Strategy::SemiNaive);
    ensure(again.facts() == rec.facts() && again.derived().next().is_none(), || "not idempotent".into())?;
    let naive = saturate(given.to_vec(), base, Strategy::Naive);
    ensure(naive.facts() == rec.facts() && naive.justifications() == rec.justifications(), || {
        "semi-naive and naive differ".into()
    })?;
    let mut reversed = given.to_vec();
    reversed.reverse();
    let mut rules = base.rules().to_vec();
    rules.reverse();
    let reordered = RuleBase::new(base.predicates().to_vec(), rules).unwrap();
    let shuffled = saturate(reversed, &reordered, Strategy::SemiNaive);
    ensure(shuffled.justifications() == rec.justifications(), || "order dependent".into())?;
    for r in base.rules() {
        let fewer = saturate(given.to_vec(), &base.with_rules(|x| x.id != r.id), Strategy::SemiNaive);
        ensure(fewer.facts().is_subset(rec.facts()), || format!("dropping {} adds facts", r.id))?;
    }
    if given.len() > 1 {
        let smaller = saturate(given[1..].to_vec(), base, Strategy::SemiNaive);
        ensure(smaller.facts().is_subset(rec.facts()), || "dropping a hypothesis adds facts".into())?;
    }
    for j in rec.justifications() {
        replay_justification(j, base).map_err(|e| format!("{j}: {e}"))?;
    }
    Ok(())
}

fn group_laws() -> Result<usize, String> {
    let pack = "pred a/3 kinds(point,point,point) sym(swap 2 3)\n\
                pred b/3 kinds(point,point,point) sym(cycle 1 2 3)\n\
                pred c/3 kinds(point,point,point) sym(full)\n\
                pred d/4 kinds(point,point,point,point) sym(cycle 1 2 3 4; swap 2 4)\n\
                pred e/4 kinds(point,point,point,point) sym(swap 1 2; swap 3 4)\n";
    let base = parse_rules(pack).unwrap();
    let names = ["A", "B", "C", "D"];
    let mut checked = 0;
    for decl in base.predicates() {
        let n = decl.arity();
        for code in 0..names.len().pow(n as u32) {
            let args: Vec<ObjectId> = (0..n)
                .map(|i| ObjectId::new(names[code / names.len().pow(i as u32) % names.len()], ObjectKind::Point).unwrap())
                .collect();
            let fact = canonicalize(decl, &args).unwrap();
            for perm in decl.group() {
                ensure(canonicalize(decl, &perm.apply(&args)).unwrap() == fact, || {
                    format!("{} not invariant", decl.name())
                })?;
            }
            let strings: Vec<String> = args.iter().map(|o| o.name().to_string()).collect();
            ensure(fact.key() == geotutor_oracle::canonical_key(decl, &strings), || {
                format!("{} disagrees with orbit search", fact.key())
            })?;
            checked += 1;
        }
    }
    Ok(checked)
}

fn engine_properties() -> Outcome {
    let corpus = base();
    for name in ["rectangle", "bisector"] {
        let problem = load_problem(name, &read(&format!("problems/{name}.qp")), &corpus).unwrap();
        let given: Vec<_> = problem.given().cloned().collect();
        engine_laws(&given, &corpus).map_err(|e| format!("{name}: {e}"))?;
    }
    // Instances that derive nothing still count for the laws, but at least
    // a hundred must derive something.
    let (mut instances, mut productive) = (0u64, 0);
    while productive < 100 {
        let inst = random_instance(instances);
        engine_laws(&inst.given, &inst.base).map_err(|e| format!("seed {instances}: {e}"))?;
        let rec = saturate(inst.given.clone(), &inst.base, Strategy::SemiNaive);
        productive += usize::from(rec.derived().next().is_some());
        instances += 1;
    }
    let canonical = group_laws()?;
    let mut graphs = 0;
    for seed in 0..150u64 {
        let (record, conclusion) = random_record(seed, 4 + (seed as usize % 9), 1 + (seed as usize % 3));
        let Ok(g) = build_graph(&record, &conclusion, &RuleBase::default()) else {
            continue;
        };
        ensure(g.statement_count() <= 12, || "oversized instance".into())?;
        let listed = enumerate_proofs(&g, usize::MAX).proofs.len();
        ensure(count_proofs(&g) == BigUint::from(listed), || format!("seed {seed}: count differs from enumeration"))?;
        graphs += 1;
    }
    ensure(graphs >= 100, || format!("only {graphs} graph instances"))?;
    Ok(format!(
        "corpus + {instances} random packs ({productive} productive), {canonical} canonical forms, {graphs} graphs"
    ))
}

fn tutor_gates() -> Outcome {
    let fine = Arc::new(prepared("bisector", &[Tier::Fine]));
    let mut s = Session::new(fine.clone(), TutorPolicy::default());
    let steps = ["onBisector(X,sAB)", "onBisector(Y,sAB)", "lineThrough(lXY,X,Y)", "perpBisector(lXY,sAB)"];
    let expected = [(0.25, false), (0.5, true), (0.75, true), (1.0, true)];
    for (text, (completion, unlocked)) in steps.iter().zip(expected) {
        s.submit_text(text).map_err(|e| e.to_string())?;
        ensure(s.completion() == completion, || format!("after {text}: completion {}", s.completion()))?;
        ensure(s.redaction_view().unlocked == unlocked, || format!("after {text}: wrong gate"))?;
    }
    ensure(s.redaction_view().blanks() == 0, || "blanks remain".into())?;
    ensure(matches!(s.next_hint(), Err(TutorError::NothingMissing)), || "hint on a complete proof".into())?;

    let policy = TutorPolicy::default();
    let budget = policy.hints_per_target * policy.max_targets;
    let mut s = Session::new(fine, policy);
    let kinds: Vec<HintKind> = (0..=budget).map(|_| s.next_hint().unwrap().kind).collect();
    ensure(!kinds[..budget].contains(&HintKind::TeacherReferral), || format!("early referral: {kinds:?}"))?;
    ensure(kinds[budget] == HintKind::TeacherReferral, || format!("no referral: {kinds:?}"))?;
    Ok(format!("0.25 locked, 0.5 unlocked, 1.0 with 0 blanks, referral after {budget} hints"))
}

fn replay_fixtures() -> Outcome {
    let mut fixtures: Vec<PathBuf> = std::fs::read_dir(corpus().join("sessions"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "qs"))
        .collect();
    fixtures.sort();
    ensure(!fixtures.is_empty(), || "no fixtures".into())?;
    let packs = [corpus().join("packs/quadrilaterals.qr"), corpus().join("packs/bisector.qr")];
    for fixture in &fixtures {
        let text = std::fs::read_to_string(fixture).unwrap();
        let problem = text
            .lines()
            .find_map(|l| l.strip_prefix("# session on problem "))
            .ok_or_else(|| format!("{} names no problem", fixture.display()))?;
        let run = || {
            Command::new(env!("CARGO_BIN_EXE_geotutor"))
                .arg("replay")
                .arg(corpus().join(format!("problems/{}.qp", problem.trim())))
                .args(&packs)
                .arg(fixture)
                .output()
                .unwrap()
        };
        let (a, b) = (run(), run());
        let name = fixture.file_name().unwrap().to_string_lossy();
        ensure(a.status.success(), || {
            format!("{name}: {}", String::from_utf8_lossy(&a.stdout).lines().last().unwrap_or(""))
        })?;
        ensure(a.stdout == b.stdout, || format!("{name}: transcripts differ"))?;
    }
    Ok(format!("{} fixtures pass, transcripts byte-stable", fixtures.len()))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 6] = [
        ("rectangle pipeline", rectangle_pipeline),
        ("deductive isles", deductive_isles),
        ("scale counting", scale_counting),
        ("engine properties", engine_properties),
        ("tutor gates", tutor_gates),
        ("replay determinism", replay_fixtures),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            Err(e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        match outcome {
            Ok(detail) => println!("criterion {}: PASS  {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {}: FAIL  {name}: {why}", i + 1);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
