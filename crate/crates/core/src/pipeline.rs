//! End-to-end preparation of a problem: packs and problem text in, graph and
//! proof forest out.

use thiserror::Error;

use crate::dsl::{filter_rules, parse_problem, parse_rules, DslError, IsleConfig, Problem, RuleBase};
use crate::engine::{saturate, DerivationRecord, EngineError, Limits};
use crate::graph::{build_graph, to_forest, GraphError, HpdicGraph, ProofForest, DEFAULT_FOREST_CAP};
use crate::Warning;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("{origin}: {source}")]
    Dsl {
        origin: String,
        #[source]
        source: DslError,
    },
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

impl PipelineError {
    /// Parse failures are input errors; everything else is a domain error.
    pub fn is_parse_error(&self) -> bool {
        matches!(self, PipelineError::Dsl { .. })
    }
}

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub isles: IsleConfig,
    pub limits: Limits,
    pub forest_cap: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            isles: IsleConfig::permissive(),
            limits: Limits::default(),
            forest_cap: DEFAULT_FOREST_CAP,
        }
    }
}

/// Parses and merges rule packs given as `(origin, text)` pairs.
pub fn load_rule_packs<'a>(
    packs: impl IntoIterator<Item = (&'a str, &'a str)>,
) -> Result<RuleBase, PipelineError> {
    let mut base = RuleBase::default();
    for (origin, text) in packs {
        let dsl = |source| PipelineError::Dsl {
            origin: origin.to_string(),
            source,
        };
        let pack = parse_rules(text).map_err(dsl)?;
        base = base.merge(&pack).map_err(dsl)?;
    }
    Ok(base)
}

pub fn load_problem(origin: &str, text: &str, base: &RuleBase) -> Result<Problem, PipelineError> {
    parse_problem(text, base).map_err(|source| PipelineError::Dsl {
        origin: origin.to_string(),
        source,
    })
}

/// Saturation result under the configured isles.
#[derive(Debug, Clone)]
pub struct Derivation {
    /// The admissible rules (predicate declarations are all kept).
    pub rules: RuleBase,
    pub record: DerivationRecord,
    pub warnings: Vec<Warning>,
}

pub fn derive(problem: &Problem, base: &RuleBase, cfg: &PipelineConfig) -> Result<Derivation, PipelineError> {
    let filtered = filter_rules(base, &cfg.isles);
    let record = saturate(problem, &filtered.base, cfg.limits)?;
    log::info!(
        "{}: {} facts, {} justifications in {} rounds",
        problem.id,
        record.facts().len(),
        record.justifications().len(),
        record.rounds()
    );
    Ok(Derivation {
        rules: filtered.base,
        record,
        warnings: filtered.warning.into_iter().collect(),
    })
}

/// Everything the tutor needs for one problem.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub problem: Problem,
    pub rules: RuleBase,
    pub record: DerivationRecord,
    pub graph: HpdicGraph,
    pub forest: ProofForest,
    pub warnings: Vec<Warning>,
}

pub fn prepare(problem: Problem, base: &RuleBase, cfg: &PipelineConfig) -> Result<Prepared, PipelineError> {
    let Derivation {
        rules,
        record,
        mut warnings,
    } = derive(&problem, base, cfg)?;
    let graph = build_graph(&record, &problem.conclusion, &rules)?;
    let (forest, warning) = to_forest(&graph, cfg.forest_cap);
    warnings.extend(warning);
    Ok(Prepared {
        problem,
        rules,
        record,
        graph,
        forest,
        warnings,
    })
}
