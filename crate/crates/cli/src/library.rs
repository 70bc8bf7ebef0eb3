//! Loading a corpus directory: every `.qr` file below it is a rule pack,
//! every `.qp` file a problem. All problems are prepared up front so that a
//! broken corpus fails at startup.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use geotutor::dsl::RuleBase;
use geotutor::pipeline::{load_problem, load_rule_packs, prepare, PipelineConfig, PipelineError, Prepared};
use thiserror::Error;
use walkdir::WalkDir;

#[derive(Debug, Error)]
pub enum LibraryError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot walk {path}: {source}")]
    Walk {
        path: PathBuf,
        #[source]
        source: walkdir::Error,
    },
    #[error("problem `{problem}`: {source}")]
    Problem {
        problem: String,
        #[source]
        source: Box<PipelineError>,
    },
    #[error(transparent)]
    Pipeline(Box<PipelineError>),
    #[error("problem id `{0}` is defined twice")]
    DuplicateProblem(String),
    #[error("no problems found under {0}")]
    Empty(PathBuf),
}

impl From<PipelineError> for LibraryError {
    fn from(e: PipelineError) -> Self {
        LibraryError::Pipeline(Box::new(e))
    }
}

pub fn read_file(path: &Path) -> Result<String, LibraryError> {
    std::fs::read_to_string(path).map_err(|source| LibraryError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Files below `dir` with the given extension, in path order.
fn files_with_extension(dir: &Path, ext: &str) -> Result<Vec<PathBuf>, LibraryError> {
    let mut out = Vec::new();
    for entry in WalkDir::new(dir).sort_by_file_name() {
        let entry = entry.map_err(|source| LibraryError::Walk {
            path: dir.to_path_buf(),
            source,
        })?;
        if entry.file_type().is_file() && entry.path().extension().is_some_and(|e| e == ext) {
            out.push(entry.into_path());
        }
    }
    Ok(out)
}

/// Reads and merges rule packs from files.
pub fn load_packs(paths: &[PathBuf]) -> Result<RuleBase, LibraryError> {
    let texts = paths
        .iter()
        .map(|p| Ok((p.display().to_string(), read_file(p)?)))
        .collect::<Result<Vec<_>, LibraryError>>()?;
    Ok(load_rule_packs(texts.iter().map(|(o, t)| (o.as_str(), t.as_str())))?)
}

/// Every problem of a corpus, prepared under one configuration.
#[derive(Debug, Clone)]
pub struct Library {
    problems: BTreeMap<String, Arc<Prepared>>,
}

impl Library {
    pub fn load(dir: &Path, cfg: &PipelineConfig) -> Result<Self, LibraryError> {
        let base = load_packs(&files_with_extension(dir, "qr")?)?;
        let mut problems = BTreeMap::new();
        for path in files_with_extension(dir, "qp")? {
            let problem = load_problem(&path.display().to_string(), &read_file(&path)?, &base)?;
            let id = problem.id.clone();
            if problems.contains_key(&id) {
                return Err(LibraryError::DuplicateProblem(id));
            }
            let prepared = prepare(problem, &base, cfg).map_err(|source| LibraryError::Problem {
                problem: id.clone(),
                source: Box::new(source),
            })?;
            for w in &prepared.warnings {
                log::warn!("{id}: {w}");
            }
            log::info!(
                "{id}: {} graph nodes, {} proofs",
                prepared.graph.len(),
                prepared.forest.total()
            );
            problems.insert(id, Arc::new(prepared));
        }
        if problems.is_empty() {
            return Err(LibraryError::Empty(dir.to_path_buf()));
        }
        Ok(Library { problems })
    }

    pub fn get(&self, id: &str) -> Option<&Arc<Prepared>> {
        self.problems.get(id)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Arc<Prepared>)> {
        self.problems.iter().map(|(k, v)| (k.as_str(), v))
    }
}
