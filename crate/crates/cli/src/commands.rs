//! The `geotutor` command line: argument parsing and the batch subcommands.
//!
//! Exit codes: 0 on success, 1 on a domain error (underivable conclusion,
//! engine limit, failed replay expectation), 2 on a usage or parse error.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use geotutor::dsl::{IsleSet, Problem, RuleBase, Tier};
use geotutor::graph::{build_graph, count_proofs, enumerate_proofs, export_dot, export_json, GraphError, HpdicGraph, NodeClass};
use geotutor::pipeline::{derive, load_problem, prepare, PipelineConfig, PipelineError};
use geotutor::tutor::{parse_script, replay, ReplayError, Session, TutorPolicy};
use thiserror::Error;

use crate::config::{ConfigError, IsleSection, ServiceConfig};
use crate::library::{load_packs, read_file, LibraryError};

#[derive(Debug, Parser)]
#[command(name = "geotutor", version, about = "Geometry proof-space builder and tutor")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Inputs {
    /// Problem file (.qp).
    pub problem: PathBuf,
    /// Rule packs (.qr), merged in order.
    #[arg(required = true)]
    pub packs: Vec<PathBuf>,
    /// Enabled isles, comma separated (default: all).
    #[arg(long, value_delimiter = ',')]
    pub isles: Option<Vec<String>>,
    /// Enabled tiers, comma separated (default: coarse,fine,default).
    #[arg(long, value_delimiter = ',')]
    pub tiers: Option<Vec<Tier>>,
    /// Highest rule level in play (default: unbounded).
    #[arg(long)]
    pub max_level: Option<u32>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Saturate a problem and report the derived facts.
    Saturate {
        #[command(flatten)]
        inputs: Inputs,
        /// Write the full derivation record as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build the pruned proof graph (DOT on stdout unless a file is given).
    Graph {
        #[command(flatten)]
        inputs: Inputs,
        #[arg(long)]
        dot: Option<PathBuf>,
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Count or list the proofs of a problem.
    Proofs {
        #[command(flatten)]
        inputs: Inputs,
        /// Print the exact number of proofs (the default).
        #[arg(long)]
        count: bool,
        /// Print the first N proofs.
        #[arg(long, value_name = "N")]
        list: Option<usize>,
    },
    /// Replay a session script and check its expectations.
    Replay {
        problem: PathBuf,
        /// Rule packs followed by the session script (.qs).
        #[arg(required = true, num_args = 2..)]
        files: Vec<PathBuf>,
        #[arg(long, value_delimiter = ',')]
        isles: Option<Vec<String>>,
        #[arg(long, value_delimiter = ',')]
        tiers: Option<Vec<Tier>>,
        #[arg(long)]
        max_level: Option<u32>,
    },
    /// Run the HTTP tutoring service.
    Serve {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Debug, Error)]
pub enum CommandError {
    #[error(transparent)]
    Library(#[from] LibraryError),
    #[error(transparent)]
    Pipeline(Box<PipelineError>),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{path}: {source}")]
    Script {
        path: PathBuf,
        #[source]
        source: ReplayError,
    },
    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Usage(String),
    #[error("{failed} of {total} expectations failed")]
    ReplayFailed { failed: usize, total: usize },
    #[error("service: {0}")]
    Service(#[source] std::io::Error),
}

impl From<PipelineError> for CommandError {
    fn from(e: PipelineError) -> Self {
        CommandError::Pipeline(Box::new(e))
    }
}

impl CommandError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CommandError::Pipeline(e) if e.is_parse_error() => 2,
            CommandError::Library(LibraryError::Pipeline(e)) if e.is_parse_error() => 2,
            CommandError::Library(LibraryError::Io { .. })
            | CommandError::Config(_)
            | CommandError::Script { .. }
            | CommandError::Usage(_) => 2,
            _ => 1,
        }
    }
}

fn pipeline_config(isles: &Option<Vec<String>>, tiers: &Option<Vec<Tier>>, max_level: Option<u32>) -> Result<PipelineConfig, CommandError> {
    let section = IsleSection {
        max_level,
        isles: isles.clone(),
        tiers: tiers.clone(),
    };
    let isles = section
        .to_config()
        .map_err(|_| CommandError::Usage("--tiers must name at least one tier".into()))?;
    if let IsleSet::Only(set) = &isles.isles {
        if set.is_empty() {
            return Err(CommandError::Usage("--isles must name at least one isle".into()));
        }
    }
    Ok(PipelineConfig {
        isles,
        ..PipelineConfig::default()
    })
}

fn load(problem: &Path, packs: &[PathBuf]) -> Result<(Problem, RuleBase), CommandError> {
    let base = load_packs(packs)?;
    let problem = load_problem(&problem.display().to_string(), &read_file(problem)?, &base)?;
    Ok((problem, base))
}

fn write_file(path: &Path, contents: &str) -> Result<(), CommandError> {
    std::fs::write(path, contents).map_err(|source| CommandError::Write {
        path: path.to_path_buf(),
        source,
    })
}

fn graph_for(inputs: &Inputs, err: &mut dyn Write) -> Result<(Problem, HpdicGraph), CommandError> {
    let cfg = pipeline_config(&inputs.isles, &inputs.tiers, inputs.max_level)?;
    let (problem, base) = load(&inputs.problem, &inputs.packs)?;
    let derivation = derive(&problem, &base, &cfg)?;
    for w in &derivation.warnings {
        let _ = writeln!(err, "warning: {w}");
    }
    let graph = build_graph(&derivation.record, &problem.conclusion, &derivation.rules)?;
    Ok((problem, graph))
}

fn saturate_cmd(inputs: &Inputs, out: Option<&Path>, err: &mut dyn Write) -> Result<String, CommandError> {
    let cfg = pipeline_config(&inputs.isles, &inputs.tiers, inputs.max_level)?;
    let (problem, base) = load(&inputs.problem, &inputs.packs)?;
    let derivation = derive(&problem, &base, &cfg)?;
    for w in &derivation.warnings {
        let _ = writeln!(err, "warning: {w}");
    }
    let record = &derivation.record;
    if let Some(path) = out {
        let dump = serde_json::to_string_pretty(&record.dump(&problem.id)).expect("dump serializes");
        write_file(path, &(dump + "\n"))?;
    }
    if !record.contains(&problem.conclusion) {
        return Err(GraphError::ConclusionNotDerived(problem.conclusion.key().to_string()).into());
    }
    let mut s = String::new();
    let _ = writeln!(s, "problem {}", problem.id);
    let _ = writeln!(
        s,
        "facts {} ({} given, {} derived)",
        record.facts().len(),
        record.given().len(),
        record.facts().len() - record.given().len()
    );
    let _ = writeln!(s, "justifications {}", record.justifications().len());
    let _ = writeln!(s, "rounds {}", record.rounds());
    let _ = writeln!(s, "conclusion {} derived", problem.conclusion);
    Ok(s)
}

fn graph_cmd(inputs: &Inputs, dot: Option<&Path>, json: Option<&Path>, err: &mut dyn Write) -> Result<String, CommandError> {
    let (_, graph) = graph_for(inputs, err)?;
    if dot.is_none() && json.is_none() {
        return Ok(export_dot(&graph));
    }
    if let Some(path) = dot {
        write_file(path, &export_dot(&graph))?;
    }
    if let Some(path) = json {
        write_file(path, &export_json(&graph))?;
    }
    let mut s = String::new();
    let _ = writeln!(
        s,
        "nodes {} (hypotheses {}, intermediate results {}, conclusion 1, inferences {})",
        graph.len(),
        graph.class_count(NodeClass::Hypothesis),
        graph.class_count(NodeClass::IntermediateResult),
        graph.class_count(NodeClass::Inference)
    );
    let _ = writeln!(s, "edges {}", graph.edges().len());
    Ok(s)
}

fn proofs_cmd(inputs: &Inputs, list: Option<usize>, err: &mut dyn Write) -> Result<String, CommandError> {
    let (_, graph) = graph_for(inputs, err)?;
    let total = count_proofs(&graph);
    let Some(n) = list else {
        return Ok(format!("{total}\n"));
    };
    let listed = enumerate_proofs(&graph, n);
    let mut s = String::new();
    for (i, tree) in listed.proofs.iter().enumerate() {
        let _ = writeln!(s, "proof {} (size {})", i + 1, tree.size());
        for node in tree.derived_in_order(&graph) {
            let inf = tree.chosen()[&node];
            let premises: Vec<&str> = graph.premises(inf).iter().map(|&p| graph.node(p).label()).collect();
            let _ = writeln!(
                s,
                "  {} <= {}({})",
                graph.node(node).label(),
                graph.node(inf).label(),
                premises.join(", ")
            );
        }
    }
    let _ = writeln!(s, "{} of {total} proofs listed", listed.proofs.len());
    Ok(s)
}

fn replay_cmd(
    problem: &Path,
    files: &[PathBuf],
    cfg: PipelineConfig,
    out: &mut dyn Write,
) -> Result<(), CommandError> {
    let (script_path, packs) = files.split_last().expect("clap enforces two files");
    let (problem, base) = load(problem, packs)?;
    let prepared = prepare(problem, &base, &cfg)?;
    let steps = parse_script(&read_file(script_path)?).map_err(|source| CommandError::Script {
        path: script_path.clone(),
        source,
    })?;
    let mut session = Session::new(Arc::new(prepared), TutorPolicy::default());
    let report = replay(&mut session, &steps);
    let _ = out.write_all(report.transcript.as_bytes());
    if report.success() {
        Ok(())
    } else {
        Err(CommandError::ReplayFailed {
            failed: report.failed,
            total: report.passed + report.failed,
        })
    }
}

fn serve_cmd(config: &Path) -> Result<(), CommandError> {
    let cfg = ServiceConfig::load(config)?;
    let runtime = tokio::runtime::Runtime::new().map_err(CommandError::Service)?;
    runtime.block_on(crate::service::serve(cfg))
}

fn execute(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CommandError> {
    let text = match &cli.command {
        Command::Saturate { inputs, out: dump } => saturate_cmd(inputs, dump.as_deref(), err)?,
        Command::Graph { inputs, dot, json } => graph_cmd(inputs, dot.as_deref(), json.as_deref(), err)?,
        Command::Proofs { inputs, count, list } => {
            if *count && list.is_some() {
                return Err(CommandError::Usage("--count and --list are exclusive".into()));
            }
            proofs_cmd(inputs, *list, err)?
        }
        Command::Replay {
            problem,
            files,
            isles,
            tiers,
            max_level,
        } => {
            let cfg = pipeline_config(isles, tiers, *max_level)?;
            return replay_cmd(problem, files, cfg, out);
        }
        Command::Serve { config } => return serve_cmd(config),
    };
    let _ = out.write_all(text.as_bytes());
    Ok(())
}

/// Runs the command line and returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let rendered = e.render().to_string();
            let code = u8::try_from(e.exit_code()).unwrap_or(2);
            let _ = if code == 0 {
                out.write_all(rendered.as_bytes())
            } else {
                err.write_all(rendered.as_bytes())
            };
            return code;
        }
    };
    match execute(cli, out, err) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
