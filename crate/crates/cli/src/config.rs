//! Service configuration, read from a TOML file.
//!
//! ```toml
//! port = 8080
//! corpus_dir = "corpus"
//! log_dir = "logs"        # optional, session scripts are written here
//! forest_cap = 10000
//!
//! [isles]
//! max_level = 2
//! isles = ["quadrilaterals"]
//! tiers = ["fine", "default"]
//!
//! [policy]
//! threshold = 0.5
//! hintsPerTarget = 3
//! maxTargets = 2
//! ```
//!
//! Relative paths are resolved against the directory holding the file.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use geotutor::dsl::{IsleConfig, IsleSet, Tier};
use geotutor::graph::DEFAULT_FOREST_CAP;
use geotutor::pipeline::PipelineConfig;
use geotutor::tutor::TutorPolicy;
use serde::Deserialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Toml {
        path: PathBuf,
        #[source]
        source: toml::de::Error,
    },
    #[error("port must be in 1..=65535, found {0}")]
    Port(i64),
    #[error("corpus directory {0} does not exist")]
    MissingCorpus(PathBuf),
    #[error("[isles] tiers must not be empty")]
    NoTiers,
    #[error("policy threshold must be in [0, 1], found {0}")]
    Threshold(f64),
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IsleSection {
    pub max_level: Option<u32>,
    pub isles: Option<Vec<String>>,
    pub tiers: Option<Vec<Tier>>,
}

impl IsleSection {
    pub fn to_config(&self) -> Result<IsleConfig, ConfigError> {
        let isles = match &self.isles {
            Some(names) => IsleSet::Only(names.iter().cloned().collect()),
            None => IsleSet::All,
        };
        let tiers: BTreeSet<Tier> = match &self.tiers {
            Some(t) => t.iter().copied().collect(),
            None => Tier::ALL.into_iter().collect(),
        };
        IsleConfig::new(self.max_level.unwrap_or(u32::MAX), isles, tiers).ok_or(ConfigError::NoTiers)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    port: i64,
    corpus_dir: PathBuf,
    log_dir: Option<PathBuf>,
    #[serde(default = "default_host")]
    host: String,
    #[serde(default = "default_forest_cap")]
    forest_cap: usize,
    #[serde(default)]
    isles: IsleSection,
    #[serde(default)]
    policy: TutorPolicy,
}

fn default_host() -> String {
    "127.0.0.1".to_string()
}

fn default_forest_cap() -> usize {
    DEFAULT_FOREST_CAP
}

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub host: String,
    pub port: u16,
    pub corpus_dir: PathBuf,
    pub log_dir: Option<PathBuf>,
    pub pipeline: PipelineConfig,
    pub policy: TutorPolicy,
}

impl ServiceConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base).map_err(|e| match e {
            ConfigError::Toml { source, .. } => ConfigError::Toml {
                path: path.to_path_buf(),
                source,
            },
            other => other,
        })
    }

    /// Parses and validates configuration text, resolving relative paths
    /// against `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self, ConfigError> {
        let raw: RawConfig = toml::from_str(text).map_err(|source| ConfigError::Toml {
            path: PathBuf::from("<config>"),
            source,
        })?;
        let port = u16::try_from(raw.port)
            .ok()
            .filter(|&p| p != 0)
            .ok_or(ConfigError::Port(raw.port))?;
        let corpus_dir = base.join(raw.corpus_dir);
        if !corpus_dir.is_dir() {
            return Err(ConfigError::MissingCorpus(corpus_dir));
        }
        if !(0.0..=1.0).contains(&raw.policy.threshold) {
            return Err(ConfigError::Threshold(raw.policy.threshold));
        }
        Ok(ServiceConfig {
            host: raw.host,
            port,
            corpus_dir,
            log_dir: raw.log_dir.map(|d| base.join(d)),
            pipeline: PipelineConfig {
                isles: raw.isles.to_config()?,
                forest_cap: raw.forest_cap,
                ..PipelineConfig::default()
            },
            policy: raw.policy,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<ServiceConfig, ConfigError> {
        let dir = tempfile::tempdir().unwrap();
        std::fs::create_dir(dir.path().join("corpus")).unwrap();
        ServiceConfig::parse(text, dir.path())
    }

    #[test]
    fn reads_sections() {
        let cfg = parse(
            "port = 9000\ncorpus_dir = \"corpus\"\n[isles]\ntiers = [\"fine\"]\nmax_level = 1\n[policy]\nmaxTargets = 4\n",
        )
        .unwrap();
        assert_eq!(cfg.port, 9000);
        assert_eq!(cfg.pipeline.isles.max_level, 1);
        assert_eq!(cfg.pipeline.isles.tiers().len(), 1);
        assert_eq!(cfg.policy.max_targets, 4);
        assert_eq!(cfg.policy.hints_per_target, 3);
        assert!(cfg.log_dir.is_none());
    }

    #[test]
    fn rejects_bad_values() {
        assert!(matches!(parse("port = 0\ncorpus_dir = \"corpus\"\n"), Err(ConfigError::Port(0))));
        assert!(matches!(parse("port = 70000\ncorpus_dir = \"corpus\"\n"), Err(ConfigError::Port(70000))));
        assert!(matches!(parse("port = 1\ncorpus_dir = \"nope\"\n"), Err(ConfigError::MissingCorpus(_))));
        assert!(matches!(
            parse("port = 1\ncorpus_dir = \"corpus\"\n[isles]\ntiers = []\n"),
            Err(ConfigError::NoTiers)
        ));
        assert!(matches!(
            parse("port = 1\ncorpus_dir = \"corpus\"\n[policy]\nthreshold = 2.0\n"),
            Err(ConfigError::Threshold(_))
        ));
        assert!(matches!(parse("port = 1\ncorpus = 3\n"), Err(ConfigError::Toml { .. })));
    }
}
