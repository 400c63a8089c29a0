//! Pipeline configuration: one JSON file, overridable by flags.
//!
//! Every field has a default, so a partial (or absent) config file is
//! fine as long as the paths a command needs are supplied somewhere.
//! Flags always win over the file. The `answer` command writes the
//! resolved configuration next to its outputs so a run can be archived
//! and reproduced from that single artifact.

use std::fs;
use std::path::{Path, PathBuf};

use culturank_core::{Bm25Params, Error, RankerConfig, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PathsConfig {
    pub documents: Option<PathBuf>,
    pub questions: Option<PathBuf>,
    pub gazetteer: Option<PathBuf>,
    /// Prompt template file; the bundled default is used when unset.
    pub template: Option<PathBuf>,
    pub output_dir: PathBuf,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BackendsConfig {
    pub embedding_url: Option<String>,
    pub scorer_url: Option<String>,
    /// Use the bundled deterministic embedding stub instead of a service.
    pub stub_embeddings: bool,
    /// Use the bundled token-overlap choice scorer instead of a service.
    pub stub_scorer: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub paths: PathsConfig,
    pub bm25: Bm25Params,
    pub ranker: RankerConfig,
    pub batch_size: usize,
    /// How many batches may be in flight at the scoring backend at once.
    pub max_in_flight: usize,
    /// Per-evidence-block character budget in prompts; unlimited when unset.
    pub max_evidence_chars: Option<usize>,
    pub backends: BackendsConfig,
    /// The pipeline has no stochastic step; this flag documents that and
    /// must stay true.
    pub random_free: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            paths: PathsConfig {
                output_dir: PathBuf::from("out"),
                ..PathsConfig::default()
            },
            bm25: Bm25Params::default(),
            ranker: RankerConfig::default(),
            batch_size: 16,
            max_in_flight: 1,
            max_evidence_chars: None,
            backends: BackendsConfig::default(),
            random_free: true,
        }
    }
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let content = fs::read_to_string(path).map_err(|e| {
            if e.kind() == std::io::ErrorKind::NotFound {
                Error::MissingFile {
                    path: path.to_path_buf(),
                }
            } else {
                Error::Io {
                    path: path.to_path_buf(),
                    source: e,
                }
            }
        })?;
        serde_json::from_str(&content)
            .map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<()> {
        self.bm25.validate()?;
        self.ranker.validate()?;
        if self.batch_size == 0 {
            return Err(Error::InvalidConfig("batch_size must be ≥ 1".into()));
        }
        if self.max_in_flight == 0 {
            return Err(Error::InvalidConfig("max_in_flight must be ≥ 1".into()));
        }
        if !self.random_free {
            return Err(Error::InvalidConfig(
                "random_free must stay true: the pipeline has no stochastic step".into(),
            ));
        }
        Ok(())
    }
}
