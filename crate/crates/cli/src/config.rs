//! Optional TOML run file. Flags given on the command line win; relative
//! paths in the file resolve against the file's directory.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use chronoqa_core::memory::MemoryMode;
use chronoqa_core::reasoner::Strategy;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Live,
    Record,
    Replay,
    Scripted,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub corpus: Option<PathBuf>,
    pub memory: Option<PathBuf>,
    pub benchmark: Option<PathBuf>,
    pub fixtures: Option<PathBuf>,
    pub script: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub strategy: Option<Strategy>,
    pub backend: Option<BackendKind>,
    pub mode: Option<MemoryMode>,
    pub k: Option<usize>,
    pub retries: Option<usize>,
    pub rate_limit: Option<u32>,
    pub context_tokens: Option<usize>,
    pub jobs: Option<usize>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let mut cfg: FileConfig =
            toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [
            &mut cfg.corpus,
            &mut cfg.memory,
            &mut cfg.benchmark,
            &mut cfg.fixtures,
            &mut cfg.script,
            &mut cfg.output,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }
}

/// An input path that must exist.
pub fn existing(flag: Option<PathBuf>, file: &Option<PathBuf>, name: &str) -> Result<PathBuf, CliError> {
    let p = flag
        .or_else(|| file.clone())
        .ok_or_else(|| CliError::Config(format!("--{name} is required")))?;
    if !p.exists() {
        return Err(CliError::Config(format!("--{name} {} does not exist", p.display())));
    }
    Ok(p)
}

pub fn optional_existing(flag: Option<PathBuf>, file: &Option<PathBuf>, name: &str) -> Result<Option<PathBuf>, CliError> {
    match flag.or_else(|| file.clone()) {
        Some(p) if !p.exists() => Err(CliError::Config(format!("--{name} {} does not exist", p.display()))),
        other => Ok(other),
    }
}
