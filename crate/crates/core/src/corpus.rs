//! The shipped corpus: memoizing example programs plus impure ones.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::frontend::ast::{Ident, Library};
use crate::frontend::{load, FrontendError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProgramClass {
    Op,
    NonOp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Expected {
    PureCertified,
    NotCertified,
}

#[derive(Debug, Clone, Deserialize)]
struct ManifestEntry {
    name: String,
    file: String,
    class: ProgramClass,
    expected: BTreeMap<Ident, Expected>,
}

#[derive(Debug, Deserialize)]
struct Manifest {
    program: Vec<ManifestEntry>,
}

#[derive(Debug, Clone)]
pub struct CorpusEntry {
    pub name: String,
    pub path: PathBuf,
    pub source: String,
    pub class: ProgramClass,
    pub expected: BTreeMap<Ident, Expected>,
    pub library: Library,
}

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("bad manifest: {0}")]
    Manifest(#[from] toml::de::Error),
    #[error("{path}: {source}")]
    Program {
        path: PathBuf,
        source: FrontendError,
    },
}

/// `OPCHECK_CORPUS`, or the `corpus` directory of the source tree.
pub fn corpus_dir() -> PathBuf {
    std::env::var_os("OPCHECK_CORPUS")
        .map(PathBuf::from)
        .unwrap_or_else(|| Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus"))
}

fn read(path: &Path) -> Result<String, CorpusError> {
    std::fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_corpus_from(dir: &Path) -> Result<Vec<CorpusEntry>, CorpusError> {
    let manifest: Manifest = toml::from_str(&read(&dir.join("manifest.toml"))?)?;
    manifest
        .program
        .into_iter()
        .map(|m| {
            let path = dir.join(&m.file);
            let source = read(&path)?;
            let library = load(&source).map_err(|source| CorpusError::Program {
                path: path.clone(),
                source,
            })?;
            Ok(CorpusEntry {
                name: m.name,
                path,
                source,
                class: m.class,
                expected: m.expected,
                library,
            })
        })
        .collect()
}

pub fn load_corpus() -> Result<Vec<CorpusEntry>, CorpusError> {
    load_corpus_from(&corpus_dir())
}

pub fn entry(name: &str) -> Option<CorpusEntry> {
    load_corpus().ok()?.into_iter().find(|e| e.name == name)
}
