//! Local `.sol` corpus: discovery, content hashing and de-duplication.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use walkdir::WalkDir;

use crate::parser::parse;

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("no .sol files under {0}")]
    EmptyCorpus(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ManifestEntry {
    /// Relative to the corpus root, `/`-separated.
    pub path: String,
    pub content_hash: String,
    pub byte_size: u64,
    pub parsed_ok: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CorpusManifest {
    pub entries: Vec<ManifestEntry>,
    /// Unreadable files and dropped duplicates.
    pub notes: Vec<String>,
}

impl CorpusManifest {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusFile {
    pub entry: ManifestEntry,
    /// `None` when the bytes are not UTF-8.
    pub source: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    pub manifest: CorpusManifest,
    /// Same order as `manifest.entries`.
    pub files: Vec<CorpusFile>,
}

/// Source of contract text other than the local filesystem, such as a block
/// explorer client. None ships with this crate.
pub trait Fetcher {
    type Error: std::error::Error;

    fn fetch(&self, address: &str) -> Result<String, Self::Error>;
}

pub fn content_hash(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn relative(root: &Path, path: &Path) -> String {
    let rel = path.strip_prefix(root).ok().filter(|r| !r.as_os_str().is_empty());
    let rel = rel.unwrap_or_else(|| Path::new(path.file_name().unwrap_or(path.as_os_str())));
    rel.components().map(|c| c.as_os_str().to_string_lossy()).collect::<Vec<_>>().join("/")
}

fn is_sol(path: &Path) -> bool {
    path.extension().is_some_and(|e| e == "sol")
}

/// Builds the in-memory entry for one file's bytes.
pub fn corpus_file(path: String, bytes: &[u8]) -> CorpusFile {
    let source = String::from_utf8(bytes.to_vec()).ok();
    let parsed_ok = source.as_deref().is_some_and(|s| parse(s).is_ok());
    let entry = ManifestEntry { path, content_hash: content_hash(bytes), byte_size: bytes.len() as u64, parsed_ok };
    CorpusFile { entry, source }
}

/// Reads every `.sol` file under `root` (or `root` itself when it is a file).
pub fn read_corpus(root: &Path) -> Result<Corpus, CorpusError> {
    let mut notes = Vec::new();
    let mut paths = Vec::new();
    for item in WalkDir::new(root).follow_links(true) {
        match item {
            Ok(e) if e.file_type().is_file() && is_sol(e.path()) => paths.push(e.into_path()),
            Ok(_) => {}
            Err(e) if e.depth() == 0 => {
                let source = e.into_io_error().unwrap_or_else(|| std::io::Error::other("walk failed"));
                return Err(CorpusError::Io { path: root.to_path_buf(), source });
            }
            Err(e) => {
                let path = e.path().map(|p| relative(root, p)).unwrap_or_default();
                notes.push(format!("{path}: {e}"));
            }
        }
    }
    if paths.is_empty() {
        return Err(CorpusError::EmptyCorpus(root.to_path_buf()));
    }

    let read: Vec<(String, Result<CorpusFile, std::io::Error>)> = paths
        .par_iter()
        .map(|p| {
            let rel = relative(root, p);
            (rel.clone(), std::fs::read(p).map(|bytes| corpus_file(rel, &bytes)))
        })
        .collect();
    let mut files = Vec::new();
    for (rel, r) in read {
        match r {
            Ok(f) => files.push(f),
            Err(e) => notes.push(format!("{rel}: {e}")),
        }
    }
    files.sort_by(|a, b| a.entry.path.cmp(&b.entry.path));
    let files = dedupe(files, &mut notes);
    notes.sort();
    let manifest = CorpusManifest { entries: files.iter().map(|f| f.entry.clone()).collect(), notes };
    Ok(Corpus { manifest, files })
}

/// Keeps the first path for each content hash; `files` must be sorted by path.
fn dedupe(files: Vec<CorpusFile>, notes: &mut Vec<String>) -> Vec<CorpusFile> {
    let mut seen = std::collections::HashMap::new();
    let mut out = Vec::with_capacity(files.len());
    for f in files {
        match seen.get(&f.entry.content_hash) {
            Some(first) => notes.push(format!("{}: duplicate of {first}", f.entry.path)),
            None => {
                seen.insert(f.entry.content_hash.clone(), f.entry.path.clone());
                out.push(f);
            }
        }
    }
    out
}

pub fn load_corpus(root: &Path) -> Result<CorpusManifest, CorpusError> {
    read_corpus(root).map(|c| c.manifest)
}
