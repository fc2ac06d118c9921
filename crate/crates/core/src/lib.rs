//! Static analysis and payout simulation for Ponzi-style Solidity contracts.
//!
//! The pipeline is `parse` → `extract_fingerprint` → `classify` / `scan_contract`,
//! with `report` tying it together over a corpus. `sim` and `fomo3d` model the
//! money flow of the archetypes exactly in wei.

pub mod ast;
pub mod classifier;
pub mod corpus;
pub mod fingerprint;
pub mod fold;
pub mod fomo3d;
pub mod lexer;
pub mod parser;
pub mod report;
pub mod sim;
pub mod vuln;

pub use ast::{ContractDef, SourceUnit, Span};
pub use classifier::{classify, classify_unit, Classification, Confidence, RationaleItem, SchemeClass};
pub use corpus::{load_corpus, read_corpus, Corpus, CorpusError, CorpusManifest, ManifestEntry};
pub use fingerprint::{extract_fingerprint, ContractFingerprint, Feature};
pub use parser::{parse, ParseError};
pub use report::{aggregate, analyze_file, emit, scan_corpus, FileResult, Format, ReportError, ReportSummary};
pub use sim::{ActorId, Event, EventKind, RoiTable, Wei};
pub use vuln::{scan_contract, Finding, Swc};
