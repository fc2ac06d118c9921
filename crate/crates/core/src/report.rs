//! Per-file results, corpus aggregates and their JSON, CSV and text renderings.

use std::fmt::Write as _;
use std::str::FromStr;

use num_rational::BigRational;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifier::{classify, Classification, SchemeClass};
use crate::corpus::{content_hash, corpus_file, Corpus, CorpusFile};
use crate::fingerprint::{extract_fingerprint, ContractFingerprint};
use crate::parser::parse;
use crate::sim::Wei;
use crate::vuln::{findings_for, sort_findings, Finding, Swc};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ReportError {
    #[error("unsupported format `{0}` (expected json, csv or text)")]
    UnsupportedFormat(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PayoutOrderBias {
    InitiatorFirst,
    EarlyFirst,
    None,
}

impl PayoutOrderBias {
    pub fn name(self) -> &'static str {
        match self {
            PayoutOrderBias::InitiatorFirst => "initiator-first",
            PayoutOrderBias::EarlyFirst => "early-first",
            PayoutOrderBias::None => "none",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Characteristics {
    pub has_min_deposit_guard: bool,
    pub min_deposit_wei: Option<Wei>,
    pub has_owner_fee: bool,
    pub payout_order_bias: PayoutOrderBias,
}

impl Characteristics {
    pub fn from_fingerprint(fp: &ContractFingerprint) -> Self {
        let payout_order_bias = if fp.owner_fee.0 {
            PayoutOrderBias::InitiatorFirst
        } else if fp.payout_fifo_multiplier.0 || fp.payout_pro_rata {
            PayoutOrderBias::EarlyFirst
        } else {
            PayoutOrderBias::None
        };
        Characteristics {
            has_min_deposit_guard: fp.min_deposit_guard.0,
            min_deposit_wei: fp.min_deposit_guard.1.clone().map(Wei::from),
            has_owner_fee: fp.owner_fee.0,
            payout_order_bias,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct FileResult {
    pub path: String,
    pub content_hash: String,
    /// Set when the file could not be parsed; everything below is then empty.
    pub parse_error: Option<String>,
    /// The contract whose classification stands for the file.
    pub contract: Option<String>,
    pub classification: Option<Classification>,
    pub findings: Vec<Finding>,
    pub characteristics: Option<Characteristics>,
}

impl FileResult {
    pub fn parsed(&self) -> bool {
        self.parse_error.is_none()
    }

    pub fn class(&self) -> Option<SchemeClass> {
        self.classification.as_ref().map(|c| c.class)
    }

    pub fn count(&self, swc: Swc) -> usize {
        self.findings.iter().filter(|f| f.swc == swc).count()
    }

    fn failed(path: &str, hash: String, error: String) -> Self {
        FileResult {
            path: path.to_string(),
            content_hash: hash,
            parse_error: Some(error),
            contract: None,
            classification: None,
            findings: Vec::new(),
            characteristics: None,
        }
    }
}

/// Parses, fingerprints, classifies and scans one file. Never fails: a parse
/// error is recorded on the result.
pub fn analyze_file(path: &str, source: &str) -> FileResult {
    let hash = content_hash(source.as_bytes());
    let unit = match parse(source) {
        Ok(u) => u,
        Err(e) => return FileResult::failed(path, hash, e.to_string()),
    };
    let mut findings = Vec::new();
    let mut best: Option<(&str, Classification, ContractFingerprint)> = None;
    for c in &unit.contracts {
        let fp = extract_fingerprint(c);
        findings.extend(findings_for(c, &fp));
        let cls = classify(&fp);
        if best.as_ref().is_none_or(|(_, b, _)| cls.class.precedence() < b.class.precedence()) {
            best = Some((&c.name, cls, fp));
        }
    }
    sort_findings(&mut findings);
    let (contract, classification, characteristics) = match best {
        Some((name, cls, fp)) => (Some(name.to_string()), cls, Characteristics::from_fingerprint(&fp)),
        // a file with no contracts at all
        None => (
            None,
            classify(&ContractFingerprint::default()),
            Characteristics::from_fingerprint(&ContractFingerprint::default()),
        ),
    };
    FileResult {
        path: path.to_string(),
        content_hash: hash,
        parse_error: None,
        contract,
        classification: Some(classification),
        findings,
        characteristics: Some(characteristics),
    }
}

fn analyze_corpus_file(f: &CorpusFile) -> FileResult {
    match &f.source {
        Some(src) => analyze_file(&f.entry.path, src),
        None => FileResult::failed(&f.entry.path, f.entry.content_hash.clone(), "file is not valid UTF-8".into()),
    }
}

/// Analyzes every corpus file on up to `parallel` threads; results keep manifest order.
pub fn scan_corpus(corpus: &Corpus, parallel: usize) -> Vec<FileResult> {
    if parallel <= 1 {
        return corpus.files.iter().map(analyze_corpus_file).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new().num_threads(parallel).build().expect("thread pool");
    pool.install(|| corpus.files.par_iter().map(analyze_corpus_file).collect())
}

/// Analyzes in-memory sources as if they formed a corpus.
pub fn scan_sources<'a>(files: impl IntoIterator<Item = (&'a str, &'a str)>) -> Vec<FileResult> {
    let mut files: Vec<CorpusFile> = files.into_iter().map(|(p, s)| corpus_file(p.to_string(), s.as_bytes())).collect();
    files.sort_by(|a, b| a.entry.path.cmp(&b.entry.path));
    files.iter().map(analyze_corpus_file).collect()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "PascalCase")]
pub struct ClassCounts {
    pub tree: usize,
    pub chain: usize,
    pub waterfall: usize,
    pub transfer: usize,
    pub unknown: usize,
}

impl ClassCounts {
    pub fn get(&self, class: SchemeClass) -> usize {
        match class {
            SchemeClass::Tree => self.tree,
            SchemeClass::Chain => self.chain,
            SchemeClass::Waterfall => self.waterfall,
            SchemeClass::Transfer => self.transfer,
            SchemeClass::Unknown => self.unknown,
        }
    }

    fn bump(&mut self, class: SchemeClass) {
        let slot = match class {
            SchemeClass::Tree => &mut self.tree,
            SchemeClass::Chain => &mut self.chain,
            SchemeClass::Waterfall => &mut self.waterfall,
            SchemeClass::Transfer => &mut self.transfer,
            SchemeClass::Unknown => &mut self.unknown,
        };
        *slot += 1;
    }

    pub fn total(&self) -> usize {
        SchemeClass::ALL.iter().map(|c| self.get(*c)).sum()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SwcCounts {
    #[serde(rename = "SWC-101")]
    pub swc101: usize,
    #[serde(rename = "SWC-104")]
    pub swc104: usize,
    #[serde(rename = "SWC-110")]
    pub swc110: usize,
}

impl SwcCounts {
    pub fn get(&self, swc: Swc) -> usize {
        match swc {
            Swc::Swc101 => self.swc101,
            Swc::Swc104 => self.swc104,
            Swc::Swc110 => self.swc110,
        }
    }

    fn add(&mut self, swc: Swc, n: usize) {
        match swc {
            Swc::Swc101 => self.swc101 += n,
            Swc::Swc104 => self.swc104 += n,
            Swc::Swc110 => self.swc110 += n,
        }
    }
}

/// An exact fraction with a fixed four-decimal rendering.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fraction {
    pub numerator: usize,
    pub denominator: usize,
    /// `None` when the denominator is zero.
    pub value: Option<String>,
}

impl Fraction {
    pub fn new(numerator: usize, denominator: usize) -> Self {
        let value = (denominator > 0).then(|| fixed4(&BigRational::new(numerator.into(), denominator.into())));
        Fraction { numerator, denominator, value }
    }
}

/// Round-half-up to four decimals, exactly.
fn fixed4(r: &BigRational) -> String {
    let scaled = r * BigRational::from_integer(10_000.into()) + BigRational::new(1.into(), 2.into());
    let n = scaled.floor().to_integer();
    let (int, frac) = (&n / 10_000, &n % 10_000);
    format!("{int}.{frac:0>4}")
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct BiasCounts {
    pub initiator_first: usize,
    pub early_first: usize,
    pub none: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ReportSummary {
    pub schema_version: u32,
    pub total_files: usize,
    pub parsed_files: usize,
    pub counts_by_class: ClassCounts,
    pub counts_by_swc: SwcCounts,
    /// Among files classified as a Ponzi archetype.
    pub min_deposit_prevalence: Fraction,
    pub owner_fee_prevalence: Fraction,
    pub payout_order_bias: BiasCounts,
    pub per_file: Vec<FileResult>,
}

pub fn aggregate(results: Vec<FileResult>) -> ReportSummary {
    let mut by_class = ClassCounts::default();
    let mut by_swc = SwcCounts::default();
    let mut bias = BiasCounts::default();
    let (mut ponzi, mut guarded, mut fee) = (0, 0, 0);
    for r in &results {
        for swc in Swc::ALL {
            by_swc.add(swc, r.count(swc));
        }
        let (Some(class), Some(ch)) = (r.class(), r.characteristics.as_ref()) else { continue };
        by_class.bump(class);
        if !class.is_ponzi() {
            continue;
        }
        ponzi += 1;
        guarded += usize::from(ch.has_min_deposit_guard);
        fee += usize::from(ch.has_owner_fee);
        match ch.payout_order_bias {
            PayoutOrderBias::InitiatorFirst => bias.initiator_first += 1,
            PayoutOrderBias::EarlyFirst => bias.early_first += 1,
            PayoutOrderBias::None => bias.none += 1,
        }
    }
    ReportSummary {
        schema_version: SCHEMA_VERSION,
        total_files: results.len(),
        parsed_files: results.iter().filter(|r| r.parsed()).count(),
        counts_by_class: by_class,
        counts_by_swc: by_swc,
        min_deposit_prevalence: Fraction::new(guarded, ponzi),
        owner_fee_prevalence: Fraction::new(fee, ponzi),
        payout_order_bias: bias,
        per_file: results,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
    Text,
}

impl FromStr for Format {
    type Err = ReportError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            "text" | "txt" => Ok(Format::Text),
            _ => Err(ReportError::UnsupportedFormat(s.to_string())),
        }
    }
}

pub fn emit(summary: &ReportSummary, format: Format) -> String {
    match format {
        Format::Json => emit_json(summary),
        Format::Csv => emit_csv(summary),
        Format::Text => emit_text(summary),
    }
}

pub fn emit_json(summary: &ReportSummary) -> String {
    let mut s = serde_json::to_string_pretty(summary).expect("summary serializes");
    s.push('\n');
    s
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

/// A `metric,value` table, a blank line, then one row per file.
pub fn emit_csv(summary: &ReportSummary) -> String {
    let mut w = csv::WriterBuilder::new().flexible(true).from_writer(Vec::new());
    let mut row = |cells: &[String]| w.write_record(cells).expect("writing to memory");
    row(&["metric".into(), "value".into()]);
    row(&["schemaVersion".into(), summary.schema_version.to_string()]);
    row(&["totalFiles".into(), summary.total_files.to_string()]);
    row(&["parsedFiles".into(), summary.parsed_files.to_string()]);
    for c in SchemeClass::ALL {
        row(&[c.name().into(), summary.counts_by_class.get(c).to_string()]);
    }
    for s in Swc::ALL {
        row(&[s.tag().into(), summary.counts_by_swc.get(s).to_string()]);
    }
    row(&["minDepositPrevalence".into(), opt(summary.min_deposit_prevalence.value.as_ref())]);
    row(&["ownerFeePrevalence".into(), opt(summary.owner_fee_prevalence.value.as_ref())]);
    row(&["initiatorFirst".into(), summary.payout_order_bias.initiator_first.to_string()]);
    row(&["earlyFirst".into(), summary.payout_order_bias.early_first.to_string()]);
    row(&[]);
    let header = [
        "path",
        "contentHash",
        "parsedOk",
        "contract",
        "class",
        "confidence",
        "SWC-101",
        "SWC-104",
        "SWC-110",
        "hasMinDepositGuard",
        "minDepositWei",
        "hasOwnerFee",
        "payoutOrderBias",
    ];
    row(&header.map(String::from));
    for f in &summary.per_file {
        let ch = f.characteristics.as_ref();
        row(&[
            f.path.clone(),
            f.content_hash.clone(),
            f.parsed().to_string(),
            opt(f.contract.as_ref()),
            opt(f.class()),
            opt(f.classification.as_ref().map(|c| c.confidence)),
            f.count(Swc::Swc101).to_string(),
            f.count(Swc::Swc104).to_string(),
            f.count(Swc::Swc110).to_string(),
            opt(ch.map(|c| c.has_min_deposit_guard)),
            opt(ch.and_then(|c| c.min_deposit_wei.as_ref())),
            opt(ch.map(|c| c.has_owner_fee)),
            opt(ch.map(|c| c.payout_order_bias.name())),
        ]);
    }
    String::from_utf8(w.into_inner().expect("flush to memory")).expect("csv output is UTF-8")
}

/// Summary first, then one `==== path ====` block per file listing its findings.
pub fn emit_text(summary: &ReportSummary) -> String {
    let mut out = String::new();
    let w = &mut out;
    let _ = writeln!(w, "ponziscan report (schema {})", summary.schema_version);
    let _ = writeln!(w, "files: {} total, {} parsed", summary.total_files, summary.parsed_files);
    let classes: Vec<String> =
        SchemeClass::ALL.iter().map(|c| format!("{} {}", c, summary.counts_by_class.get(*c))).collect();
    let _ = writeln!(w, "classes: {}", classes.join(", "));
    let swcs: Vec<String> = Swc::ALL.iter().map(|s| format!("{} {}", s, summary.counts_by_swc.get(*s))).collect();
    let _ = writeln!(w, "findings: {}", swcs.join(", "));
    for (label, f) in
        [("min-deposit guard", &summary.min_deposit_prevalence), ("owner fee", &summary.owner_fee_prevalence)]
    {
        let _ = writeln!(
            w,
            "{label}: {}/{} Ponzi files ({})",
            f.numerator,
            f.denominator,
            f.value.as_deref().unwrap_or("n/a")
        );
    }
    let b = summary.payout_order_bias;
    let _ = writeln!(
        w,
        "payout order: initiator-first {}, early-first {}, none {}",
        b.initiator_first, b.early_first, b.none
    );

    for f in &summary.per_file {
        let _ = writeln!(w, "\n==== {} ====", f.path);
        let _ = writeln!(w, "sha256: {}", f.content_hash);
        if let Some(e) = &f.parse_error {
            let _ = writeln!(w, "parse error: {e}");
            continue;
        }
        if let Some(c) = &f.classification {
            let _ = writeln!(w, "class: {} ({}) contract {}", c.class, c.confidence, opt(f.contract.as_ref()));
            for r in &c.rationale {
                let _ = writeln!(w, "  {} at {}:{}", r.feature, r.line, r.column);
            }
        }
        if let Some(ch) = &f.characteristics {
            let min = ch.min_deposit_wei.as_ref().map(|m| format!(" ({m} wei)")).unwrap_or_default();
            let _ = writeln!(
                w,
                "min-deposit guard: {}{min}; owner fee: {}; payout order: {}",
                ch.has_min_deposit_guard,
                ch.has_owner_fee,
                ch.payout_order_bias.name()
            );
        }
        if f.findings.is_empty() {
            let _ = writeln!(w, "The analysis was completed successfully. No issues were detected.");
        }
        for finding in &f.findings {
            let _ = writeln!(w, "---- {} {} ----", finding.swc, finding.swc.title());
            let _ = writeln!(w, "Contract: {}", finding.contract);
            let _ = writeln!(w, "Function name: {}", finding.function);
            let _ = writeln!(w, "In file: {}:{}:{}", f.path, finding.line, finding.column);
            let _ = writeln!(w, "{}", finding.snippet);
            let _ = writeln!(w, "{}", finding.message);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    macro_rules! fixture {
        ($name:literal) => {
            ($name, include_str!(concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/corpus/", $name)))
        };
    }

    fn all_fixtures() -> Vec<(&'static str, &'static str)> {
        vec![
            fixture!("etheramid.sol"),
            fixture!("crystal_doubler.sol"),
            fixture!("ponzico.sol"),
            fixture!("ponzi_scheme.sol"),
            fixture!("fomo3d_airdrop.sol"),
            fixture!("simple_token.sol"),
            fixture!("pyramid_thirds.sol"),
            fixture!("steady_doubler.sol"),
            fixture!("broken_unbalanced.sol"),
            fixture!("broken_charset.sol"),
        ]
    }

    #[test]
    fn etheramid_result() {
        let (p, s) = fixture!("etheramid.sol");
        let r = analyze_file(p, s);
        assert_eq!(r.class(), Some(SchemeClass::Tree));
        assert!(r.count(Swc::Swc104) >= 3);
    }

    #[test]
    fn broken_and_benign() {
        let (p, s) = fixture!("broken_unbalanced.sol");
        let r = analyze_file(p, s);
        assert!(r.parse_error.is_some() && r.findings.is_empty() && r.classification.is_none());
        let (p, s) = fixture!("simple_token.sol");
        let r = analyze_file(p, s);
        assert_eq!(r.class(), Some(SchemeClass::Unknown));
        assert_eq!(r.count(Swc::Swc104), 0);
    }

    #[test]
    fn one_of_each_class() {
        let files = all_fixtures();
        let summary = aggregate(scan_sources(files[..4].iter().copied().chain([files[5]])));
        assert_eq!(summary.counts_by_class, ClassCounts { tree: 1, chain: 1, waterfall: 1, transfer: 1, unknown: 1 });
        assert_eq!(summary.counts_by_class.total(), summary.parsed_files);
    }

    #[test]
    fn empty_summary() {
        let s = aggregate(Vec::new());
        assert_eq!((s.total_files, s.parsed_files), (0, 0));
        assert_eq!(s.counts_by_class, ClassCounts::default());
        assert_eq!(s.counts_by_swc, SwcCounts::default());
        assert_eq!(s.min_deposit_prevalence.value, None);
    }

    #[test]
    fn swc_counts_are_additive() {
        let results = scan_sources(all_fixtures());
        let summary = aggregate(results.clone());
        assert_eq!(summary.total_files, 10);
        assert_eq!(summary.parsed_files, 8);
        for swc in Swc::ALL {
            let per_file: usize = results.iter().map(|r| r.count(swc)).sum();
            assert_eq!(summary.counts_by_swc.get(swc), per_file);
            let (a, b) = results.split_at(4);
            let split = aggregate(a.to_vec()).counts_by_swc.get(swc) + aggregate(b.to_vec()).counts_by_swc.get(swc);
            assert_eq!(split, per_file);
        }
    }

    #[test]
    fn emission_is_deterministic() {
        let summary = aggregate(scan_sources(all_fixtures()));
        for format in [Format::Json, Format::Csv, Format::Text] {
            assert_eq!(emit(&summary, format), emit(&aggregate(scan_sources(all_fixtures())), format));
        }
    }

    #[test]
    fn csv_and_text_shape() {
        let summary = aggregate(scan_sources([fixture!("etheramid.sol")]));
        let csv = emit(&summary, Format::Csv);
        assert!(csv.lines().any(|l| l == "Tree,1"));
        assert!(csv.lines().any(|l| l == "SWC-104,3"));
        let text = emit(&summary, Format::Text);
        let last_header = text.lines().rfind(|l| l.starts_with("==== ")).unwrap();
        assert_eq!(last_header, "==== etheramid.sol ====");
    }

    #[test]
    fn json_key_order() {
        let summary = aggregate(scan_sources(all_fixtures()));
        let json = emit(&summary, Format::Json);
        let pos = |k: &str| json.find(&format!("\"{k}\"")).unwrap();
        assert!(pos("Tree") < pos("Chain") && pos("Chain") < pos("Waterfall"));
        assert!(pos("Waterfall") < pos("Transfer") && pos("Transfer") < pos("Unknown"));
        assert!(pos("SWC-101") < pos("SWC-104") && pos("SWC-104") < pos("SWC-110"));
        let back: ReportSummary = serde_json::from_str(&json).unwrap();
        assert_eq!(back.counts_by_class, summary.counts_by_class);
    }

    #[test]
    fn format_names() {
        assert_eq!("JSON".parse::<Format>(), Ok(Format::Json));
        assert_eq!("xml".parse::<Format>(), Err(ReportError::UnsupportedFormat("xml".into())));
    }

    #[test]
    fn fixed_precision() {
        assert_eq!(Fraction::new(3, 4).value.as_deref(), Some("0.7500"));
        assert_eq!(Fraction::new(2, 3).value.as_deref(), Some("0.6667"));
        assert_eq!(Fraction::new(1, 1).value.as_deref(), Some("1.0000"));
    }

    #[test]
    fn characteristics_on_fixtures() {
        let results = scan_sources(all_fixtures());
        let get = |p: &str| results.iter().find(|r| r.path == p).unwrap().characteristics.clone().unwrap();
        assert_eq!(get("crystal_doubler.sol").min_deposit_wei, Some(Wei::finney(500)));
        assert_eq!(get("ponzico.sol").payout_order_bias, PayoutOrderBias::InitiatorFirst);
        assert_eq!(get("simple_token.sol").payout_order_bias, PayoutOrderBias::None);
    }
}
