use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use ponziscan::fingerprint::ratio_string;
use ponziscan::fomo3d::{self, parse_round_script, run_round, RoundConfig, RoundOutcome};
use ponziscan::report::{self, Format};
use ponziscan::sim::{parse_script, run_scenario, ScenarioOutcome, SchemeKind, SchemeParams};
use ponziscan::{classify_unit, parse, read_corpus, scan_contract, Event, Wei};

const EXIT_OK: u8 = 0;
const EXIT_FINDINGS: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_IO: u8 = 3;

#[derive(Parser)]
#[command(
    name = "ponziscan",
    version,
    about = "Classify Ponzi-style Solidity contracts, flag SWC patterns and simulate payouts",
    after_help = "Exit codes: 0 success, 1 analysis finished with findings, 2 usage or input error, 3 I/O error."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutFormat {
    Json,
    Csv,
    Text,
}

impl From<OutFormat> for Format {
    fn from(f: OutFormat) -> Format {
        match f {
            OutFormat::Json => Format::Json,
            OutFormat::Csv => Format::Csv,
            OutFormat::Text => Format::Text,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Switch {
    On,
    Off,
}

#[derive(Subcommand)]
enum Command {
    /// Scan a directory (or file) of .sol sources and write a corpus report.
    Scan {
        path: PathBuf,
        #[arg(long, value_enum, default_value = "json")]
        format: OutFormat,
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Worker threads for per-file analysis; never changes the output.
        #[arg(long, default_value_t = 1)]
        parallel: usize,
    },
    /// Print each file's archetype and the evidence behind it.
    Classify {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        #[arg(long, value_enum, default_value = "text")]
        format: OutFormat,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// List SWC-101/104/110 pattern findings.
    Findings {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        #[arg(long, value_enum, default_value = "text")]
        format: OutFormat,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run a scheme scenario script and print the trace and ROI table.
    Simulate {
        #[arg(value_enum, required_unless_present = "scheme_flag", conflicts_with = "scheme_flag")]
        scheme: Option<SchemeArg>,
        #[arg(long = "scheme", value_enum, id = "scheme_flag")]
        scheme_flag: Option<SchemeArg>,
        /// One action per line: `<verb> <actor> <amount>[unit] [inviter]`.
        #[arg(long)]
        script: Option<PathBuf>,
        /// Reproduce the chain payout index that never advances.
        #[arg(long, value_enum, default_value = "on")]
        faithful_bugs: Switch,
        #[arg(long, value_enum, default_value = "text")]
        format: OutFormat,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run a Fomo3D round script (`buy` / `finalize` lines).
    Fomo3d {
        #[arg(long)]
        script: Option<PathBuf>,
        /// Buys strictly above this many wei bump the airdrop tracker.
        #[arg(long, value_parser = parse_wei)]
        airdrop_threshold: Option<Wei>,
        #[arg(long, value_enum, default_value = "text")]
        format: OutFormat,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Re-render a saved JSON report in another format.
    Report {
        input: PathBuf,
        #[arg(long, value_enum, default_value = "text")]
        format: OutFormat,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SchemeArg {
    Tree,
    Chain,
    Waterfall,
    Transfer,
}

impl From<SchemeArg> for SchemeKind {
    fn from(s: SchemeArg) -> SchemeKind {
        match s {
            SchemeArg::Tree => SchemeKind::Tree,
            SchemeArg::Chain => SchemeKind::Chain,
            SchemeArg::Waterfall => SchemeKind::Waterfall,
            SchemeArg::Transfer => SchemeKind::Transfer,
        }
    }
}

fn parse_wei(s: &str) -> Result<Wei, String> {
    Wei::parse(s).map_err(|e| e.to_string())
}

/// An error with the exit code it maps to.
struct Failure(u8, String);

fn io_err(path: &Path, e: impl std::fmt::Display) -> Failure {
    Failure(EXIT_IO, format!("{}: {e}", path.display()))
}

fn input_err(e: impl std::fmt::Display) -> Failure {
    Failure(EXIT_USAGE, e.to_string())
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| io_err(path, e))
}

fn read_opt(path: Option<&PathBuf>) -> Result<String, Failure> {
    path.map(|p| read(p)).unwrap_or_else(|| Ok(String::new()))
}

fn write_out(output: Option<&PathBuf>, text: &str) -> Result<(), Failure> {
    match output {
        Some(p) => fs::write(p, text).map_err(|e| io_err(p, e)),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes()).and_then(|_| out.flush()).map_err(|e| io_err(Path::new("<stdout>"), e))
        }
    }
}

fn json_text(v: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json value serializes");
    s.push('\n');
    s
}

fn file_name(p: &Path) -> String {
    p.to_string_lossy().replace('\\', "/")
}

fn run(cli: Cli) -> Result<u8, Failure> {
    match cli.command {
        Command::Scan { path, format, output, parallel } => {
            let corpus = read_corpus(&path).map_err(|e| match e {
                ponziscan::CorpusError::EmptyCorpus(_) => input_err(e),
                ponziscan::CorpusError::Io { .. } => Failure(EXIT_IO, e.to_string()),
            })?;
            for note in &corpus.manifest.notes {
                eprintln!("note: {note}");
            }
            let summary = report::aggregate(report::scan_corpus(&corpus, parallel.max(1)));
            write_out(output.as_ref(), &report::emit(&summary, format.into()))?;
            let any = summary.per_file.iter().any(|f| !f.findings.is_empty());
            Ok(if any { EXIT_FINDINGS } else { EXIT_OK })
        }
        Command::Classify { files, format, output } => {
            let mut text = String::new();
            let mut rows = Vec::new();
            for path in &files {
                let src = read(path)?;
                let unit = parse(&src).map_err(|e| input_err(format!("{}: {e}", path.display())))?;
                let Some((contract, cls)) = classify_unit(&unit) else {
                    return Err(input_err(format!("{}: no contract found", path.display())));
                };
                if files.len() > 1 {
                    let _ = writeln!(text, "{}:", file_name(path));
                }
                let _ = writeln!(text, "{}", cls.class);
                let _ = writeln!(text, "  contract {contract} ({})", cls.confidence);
                for r in &cls.rationale {
                    let _ = writeln!(text, "  {} at {}:{}", r.feature, r.line, r.column);
                }
                rows.push(json!({ "path": file_name(path), "contract": contract, "classification": cls }));
            }
            let out = match format {
                OutFormat::Json => json_text(&json!(rows)),
                OutFormat::Csv => {
                    let mut s = String::from("path,contract,class,confidence\n");
                    for r in &rows {
                        let c = &r["classification"];
                        let _ = writeln!(
                            s,
                            "{},{},{},{}",
                            r["path"].as_str().unwrap_or_default(),
                            r["contract"].as_str().unwrap_or_default(),
                            c["class"].as_str().unwrap_or_default(),
                            c["confidence"].as_str().unwrap_or_default()
                        );
                    }
                    s
                }
                OutFormat::Text => text,
            };
            write_out(output.as_ref(), &out)?;
            Ok(EXIT_OK)
        }
        Command::Findings { files, format, output } => {
            let mut all = Vec::new();
            for path in &files {
                let src = read(path)?;
                let unit = parse(&src).map_err(|e| input_err(format!("{}: {e}", path.display())))?;
                all.extend(scan_contract(&unit).into_iter().map(|f| (file_name(path), f)));
            }
            let out = match format {
                OutFormat::Json => {
                    let rows: Vec<_> = all.iter().map(|(p, f)| json!({ "path": p, "finding": f })).collect();
                    json_text(&json!(rows))
                }
                OutFormat::Csv => {
                    let mut s = String::from("path,line,column,swc,contract,function\n");
                    for (p, f) in &all {
                        let _ = writeln!(s, "{p},{},{},{},{},{}", f.line, f.column, f.swc, f.contract, f.function);
                    }
                    s
                }
                OutFormat::Text => {
                    let mut s = String::new();
                    for (p, f) in &all {
                        let _ = writeln!(
                            s,
                            "{p}:{}:{}: {} {} in {}.{}",
                            f.line,
                            f.column,
                            f.swc,
                            f.swc.title(),
                            f.contract,
                            f.function
                        );
                        let _ = writeln!(s, "    {}", f.snippet);
                    }
                    s
                }
            };
            write_out(output.as_ref(), &out)?;
            Ok(if all.is_empty() { EXIT_OK } else { EXIT_FINDINGS })
        }
        Command::Simulate { scheme, scheme_flag, script, faithful_bugs, format, output } => {
            let kind: SchemeKind = scheme.or(scheme_flag).expect("clap requires one of them").into();
            let actions = parse_script(kind, &read_opt(script.as_ref())?).map_err(input_err)?;
            let params = SchemeParams { faithful: faithful_bugs == Switch::On, ..SchemeParams::default() };
            let outcome = run_scenario(kind, &params, &actions);
            write_out(output.as_ref(), &render_scenario(kind, &outcome, format))?;
            Ok(EXIT_OK)
        }
        Command::Fomo3d { script, airdrop_threshold, format, output } => {
            let actions = parse_round_script(&read_opt(script.as_ref())?).map_err(input_err)?;
            let mut config = RoundConfig::default();
            if let Some(t) = airdrop_threshold {
                config.airdrop_threshold = t;
            }
            let outcome = run_round(config, &actions).map_err(input_err)?;
            write_out(output.as_ref(), &render_round(&outcome, format))?;
            Ok(EXIT_OK)
        }
        Command::Report { input, format, output } => {
            let summary: report::ReportSummary =
                serde_json::from_str(&read(&input)?).map_err(|e| input_err(format!("{}: {e}", input.display())))?;
            write_out(output.as_ref(), &report::emit(&summary, format.into()))?;
            Ok(EXIT_OK)
        }
    }
}

fn trace_csv(trace: &[Event]) -> String {
    let mut s = String::from("step,kind,actor,amount,note\n");
    for e in trace {
        let _ = writeln!(s, "{},{},{},{},{}", e.step, e.kind, e.actor, e.amount, e.note.as_deref().unwrap_or_default());
    }
    s
}

fn render_scenario(kind: SchemeKind, out: &ScenarioOutcome, format: OutFormat) -> String {
    let roi_rows: Vec<_> = out
        .roi
        .rows
        .iter()
        .map(|(actor, row)| {
            json!({
                "actor": actor,
                "totalIn": row.total_in,
                "totalOut": row.total_out,
                "roi": row.roi().map(|r| ratio_string(&r)),
            })
        })
        .collect();
    match format {
        OutFormat::Json => json_text(&json!({
            "scheme": kind.name(),
            "trace": out.trace,
            "roi": roi_rows,
            "ownerGain": out.roi.owner_gain,
            "balance": out.state.balance(),
            "ledger": out.state.ledger_residual(),
        })),
        OutFormat::Csv => {
            let mut s = trace_csv(&out.trace);
            s.push_str("\nactor,totalIn,totalOut,roi\n");
            for (actor, row) in &out.roi.rows {
                let roi = row.roi().map(|r| ratio_string(&r)).unwrap_or_default();
                let _ = writeln!(s, "{actor},{},{},{roi}", row.total_in, row.total_out);
            }
            s
        }
        OutFormat::Text => {
            let mut s = format!("scheme: {kind}\n");
            for e in &out.trace {
                let _ = writeln!(s, "{e}");
            }
            let _ = writeln!(s, "\n{:<10} {:>26} {:>26} {:>8}", "actor", "in (wei)", "out (wei)", "roi");
            for (actor, row) in &out.roi.rows {
                let roi = row.roi().map(|r| ratio_string(&r)).unwrap_or_else(|| "-".into());
                let _ = writeln!(s, "{:<10} {:>26} {:>26} {:>8}", actor.as_str(), row.total_in, row.total_out, roi);
            }
            let _ = writeln!(s, "owner gain: {} wei", out.roi.owner_gain);
            let _ = writeln!(s, "contract balance: {} wei", out.state.balance());
            let ledger = out.state.ledger_residual();
            if !ledger.is_zero() {
                let _ = writeln!(s, "unwithdrawn credits: {ledger} wei");
            }
            s
        }
    }
}

fn render_round(out: &RoundOutcome, format: OutFormat) -> String {
    let s = &out.state;
    let state = json!({
        "pot": s.pot,
        "dividendPool": s.dividend_pool,
        "referralCredits": s.dividends,
        "teamFund": s.team_fund,
        "potSwap": s.pot_swap,
        "airdropPot": s.airdrop_pot,
        "deadline": s.deadline,
        "airDropTracker": s.air_drop_tracker,
        "lastBuyer": s.last_buyer,
        "roundOver": s.round_over,
    });
    match format {
        OutFormat::Json => json_text(&json!({ "trace": out.trace, "state": state })),
        OutFormat::Csv => trace_csv(&out.trace),
        OutFormat::Text => {
            let mut t = String::new();
            for e in &out.trace {
                let _ = writeln!(t, "{e}");
            }
            let _ = writeln!(t, "\npot: {} wei", s.pot);
            let _ = writeln!(t, "dividend pool: {} wei", s.dividend_pool);
            let _ = writeln!(
                t,
                "team fund: {} wei, pot swap: {} wei, airdrop pot: {} wei",
                s.team_fund, s.pot_swap, s.airdrop_pot
            );
            let _ = writeln!(t, "airdrop tracker: {}/1000", s.air_drop_tracker);
            let last = s.last_buyer.as_ref().map(|a| a.to_string()).unwrap_or_else(|| "-".into());
            let _ = writeln!(t, "deadline: {} (max round {} s), last buyer: {last}", s.deadline, fomo3d::ROUND_MAX);
            let _ = writeln!(t, "round over: {}", s.round_over);
            t
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { EXIT_OK });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(Failure(code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}
