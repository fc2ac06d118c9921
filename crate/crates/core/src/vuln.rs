//! Pattern detectors for unchecked sends (SWC-104), overflow-prone
//! arithmetic (SWC-101) and assertion/state anomalies (SWC-110).

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::ast::{walk_exprs, ContractDef, SourceUnit, Span};
use crate::fingerprint::{extract_fingerprint, ContractFingerprint};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Swc {
    #[serde(rename = "SWC-101")]
    Swc101,
    #[serde(rename = "SWC-104")]
    Swc104,
    #[serde(rename = "SWC-110")]
    Swc110,
}

impl Swc {
    pub const ALL: [Swc; 3] = [Swc::Swc101, Swc::Swc104, Swc::Swc110];

    pub fn tag(self) -> &'static str {
        match self {
            Swc::Swc101 => "SWC-101",
            Swc::Swc104 => "SWC-104",
            Swc::Swc110 => "SWC-110",
        }
    }

    pub fn title(self) -> &'static str {
        match self {
            Swc::Swc101 => "Integer Overflow and Underflow",
            Swc::Swc104 => "Unchecked Call Return Value",
            Swc::Swc110 => "Assert Violation",
        }
    }

    pub fn message(self) -> &'static str {
        match self {
            Swc::Swc101 => {
                "Arithmetic on a value derived from msg.value or contract storage is not bounds-checked \
                 and can wrap around. Check the operands before the update or use a safe-math helper."
            }
            Swc::Swc104 => {
                "The return value of a message call is not checked. Execution resumes even if the \
                 transfer failed. Wrap the call in require() or test its result."
            }
            Swc::Swc110 => {
                "(heuristic) An assertion or an unbounded dynamic-array index can fail at runtime, \
                 leaving the contract in an unexpected state. Bound the index by the array length."
            }
        }
    }
}

impl fmt::Display for Swc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Finding {
    pub swc: Swc,
    pub contract: String,
    pub function: String,
    pub line: u32,
    pub column: u32,
    pub snippet: String,
    pub message: String,
    #[serde(skip)]
    pub span: Span,
}

impl Finding {
    fn new(swc: Swc, contract: &ContractDef, function: &str, span: Span) -> Self {
        Finding {
            swc,
            contract: contract.name.clone(),
            function: function.to_string(),
            line: span.line,
            column: span.column,
            snippet: contract.text(span).to_string(),
            message: swc.message().to_string(),
            span,
        }
    }

    pub fn sort_key(&self) -> (u32, u32, Swc) {
        (self.line, self.column, self.swc)
    }
}

pub fn check_unchecked_send(contract: &ContractDef) -> Vec<Finding> {
    unchecked_send(contract, &extract_fingerprint(contract))
}

pub fn check_overflow_risk(contract: &ContractDef) -> Vec<Finding> {
    overflow_risk(contract, &extract_fingerprint(contract))
}

pub fn check_state_anomaly(contract: &ContractDef) -> Vec<Finding> {
    state_anomaly(contract, &extract_fingerprint(contract))
}

/// All findings of every contract in `unit`, ordered by (line, column, swc).
pub fn scan_contract(unit: &SourceUnit) -> Vec<Finding> {
    let mut out = Vec::new();
    for c in &unit.contracts {
        out.extend(findings_for(c, &extract_fingerprint(c)));
    }
    sort_findings(&mut out);
    out
}

/// Findings for a contract whose fingerprint is already known.
pub fn findings_for(contract: &ContractDef, fp: &ContractFingerprint) -> Vec<Finding> {
    let mut out = unchecked_send(contract, fp);
    out.extend(overflow_risk(contract, fp));
    out.extend(state_anomaly(contract, fp));
    sort_findings(&mut out);
    out
}

pub fn sort_findings(findings: &mut [Finding]) {
    findings.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()).then_with(|| a.contract.cmp(&b.contract)));
}

fn unchecked_send(contract: &ContractDef, fp: &ContractFingerprint) -> Vec<Finding> {
    fp.send_sites
        .iter()
        .filter(|s| !s.checked)
        .map(|s| Finding::new(Swc::Swc104, contract, &s.function, s.span))
        .collect()
}

fn overflow_risk(contract: &ContractDef, fp: &ContractFingerprint) -> Vec<Finding> {
    fp.unguarded_arith_sites.iter().map(|s| Finding::new(Swc::Swc101, contract, &s.function, s.span)).collect()
}

fn state_anomaly(contract: &ContractDef, fp: &ContractFingerprint) -> Vec<Finding> {
    let mut out: Vec<Finding> =
        fp.dynamic_index_sites.iter().map(|s| Finding::new(Swc::Swc110, contract, &s.function, s.span)).collect();
    for body in contract.bodies() {
        walk_exprs(body.stmts, &mut |e| {
            if matches!(e.as_named_call(), Some(("assert", _))) {
                out.push(Finding::new(Swc::Swc110, contract, &body.name, e.span));
            }
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse;

    macro_rules! fixture {
        ($name:literal) => {
            include_str!(concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/corpus/", $name))
        };
    }

    fn count(src: &str, swc: Swc) -> usize {
        scan_contract(&parse(src).unwrap()).iter().filter(|f| f.swc == swc).count()
    }

    fn snippets(src: &str, swc: Swc) -> Vec<String> {
        scan_contract(&parse(src).unwrap()).into_iter().filter(|f| f.swc == swc).map(|f| f.snippet).collect()
    }

    #[test]
    fn etheramid_unchecked_sends() {
        assert_eq!(
            snippets(fixture!("etheramid.sol"), Swc::Swc104),
            ["msg.sender.send(msg.value)", "next.send(toSend)", "next.send(rest)"]
        );
    }

    #[test]
    fn ponzi_scheme_findings() {
        let src = fixture!("ponzi_scheme.sol");
        assert_eq!(snippets(src, Swc::Swc104), ["lastDepositor.send(msg.value)"]);
        assert_eq!(snippets(src, Swc::Swc101), ["nextAmount = msg.value * 2", "round = round + 1"]);
    }

    #[test]
    fn ponzico_has_no_unchecked_send() {
        assert_eq!(count(fixture!("ponzico.sol"), Swc::Swc104), 0);
        assert_eq!(count(fixture!("ponzico.sol"), Swc::Swc110), 0);
    }

    // Hand-applied rule counts for each fixture.
    #[test]
    fn golden_counts() {
        let table = [
            (fixture!("etheramid.sol"), [2, 3, 0]),
            (fixture!("crystal_doubler.sol"), [6, 1, 7]),
            (fixture!("ponzico.sol"), [4, 0, 0]),
            (fixture!("ponzi_scheme.sol"), [2, 1, 0]),
            (fixture!("simple_token.sol"), [0, 0, 0]),
        ];
        for (src, expected) in table {
            let got = Swc::ALL.map(|s| count(src, s));
            assert_eq!(got, expected, "{}", &src[..60]);
        }
    }

    #[test]
    fn small_examples() {
        let c = |body: &str| {
            format!("contract A {{ uint[] a; uint total; uint Balance; function f() payable {{ {body} }} }}")
        };
        assert_eq!(count(&c("uint Amount = msg.value; Balance += Amount;"), Swc::Swc101), 1);
        assert_eq!(count(&c("uint x = 2 + 3;"), Swc::Swc101), 0);
        assert_eq!(count(&c("if (!msg.sender.send(1)) throw;"), Swc::Swc104), 0);
        assert_eq!(count(&c("uint i = 1; require(i < a.length); a[i] = 1;"), Swc::Swc110), 0);
        assert_eq!(snippets(&c("assert(total > 0);"), Swc::Swc110), ["assert(total > 0)"]);
        assert!(scan_contract(&parse("contract A { }").unwrap()).is_empty());
    }

    #[test]
    fn snippets_carry_their_pattern() {
        for src in [
            fixture!("etheramid.sol"),
            fixture!("crystal_doubler.sol"),
            fixture!("ponzico.sol"),
            fixture!("ponzi_scheme.sol"),
            fixture!("pyramid_thirds.sol"),
            fixture!("steady_doubler.sol"),
        ] {
            let unit = parse(src).unwrap();
            let findings = scan_contract(&unit);
            for f in &findings {
                let ok = match f.swc {
                    Swc::Swc104 => f.snippet.contains(".send(") || f.snippet.contains(".transfer("),
                    Swc::Swc101 => f.snippet.contains(['+', '*']),
                    Swc::Swc110 => f.snippet.contains("assert") || f.snippet.contains('['),
                };
                assert!(ok, "{f:?}");
            }
            let mut sorted = findings.clone();
            sort_findings(&mut sorted);
            assert_eq!(sorted, findings);
            assert_eq!(scan_contract(&unit), findings);
        }
    }
}
