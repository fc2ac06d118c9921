//! Fingerprint to archetype, with the evidence that decided it.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::ast::{SourceUnit, Span};
use crate::fingerprint::{extract_fingerprint, ContractFingerprint, Feature};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SchemeClass {
    Tree,
    Chain,
    Waterfall,
    Transfer,
    Unknown,
}

impl SchemeClass {
    /// Report order.
    pub const ALL: [SchemeClass; 5] =
        [SchemeClass::Tree, SchemeClass::Chain, SchemeClass::Waterfall, SchemeClass::Transfer, SchemeClass::Unknown];

    pub fn is_ponzi(self) -> bool {
        self != SchemeClass::Unknown
    }

    /// Rule order: lower wins when several rules fire.
    pub fn precedence(self) -> u8 {
        match self {
            SchemeClass::Tree => 0,
            SchemeClass::Transfer => 1,
            SchemeClass::Chain => 2,
            SchemeClass::Waterfall => 3,
            SchemeClass::Unknown => 4,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SchemeClass::Tree => "Tree",
            SchemeClass::Chain => "Chain",
            SchemeClass::Waterfall => "Waterfall",
            SchemeClass::Transfer => "Transfer",
            SchemeClass::Unknown => "Unknown",
        }
    }
}

impl fmt::Display for SchemeClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SchemeClass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "tree" => Ok(SchemeClass::Tree),
            "chain" => Ok(SchemeClass::Chain),
            // the two names are used interchangeably
            "waterfall" | "cascade" => Ok(SchemeClass::Waterfall),
            "transfer" | "handover" => Ok(SchemeClass::Transfer),
            "unknown" => Ok(SchemeClass::Unknown),
            other => Err(format!("unknown scheme class `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Confidence {
    Definite,
    Heuristic,
}

impl fmt::Display for Confidence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Confidence::Definite => "definite",
            Confidence::Heuristic => "heuristic",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RationaleItem {
    pub feature: String,
    pub line: u32,
    pub column: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Classification {
    pub class: SchemeClass,
    pub confidence: Confidence,
    pub rationale: Vec<RationaleItem>,
}

/// The rules, in precedence order, with the features each one needs.
const RULES: [(SchemeClass, [Feature; 2]); 4] = [
    (SchemeClass::Tree, [Feature::ParentLinkMapping, Feature::ParentWalk]),
    (SchemeClass::Transfer, [Feature::SingleForward, Feature::EntryFeeDoubling]),
    (SchemeClass::Chain, [Feature::InvestorArray, Feature::FifoMultiplier]),
    (SchemeClass::Waterfall, [Feature::InvestorArray, Feature::ProRata]),
];

fn has(fp: &ContractFingerprint, feature: Feature) -> bool {
    match feature {
        Feature::ParentLinkMapping => fp.has_parent_link_mapping,
        Feature::InvestorArray => fp.has_investor_array,
        Feature::SingleLastDepositor => fp.has_single_last_depositor,
        Feature::ParentWalk => fp.payout_parent_walk,
        Feature::FifoMultiplier => fp.payout_fifo_multiplier.0,
        Feature::ProRata => fp.payout_pro_rata,
        Feature::SingleForward => fp.payout_single_forward,
        Feature::EntryFeeDoubling => fp.entry_fee_doubling,
        Feature::MinDepositGuard => fp.min_deposit_guard.0,
        Feature::OwnerFee => fp.owner_fee.0,
    }
}

fn fires(fp: &ContractFingerprint, class: SchemeClass) -> bool {
    let Some((_, needs)) = RULES.iter().find(|(c, _)| *c == class) else { return false };
    let transfer_storage = class != SchemeClass::Transfer || fp.has_single_last_depositor;
    transfer_storage && needs.iter().all(|f| has(fp, *f))
}

pub fn classify(fp: &ContractFingerprint) -> Classification {
    let fired: Vec<SchemeClass> = RULES.iter().map(|(c, _)| *c).filter(|c| fires(fp, *c)).collect();
    let Some(&class) = fired.first() else {
        return Classification { class: SchemeClass::Unknown, confidence: Confidence::Definite, rationale: Vec::new() };
    };
    let confidence =
        if fired.len() > 1 || fp.storage_features() > 1 { Confidence::Heuristic } else { Confidence::Definite };

    let mut features: Vec<Feature> =
        RULES.iter().find(|(c, _)| *c == class).map(|(_, f)| f.to_vec()).unwrap_or_default();
    if class == SchemeClass::Transfer {
        features.insert(0, Feature::SingleLastDepositor);
    }
    let rationale = features.into_iter().filter_map(|f| fp.evidence_for(f).map(|span| item(f, span))).collect();
    Classification { class, confidence, rationale }
}

fn item(feature: Feature, span: Span) -> RationaleItem {
    RationaleItem { feature: feature.name().to_string(), line: span.line, column: span.column }
}

/// Classification of a whole file: the contract whose class ranks highest;
/// earlier contracts win ties.
pub fn classify_unit(unit: &SourceUnit) -> Option<(String, Classification)> {
    let mut best: Option<(String, Classification)> = None;
    for c in &unit.contracts {
        let cls = classify(&extract_fingerprint(c));
        if best.as_ref().is_none_or(|(_, b)| cls.class.precedence() < b.class.precedence()) {
            best = Some((c.name.clone(), cls));
        }
    }
    best
}
