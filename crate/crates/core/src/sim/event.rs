//! Participants, trace events and the per-actor ROI table.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use super::wei::Wei;

/// Stand-in for an account address.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ActorId(pub String);

impl ActorId {
    pub fn new(label: impl Into<String>) -> Self {
        ActorId(label.into())
    }

    pub fn owner() -> Self {
        ActorId::new("owner")
    }

    pub fn top() -> Self {
        ActorId::new("top")
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ActorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(&self.0)
    }
}

impl From<&str> for ActorId {
    fn from(s: &str) -> Self {
        ActorId::new(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EventKind {
    /// Value accepted by the contract.
    Deposit,
    /// Value sent out of the contract.
    Payout,
    /// A received entry bounced back to its sender.
    Refund,
    /// An action the contract refused; no value moved.
    Reject,
    OwnerFee,
    /// Internal ledger credit, paid out later by a withdrawal.
    Credit,
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(&format!("{self:?}"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Event {
    pub step: u64,
    pub kind: EventKind,
    pub actor: ActorId,
    pub amount: Wei,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub note: Option<String>,
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:>5} {:<8} {:<10} {}", self.step, self.kind, self.actor, self.amount)?;
        if let Some(n) = &self.note {
            write!(f, "  ({n})")?;
        }
        Ok(())
    }
}

/// Hands out strictly increasing step numbers.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Clock {
    next: u64,
}

impl Clock {
    pub fn event(&mut self, kind: EventKind, actor: &ActorId, amount: Wei) -> Event {
        let step = self.next;
        self.next += 1;
        Event { step, kind, actor: actor.clone(), amount, note: None }
    }

    pub fn reject(&mut self, actor: &ActorId, amount: Wei, reason: impl Into<String>) -> Event {
        let mut e = self.event(EventKind::Reject, actor, amount);
        e.note = Some(reason.into());
        e
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct RoiRow {
    pub total_in: Wei,
    pub total_out: Wei,
}

impl RoiRow {
    /// `total_out / total_in`; undefined for actors who never paid in.
    pub fn roi(&self) -> Option<BigRational> {
        self.total_out.ratio(&self.total_in)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RoiTable {
    pub rows: BTreeMap<ActorId, RoiRow>,
    /// Fees routed to the operator; kept out of the participant rows.
    pub owner_gain: Wei,
}

impl RoiTable {
    /// Deposits count as money in; payouts and refunds as money out.
    pub fn from_trace(trace: &[Event]) -> Self {
        let mut t = RoiTable::default();
        for e in trace {
            match e.kind {
                EventKind::Deposit => t.rows.entry(e.actor.clone()).or_default().total_in += &e.amount,
                EventKind::Payout | EventKind::Refund => {
                    t.rows.entry(e.actor.clone()).or_default().total_out += &e.amount
                }
                EventKind::OwnerFee => t.owner_gain += &e.amount,
                EventKind::Reject | EventKind::Credit => {}
            }
        }
        t
    }

    pub fn roi(&self, actor: &str) -> Option<BigRational> {
        self.rows.get(&ActorId::new(actor)).and_then(RoiRow::roi)
    }

    pub fn total_in(&self) -> Wei {
        self.rows.values().map(|r| &r.total_in).sum()
    }

    pub fn total_out(&self) -> Wei {
        self.rows.values().map(|r| &r.total_out).sum()
    }

    /// Σ in − Σ out − owner gain: what the contract still holds, allocated or not.
    pub fn residual(&self) -> BigInt {
        BigInt::from(self.total_in().value().clone())
            - BigInt::from(self.total_out().value().clone())
            - BigInt::from(self.owner_gain.value().clone())
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty() && self.owner_gain.is_zero()
    }
}

/// Sum of the amounts of one event kind.
pub fn total_of(trace: &[Event], kind: EventKind) -> Wei {
    trace.iter().filter(|e| e.kind == kind).map(|e| &e.amount).sum()
}
