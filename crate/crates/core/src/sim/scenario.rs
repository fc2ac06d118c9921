//! Line-oriented action scripts and their sequential execution.

use std::fmt;
use std::str::FromStr;

use super::chain::ChainState;
use super::event::{total_of, ActorId, Clock, Event, EventKind, RoiTable};
use super::transfer::TransferState;
use super::tree::TreeState;
use super::waterfall::WaterfallState;
use super::wei::Wei;
use super::SimError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SchemeKind {
    Tree,
    Chain,
    Waterfall,
    Transfer,
}

impl SchemeKind {
    pub const ALL: [SchemeKind; 4] = [SchemeKind::Tree, SchemeKind::Chain, SchemeKind::Waterfall, SchemeKind::Transfer];

    pub fn name(self) -> &'static str {
        match self {
            SchemeKind::Tree => "tree",
            SchemeKind::Chain => "chain",
            SchemeKind::Waterfall => "waterfall",
            SchemeKind::Transfer => "transfer",
        }
    }

    fn verbs(self) -> &'static [&'static str] {
        match self {
            SchemeKind::Tree => &["enter"],
            SchemeKind::Chain | SchemeKind::Transfer => &["deposit"],
            SchemeKind::Waterfall => &["invest", "withdraw"],
        }
    }
}

impl fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SchemeKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "tree" => Ok(SchemeKind::Tree),
            "chain" => Ok(SchemeKind::Chain),
            "waterfall" | "cascade" => Ok(SchemeKind::Waterfall),
            "transfer" | "handover" => Ok(SchemeKind::Transfer),
            other => Err(format!("unknown scheme `{other}` (expected tree, chain, waterfall or transfer)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SchemeParams {
    pub contribution: Wei,
    pub min_deposit: Wei,
    pub multiplier_num: u64,
    pub multiplier_den: u64,
    pub owner_fee_num: u64,
    pub owner_fee_den: u64,
    pub cap: Wei,
    pub starting_amount: Wei,
    /// Reproduce the chain payout index that never advances.
    pub faithful: bool,
}

impl Default for SchemeParams {
    fn default() -> Self {
        SchemeParams {
            contribution: Wei::finney(100),
            min_deposit: Wei::finney(500),
            multiplier_num: 200,
            multiplier_den: 100,
            owner_fee_num: 1,
            owner_fee_den: 2,
            cap: Wei::ether(200_000),
            starting_amount: Wei::ether(1),
            faithful: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Action {
    Enter { sender: ActorId, amount: Wei, inviter: ActorId },
    Deposit { sender: ActorId, amount: Wei },
    Invest { sender: ActorId, amount: Wei },
    Withdraw { sender: ActorId },
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Action::Enter { sender, amount, inviter } => write!(f, "enter {sender} {amount} {inviter}"),
            Action::Deposit { sender, amount } => write!(f, "deposit {sender} {amount}"),
            Action::Invest { sender, amount } => write!(f, "invest {sender} {amount}"),
            Action::Withdraw { sender } => write!(f, "withdraw {sender}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("script line {line}: {message}")]
pub struct ScriptError {
    pub line: usize,
    pub message: String,
}

/// Splits a line into tokens, joining a detached unit onto its amount (`1 ether`).
fn tokens(line: &str) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for tok in line.split_whitespace() {
        let is_unit = matches!(tok, "wei" | "gwei" | "szabo" | "finney" | "ether");
        let amount_slot = out.len() == 3;
        match out.last_mut() {
            Some(prev)
                if is_unit && amount_slot && prev.chars().all(|c| c.is_ascii_digit() || c == '.' || c == '_') =>
            {
                prev.push_str(tok)
            }
            _ => out.push(tok.to_string()),
        }
    }
    out
}

/// Parses `<verb> <actor> <amount><unit> [inviter]` lines; `#` starts a comment.
pub fn parse_script(kind: SchemeKind, text: &str) -> Result<Vec<Action>, ScriptError> {
    let mut actions = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |message: String| ScriptError { line: i + 1, message };
        let toks = tokens(line);
        let verb = toks[0].to_ascii_lowercase();
        if !kind.verbs().contains(&verb.as_str()) {
            return Err(err(format!(
                "verb `{verb}` is not valid for the {kind} scheme (expected {})",
                kind.verbs().join(" or ")
            )));
        }
        let sender = ActorId::new(toks.get(1).ok_or_else(|| err("missing actor".into()))?.as_str());
        let amount = || -> Result<Wei, ScriptError> {
            let t = toks.get(2).ok_or_else(|| err("missing amount".into()))?;
            Wei::parse(t).map_err(|e| err(e.to_string()))
        };
        let max_args = match verb.as_str() {
            "enter" => 4,
            "withdraw" => 2,
            _ => 3,
        };
        if toks.len() > max_args {
            return Err(err(format!("unexpected `{}`", toks[max_args])));
        }
        actions.push(match verb.as_str() {
            "enter" => {
                let inviter = toks.get(3).map(|s| ActorId::new(s.as_str())).unwrap_or_else(ActorId::top);
                Action::Enter { sender, amount: amount()?, inviter }
            }
            "deposit" => Action::Deposit { sender, amount: amount()? },
            "invest" => Action::Invest { sender, amount: amount()? },
            _ => Action::Withdraw { sender },
        });
    }
    Ok(actions)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SchemeState {
    Tree(TreeState),
    Chain(ChainState),
    Waterfall(WaterfallState),
    Transfer(TransferState),
}

impl SchemeState {
    pub fn new(kind: SchemeKind, params: &SchemeParams) -> Self {
        let p = params.clone();
        match kind {
            SchemeKind::Tree => SchemeState::Tree(TreeState::new(p.contribution)),
            SchemeKind::Chain => {
                SchemeState::Chain(ChainState::new(p.min_deposit, p.multiplier_num, p.multiplier_den, p.faithful))
            }
            SchemeKind::Waterfall => {
                SchemeState::Waterfall(WaterfallState::new(p.owner_fee_num, p.owner_fee_den, p.cap))
            }
            SchemeKind::Transfer => SchemeState::Transfer(TransferState::new(p.starting_amount)),
        }
    }

    pub fn kind(&self) -> SchemeKind {
        match self {
            SchemeState::Tree(_) => SchemeKind::Tree,
            SchemeState::Chain(_) => SchemeKind::Chain,
            SchemeState::Waterfall(_) => SchemeKind::Waterfall,
            SchemeState::Transfer(_) => SchemeKind::Transfer,
        }
    }

    /// Value held by the contract outside any participant ledger.
    pub fn balance(&self) -> Wei {
        match self {
            SchemeState::Tree(s) => s.balance(),
            SchemeState::Chain(s) => s.balance.clone(),
            SchemeState::Waterfall(s) => s.unallocated.clone(),
            SchemeState::Transfer(s) => s.balance.clone(),
        }
    }

    /// Credited to participants but not yet paid.
    pub fn ledger_residual(&self) -> Wei {
        match self {
            SchemeState::Waterfall(s) => s.ledger_residual(),
            _ => Wei::zero(),
        }
    }

    fn clock(&mut self) -> &mut Clock {
        match self {
            SchemeState::Tree(s) => s.clock(),
            SchemeState::Chain(s) => s.clock(),
            SchemeState::Waterfall(s) => s.clock(),
            SchemeState::Transfer(s) => s.clock(),
        }
    }

    /// Applies one action. A failed action leaves the state unchanged.
    pub fn apply(&mut self, action: &Action) -> Result<Vec<Event>, SimError> {
        let mismatch = |s: &mut SchemeState| {
            let kind = s.kind();
            let (sender, amount) = match action {
                Action::Enter { sender, amount, .. }
                | Action::Deposit { sender, amount }
                | Action::Invest { sender, amount } => (sender.clone(), amount.clone()),
                Action::Withdraw { sender } => (sender.clone(), Wei::zero()),
            };
            Ok(vec![s.clock().reject(&sender, amount, format!("`{action}` does not apply to the {kind} scheme"))])
        };
        match (&mut *self, action) {
            (SchemeState::Tree(s), Action::Enter { sender, amount, inviter }) => {
                s.enter(sender, inviter, amount.clone())
            }
            (SchemeState::Chain(s), Action::Deposit { sender, amount }) => Ok(s.deposit(sender, amount.clone())),
            (SchemeState::Transfer(s), Action::Deposit { sender, amount }) => Ok(s.deposit(sender, amount.clone())),
            (SchemeState::Waterfall(s), Action::Invest { sender, amount }) => s.invest(sender, amount.clone()),
            (SchemeState::Waterfall(s), Action::Withdraw { sender }) => Ok(s.withdraw(sender)),
            _ => mismatch(self),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScenarioOutcome {
    pub state: SchemeState,
    pub trace: Vec<Event>,
    pub roi: RoiTable,
}

impl ScenarioOutcome {
    /// `Σ Deposit − (Σ Payout + Σ Refund + Σ OwnerFee + ledger + balance)`; zero when value is conserved.
    pub fn conservation_gap(&self) -> num_bigint::BigInt {
        let int = |w: Wei| num_bigint::BigInt::from(w.value().clone());
        int(total_of(&self.trace, EventKind::Deposit))
            - int(total_of(&self.trace, EventKind::Payout))
            - int(total_of(&self.trace, EventKind::Refund))
            - int(total_of(&self.trace, EventKind::OwnerFee))
            - int(self.state.ledger_residual())
            - int(self.state.balance())
    }
}

/// Runs `script` from a fresh state. Errors become `Reject` events and execution continues.
pub fn run_scenario(kind: SchemeKind, params: &SchemeParams, script: &[Action]) -> ScenarioOutcome {
    let mut state = SchemeState::new(kind, params);
    let mut trace = Vec::new();
    for action in script {
        match state.apply(action) {
            Ok(events) => trace.extend(events),
            Err(e) => {
                let (sender, amount) = match action {
                    Action::Enter { sender, amount, .. }
                    | Action::Deposit { sender, amount }
                    | Action::Invest { sender, amount } => (sender.clone(), amount.clone()),
                    Action::Withdraw { sender } => (sender.clone(), Wei::zero()),
                };
                trace.push(state.clock().reject(&sender, amount, e.to_string()));
            }
        }
    }
    let roi = RoiTable::from_trace(&trace);
    ScenarioOutcome { state, trace, roi }
}
