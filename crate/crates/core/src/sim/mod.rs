//! Exact-wei executable models of the four scheme archetypes.

pub mod chain;
pub mod event;
pub mod scenario;
pub mod transfer;
pub mod tree;
pub mod waterfall;
pub mod wei;

pub use chain::{chain_deposit, ChainState, Depositor};
pub use event::{total_of, ActorId, Event, EventKind, RoiRow, RoiTable};
pub use scenario::{
    parse_script, run_scenario, Action, ScenarioOutcome, SchemeKind, SchemeParams, SchemeState, ScriptError,
};
pub use transfer::{transfer_deposit, TransferState};
pub use tree::{tree_enter, TreeNode, TreeState, MAX_LEVEL};
pub use waterfall::{waterfall_invest, waterfall_withdraw, WaterfallState};
pub use wei::{AmountError, Wei};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SimError {
    #[error("unknown actor `{0}`")]
    UnknownActor(ActorId),
    #[error("investment cap reached: total {total} wei >= cap {cap} wei")]
    CapReached { total: Wei, cap: Wei },
}
