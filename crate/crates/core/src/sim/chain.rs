//! Doubling queue: new deposits pay earlier depositors a fixed multiple.

use super::event::{ActorId, Clock, Event, EventKind};
use super::wei::Wei;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Depositor {
    pub actor: ActorId,
    pub amount: Wei,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChainState {
    pub depositors: Vec<Depositor>,
    pub balance: Wei,
    pub total_deposited: Wei,
    pub total_paid_out: Wei,
    /// Deposits must be strictly greater than this.
    pub min_deposit: Wei,
    pub multiplier_num: u64,
    pub multiplier_den: u64,
    /// Keep the payout index pinned at 0 as the original loop does. When
    /// off, the index advances past each paid depositor and persists.
    pub faithful: bool,
    cursor: usize,
    clock: Clock,
}

impl Default for ChainState {
    fn default() -> Self {
        ChainState::new(Wei::finney(500), 200, 100, true)
    }
}

impl ChainState {
    pub fn new(min_deposit: Wei, multiplier_num: u64, multiplier_den: u64, faithful: bool) -> Self {
        assert!(multiplier_den > 0, "multiplier denominator must be positive");
        ChainState {
            depositors: Vec::new(),
            balance: Wei::zero(),
            total_deposited: Wei::zero(),
            total_paid_out: Wei::zero(),
            min_deposit,
            multiplier_num,
            multiplier_den,
            faithful,
            cursor: 0,
            clock: Clock::default(),
        }
    }

    pub fn total_players(&self) -> usize {
        self.depositors.len()
    }

    fn owed(&self, nr: usize) -> Wei {
        self.depositors[nr].amount.mul_div(self.multiplier_num, self.multiplier_den)
    }

    pub fn deposit(&mut self, sender: &ActorId, amount: Wei) -> Vec<Event> {
        if amount <= self.min_deposit {
            return vec![self.clock.reject(sender, amount, "deposit not above the minimum")];
        }
        let mut events = vec![self.clock.event(EventKind::Deposit, sender, amount.clone())];
        self.depositors.push(Depositor { actor: sender.clone(), amount: amount.clone() });
        self.balance += &amount;
        self.total_deposited += &amount;
        let players = self.total_players();

        let mut nr = if self.faithful { 0 } else { self.cursor };
        while nr < players && self.balance > self.owed(nr) {
            let payout = self.owed(nr);
            let to = self.depositors[nr].actor.clone();
            self.balance = self.balance.checked_sub(&payout).expect("loop condition bounds the payout");
            self.total_paid_out += &payout;
            events.push(self.clock.event(EventKind::Payout, &to, payout));
            if !self.faithful {
                nr += 1;
                self.cursor = nr;
            }
        }
        events
    }

    pub(crate) fn clock(&mut self) -> &mut Clock {
        &mut self.clock
    }
}

pub fn chain_deposit(mut state: ChainState, sender: &ActorId, amount: Wei) -> (ChainState, Vec<Event>) {
    let events = state.deposit(sender, amount);
    (state, events)
}
