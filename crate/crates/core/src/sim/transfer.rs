//! Hand-over scheme: each round's deposit goes straight to the previous depositor.

use super::event::{ActorId, Clock, Event, EventKind};
use super::wei::Wei;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransferState {
    pub round: u64,
    pub starting_amount: Wei,
    pub next_amount: Wei,
    pub last_depositor: Option<ActorId>,
    pub last_depositor_amount: Wei,
    /// The first round's deposit is never forwarded.
    pub balance: Wei,
    clock: Clock,
}

impl Default for TransferState {
    fn default() -> Self {
        TransferState::new(Wei::ether(1))
    }
}

impl TransferState {
    pub fn new(starting_amount: Wei) -> Self {
        TransferState {
            round: 1,
            starting_amount,
            next_amount: Wei::zero(),
            last_depositor: None,
            last_depositor_amount: Wei::zero(),
            balance: Wei::zero(),
            clock: Clock::default(),
        }
    }

    pub fn required(&self) -> &Wei {
        if self.round == 1 {
            &self.starting_amount
        } else {
            &self.next_amount
        }
    }

    pub fn deposit(&mut self, sender: &ActorId, amount: Wei) -> Vec<Event> {
        if &amount != self.required() {
            let reason = format!("round {} requires exactly {} wei", self.round, self.required());
            return vec![self.clock.reject(sender, amount, reason)];
        }
        let mut events = vec![self.clock.event(EventKind::Deposit, sender, amount.clone())];
        match (&self.last_depositor, self.round > 1) {
            (Some(last), true) => {
                let last = last.clone();
                events.push(self.clock.event(EventKind::Payout, &last, amount.clone()));
            }
            _ => self.balance += &amount,
        }
        self.next_amount = amount.mul_div(2, 1);
        self.last_depositor_amount = amount;
        self.last_depositor = Some(sender.clone());
        self.round += 1;
        events
    }

    pub(crate) fn clock(&mut self) -> &mut Clock {
        &mut self.clock
    }
}

pub fn transfer_deposit(mut state: TransferState, sender: &ActorId, amount: Wei) -> (TransferState, Vec<Event>) {
    let events = state.deposit(sender, amount);
    (state, events)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn a(s: &str) -> ActorId {
        ActorId::new(s)
    }

    #[test]
    fn doubling_rounds() {
        let mut s = TransferState::default();
        let ev = s.deposit(&a("A"), Wei::ether(1));
        assert_eq!(ev.len(), 1);
        assert_eq!((s.round, s.next_amount.clone()), (2, Wei::ether(2)));

        let ev = s.deposit(&a("B"), Wei::ether(2));
        assert_eq!(ev[1].kind, EventKind::Payout);
        assert_eq!((ev[1].actor.clone(), ev[1].amount.clone()), (a("A"), Wei::ether(2)));
        assert_eq!(s.next_amount, Wei::ether(4));

        let before = s.clone();
        let ev = s.deposit(&a("C"), Wei::ether(3));
        assert_eq!(ev[0].kind, EventKind::Reject);
        assert_eq!(s.round, before.round);
        assert_eq!(s.next_amount, before.next_amount);
    }

    #[test]
    fn wrong_starting_amount_rejected() {
        let mut s = TransferState::default();
        assert_eq!(s.deposit(&a("A"), Wei::ether(2))[0].kind, EventKind::Reject);
        assert_eq!(s.round, 1);
    }

    #[test]
    fn next_is_double_last() {
        let mut s = TransferState::new(Wei::from(3));
        let mut amt = Wei::from(3);
        for i in 0..10 {
            s.deposit(&a(&format!("p{i}")), amt.clone());
            assert_eq!(s.next_amount, s.last_depositor_amount.mul_div(2, 1));
            amt = s.next_amount.clone();
        }
    }
}
