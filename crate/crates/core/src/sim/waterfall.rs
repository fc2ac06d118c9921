//! Pro-rata dividends: each investment credits earlier investors by their share.

use std::collections::BTreeMap;

use super::event::{ActorId, Clock, Event, EventKind};
use super::wei::Wei;
use super::SimError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WaterfallState {
    pub investors: Vec<ActorId>,
    pub invested: BTreeMap<ActorId, Wei>,
    /// Credited but not yet withdrawn.
    pub balances_ledger: BTreeMap<ActorId, Wei>,
    pub total: Wei,
    pub owner_fee_num: u64,
    pub owner_fee_den: u64,
    pub cap: Wei,
    pub owner: ActorId,
    /// Value held by the contract that no ledger entry claims.
    pub unallocated: Wei,
    clock: Clock,
}

impl Default for WaterfallState {
    fn default() -> Self {
        WaterfallState::new(1, 2, Wei::ether(200_000))
    }
}

impl WaterfallState {
    pub fn new(owner_fee_num: u64, owner_fee_den: u64, cap: Wei) -> Self {
        assert!(owner_fee_den > 0 && owner_fee_num <= owner_fee_den, "fee must be a fraction in [0, 1]");
        WaterfallState {
            investors: Vec::new(),
            invested: BTreeMap::new(),
            balances_ledger: BTreeMap::new(),
            total: Wei::zero(),
            owner_fee_num,
            owner_fee_den,
            cap,
            owner: ActorId::owner(),
            unallocated: Wei::zero(),
            clock: Clock::default(),
        }
    }

    pub fn ledger_residual(&self) -> Wei {
        self.balances_ledger.values().sum()
    }

    /// Everything the contract holds: unallocated value plus outstanding credits.
    pub fn balance(&self) -> Wei {
        &self.unallocated + &self.ledger_residual()
    }

    pub fn invest(&mut self, sender: &ActorId, amount: Wei) -> Result<Vec<Event>, SimError> {
        if self.total >= self.cap {
            return Err(SimError::CapReached { total: self.total.clone(), cap: self.cap.clone() });
        }
        let mut events = vec![self.clock.event(EventKind::Deposit, sender, amount.clone())];
        let fee = amount.mul_div(self.owner_fee_num, self.owner_fee_den);
        let owner = self.owner.clone();
        events.push(self.clock.event(EventKind::OwnerFee, &owner, fee.clone()));
        let dividend = amount.checked_sub(&fee).expect("fee is at most the amount");

        let mut credited = Wei::zero();
        if !self.total.is_zero() {
            for i in 0..self.investors.len() {
                let investor = self.investors[i].clone();
                let share = dividend.mul_div_wei(&self.invested[&investor], &self.total);
                credited += &share;
                *self.balances_ledger.entry(investor.clone()).or_default() += &share;
                events.push(self.clock.event(EventKind::Credit, &investor, share));
            }
        }
        self.unallocated += dividend.checked_sub(&credited).expect("shares never exceed the dividend");

        if !self.invested.contains_key(sender) {
            self.investors.push(sender.clone());
        }
        *self.invested.entry(sender.clone()).or_default() += &amount;
        self.total += &amount;
        Ok(events)
    }

    /// Pays out and clears the sender's ledger balance.
    pub fn withdraw(&mut self, sender: &ActorId) -> Vec<Event> {
        let payment = self.balances_ledger.remove(sender).unwrap_or_default();
        vec![self.clock.event(EventKind::Payout, sender, payment)]
    }

    pub(crate) fn clock(&mut self) -> &mut Clock {
        &mut self.clock
    }
}

pub fn waterfall_invest(
    mut state: WaterfallState,
    sender: &ActorId,
    amount: Wei,
) -> Result<(WaterfallState, Vec<Event>), SimError> {
    let events = state.invest(sender, amount)?;
    Ok((state, events))
}

pub fn waterfall_withdraw(mut state: WaterfallState, sender: &ActorId) -> (WaterfallState, Vec<Event>) {
    let events = state.withdraw(sender);
    (state, events)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn a(s: &str) -> ActorId {
        ActorId::new(s)
    }

    fn summary(events: &[Event]) -> Vec<(EventKind, String, u64)> {
        events.iter().map(|e| (e.kind, e.actor.to_string(), e.amount.value().try_into().unwrap())).collect()
    }

    #[test]
    fn three_investors() {
        let mut s = WaterfallState::default();
        let ev = s.invest(&a("A"), Wei::from(100)).unwrap();
        assert_eq!(summary(&ev), [(EventKind::Deposit, "A".into(), 100), (EventKind::OwnerFee, "owner".into(), 50)]);
        assert_eq!(s.total, Wei::from(100));

        let ev = s.invest(&a("B"), Wei::from(100)).unwrap();
        assert_eq!(summary(&ev)[2..], [(EventKind::Credit, "A".into(), 50)]);
        assert_eq!(s.invested[&a("B")], Wei::from(100));
        assert_eq!(s.total, Wei::from(200));

        let ev = s.invest(&a("C"), Wei::from(200)).unwrap();
        assert_eq!(
            summary(&ev)[1..],
            [
                (EventKind::OwnerFee, "owner".into(), 100),
                (EventKind::Credit, "A".into(), 50),
                (EventKind::Credit, "B".into(), 50)
            ]
        );
        assert_eq!(s.balances_ledger[&a("A")], Wei::from(100));
    }

    #[test]
    fn cap_blocks_further_investment() {
        let mut s = WaterfallState::new(1, 2, Wei::from(150));
        s.invest(&a("A"), Wei::from(100)).unwrap();
        s.invest(&a("B"), Wei::from(100)).unwrap();
        let before = s.clone();
        assert!(matches!(s.invest(&a("C"), Wei::from(1)), Err(SimError::CapReached { .. })));
        assert_eq!(s, before);
    }

    #[test]
    fn withdraw_drains_ledger() {
        let mut s = WaterfallState::default();
        s.invest(&a("A"), Wei::from(100)).unwrap();
        s.invest(&a("B"), Wei::from(100)).unwrap();
        let ev = s.withdraw(&a("A"));
        assert_eq!(ev[0].amount, Wei::from(50));
        assert!(s.ledger_residual().is_zero());
        assert_eq!(s.withdraw(&a("A"))[0].amount, Wei::zero());
    }

    proptest! {
        #[test]
        fn total_matches_invested_and_credits_only_grow(amounts in prop::collection::vec(0u64..1_000_000, 1..30), repeat in 0usize..3) {
            let mut s = WaterfallState::default();
            let mut credited_to_first = Wei::zero();
            for (i, amt) in amounts.iter().enumerate() {
                // some actors invest more than once, sometimes with nothing
                for e in s.invest(&a(&format!("i{}", i / (repeat + 1))), Wei::from(*amt)).unwrap() {
                    if e.kind == EventKind::Credit && e.actor == a("i0") {
                        credited_to_first += &e.amount;
                    }
                }
                let sum: Wei = s.invested.values().sum();
                prop_assert_eq!(&s.total, &sum);
                prop_assert_eq!(s.investors.len(), s.invested.len());
                prop_assert!(s.balances_ledger.get(&a("i0")).cloned().unwrap_or_default() == credited_to_first);
            }
        }
    }
}
