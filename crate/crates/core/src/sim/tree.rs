//! Referral tree: each entry pays its inviter chain, halving per level.

use std::collections::{BTreeMap, BTreeSet};

use super::event::{ActorId, Clock, Event, EventKind};
use super::wei::Wei;
use super::SimError;

/// Levels paid inside the loop is `MAX_LEVEL - 1`; the terminal send makes it `MAX_LEVEL`.
pub const MAX_LEVEL: u32 = 7;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeNode {
    pub inviter: ActorId,
    pub total_payout: Wei,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeState {
    pub contribution: Wei,
    pub nodes: BTreeMap<ActorId, TreeNode>,
    pub top: ActorId,
    /// Every sender that ever tried to enter, accepted or not.
    seen: BTreeSet<ActorId>,
    clock: Clock,
}

impl TreeState {
    /// A tree whose creator `top` is its own inviter.
    pub fn new(contribution: Wei) -> Self {
        let top = ActorId::top();
        let mut nodes = BTreeMap::new();
        nodes.insert(top.clone(), TreeNode { inviter: top.clone(), total_payout: Wei::zero() });
        TreeState { contribution, nodes, seen: BTreeSet::from([top.clone()]), top, clock: Clock::default() }
    }

    pub fn contains(&self, actor: &ActorId) -> bool {
        self.nodes.contains_key(actor)
    }

    /// Everything received is paid out immediately, so the contract never holds a balance.
    pub fn balance(&self) -> Wei {
        Wei::zero()
    }

    /// Chain of inviters from `actor` (exclusive) up to and including `top`.
    pub fn ancestors(&self, actor: &ActorId) -> Vec<ActorId> {
        let mut out = Vec::new();
        let mut cur = actor.clone();
        while cur != self.top {
            let Some(node) = self.nodes.get(&cur) else { break };
            cur = node.inviter.clone();
            out.push(cur.clone());
        }
        out
    }

    pub fn enter(&mut self, sender: &ActorId, inviter: &ActorId, amount: Wei) -> Result<Vec<Event>, SimError> {
        if !self.seen.contains(inviter) && !self.contains(inviter) {
            return Err(SimError::UnknownActor(inviter.clone()));
        }
        self.seen.insert(sender.clone());
        if amount < self.contribution || self.contains(sender) || !self.contains(inviter) {
            let received = self.clock.event(EventKind::Deposit, sender, amount.clone());
            return Ok(vec![received, self.clock.event(EventKind::Refund, sender, amount)]);
        }

        self.nodes.insert(sender.clone(), TreeNode { inviter: inviter.clone(), total_payout: Wei::zero() });
        let mut events = vec![self.clock.event(EventKind::Deposit, sender, amount.clone())];
        let mut next = inviter.clone();
        let mut rest = amount;
        let mut level = 1;
        while next != self.top && level < MAX_LEVEL {
            let to_send = rest.div_floor(2);
            events.push(self.pay(&next, to_send.clone()));
            rest = rest.checked_sub(&to_send).expect("half never exceeds the whole");
            next = self.nodes[&next].inviter.clone();
            level += 1;
        }
        events.push(self.pay(&next, rest));
        Ok(events)
    }

    fn pay(&mut self, to: &ActorId, amount: Wei) -> Event {
        let node = self.nodes.get_mut(to).expect("payout target is registered");
        node.total_payout += &amount;
        self.clock.event(EventKind::Payout, to, amount)
    }

    pub(crate) fn clock(&mut self) -> &mut Clock {
        &mut self.clock
    }
}

pub fn tree_enter(
    mut state: TreeState,
    sender: &ActorId,
    inviter: &ActorId,
    amount: Wei,
) -> Result<(TreeState, Vec<Event>), SimError> {
    let events = state.enter(sender, inviter, amount)?;
    Ok((state, events))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn a(s: &str) -> ActorId {
        ActorId::new(s)
    }

    fn payouts(events: &[Event]) -> Vec<(String, u64)> {
        events
            .iter()
            .filter(|e| e.kind == EventKind::Payout)
            .map(|e| (e.actor.to_string(), e.amount.value().try_into().unwrap()))
            .collect()
    }

    #[test]
    fn one_level_then_top() {
        let mut t = TreeState::new(Wei::from(1));
        t.enter(&a("A"), &a("top"), Wei::from(2)).unwrap();
        let ev = t.enter(&a("B"), &a("A"), Wei::from(8)).unwrap();
        assert_eq!(payouts(&ev), [("A".into(), 4), ("top".into(), 4)]);
    }

    #[test]
    fn two_levels_then_top() {
        let mut t = TreeState::new(Wei::from(1));
        t.enter(&a("A1"), &a("top"), Wei::from(2)).unwrap();
        t.enter(&a("A2"), &a("A1"), Wei::from(2)).unwrap();
        let ev = t.enter(&a("C"), &a("A2"), Wei::from(8)).unwrap();
        assert_eq!(payouts(&ev), [("A2".into(), 4), ("A1".into(), 2), ("top".into(), 2)]);
        assert_eq!(t.nodes[&a("A2")].total_payout, Wei::from(4));
    }

    #[test]
    fn low_amount_is_refunded() {
        let mut t = TreeState::new(Wei::finney(100));
        let before = t.clone();
        let ev = t.enter(&a("X"), &a("top"), Wei::finney(99)).unwrap();
        assert_eq!(ev.iter().map(|e| e.kind).collect::<Vec<_>>(), [EventKind::Deposit, EventKind::Refund]);
        assert_eq!(ev[1].amount, Wei::finney(99));
        assert_eq!(t.nodes, before.nodes);
    }

    #[test]
    fn repeat_entry_and_unregistered_inviter_refund() {
        let mut t = TreeState::new(Wei::from(1));
        t.enter(&a("A"), &a("top"), Wei::from(4)).unwrap();
        assert_eq!(t.enter(&a("A"), &a("top"), Wei::from(4)).unwrap()[1].kind, EventKind::Refund);
        // X tried and was refunded, so it is known but not in the tree
        t.enter(&a("X"), &a("top"), Wei::zero()).unwrap();
        assert_eq!(t.enter(&a("B"), &a("X"), Wei::from(4)).unwrap()[1].kind, EventKind::Refund);
    }

    #[test]
    fn never_seen_inviter_is_an_error() {
        let mut t = TreeState::new(Wei::from(1));
        let before = t.clone();
        assert_eq!(t.enter(&a("B"), &a("ghost"), Wei::from(4)), Err(SimError::UnknownActor(a("ghost"))));
        assert_eq!(t, before);
    }

    #[test]
    fn depth_is_capped() {
        let mut t = TreeState::new(Wei::from(1));
        let mut parent = a("top");
        for i in 0..10 {
            let me = a(&format!("n{i}"));
            t.enter(&me, &parent, Wei::from(1)).unwrap();
            parent = me;
        }
        let ev = t.enter(&a("leaf"), &parent, Wei::from(1 << 10)).unwrap();
        let p = payouts(&ev);
        assert_eq!(p.len(), MAX_LEVEL as usize);
        // terminal send goes to the 7th ancestor, not top
        assert_eq!(p.last().unwrap().0, "n3");
    }

    proptest! {
        #[test]
        fn payouts_sum_to_deposit_and_shrink(
            parents in prop::collection::vec(any::<prop::sample::Index>(), 1..30),
            amount in 1u64..u64::MAX,
            pick in any::<prop::sample::Index>(),
        ) {
            let mut t = TreeState::new(Wei::from(1));
            let mut members = vec![a("top")];
            for (i, p) in parents.iter().enumerate() {
                let me = a(&format!("m{i}"));
                t.enter(&me, &members[p.index(members.len())], Wei::from(1)).unwrap();
                members.push(me);
            }
            let inviter = members[pick.index(members.len())].clone();
            let ev = t.enter(&a("new"), &inviter, Wei::from(amount)).unwrap();
            let paid: Vec<u64> = payouts(&ev).into_iter().map(|(_, v)| v).collect();
            prop_assert!(paid.len() <= MAX_LEVEL as usize);
            prop_assert_eq!(paid.iter().map(|v| *v as u128).sum::<u128>(), amount as u128);
            let (terminal, shares) = paid.split_last().unwrap();
            prop_assert!(shares.windows(2).all(|w| w[1] <= w[0]));
            // the terminal send takes the rounded-up half
            if let Some(last) = shares.last() {
                prop_assert!(*terminal <= last + 1);
            }
        }
    }
}
