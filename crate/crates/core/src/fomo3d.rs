//! Fomo3D round mechanics: fund split, countdown, airdrop lottery and the
//! two exploitable checks (block-derived seed, `extcodesize` human test).

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use sha2::{Digest, Sha256};

use crate::sim::{ActorId, Event, EventKind, Wei};

pub const ROUND_MAX: u64 = 24 * 60 * 60;
pub const TIME_INCREMENT: u64 = 30;
pub const TRACKER_CAP: u32 = 10;
pub const WINNER_SHARE_PERCENT: u64 = 48;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Fomo3dError {
    #[error("round is closed")]
    RoundClosed,
    #[error("round is still running until {deadline}")]
    RoundActive { deadline: u64 },
    #[error("round has no buyers")]
    NoBuyers,
    #[error("division by zero: block timestamp is 0")]
    DivisionByZero,
    #[error("team {team}: pot and dividend fractions must sum to 86/100, got {sum}")]
    InvalidSplit { team: Team, sum: BigRational },
    #[error("`{0}` is not an externally owned account")]
    NotHuman(ActorId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Team {
    Snek,
    Bull,
    Whale,
    Bear,
}

impl Team {
    pub const ALL: [Team; 4] = [Team::Snek, Team::Bull, Team::Whale, Team::Bear];
}

impl fmt::Display for Team {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl FromStr for Team {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Team::ALL
            .into_iter()
            .find(|t| t.to_string().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown team `{s}` (expected snek, bull, whale or bear)"))
    }
}

/// Shares of a buy that go to the pot and to the dividend pool.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TeamSplit {
    pub pot: BigRational,
    pub dividends: BigRational,
}

impl TeamSplit {
    pub fn percent(pot: u64, dividends: u64) -> Self {
        let pct = |n: u64| BigRational::new(BigInt::from(n), BigInt::from(100));
        TeamSplit { pot: pct(pot), dividends: pct(dividends) }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoundConfig {
    /// Buys strictly above this bump the airdrop tracker.
    pub airdrop_threshold: Wei,
    pub team_split: BTreeMap<Team, TeamSplit>,
    pub start: u64,
    /// Constant key price; keys are `⌊eth / key_price⌋`.
    pub key_price: Wei,
    /// Refuse buys from accounts that fail `is_human`.
    pub humans_only: bool,
}

impl Default for RoundConfig {
    fn default() -> Self {
        RoundConfig {
            airdrop_threshold: Wei::finney(100),
            team_split: Team::ALL.into_iter().map(|t| (t, TeamSplit::percent(50, 36))).collect(),
            start: 1_531_000_000,
            key_price: Wei::finney(1),
            humans_only: true,
        }
    }
}

impl RoundConfig {
    pub fn validate(&self) -> Result<(), Fomo3dError> {
        let target = BigRational::new(BigInt::from(86), BigInt::from(100));
        for (team, split) in &self.team_split {
            let sum = &split.pot + &split.dividends;
            let negative = split.pot < BigRational::zero() || split.dividends < BigRational::zero();
            if sum != target || negative {
                return Err(Fomo3dError::InvalidSplit { team: *team, sum });
            }
        }
        Ok(())
    }

    fn split_for(&self, team: Team) -> TeamSplit {
        self.team_split.get(&team).cloned().unwrap_or_else(|| TeamSplit::percent(50, 36))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockCtx {
    pub timestamp: u64,
    pub difficulty: u64,
    pub coinbase: ActorId,
    pub gaslimit: u64,
    pub number: u64,
}

impl BlockCtx {
    pub fn at(timestamp: u64) -> Self {
        BlockCtx { timestamp, difficulty: 0, coinbase: ActorId::new("miner"), gaslimit: 8_000_000, number: 6_000_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AccountModel {
    pub actor: ActorId,
    pub code_size: u64,
    pub in_constructor_phase: bool,
}

impl AccountModel {
    pub fn external(actor: ActorId) -> Self {
        AccountModel { actor, code_size: 0, in_constructor_phase: false }
    }

    /// What `extcodesize` reports: nothing while the constructor runs.
    pub fn effective_code_size(&self) -> u64 {
        if self.in_constructor_phase {
            0
        } else {
            self.code_size
        }
    }
}

pub fn is_human(acct: &AccountModel) -> bool {
    acct.effective_code_size() == 0
}

fn hash_uint(bytes: &[u8]) -> BigUint {
    BigUint::from_bytes_be(&Sha256::digest(bytes))
}

fn word(v: &BigUint) -> [u8; 32] {
    let bytes = v.to_bytes_be();
    let mut out = [0u8; 32];
    out[32 - bytes.len()..].copy_from_slice(&bytes);
    out
}

/// `H(ts + difficulty + H(coinbase)/now + gaslimit + H(sender)/now + number)`,
/// with wrapping 256-bit addition.
pub fn compute_seed(ctx: &BlockCtx, sender: &ActorId) -> Result<BigUint, Fomo3dError> {
    if ctx.timestamp == 0 {
        return Err(Fomo3dError::DivisionByZero);
    }
    let now = BigUint::from(ctx.timestamp);
    let modulus = BigUint::from(1u8) << 256;
    let sum = BigUint::from(ctx.timestamp)
        + BigUint::from(ctx.difficulty)
        + hash_uint(ctx.coinbase.as_str().as_bytes()) / &now
        + BigUint::from(ctx.gaslimit)
        + hash_uint(sender.as_str().as_bytes()) / &now
        + BigUint::from(ctx.number);
    Ok(hash_uint(&word(&(sum % modulus))))
}

/// `seed mod 1000 < tracker`: the tracker counts thousandths of win probability.
pub fn airdrop_win(seed: &BigUint, tracker: u32) -> bool {
    (seed % 1000u32).to_u32().expect("residue below 1000") < tracker
}

/// Where one buy's value goes. Floor-division leftovers land in the pot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub pot: Wei,
    pub dividends: Wei,
    pub referral: Wei,
    pub team: Wei,
    pub pot_swap: Wei,
    pub airdrop: Wei,
}

impl Split {
    pub fn compute(eth: &Wei, split: &TeamSplit) -> Split {
        let frac = |r: &BigRational| {
            let n = r.numer().to_biguint().expect("fractions are validated non-negative");
            let d = r.denom().to_biguint().expect("denominator is positive");
            Wei::new(eth.value() * n / d)
        };
        let dividends = frac(&split.dividends);
        let referral = eth.mul_div(10, 100);
        let team = eth.mul_div(2, 100);
        let pot_swap = eth.mul_div(1, 100);
        let airdrop = eth.mul_div(1, 100);
        let taken: Wei = [&dividends, &referral, &team, &pot_swap, &airdrop].into_iter().sum();
        let pot = eth.checked_sub(&taken).expect("fractions sum to at most one");
        Split { pot, dividends, referral, team, pot_swap, airdrop }
    }

    /// The five buckets: pot plus dividends, referral, team, pot swap, airdrop.
    pub fn buckets(&self) -> [Wei; 5] {
        [
            &self.pot + &self.dividends,
            self.referral.clone(),
            self.team.clone(),
            self.pot_swap.clone(),
            self.airdrop.clone(),
        ]
    }

    pub fn total(&self) -> Wei {
        self.buckets().into_iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoundState {
    pub config: RoundConfig,
    pub pot: Wei,
    /// Referral rewards per actor.
    pub dividends: BTreeMap<ActorId, Wei>,
    /// Shared by all key holders.
    pub dividend_pool: Wei,
    pub team_fund: Wei,
    pub pot_swap: Wei,
    pub airdrop_pot: Wei,
    pub keys: BTreeMap<ActorId, BigUint>,
    pub deadline: u64,
    pub last_buyer: Option<ActorId>,
    pub air_drop_tracker: u32,
    pub round_over: bool,
    /// Latest time seen by the round.
    pub now: u64,
    step: u64,
}

impl RoundState {
    pub fn new(config: RoundConfig) -> Result<Self, Fomo3dError> {
        config.validate()?;
        let start = config.start;
        Ok(RoundState {
            config,
            pot: Wei::zero(),
            dividends: BTreeMap::new(),
            dividend_pool: Wei::zero(),
            team_fund: Wei::zero(),
            pot_swap: Wei::zero(),
            airdrop_pot: Wei::zero(),
            keys: BTreeMap::new(),
            deadline: start + ROUND_MAX,
            last_buyer: None,
            air_drop_tracker: 0,
            round_over: false,
            now: start,
            step: 0,
        })
    }

    fn event(&mut self, kind: EventKind, actor: &ActorId, amount: Wei) -> Event {
        let step = self.step;
        self.step += 1;
        Event { step, kind, actor: actor.clone(), amount, note: None }
    }

    pub(crate) fn reject(&mut self, actor: &ActorId, amount: Wei, reason: String) -> Event {
        let mut e = self.event(EventKind::Reject, actor, amount);
        e.note = Some(reason);
        e
    }

    /// Everything the round contract holds.
    pub fn holdings(&self) -> Wei {
        let credited: Wei = self.dividends.values().sum();
        [&self.pot, &self.dividend_pool, &self.team_fund, &self.pot_swap, &self.airdrop_pot, &credited]
            .into_iter()
            .sum()
    }

    pub fn remaining(&self) -> u64 {
        self.deadline.saturating_sub(self.now)
    }

    pub fn buy_keys(
        &mut self,
        sender: &AccountModel,
        eth: Wei,
        team: Team,
        referrer: Option<&ActorId>,
        ctx: &BlockCtx,
        now: u64,
    ) -> Result<Vec<Event>, Fomo3dError> {
        if self.round_over || now >= self.deadline {
            return Err(Fomo3dError::RoundClosed);
        }
        if self.config.humans_only && !is_human(sender) {
            return Err(Fomo3dError::NotHuman(sender.actor.clone()));
        }
        let who = &sender.actor;
        let bumps = eth > self.config.airdrop_threshold;
        let seed = if bumps { Some(compute_seed(ctx, who)?) } else { None };

        self.now = self.now.max(now);
        let mut events = vec![self.event(EventKind::Deposit, who, eth.clone())];
        self.deadline = (self.deadline + TIME_INCREMENT).min(now + ROUND_MAX);
        self.last_buyer = Some(who.clone());
        *self.keys.entry(who.clone()).or_default() += (eth.value() / self.config.key_price.value()).clone();

        if let Some(seed) = seed {
            self.air_drop_tracker = (self.air_drop_tracker + 1).min(TRACKER_CAP);
            if airdrop_win(&seed, self.air_drop_tracker) {
                let prize = self.airdrop_pot.div_floor(4);
                self.airdrop_pot = self.airdrop_pot.checked_sub(&prize).expect("a quarter of the pot");
                self.air_drop_tracker = 0;
                let mut e = self.event(EventKind::Payout, who, prize);
                e.note = Some("airdrop".into());
                events.push(e);
            }
        }

        let split = Split::compute(&eth, &self.config.split_for(team));
        self.pot += &split.pot;
        self.dividend_pool += &split.dividends;
        self.team_fund += &split.team;
        self.pot_swap += &split.pot_swap;
        self.airdrop_pot += &split.airdrop;
        match referrer.filter(|r| *r != who) {
            Some(r) => {
                *self.dividends.entry(r.clone()).or_default() += &split.referral;
                events.push(self.event(EventKind::Credit, r, split.referral));
            }
            None => self.dividend_pool += &split.referral,
        }
        Ok(events)
    }

    pub fn finalize_round(&mut self, now: u64) -> Result<Event, Fomo3dError> {
        if self.round_over {
            return Err(Fomo3dError::RoundClosed);
        }
        if now < self.deadline {
            return Err(Fomo3dError::RoundActive { deadline: self.deadline });
        }
        let winner = self.last_buyer.clone().ok_or(Fomo3dError::NoBuyers)?;
        let prize = self.pot.mul_div(WINNER_SHARE_PERCENT, 100);
        self.pot = self.pot.checked_sub(&prize).expect("48% of the pot");
        self.round_over = true;
        self.now = self.now.max(now);
        let mut e = self.event(EventKind::Payout, &winner, prize);
        e.note = Some("winner".into());
        Ok(e)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RoundAction {
    Buy {
        account: AccountModel,
        eth: Wei,
        team: Team,
        referrer: Option<ActorId>,
        at: Option<u64>,
        block: Option<BlockCtx>,
    },
    Finalize {
        at: Option<u64>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("round script line {line}: {message}")]
pub struct RoundScriptError {
    pub line: usize,
    pub message: String,
}

fn parse_block(text: &str) -> Result<BlockCtx, String> {
    let parts: Vec<&str> = text.split(',').collect();
    let [ts, diff, coinbase, gas, num] = parts[..] else {
        return Err(format!("--block expects ts,difficulty,coinbase,gaslimit,number, got `{text}`"));
    };
    let int = |s: &str| s.trim().parse::<u64>().map_err(|_| format!("`{s}` is not a non-negative integer"));
    Ok(BlockCtx {
        timestamp: int(ts)?,
        difficulty: int(diff)?,
        coinbase: ActorId::new(coinbase.trim()),
        gaslimit: int(gas)?,
        number: int(num)?,
    })
}

/// Parses `buy <actor> <amount> [--team T] [--ref R] [--at T] [--block ts,diff,coinbase,gas,num]
/// [--code N] [--constructor]` and `finalize [--at T]` lines.
pub fn parse_round_script(text: &str) -> Result<Vec<RoundAction>, RoundScriptError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |message: String| RoundScriptError { line: i + 1, message };
        let mut toks = line.split_whitespace();
        let verb = toks.next().unwrap_or_default();
        let mut positional = Vec::new();
        let (mut team, mut referrer, mut at, mut block) = (Team::Snek, None, None, None);
        let (mut code_size, mut constructor) = (0u64, false);
        while let Some(tok) = toks.next() {
            if tok == "--constructor" {
                constructor = true;
                continue;
            }
            if !tok.starts_with("--") {
                positional.push(tok);
                continue;
            }
            let val = toks.next().ok_or_else(|| err(format!("{tok} needs a value")))?;
            match tok {
                "--team" => team = val.parse().map_err(err)?,
                "--ref" => referrer = Some(ActorId::new(val)),
                "--at" => at = Some(val.parse().map_err(|_| err(format!("bad time `{val}`")))?),
                "--block" => block = Some(parse_block(val).map_err(err)?),
                "--code" => code_size = val.parse().map_err(|_| err(format!("bad code size `{val}`")))?,
                _ => return Err(err(format!("unknown option {tok}"))),
            }
        }
        match verb {
            "buy" => {
                let [actor, amount] = positional[..] else {
                    return Err(err("expected `buy <actor> <amount>`".into()));
                };
                let eth = Wei::parse(amount).map_err(|e| err(e.to_string()))?;
                let account = AccountModel { actor: ActorId::new(actor), code_size, in_constructor_phase: constructor };
                out.push(RoundAction::Buy { account, eth, team, referrer, at, block });
            }
            "finalize" if positional.is_empty() => out.push(RoundAction::Finalize { at }),
            "finalize" => return Err(err(format!("unexpected `{}`", positional[0]))),
            other => return Err(err(format!("unknown verb `{other}` (expected buy or finalize)"))),
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoundOutcome {
    pub state: RoundState,
    pub trace: Vec<Event>,
}

/// Runs a round script. Times default to the latest time seen; blocks default
/// to `BlockCtx::at(now)`. Failed actions become `Reject` events.
pub fn run_round(config: RoundConfig, script: &[RoundAction]) -> Result<RoundOutcome, Fomo3dError> {
    let mut state = RoundState::new(config)?;
    let mut trace = Vec::new();
    for action in script {
        match action {
            RoundAction::Buy { account, eth, team, referrer, at, block } => {
                let now = at.unwrap_or(state.now);
                let ctx = block.clone().unwrap_or_else(|| BlockCtx::at(now));
                match state.buy_keys(account, eth.clone(), *team, referrer.as_ref(), &ctx, now) {
                    Ok(ev) => trace.extend(ev),
                    Err(e) => trace.push(state.reject(&account.actor, eth.clone(), e.to_string())),
                }
            }
            RoundAction::Finalize { at } => {
                let now = at.unwrap_or(state.now);
                match state.finalize_round(now) {
                    Ok(ev) => trace.push(ev),
                    Err(e) => {
                        let who = state.last_buyer.clone().unwrap_or_else(ActorId::owner);
                        trace.push(state.reject(&who, Wei::zero(), e.to_string()));
                    }
                }
            }
        }
    }
    Ok(RoundOutcome { state, trace })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::total_of;
    use proptest::prelude::*;

    fn human(s: &str) -> AccountModel {
        AccountModel::external(ActorId::new(s))
    }

    fn fresh() -> RoundState {
        RoundState::new(RoundConfig::default()).unwrap()
    }

    #[test]
    fn one_ether_split() {
        let mut s = fresh();
        let now = s.now;
        s.buy_keys(&human("A"), Wei::ether(1), Team::Snek, Some(&ActorId::new("R")), &BlockCtx::at(now), now).unwrap();
        assert_eq!(s.pot, Wei::finney(500));
        assert_eq!(s.dividend_pool, Wei::finney(360));
        assert_eq!(s.dividends[&ActorId::new("R")], Wei::finney(100));
        assert_eq!(s.team_fund, Wei::finney(20));
        assert_eq!(s.pot_swap, Wei::finney(10));
        assert_eq!(s.airdrop_pot, Wei::finney(10));
    }

    #[test]
    fn no_referrer_feeds_dividend_pool() {
        let split = Split::compute(&Wei::ether(1), &TeamSplit::percent(50, 36));
        let mut s = fresh();
        let now = s.now;
        s.buy_keys(&human("A"), Wei::ether(1), Team::Bear, None, &BlockCtx::at(now), now).unwrap();
        assert_eq!(s.dividend_pool, &split.dividends + &split.referral);
        assert_eq!(s.holdings(), Wei::ether(1));
    }

    #[test]
    fn timer_adds_thirty_seconds() {
        let mut s = fresh();
        s.deadline = s.now + 10;
        let now = s.now;
        s.buy_keys(&human("A"), Wei::finney(1), Team::Snek, None, &BlockCtx::at(now), now).unwrap();
        assert_eq!(s.deadline - now, 40);
        // a fresh round is already at the cap
        let mut s = fresh();
        let now = s.now;
        s.buy_keys(&human("A"), Wei::finney(1), Team::Snek, None, &BlockCtx::at(now), now).unwrap();
        assert_eq!(s.deadline - now, ROUND_MAX);
    }

    #[test]
    fn tracker_threshold_is_strict() {
        let mut s = fresh();
        let now = s.now;
        for eth in [Wei::finney(50), Wei::finney(100)] {
            s.buy_keys(&human("A"), eth, Team::Snek, None, &BlockCtx::at(now), now).unwrap();
        }
        assert_eq!(s.air_drop_tracker, 0);
        s.buy_keys(&human("A"), Wei::finney(101), Team::Snek, None, &BlockCtx::at(now), now).unwrap();
        assert!(s.air_drop_tracker <= 1);
    }

    #[test]
    fn closed_round_rejects_buys() {
        let mut s = fresh();
        let late = s.deadline;
        let before = s.clone();
        let r = s.buy_keys(&human("A"), Wei::ether(1), Team::Snek, None, &BlockCtx::at(late), late);
        assert_eq!(r, Err(Fomo3dError::RoundClosed));
        assert_eq!(s, before);
    }

    #[test]
    fn winner_takes_48_percent() {
        let mut s = fresh();
        s.pot = Wei::ether(100);
        s.last_buyer = Some(ActorId::new("W"));
        let early = s.deadline - 1;
        assert_eq!(s.finalize_round(early), Err(Fomo3dError::RoundActive { deadline: s.deadline }));
        let e = s.finalize_round(s.deadline).unwrap();
        assert_eq!((e.actor.as_str(), e.amount.clone()), ("W", Wei::ether(48)));
        assert_eq!(s.pot, Wei::ether(52));
        assert!(s.round_over);
        assert_eq!(s.finalize_round(s.deadline), Err(Fomo3dError::RoundClosed));
    }

    #[test]
    fn finalize_without_buyers() {
        let mut s = fresh();
        assert_eq!(s.finalize_round(s.deadline), Err(Fomo3dError::NoBuyers));
    }

    #[test]
    fn seed_is_predictable_and_sender_dependent() {
        let ctx = BlockCtx {
            timestamp: 1_532_000_000,
            difficulty: 2_000_000,
            coinbase: "miner".into(),
            gaslimit: 8_000_000,
            number: 6_000_000,
        };
        let a = compute_seed(&ctx, &"alice".into()).unwrap();
        assert_eq!(a, compute_seed(&ctx, &"alice".into()).unwrap());
        assert_ne!(a, compute_seed(&ctx, &"bob".into()).unwrap());
        assert_eq!(compute_seed(&BlockCtx::at(0), &"alice".into()), Err(Fomo3dError::DivisionByZero));
    }

    #[test]
    fn airdrop_residues() {
        assert!(airdrop_win(&BigUint::from(2005u32), 10));
        assert!(!airdrop_win(&BigUint::from(0u32), 0));
        for t in 0..=TRACKER_CAP {
            let wins = (0u32..1000).filter(|s| airdrop_win(&BigUint::from(*s), t)).count();
            assert_eq!(wins, t as usize);
        }
    }

    #[test]
    fn human_check() {
        let deployed = AccountModel { actor: "bot".into(), code_size: 1200, in_constructor_phase: false };
        assert!(!is_human(&deployed));
        assert!(is_human(&human("eoa")));
        assert!(is_human(&AccountModel { in_constructor_phase: true, ..deployed.clone() }));
        let mut s = fresh();
        let now = s.now;
        assert_eq!(
            s.buy_keys(&deployed, Wei::ether(1), Team::Snek, None, &BlockCtx::at(now), now),
            Err(Fomo3dError::NotHuman("bot".into()))
        );
    }

    #[test]
    fn bad_split_is_rejected() {
        let mut config = RoundConfig::default();
        config.team_split.insert(Team::Whale, TeamSplit::percent(50, 37));
        assert!(matches!(RoundState::new(config), Err(Fomo3dError::InvalidSplit { team: Team::Whale, .. })));
    }

    #[test]
    fn script_round_trip() {
        let text = "buy A 1ether --team bull --ref R\nbuy B 0.2ether --at 1531000100 --block 1531000100,5,m,100,7\n\
                    buy bot 1ether --code 900 --constructor\nfinalize\nfinalize --at 2000000000\n";
        let actions = parse_round_script(text).unwrap();
        assert_eq!(actions.len(), 5);
        let out = run_round(RoundConfig::default(), &actions).unwrap();
        let kinds: Vec<EventKind> = out.trace.iter().map(|e| e.kind).collect();
        assert_eq!(kinds.iter().filter(|k| **k == EventKind::Deposit).count(), 3);
        assert_eq!(out.trace.iter().filter(|e| e.kind == EventKind::Reject).count(), 1);
        let winner = out.trace.iter().rev().find(|e| e.note.as_deref() == Some("winner")).unwrap();
        assert_eq!(winner.actor.as_str(), "bot");
        assert!(out.state.round_over);
        assert!(parse_round_script("buy A").is_err());
        assert!(parse_round_script("buy A 1ether --team red").is_err());
        assert_eq!(parse_round_script("\nsell A 1").unwrap_err().line, 2);
    }

    proptest! {
        #[test]
        fn split_is_exact(wei in any::<u128>(), pot in 0u64..=86) {
            let eth = Wei::new(BigUint::from(wei));
            let split = Split::compute(&eth, &TeamSplit::percent(pot, 86 - pot));
            prop_assert_eq!(split.total(), eth);
        }

        #[test]
        fn timer_and_money_stay_bounded(
            steps in prop::collection::vec((0u64..200_000, 0u64..3_000, any::<bool>()), 1..80),
        ) {
            let mut s = fresh();
            let mut paid_in = Wei::zero();
            let mut trace = Vec::new();
            for (dt, finney, fin) in steps {
                let now = s.now + dt;
                if fin {
                    if let Ok(e) = s.finalize_round(now) { trace.push(e) }
                } else if let Ok(ev) = s.buy_keys(&human("p"), Wei::finney(finney), Team::Whale, None, &BlockCtx::at(now), now) {
                    paid_in += &Wei::finney(finney);
                    trace.extend(ev);
                }
                prop_assert!(s.air_drop_tracker <= TRACKER_CAP);
                if !s.round_over {
                    prop_assert!(s.deadline <= s.now + ROUND_MAX);
                }
                prop_assert_eq!(&paid_in, &(&s.holdings() + &total_of(&trace, EventKind::Payout)));
            }
        }
    }
}
