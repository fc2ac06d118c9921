//! Acceptance gate: one PASS/FAIL line per criterion, non-zero exit on any failure.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use num_bigint::BigUint;
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ponziscan::fomo3d::{
    airdrop_win, compute_seed, is_human, AccountModel, BlockCtx, RoundConfig, RoundState, Split, Team, TeamSplit,
    ROUND_MAX, TRACKER_CAP,
};
use ponziscan::sim::{run_scenario, Action, ActorId, ChainState, EventKind, SchemeKind, SchemeParams, TreeState, Wei};
use ponziscan::{classify_unit, parse, scan_contract, SchemeClass, Swc};

fn corpus_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures/corpus")
}

fn fixture(name: &str) -> String {
    std::fs::read_to_string(corpus_dir().join(name)).expect("fixture exists")
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn check(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

type Criterion = (&'static str, fn() -> Outcome);

fn within(limit: Duration, elapsed: Duration) -> bool {
    elapsed < limit
}

fn c1_classification() -> Outcome {
    let cases = [
        ("etheramid.sol", SchemeClass::Tree),
        ("crystal_doubler.sol", SchemeClass::Chain),
        ("ponzico.sol", SchemeClass::Waterfall),
        ("ponzi_scheme.sol", SchemeClass::Transfer),
    ];
    let sources: Vec<(String, SchemeClass)> = cases.iter().map(|(f, c)| (fixture(f), *c)).collect();
    let start = Instant::now();
    let mut got = Vec::new();
    for (src, _) in &sources {
        let unit = parse(src).expect("canonical listing parses");
        got.push(classify_unit(&unit).map(|(_, c)| c.class));
    }
    let elapsed = start.elapsed();
    let hits = got.iter().zip(&sources).filter(|(g, (_, want))| **g == Some(*want)).count();
    let names: Vec<String> = got.iter().map(|g| g.map(|c| c.to_string()).unwrap_or("none".into())).collect();
    check(
        hits == 4 && within(Duration::from_secs(1), elapsed),
        format!("{hits}/4 exact [{}] in {elapsed:.2?} (limit 1 s)", names.join(", ")),
    )
}

fn c2_unchecked_send() -> Outcome {
    let want = [("etheramid.sol", 3), ("ponzi_scheme.sol", 1), ("ponzico.sol", 0)];
    let mut parts = Vec::new();
    let mut ok = true;
    for (name, n) in want {
        let unit = parse(&fixture(name)).expect("canonical listing parses");
        let got = scan_contract(&unit).iter().filter(|f| f.swc == Swc::Swc104).count();
        ok &= got == n;
        parts.push(format!("{name} {got} (want {n})"));
    }
    check(ok, format!("SWC-104 counts: {}", parts.join(", ")))
}

fn c3_chain_oracle() -> Outcome {
    let mut s = ChainState::default();
    let mut payouts = Vec::new();
    for d in ["d1", "d2", "d3"] {
        for e in s.deposit(&ActorId::new(d), Wei::ether(1)) {
            if e.kind == EventKind::Payout {
                payouts.push((e.actor.to_string(), e.amount));
            }
        }
    }
    let ok = payouts == [("d1".to_string(), Wei::ether(2))] && s.balance == Wei::ether(1);
    check(ok, format!("payouts {payouts:?}, final balance {} wei", s.balance))
}

fn c4_transfer_roi() -> Outcome {
    let script: Vec<Action> = [("A", 1), ("B", 2), ("C", 4), ("D", 8)]
        .into_iter()
        .map(|(a, e)| Action::Deposit { sender: ActorId::new(a), amount: Wei::ether(e) })
        .collect();
    let out = run_scenario(SchemeKind::Transfer, &SchemeParams::default(), &script);
    let two = BigRational::from_integer(2.into());
    let zero = BigRational::from_integer(0.into());
    let rois: Vec<Option<BigRational>> = ["A", "B", "C", "D"].iter().map(|a| out.roi.roi(a)).collect();
    let ok = rois[..3].iter().all(|r| r.as_ref() == Some(&two)) && rois[3].as_ref() == Some(&zero);
    let shown: Vec<String> = rois.iter().map(|r| r.as_ref().map(|r| r.to_string()).unwrap_or("-".into())).collect();
    check(ok, format!("ROI A,B,C,D = {}", shown.join(", ")))
}

fn random_script(kind: SchemeKind, rng: &mut ChaCha8Rng) -> Vec<Action> {
    let len = rng.random_range(0..60);
    let mut actors: Vec<ActorId> = vec![ActorId::top()];
    let mut next_transfer = Wei::ether(1);
    let mut script = Vec::with_capacity(len);
    for i in 0..len {
        let sender = ActorId::new(format!("p{}", rng.random_range(0..(i + 2))));
        let amount = if rng.random_bool(0.2) {
            Wei::from(rng.random_range(0..1_000_000u64))
        } else {
            Wei::finney(rng.random_range(0..5_000))
        };
        let action = match kind {
            SchemeKind::Tree => {
                let inviter = if rng.random_bool(0.05) {
                    ActorId::new("ghost")
                } else {
                    actors[rng.random_range(0..actors.len())].clone()
                };
                actors.push(sender.clone());
                Action::Enter { sender, amount, inviter }
            }
            SchemeKind::Chain => Action::Deposit { sender, amount },
            SchemeKind::Transfer => {
                if rng.random_bool(0.8) {
                    let amount = next_transfer.clone();
                    next_transfer = amount.mul_div(2, 1);
                    Action::Deposit { sender, amount }
                } else {
                    Action::Deposit { sender, amount }
                }
            }
            SchemeKind::Waterfall if rng.random_bool(0.25) => Action::Withdraw { sender },
            SchemeKind::Waterfall => Action::Invest { sender, amount },
        };
        script.push(action);
    }
    script
}

fn c5_conservation() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0005);
    let start = Instant::now();
    let mut runs = 0;
    let mut violations = 0;
    for kind in SchemeKind::ALL {
        for i in 0..1000 {
            let params = SchemeParams {
                faithful: i % 2 == 0,
                cap: if i % 3 == 0 { Wei::ether(20) } else { Wei::ether(200_000) },
                ..SchemeParams::default()
            };
            let script = random_script(kind, &mut rng);
            let out = run_scenario(kind, &params, &script);
            let held = num_bigint::BigInt::from((&out.state.balance() + &out.state.ledger_residual()).value().clone());
            let conserved = out.conservation_gap() == 0.into();
            let zero_sum = out.roi.residual() == held;
            runs += 1;
            violations += usize::from(!(conserved && zero_sum));
        }
    }
    let elapsed = start.elapsed();
    check(
        violations == 0 && within(Duration::from_secs(10), elapsed),
        format!("{runs} scripts, {violations} violations, {elapsed:.2?} (limit 10 s)"),
    )
}

fn c6_tree_structure() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0006);
    let (mut checked, mut bad) = (0usize, 0usize);
    while checked < 500 {
        let mut t = TreeState::new(Wei::finney(100));
        let mut members = vec![ActorId::top()];
        let size = rng.random_range(1..40);
        for i in 0..size {
            let me = ActorId::new(format!("m{i}"));
            let inviter = members[rng.random_range(0..members.len())].clone();
            // whole finney, at least the contribution
            let amount = Wei::finney(rng.random_range(100..100_000));
            let events = t.enter(&me, &inviter, amount.clone()).expect("inviter is registered");
            members.push(me);
            let paid: Vec<&Wei> = events.iter().filter(|e| e.kind == EventKind::Payout).map(|e| &e.amount).collect();
            let sum: Wei = paid.iter().copied().sum();
            let shrinking = paid.windows(2).all(|w| w[1] <= w[0]);
            checked += 1;
            bad += usize::from(!(paid.len() <= 7 && sum == amount && shrinking));
        }
    }
    check(
        bad == 0,
        format!("{checked} accepted enters, {bad} violating count <= 7, exact sum or non-increasing shares"),
    )
}

fn c7_airdrop() -> Outcome {
    let mut checks = 0;
    let mut wrong = Vec::new();
    for t in 0..=TRACKER_CAP {
        let wins = (0u32..1000).filter(|s| airdrop_win(&BigUint::from(*s), t)).count();
        checks += 1000;
        if wins != t as usize {
            wrong.push(format!("t={t}: {wins}"));
        }
    }
    check(
        wrong.is_empty(),
        format!("{checks} checks, mismatches: {}", if wrong.is_empty() { "none".into() } else { wrong.join(", ") }),
    )
}

fn c8_split_and_timer() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0008);
    let mut split_bad = 0;
    for _ in 0..200 {
        let eth = Wei::new(BigUint::from(rng.random_range(0..10u128.pow(24))));
        let pot = rng.random_range(0..=86);
        let split = Split::compute(&eth, &TeamSplit::percent(pot, 86 - pot));
        split_bad += usize::from(split.buckets().into_iter().sum::<Wei>() != eth);
    }
    let mut timer_bad = 0;
    let mut actions = 0;
    for _ in 0..50 {
        let mut s = RoundState::new(RoundConfig::default()).expect("default config is valid");
        let mut now = s.now;
        for _ in 0..100 {
            now += if rng.random_bool(0.9) { rng.random_range(0..120) } else { rng.random_range(0..2 * ROUND_MAX) };
            let team = Team::ALL[rng.random_range(0..4)];
            let buyer = AccountModel::external(ActorId::new(format!("b{}", rng.random_range(0..10))));
            if rng.random_bool(0.05) {
                let _ = s.finalize_round(now);
            } else {
                let eth = Wei::finney(rng.random_range(1..2_000));
                let _ = s.buy_keys(&buyer, eth, team, None, &BlockCtx::at(now), now);
            }
            actions += 1;
            timer_bad += usize::from(s.deadline.saturating_sub(now) > ROUND_MAX);
        }
    }
    check(
        split_bad == 0 && timer_bad == 0,
        format!("200 splits, {split_bad} inexact; {actions} timed actions, {timer_bad} past the 24 h cap"),
    )
}

fn c9_exploit_predicates() -> Outcome {
    let constructing = AccountModel { actor: ActorId::new("attacker"), code_size: 2_400, in_constructor_phase: true };
    let deployed = AccountModel { in_constructor_phase: false, ..constructing.clone() };
    let ctx = BlockCtx {
        timestamp: 1_532_000_000,
        difficulty: 3_000_000,
        coinbase: ActorId::new("miner"),
        gaslimit: 8_000_000,
        number: 6_000_000,
    };
    let seeds: Vec<_> = (0..5).map(|_| compute_seed(&ctx, &ActorId::new("attacker"))).collect();
    let deterministic = seeds.iter().all(|s| s.is_ok() && *s == seeds[0]);
    let ok = is_human(&constructing) && !is_human(&deployed) && deterministic;
    check(
        ok,
        format!(
            "is_human(constructor)={}, is_human(deployed)={}, seed stable over 5 evaluations={deterministic}",
            is_human(&constructing),
            is_human(&deployed)
        ),
    )
}

fn scan(dir: &Path, format: &str, parallel: usize, out: &Path) -> (Option<i32>, Vec<u8>) {
    let status = Command::new(env!("CARGO_BIN_EXE_ponziscan"))
        .arg("scan")
        .arg(dir)
        .args(["--format", format, "--parallel", &parallel.to_string(), "-o"])
        .arg(out)
        .stderr(std::process::Stdio::null())
        .status()
        .expect("binary runs");
    (status.code(), std::fs::read(out).unwrap_or_default())
}

fn c10_batch_determinism() -> Outcome {
    let tmp = tempfile::tempdir().expect("temp dir");
    let files = std::fs::read_dir(corpus_dir()).expect("corpus dir").count();
    let mut ok = files == 10;
    let mut notes = Vec::new();
    for format in ["json", "csv", "text"] {
        let runs: Vec<(Option<i32>, Vec<u8>)> = [(1, "a"), (1, "b"), (4, "c"), (8, "d")]
            .iter()
            .map(|(p, tag)| scan(&corpus_dir(), format, *p, &tmp.path().join(format!("{format}-{tag}"))))
            .collect();
        let identical = runs.iter().all(|r| r.1 == runs[0].1) && !runs[0].1.is_empty();
        let exit_one = runs.iter().all(|r| r.0 == Some(1));
        ok &= identical && exit_one;
        notes.push(format!("{format} {}", if identical { "identical" } else { "DIFFERS" }));
    }
    check(ok, format!("{files} files; runs x2 and --parallel 1/4/8: {}", notes.join(", ")))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("archetype classification", c1_classification),
        ("unchecked-send detector", c2_unchecked_send),
        ("chain simulation oracle", c3_chain_oracle),
        ("transfer ROI", c4_transfer_roi),
        ("conservation property suite", c5_conservation),
        ("tree structure property", c6_tree_structure),
        ("Fomo3D airdrop oracle", c7_airdrop),
        ("Fomo3D split exactness and timer cap", c8_split_and_timer),
        ("exploit predicates", c9_exploit_predicates),
        ("batch determinism", c10_batch_determinism),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let o = run();
        failed += usize::from(!o.pass);
        println!("{} {:>2}. {name}: {}", if o.pass { "PASS" } else { "FAIL" }, i + 1, o.detail);
    }
    println!("acceptance: {}/{} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
