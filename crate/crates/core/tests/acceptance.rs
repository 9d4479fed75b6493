//! One line per acceptance criterion; exits non-zero if any fails.

use std::collections::HashMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use kimap::channel::{AdversaryAction, FaultSchedule, Flight, Simulator};
use kimap::cost::{check_budget, compute_cost, BudgetLimits, CostParams};
use kimap::games::{
    lemma1_bijection_check, run_game, GameConfig, GameKind, KeyKnowledge, OracleHandle,
    RandomGuess,
};
use kimap::protocol::{
    derive_slot, keygen, BroadcastAuth, Challenge, KeySlot, MasterKey, TagOutcome,
};
use kimap::{BitString, HashFn, HashSpec, Prng};
use rand::Rng;

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn secs(d: Duration) -> String {
    format!("{:.2} s", d.as_secs_f64())
}

fn c1_honest_sync() -> Outcome {
    let start = Instant::now();
    let h = HashSpec::production(64).map_err(|e| e.to_string())?;
    let (mut server, mut tags) = keygen(64, 3, &mut Prng::new(2010, 0)).unwrap();
    let mut sim = Simulator::new();
    for k in 0..1000 {
        let idx = k % tags.len();
        let tr = sim.run_session(&mut server, &mut tags[idx], idx, &[], &h);
        ensure!(tr.outcome_server.is_accepted(), "session {} rejected", tr.session_seq);
        ensure!(tr.outcome_tag == TagOutcome::Updated, "tag not updated in {}", tr.session_seq);
        for (t, r) in tags.iter().zip(server.records()) {
            ensure!(t.key() == &r.key_current, "keys diverged after session {}", tr.session_seq);
        }
    }
    let took = start.elapsed();
    ensure!(took < Duration::from_secs(5), "took {}", secs(took));
    Ok(format!("1000/1000 accepted, keys equal after every session, {}", secs(took)))
}

fn c2_tag_budget() -> Outcome {
    let h = HashSpec::production(64).unwrap();
    let mut seen = Vec::new();
    for c in [1usize, 2, 3, 5, 8] {
        let (mut server, mut tags) = keygen(64, c, &mut Prng::new(7, c as u64)).unwrap();
        let tag = &mut tags[0];
        let before = tag.ops();
        let ch = server.begin();
        let nonce = tag.respond_nonce();
        let (bc, pending) = server.prepare(&h, &ch.x_s, &nonce.x_t).unwrap();
        ensure!(bc.candidates.len() == c, "expected {c} candidates");
        let (auth, outcome) = tag.verify_and_respond(&h, &ch, &bc).unwrap();
        ensure!(outcome == TagOutcome::Updated, "honest session failed at c={c}");
        ensure!(server.finalize(pending, Some(&auth)).is_accepted(), "server rejected at c={c}");
        let used = tag.ops().since(&before);
        ensure!(
            used.hash_equivalent() == 3 + c as u64,
            "c={c}: {} hash-equivalents, expected {}",
            used.hash_equivalent(),
            3 + c
        );
        ensure!(used.xor == c as u64, "c={c}: {} XORs", used.xor);
        if c == 1 {
            ensure!(used.hash_equivalent() == 4 && used.xor == 1, "single candidate: {used:?}");
        }
        seen.push(format!("c={c}:{}", used.hash_equivalent()));
    }
    Ok(format!("c=1 → 4 hash-eq + 1 XOR; 3+c for {}", seen.join(" ")))
}

fn c3_storage() -> Outcome {
    for lambda in [8usize, 16, 64, 128] {
        let h = HashSpec::production(lambda).unwrap();
        let (mut server, mut tags) = keygen(lambda, 1, &mut Prng::new(3, 0)).unwrap();
        let mut sim = Simulator::new();
        for _ in 0..5 {
            sim.run_session(&mut server, &mut tags[0], 0, &[], &h);
            let tag = &tags[0];
            ensure!(tag.is_idle(), "tag holds session values between sessions");
            let bits = tag.persistent_secret_bits().map_err(|e| e.to_string())?;
            ensure!(bits == lambda, "λ={lambda}: {bits} secret bits");
            ensure!(tag.snapshot().key.len() == lambda, "snapshot key length");
        }
        let tag = &mut tags[0];
        tag.respond_nonce();
        ensure!(tag.persistent_secret_bits().is_err(), "mid-session state not detected");
        tag.abort();
    }
    Ok("exactly λ secret bits between sessions for λ ∈ {8,16,64,128}".into())
}

fn c4_cost() -> Outcome {
    let p = CostParams::default();
    let r = compute_cost(&p).map_err(|e| e.to_string())?;
    let got = [
        ("hash", r.hash_time_ms.to_string(), "0.33"),
        ("tag compute", r.tag_compute_ms.to_string(), "1.32"),
        ("t2r", r.t2r_ms.to_string(), "0.20"),
        ("r2t", r.r2t_ms.to_string(), "1.52"),
        ("total", r.total_ms.to_string(), "3.04"),
        ("total approx", r.total_approx_ms.clone(), "3.0"),
        ("single serial", r.single_serial_ms.to_string(), "6.40"),
        ("batch serial", r.batch_serial_s.to_string(), "1.28"),
    ];
    for (name, v, want) in &got {
        ensure!(v == want, "{name}: got {v}, want {want}");
    }
    ensure!(r.batch_tags == 200, "batch size {}", r.batch_tags);
    let verdict = check_budget(&r, &BudgetLimits::default()).unwrap();
    ensure!(verdict.pass, "default budget check failed");
    Ok(format!(
        "0.33/1.32/0.20/1.52 ms, total 3.04 ≈ {} ms, serial 6.40 ms, 200 tags 1.28 s",
        r.total_approx_ms
    ))
}

fn c5_lemma1() -> Outcome {
    let l = Prng::new(2010, 5).next_bits(8);
    let r = lemma1_bijection_check(8, &l).map_err(|e| e.to_string())?;
    ensure!(r.domain == 256 && r.distinct_images == 256 && r.bijective, "{r:?}");
    Ok(format!("L={l}: 256/256 distinct images"))
}

fn c6_composition() -> Outcome {
    for seed in 0..100u64 {
        let cfg = GameConfig {
            seed,
            ..GameConfig::default()
        };
        let mut a = OracleHandle::new(GameKind::Indistinguishability, &cfg, 0).unwrap();
        let t = (0..a.n()).find(|&t| !a.is_challenge_tag(t)).unwrap();
        let mut b = a.clone();
        for round in 0..3 {
            let ex = a.execute(t).map_err(|e| e.to_string())?;
            let x_s = b.query().unwrap();
            let x_t = b.query_prime(t).unwrap();
            let (sigma, delta) = b.reply(t, &x_t).unwrap();
            let sigma_prime = b.reply_prime(t, &x_s, &sigma, &delta).unwrap();
            ensure!(
                (ex.x_s, ex.x_t, ex.sigma, ex.delta, ex.sigma_prime)
                    == (x_s, x_t, sigma, delta, sigma_prime),
                "seed {seed} round {round}: transcripts differ"
            );
            ensure!(a.world_state() == b.world_state(), "seed {seed}: world states differ");
        }
    }
    Ok("100 seeds × 3 sessions bitwise identical at λ=16 toy".into())
}

fn game_cfg() -> GameConfig {
    GameConfig {
        lambda: 16,
        trials: 10_000,
        ..GameConfig::default()
    }
}

fn c7_backward_differential() -> Outcome {
    let start = Instant::now();
    let cfg = game_cfg();
    let make = || Box::new(KeyKnowledge::default()) as Box<dyn kimap::games::Distinguisher>;
    let blind = run_game(GameKind::Backward, &cfg, make).map_err(|e| e.to_string())?;
    let leaky = run_game(GameKind::BackwardControl, &cfg, make).map_err(|e| e.to_string())?;
    let took = start.elapsed();
    ensure!(blind.stats.advantage <= 0.02, "restricted advantage {}", blind.stats.advantage);
    ensure!(leaky.stats.win_rate >= 0.99, "leaky win rate {}", leaky.stats.win_rate);
    ensure!(took < Duration::from_secs(60), "took {}", secs(took));
    Ok(format!(
        "x^s withheld: advantage {:.4}; x^s leaked: win rate {:.4}; {}",
        blind.stats.advantage,
        leaky.stats.win_rate,
        secs(took)
    ))
}

fn c8_forward() -> Outcome {
    let r = run_game(GameKind::Forward, &game_cfg(), || Box::new(KeyKnowledge::default()))
        .map_err(|e| e.to_string())?;
    ensure!(r.stats.advantage <= 0.02, "advantage {}", r.stats.advantage);
    Ok(format!("advantage {:.4} (ci95 ±{:.4})", r.stats.advantage, r.stats.ci95))
}

fn c9_null() -> Outcome {
    let mut parts = Vec::new();
    for kind in [GameKind::Indistinguishability, GameKind::Forward, GameKind::Backward] {
        let r = run_game(kind, &game_cfg(), || Box::new(RandomGuess::default()))
            .map_err(|e| e.to_string())?;
        ensure!(
            r.stats.consistent_with_chance(),
            "{kind}: win rate {} outside [{}, {}]",
            r.stats.win_rate,
            r.stats.wilson_low,
            r.stats.wilson_high
        );
        parts.push(format!("{kind} {:.4}", r.stats.win_rate));
    }
    Ok(format!("1/2 inside the 95% Wilson interval: {}", parts.join(", ")))
}

fn c10_tamper() -> Outcome {
    let lambda = 64;
    let h = HashSpec::production(lambda).unwrap();
    let (mut server, mut tags) = keygen(lambda, 1, &mut Prng::new(10, 0)).unwrap();
    let mut rng = Prng::new(10, 1);
    for trial in 0..100 {
        let tag = &mut tags[0];
        let key_before = tag.key().clone();
        let ch = server.begin();
        let nonce = tag.respond_nonce();
        let (bc, pending) = server.prepare(&h, &ch.x_s, &nonce.x_t).unwrap();
        let mut bad = bc.clone();
        let bit = rng.gen_range(0..lambda);
        let cand = &mut bad.candidates[0];
        if rng.gen::<bool>() {
            cand.sigma = cand.sigma.flip_bit(bit);
        } else {
            cand.delta = cand.delta.flip_bit(bit);
        }
        let (fail, outcome) = tag.verify_and_respond(&h, &ch, &bad).unwrap();
        ensure!(outcome == TagOutcome::NotUpdated, "trial {trial}: tag updated");
        ensure!(tag.key() == &key_before, "trial {trial}: key changed");
        ensure!(fail.sigma_prime.len() == lambda, "trial {trial}: failure σ' length");
        ensure!(!server.finalize(pending, Some(&fail)).is_accepted(), "trial {trial}: accepted");

        // an honest session afterwards restores the pairing and has the same shape
        let ch = server.begin();
        let nonce = tag.respond_nonce();
        let (bc, pending) = server.prepare(&h, &ch.x_s, &nonce.x_t).unwrap();
        let (ok, outcome) = tag.verify_and_respond(&h, &ch, &bc).unwrap();
        ensure!(outcome == TagOutcome::Updated, "trial {trial}: honest follow-up failed");
        ensure!(ok.sigma_prime.len() == fail.sigma_prime.len(), "response lengths differ");
        ensure!(server.finalize(pending, Some(&ok)).is_accepted(), "follow-up rejected");
    }
    Ok("100/100 single-bit corruptions: λ-bit response, no key update".into())
}

fn c11_desync() -> Outcome {
    let h = HashSpec::production(64).unwrap();
    let (mut server, mut tags) = keygen(64, 1, &mut Prng::new(11, 0)).unwrap();
    let mut sim = Simulator::new();
    let drop4 = |s| vec![AdversaryAction::drop(s, Flight::TagAuth)];

    let tr = sim.run_session(&mut server, &mut tags[0], 0, &drop4(1), &h);
    ensure!(tr.outcome_tag == TagOutcome::Updated, "tag should update before the drop");
    ensure!(!tr.outcome_server.is_accepted(), "server accepted without σ'");
    ensure!(!server.records()[0].is_desynchronized(), "flagged after one drop");

    let tr = sim.run_session(&mut server, &mut tags[0], 0, &[], &h);
    ensure!(
        tr.outcome_server.slot() == Some(KeySlot::Recovery),
        "recovery session: {:?}",
        tr.outcome_server
    );
    ensure!(tags[0].key() == &server.records()[0].key_current, "not resynchronized");

    sim.run_session(&mut server, &mut tags[0], 0, &drop4(3), &h);
    sim.run_session(&mut server, &mut tags[0], 0, &drop4(4), &h);
    ensure!(server.records()[0].is_desynchronized(), "two consecutive drops not flagged");
    let tr = sim.run_session(&mut server, &mut tags[0], 0, &[], &h);
    ensure!(!tr.outcome_server.is_accepted(), "desynchronized tag still accepted");

    // the same pattern through a schedule over three tags
    let (mut server, mut tags) = keygen(64, 3, &mut Prng::new(11, 1)).unwrap();
    let sched = FaultSchedule::parse("1 4 drop\n7 4 drop\n10 4 drop\n").unwrap();
    let out = Simulator::new()
        .run_schedule(&mut server, &mut tags, &sched, 12, &h)
        .unwrap();
    ensure!(
        out[3].outcome_server.slot() == Some(KeySlot::Recovery),
        "tag 0 did not recover in session 4"
    );
    let flagged: Vec<_> = server
        .records()
        .iter()
        .filter(|r| r.is_desynchronized())
        .map(|r| r.label.to_string())
        .collect();
    ensure!(flagged == ["tag-1"], "flagged records {flagged:?}");
    Ok("one drop recovers next session; two consecutive drops flag the record".into())
}

fn c12_fixtures() -> Outcome {
    let v: HashMap<&str, &str> = include_str!("fixtures/toy_vectors.txt")
        .lines()
        .filter_map(|l| l.split_once(" = "))
        .collect();
    let bits = |k: &str| v[k].parse::<BitString>().unwrap();
    let h = HashSpec::toy(8).unwrap();
    let seed: u64 = v["session.seed"].parse().unwrap();
    let (mut server, mut tags) = keygen(8, 1, &mut Prng::new(seed, 0)).unwrap();
    let k1 = tags[0].key().clone();
    ensure!(k1 == bits("session.k1"), "k_1");
    ensure!(server.master() == &MasterKey::new(bits("session.master")), "SK*");
    let ch = server.begin();
    let nonce = tags[0].respond_nonce();
    let m = derive_slot(&h, 1, server.master(), &k1, &ch.x_s, &nonce.x_t).unwrap();
    let checks = [
        ("x_s", ch.x_s.clone()),
        ("x_t", nonce.x_t.clone()),
        ("x1", m.x.clone()),
        ("sigma", m.sigma.clone()),
        ("delta", m.delta.clone()),
        ("sk", m.session_key.clone()),
    ];
    for (name, got) in checks {
        ensure!(got == bits(&format!("session.{name}")), "{name}: got {got}");
    }
    let (bc, pending) = server.prepare(&h, &ch.x_s, &nonce.x_t).unwrap();
    ensure!(
        bc == BroadcastAuth { candidates: vec![kimap::protocol::ServerAuthCandidate { sigma: m.sigma, delta: m.delta }] },
        "broadcast"
    );
    let (auth, _) = tags[0]
        .verify_and_respond(&h, &Challenge { x_s: ch.x_s.clone() }, &bc)
        .unwrap();
    ensure!(auth.sigma_prime == bits("session.sigma_prime"), "σ'");
    ensure!(tags[0].key() == &bits("session.k2"), "k_2");
    ensure!(server.finalize(pending, Some(&auth)).is_accepted(), "server rejected");
    ensure!(server.records()[0].key_current == bits("session.k2"), "server k_2");
    ensure!(h.hash2(&bits("hash2.1.left"), &bits("hash2.1.right")) == bits("hash2.1.digest"), "hash2 KAT");
    Ok("x_1, σ, δ, sk, σ', k_2 match the straight-line oracle at λ=8".into())
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 12] = [
        ("honest-run synchronization", c1_honest_sync),
        ("tag operation budget", c2_tag_budget),
        ("tag storage", c3_storage),
        ("cost reproduction", c4_cost),
        ("xor-mask bijection", c5_lemma1),
        ("oracle composition identity", c6_composition),
        ("restricted-backward differential", c7_backward_differential),
        ("forward security", c8_forward),
        ("null calibration", c9_null),
        ("tamper countermeasure", c10_tamper),
        ("desync recovery", c11_desync),
        ("known-answer fixtures", c12_fixtures),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let result = catch_unwind(AssertUnwindSafe(f))
            .unwrap_or_else(|_| Err("panicked".to_string()));
        match result {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {why}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
