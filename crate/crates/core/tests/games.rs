use kimap::games::{
    advance_key, by_name, consistent, play_trial, run_game, Budgets, Exhaustive, GameConfig,
    GameKind, Observation, OracleHandle, Phase, StaticId,
};
use kimap::Error;

fn cfg(trials: u32) -> GameConfig {
    GameConfig {
        trials,
        ..GameConfig::default()
    }
}

fn world(kind: GameKind, trial: u64) -> OracleHandle {
    OracleHandle::new(kind, &GameConfig::default(), trial).unwrap()
}

fn other(o: &OracleHandle) -> usize {
    (0..o.n()).find(|&t| !o.is_challenge_tag(t)).unwrap()
}

#[test]
fn budgets_are_enforced() {
    let mut c = GameConfig::default();
    c.budgets = Budgets {
        e1: 1,
        q: 2,
        ..Budgets::default()
    };
    let mut o = OracleHandle::new(GameKind::Indistinguishability, &c, 0).unwrap();
    let t = other(&o);
    o.execute(t).unwrap();
    assert_eq!(o.execute(t).unwrap_err(), Error::BudgetExceeded("Execute"));
    o.query().unwrap();
    o.query_prime(t).unwrap();
    assert_eq!(o.query().unwrap_err(), Error::BudgetExceeded("Query"));
    assert_eq!(o.used().query, 2);
}

#[test]
fn test_is_single_use_and_required() {
    let mut o = world(GameKind::Indistinguishability, 1);
    assert_eq!(o.outcome(true).unwrap_err(), Error::TestNotCalled);
    o.start_challenge().unwrap();
    let c = o.challenge_tag();
    let p = o.test_period().unwrap();
    o.test(c, p).unwrap();
    assert_eq!(o.test(c, p).unwrap_err(), Error::DoubleTest);
    assert_ne!(o.outcome(true).unwrap(), o.outcome(false).unwrap());
}

#[test]
fn phase_rules() {
    let mut o = world(GameKind::Forward, 2);
    let c = o.challenge_tag();
    assert_eq!(o.phase(), Phase::Learning);
    assert!(matches!(o.execute(c), Err(Error::Misuse(_))));
    assert!(matches!(o.reveal_secret(other(&o)), Err(Error::Misuse(_))));
    o.start_challenge().unwrap();
    assert!(matches!(o.start_challenge(), Err(Error::Misuse(_))));
    assert!(matches!(o.execute(other(&o)), Err(Error::Misuse(_))));
    assert!(matches!(o.execute(99), Err(Error::Misuse(_))));
}

#[test]
fn oracle_sets_per_game() {
    let mut o = world(GameKind::Backward, 3);
    let t = other(&o);
    assert!(matches!(o.execute(t), Err(Error::Misuse(_))));
    assert!(matches!(o.query(), Err(Error::Misuse(_))));
    o.execute_b(t).unwrap();
    let mut o = world(GameKind::Indistinguishability, 3);
    assert!(matches!(o.execute_b(other(&o)), Err(Error::Misuse(_))));
    o.start_challenge().unwrap();
    let c = o.challenge_tag();
    assert!(matches!(o.reveal_secret(c), Err(Error::Misuse(_))));
}

#[test]
fn test_period_misuse() {
    let mut o = world(GameKind::Forward, 4);
    o.start_challenge().unwrap();
    let c = o.challenge_tag();
    assert!(matches!(o.test_period(), Err(Error::Misuse(_))));
    o.reveal_secret(c).unwrap();
    let p = o.test_period().unwrap();
    assert!(matches!(o.test(c, p + 1), Err(Error::Misuse(_))));
    // observing the instance disqualifies it
    let mut o2 = world(GameKind::Forward, 4);
    o2.start_challenge().unwrap();
    let c2 = o2.challenge_tag();
    o2.execute(c2).unwrap();
    o2.reveal_secret(c2).unwrap();
    let p2 = o2.test_period().unwrap();
    assert!(matches!(o2.test(c2, p2), Err(Error::Misuse(_))));
}

#[test]
fn forward_test_targets_the_hidden_session() {
    let mut o = world(GameKind::Forward, 5);
    o.start_challenge().unwrap();
    let c = o.challenge_tag();
    let hidden = o.records().last().unwrap().clone();
    assert_eq!(hidden.observation, Observation::Hidden);
    o.reveal_secret(c).unwrap();
    assert_eq!(o.test_period().unwrap(), hidden.period);
    let m = o.test(c, hidden.period).unwrap();
    assert_eq!(m == hidden.transcript, o.outcome(true).unwrap());
}

#[test]
fn test_returns_real_or_random_shape() {
    let mut seen = [false; 2];
    for trial in 0..40 {
        let mut o = world(GameKind::Indistinguishability, trial);
        o.start_challenge().unwrap();
        let c = o.challenge_tag();
        let p = o.test_period().unwrap();
        let m = o.test(c, p).unwrap();
        for v in [&m.x_s, &m.sigma, &m.delta, &m.x_t, &m.sigma_prime] {
            assert_eq!(v.len(), 16);
        }
        let b = o.outcome(true).unwrap();
        let last = o.records().last().unwrap();
        assert_eq!(last.observation, Observation::Hidden);
        assert_eq!(last.transcript == m, b);
        seen[b as usize] = true;
    }
    assert_eq!(seen, [true, true]);
}

#[test]
fn test_coin_is_fair() {
    let n = 10_000u64;
    let ones: u64 = (0..n)
        .map(|trial| {
            let mut o = world(GameKind::Indistinguishability, trial);
            o.start_challenge().unwrap();
            let c = o.challenge_tag();
            let p = o.test_period().unwrap();
            o.test(c, p).unwrap();
            o.outcome(true).unwrap() as u64
        })
        .sum();
    let sd = (n as f64 * 0.25).sqrt();
    assert!((ones as f64 - n as f64 / 2.0).abs() < 3.0 * sd, "{ones}");
}

#[test]
fn blind_session_matches_full_session_state() {
    let a = world(GameKind::BackwardControl, 6);
    let t = other(&a);
    let (mut a, mut b) = (a.clone(), a);
    let full = a.execute(t).unwrap();
    let blind = b.execute_b(t).unwrap();
    assert_eq!(a.world_state(), b.world_state());
    assert_eq!((full.sigma, full.x_t), (blind.sigma, blind.x_t));
    assert_ne!(blind.x_rand, full.x_s);
}

#[test]
fn query_reply_composition_completes_a_session() {
    let mut o = world(GameKind::Indistinguishability, 7);
    let t = other(&o);
    let x_s = o.query().unwrap();
    let x_t = o.query_prime(t).unwrap();
    let (sigma, delta) = o.reply(t, &x_t).unwrap();
    let before = o.world_state();
    o.reply_prime(t, &x_s, &sigma, &delta).unwrap();
    let after = o.world_state();
    assert_ne!(before.tags[t].key, after.tags[t].key);
    assert_eq!(after.tags[t].key, after.records[t].key_current);
    let rec = o.records().last().unwrap();
    assert!(rec.tag_updated);
    assert_eq!(rec.observation, Observation::Full);
}

#[test]
fn corrupted_reply_leaves_key_unchanged() {
    let mut o = world(GameKind::Indistinguishability, 8);
    let t = other(&o);
    let x_s = o.query().unwrap();
    let x_t = o.query_prime(t).unwrap();
    let (sigma, delta) = o.reply(t, &x_t).unwrap();
    let before = o.world_state().tags[t].clone();
    o.reply_prime(t, &x_s, &sigma.flip_bit(0), &delta).unwrap();
    assert_eq!(o.world_state().tags[t], before);
    assert!(!o.records().last().unwrap().tag_updated);
}

#[test]
fn reply_b_needs_an_issued_stand_in() {
    let mut o = world(GameKind::Backward, 9);
    let t = other(&o);
    let x_rand = o.query_b().unwrap();
    let x_t = o.query_prime(t).unwrap();
    let (sigma, delta) = o.reply(t, &x_t).unwrap();
    assert!(matches!(
        o.reply_b(t, &x_rand.flip_bit(0), &sigma, &delta),
        Err(Error::Misuse(_))
    ));
    o.reply_b(t, &x_rand, &sigma, &delta).unwrap();
    assert!(o.records().last().unwrap().tag_updated);
    assert_eq!(o.records().last().unwrap().observation, Observation::Blind);
}

#[test]
fn revealed_key_tracks_sessions() {
    let mut o = world(GameKind::BackwardControl, 10);
    o.start_challenge().unwrap();
    let c = o.challenge_tag();
    let k0 = o.reveal_secret(c).unwrap();
    let t = o.execute(c).unwrap();
    assert!(consistent(o.hash(), &k0, &t).unwrap());
    let k1 = o.reveal_secret(c).unwrap();
    assert_eq!(advance_key(o.hash(), &k0, &t.delta, &t.x_s).unwrap(), k1);
}

#[test]
fn trials_are_reproducible() {
    let mut d1 = by_name("key-knowledge").unwrap();
    let mut d2 = by_name("key-knowledge").unwrap();
    for trial in 0..20 {
        let c = GameConfig::default();
        assert_eq!(
            play_trial(GameKind::Forward, &c, trial, d1.as_mut()).unwrap(),
            play_trial(GameKind::Forward, &c, trial, d2.as_mut()).unwrap()
        );
    }
}

#[test]
fn exhaustive_search_breaks_forward_privacy_at_toy_size() {
    let r = run_game(GameKind::Forward, &cfg(8), || Box::new(Exhaustive::default())).unwrap();
    assert!(r.stats.win_rate >= 0.75, "{}", r.stats.win_rate);
    assert!(matches!(
        run_game(GameKind::Indistinguishability, &cfg(1), || Box::new(Exhaustive::default())),
        Err(Error::InvalidParameter(_))
    ));
}

#[test]
fn static_id_and_two_tag_runs_stay_at_chance() {
    for kind in [GameKind::Indistinguishability, GameKind::TwoTag] {
        let r = run_game(kind, &cfg(2000), || Box::new(StaticId::default())).unwrap();
        assert!(r.stats.consistent_with_chance(), "{kind}: {}", r.stats.win_rate);
    }
    let r = run_game(GameKind::TwoTag, &cfg(2000), || by_name("key-knowledge").unwrap()).unwrap();
    assert!(r.stats.consistent_with_chance());
}

#[test]
fn config_validation() {
    let mut c = GameConfig::default();
    c.n = 1;
    assert!(run_game(GameKind::TwoTag, &c, || by_name("random-guess").unwrap()).is_err());
    c.n = 2;
    c.trials = 0;
    assert!(run_game(GameKind::Indistinguishability, &c, || by_name("random-guess").unwrap())
        .is_err());
    assert!(by_name("nope").is_none());
    assert_eq!(GameKind::from_name("backward-control"), Some(GameKind::BackwardControl));
}
