//! Oracle-based privacy games against pluggable distinguishers.
//!
//! Each trial builds a fresh [`OracleHandle`] world from `(seed, trial)`,
//! runs the distinguisher's learning phase on the non-challenge tags, then
//! its challenge phase, and scores its guess against the Test coin.

mod distinguishers;
mod lemma1;
mod stats;
mod world;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::Result;
use crate::hash::HashVariant;

pub use distinguishers::{
    advance_key, by_name, consistent, Distinguisher, Exhaustive, KeyKnowledge, RandomGuess,
    StaticId, DISTINGUISHERS, EXHAUSTIVE_MAX_LAMBDA,
};
pub use lemma1::{lemma1_bijection_check, lemma1_pairs, Lemma1Report, LEMMA1_MAX_WIDTH};
pub use stats::{wilson_interval, WinStats, Z95};
pub use world::{
    BlindTranscript, Budgets, GameConfig, GameKind, Observation, Oracle, OracleCounts,
    OracleHandle, Phase, SessionRecord, Transcript, WorldState,
};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GameResult {
    pub definition: GameKind,
    pub distinguisher: String,
    pub lambda: usize,
    pub n: usize,
    pub hash: HashVariant,
    pub budgets: Budgets,
    pub seed: u64,
    #[serde(flatten)]
    pub stats: WinStats,
}

/// Plays one trial and reports whether the distinguisher won.
pub fn play_trial(
    kind: GameKind,
    cfg: &GameConfig,
    trial: u64,
    d: &mut dyn Distinguisher,
) -> Result<bool> {
    let mut o = OracleHandle::new(kind, cfg, trial)?;
    d.learn(&mut o)?;
    o.start_challenge()?;
    d.challenge(&mut o)?;
    let guess = d.guess();
    o.outcome(guess)
}

/// Runs `cfg.trials` independent trials, in parallel.
pub fn run_game<F>(kind: GameKind, cfg: &GameConfig, make: F) -> Result<GameResult>
where
    F: Fn() -> Box<dyn Distinguisher> + Sync,
{
    cfg.validate(kind)?;
    let name = make().name().to_string();
    let wins = (0..cfg.trials as u64)
        .into_par_iter()
        .map(|t| play_trial(kind, cfg, t, make().as_mut()))
        .try_fold(|| 0u64, |acc, won| won.map(|w| acc + w as u64))
        .try_reduce(|| 0, |a, b| Ok(a + b))?;
    Ok(GameResult {
        definition: kind,
        distinguisher: name,
        lambda: cfg.lambda,
        n: cfg.n,
        hash: cfg.hash,
        budgets: cfg.budgets.clone(),
        seed: cfg.seed,
        stats: WinStats::new(wins, cfg.trials as u64),
    })
}
