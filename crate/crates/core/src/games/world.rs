use std::collections::HashMap;
use std::fmt;

use rand::seq::index::sample;
use rand::Rng;
use serde::Serialize;

use crate::bits::BitString;
use crate::error::{Error, Result};
use crate::hash::{HashSpec, HashVariant};
use crate::prng::Prng;
use crate::protocol::{
    keygen, BroadcastAuth, Challenge, PendingSession, Server, ServerAuthCandidate, Tag,
    TagOutcome, TagRecord, TagSnapshot,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum GameKind {
    /// Real-or-random on one challenge tag.
    Indistinguishability,
    /// Key revealed at period `i`, instance `i - 1` tested.
    Forward,
    /// Key revealed at period `i`, instance `i + 1` tested; the adversary
    /// only sees sessions with `x^s` withheld.
    Backward,
    /// [`GameKind::Backward`] with the full-view oracles also enabled.
    BackwardControl,
    /// Which of two challenge tags produced the tested instance.
    TwoTag,
}

impl GameKind {
    pub const ALL: [GameKind; 5] = [
        Self::Indistinguishability,
        Self::Forward,
        Self::Backward,
        Self::BackwardControl,
        Self::TwoTag,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Indistinguishability => "ind",
            Self::Forward => "forward",
            Self::Backward => "backward",
            Self::BackwardControl => "backward-control",
            Self::TwoTag => "ind2tag",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == name)
    }

    pub fn allows(self, o: Oracle) -> bool {
        use Oracle::*;
        let full = matches!(o, Query | QueryPrime | Reply | ReplyPrime | Execute | Test);
        let blind = matches!(o, QueryB | QueryPrime | Reply | ReplyB | ExecuteB | Test);
        match self {
            Self::Indistinguishability | Self::TwoTag => full,
            Self::Forward => full || o == RevealSecret,
            Self::Backward => blind || o == RevealSecret,
            Self::BackwardControl => full || blind || o == RevealSecret,
        }
    }

    fn stream_base(self) -> u64 {
        let idx = Self::ALL.iter().position(|&k| k == self).unwrap() as u64;
        (idx + 1) << 48
    }

    fn challenge_tags(self) -> usize {
        match self {
            Self::TwoTag => 2,
            _ => 1,
        }
    }

    /// Whether non-challenge tags may be queried again once Test is done.
    fn resumes_learning(self) -> bool {
        matches!(self, Self::Forward | Self::Backward | Self::BackwardControl)
    }
}

impl fmt::Display for GameKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Oracle {
    Query,
    QueryPrime,
    QueryB,
    Reply,
    ReplyPrime,
    ReplyB,
    Execute,
    ExecuteB,
    RevealSecret,
    Test,
}

impl Oracle {
    pub fn name(self) -> &'static str {
        match self {
            Self::Query => "Query",
            Self::QueryPrime => "Query'",
            Self::QueryB => "Query_b",
            Self::Reply => "Reply",
            Self::ReplyPrime => "Reply'",
            Self::ReplyB => "Reply_b",
            Self::Execute => "Execute",
            Self::ExecuteB => "Execute_b",
            Self::RevealSecret => "RevealSecret",
            Self::Test => "Test",
        }
    }
}

/// Per-world oracle budgets. `q` bounds the three Query oracles together.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Budgets {
    pub e1: u32,
    pub e2: u32,
    pub r1: u32,
    pub r2: u32,
    pub rb: u32,
    pub q: u32,
}

impl Default for Budgets {
    fn default() -> Self {
        Self {
            e1: 8,
            e2: 8,
            r1: 8,
            r2: 8,
            rb: 8,
            q: 16,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GameConfig {
    pub lambda: usize,
    pub n: usize,
    pub hash: HashVariant,
    pub budgets: Budgets,
    pub trials: u32,
    pub seed: u64,
}

impl Default for GameConfig {
    fn default() -> Self {
        Self {
            lambda: 16,
            n: 2,
            hash: HashVariant::Toy,
            budgets: Budgets::default(),
            trials: 10_000,
            seed: 2010,
        }
    }
}

impl GameConfig {
    pub fn validate(&self, kind: GameKind) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidParameter("trials must be at least 1".into()));
        }
        if self.n < kind.challenge_tags() {
            return Err(Error::InvalidParameter(format!(
                "{kind} needs at least {} tags",
                kind.challenge_tags()
            )));
        }
        HashSpec::new(self.hash, self.lambda).map(|_| ())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Phase {
    Learning,
    Challenge,
}

/// How much of a session the adversary saw.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Observation {
    Full,
    /// Everything except `x^s`.
    Blind,
    /// Run by the harness; nothing observed.
    Hidden,
}

/// The quintuple `(x^s, σ, δ, x^t, σ')` of one instance.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Transcript {
    pub x_s: BitString,
    pub sigma: BitString,
    pub delta: BitString,
    pub x_t: BitString,
    pub sigma_prime: BitString,
}

/// An Execute_b view: `x^s` replaced by an unrelated random `x^rand`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BlindTranscript {
    pub x_rand: BitString,
    pub sigma: BitString,
    pub delta: BitString,
    pub x_t: BitString,
    pub sigma_prime: BitString,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SessionRecord {
    pub tag: usize,
    pub period: u32,
    pub observation: Observation,
    pub transcript: Transcript,
    pub tag_updated: bool,
}

/// Server records and tag states, for comparing worlds.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WorldState {
    pub records: Vec<TagRecord>,
    pub tags: Vec<TagSnapshot>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct OracleCounts {
    pub execute: u32,
    pub execute_b: u32,
    pub reply: u32,
    pub reply_prime: u32,
    pub reply_b: u32,
    pub query: u32,
}

#[derive(Clone, Debug, Default)]
struct InFlight {
    x_t: Option<BitString>,
    pending: Option<PendingSession>,
}

/// One game world (server plus `n` tags) behind the oracle interface.
///
/// Cloning yields an independent world with identical state and randomness.
#[derive(Clone, Debug)]
pub struct OracleHandle {
    kind: GameKind,
    h: HashSpec,
    budgets: Budgets,
    server: Server,
    tags: Vec<Tag>,
    view: Prng,
    coins: Prng,
    adversary: Prng,
    phase: Phase,
    challenge: Vec<usize>,
    used: OracleCounts,
    last_x_s: Option<BitString>,
    rand_map: Vec<(BitString, BitString)>,
    in_flight: HashMap<usize, InFlight>,
    reveals: HashMap<usize, u32>,
    records: Vec<SessionRecord>,
    coin: Option<bool>,
}

impl OracleHandle {
    /// Phase 1 for trial `trial`: key generation and challenge-tag choice.
    /// Each game kind draws from its own family of streams.
    pub fn new(kind: GameKind, cfg: &GameConfig, trial: u64) -> Result<Self> {
        cfg.validate(kind)?;
        let h = HashSpec::new(cfg.hash, cfg.lambda)?;
        let mut root = Prng::new(cfg.seed, kind.stream_base() | trial);
        let (server, tags) = keygen(cfg.lambda, cfg.n, &mut root)?;
        let view = root.fork();
        let mut coins = root.fork();
        let adversary = root.fork();
        let challenge = sample(&mut coins, cfg.n, kind.challenge_tags()).into_vec();
        Ok(Self {
            kind,
            h,
            budgets: cfg.budgets.clone(),
            server,
            tags,
            view,
            coins,
            adversary,
            phase: Phase::Learning,
            challenge,
            used: OracleCounts::default(),
            last_x_s: None,
            rand_map: Vec::new(),
            in_flight: HashMap::new(),
            reveals: HashMap::new(),
            records: Vec::new(),
            coin: None,
        })
    }

    pub fn kind(&self) -> GameKind {
        self.kind
    }

    pub fn hash(&self) -> &HashSpec {
        &self.h
    }

    pub fn lambda(&self) -> usize {
        self.server.lambda()
    }

    pub fn n(&self) -> usize {
        self.tags.len()
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn used(&self) -> &OracleCounts {
        &self.used
    }

    pub fn budgets(&self) -> &Budgets {
        &self.budgets
    }

    /// The challenge tag `T^c` (the first of the pair in the two-tag game).
    pub fn challenge_tag(&self) -> usize {
        self.challenge[0]
    }

    pub fn challenge_tags(&self) -> &[usize] {
        &self.challenge
    }

    pub fn is_challenge_tag(&self, tag: usize) -> bool {
        self.challenge.contains(&tag)
    }

    /// The adversary's own coins.
    pub fn adversary_rng(&mut self) -> &mut Prng {
        &mut self.adversary
    }

    /// A tag's current session index.
    pub fn period(&self, tag: usize) -> Result<u32> {
        self.tags
            .get(tag)
            .map(Tag::counter)
            .ok_or_else(|| Error::Misuse(format!("no tag {tag}")))
    }

    pub fn records(&self) -> &[SessionRecord] {
        &self.records
    }

    pub fn world_state(&self) -> WorldState {
        WorldState {
            records: self.server.records().to_vec(),
            tags: self.tags.iter().map(Tag::snapshot).collect(),
        }
    }

    /// Ends Phase 2. The forward game runs one unobserved session on the
    /// challenge tag here, so that an instance `i - 1` exists that the
    /// adversary never saw.
    pub fn start_challenge(&mut self) -> Result<()> {
        if self.phase == Phase::Challenge {
            return Err(Error::Misuse("challenge phase already started".into()));
        }
        self.phase = Phase::Challenge;
        if self.kind == GameKind::Forward {
            self.hidden_session(self.challenge_tag())?;
        }
        Ok(())
    }

    fn check(&mut self, o: Oracle, tag: Option<usize>) -> Result<()> {
        if !self.kind.allows(o) {
            return Err(Error::Misuse(format!(
                "{} is not available in the {} game",
                o.name(),
                self.kind
            )));
        }
        if let Some(t) = tag {
            if t >= self.tags.len() {
                return Err(Error::Misuse(format!("no tag {t}")));
            }
            let challenge = self.is_challenge_tag(t);
            match self.phase {
                Phase::Learning if challenge => {
                    return Err(Error::Misuse(format!(
                        "{} on the challenge tag during learning",
                        o.name()
                    )));
                }
                Phase::Challenge
                    if !challenge && !(self.coin.is_some() && self.kind.resumes_learning()) =>
                {
                    return Err(Error::Misuse(format!(
                        "{} on a non-challenge tag during the challenge phase",
                        o.name()
                    )));
                }
                _ => {}
            }
        }
        if self.phase == Phase::Learning && matches!(o, Oracle::RevealSecret | Oracle::Test) {
            return Err(Error::Misuse(format!("{} during learning", o.name())));
        }
        let (count, limit, name) = match o {
            Oracle::Query | Oracle::QueryPrime | Oracle::QueryB => {
                (&mut self.used.query, self.budgets.q, "Query")
            }
            Oracle::Reply => (&mut self.used.reply, self.budgets.r1, "Reply"),
            Oracle::ReplyPrime => (&mut self.used.reply_prime, self.budgets.r2, "Reply'"),
            Oracle::ReplyB => (&mut self.used.reply_b, self.budgets.rb, "Reply_b"),
            Oracle::Execute => (&mut self.used.execute, self.budgets.e1, "Execute"),
            Oracle::ExecuteB => (&mut self.used.execute_b, self.budgets.e2, "Execute_b"),
            Oracle::RevealSecret | Oracle::Test => return Ok(()),
        };
        if *count >= limit {
            return Err(Error::BudgetExceeded(name));
        }
        *count += 1;
        Ok(())
    }

    /// `Query`: a fresh server challenge.
    pub fn query(&mut self) -> Result<BitString> {
        self.check(Oracle::Query, None)?;
        let x_s = self.server.begin().x_s;
        self.last_x_s = Some(x_s.clone());
        Ok(x_s)
    }

    /// `Query'`: the tag's nonce for a new session.
    pub fn query_prime(&mut self, tag: usize) -> Result<BitString> {
        self.check(Oracle::QueryPrime, Some(tag))?;
        let x_t = self.tags[tag].respond_nonce().x_t;
        self.in_flight.insert(
            tag,
            InFlight {
                x_t: Some(x_t.clone()),
                pending: None,
            },
        );
        Ok(x_t)
    }

    /// `Query_b`: the server draws a real challenge but the adversary gets
    /// an unrelated random value standing in for it.
    pub fn query_b(&mut self) -> Result<BitString> {
        self.check(Oracle::QueryB, None)?;
        let real = self.server.begin().x_s;
        let x_rand = self.view.next_bits(self.lambda());
        self.last_x_s = Some(real.clone());
        self.rand_map.push((x_rand.clone(), real));
        Ok(x_rand)
    }

    /// `Reply`: the server's `(σ, δ)` for `tag`'s current key, bound to the
    /// most recent challenge.
    pub fn reply(&mut self, tag: usize, x_t: &BitString) -> Result<(BitString, BitString)> {
        self.check(Oracle::Reply, Some(tag))?;
        let x_s = self
            .last_x_s
            .clone()
            .ok_or_else(|| Error::Misuse("Reply before any challenge was issued".into()))?;
        let (cand, pending) = self.server.prepare_for(&self.h, tag, &x_s, x_t)?;
        self.in_flight.entry(tag).or_default().pending = Some(pending);
        Ok((cand.sigma, cand.delta))
    }

    /// `Reply'`: the tag's `σ'` for `(x^s, σ, δ)`, forwarded to the server.
    pub fn reply_prime(
        &mut self,
        tag: usize,
        x_s: &BitString,
        sigma: &BitString,
        delta: &BitString,
    ) -> Result<BitString> {
        self.check(Oracle::ReplyPrime, Some(tag))?;
        self.deliver(tag, x_s.clone(), sigma, delta, Observation::Full)
    }

    /// `Reply_b`: as `Reply'`, but the tag receives the real challenge
    /// hidden behind `x_rand`.
    pub fn reply_b(
        &mut self,
        tag: usize,
        x_rand: &BitString,
        sigma: &BitString,
        delta: &BitString,
    ) -> Result<BitString> {
        self.check(Oracle::ReplyB, Some(tag))?;
        let real = self
            .rand_map
            .iter()
            .rev()
            .find(|(r, _)| r == x_rand)
            .map(|(_, s)| s.clone())
            .ok_or_else(|| Error::Misuse("x_rand was not issued by Query_b".into()))?;
        self.deliver(tag, real, sigma, delta, Observation::Blind)
    }

    fn deliver(
        &mut self,
        tag: usize,
        x_s: BitString,
        sigma: &BitString,
        delta: &BitString,
        observation: Observation,
    ) -> Result<BitString> {
        let period = self.tags[tag].counter();
        let bc = BroadcastAuth {
            candidates: vec![ServerAuthCandidate {
                sigma: sigma.clone(),
                delta: delta.clone(),
            }],
        };
        let challenge = Challenge { x_s: x_s.clone() };
        let (auth, outcome) = self.tags[tag]
            .verify_and_respond(&self.h, &challenge, &bc)
            .map_err(|_| Error::Misuse("Reply' without a preceding Query'".into()))?;
        let flight = self.in_flight.remove(&tag).unwrap_or_default();
        if let Some(pending) = flight.pending {
            self.server.finalize(pending, Some(&auth));
        }
        if let Some(x_t) = flight.x_t {
            self.records.push(SessionRecord {
                tag,
                period,
                observation,
                transcript: Transcript {
                    x_s,
                    sigma: sigma.clone(),
                    delta: delta.clone(),
                    x_t,
                    sigma_prime: auth.sigma_prime.clone(),
                },
                tag_updated: outcome == TagOutcome::Updated,
            });
        }
        Ok(auth.sigma_prime)
    }

    /// The four flights of an honest session, in the same order and with
    /// the same randomness as the Query/Reply composition.
    fn honest_session(&mut self, tag: usize, blind: bool) -> Result<(Transcript, Option<BitString>)> {
        let period = self.tags[tag].counter();
        let x_s = self.server.begin().x_s;
        let x_rand = blind.then(|| self.view.next_bits(self.lambda()));
        self.last_x_s = Some(x_s.clone());
        let x_t = self.tags[tag].respond_nonce().x_t;
        let (cand, pending) = self.server.prepare_for(&self.h, tag, &x_s, &x_t)?;
        let bc = BroadcastAuth {
            candidates: vec![cand.clone()],
        };
        let (auth, outcome) =
            self.tags[tag].verify_and_respond(&self.h, &Challenge { x_s: x_s.clone() }, &bc)?;
        self.server.finalize(pending, Some(&auth));
        self.in_flight.remove(&tag);
        let transcript = Transcript {
            x_s,
            sigma: cand.sigma,
            delta: cand.delta,
            x_t,
            sigma_prime: auth.sigma_prime,
        };
        self.records.push(SessionRecord {
            tag,
            period,
            observation: if blind {
                Observation::Blind
            } else {
                Observation::Full
            },
            transcript: transcript.clone(),
            tag_updated: outcome == TagOutcome::Updated,
        });
        Ok((transcript, x_rand))
    }

    fn hidden_session(&mut self, tag: usize) -> Result<Transcript> {
        let (t, _) = self.honest_session(tag, false)?;
        let rec = self.records.last_mut().expect("just recorded");
        rec.observation = Observation::Hidden;
        if !rec.tag_updated {
            return Err(Error::Misuse(
                "challenge tag no longer completes sessions".into(),
            ));
        }
        Ok(t)
    }

    /// `Execute`: a full honest session, everything observed.
    pub fn execute(&mut self, tag: usize) -> Result<Transcript> {
        self.check(Oracle::Execute, Some(tag))?;
        Ok(self.honest_session(tag, false)?.0)
    }

    /// `Execute_b`: a full honest session observed without `x^s`.
    pub fn execute_b(&mut self, tag: usize) -> Result<BlindTranscript> {
        self.check(Oracle::ExecuteB, Some(tag))?;
        let (t, x_rand) = self.honest_session(tag, true)?;
        Ok(BlindTranscript {
            x_rand: x_rand.expect("blind session draws x_rand"),
            sigma: t.sigma,
            delta: t.delta,
            x_t: t.x_t,
            sigma_prime: t.sigma_prime,
        })
    }

    /// `RevealSecret`: the tag's current key.
    pub fn reveal_secret(&mut self, tag: usize) -> Result<BitString> {
        self.check(Oracle::RevealSecret, Some(tag))?;
        let t = &self.tags[tag];
        self.reveals.insert(tag, t.counter());
        Ok(t.key().clone())
    }

    /// The period the game expects Test to name right now.
    pub fn test_period(&self) -> Result<u32> {
        let c = self.challenge_tag();
        let revealed = || {
            self.reveals
                .get(&c)
                .copied()
                .ok_or_else(|| Error::Misuse("Test needs a prior RevealSecret".into()))
        };
        Ok(match self.kind {
            GameKind::Indistinguishability | GameKind::TwoTag => self.tags[c].counter(),
            GameKind::Forward => revealed()?.saturating_sub(1),
            GameKind::Backward | GameKind::BackwardControl => revealed()? + 1,
        })
    }

    /// `Test`: real material for the selected instance or five random
    /// strings of the same shape, by a fair coin. In the two-tag game the
    /// coin instead picks which challenge tag runs the instance and
    /// `period` is ignored.
    pub fn test(&mut self, tag: usize, period: u32) -> Result<Transcript> {
        if self.coin.is_some() {
            return Err(Error::DoubleTest);
        }
        self.check(Oracle::Test, Some(tag))?;
        if self.kind == GameKind::TwoTag {
            let b: bool = self.coins.gen();
            self.coin = Some(b);
            return self.hidden_session(self.challenge[b as usize]);
        }
        if tag != self.challenge_tag() {
            return Err(Error::Misuse("Test names a non-challenge tag".into()));
        }
        let expected = self.test_period()?;
        if period != expected {
            return Err(Error::Misuse(format!(
                "Test must select instance {expected}, got {period}"
            )));
        }
        let real = match self.kind {
            GameKind::Indistinguishability => self.hidden_session(tag)?,
            GameKind::Forward => {
                let rec = self
                    .records
                    .iter()
                    .rev()
                    .find(|r| r.tag == tag && r.period == period && r.tag_updated)
                    .ok_or_else(|| Error::Misuse(format!("no instance {period} recorded")))?;
                if rec.observation != Observation::Hidden {
                    return Err(Error::Misuse(format!("instance {period} was observed")));
                }
                rec.transcript.clone()
            }
            _ => {
                if self.tags[tag].counter() + 1 == period {
                    self.hidden_session(tag)?;
                }
                if self.tags[tag].counter() != period {
                    return Err(Error::Misuse(format!(
                        "tag is already past instance {period}"
                    )));
                }
                self.hidden_session(tag)?
            }
        };
        let b: bool = self.coins.gen();
        self.coin = Some(b);
        if b {
            return Ok(real);
        }
        let l = self.lambda();
        let mut r = || self.view.next_bits(l);
        Ok(Transcript {
            x_s: r(),
            sigma: r(),
            delta: r(),
            x_t: r(),
            sigma_prime: r(),
        })
    }

    /// Whether `guess` equals the Test coin.
    pub fn outcome(&self, guess: bool) -> Result<bool> {
        self.coin.map(|b| b == guess).ok_or(Error::TestNotCalled)
    }
}
