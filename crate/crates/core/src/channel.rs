//! In-memory session driver with a programmable adversary on the wire.
//!
//! The reader is a transparent relay, so a session is just the four flights
//! passed between a [`Server`] and a [`Tag`]. Every emitted flight is logged
//! before the adversary acts on it; the transcript records what was
//! delivered.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::bits::BitString;
use crate::error::{Error, Result};
use crate::hash::HashFn;
use crate::protocol::{
    AuthResult, BroadcastAuth, Challenge, Server, ServerAuthCandidate, Tag, TagAuth, TagNonce,
    TagOutcome,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Flight {
    Challenge = 1,
    Nonce = 2,
    Broadcast = 3,
    TagAuth = 4,
}

impl Flight {
    pub fn from_index(i: u8) -> Option<Self> {
        match i {
            1 => Some(Self::Challenge),
            2 => Some(Self::Nonce),
            3 => Some(Self::Broadcast),
            4 => Some(Self::TagAuth),
            _ => None,
        }
    }

    pub fn index(self) -> u8 {
        self as u8
    }

    pub fn direction(self) -> Direction {
        match self {
            Self::Challenge | Self::Broadcast => Direction::ServerToTag,
            Self::Nonce | Self::TagAuth => Direction::TagToServer,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    ServerToTag,
    TagToServer,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(untagged)]
pub enum Payload {
    Challenge(Challenge),
    Nonce(TagNonce),
    Broadcast(BroadcastAuth),
    TagAuth(TagAuth),
}

impl Payload {
    pub fn flight(&self) -> Flight {
        match self {
            Self::Challenge(_) => Flight::Challenge,
            Self::Nonce(_) => Flight::Nonce,
            Self::Broadcast(_) => Flight::Broadcast,
            Self::TagAuth(_) => Flight::TagAuth,
        }
    }

    fn values(&self) -> Vec<&BitString> {
        match self {
            Self::Challenge(c) => vec![&c.x_s],
            Self::Nonce(n) => vec![&n.x_t],
            Self::Broadcast(b) => b
                .candidates
                .iter()
                .flat_map(|c| [&c.sigma, &c.delta])
                .collect(),
            Self::TagAuth(a) => vec![&a.sigma_prime],
        }
    }

    /// Builds the payload for `flight` from raw values; a broadcast takes
    /// `σ δ` pairs.
    pub fn from_values(flight: Flight, values: Vec<BitString>) -> Result<Self> {
        let single = |mut v: Vec<BitString>| {
            if v.len() == 1 {
                Ok(v.pop().unwrap())
            } else {
                Err(Error::Malformed(format!(
                    "flight {} carries one value, got {}",
                    flight.index(),
                    v.len()
                )))
            }
        };
        Ok(match flight {
            Flight::Challenge => Self::Challenge(Challenge { x_s: single(values)? }),
            Flight::Nonce => Self::Nonce(TagNonce { x_t: single(values)? }),
            Flight::TagAuth => Self::TagAuth(TagAuth {
                sigma_prime: single(values)?,
            }),
            Flight::Broadcast => {
                if !values.len().is_multiple_of(2) {
                    return Err(Error::Malformed(
                        "broadcast values come in sigma/delta pairs".into(),
                    ));
                }
                let candidates = values
                    .chunks(2)
                    .map(|p| ServerAuthCandidate {
                        sigma: p[0].clone(),
                        delta: p[1].clone(),
                    })
                    .collect();
                Self::Broadcast(BroadcastAuth { candidates })
            }
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct WireMessage {
    pub direction: Direction,
    pub session_seq: u64,
    pub payload: Payload,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ActionKind {
    Pass,
    Drop,
    Replace(Payload),
    /// Deliver the same flight as emitted in an earlier session.
    Replay(u64),
}

/// Acts on one flight of one session, or of every session when `session`
/// is `None`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AdversaryAction {
    pub session: Option<u64>,
    pub flight: Flight,
    pub kind: ActionKind,
}

impl AdversaryAction {
    pub fn new(session: Option<u64>, flight: Flight, kind: ActionKind) -> Self {
        Self {
            session,
            flight,
            kind,
        }
    }

    pub fn drop(session: u64, flight: Flight) -> Self {
        Self::new(Some(session), flight, ActionKind::Drop)
    }

    fn applies(&self, seq: u64, flight: Flight) -> bool {
        self.flight == flight && self.session.is_none_or(|s| s == seq)
    }
}

impl fmt::Display for AdversaryAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.session {
            Some(s) => write!(f, "{s}")?,
            None => f.write_str("*")?,
        }
        write!(f, " {} ", self.flight.index())?;
        match &self.kind {
            ActionKind::Pass => f.write_str("pass"),
            ActionKind::Drop => f.write_str("drop"),
            ActionKind::Replay(n) => write!(f, "replay {n}"),
            ActionKind::Replace(p) => {
                f.write_str("replace")?;
                for v in p.values() {
                    write!(f, " {v}")?;
                }
                Ok(())
            }
        }
    }
}

/// Ordered list of adversary actions, at most one per (session, flight).
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FaultSchedule {
    actions: Vec<AdversaryAction>,
}

impl FaultSchedule {
    pub fn new(actions: Vec<AdversaryAction>) -> Result<Self> {
        let mut seen = HashSet::new();
        for a in &actions {
            if !seen.insert((a.session, a.flight)) {
                return Err(Error::InvalidParameter(format!(
                    "two actions for session {:?} flight {}",
                    a.session,
                    a.flight.index()
                )));
            }
            if let (Some(s), ActionKind::Replay(n)) = (a.session, &a.kind) {
                if *n >= s {
                    return Err(Error::InvalidParameter(format!(
                        "session {s} cannot replay session {n}"
                    )));
                }
            }
        }
        Ok(Self { actions })
    }

    pub fn actions(&self) -> &[AdversaryAction] {
        &self.actions
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    /// Checks that every replacement value is `lambda` bits long.
    pub fn validate(&self, lambda: usize) -> Result<()> {
        for a in &self.actions {
            if let ActionKind::Replace(p) = &a.kind {
                if let Some(v) = p.values().into_iter().find(|v| v.len() != lambda) {
                    return Err(Error::WrongLength {
                        expected: lambda,
                        actual: v.len(),
                    });
                }
            }
        }
        Ok(())
    }

    /// Parses the text form: one `<session|*> <flight> <action>` per line,
    /// where action is `pass`, `drop`, `replay N` or `replace hex:len...`.
    /// Blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut actions = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let err = |message: String| Error::Parse { line, message };
            let mut words = content.split_whitespace();
            let session = match words.next() {
                Some("*") => None,
                Some(w) => Some(
                    w.parse::<u64>()
                        .ok()
                        .filter(|&s| s >= 1)
                        .ok_or_else(|| err(format!("bad session number '{w}'")))?,
                ),
                None => unreachable!("line is not empty"),
            };
            let flight = words
                .next()
                .and_then(|w| w.parse::<u8>().ok())
                .and_then(Flight::from_index)
                .ok_or_else(|| err("flight must be 1-4".into()))?;
            let kind = match words.next() {
                Some("pass") => ActionKind::Pass,
                Some("drop") => ActionKind::Drop,
                Some("replay") => {
                    let n = words
                        .next()
                        .and_then(|w| w.parse::<u64>().ok())
                        .ok_or_else(|| err("replay needs a session number".into()))?;
                    ActionKind::Replay(n)
                }
                Some("replace") => {
                    let values = words
                        .by_ref()
                        .map(BitString::from_str)
                        .collect::<Result<Vec<_>>>()
                        .map_err(|e| err(e.to_string()))?;
                    ActionKind::Replace(
                        Payload::from_values(flight, values).map_err(|e| err(e.to_string()))?,
                    )
                }
                Some(other) => return Err(err(format!("unknown action '{other}'"))),
                None => return Err(err("missing action".into())),
            };
            if let Some(extra) = words.next() {
                return Err(err(format!("unexpected '{extra}'")));
            }
            actions.push(AdversaryAction::new(session, flight, kind));
        }
        Self::new(actions).map_err(|e| Error::Parse {
            line: 0,
            message: e.to_string(),
        })
    }
}

/// One session as seen on the wire. A field is present iff that flight was
/// delivered.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SessionTranscript {
    pub session_seq: u64,
    pub tag: usize,
    pub x_s: Option<BitString>,
    pub x_t: Option<BitString>,
    pub broadcast: Option<BroadcastAuth>,
    pub sigma_prime: Option<BitString>,
    pub outcome_tag: TagOutcome,
    pub outcome_server: AuthResult,
}

#[derive(Clone, Debug)]
pub struct Simulator {
    log: Vec<WireMessage>,
    next_seq: u64,
}

impl Default for Simulator {
    fn default() -> Self {
        Self::new()
    }
}

impl Simulator {
    pub fn new() -> Self {
        Self {
            log: Vec::new(),
            next_seq: 1,
        }
    }

    /// Every flight emitted so far, before adversary interference.
    pub fn log(&self) -> &[WireMessage] {
        &self.log
    }

    pub fn next_seq(&self) -> u64 {
        self.next_seq
    }

    fn transmit(
        &mut self,
        seq: u64,
        emitted: Payload,
        actions: &[AdversaryAction],
    ) -> Option<Payload> {
        let flight = emitted.flight();
        self.log.push(WireMessage {
            direction: flight.direction(),
            session_seq: seq,
            payload: emitted.clone(),
        });
        let action = actions.iter().find(|a| a.applies(seq, flight));
        let delivered = match action.map(|a| &a.kind) {
            None | Some(ActionKind::Pass) => Some(emitted),
            Some(ActionKind::Drop) => None,
            Some(ActionKind::Replace(p)) => Some(p.clone()),
            Some(ActionKind::Replay(n)) => self
                .log
                .iter()
                .find(|m| m.session_seq == *n && m.payload.flight() == flight)
                .map(|m| m.payload.clone()),
        };
        delivered.filter(|p| p.flight() == flight)
    }

    /// Drives one session between `server` and `tag`, applying whichever
    /// of `actions` match this session's sequence number.
    pub fn run_session<H: HashFn + ?Sized>(
        &mut self,
        server: &mut Server,
        tag: &mut Tag,
        tag_index: usize,
        actions: &[AdversaryAction],
        h: &H,
    ) -> SessionTranscript {
        let seq = self.next_seq;
        self.next_seq += 1;
        let mut tr = SessionTranscript {
            session_seq: seq,
            tag: tag_index,
            x_s: None,
            x_t: None,
            broadcast: None,
            sigma_prime: None,
            outcome_tag: TagOutcome::NotUpdated,
            outcome_server: AuthResult::rejected(),
        };

        let ch = server.begin();
        let Some(Payload::Challenge(ch_rx)) =
            self.transmit(seq, Payload::Challenge(ch.clone()), actions)
        else {
            return tr;
        };
        tr.x_s = Some(ch_rx.x_s.clone());

        let nonce = tag.respond_nonce();
        let Some(Payload::Nonce(nonce_rx)) = self.transmit(seq, Payload::Nonce(nonce), actions)
        else {
            tag.abort();
            return tr;
        };
        tr.x_t = Some(nonce_rx.x_t.clone());

        let Ok((bc, pending)) = server.prepare(h, &ch.x_s, &nonce_rx.x_t) else {
            tag.abort();
            return tr;
        };
        let Some(Payload::Broadcast(bc_rx)) = self.transmit(seq, Payload::Broadcast(bc), actions)
        else {
            tag.abort();
            tr.outcome_server = server.finalize(pending, None);
            return tr;
        };
        tr.broadcast = Some(bc_rx.clone());

        let Ok((auth, outcome)) = tag.verify_and_respond(h, &ch_rx, &bc_rx) else {
            tr.outcome_server = server.finalize(pending, None);
            return tr;
        };
        tr.outcome_tag = outcome;
        let auth_rx = match self.transmit(seq, Payload::TagAuth(auth), actions) {
            Some(Payload::TagAuth(a)) => Some(a),
            _ => None,
        };
        tr.sigma_prime = auth_rx.as_ref().map(|a| a.sigma_prime.clone());
        tr.outcome_server = server.finalize(pending, auth_rx.as_ref());
        tr
    }

    /// Runs `n_sessions` sessions round-robin over `tags`.
    pub fn run_schedule<H: HashFn + ?Sized>(
        &mut self,
        server: &mut Server,
        tags: &mut [Tag],
        schedule: &FaultSchedule,
        n_sessions: usize,
        h: &H,
    ) -> Result<Vec<SessionTranscript>> {
        if n_sessions == 0 {
            return Err(Error::InvalidParameter("need at least one session".into()));
        }
        if tags.is_empty() {
            return Err(Error::InvalidParameter("no tags to drive".into()));
        }
        schedule.validate(server.lambda())?;
        let n = tags.len();
        Ok((0..n_sessions)
            .map(|k| {
                let idx = k % n;
                self.run_session(server, &mut tags[idx], idx, schedule.actions(), h)
            })
            .collect())
    }
}
