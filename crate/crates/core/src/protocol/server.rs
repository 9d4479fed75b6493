use rand::seq::SliceRandom;

use crate::bits::BitString;
use crate::error::{Error, Result};
use crate::hash::HashFn;
use crate::prng::Prng;

use super::algorithms::derive_slot;
use super::messages::{
    AuthOutcome, AuthResult, BroadcastAuth, Challenge, KeySlot, MasterKey, ServerAuthCandidate,
    TagAuth, TagLabel,
};

/// Consecutive unconfirmed sessions after which a record is reported as
/// desynchronized.
pub const DESYNC_STRIKES: u32 = 2;

/// Per-tag server record.
///
/// `recovery` holds the key the tag would have moved to if it accepted the
/// last session that ended without a valid `σ'`. Its session index is
/// `counter + 1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TagRecord {
    pub label: TagLabel,
    pub key_current: BitString,
    pub counter: u32,
    pub recovery: Option<BitString>,
    /// Unconfirmed sessions since this record last authenticated.
    pub strikes: u32,
}

impl TagRecord {
    pub fn new(label: TagLabel, key: BitString, counter: u32) -> Self {
        Self {
            label,
            key_current: key,
            counter,
            recovery: None,
            strikes: 0,
        }
    }

    pub fn is_desynchronized(&self) -> bool {
        self.strikes >= DESYNC_STRIKES
    }

    fn slots(&self) -> Result<Vec<(KeySlot, u32, &BitString)>> {
        let mut out = vec![(KeySlot::Current, self.counter, &self.key_current)];
        if let Some(key) = &self.recovery {
            out.push((KeySlot::Recovery, next_counter(self.counter)?, key));
        }
        Ok(out)
    }
}

fn next_counter(c: u32) -> Result<u32> {
    c.checked_add(1)
        .ok_or_else(|| Error::InvalidParameter("session counter exhausted".into()))
}

/// Server-side bookkeeping for one broadcast candidate.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PendingCandidate {
    pub record: usize,
    pub label: TagLabel,
    pub slot: KeySlot,
    pub expected_sigma_prime: BitString,
    pub next_key: BitString,
}

/// State for one in-flight session; consumed by [`Server::finalize`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PendingSession {
    pub x_s: BitString,
    pub x_t: BitString,
    pub candidates: Vec<PendingCandidate>,
}

#[derive(Clone, Debug)]
pub struct Server {
    lambda: usize,
    master: MasterKey,
    records: Vec<TagRecord>,
    prng: Prng,
}

impl Server {
    pub fn new(master: MasterKey, records: Vec<TagRecord>, prng: Prng) -> Result<Self> {
        let lambda = master.bits().len();
        if lambda < 8 || !lambda.is_multiple_of(2) {
            return Err(Error::InvalidParameter(format!(
                "λ must be even and at least 8, got {lambda}"
            )));
        }
        for r in &records {
            let lens = std::iter::once(&r.key_current).chain(r.recovery.iter());
            if let Some(bad) = lens.map(|k| k.len()).find(|&l| l != lambda) {
                return Err(Error::WrongLength {
                    expected: lambda,
                    actual: bad,
                });
            }
            if r.counter == 0 {
                return Err(Error::InvalidParameter(format!(
                    "record {} has session index 0",
                    r.label
                )));
            }
        }
        let mut labels: Vec<_> = records.iter().map(|r| &r.label).collect();
        labels.sort();
        if labels.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidParameter("duplicate tag label".into()));
        }
        Ok(Self {
            lambda,
            master,
            records,
            prng,
        })
    }

    pub fn lambda(&self) -> usize {
        self.lambda
    }

    pub fn master(&self) -> &MasterKey {
        &self.master
    }

    pub fn records(&self) -> &[TagRecord] {
        &self.records
    }

    pub fn record(&self, label: &TagLabel) -> Option<&TagRecord> {
        self.records.iter().find(|r| &r.label == label)
    }

    pub fn index_of(&self, label: &TagLabel) -> Option<usize> {
        self.records.iter().position(|r| &r.label == label)
    }

    pub fn prng(&self) -> &Prng {
        &self.prng
    }

    /// Flight 1.
    pub fn begin(&mut self) -> Challenge {
        Challenge {
            x_s: self.prng.next_bits(self.lambda),
        }
    }

    /// Flight 3 for every record and key slot, shuffled.
    pub fn prepare<H: HashFn + ?Sized>(
        &mut self,
        h: &H,
        x_s: &BitString,
        x_t: &BitString,
    ) -> Result<(BroadcastAuth, PendingSession)> {
        let mut pairs = Vec::new();
        for idx in 0..self.records.len() {
            pairs.extend(self.candidates_for(h, idx, x_s, x_t, true)?);
        }
        pairs.shuffle(&mut self.prng);
        let (candidates, pending): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
        Ok((
            BroadcastAuth { candidates },
            PendingSession {
                x_s: x_s.clone(),
                x_t: x_t.clone(),
                candidates: pending,
            },
        ))
    }

    /// Flight 3 for one named record's current key only. This is the
    /// server half of the `Reply` oracle.
    pub fn prepare_for<H: HashFn + ?Sized>(
        &self,
        h: &H,
        record: usize,
        x_s: &BitString,
        x_t: &BitString,
    ) -> Result<(ServerAuthCandidate, PendingSession)> {
        if record >= self.records.len() {
            return Err(Error::InvalidParameter(format!("no record {record}")));
        }
        let (cand, pending) = self
            .candidates_for(h, record, x_s, x_t, false)?
            .pop()
            .expect("current slot always present");
        Ok((
            cand,
            PendingSession {
                x_s: x_s.clone(),
                x_t: x_t.clone(),
                candidates: vec![pending],
            },
        ))
    }

    fn candidates_for<H: HashFn + ?Sized>(
        &self,
        h: &H,
        idx: usize,
        x_s: &BitString,
        x_t: &BitString,
        with_recovery: bool,
    ) -> Result<Vec<(ServerAuthCandidate, PendingCandidate)>> {
        let record = &self.records[idx];
        let mut out = Vec::new();
        for (slot, i, key) in record.slots()? {
            if slot == KeySlot::Recovery && !with_recovery {
                continue;
            }
            let m = derive_slot(h, i, &self.master, key, x_s, x_t)?;
            out.push((
                ServerAuthCandidate {
                    sigma: m.sigma,
                    delta: m.delta,
                },
                PendingCandidate {
                    record: idx,
                    label: record.label.clone(),
                    slot,
                    expected_sigma_prime: m.sigma_prime,
                    next_key: m.next_key,
                },
            ));
        }
        Ok(out)
    }

    /// Flight 4 arrives (`Some`) or times out (`None`).
    ///
    /// Exactly one matching candidate commits that record. Anything else is
    /// a rejection; each record that had a current-key candidate keeps that
    /// candidate's next key as its recovery slot (unless it already holds
    /// one) and takes a strike.
    pub fn finalize(&mut self, pending: PendingSession, reply: Option<&TagAuth>) -> AuthResult {
        let matched: Vec<&PendingCandidate> = match reply {
            Some(ta) => pending
                .candidates
                .iter()
                .filter(|c| c.expected_sigma_prime == ta.sigma_prime)
                .collect(),
            None => Vec::new(),
        };

        if let [hit] = matched.as_slice() {
            let record = &mut self.records[hit.record];
            let advance = match hit.slot {
                KeySlot::Current => 1,
                KeySlot::Recovery => 2,
            };
            if let Some(counter) = record.counter.checked_add(advance) {
                record.key_current = hit.next_key.clone();
                record.counter = counter;
                record.recovery = None;
                record.strikes = 0;
                return AuthResult {
                    outcome: AuthOutcome::Accepted {
                        label: record.label.clone(),
                        slot: hit.slot,
                    },
                    key_updated: true,
                };
            }
        }

        for cand in pending.candidates.iter().filter(|c| c.slot == KeySlot::Current) {
            let record = &mut self.records[cand.record];
            if record.recovery.is_none() {
                record.recovery = Some(cand.next_key.clone());
            }
            record.strikes = record.strikes.saturating_add(1);
        }
        AuthResult::rejected()
    }
}

/// `G`: one master key, and an independent uniform `k_1` per tag mirrored in
/// the server registry. All session indices start at 1.
pub fn keygen(lambda: usize, n: usize, prng: &mut Prng) -> Result<(Server, Vec<super::Tag>)> {
    if lambda < 8 || !lambda.is_multiple_of(2) {
        return Err(Error::InvalidParameter(format!(
            "λ must be even and at least 8, got {lambda}"
        )));
    }
    if n == 0 {
        return Err(Error::InvalidParameter("need at least one tag".into()));
    }
    let master = MasterKey::new(prng.next_bits(lambda));
    let keys: Vec<BitString> = (0..n).map(|_| prng.next_bits(lambda)).collect();
    let server_prng = prng.fork();
    let tags = keys
        .iter()
        .map(|k| super::Tag::new(k.clone(), 1, prng.fork()))
        .collect();
    let records = keys
        .into_iter()
        .enumerate()
        .map(|(l, k)| TagRecord::new(TagLabel::new(format!("tag-{}", l + 1)), k, 1))
        .collect();
    Ok((Server::new(master, records, server_prng)?, tags))
}
