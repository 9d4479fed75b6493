use crate::bits::BitString;
use crate::error::{Error, Result};
use crate::hash::HashFn;
use crate::meter::{MeteredHash, OpCounts, OpMeter};
use crate::prng::Prng;

use super::algorithms::{auth_server_tag, auth_tag_msg, key_update, session_key};
use super::messages::{BroadcastAuth, Challenge, TagAuth, TagNonce, TagOutcome};

/// A tag: `k_i`, the session index `i`, and nothing else between sessions.
///
/// The PRNG models the tag's random source and the meter is instrumentation;
/// neither is secret material.
#[derive(Clone, Debug)]
pub struct Tag {
    key: BitString,
    counter: u32,
    prng: Prng,
    hardened: bool,
    in_flight: Option<BitString>,
    meter: OpMeter,
}

/// The persistent part of a tag.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TagSnapshot {
    pub key: BitString,
    pub counter: u32,
}

impl Tag {
    pub fn new(key: BitString, counter: u32, prng: Prng) -> Self {
        Self {
            key,
            counter,
            prng,
            hardened: true,
            in_flight: None,
            meter: OpMeter::default(),
        }
    }

    /// In hardened mode (the default) the tag scans every candidate and the
    /// failure path spends as many PRNG draws as the success path spends on
    /// `σ'` and the key update.
    pub fn with_hardened(mut self, hardened: bool) -> Self {
        self.hardened = hardened;
        self
    }

    pub fn key(&self) -> &BitString {
        &self.key
    }

    pub fn counter(&self) -> u32 {
        self.counter
    }

    pub fn lambda(&self) -> usize {
        self.key.len()
    }

    pub fn is_hardened(&self) -> bool {
        self.hardened
    }

    pub fn ops(&self) -> OpCounts {
        self.meter.snapshot()
    }

    /// No session values are buffered.
    pub fn is_idle(&self) -> bool {
        self.in_flight.is_none()
    }

    pub fn snapshot(&self) -> TagSnapshot {
        TagSnapshot {
            key: self.key.clone(),
            counter: self.counter,
        }
    }

    /// Bits of secret material held between sessions.
    pub fn persistent_secret_bits(&self) -> Result<usize> {
        if !self.is_idle() {
            return Err(Error::ProtocolOrder("tag is mid-session"));
        }
        Ok(self.key.len())
    }

    /// Flight 2. Draws `x^t` and buffers it for the in-flight session.
    pub fn respond_nonce(&mut self) -> TagNonce {
        let x_t = self.meter.random(&mut self.prng, self.key.len());
        self.in_flight = Some(x_t.clone());
        TagNonce { x_t }
    }

    /// Drops any buffered session values (a timed-out session).
    pub fn abort(&mut self) {
        self.in_flight = None;
    }

    /// Flight 4. Authenticates the server against `bc` and answers with `σ'`.
    ///
    /// When no candidate verifies, the answer is a fresh random λ-bit value
    /// and the key is left alone.
    pub fn verify_and_respond<H: HashFn + ?Sized>(
        &mut self,
        h: &H,
        x_s: &Challenge,
        bc: &BroadcastAuth,
    ) -> Result<(TagAuth, TagOutcome)> {
        let x_t = self
            .in_flight
            .take()
            .ok_or(Error::ProtocolOrder("no session in flight on the tag"))?;
        let lambda = self.key.len();
        let h = MeteredHash::new(h, &self.meter);
        let (k_prime, k_dprime) = self.key.split()?;

        let mut found: Option<BitString> = None;
        for cand in &bc.candidates {
            if cand.delta.len() != lambda || cand.sigma.len() != lambda || x_s.x_s.len() != lambda {
                continue;
            }
            let x = self.meter.xor(&cand.delta, &self.key)?;
            let expected = auth_server_tag(&h, &k_prime, &x, &x_s.x_s, &x_t)?;
            if found.is_none() && expected == cand.sigma {
                found = Some(x);
                if !self.hardened {
                    break;
                }
            }
        }

        match found {
            Some(x) => {
                let (x_prime, x_dprime) = x.split()?;
                let sk = session_key(&k_prime, &x_prime)?;
                let sigma_prime = auth_tag_msg(&h, &x_t, &x_s.x_s, &sk)?;
                self.key = key_update(&h, &k_dprime, &x_dprime, &x_s.x_s)?;
                self.counter = self
                    .counter
                    .checked_add(1)
                    .ok_or_else(|| Error::InvalidParameter("session counter exhausted".into()))?;
                Ok((TagAuth { sigma_prime }, TagOutcome::Updated))
            }
            None => {
                let sigma_prime = self.meter.random(&mut self.prng, lambda);
                if self.hardened {
                    // stands in for the key-update hash
                    let _ = self.meter.random(&mut self.prng, lambda);
                }
                Ok((TagAuth { sigma_prime }, TagOutcome::NotUpdated))
            }
        }
    }
}
