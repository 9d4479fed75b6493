use rand::Rng;

use crate::bits::BitString;
use crate::error::{Error, Result};
use crate::hash::HashFn;
use crate::protocol::{auth_server_tag, auth_tag_msg, key_update, session_key};

use super::world::{GameKind, OracleHandle, Oracle, Transcript};

/// An adversary strategy. It touches the world only through the handle.
pub trait Distinguisher {
    fn name(&self) -> &'static str;

    /// Phase 2, on non-challenge tags.
    fn learn(&mut self, _o: &mut OracleHandle) -> Result<()> {
        Ok(())
    }

    /// Phase 3. Must call Test exactly once.
    fn challenge(&mut self, o: &mut OracleHandle) -> Result<()>;

    fn guess(&mut self) -> bool;
}

pub const DISTINGUISHERS: [&str; 4] = ["random-guess", "key-knowledge", "static-id", "exhaustive"];

pub fn by_name(name: &str) -> Option<Box<dyn Distinguisher>> {
    Some(match name {
        "random-guess" => Box::new(RandomGuess::default()),
        "key-knowledge" => Box::new(KeyKnowledge::default()),
        "static-id" => Box::new(StaticId::default()),
        "exhaustive" => Box::new(Exhaustive::default()),
        _ => return None,
    })
}

fn reveal_if_allowed(o: &mut OracleHandle) -> Result<Option<BitString>> {
    if o.kind().allows(Oracle::RevealSecret) {
        let c = o.challenge_tag();
        o.reveal_secret(c).map(Some)
    } else {
        Ok(None)
    }
}

fn default_test(o: &mut OracleHandle) -> Result<Transcript> {
    let c = o.challenge_tag();
    let period = o.test_period()?;
    o.test(c, period)
}

/// Observes one session per non-challenge tag, while budget lasts.
fn observe_others(o: &mut OracleHandle) -> Result<()> {
    let full = o.kind().allows(Oracle::Execute);
    for t in 0..o.n() {
        if o.is_challenge_tag(t) {
            continue;
        }
        let r = if full {
            o.execute(t).map(drop)
        } else {
            o.execute_b(t).map(drop)
        };
        match r {
            Err(Error::BudgetExceeded(_)) => break,
            other => other?,
        }
    }
    Ok(())
}

/// `true` iff `m` is a real instance under key `k`.
pub fn consistent<H: HashFn + ?Sized>(h: &H, k: &BitString, m: &Transcript) -> Result<bool> {
    let x = m.delta.xor(k)?;
    let (k1, _) = k.split()?;
    if auth_server_tag(h, &k1, &x, &m.x_s, &m.x_t)? != m.sigma {
        return Ok(false);
    }
    let (x1, _) = x.split()?;
    Ok(auth_tag_msg(h, &m.x_t, &m.x_s, &session_key(&k1, &x1)?)? == m.sigma_prime)
}

/// Tracks a key through one observed session.
pub fn advance_key<H: HashFn + ?Sized>(
    h: &H,
    k: &BitString,
    delta: &BitString,
    x_s: &BitString,
) -> Result<BitString> {
    let x = delta.xor(k)?;
    let (_, k2) = k.split()?;
    let (_, x2) = x.split()?;
    key_update(h, &k2, &x2, x_s)
}

/// Ignores everything and flips a coin.
#[derive(Debug, Default)]
pub struct RandomGuess {
    coin: bool,
}

impl Distinguisher for RandomGuess {
    fn name(&self) -> &'static str {
        "random-guess"
    }

    fn challenge(&mut self, o: &mut OracleHandle) -> Result<()> {
        reveal_if_allowed(o)?;
        default_test(o)?;
        self.coin = o.adversary_rng().gen();
        Ok(())
    }

    fn guess(&mut self) -> bool {
        self.coin
    }
}

/// Reveals the challenge key, follows it through every session whose
/// `x^s` it sees, and answers 1 iff the tested material verifies under the
/// key it ends up with.
#[derive(Debug, Default)]
pub struct KeyKnowledge {
    verdict: bool,
}

impl Distinguisher for KeyKnowledge {
    fn name(&self) -> &'static str {
        "key-knowledge"
    }

    fn learn(&mut self, o: &mut OracleHandle) -> Result<()> {
        observe_others(o)
    }

    fn challenge(&mut self, o: &mut OracleHandle) -> Result<()> {
        let c = o.challenge_tag();
        let Some(mut k) = reveal_if_allowed(o)? else {
            default_test(o)?;
            return Ok(());
        };
        if matches!(o.kind(), GameKind::Backward | GameKind::BackwardControl) {
            if o.kind().allows(Oracle::Execute) {
                let t = o.execute(c)?;
                k = advance_key(o.hash(), &k, &t.delta, &t.x_s)?;
            } else {
                // x^s is withheld, so the key cannot be carried forward
                o.execute_b(c)?;
            }
        }
        let m = default_test(o)?;
        self.verdict = consistent(o.hash(), &k, &m)?;
        Ok(())
    }

    fn guess(&mut self) -> bool {
        self.verdict
    }
}

/// Looks for a value repeated between an observed session and the tested
/// instance, as a static identifier would be.
#[derive(Debug, Default)]
pub struct StaticId {
    verdict: bool,
}

impl Distinguisher for StaticId {
    fn name(&self) -> &'static str {
        "static-id"
    }

    fn challenge(&mut self, o: &mut OracleHandle) -> Result<()> {
        let c = o.challenge_tag();
        reveal_if_allowed(o)?;
        let seen = if o.kind().allows(Oracle::Execute) {
            let t = o.execute(c)?;
            Some((t.x_t, t.sigma_prime))
        } else {
            let t = o.execute_b(c)?;
            Some((t.x_t, t.sigma_prime))
        };
        let m = default_test(o)?;
        self.verdict = seen.is_some_and(|(x_t, sp)| m.x_t == x_t || m.sigma_prime == sp);
        Ok(())
    }

    fn guess(&mut self) -> bool {
        self.verdict
    }
}

/// Forward game only: searches all `2^λ` keys for the tested instance's
/// key, accepting one that also updates to the revealed key. Feasible only
/// at toy sizes.
#[derive(Debug, Default)]
pub struct Exhaustive {
    verdict: bool,
}

/// Largest λ the exhaustive search accepts.
pub const EXHAUSTIVE_MAX_LAMBDA: usize = 24;

impl Distinguisher for Exhaustive {
    fn name(&self) -> &'static str {
        "exhaustive"
    }

    fn challenge(&mut self, o: &mut OracleHandle) -> Result<()> {
        if o.kind() != GameKind::Forward {
            return Err(Error::InvalidParameter(
                "exhaustive search is implemented for the forward game only".into(),
            ));
        }
        let lambda = o.lambda();
        if lambda > EXHAUSTIVE_MAX_LAMBDA {
            return Err(Error::InvalidParameter(format!(
                "exhaustive search limited to λ ≤ {EXHAUSTIVE_MAX_LAMBDA}"
            )));
        }
        let c = o.challenge_tag();
        let k_now = o.reveal_secret(c)?;
        let m = default_test(o)?;
        let h = o.hash();
        for v in 0..(1u64 << lambda) {
            let k = BitString::from_u64(v, lambda);
            if consistent(h, &k, &m)? && advance_key(h, &k, &m.delta, &m.x_s)? == k_now {
                self.verdict = true;
                break;
            }
        }
        Ok(())
    }

    fn guess(&mut self) -> bool {
        self.verdict
    }
}
