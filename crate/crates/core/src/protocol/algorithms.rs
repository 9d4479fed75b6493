//! The deterministic building blocks shared by tag and server.
//!
//! `'` and `''` denote the first and second halves of a λ-bit value.

use crate::bits::BitString;
use crate::error::{Error, Result};
use crate::hash::HashFn;

use super::messages::MasterKey;

fn expect_len(value: &BitString, expected: usize) -> Result<()> {
    if value.len() == expected {
        Ok(())
    } else {
        Err(Error::WrongLength {
            expected,
            actual: value.len(),
        })
    }
}

/// `x_i = H_i(SK*, k_i)`.
pub fn partial_key<H: HashFn + ?Sized>(
    h: &H,
    i: u32,
    master: &MasterKey,
    key: &BitString,
) -> Result<BitString> {
    expect_len(key, h.lambda())?;
    Ok(h.counter_hash(i, master.bits(), key))
}

/// `sk_i = k_i' ∥ x_i'`.
pub fn session_key(k_prime: &BitString, x_prime: &BitString) -> Result<BitString> {
    if k_prime.len() != x_prime.len() {
        return Err(Error::LengthMismatch {
            left: k_prime.len(),
            right: x_prime.len(),
        });
    }
    Ok(k_prime.concat(x_prime))
}

/// `k_{i+1} = H(k_i'' ∥ x_i'', x_i^s)`.
pub fn key_update<H: HashFn + ?Sized>(
    h: &H,
    k_dprime: &BitString,
    x_dprime: &BitString,
    x_s: &BitString,
) -> Result<BitString> {
    let lambda = h.lambda();
    expect_len(k_dprime, lambda / 2)?;
    expect_len(x_dprime, lambda / 2)?;
    expect_len(x_s, lambda)?;
    Ok(h.hash2(&k_dprime.concat(x_dprime), x_s))
}

/// `σ_i = H(k_i' ∥ x_i, x_i^s ∥ x_i^t)`.
pub fn auth_server_tag<H: HashFn + ?Sized>(
    h: &H,
    k_prime: &BitString,
    x: &BitString,
    x_s: &BitString,
    x_t: &BitString,
) -> Result<BitString> {
    let lambda = h.lambda();
    expect_len(k_prime, lambda / 2)?;
    expect_len(x, lambda)?;
    expect_len(x_s, lambda)?;
    expect_len(x_t, lambda)?;
    Ok(h.hash2(&k_prime.concat(x), &x_s.concat(x_t)))
}

/// `σ_i' = H(x_i^t ∥ x_i^s, sk_i)`.
pub fn auth_tag_msg<H: HashFn + ?Sized>(
    h: &H,
    x_t: &BitString,
    x_s: &BitString,
    sk: &BitString,
) -> Result<BitString> {
    let lambda = h.lambda();
    expect_len(x_t, lambda)?;
    expect_len(x_s, lambda)?;
    expect_len(sk, lambda)?;
    Ok(h.hash2(&x_t.concat(x_s), sk))
}

/// Everything the server derives from one stored key for one session.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SlotMaterial {
    pub x: BitString,
    pub sigma: BitString,
    pub delta: BitString,
    pub session_key: BitString,
    pub sigma_prime: BitString,
    pub next_key: BitString,
}

/// Runs U*, AuthS, the one-time pad, S, AuthT and U for a single key.
pub fn derive_slot<H: HashFn + ?Sized>(
    h: &H,
    i: u32,
    master: &MasterKey,
    key: &BitString,
    x_s: &BitString,
    x_t: &BitString,
) -> Result<SlotMaterial> {
    let x = partial_key(h, i, master, key)?;
    let (k_prime, k_dprime) = key.split()?;
    let (x_prime, x_dprime) = x.split()?;
    let sigma = auth_server_tag(h, &k_prime, &x, x_s, x_t)?;
    let delta = key.xor(&x)?;
    let sk = session_key(&k_prime, &x_prime)?;
    let sigma_prime = auth_tag_msg(h, x_t, x_s, &sk)?;
    let next_key = key_update(h, &k_dprime, &x_dprime, x_s)?;
    Ok(SlotMaterial {
        x,
        sigma,
        delta,
        session_key: sk,
        sigma_prime,
        next_key,
    })
}
