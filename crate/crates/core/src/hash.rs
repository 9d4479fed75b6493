//! The λ-bit hash oracle and its two-argument forms.
//!
//! `hash2(a, b)` digests `u32be(len(a)) ∥ a ∥ b`. The encoded bit string is
//! turned into bytes by appending a single 1 bit and zero-filling to a byte
//! boundary, so distinct bit strings never share a byte encoding.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bits::BitString;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HashVariant {
    /// SHA-256 truncated to λ bits.
    Production,
    /// Small ARX mixer, small enough to brute force at λ ≤ 16.
    Toy,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HashSpec {
    output_len_bits: usize,
    variant: HashVariant,
    toy_state_bits: u32,
}

pub const DEFAULT_TOY_STATE_BITS: u32 = 32;

impl HashSpec {
    pub fn production(lambda: usize) -> Result<Self> {
        if lambda == 0 || lambda > 256 {
            return Err(Error::InvalidParameter(format!(
                "production hash output must be 1..=256 bits, got {lambda}"
            )));
        }
        Ok(Self {
            output_len_bits: lambda,
            variant: HashVariant::Production,
            toy_state_bits: DEFAULT_TOY_STATE_BITS,
        })
    }

    pub fn toy(lambda: usize) -> Result<Self> {
        Self::toy_with_state(lambda, DEFAULT_TOY_STATE_BITS)
    }

    pub fn toy_with_state(lambda: usize, state_bits: u32) -> Result<Self> {
        if !(16..=64).contains(&state_bits) {
            return Err(Error::InvalidParameter(format!(
                "toy state width must be 16..=64 bits, got {state_bits}"
            )));
        }
        if lambda == 0 || lambda > state_bits as usize {
            return Err(Error::InvalidParameter(format!(
                "toy output must be 1..={state_bits} bits, got {lambda}"
            )));
        }
        Ok(Self {
            output_len_bits: lambda,
            variant: HashVariant::Toy,
            toy_state_bits: state_bits,
        })
    }

    pub fn new(variant: HashVariant, lambda: usize) -> Result<Self> {
        match variant {
            HashVariant::Production => Self::production(lambda),
            HashVariant::Toy => Self::toy(lambda),
        }
    }

    pub fn variant(&self) -> HashVariant {
        self.variant
    }

    pub fn toy_state_bits(&self) -> u32 {
        self.toy_state_bits
    }

    /// Digest of an arbitrary bit string.
    pub fn digest(&self, message: &BitString) -> BitString {
        let bytes = pack_padded(message);
        match self.variant {
            HashVariant::Production => {
                let out = Sha256::digest(&bytes);
                BitString::from_bytes(out.as_slice(), self.output_len_bits)
                    .expect("sha-256 output covers λ ≤ 256")
            }
            HashVariant::Toy => {
                let w = self.toy_state_bits;
                let state = toy_mix(&bytes, w);
                BitString::from_u64(state >> (w as usize - self.output_len_bits), self.output_len_bits)
            }
        }
    }
}

/// Anything that can act as the protocol's λ-bit hash.
///
/// Implemented by [`HashSpec`] directly and by
/// [`MeteredHash`](crate::meter::MeteredHash), which counts invocations.
pub trait HashFn {
    fn lambda(&self) -> usize;

    fn hash2(&self, left: &BitString, right: &BitString) -> BitString;

    /// The per-session hash `H_i(a, b) = hash2(u32be(i) ∥ a, b)`.
    fn counter_hash(&self, i: u32, left: &BitString, right: &BitString) -> BitString {
        debug_assert!(i >= 1, "session indices start at 1");
        self.hash2(&BitString::from_u64(u64::from(i), 32).concat(left), right)
    }
}

impl HashFn for HashSpec {
    fn lambda(&self) -> usize {
        self.output_len_bits
    }

    fn hash2(&self, left: &BitString, right: &BitString) -> BitString {
        self.digest(&encode_pair(left, right))
    }
}

impl<H: HashFn + ?Sized> HashFn for &H {
    fn lambda(&self) -> usize {
        (**self).lambda()
    }

    fn hash2(&self, left: &BitString, right: &BitString) -> BitString {
        (**self).hash2(left, right)
    }

    fn counter_hash(&self, i: u32, left: &BitString, right: &BitString) -> BitString {
        (**self).counter_hash(i, left, right)
    }
}

/// `u32be(len(left)) ∥ left ∥ right`.
pub fn encode_pair(left: &BitString, right: &BitString) -> BitString {
    let len = u32::try_from(left.len()).expect("hash arguments fit in u32 bits");
    let mut out = BitString::from_u64(u64::from(len), 32);
    out.append(left);
    out.append(right);
    out
}

fn pack_padded(bits: &BitString) -> Vec<u8> {
    let mut bytes = bits.as_bytes().to_vec();
    let used = bits.len() % 8;
    if used == 0 {
        bytes.push(0x80);
    } else {
        let last = bytes.len() - 1;
        bytes[last] |= 0x80 >> used;
    }
    bytes
}

const TOY_IV: u64 = 0x243F_6A88_85A3_08D3;
const TOY_K: u64 = 0x9E37_79B9_7F4A_7C15;

fn mask(w: u32) -> u64 {
    if w == 64 {
        u64::MAX
    } else {
        (1 << w) - 1
    }
}

fn rotl(x: u64, r: u32, w: u32) -> u64 {
    ((x << r) | (x >> (w - r))) & mask(w)
}

fn toy_round(s: u64, w: u32) -> u64 {
    let m = mask(w);
    let s = s.wrapping_add(TOY_K & m) & m;
    let s = s ^ rotl(s, 7, w);
    s.wrapping_add(rotl(s, 13, w)) & m
}

fn toy_mix(bytes: &[u8], w: u32) -> u64 {
    let m = mask(w);
    let mut s = TOY_IV & m;
    for &b in bytes {
        s ^= u64::from(b);
        s = toy_round(toy_round(s, w), w);
    }
    s ^= bytes.len() as u64 & m;
    for _ in 0..4 {
        s = toy_round(s, w);
    }
    s
}
