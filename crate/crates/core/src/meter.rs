//! Operation counters for the tag's hash, PRNG and XOR entry points.

use std::cell::Cell;

use serde::Serialize;

use crate::bits::BitString;
use crate::error::Result;
use crate::hash::HashFn;
use crate::prng::Prng;

#[derive(Clone, Debug, Default)]
pub struct OpMeter {
    hash: Cell<u64>,
    prng: Cell<u64>,
    xor: Cell<u64>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct OpCounts {
    pub hash: u64,
    pub prng: u64,
    pub xor: u64,
}

impl OpCounts {
    /// Hash calls plus PRNG draws, which cost the same on a tag.
    pub fn hash_equivalent(&self) -> u64 {
        self.hash + self.prng
    }

    pub fn since(&self, earlier: &OpCounts) -> OpCounts {
        OpCounts {
            hash: self.hash - earlier.hash,
            prng: self.prng - earlier.prng,
            xor: self.xor - earlier.xor,
        }
    }
}

impl OpMeter {
    pub fn snapshot(&self) -> OpCounts {
        OpCounts {
            hash: self.hash.get(),
            prng: self.prng.get(),
            xor: self.xor.get(),
        }
    }

    pub fn random(&self, prng: &mut Prng, nbits: usize) -> BitString {
        self.prng.set(self.prng.get() + 1);
        prng.next_bits(nbits)
    }

    pub fn xor(&self, a: &BitString, b: &BitString) -> Result<BitString> {
        self.xor.set(self.xor.get() + 1);
        a.xor(b)
    }
}

/// A hash that records every call in an [`OpMeter`].
pub struct MeteredHash<'a, H: ?Sized> {
    inner: &'a H,
    meter: &'a OpMeter,
}

impl<'a, H: HashFn + ?Sized> MeteredHash<'a, H> {
    pub fn new(inner: &'a H, meter: &'a OpMeter) -> Self {
        Self { inner, meter }
    }
}

impl<H: HashFn + ?Sized> HashFn for MeteredHash<'_, H> {
    fn lambda(&self) -> usize {
        self.inner.lambda()
    }

    fn hash2(&self, left: &BitString, right: &BitString) -> BitString {
        self.meter.hash.set(self.meter.hash.get() + 1);
        self.inner.hash2(left, right)
    }

    // counter_hash goes through hash2, so it is counted once
}
