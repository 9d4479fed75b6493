//! Fixed-width bit strings.
//!
//! A [`BitString`] carries an explicit bit length. Storage is MSB-first within
//! each byte and the unused low bits of the final byte are always zero, so the
//! derived `Eq`/`Hash` compare exactly `len` bits.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

#[derive(Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitString {
    bytes: Vec<u8>,
    len: usize,
}

fn byte_len(bits: usize) -> usize {
    bits.div_ceil(8)
}

impl BitString {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn zeros(len: usize) -> Self {
        Self {
            bytes: vec![0; byte_len(len)],
            len,
        }
    }

    /// Takes the first `len` bits of `bytes` (MSB-first).
    pub fn from_bytes(bytes: &[u8], len: usize) -> Result<Self> {
        let need = byte_len(len);
        if bytes.len() < need {
            return Err(Error::WrongLength {
                expected: need * 8,
                actual: bytes.len() * 8,
            });
        }
        let mut out = Self {
            bytes: bytes[..need].to_vec(),
            len,
        };
        out.clear_padding();
        Ok(out)
    }

    /// The low `len` bits of `value`, most significant first.
    pub fn from_u64(value: u64, len: usize) -> Self {
        assert!(len <= 64, "from_u64 supports at most 64 bits");
        (0..len).map(|i| (value >> (len - 1 - i)) & 1 == 1).collect()
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn bit(&self, index: usize) -> bool {
        assert!(index < self.len, "bit index {index} out of range {}", self.len);
        self.bytes[index / 8] & (0x80 >> (index % 8)) != 0
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.bit(i))
    }

    /// Storage bytes; bits past `len` are zero.
    pub fn as_bytes(&self) -> &[u8] {
        &self.bytes
    }

    /// Copy with bit `index` inverted.
    pub fn flip_bit(&self, index: usize) -> Self {
        assert!(index < self.len, "bit index {index} out of range {}", self.len);
        let mut out = self.clone();
        out.bytes[index / 8] ^= 0x80 >> (index % 8);
        out
    }

    /// Interprets the string as an unsigned integer (at most 64 bits).
    pub fn to_u64(&self) -> u64 {
        assert!(self.len <= 64, "to_u64 supports at most 64 bits");
        self.iter().fold(0, |acc, b| (acc << 1) | u64::from(b))
    }

    pub fn xor(&self, other: &Self) -> Result<Self> {
        if self.len != other.len {
            return Err(Error::LengthMismatch {
                left: self.len,
                right: other.len,
            });
        }
        let bytes = self
            .bytes
            .iter()
            .zip(&other.bytes)
            .map(|(a, b)| a ^ b)
            .collect();
        Ok(Self {
            bytes,
            len: self.len,
        })
    }

    pub fn concat(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.append(other);
        out
    }

    pub fn append(&mut self, other: &Self) {
        let shift = self.len % 8;
        if shift == 0 {
            self.bytes.extend_from_slice(&other.bytes);
        } else {
            for &b in &other.bytes {
                let last = self.bytes.len() - 1;
                self.bytes[last] |= b >> shift;
                self.bytes.push(b << (8 - shift));
            }
        }
        self.len += other.len;
        self.bytes.truncate(byte_len(self.len));
        self.clear_padding();
    }

    /// Bits `start..end`.
    pub fn slice(&self, start: usize, end: usize) -> Self {
        assert!(start <= end && end <= self.len, "slice {start}..{end} out of range {}", self.len);
        if start.is_multiple_of(8) {
            let mut out = Self {
                bytes: self.bytes[start / 8..byte_len(end)].to_vec(),
                len: end - start,
            };
            out.clear_padding();
            return out;
        }
        (start..end).map(|i| self.bit(i)).collect()
    }

    /// First and second half of an even-length string.
    pub fn split(&self) -> Result<(Self, Self)> {
        if !self.len.is_multiple_of(2) {
            return Err(Error::OddLength(self.len));
        }
        let half = self.len / 2;
        Ok((self.slice(0, half), self.slice(half, self.len)))
    }

    /// Lowercase hex of the bits read as an unsigned integer, zero-padded to
    /// `ceil(len / 4)` digits. Does not include the length.
    pub fn to_hex(&self) -> String {
        const DIGITS: &[u8; 16] = b"0123456789abcdef";
        let lead = (4 - self.len % 4) % 4;
        let mut out = String::with_capacity(self.len.div_ceil(4));
        let mut nibble = 0u8;
        let mut filled = lead;
        for b in self.iter() {
            nibble = (nibble << 1) | u8::from(b);
            filled += 1;
            if filled == 4 {
                out.push(DIGITS[nibble as usize] as char);
                nibble = 0;
                filled = 0;
            }
        }
        out
    }

    pub fn from_hex(hex: &str, len: usize) -> Result<Self> {
        let digits = len.div_ceil(4);
        if hex.len() != digits {
            return Err(Error::Malformed(format!(
                "{len}-bit value needs {digits} hex digits, got {:?}",
                hex
            )));
        }
        let lead = (4 - len % 4) % 4;
        let mut bits = Vec::with_capacity(digits * 4);
        for c in hex.chars() {
            let v = c
                .to_digit(16)
                .filter(|_| !c.is_ascii_uppercase())
                .ok_or_else(|| Error::Malformed(format!("bad hex digit {c:?}")))?;
            bits.extend((0..4).rev().map(|s| (v >> s) & 1 == 1));
        }
        if bits[..lead].iter().any(|&b| b) {
            return Err(Error::Malformed(format!("{hex:?} does not fit in {len} bits")));
        }
        Ok(bits[lead..].iter().copied().collect())
    }

    fn clear_padding(&mut self) {
        let used = self.len % 8;
        if used != 0 {
            if let Some(last) = self.bytes.last_mut() {
                *last &= 0xffu8 << (8 - used);
            }
        }
    }
}

impl FromIterator<bool> for BitString {
    fn from_iter<I: IntoIterator<Item = bool>>(iter: I) -> Self {
        let mut out = Self::default();
        for b in iter {
            if out.len % 8 == 0 {
                out.bytes.push(0);
            }
            if b {
                let last = out.bytes.len() - 1;
                out.bytes[last] |= 0x80 >> (out.len % 8);
            }
            out.len += 1;
        }
        out
    }
}

/// `hex:len`, e.g. `9:4` for `1001`.
impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.to_hex(), self.len)
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitString({self})")
    }
}

impl FromStr for BitString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (hex, len) = s
            .rsplit_once(':')
            .ok_or_else(|| Error::Malformed(format!("{s:?} is not hex:len")))?;
        let len: usize = len
            .parse()
            .map_err(|_| Error::Malformed(format!("bad bit length in {s:?}")))?;
        Self::from_hex(hex, len)
    }
}

impl Serialize for BitString {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for BitString {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
