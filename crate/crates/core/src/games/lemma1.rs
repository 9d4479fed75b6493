use std::collections::HashSet;

use serde::Serialize;

use crate::bits::BitString;
use crate::error::{Error, Result};

pub const LEMMA1_MAX_WIDTH: usize = 16;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Lemma1Report {
    pub k: usize,
    pub l: BitString,
    pub domain: u64,
    pub distinct_images: u64,
    pub bijective: bool,
}

fn domain(k: usize, l: &BitString) -> Result<impl Iterator<Item = BitString>> {
    if k == 0 || k > LEMMA1_MAX_WIDTH {
        return Err(Error::InvalidParameter(format!(
            "width must be 1..={LEMMA1_MAX_WIDTH}, got {k}"
        )));
    }
    if l.len() != k {
        return Err(Error::WrongLength {
            expected: k,
            actual: l.len(),
        });
    }
    Ok((0..1u64 << k).map(move |y| BitString::from_u64(y, k)))
}

/// Every `(y, L ⊕ y)` pair over `{0,1}^k`.
pub fn lemma1_pairs(k: usize, l: &BitString) -> Result<Vec<(BitString, BitString)>> {
    domain(k, l)?
        .map(|y| {
            let x = l.xor(&y)?;
            Ok((y, x))
        })
        .collect()
}

/// Enumerates `y ↦ L ⊕ y` over `{0,1}^k` and counts distinct images.
pub fn lemma1_bijection_check(k: usize, l: &BitString) -> Result<Lemma1Report> {
    let mut images = HashSet::new();
    let mut n = 0u64;
    for y in domain(k, l)? {
        images.insert(l.xor(&y)?);
        n += 1;
    }
    let distinct = images.len() as u64;
    Ok(Lemma1Report {
        k,
        l: l.clone(),
        domain: n,
        distinct_images: distinct,
        bijective: distinct == n && n == 1u64 << k,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b(s: &str) -> BitString {
        s.chars().map(|c| c == '1').collect()
    }

    #[test]
    fn width_one() {
        assert_eq!(
            lemma1_pairs(1, &b("0")).unwrap(),
            vec![(b("0"), b("0")), (b("1"), b("1"))]
        );
        assert_eq!(
            lemma1_pairs(1, &b("1")).unwrap(),
            vec![(b("0"), b("1")), (b("1"), b("0"))]
        );
    }

    #[test]
    fn rejects_bad_width() {
        assert!(lemma1_bijection_check(0, &BitString::empty()).is_err());
        assert!(lemma1_bijection_check(17, &BitString::zeros(17)).is_err());
        assert!(lemma1_bijection_check(8, &BitString::zeros(7)).is_err());
    }
}
