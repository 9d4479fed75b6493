//! Text formats for the persisted server database, master key and tag
//! states.
//!
//! ```text
//! kimapdb v1 lambda=64
//! v1 tag-1 3 9f0c...:64
//! v1 tag-2 1 77a1...:64 c3d0...:64 1
//! ```
//!
//! The optional trailing pair is a record's recovery key and strike count.
//! `master.key` is a single `hex:len` line. The tag file has the header
//! `kimaptags v1 lambda=<λ>` and `v1 <label> <counter> <key>` lines.

use std::fmt::Write as _;

use crate::bits::BitString;
use crate::error::{Error, Result};
use crate::protocol::{MasterKey, TagLabel, TagRecord, TagSnapshot};

const DB_MAGIC: &str = "kimapdb";
const TAGS_MAGIC: &str = "kimaptags";

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

/// Data lines with their 1-based line numbers, skipping blanks.
fn lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty())
}

fn parse_header(text: &str, magic: &str) -> Result<(usize, usize)> {
    let (n, line) = lines(text)
        .next()
        .ok_or_else(|| parse_err(1, "empty file"))?;
    let rest = line
        .strip_prefix(magic)
        .and_then(|r| r.trim_start().strip_prefix("v1"))
        .ok_or_else(|| parse_err(n, format!("expected '{magic} v1' header")))?;
    let lambda = rest
        .trim()
        .strip_prefix("lambda=")
        .and_then(|v| v.parse::<usize>().ok())
        .ok_or_else(|| parse_err(n, "header needs lambda=<bits>"))?;
    Ok((n, lambda))
}

fn parse_key(line: usize, word: &str, lambda: usize) -> Result<BitString> {
    let k: BitString = word.parse().map_err(|e: Error| parse_err(line, e.to_string()))?;
    if k.len() != lambda {
        return Err(parse_err(
            line,
            format!("key has {} bits, header says {lambda}", k.len()),
        ));
    }
    Ok(k)
}

fn parse_counter(line: usize, word: &str) -> Result<u32> {
    word.parse::<u32>()
        .ok()
        .filter(|&c| c >= 1)
        .ok_or_else(|| parse_err(line, format!("bad session counter '{word}'")))
}

pub fn write_server_db(lambda: usize, records: &[TagRecord]) -> String {
    let mut out = format!("{DB_MAGIC} v1 lambda={lambda}\n");
    for r in records {
        write!(out, "v1 {} {} {}", r.label, r.counter, r.key_current).unwrap();
        if let Some(k) = &r.recovery {
            write!(out, " {} {}", k, r.strikes).unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn parse_server_db(text: &str) -> Result<(usize, Vec<TagRecord>)> {
    let (header, lambda) = parse_header(text, DB_MAGIC)?;
    let mut records = Vec::new();
    for (n, line) in lines(text).filter(|(n, _)| *n != header) {
        let w: Vec<&str> = line.split_whitespace().collect();
        if w[0] != "v1" {
            return Err(parse_err(n, format!("unknown record version '{}'", w[0])));
        }
        if w.len() != 4 && w.len() != 6 {
            return Err(parse_err(n, format!("expected 4 or 6 fields, got {}", w.len())));
        }
        let mut rec = TagRecord::new(
            TagLabel::new(w[1]),
            parse_key(n, w[3], lambda)?,
            parse_counter(n, w[2])?,
        );
        if w.len() == 6 {
            rec.recovery = Some(parse_key(n, w[4], lambda)?);
            rec.strikes = w[5]
                .parse()
                .map_err(|_| parse_err(n, format!("bad strike count '{}'", w[5])))?;
        }
        if records.iter().any(|r: &TagRecord| r.label == rec.label) {
            return Err(parse_err(n, format!("duplicate label '{}'", rec.label)));
        }
        records.push(rec);
    }
    Ok((lambda, records))
}

pub fn write_master(master: &MasterKey) -> String {
    format!("{}\n", master.bits())
}

pub fn parse_master(text: &str) -> Result<MasterKey> {
    let mut it = lines(text);
    let (n, line) = it.next().ok_or_else(|| parse_err(1, "empty master key file"))?;
    let bits: BitString = line.parse().map_err(|e: Error| parse_err(n, e.to_string()))?;
    if let Some((n, _)) = it.next() {
        return Err(parse_err(n, "trailing data after master key"));
    }
    Ok(MasterKey::new(bits))
}

pub fn write_tags(lambda: usize, tags: &[(TagLabel, TagSnapshot)]) -> String {
    let mut out = format!("{TAGS_MAGIC} v1 lambda={lambda}\n");
    for (label, t) in tags {
        writeln!(out, "v1 {label} {} {}", t.counter, t.key).unwrap();
    }
    out
}

pub fn parse_tags(text: &str) -> Result<(usize, Vec<(TagLabel, TagSnapshot)>)> {
    let (header, lambda) = parse_header(text, TAGS_MAGIC)?;
    let mut tags = Vec::new();
    for (n, line) in lines(text).filter(|(n, _)| *n != header) {
        let w: Vec<&str> = line.split_whitespace().collect();
        if w.len() != 4 || w[0] != "v1" {
            return Err(parse_err(n, "expected 'v1 <label> <counter> <key>'"));
        }
        tags.push((
            TagLabel::new(w[1]),
            TagSnapshot {
                counter: parse_counter(n, w[2])?,
                key: parse_key(n, w[3], lambda)?,
            },
        ));
    }
    Ok((lambda, tags))
}
