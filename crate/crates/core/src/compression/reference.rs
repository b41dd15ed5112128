//! Reference compressor: greedy longest-match parsing against a sliding
//! window seeded with a dictionary, priced by the empirical entropy of the
//! resulting token stream.
//!
//! Nothing here produces a bitstream. Only sizes leave this module.

use std::collections::HashMap;
use std::hash::Hash;

use crate::error::{Error, Result};

/// Shortest repeat replaced by a match token.
pub const MIN_MATCH: usize = 3;

/// One symbol of the parsed stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RefToken {
    Literal(u8),
    /// `length` bytes copied from `offset` bytes back.
    Match {
        length: usize,
        offset: usize,
    },
}

const NONE: usize = usize::MAX;

/// Incremental hash-chain index over a byte buffer. Positions are inserted in
/// increasing order; lookups only see inserted positions.
struct ChainIndex<'a> {
    buf: &'a [u8],
    head: HashMap<[u8; 3], usize>,
    prev: Vec<usize>,
    inserted: usize,
}

impl<'a> ChainIndex<'a> {
    fn new(buf: &'a [u8]) -> Self {
        Self {
            buf,
            head: HashMap::new(),
            prev: vec![NONE; buf.len()],
            inserted: 0,
        }
    }

    fn key(&self, pos: usize) -> Option<[u8; 3]> {
        self.buf.get(pos..pos + 3).map(|k| [k[0], k[1], k[2]])
    }

    /// Makes every position below `end` searchable.
    fn insert_until(&mut self, end: usize) {
        while self.inserted < end {
            let pos = self.inserted;
            if let Some(k) = self.key(pos) {
                self.prev[pos] = self.head.insert(k, pos).unwrap_or(NONE);
            }
            self.inserted += 1;
        }
    }

    /// Longest match for the bytes at `pos` among inserted starts no further
    /// back than `window`. Matches may run into `pos` itself (overlapping
    /// copies). Among equal lengths the nearest start wins.
    fn longest(&self, pos: usize, window: usize) -> (usize, usize) {
        let Some(k) = self.key(pos) else {
            return (0, 0);
        };
        let lowest = pos.saturating_sub(window);
        let max_len = self.buf.len() - pos;
        let (mut best_len, mut best_off) = (0, 0);
        let mut cand = self.head.get(&k).copied().unwrap_or(NONE);
        while cand != NONE && cand >= lowest {
            if cand < pos {
                let len = common_prefix(self.buf, cand, pos, max_len);
                if len > best_len {
                    best_len = len;
                    best_off = pos - cand;
                    if len == max_len {
                        break;
                    }
                }
            }
            cand = self.prev[cand];
        }
        if best_len >= MIN_MATCH {
            (best_len, best_off)
        } else {
            (0, 0)
        }
    }
}

fn common_prefix(buf: &[u8], a: usize, b: usize, max_len: usize) -> usize {
    let mut n = 0;
    while n < max_len && buf[a + n] == buf[b + n] {
        n += 1;
    }
    n
}

/// Longest prefix of `text[position..]` that also starts somewhere in
/// `window ++ text[..position]`, as `(length, offset)`.
///
/// The offset counts back from `position` in the joined buffer. A match may
/// overlap the bytes being encoded. Returns `(0, 0)` when nothing of at least
/// [`MIN_MATCH`] bytes repeats. Ties go to the smallest offset.
pub fn ref_longest_match(window: &[u8], text: &[u8], position: usize) -> Result<(usize, usize)> {
    if position >= text.len() {
        return Err(Error::InvalidInput(format!(
            "position {position} outside text of length {}",
            text.len()
        )));
    }
    let mut joined = Vec::with_capacity(window.len() + text.len());
    joined.extend_from_slice(window);
    joined.extend_from_slice(text);
    let pos = window.len() + position;
    let mut index = ChainIndex::new(&joined);
    index.insert_until(pos);
    Ok(index.longest(pos, usize::MAX))
}

/// Shannon code length of a stream under its own empirical distribution:
/// `sum over occurrences of -log2 P(symbol)`.
pub fn ref_entropy_coded_size<T: Eq + Hash>(tokens: &[T]) -> Result<f64> {
    if tokens.is_empty() {
        return Err(Error::InvalidInput("entropy of empty stream".into()));
    }
    let mut counts: HashMap<&T, usize> = HashMap::new();
    for t in tokens {
        *counts.entry(t).or_insert(0) += 1;
    }
    let n = tokens.len() as f64;
    // Sorting the counts keeps the floating-point sum independent of hash order.
    let mut counts: Vec<usize> = counts.into_values().collect();
    counts.sort_unstable();
    Ok(counts
        .into_iter()
        .map(|c| {
            let c = c as f64;
            c * (n / c).log2()
        })
        .sum())
}

/// Greedy parse of `data` against a sliding window of `window` bytes that
/// initially holds `dictionary`.
pub fn ref_tokenize(dictionary: &[u8], data: &[u8], window: usize) -> Result<Vec<RefToken>> {
    if data.is_empty() {
        return Err(Error::InvalidInput("cannot parse empty data".into()));
    }
    if window == 0 {
        return Err(Error::InvalidInput("window must be at least 1".into()));
    }
    let mut joined = Vec::with_capacity(dictionary.len() + data.len());
    joined.extend_from_slice(dictionary);
    joined.extend_from_slice(data);
    let mut index = ChainIndex::new(&joined);
    let mut pos = dictionary.len();
    let mut tokens = Vec::new();
    while pos < joined.len() {
        index.insert_until(pos);
        let (length, offset) = index.longest(pos, window);
        if length == 0 {
            tokens.push(RefToken::Literal(joined[pos]));
            pos += 1;
        } else {
            tokens.push(RefToken::Match { length, offset });
            pos += length;
        }
    }
    Ok(tokens)
}

/// Size in bytes of `data` under the reference model: greedy parse, then
/// the entropy-coded length of the token stream rounded up to whole bytes.
pub fn ref_compress_size(dictionary: &[u8], data: &[u8], window: usize) -> Result<usize> {
    let tokens = ref_tokenize(dictionary, data, window)?;
    let bits = ref_entropy_coded_size(&tokens)?;
    Ok((bits / 8.0).ceil() as usize)
}
