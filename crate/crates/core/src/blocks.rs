//! The partial semigroup FIN_k.
//!
//! A [`Subblock`] is a finitely supported map from positions to `0..=k`,
//! stored densely from position 0 up to the last nonzero value. It is a
//! *block* when the value `k` is attained somewhere. Blocks and subblocks
//! share one storage type; operations that need a block check it on entry.
//!
//! Literal text format: `k=<K>|<pos>:<val>[,<pos>:<val>]*`, or `k=<K>|-`
//! for the empty subblock.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// A finitely supported map `ω → {0, …, k}` in canonical (trimmed) form.
///
/// Ordering is by level, then lexicographic on the value vector. This is the
/// canonical order used for deterministic tie-breaking; it is unrelated to
/// the block order `p < q` (see [`Subblock::precedes`]).
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Subblock {
    k: u8,
    values: Vec<u8>,
}

fn check_level(k: u8) -> Result<()> {
    if k == 0 {
        return Err(Error::InvalidLevel(0));
    }
    Ok(())
}

fn check_same_level(a: &Subblock, b: &Subblock) -> Result<()> {
    if a.k != b.k {
        return Err(Error::MismatchedLevel { left: a.k, right: b.k });
    }
    Ok(())
}

impl Subblock {
    /// Builds a subblock from a dense value vector, trimming trailing zeros.
    pub fn new(k: u8, mut values: Vec<u8>) -> Result<Self> {
        check_level(k)?;
        if let Some((position, &value)) = values.iter().enumerate().find(|(_, &v)| v > k) {
            return Err(Error::ValueOutOfRange { position, value: value.into(), k });
        }
        while values.last() == Some(&0) {
            values.pop();
        }
        Ok(Subblock { k, values })
    }

    /// Builds a subblock from `(position, value)` pairs. Zero values are
    /// allowed and ignored; repeated positions are rejected.
    pub fn from_pairs(k: u8, pairs: &[(usize, u8)]) -> Result<Self> {
        check_level(k)?;
        let len = pairs.iter().map(|&(p, _)| p + 1).max().unwrap_or(0);
        let mut values = vec![0u8; len];
        let mut seen = vec![false; len];
        for &(position, value) in pairs {
            if seen[position] {
                return Err(Error::OverlappingSupport { position });
            }
            seen[position] = true;
            values[position] = value;
        }
        Subblock::new(k, values)
    }

    /// The everywhere-zero subblock at level `k`.
    pub fn empty(k: u8) -> Result<Self> {
        check_level(k)?;
        Ok(Subblock { k, values: Vec::new() })
    }

    pub fn k(&self) -> u8 {
        self.k
    }

    /// Dense values from position 0; the last entry (if any) is nonzero.
    pub fn values(&self) -> &[u8] {
        &self.values
    }

    pub fn value_at(&self, position: usize) -> u8 {
        self.values.get(position).copied().unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// True when `k` is attained, i.e. this is an element of FIN_k.
    pub fn is_block(&self) -> bool {
        self.values.contains(&self.k)
    }

    pub fn require_block(&self) -> Result<()> {
        if self.is_block() {
            Ok(())
        } else {
            Err(Error::NotABlock { k: self.k })
        }
    }

    /// Positions with nonzero value, ascending.
    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.values.iter().enumerate().filter(|(_, &v)| v > 0).map(|(i, _)| i)
    }

    /// Nonzero `(position, value)` pairs, ascending.
    pub fn entries(&self) -> impl Iterator<Item = (usize, u8)> + '_ {
        self.values.iter().copied().enumerate().filter(|&(_, v)| v > 0)
    }

    pub fn support_len(&self) -> usize {
        self.support().count()
    }

    pub fn min_support(&self) -> Option<usize> {
        self.support().next()
    }

    pub fn max_support(&self) -> Option<usize> {
        self.values.len().checked_sub(1)
    }

    pub fn supports_intersect(&self, other: &Subblock) -> bool {
        self.values.iter().zip(&other.values).any(|(&a, &b)| a > 0 && b > 0)
    }

    /// Block order: `self < other` iff `max supp(self) < min supp(other)`,
    /// or either support is empty.
    pub fn precedes(&self, other: &Subblock) -> bool {
        match (self.max_support(), other.min_support()) {
            (Some(max), Some(min)) => max < min,
            _ => true,
        }
    }

    /// `T^i`: subtracts `i` from every value, clamping at zero.
    pub fn tetris(&self, i: u32) -> Subblock {
        let values = self.values.iter().map(|&v| u32::from(v).saturating_sub(i) as u8).collect();
        Subblock::new(self.k, values).expect("tetris keeps values in range")
    }

    /// Partial addition: defined only for disjoint supports.
    pub fn add(&self, other: &Subblock) -> Result<Subblock> {
        check_same_level(self, other)?;
        let (long, short) = if self.values.len() >= other.values.len() { (self, other) } else { (other, self) };
        let mut values = long.values.clone();
        for (position, (slot, &v)) in values.iter_mut().zip(&short.values).enumerate() {
            if v > 0 {
                if *slot > 0 {
                    return Err(Error::OverlappingSupport { position });
                }
                *slot = v;
            }
        }
        Ok(Subblock { k: self.k, values })
    }

    /// Pointwise maximum `p ⋆ q`.
    pub fn star(&self, other: &Subblock) -> Result<Subblock> {
        check_same_level(self, other)?;
        let len = self.values.len().max(other.values.len());
        let values = (0..len).map(|n| self.value_at(n).max(other.value_at(n))).collect();
        Ok(Subblock { k: self.k, values })
    }

    /// `f(p)`: the largest position holding the value `k`.
    pub fn little_f(&self) -> Result<usize> {
        self.values.iter().rposition(|&v| v == self.k).ok_or(Error::NotABlock { k: self.k })
    }

    /// Keeps only positions in `range`; everything else becomes zero.
    pub fn restrict(&self, range: impl std::ops::RangeBounds<usize>) -> Subblock {
        let values = self.values.iter().enumerate().map(|(n, &v)| if range.contains(&n) { v } else { 0 }).collect();
        Subblock::new(self.k, values).expect("restriction keeps values in range")
    }

    /// Moves every position up by `offset`.
    pub fn shifted(&self, offset: usize) -> Subblock {
        if self.is_empty() {
            return self.clone();
        }
        let mut values = vec![0u8; offset];
        values.extend_from_slice(&self.values);
        Subblock { k: self.k, values }
    }

    /// Renders the part after `|`: `0:2,3:1`, or `-` when empty.
    pub fn body(&self) -> String {
        if self.is_empty() {
            return "-".to_string();
        }
        self.entries().map(|(p, v)| format!("{p}:{v}")).collect::<Vec<_>>().join(",")
    }

    /// Parses a literal body (`0:2,3:1` or `-`) at level `k`.
    ///
    /// `line` and `column` locate the body within a larger document and are
    /// only used for error reporting.
    pub fn parse_body(k: u8, body: &str, line: usize, column: usize) -> Result<Subblock> {
        check_level(k)?;
        let trimmed = body.trim();
        let lead = column + (body.len() - body.trim_start().len());
        if trimmed == "-" {
            return Ok(Subblock { k, values: Vec::new() });
        }
        if trimmed.is_empty() {
            return Err(Error::parse(line, lead, "empty block literal"));
        }
        let mut values: Vec<u8> = Vec::new();
        let mut offset = 0;
        for item in trimmed.split(',') {
            let col = lead + offset;
            offset += item.len() + 1;
            let (pos, val) = item
                .split_once(':')
                .ok_or_else(|| Error::parse(line, col, format!("expected <pos>:<val>, got `{item}`")))?;
            let pos: usize = pos
                .trim()
                .parse()
                .map_err(|_| Error::parse(line, col, format!("invalid position `{}`", pos.trim())))?;
            let val_col = col + item.find(':').unwrap_or(0) + 1;
            let val: u32 = val
                .trim()
                .parse()
                .map_err(|_| Error::parse(line, val_col, format!("invalid value `{}`", val.trim())))?;
            if val == 0 || val > u32::from(k) {
                return Err(Error::parse(line, val_col, format!("value {val} is outside 1..={k}")));
            }
            if !values.is_empty() && pos < values.len() {
                return Err(Error::parse(line, col, format!("position {pos} is not strictly increasing")));
            }
            values.resize(pos, 0);
            values.push(val as u8);
        }
        Ok(Subblock { k, values })
    }
}

impl fmt::Display for Subblock {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "k={}|{}", self.k, self.body())
    }
}

impl fmt::Debug for Subblock {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for Subblock {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let rest = s.strip_prefix("k=").ok_or_else(|| Error::parse(1, 1, "block literal must start with `k=`"))?;
        let (k, body) = rest.split_once('|').ok_or_else(|| Error::parse(1, 3, "missing `|` after the level"))?;
        let k: u32 = k.parse().map_err(|_| Error::parse(1, 3, format!("invalid level `{k}`")))?;
        let k = u8::try_from(k).map_err(|_| Error::parse(1, 3, format!("level {k} is too large")))?;
        if k == 0 {
            return Err(Error::InvalidLevel(0));
        }
        let body_col = 3 + rest.find('|').unwrap_or(0) + 1;
        Subblock::parse_body(k, body, 1, body_col)
    }
}

impl Serialize for Subblock {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Subblock {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
