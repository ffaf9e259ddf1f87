//! Spans of finite block sequences.
//!
//! `⟨P⟩` is the set of sums `T^{j_0}(p_{n_0}) + … + T^{j_m}(p_{n_m})` with
//! `n_0 < … < n_m`, every `j_i < k` and `min j_i = 0`. The starred span
//! `⟨P⟩*` drops the `min j_i = 0` requirement and also contains the empty
//! subblock. Because generator supports are pairwise disjoint, every element
//! has exactly one witness [`Combination`].

use std::collections::BTreeSet;
use std::fmt;

use serde::{Serialize, Serializer};

use crate::blocks::Subblock;
use crate::error::{Error, Result};

/// A block sequence `p_0 < p_1 < … < p_{N-1}` at a common level.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FiniteBlockSeq {
    k: u8,
    blocks: Vec<Subblock>,
}

impl FiniteBlockSeq {
    pub fn new(k: u8, blocks: Vec<Subblock>) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidLevel(0));
        }
        for (index, block) in blocks.iter().enumerate() {
            if block.k() != k {
                return Err(Error::MismatchedLevel { left: k, right: block.k() });
            }
            block.require_block()?;
            if index > 0 && !blocks[index - 1].precedes(block) {
                return Err(Error::InvalidSequence { index });
            }
        }
        Ok(FiniteBlockSeq { k, blocks })
    }

    pub fn empty(k: u8) -> Result<Self> {
        FiniteBlockSeq::new(k, Vec::new())
    }

    pub fn k(&self) -> u8 {
        self.k
    }

    pub fn blocks(&self) -> &[Subblock] {
        &self.blocks
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    /// `(p_0, …, p_{n-1})`, clamped to the sequence length.
    pub fn prefix(&self, n: usize) -> FiniteBlockSeq {
        FiniteBlockSeq { k: self.k, blocks: self.blocks[..n.min(self.len())].to_vec() }
    }

    /// Drops the first `n` blocks.
    pub fn skip(&self, n: usize) -> FiniteBlockSeq {
        FiniteBlockSeq { k: self.k, blocks: self.blocks[n.min(self.len())..].to_vec() }
    }

    /// Parses the sequence file format: a `k=<K>` line followed by one block
    /// body per line. Blank lines are ignored.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (header_no, header) = lines.next().ok_or_else(|| Error::parse(1, 1, "missing `k=<K>` header"))?;
        let k = parse_level(header.trim(), header_no + 1)?;
        let mut blocks = Vec::new();
        for (no, line) in lines {
            let block = Subblock::parse_body(k, line, no + 1, 1)?;
            if !block.is_block() {
                return Err(Error::parse(no + 1, 1, format!("`{}` does not attain k={k}", line.trim())));
            }
            if let Some(prev) = blocks.last() {
                if !Subblock::precedes(prev, &block) {
                    return Err(Error::parse(no + 1, 1, "block does not lie strictly after its predecessor"));
                }
            }
            blocks.push(block);
        }
        FiniteBlockSeq::new(k, blocks)
    }

    /// Inverse of [`FiniteBlockSeq::parse`].
    pub fn render(&self) -> String {
        let mut out = format!("k={}\n", self.k);
        for block in &self.blocks {
            out.push_str(&block.body());
            out.push('\n');
        }
        out
    }
}

pub(crate) fn parse_level(token: &str, line: usize) -> Result<u8> {
    let value =
        token.strip_prefix("k=").ok_or_else(|| Error::parse(line, 1, format!("expected `k=<K>`, got `{token}`")))?;
    let k: u8 = value.parse().map_err(|_| Error::parse(line, 3, format!("invalid level `{value}`")))?;
    if k == 0 {
        return Err(Error::InvalidLevel(0));
    }
    Ok(k)
}

/// One summand `T^exponent(p_index)` of a combination.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct Term {
    pub index: usize,
    pub exponent: u8,
}

/// A membership witness: generator indices with tetris exponents.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Combination {
    terms: Vec<Term>,
    starred: bool,
}

impl Combination {
    /// Indices must be strictly increasing. Unstarred combinations must be
    /// nonempty with a zero exponent. A starred combination may be empty; it
    /// then witnesses the empty subblock.
    pub fn new(terms: Vec<Term>, starred: bool) -> Result<Self> {
        if terms.windows(2).any(|w| w[0].index >= w[1].index) {
            return Err(Error::InvalidCombination("indices must be strictly increasing".into()));
        }
        if !starred {
            if terms.is_empty() {
                return Err(Error::InvalidCombination("an unstarred combination needs a term".into()));
            }
            if terms.iter().all(|t| t.exponent > 0) {
                return Err(Error::InvalidCombination("an unstarred combination needs a zero exponent".into()));
            }
        }
        Ok(Combination { terms, starred })
    }

    pub fn from_pairs(pairs: &[(usize, u8)], starred: bool) -> Result<Self> {
        Combination::new(pairs.iter().map(|&(index, exponent)| Term { index, exponent }).collect(), starred)
    }

    pub fn empty_starred() -> Self {
        Combination { terms: Vec::new(), starred: true }
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn starred(&self) -> bool {
        self.starred
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.terms.iter().map(|t| t.index)
    }

    pub fn exponent_of(&self, index: usize) -> Option<u8> {
        self.terms.binary_search_by_key(&index, |t| t.index).ok().map(|i| self.terms[i].exponent)
    }

    /// Splits the terms at position `at`, returning the two halves as
    /// starred combinations (either half may fail to contain a zero exponent).
    pub fn split_at(&self, at: usize) -> (Combination, Combination) {
        let (left, right) = self.terms.split_at(at);
        (Combination { terms: left.to_vec(), starred: true }, Combination { terms: right.to_vec(), starred: true })
    }

    /// Re-tags the combination as unstarred when its terms allow it.
    pub fn unstarred(&self) -> Result<Combination> {
        Combination::new(self.terms.clone(), false)
    }

    /// Parses `n0^j0 + n1^j1 + …`, or `-` for the empty starred combination.
    pub fn parse(text: &str, starred: bool) -> Result<Self> {
        let trimmed = text.trim();
        if trimmed == "-" {
            return if starred {
                Ok(Combination::empty_starred())
            } else {
                Err(Error::parse(1, 1, "the empty combination is only valid when starred"))
            };
        }
        let mut terms = Vec::new();
        let mut column = 1;
        for item in text.split('+') {
            let lead = column + (item.len() - item.trim_start().len());
            let (index, exponent) = item
                .trim()
                .split_once('^')
                .ok_or_else(|| Error::parse(1, lead, format!("expected <index>^<exponent>, got `{}`", item.trim())))?;
            let index = index.trim().parse().map_err(|_| Error::parse(1, lead, format!("invalid index `{index}`")))?;
            let exponent =
                exponent.trim().parse().map_err(|_| Error::parse(1, lead, format!("invalid exponent `{exponent}`")))?;
            terms.push(Term { index, exponent });
            column += item.len() + 1;
        }
        Combination::new(terms, starred)
    }
}

impl PartialOrd for Combination {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// Lexicographic by index list, then by exponent list.
impl Ord for Combination {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.indices()
            .cmp(other.indices())
            .then_with(|| self.terms.iter().map(|t| t.exponent).cmp(other.terms.iter().map(|t| t.exponent)))
            .then_with(|| self.starred.cmp(&other.starred))
    }
}

impl fmt::Display for Combination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("-");
        }
        for (i, term) in self.terms.iter().enumerate() {
            if i > 0 {
                f.write_str(" + ")?;
            }
            write!(f, "{}^{}", term.index, term.exponent)?;
        }
        Ok(())
    }
}

/// `F(X)`: either the empty supremum or a position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Valuation {
    /// The value of the empty set; below every position.
    Bottom,
    Finite(usize),
}

impl Valuation {
    pub fn join(self, other: Valuation) -> Valuation {
        self.max(other)
    }

    pub fn as_finite(self) -> Option<usize> {
        match self {
            Valuation::Bottom => None,
            Valuation::Finite(n) => Some(n),
        }
    }

    /// Strict comparison of a position against this valuation, with `Bottom`
    /// acting as negative infinity.
    pub fn is_exceeded_by(self, position: usize) -> bool {
        match self {
            Valuation::Bottom => true,
            Valuation::Finite(n) => position > n,
        }
    }
}

impl fmt::Display for Valuation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Valuation::Bottom => f.write_str("bottom"),
            Valuation::Finite(n) => write!(f, "{n}"),
        }
    }
}

impl Serialize for Valuation {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Valuation::Bottom => serializer.serialize_none(),
            Valuation::Finite(n) => serializer.serialize_u64(*n as u64),
        }
    }
}

/// `F(X)` for a finite `X`, with the horizon it was computed at.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct HorizonValuation {
    pub value: Valuation,
    pub horizon: usize,
    pub element_count: usize,
}

impl HorizonValuation {
    pub fn at_horizon(mut self, horizon: usize) -> Self {
        self.horizon = horizon;
        self
    }
}

impl fmt::Display for HorizonValuation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "F={} count={} horizon={}", self.value, self.element_count, self.horizon)
    }
}

/// Bound on the enumeration search space: `(k+1)^N ≤ 2^bits`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EnumerationCap {
    pub bits: u32,
}

impl Default for EnumerationCap {
    fn default() -> Self {
        EnumerationCap { bits: 24 }
    }
}

impl EnumerationCap {
    pub fn new(bits: u32) -> Self {
        EnumerationCap { bits }
    }

    pub fn check(&self, generators: usize, k: u8) -> Result<()> {
        let limit = 1u128.checked_shl(self.bits).unwrap_or(u128::MAX);
        let mut size: u128 = 1;
        for _ in 0..generators {
            size = size.saturating_mul(u128::from(k) + 1);
            if size > limit {
                return Err(Error::EnumerationCapExceeded { generators, k, cap_bits: self.bits });
            }
        }
        Ok(())
    }
}

/// Evaluates a combination over `seq`.
pub fn evaluate(seq: &FiniteBlockSeq, combination: &Combination) -> Result<Subblock> {
    let mut acc = Subblock::empty(seq.k())?;
    for term in combination.terms() {
        let block = seq.blocks().get(term.index).ok_or(Error::IndexOutOfRange { index: term.index, len: seq.len() })?;
        if term.exponent >= seq.k() {
            return Err(Error::InvalidCombination(format!(
                "exponent {} at index {} is not below k={}",
                term.exponent,
                term.index,
                seq.k()
            )));
        }
        acc = acc.add(&block.tetris(term.exponent.into()))?;
    }
    Ok(acc)
}

/// Visits every nonempty element of `⟨seq⟩` (or `⟨seq⟩*`) with its witness,
/// in no particular order.
pub fn for_each_span_element<F>(seq: &FiniteBlockSeq, starred: bool, cap: EnumerationCap, mut visit: F) -> Result<()>
where
    F: FnMut(&Subblock, &Combination),
{
    let k = seq.k();
    cap.check(seq.len(), k)?;
    let n = seq.len();
    if n == 0 {
        return Ok(());
    }
    let entries: Vec<Vec<(usize, u8)>> = seq.blocks().iter().map(|b| b.entries().collect()).collect();
    let width = seq.blocks()[n - 1].values().len();
    let mut buf = vec![0u8; width];
    // digit 0 = unused, digit d > 0 = exponent d-1
    let mut digits = vec![0u8; n];
    let mut used = 0usize;
    let mut zero_exponents = 0usize;
    loop {
        // odometer increment, last generator fastest
        let mut g = n;
        loop {
            if g == 0 {
                return Ok(());
            }
            g -= 1;
            let old = digits[g];
            let new = if old == k { 0 } else { old + 1 };
            digits[g] = new;
            if old == 0 {
                used += 1;
            }
            if new == 0 {
                used -= 1;
            }
            if old == 1 {
                zero_exponents -= 1;
            }
            if new == 1 {
                zero_exponents += 1;
            }
            for &(pos, v) in &entries[g] {
                buf[pos] = if new == 0 { 0 } else { v.saturating_sub(new - 1) };
            }
            if new != 0 {
                break;
            }
        }
        if used == 0 || (!starred && zero_exponents == 0) {
            continue;
        }
        let terms = digits
            .iter()
            .enumerate()
            .filter(|(_, &d)| d > 0)
            .map(|(index, &d)| Term { index, exponent: d - 1 })
            .collect();
        let element = Subblock::new(k, buf.clone())?;
        visit(&element, &Combination { terms, starred });
    }
}

/// The elements of a span, sorted by witness.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpanEnumeration {
    pub elements: Vec<(Subblock, Combination)>,
    /// Set for starred spans, which also contain the empty subblock.
    pub contains_empty: bool,
}

impl SpanEnumeration {
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }
}

pub fn enumerate_span(seq: &FiniteBlockSeq, starred: bool, cap: EnumerationCap) -> Result<SpanEnumeration> {
    let mut elements = Vec::new();
    for_each_span_element(seq, starred, cap, |element, combination| {
        elements.push((element.clone(), combination.clone()));
    })?;
    elements.sort_by(|a, b| a.1.cmp(&b.1));
    Ok(SpanEnumeration { elements, contains_empty: starred })
}

/// Decides `t ∈ ⟨seq⟩` (or `⟨seq⟩*`) and returns the unique witness.
///
/// Each nonzero position of `t` must be owned by a generator. For an owning
/// generator the exponent is forced to `p_n(m) - t(m)` and must agree on all
/// of its positions where `t` is nonzero; where `t` is zero the generator
/// value must already be annihilated by that exponent.
pub fn is_member(t: &Subblock, seq: &FiniteBlockSeq, starred: bool) -> Result<Option<Combination>> {
    if t.k() != seq.k() {
        return Err(Error::MismatchedLevel { left: t.k(), right: seq.k() });
    }
    let Some(last) = t.max_support() else {
        return Ok(starred.then(Combination::empty_starred));
    };
    let mut terms = Vec::new();
    let mut covered = 0usize;
    for (index, generator) in seq.blocks().iter().enumerate() {
        match generator.min_support() {
            Some(first) if first > last => break,
            _ => {}
        }
        let mut exponent: Option<u8> = None;
        let mut hits = 0usize;
        for (m, pv) in generator.entries() {
            let tv = t.value_at(m);
            if tv == 0 {
                continue;
            }
            if tv > pv {
                return Ok(None);
            }
            let j = pv - tv;
            if exponent.is_some_and(|e| e != j) {
                return Ok(None);
            }
            exponent = Some(j);
            hits += 1;
        }
        let Some(j) = exponent else { continue };
        if generator.entries().any(|(m, pv)| t.value_at(m) == 0 && pv > j) {
            return Ok(None);
        }
        covered += hits;
        terms.push(Term { index, exponent: j });
    }
    let support = t.support_len();
    // generator supports are disjoint, so no position is counted twice
    assert!(covered <= support, "generator supports overlap");
    if covered != support {
        return Ok(None);
    }
    if !starred && terms.iter().all(|t| t.exponent > 0) {
        return Ok(None);
    }
    Ok(Some(Combination { terms, starred }))
}

/// An element of `⟨P⟩ ∩ ⟨Q⟩` together with both witnesses.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CommonElement {
    pub block: Subblock,
    pub in_p: Combination,
    pub in_q: Combination,
}

/// Enumerates `⟨P⟩` and keeps the elements that also lie in `⟨Q⟩`, sorted
/// by the `P` witness.
pub fn intersect_spans(p: &FiniteBlockSeq, q: &FiniteBlockSeq, cap: EnumerationCap) -> Result<Vec<CommonElement>> {
    if p.k() != q.k() {
        return Err(Error::MismatchedLevel { left: p.k(), right: q.k() });
    }
    let mut common = Vec::new();
    let mut failure = None;
    for_each_span_element(p, false, cap, |element, in_p| {
        if failure.is_some() {
            return;
        }
        match is_member(element, q, false) {
            Ok(Some(in_q)) => common.push(CommonElement { block: element.clone(), in_p: in_p.clone(), in_q }),
            Ok(None) => {}
            Err(e) => failure = Some(e),
        }
    })?;
    if let Some(e) = failure {
        return Err(e);
    }
    common.sort_by(|a, b| a.in_p.cmp(&b.in_p));
    Ok(common)
}

/// `F(X) = sup f(p)` over a finite set of blocks. Duplicates count once; the
/// horizon is the largest support position seen.
pub fn big_f<'a, I>(blocks: I) -> Result<HorizonValuation>
where
    I: IntoIterator<Item = &'a Subblock>,
{
    let set: BTreeSet<&Subblock> = blocks.into_iter().collect();
    let mut value = Valuation::Bottom;
    let mut horizon = 0;
    for block in &set {
        value = value.join(Valuation::Finite(block.little_f()?));
        horizon = horizon.max(block.max_support().unwrap_or(0));
    }
    Ok(HorizonValuation { value, horizon, element_count: set.len() })
}
