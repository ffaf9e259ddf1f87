//! Decomposition graphs, intertwined blocks, star-splitting, and horizon
//! smallness certificates.
//!
//! For `p ∈ ⟨P⟩ ∩ ⟨Q⟩` with witnesses `p = Σ T^{i'}(p_i) = Σ T^{j'}(q_j)`,
//! the graph `G_p` has the used `P` generators on the left, the used `Q`
//! generators on the right, and an edge wherever the two tetrised terms
//! share a support position. `p` is intertwined when `G_p` is connected.

use std::fmt;

use serde::Serialize;

use crate::blocks::Subblock;
use crate::error::{Error, Result};
use crate::span::{evaluate, intersect_spans, is_member, Combination, CommonElement, EnumerationCap, FiniteBlockSeq};
use crate::streams::SequenceStream;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DecompositionGraph {
    /// `P` generator indices used by the `P` witness, ascending.
    pub left: Vec<usize>,
    /// `Q` generator indices used by the `Q` witness, ascending.
    pub right: Vec<usize>,
    /// `(P index, Q index)` pairs, sorted.
    pub edges: Vec<(usize, usize)>,
}

struct DisjointSets {
    parent: Vec<usize>,
}

impl DisjointSets {
    fn new(n: usize) -> Self {
        DisjointSets { parent: (0..n).collect() }
    }

    fn find(&mut self, x: usize) -> usize {
        let mut root = x;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        let mut cur = x;
        while self.parent[cur] != root {
            let next = self.parent[cur];
            self.parent[cur] = root;
            cur = next;
        }
        root
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra] = rb;
        }
    }
}

impl DecompositionGraph {
    fn left_slot(&self, index: usize) -> usize {
        self.left.binary_search(&index).expect("edge endpoint is a left vertex")
    }

    fn right_slot(&self, index: usize) -> usize {
        self.left.len() + self.right.binary_search(&index).expect("edge endpoint is a right vertex")
    }

    fn components(&self) -> DisjointSets {
        let mut sets = DisjointSets::new(self.left.len() + self.right.len());
        for &(a, b) in &self.edges {
            sets.union(self.left_slot(a), self.right_slot(b));
        }
        sets
    }

    pub fn vertex_count(&self) -> usize {
        self.left.len() + self.right.len()
    }

    pub fn is_connected(&self) -> bool {
        let n = self.vertex_count();
        if n == 0 {
            return true;
        }
        let mut sets = self.components();
        let root = sets.find(0);
        (1..n).all(|v| sets.find(v) == root)
    }

    pub fn has_isolated_vertex(&self) -> bool {
        self.left.iter().any(|&a| !self.edges.iter().any(|e| e.0 == a))
            || self.right.iter().any(|&b| !self.edges.iter().any(|e| e.1 == b))
    }

    /// For edges `(a, b)` and `(a', b')` with `a < a'`, `b ≤ b'`.
    pub fn is_monotone(&self) -> bool {
        self.edges.iter().all(|&(a, b)| self.edges.iter().all(|&(a2, b2)| a >= a2 || b <= b2))
    }

    /// The vertex sets of the connected component containing left vertex
    /// `index`.
    pub fn component_of_left(&self, index: usize) -> (Vec<usize>, Vec<usize>) {
        let mut sets = self.components();
        let root = sets.find(self.left_slot(index));
        let left = self.left.iter().enumerate().filter(|&(slot, _)| sets.find(slot) == root).map(|(_, &v)| v).collect();
        let offset = self.left.len();
        let right = self
            .right
            .iter()
            .enumerate()
            .filter(|&(slot, _)| sets.find(offset + slot) == root)
            .map(|(_, &v)| v)
            .collect();
        (left, right)
    }

    /// Debug dump: one `L<i> - R<j>` line per edge.
    pub fn dump(&self) -> String {
        self.edges.iter().map(|(a, b)| format!("L{a} - R{b}\n")).collect()
    }
}

fn check_witnesses(element: &CommonElement, p: &FiniteBlockSeq, q: &FiniteBlockSeq) -> Result<()> {
    element.block.require_block()?;
    if evaluate(p, &element.in_p)? != element.block || evaluate(q, &element.in_q)? != element.block {
        return Err(Error::WitnessMismatch);
    }
    Ok(())
}

/// Builds `G_p` for a common element and its two witnesses.
pub fn build_graph(element: &CommonElement, p: &FiniteBlockSeq, q: &FiniteBlockSeq) -> Result<DecompositionGraph> {
    check_witnesses(element, p, q)?;
    let left_terms: Vec<(usize, Subblock)> =
        element.in_p.terms().iter().map(|t| (t.index, p.blocks()[t.index].tetris(t.exponent.into()))).collect();
    let right_terms: Vec<(usize, Subblock)> =
        element.in_q.terms().iter().map(|t| (t.index, q.blocks()[t.index].tetris(t.exponent.into()))).collect();
    let mut edges = Vec::new();
    for (a, ta) in &left_terms {
        for (b, tb) in &right_terms {
            if ta.supports_intersect(tb) {
                edges.push((*a, *b));
            }
        }
    }
    Ok(DecompositionGraph { left: element.in_p.indices().collect(), right: element.in_q.indices().collect(), edges })
}

pub fn is_intertwined(element: &CommonElement, p: &FiniteBlockSeq, q: &FiniteBlockSeq) -> Result<bool> {
    Ok(build_graph(element, p, q)?.is_connected())
}

/// Result of [`extract_intertwined`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Extraction {
    pub element: CommonElement,
    /// Least `N` with `⟨p_0, …, p_{N-1}⟩ ∩ ⟨Q⟩ ≠ ∅`.
    pub prefix_len: usize,
    /// How many component splits were applied to the starting element.
    pub splits: usize,
    pub graph: DecompositionGraph,
}

/// Every element of `⟨p_0, …, p_{N-1}⟩ ∩ ⟨Q⟩` for the least such nonempty
/// `N`, sorted by block, together with `N`. Empty when `⟨P⟩ ∩ ⟨Q⟩ = ∅`.
pub fn minimal_prefix_intersection(
    p: &FiniteBlockSeq,
    q: &FiniteBlockSeq,
    cap: EnumerationCap,
) -> Result<(usize, Vec<CommonElement>)> {
    let common = intersect_spans(p, q, cap)?;
    let last_index = |c: &CommonElement| c.in_p.indices().last().expect("unstarred witnesses are nonempty");
    let Some(n) = common.iter().map(last_index).min() else {
        return Ok((0, Vec::new()));
    };
    let mut at_minimum: Vec<CommonElement> = common.into_iter().filter(|c| last_index(c) == n).collect();
    at_minimum.sort_by(|a, b| a.block.cmp(&b.block));
    Ok((n + 1, at_minimum))
}

/// Finds an intertwined block in `⟨p_0, …, p_{N-1}⟩ ∩ ⟨Q⟩` for the least
/// `N` making that set nonempty, starting from its least element.
pub fn extract_intertwined(p: &FiniteBlockSeq, q: &FiniteBlockSeq, cap: EnumerationCap) -> Result<Option<Extraction>> {
    let (prefix_len, candidates) = minimal_prefix_intersection(p, q, cap)?;
    match candidates.into_iter().next() {
        None => Ok(None),
        Some(start) => extract_from(start, prefix_len, p, q).map(Some),
    }
}

/// Splits `start` until its decomposition graph is connected.
///
/// Each round keeps the connected component of the last `P` vertex. That
/// component must be a suffix of both witnesses; the discarded prefix must
/// coincide on both sides and must not attain `k`, since it would otherwise
/// lie in a shorter prefix intersection.
pub fn extract_from(
    start: CommonElement,
    prefix_len: usize,
    p: &FiniteBlockSeq,
    q: &FiniteBlockSeq,
) -> Result<Extraction> {
    let mut element = start;
    let mut splits = 0;
    loop {
        let graph = build_graph(&element, p, q)?;
        if graph.is_connected() {
            return Ok(Extraction { element, prefix_len, splits, graph });
        }
        let last = *graph.left.last().expect("blocks have a nonempty witness");
        let (left, right) = graph.component_of_left(last);
        let alpha = graph.left.len() - left.len();
        let beta = graph.right.len() - right.len();
        if graph.left[alpha..] != left[..] || graph.right[beta..] != right[..] {
            return Err(Error::ComponentNotUpwardClosed);
        }
        let (drop_p, keep_p) = element.in_p.split_at(alpha);
        let (drop_q, keep_q) = element.in_q.split_at(beta);
        let dropped = evaluate(p, &drop_p)?;
        let kept = evaluate(p, &keep_p)?;
        if dropped != evaluate(q, &drop_q)? || kept != evaluate(q, &keep_q)? {
            return Err(Error::WitnessMismatch);
        }
        if dropped.is_block() {
            return Err(Error::MinimalityViolation { prefix_len });
        }
        kept.require_block()?;
        element = CommonElement { block: kept, in_p: keep_p.unstarred()?, in_q: keep_q.unstarred()? };
        splits += 1;
    }
}

/// `p ⋆ q = s + p + r` with `s < p < r`, plus the starred witnesses of `s`
/// and `r` in both spans.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StarSplit {
    pub star: Subblock,
    pub s: Subblock,
    pub r: Subblock,
    pub s_in_p: Combination,
    pub s_in_q: Combination,
    pub r_in_p: Combination,
    pub r_in_q: Combination,
}

/// Splits `p ⋆ q` around an intertwined `p`.
///
/// On the window `[min supp p, max supp p]` the star must agree with `p`;
/// a disagreement is reported as [`Error::ClaimViolation`].
pub fn star_split(
    p: &CommonElement,
    q: &CommonElement,
    seq_p: &FiniteBlockSeq,
    seq_q: &FiniteBlockSeq,
) -> Result<StarSplit> {
    if !is_intertwined(p, seq_p, seq_q)? {
        return Err(Error::NotIntertwined);
    }
    check_witnesses(q, seq_p, seq_q)?;
    let star = p.block.star(&q.block)?;
    let lo = p.block.min_support().expect("blocks are nonempty");
    let hi = p.block.max_support().expect("blocks are nonempty");
    for position in lo..=hi {
        let (star_value, block_value) = (star.value_at(position), p.block.value_at(position));
        if star_value != block_value {
            return Err(Error::ClaimViolation { position, star_value, block_value });
        }
    }
    let s = star.restrict(..lo);
    let r = star.restrict(hi + 1..);
    let rebuilt = s.add(&p.block)?.add(&r)?;
    assert_eq!(rebuilt, star, "restrictions around the window must rebuild the star");
    assert!(s.precedes(&p.block) && p.block.precedes(&r));
    let starred_witness = |part: &Subblock, seq: &FiniteBlockSeq, name: char| -> Result<Combination> {
        is_member(part, seq, true)?.ok_or(Error::SplitOutsideSpans { part: name })
    };
    Ok(StarSplit {
        s_in_p: starred_witness(&s, seq_p, 's')?,
        s_in_q: starred_witness(&s, seq_q, 's')?,
        r_in_p: starred_witness(&r, seq_p, 'r')?,
        r_in_q: starred_witness(&r, seq_q, 'r')?,
        star,
        s,
        r,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    EmptyAtHorizon,
    Nonempty,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::EmptyAtHorizon => "empty_at_horizon",
            Verdict::Nonempty => "nonempty",
        })
    }
}

/// Horizon evidence that `⟨P/n⟩ ∩ ⟨Q⟩ = ∅`. Exact only for explicit streams
/// that fit under the horizon.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SmallnessCertificate {
    pub tail_index: usize,
    pub horizon: usize,
    pub verdict: Verdict,
    /// The first common element found, when the verdict is nonempty.
    pub witness: Option<CommonElement>,
}

impl fmt::Display for SmallnessCertificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "small? n={} H={} verdict={}", self.tail_index, self.horizon, self.verdict)
    }
}

pub fn smallness_check(
    p: &SequenceStream,
    q: &SequenceStream,
    n: usize,
    horizon: usize,
    cap: EnumerationCap,
) -> Result<SmallnessCertificate> {
    let tail = p.tail(n).truncate(horizon);
    let common = intersect_spans(&tail, &q.truncate(horizon), cap)?;
    let witness = common.into_iter().next();
    Ok(SmallnessCertificate {
        tail_index: n,
        horizon,
        verdict: if witness.is_none() { Verdict::EmptyAtHorizon } else { Verdict::Nonempty },
        witness,
    })
}
