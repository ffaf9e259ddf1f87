//! Diagonalization against a finite almost disjoint family.
//!
//! Given pairwise almost disjoint streams `P_0, …, P_{m-1}`, the engine picks
//! `q_0 < q_1 < …` with `q_n ∈ ⟨P_{n mod m}⟩` so that adding `q_n` never
//! raises `F(⟨q_0, …, q_n⟩ ∩ ⟨P_i⟩)` for the other members already in play.
//! Every valuation is recomputed from scratch at the horizon and compared,
//! so a completed trace is a computational check of that stability.

use std::fmt;

use serde::Serialize;

use crate::blocks::Subblock;
use crate::error::{Error, Result};
use crate::span::{
    big_f, intersect_spans, is_member, Combination, EnumerationCap, FiniteBlockSeq, HorizonValuation, Valuation,
};
use crate::streams::SequenceStream;
use crate::structure::{smallness_check, SmallnessCertificate, Verdict};

/// A validated family with its pairwise horizon bounds `N_{i,j}`.
#[derive(Debug, Clone)]
pub struct ADFamily {
    k: u8,
    members: Vec<SequenceStream>,
    tail_index: usize,
    horizon: usize,
    cap: EnumerationCap,
    truncations: Vec<FiniteBlockSeq>,
    bounds: Vec<Vec<Option<HorizonValuation>>>,
    certificates: Vec<(usize, usize, SmallnessCertificate)>,
}

impl ADFamily {
    pub fn k(&self) -> u8 {
        self.k
    }

    pub fn members(&self) -> &[SequenceStream] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn tail_index(&self) -> usize {
        self.tail_index
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn cap(&self) -> EnumerationCap {
        self.cap
    }

    /// Member `i` truncated at the horizon.
    pub fn truncation(&self, i: usize) -> &FiniteBlockSeq {
        &self.truncations[i]
    }

    /// `F(⟨P_i⟩ ∩ ⟨P_j⟩)` at the horizon; `None` when `i == j`.
    pub fn bound(&self, i: usize, j: usize) -> Option<HorizonValuation> {
        self.bounds[i][j]
    }

    /// Certificates for every ordered pair `(i, j)`, `i ≠ j`.
    pub fn certificates(&self) -> &[(usize, usize, SmallnessCertificate)] {
        &self.certificates
    }
}

/// Checks every ordered pair with a smallness certificate at `(n, horizon)`
/// and computes the pairwise bounds from the truncations.
///
/// A single member is accepted; it simply has no pairs.
pub fn validate_family(
    members: Vec<SequenceStream>,
    n: usize,
    horizon: usize,
    cap: EnumerationCap,
) -> Result<ADFamily> {
    let k = members.first().ok_or(Error::EmptyFamily)?.k();
    if let Some(other) = members.iter().find(|s| s.k() != k) {
        return Err(Error::MismatchedLevel { left: k, right: other.k() });
    }
    let m = members.len();
    let mut certificates = Vec::new();
    for i in 0..m {
        for j in 0..m {
            if i == j {
                continue;
            }
            let cert = smallness_check(&members[i], &members[j], n, horizon, cap)?;
            if cert.verdict == Verdict::Nonempty {
                return Err(Error::NotAlmostDisjoint(i.min(j), i.max(j)));
            }
            certificates.push((i, j, cert));
        }
    }
    let truncations: Vec<FiniteBlockSeq> = members.iter().map(|s| s.truncate(horizon)).collect();
    let mut bounds = vec![vec![None; m]; m];
    for i in 0..m {
        for j in i + 1..m {
            let common = intersect_spans(&truncations[i], &truncations[j], cap)?;
            let value = big_f(common.iter().map(|c| &c.block))?.at_horizon(horizon);
            bounds[i][j] = Some(value);
            bounds[j][i] = Some(value);
        }
    }
    Ok(ADFamily { k, members, tail_index: n, horizon, cap, truncations, bounds, certificates })
}

/// The block picked at one step.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Choice {
    pub block: Subblock,
    /// Family member the block was drawn from.
    pub member: usize,
    /// Index of the block within that member's stream.
    pub index: usize,
    /// Index `J` of a block of the same stream strictly between the previous
    /// choice and this one; `None` at step 0.
    pub between: Option<usize>,
    pub witness: Combination,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct StabilityCheck {
    pub member: usize,
    pub before: Valuation,
    pub after: Valuation,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DiagonalStep {
    pub step: usize,
    pub choice: Choice,
    pub checks: Vec<StabilityCheck>,
    /// `F(⟨q_0, …, q_n⟩ ∩ ⟨P_member⟩)` right after this step.
    pub own_value: HorizonValuation,
    /// Intersection elements that meet `supp(q_n)`; each used `q_n` with a
    /// positive exponent.
    pub fresh_elements_checked: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct DiagonalTrace {
    pub steps: Vec<DiagonalStep>,
    /// `F(⟨q_0, …, q_last⟩ ∩ ⟨P_i⟩)` for every member, once the run ends.
    pub final_values: Vec<Valuation>,
}

impl DiagonalTrace {
    pub fn chosen(&self) -> impl Iterator<Item = &Subblock> + '_ {
        self.steps.iter().map(|s| &s.choice.block)
    }

    pub fn chosen_seq(&self, k: u8) -> FiniteBlockSeq {
        FiniteBlockSeq::new(k, self.chosen().cloned().collect()).expect("chosen blocks are strictly increasing")
    }
}

impl fmt::Display for DiagonalStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "step={} q={} J=", self.step, self.choice.block)?;
        match self.choice.between {
            Some(j) => write!(f, "{j}")?,
            None => f.write_str("-")?,
        }
        f.write_str(" checks=[")?;
        for (n, check) in self.checks.iter().enumerate() {
            if n > 0 {
                f.write_str(",")?;
            }
            write!(f, "{}:{}->{}", check.member, check.before, check.after)?;
        }
        f.write_str("]")
    }
}

impl fmt::Display for DiagonalTrace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for step in &self.steps {
            writeln!(f, "{step}")?;
        }
        Ok(())
    }
}

/// Members whose valuation must stay fixed at step `n`: those already in
/// play other than the current source.
fn checked_members(m: usize, n: usize) -> impl Iterator<Item = usize> {
    let source = n % m;
    (0..m).filter(move |&i| i != source && i < n)
}

/// First-fit choice for the next step (`n = trace.steps.len()`).
///
/// Scans the source member's truncation in stream order for the first block
/// `b` such that some block of the same stream lies strictly between the
/// previous choice and `b`, and `f(b) > N_{source,i}` for every checked
/// member `i`.
pub fn choose_next(family: &ADFamily, trace: &DiagonalTrace) -> Result<Choice> {
    let n = trace.steps.len();
    let m = family.len();
    let member = n % m;
    let seq = family.truncation(member);
    let previous = trace.steps.last().map(|s| &s.choice.block);
    let blocks = seq.blocks();
    for (index, block) in blocks.iter().enumerate() {
        let between = match previous {
            None => None,
            Some(prev) => {
                if !prev.precedes(block) {
                    continue;
                }
                match (0..index).find(|&j| prev.precedes(&blocks[j]) && blocks[j].precedes(block)) {
                    Some(j) => Some(j),
                    None => continue,
                }
            }
        };
        let f = block.little_f()?;
        let clears_bounds =
            checked_members(m, n).all(|i| family.bound(member, i).is_none_or(|b| b.value.is_exceeded_by(f)));
        if !clears_bounds {
            continue;
        }
        let witness = is_member(block, seq, false)?.expect("a generator lies in its own span");
        return Ok(Choice { block: block.clone(), member, index, between, witness });
    }
    Err(Error::HorizonExhausted { step: n, horizon: family.horizon() })
}

fn valuation_against(chosen: &FiniteBlockSeq, member: &FiniteBlockSeq, family: &ADFamily) -> Result<HorizonValuation> {
    let common = intersect_spans(chosen, member, family.cap())?;
    Ok(big_f(common.iter().map(|c| &c.block))?.at_horizon(family.horizon()))
}

/// Runs `cycles` passes over the family, one block per member per pass.
///
/// After each step the valuation against every checked member is
/// recomputed and must equal its value before the step. Every intersection
/// element touching the new block must use it with a positive exponent. At
/// the end, each member's valuation must not exceed the larger of its
/// pairwise bounds and its value at the last step that drew from it.
pub fn run_diagonalization(family: &ADFamily, cycles: usize) -> Result<DiagonalTrace> {
    let k = family.k();
    let m = family.len();
    let mut trace = DiagonalTrace::default();
    for n in 0..cycles * m {
        let choice = choose_next(family, &trace)?;
        let before_seq = trace.chosen_seq(k);
        let mut blocks = before_seq.blocks().to_vec();
        blocks.push(choice.block.clone());
        let after_seq = FiniteBlockSeq::new(k, blocks)?;

        let mut checks = Vec::new();
        let mut fresh_elements_checked = 0;
        for i in checked_members(m, n) {
            let member = family.truncation(i);
            let before = valuation_against(&before_seq, member, family)?.value;
            let common = intersect_spans(&after_seq, member, family.cap())?;
            for element in &common {
                if element.block.supports_intersect(&choice.block) {
                    fresh_elements_checked += 1;
                    if element.in_p.exponent_of(n) == Some(0) {
                        return Err(Error::UntetrisedNewBlock { step: n, member: i });
                    }
                }
            }
            let after = big_f(common.iter().map(|c| &c.block))?.value;
            if before != after {
                return Err(Error::DiagonalClaimViolation { step: n, member: i, before, after });
            }
            checks.push(StabilityCheck { member: i, before, after });
        }
        let own_value = valuation_against(&after_seq, family.truncation(choice.member), family)?;
        trace.steps.push(DiagonalStep { step: n, choice, checks, own_value, fresh_elements_checked });
    }

    let chosen = trace.chosen_seq(k);
    for i in 0..m {
        let value = valuation_against(&chosen, family.truncation(i), family)?.value;
        let own =
            trace.steps.iter().rev().find(|s| s.choice.member == i).map_or(Valuation::Bottom, |s| s.own_value.value);
        let bound = (0..m).filter_map(|j| family.bound(i, j)).map(|b| b.value).fold(own, Valuation::join);
        if value > bound {
            return Err(Error::DiagonalClaimViolation {
                step: trace.steps.len(),
                member: i,
                before: bound,
                after: value,
            });
        }
        trace.final_values.push(value);
    }
    Ok(trace)
}
