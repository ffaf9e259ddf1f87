mod common;

use std::collections::BTreeSet;

use fink_core::{
    big_f, enumerate_span, evaluate, intersect_spans, is_member, Builtin, EnumerationCap, FiniteBlockSeq,
    SequenceStream, Subblock, Valuation,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn seq_from(seed: u64, k: u8, max_generators: usize) -> FiniteBlockSeq {
    common::random_seq(&mut ChaCha8Rng::seed_from_u64(seed), k, max_generators)
}

/// Every finite sum of tetris images, written out position by position.
fn literal_span(seq: &FiniteBlockSeq, starred: bool) -> BTreeSet<Subblock> {
    let k = seq.k();
    let mut out = BTreeSet::new();
    // 0 = unused, otherwise exponent + 1
    let mut digits = vec![0u8; seq.len()];
    loop {
        let used: Vec<(usize, u8)> =
            digits.iter().enumerate().filter(|(_, &d)| d > 0).map(|(g, &d)| (g, d - 1)).collect();
        let admissible = if starred { true } else { used.iter().any(|&(_, e)| e == 0) };
        if admissible {
            let mut values = vec![0u8; common::WIDTH + 4];
            for &(g, e) in &used {
                for (m, v) in seq.blocks()[g].entries() {
                    values[m] = v.saturating_sub(e);
                }
            }
            out.insert(Subblock::new(k, values).unwrap());
        }
        let mut i = 0;
        loop {
            if i == digits.len() {
                return out;
            }
            digits[i] += 1;
            if digits[i] <= k {
                break;
            }
            digits[i] = 0;
            i += 1;
        }
    }
}

fn positive_levels() -> impl Strategy<Value = u8> {
    prop_oneof![Just(2u8), Just(3u8)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn enumeration_matches_literal_definition(seed in any::<u64>(), k in positive_levels(), starred in any::<bool>()) {
        let seq = seq_from(seed, k, 5);
        let mut expected = literal_span(&seq, starred);
        if starred {
            expected.insert(Subblock::empty(k).unwrap());
        }
        let span = enumerate_span(&seq, starred, EnumerationCap::default()).unwrap();
        let mut got: BTreeSet<Subblock> = span.elements.iter().map(|(b, _)| b.clone()).collect();
        if span.contains_empty {
            got.insert(Subblock::empty(k).unwrap());
        }
        prop_assert_eq!(got, expected);
    }

    #[test]
    fn witnesses_are_unique_and_evaluate_back(seed in any::<u64>(), k in positive_levels(), starred in any::<bool>()) {
        let seq = seq_from(seed, k, 5);
        let span = enumerate_span(&seq, starred, EnumerationCap::default()).unwrap();
        let distinct: BTreeSet<&Subblock> = span.elements.iter().map(|(b, _)| b).collect();
        prop_assert_eq!(distinct.len(), span.len());
        for (block, witness) in &span.elements {
            let value = evaluate(&seq, witness).unwrap();
            prop_assert_eq!(&value, block);
            let found = is_member(block, &seq, starred).unwrap();
            prop_assert_eq!(found.as_ref(), Some(witness));
        }
    }

    #[test]
    fn unstarred_span_is_star_closed(seed in any::<u64>(), k in positive_levels()) {
        let seq = seq_from(seed, k, 4);
        let span = enumerate_span(&seq, false, EnumerationCap::default()).unwrap();
        for (a, _) in &span.elements {
            for (b, _) in &span.elements {
                let star = a.star(b).unwrap();
                prop_assert!(is_member(&star, &seq, false).unwrap().is_some(), "{} * {} = {}", a, b, star);
            }
        }
    }

    #[test]
    fn starred_span_is_closed_under_tetris(seed in any::<u64>(), k in positive_levels()) {
        let seq = seq_from(seed, k, 4);
        let span = enumerate_span(&seq, false, EnumerationCap::default()).unwrap();
        for (block, _) in &span.elements {
            for i in 0..=u32::from(k) {
                let image = block.tetris(i);
                prop_assert!(is_member(&image, &seq, true).unwrap().is_some(), "T^{}({})", i, block);
            }
        }
    }

    #[test]
    fn membership_rejects_what_enumeration_lacks(seed in any::<u64>(), k in positive_levels(), starred in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xA5A5);
        let seq = seq_from(seed, k, 5);
        let span = literal_span(&seq, starred);
        for _ in 0..64 {
            let t = common::random_subblock(&mut rng, k);
            let expected = span.contains(&t) || (starred && t.is_empty());
            prop_assert_eq!(is_member(&t, &seq, starred).unwrap().is_some(), expected, "{}", t);
        }
    }

    #[test]
    fn valuation_is_a_monotone_join(seed in any::<u64>(), k in 1u8..=4, split in 0usize..12) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let blocks: Vec<Subblock> = (0..12)
            .map(|_| common::random_subblock(&mut rng, k))
            .filter(|b| b.is_block())
            .collect();
        let cut = split.min(blocks.len());
        let (left, right) = blocks.split_at(cut);
        let whole = big_f(&blocks).unwrap().value;
        let l = big_f(left).unwrap().value;
        let r = big_f(right).unwrap().value;
        prop_assert_eq!(whole, l.join(r));
        prop_assert!(l <= whole && r <= whole);
        prop_assert_eq!(big_f(left.iter().chain(left)).unwrap().value, l);
    }

    #[test]
    fn stream_truncations_are_coherent(builtin in prop_oneof![Just(Builtin::Example13P), Just(Builtin::Example13Q), Just(Builtin::Evens)],
                                       k in 1u8..=4, h in 0usize..30, extra in 0usize..10, n in 0usize..6) {
        let stream = SequenceStream::builtin(builtin, k).unwrap();
        let short = stream.truncate(h);
        let long = stream.truncate(h + extra);
        prop_assert!(long.blocks().starts_with(short.blocks()));
        for block in short.blocks() {
            prop_assert!(block.max_support().unwrap() <= h);
        }
        if let Some(next) = long.blocks().get(short.len()) {
            prop_assert!(next.max_support().unwrap() > h);
        }
        if n <= short.len() {
            prop_assert_eq!(stream.tail(n).truncate(h), short.skip(n));
        }
    }
}

#[test]
fn example_elements_lie_in_both_truncations() {
    for k in 2u8..=3 {
        let p = SequenceStream::builtin(Builtin::Example13P, k).unwrap().truncate(21);
        let q = SequenceStream::builtin(Builtin::Example13Q, k).unwrap().truncate(21);
        for m in 0..=10 {
            let mut pairs = vec![(0, k)];
            pairs.extend((0..m).map(|n| (2 * n + 1, k - 1)));
            let s = Subblock::from_pairs(k, &pairs).unwrap();
            let in_p = is_member(&s, &p, false).unwrap().expect("in P");
            let in_q = is_member(&s, &q, false).unwrap().expect("in Q");
            assert_eq!(in_p.terms().len(), m + 1);
            assert!(in_q.terms()[1..].iter().all(|t| t.exponent == 1));
        }
    }
}

#[test]
fn example_intersection_has_bottom_free_valuation() {
    let p = SequenceStream::builtin(Builtin::Example13P, 2).unwrap().truncate(9);
    let q = SequenceStream::builtin(Builtin::Example13Q, 2).unwrap().truncate(9);
    let common = intersect_spans(&p, &q, EnumerationCap::default()).unwrap();
    assert_eq!(common.len(), 16);
    assert_eq!(big_f(common.iter().map(|c| &c.block)).unwrap().value, Valuation::Finite(0));
}
