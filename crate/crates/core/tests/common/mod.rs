#![allow(dead_code)]

use fink_core::{evaluate, Combination, FiniteBlockSeq, Subblock, Term};
use rand::Rng;

pub const WIDTH: usize = 13;

/// A random block sequence at level `k` with at most `max_generators`
/// generators, all supports inside `[0, WIDTH)`.
pub fn random_seq<R: Rng>(rng: &mut R, k: u8, max_generators: usize) -> FiniteBlockSeq {
    loop {
        let target = rng.gen_range(1..=max_generators);
        let mut blocks = Vec::new();
        let mut pos = rng.gen_range(0..3);
        while blocks.len() < target {
            let len = rng.gen_range(1..=3);
            if pos + len > WIDTH {
                break;
            }
            let mut values: Vec<u8> = (0..len).map(|_| rng.gen_range(0..=k)).collect();
            values[0] = values[0].max(1);
            values[len - 1] = values[len - 1].max(1);
            let peak = rng.gen_range(0..len);
            values[peak] = k;
            let pairs: Vec<(usize, u8)> = values.iter().enumerate().map(|(i, &v)| (pos + i, v)).collect();
            blocks.push(Subblock::from_pairs(k, &pairs).unwrap());
            pos += len + rng.gen_range(0..3);
        }
        if !blocks.is_empty() {
            return FiniteBlockSeq::new(k, blocks).unwrap();
        }
    }
}

pub fn random_subblock<R: Rng>(rng: &mut R, k: u8) -> Subblock {
    let density = rng.gen_range(0.1..0.7);
    let values = (0..WIDTH).map(|_| if rng.gen_bool(density) { rng.gen_range(1..=k) } else { 0 }).collect();
    Subblock::new(k, values).unwrap()
}

/// Perturbs one position of `t` by ±1 within `0..=k`.
pub fn mutate<R: Rng>(rng: &mut R, t: &Subblock) -> Subblock {
    let mut values = t.values().to_vec();
    values.resize(WIDTH, 0);
    let i = rng.gen_range(0..WIDTH);
    values[i] = if values[i] == 0 || (values[i] < t.k() && rng.gen_bool(0.5)) { values[i] + 1 } else { values[i] - 1 };
    Subblock::new(t.k(), values).unwrap()
}

/// Groups `atoms` into consecutive runs and turns each run into one random
/// unstarred span element of that run.
fn coarsen<R: Rng>(rng: &mut R, atoms: &FiniteBlockSeq) -> FiniteBlockSeq {
    let k = atoms.k();
    let mut blocks = Vec::new();
    let mut start = 0;
    while start < atoms.len() {
        let end = (start + rng.gen_range(1..=2)).min(atoms.len());
        let mut terms = Vec::new();
        for index in start..end {
            if rng.gen_bool(0.8) {
                terms.push(Term { index, exponent: rng.gen_range(0..k) });
            }
        }
        if terms.is_empty() {
            terms.push(Term { index: start, exponent: 0 });
        }
        let zero = rng.gen_range(0..terms.len());
        terms[zero].exponent = 0;
        let combination = Combination::new(terms, false).unwrap();
        blocks.push(evaluate(atoms, &combination).unwrap());
        start = end;
    }
    FiniteBlockSeq::new(k, blocks).unwrap()
}

/// A pair of sequences built over a common fine sequence, so their spans
/// frequently meet in interesting ways.
pub fn related_pair<R: Rng>(rng: &mut R, k: u8) -> (FiniteBlockSeq, FiniteBlockSeq) {
    let atoms = random_seq(rng, k, 9);
    let p = coarsen(rng, &atoms);
    let q = if rng.gen_bool(0.2) { random_seq(rng, k, 5) } else { coarsen(rng, &atoms) };
    (p.prefix(6), q.prefix(6))
}
