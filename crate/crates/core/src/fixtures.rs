//! Small reference instances used by tests, benches and the CLI.
//!
//! The three-point instance: `h1 = (1, 0, 0)`, `h2 = (1, 1, 0)` plus the
//! constant-zero hypothesis, with `d(x0, x1) = d(x1, x2) = 0` and
//! `d(x0, x2) = 1`. Alternating `h1` / `h2` makes the naive union bound on
//! the average policy's unfairness tight.

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::auditor::SimilarityFn;
use crate::hypotheses::make_table_class;
use crate::types::{Hypothesis, HypothesisClass, Policy, Universe};

pub fn three_point_universe() -> Universe {
    Universe::with_features(vec![vec![0.0], vec![1.0], vec![2.0]]).expect("valid features")
}

/// `{h1, h2, h0}` in that order.
pub fn three_point_class() -> HypothesisClass {
    make_table_class(&[vec![1, 0, 0], vec![1, 1, 0]]).expect("valid table")
}

pub fn three_point_similarity() -> SimilarityFn {
    SimilarityFn::from_table(vec![vec![0.0, 0.0, 1.0], vec![0.0, 0.0, 0.0], vec![1.0, 0.0, 0.0]]).expect("valid table")
}

/// `h1` on odd rounds and `h2` on even rounds (1-based), `rounds` policies.
pub fn alternating_policies(rounds: usize) -> Vec<Policy> {
    (1..=rounds).map(|t| Policy::point_mass(3, if t % 2 == 1 { 0 } else { 1 })).collect()
}

/// Random class of `min(size, 2^n)` distinct hypotheses over `n` instances,
/// always including constant zero (first).
pub fn random_class(n: usize, size: usize, seed: u64) -> HypothesisClass {
    let cap = if n >= 20 { usize::MAX } else { 1usize << n };
    let target = size.clamp(1, cap);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen: HashSet<Vec<u8>> = HashSet::new();
    let zero = vec![0u8; n];
    seen.insert(zero.clone());
    let mut rows = vec![zero];
    while rows.len() < target {
        let row: Vec<u8> = (0..n).map(|_| u8::from(rng.random_bool(0.5))).collect();
        if seen.insert(row.clone()) {
            rows.push(row);
        }
    }
    let hypotheses = rows.into_iter().map(|r| Hypothesis::new(r).expect("binary")).collect();
    HypothesisClass::new(n, hypotheses).expect("distinct rows with zero")
}

/// Random point in the simplex (normalized uniform draws).
pub fn random_policy<R: Rng>(len: usize, rng: &mut R) -> Policy {
    let w: Vec<f64> = (0..len).map(|_| rng.random::<f64>() + 1e-3).collect();
    Policy::from_unnormalized(w).expect("positive weights")
}
