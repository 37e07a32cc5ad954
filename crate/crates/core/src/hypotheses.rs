//! Finite hypothesis-class builders and separator sets.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{Hypothesis, HypothesisClass, Universe};

/// Thresholds over the universe's 1-D order: `h_i(x) = 1` iff `rank(x) >= i`
/// for `i = 0..=n`. `h_n` is the constant-zero hypothesis, so the class has
/// `n + 1` members.
///
/// Instances are ranked by their first feature when the universe has
/// features (ties by index), otherwise by index.
pub fn make_threshold_class(universe: &Universe) -> HypothesisClass {
    let n = universe.size();
    let mut order: Vec<usize> = (0..n).collect();
    if let Some(features) = universe.features() {
        if features.first().is_some_and(|f| !f.is_empty()) {
            order.sort_by(|&a, &b| features[a][0].total_cmp(&features[b][0]).then(a.cmp(&b)));
        }
    }
    let mut rank = vec![0; n];
    for (r, &x) in order.iter().enumerate() {
        rank[x] = r;
    }
    let hypotheses =
        (0..=n).map(|i| Hypothesis::new((0..n).map(|x| u8::from(rank[x] >= i)).collect()).expect("binary")).collect();
    HypothesisClass::new(n, hypotheses).expect("threshold hypotheses are distinct and include zero")
}

/// Class given by an explicit prediction table, one row per hypothesis. The
/// constant-zero row is appended when absent; [`HypothesisClass::appended_zero`]
/// reports whether that happened.
pub fn make_table_class(rows: &[Vec<u8>]) -> Result<HypothesisClass> {
    let n = rows.first().map(Vec::len).ok_or_else(|| Error::InvalidClass("table is empty".into()))?;
    let mut hypotheses = rows
        .iter()
        .enumerate()
        .map(|(i, r)| {
            if r.len() != n {
                return Err(Error::InvalidClass(format!("row {i} has length {} (expected {n})", r.len())));
            }
            Hypothesis::new(r.clone())
        })
        .collect::<Result<Vec<_>>>()?;
    let appended = !hypotheses.iter().any(Hypothesis::is_constant_zero);
    if appended {
        hypotheses.push(Hypothesis::constant_zero(n));
    }
    HypothesisClass::unchecked_zero(n, hypotheses, appended)
}

/// Instances that jointly distinguish every pair of distinct hypotheses.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeparatorSet {
    instances: Vec<usize>,
}

impl SeparatorSet {
    pub fn new(mut instances: Vec<usize>) -> Self {
        instances.sort_unstable();
        instances.dedup();
        SeparatorSet { instances }
    }

    pub fn instances(&self) -> &[usize] {
        &self.instances
    }

    pub fn size(&self) -> usize {
        self.instances.len()
    }
}

/// Greedy set cover over hypothesis pairs: repeatedly take the instance that
/// splits the most still-unseparated pairs, lowest index on ties.
pub fn find_separator(class: &HypothesisClass) -> SeparatorSet {
    let hs = class.hypotheses();
    let mut pending: Vec<(usize, usize)> =
        (0..hs.len()).flat_map(|a| ((a + 1)..hs.len()).map(move |b| (a, b))).collect();
    let mut chosen = Vec::new();
    while !pending.is_empty() {
        let (best, count) = (0..class.universe_size())
            .map(|x| (x, pending.iter().filter(|&&(a, b)| hs[a].label(x) != hs[b].label(x)).count()))
            .fold((0, 0), |best, cand| if cand.1 > best.1 { cand } else { best });
        // Distinct hypotheses always differ somewhere.
        assert!(count > 0, "class contains identical hypotheses");
        chosen.push(best);
        pending.retain(|&(a, b)| hs[a].label(best) == hs[b].label(best));
    }
    SeparatorSet::new(chosen)
}

/// True iff every pair of distinct hypotheses differs at some element of `set`.
pub fn verify_separator(class: &HypothesisClass, set: &SeparatorSet) -> bool {
    let hs = class.hypotheses();
    (0..hs.len()).all(|a| {
        ((a + 1)..hs.len())
            .all(|b| set.instances().iter().any(|&x| x < hs[a].len() && hs[a].label(x) != hs[b].label(x)))
    })
}

/// A batch-shaped context `(x, v, ..., v)` of length `k'`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LiftedContext {
    pub instance: usize,
    pub dummy: usize,
    pub len: usize,
}

impl LiftedContext {
    pub fn instances(&self) -> impl Iterator<Item = usize> + '_ {
        std::iter::once(self.instance).chain(std::iter::repeat_n(self.dummy, self.len - 1))
    }

    /// `psi_h(xi) = (h(x), h(v), ..., h(v))`.
    pub fn apply(&self, h: &Hypothesis) -> Vec<u8> {
        self.instances().map(|x| h.label(x)).collect()
    }
}

/// Lifts a separator for `H` over instances into one for the induced batch
/// policies over contexts of length `len`.
pub fn lift_separator(set: &SeparatorSet, dummy: usize, len: usize) -> Vec<LiftedContext> {
    assert!(len >= 1);
    set.instances().iter().map(|&instance| LiftedContext { instance, dummy, len }).collect()
}

/// Direct check that the lifted contexts separate the batch policies `psi_h`.
pub fn verify_lifted_separator(class: &HypothesisClass, contexts: &[LiftedContext]) -> bool {
    let hs = class.hypotheses();
    (0..hs.len()).all(|a| ((a + 1)..hs.len()).all(|b| contexts.iter().any(|c| c.apply(&hs[a]) != c.apply(&hs[b]))))
}
