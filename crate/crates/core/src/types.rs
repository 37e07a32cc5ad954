//! Domain types shared by every part of the crate.
//!
//! Everything is tabulated over a finite universe of instances `0..n`: a
//! hypothesis is a binary vector of length `n`, a policy is a probability
//! vector over a hypothesis class, and a policy's soft predictions are a real
//! vector of length `n`.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::auditor::SimilarityFn;
use crate::error::{Error, Result};

/// Tolerance on `sum(weights) == 1` for a valid [`Policy`].
pub const SIMPLEX_TOLERANCE: f64 = 1e-12;

/// Finite instance space. Features are optional and only used to build
/// similarity tables or order instances for threshold classes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Universe {
    size: usize,
    features: Option<Vec<Vec<f64>>>,
}

impl Universe {
    pub fn new(size: usize) -> Result<Self> {
        if size == 0 {
            return Err(Error::config("universe.size", "must be at least 1"));
        }
        Ok(Universe { size, features: None })
    }

    pub fn with_features(features: Vec<Vec<f64>>) -> Result<Self> {
        if features.is_empty() {
            return Err(Error::config("universe.features", "must be nonempty"));
        }
        let dim = features[0].len();
        if features.iter().any(|f| f.len() != dim) {
            return Err(Error::config("universe.features", "rows have differing dimension"));
        }
        if features.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::config("universe.features", "non-finite feature value"));
        }
        Ok(Universe { size: features.len(), features: Some(features) })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn features(&self) -> Option<&[Vec<f64>]> {
        self.features.as_deref()
    }

    pub fn check_index(&self, x: usize) -> Result<()> {
        check_index(x, self.size)
    }
}

pub(crate) fn check_index(x: usize, size: usize) -> Result<()> {
    if x < size {
        Ok(())
    } else {
        Err(Error::IndexOutOfRange { index: x, size })
    }
}

/// A deterministic binary classifier, stored as its prediction table.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Hypothesis(Vec<u8>);

impl Hypothesis {
    pub fn new(predictions: Vec<u8>) -> Result<Self> {
        if let Some(&bad) = predictions.iter().find(|&&p| p > 1) {
            return Err(Error::InvalidLabel(bad));
        }
        Ok(Hypothesis(predictions))
    }

    pub fn constant_zero(n: usize) -> Self {
        Hypothesis(vec![0; n])
    }

    #[inline]
    pub fn label(&self, x: usize) -> u8 {
        self.0[x]
    }

    #[inline]
    pub fn value(&self, x: usize) -> f64 {
        f64::from(self.0[x])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_constant_zero(&self) -> bool {
        self.0.iter().all(|&p| p == 0)
    }

    pub fn predictions(&self) -> &[u8] {
        &self.0
    }
}

/// An ordered, duplicate-free list of hypotheses over a universe of size `n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HypothesisClass {
    universe_size: usize,
    hypotheses: Vec<Hypothesis>,
    appended_zero: bool,
}

impl HypothesisClass {
    /// Builds a class that must already contain the constant-zero hypothesis.
    pub fn new(universe_size: usize, hypotheses: Vec<Hypothesis>) -> Result<Self> {
        let class = Self::unchecked_zero(universe_size, hypotheses, false)?;
        if !class.contains_constant_zero() {
            return Err(Error::MissingConstantZero);
        }
        Ok(class)
    }

    pub(crate) fn unchecked_zero(
        universe_size: usize,
        hypotheses: Vec<Hypothesis>,
        appended_zero: bool,
    ) -> Result<Self> {
        if universe_size == 0 {
            return Err(Error::InvalidClass("universe size must be positive".into()));
        }
        if hypotheses.is_empty() {
            return Err(Error::InvalidClass("class must be nonempty".into()));
        }
        let mut seen: HashMap<&Hypothesis, usize> = HashMap::new();
        for (i, h) in hypotheses.iter().enumerate() {
            if h.len() != universe_size {
                return Err(Error::InvalidClass(format!(
                    "hypothesis {i} has length {} but universe has {universe_size} instances",
                    h.len()
                )));
            }
            if let Some(&original) = seen.get(h) {
                return Err(Error::DuplicateHypothesis { original, duplicate: i });
            }
            seen.insert(h, i);
        }
        Ok(HypothesisClass { universe_size, hypotheses, appended_zero })
    }

    pub fn universe_size(&self) -> usize {
        self.universe_size
    }

    pub fn len(&self) -> usize {
        self.hypotheses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hypotheses.is_empty()
    }

    pub fn hypotheses(&self) -> &[Hypothesis] {
        &self.hypotheses
    }

    pub fn get(&self, i: usize) -> &Hypothesis {
        &self.hypotheses[i]
    }

    pub fn contains_constant_zero(&self) -> bool {
        self.hypotheses.iter().any(Hypothesis::is_constant_zero)
    }

    /// Index of the first constant-zero hypothesis.
    pub fn constant_zero_index(&self) -> Option<usize> {
        self.hypotheses.iter().position(Hypothesis::is_constant_zero)
    }

    /// True when the constant-zero hypothesis was added by a constructor
    /// rather than supplied by the caller.
    pub fn appended_zero(&self) -> bool {
        self.appended_zero
    }
}

/// A point in the simplex over a hypothesis class.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Policy {
    weights: Vec<f64>,
}

impl Policy {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidPolicy("empty weight vector".into()));
        }
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
            return Err(Error::InvalidPolicy(format!("weight {w} is not a nonnegative real")));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > SIMPLEX_TOLERANCE {
            return Err(Error::InvalidPolicy(format!("weights sum to {total}, not 1")));
        }
        Ok(Policy { weights })
    }

    /// Rescales nonnegative weights onto the simplex.
    pub fn from_unnormalized(weights: Vec<f64>) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !(total.is_finite() && total > 0.0) || weights.iter().any(|w| *w < 0.0) {
            return Err(Error::InvalidPolicy(format!("cannot normalize weights with total {total}")));
        }
        Policy::new(weights.into_iter().map(|w| w / total).collect())
    }

    pub fn uniform(len: usize) -> Self {
        Policy { weights: vec![1.0 / len as f64; len] }
    }

    pub fn point_mass(len: usize, index: usize) -> Self {
        let mut weights = vec![0.0; len];
        weights[index] = 1.0;
        Policy { weights }
    }

    /// Convex combination `sum_i coef_i * policy_i`; coefficients must lie in
    /// the simplex.
    pub fn mixture(policies: &[Policy], coefficients: &[f64]) -> Result<Self> {
        if policies.is_empty() || policies.len() != coefficients.len() {
            return Err(Error::InvalidPolicy("mixture needs one coefficient per policy".into()));
        }
        let len = policies[0].len();
        let mut weights = vec![0.0; len];
        for (p, &c) in policies.iter().zip(coefficients) {
            if p.len() != len {
                return Err(Error::InvalidPolicy("mixture of policies over different classes".into()));
            }
            for (w, pw) in weights.iter_mut().zip(&p.weights) {
                *w += c * pw;
            }
        }
        Policy::new(weights)
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Soft predictions `pi(x) = sum_h w_h h(x)` for every instance.
    pub fn predictions(&self, class: &HypothesisClass) -> Vec<f64> {
        assert_eq!(self.len(), class.len(), "policy and class sizes differ");
        let mut out = vec![0.0; class.universe_size()];
        for (w, h) in self.weights.iter().zip(class.hypotheses()) {
            if *w == 0.0 {
                continue;
            }
            for (o, &p) in out.iter_mut().zip(h.predictions()) {
                if p == 1 {
                    *o += w;
                }
            }
        }
        // Guard against 1 + 1e-16 from summation.
        for o in &mut out {
            *o = o.clamp(0.0, 1.0);
        }
        out
    }
}

/// One round's arrivals: `k >= 2` instances with binary labels.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Batch {
    xs: Vec<usize>,
    ys: Vec<u8>,
}

impl Batch {
    pub fn new(xs: Vec<usize>, ys: Vec<u8>) -> Result<Self> {
        if xs.len() != ys.len() {
            return Err(Error::InvalidBatch(format!("{} instances but {} labels", xs.len(), ys.len())));
        }
        if xs.len() < 2 {
            return Err(Error::InvalidBatch("batch needs at least two instances".into()));
        }
        if let Some(&y) = ys.iter().find(|&&y| y > 1) {
            return Err(Error::InvalidLabel(y));
        }
        Ok(Batch { xs, ys })
    }

    pub fn xs(&self) -> &[usize] {
        &self.xs
    }

    pub fn ys(&self) -> &[u8] {
        &self.ys
    }

    pub fn k(&self) -> usize {
        self.xs.len()
    }

    pub fn check_universe(&self, size: usize) -> Result<()> {
        self.xs.iter().try_for_each(|&x| check_index(x, size))
    }
}

/// The auditor's (or environment's) report for one round: nothing, or an
/// ordered pair of batch positions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
pub enum AuditOutcome {
    #[default]
    Null,
    Pair(usize, usize),
}

impl AuditOutcome {
    pub fn pair(first: usize, second: usize, k: usize) -> Result<Self> {
        let out = AuditOutcome::Pair(first, second);
        out.validate(k)?;
        Ok(out)
    }

    pub fn validate(&self, k: usize) -> Result<()> {
        match *self {
            AuditOutcome::Null => Ok(()),
            AuditOutcome::Pair(a, b) if a == b => {
                Err(Error::InvalidAudit(format!("pair ({a}, {b}) repeats a position")))
            }
            AuditOutcome::Pair(a, b) if a >= k || b >= k => {
                Err(Error::InvalidAudit(format!("pair ({a}, {b}) outside batch of size {k}")))
            }
            AuditOutcome::Pair(..) => Ok(()),
        }
    }

    pub fn is_null(&self) -> bool {
        matches!(self, AuditOutcome::Null)
    }

    pub fn as_pair(&self) -> Option<(usize, usize)> {
        match *self {
            AuditOutcome::Null => None,
            AuditOutcome::Pair(a, b) => Some((a, b)),
        }
    }
}

/// One step of the fair batch protocol.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    /// 1-based round index.
    pub t: usize,
    pub policy: Policy,
    pub batch: Batch,
    /// Pair reported by the auditor; charged in the Lagrangian.
    pub audit: AuditOutcome,
    /// Pair chosen by the environment; charged in the fairness loss.
    pub env_pair: AuditOutcome,
    pub err: f64,
    pub unfair: u8,
    pub lagrangian: f64,
}

/// The full record of a run together with the parameters needed to re-derive
/// every loss in it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub batch_size: usize,
    pub penalty: f64,
    pub alpha: f64,
    pub alpha_prime: f64,
    pub similarity: SimilarityFn,
    pub records: Vec<RoundRecord>,
}

impl RunTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn epsilon(&self) -> f64 {
        self.alpha_prime - self.alpha
    }

    pub fn batches(&self) -> impl Iterator<Item = &Batch> {
        self.records.iter().map(|r| &r.batch)
    }

    pub fn cumulative_unfair(&self) -> u64 {
        self.records.iter().map(|r| u64::from(r.unfair)).sum()
    }

    /// Re-derives `err`, `unfair` and `lagrangian` for every record and
    /// returns the first round whose stored values disagree.
    pub fn check_consistency(&self, class: &HypothesisClass) -> std::result::Result<(), String> {
        use crate::loss;
        for r in &self.records {
            let preds = r.policy.predictions(class);
            let err = loss::batch_err(&preds, &r.batch);
            let unfair = loss::unfair_loss(&preds, &r.batch, r.env_pair, &self.similarity, self.alpha_prime);
            let lagr = loss::lagrangian(&preds, &r.batch, r.audit, self.penalty, self.alpha);
            if (err - r.err).abs() > 1e-9 {
                return Err(format!("round {}: err recorded {} but recomputed {err}", r.t, r.err));
            }
            if unfair != r.unfair {
                return Err(format!("round {}: unfair recorded {} but recomputed {unfair}", r.t, r.unfair));
            }
            if (lagr - r.lagrangian).abs() > 1e-9 {
                return Err(format!("round {}: lagrangian recorded {} but recomputed {lagr}", r.t, r.lagrangian));
            }
        }
        Ok(())
    }
}

/// Which guarantee the penalty `C` is sized for.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PenaltyTarget {
    /// `C >= 1/eps`: enough for the misclassification guarantee.
    Misclassification,
    /// `C >= (k+1)/eps`: needed for the fairness-loss guarantee.
    #[default]
    Fairness,
}

impl PenaltyTarget {
    /// Smallest integer penalty satisfying the target for batch size `k`.
    pub fn min_penalty(self, k: usize, epsilon: f64) -> u64 {
        let numerator = match self {
            PenaltyTarget::Misclassification => 1.0,
            PenaltyTarget::Fairness => (k + 1) as f64,
        };
        // (k+1)/eps can land one ulp above an integer, e.g. 3/0.1.
        (numerator / epsilon - 1e-9).ceil().max(1.0) as u64
    }
}

/// Parameters of a single run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub rounds: usize,
    pub batch_size: usize,
    /// Auditor tolerance `alpha' = alpha + eps`.
    pub alpha_prime: f64,
    pub epsilon: f64,
    /// Integer Lagrangian penalty `C`.
    pub penalty: u64,
    pub penalty_target: PenaltyTarget,
    /// Exponential-weights rate; `None` means `sqrt(ln|H| / T)`.
    pub gamma: Option<f64>,
    /// FTPL rate; `None` means the closed-form default.
    pub omega: Option<f64>,
    pub delta: f64,
    /// Covering parameter; `None` means `ceil(T^{3/4})`.
    pub covering_q: Option<usize>,
    /// Dummy instance used to pad inflated batches on clean rounds.
    pub dummy_instance: usize,
    pub seed: u64,
}

impl RunConfig {
    /// Config with the default penalty for the fairness guarantee.
    pub fn new(rounds: usize, batch_size: usize, alpha_prime: f64, epsilon: f64) -> Self {
        RunConfig {
            rounds,
            batch_size,
            alpha_prime,
            epsilon,
            penalty: PenaltyTarget::Fairness.min_penalty(batch_size, epsilon),
            penalty_target: PenaltyTarget::Fairness,
            gamma: None,
            omega: None,
            delta: 0.05,
            covering_q: None,
            dummy_instance: 0,
            seed: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// `alpha = alpha' - eps`, the fairness level of the benchmark set.
    pub fn alpha(&self) -> f64 {
        self.alpha_prime - self.epsilon
    }

    pub fn penalty_f64(&self) -> f64 {
        self.penalty as f64
    }

    /// Length of an inflated batch, `k + 2C`.
    pub fn inflated_len(&self) -> usize {
        self.batch_size + 2 * self.penalty as usize
    }

    pub fn gamma_for(&self, class_size: usize) -> f64 {
        self.gamma.unwrap_or_else(|| default_gamma(class_size, self.rounds))
    }

    pub fn covering_q(&self) -> usize {
        self.covering_q.unwrap_or_else(|| default_covering_q(self.rounds))
    }

    pub fn validate(&self, universe_size: usize) -> Result<()> {
        if self.rounds == 0 {
            return Err(Error::config("rounds", "must be at least 1"));
        }
        if self.batch_size < 2 {
            return Err(Error::config("batch_size", "must be at least 2"));
        }
        if !(self.alpha_prime.is_finite() && self.alpha_prime > 0.0) {
            return Err(Error::config("alpha_prime", "must be a positive real"));
        }
        if !(self.epsilon > 0.0 && self.epsilon < self.alpha_prime) {
            return Err(Error::config("epsilon", format!("must lie in (0, alpha_prime = {})", self.alpha_prime)));
        }
        let min = self.penalty_target.min_penalty(self.batch_size, self.epsilon);
        if self.penalty < min {
            return Err(Error::config(
                "penalty",
                format!("{} is below the required minimum {min} for {:?}", self.penalty, self.penalty_target),
            ));
        }
        if let Some(g) = self.gamma {
            if !(g.is_finite() && g > 0.0) {
                return Err(Error::config("gamma", "must be a positive real"));
            }
        }
        if let Some(w) = self.omega {
            if !(w.is_finite() && w > 0.0) {
                return Err(Error::config("omega", "must be a positive real"));
            }
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::config("delta", "must lie in (0, 1)"));
        }
        let q = self.covering_q();
        if q == 0 || q > self.rounds {
            return Err(Error::config("covering_q", format!("must lie in [1, T = {}]", self.rounds)));
        }
        if self.dummy_instance >= universe_size {
            return Err(Error::config(
                "dummy_instance",
                format!("{} is not an instance of a universe of size {universe_size}", self.dummy_instance),
            ));
        }
        Ok(())
    }
}

/// `sqrt(ln|H| / T)`.
pub fn default_gamma(class_size: usize, rounds: usize) -> f64 {
    ((class_size as f64).ln() / rounds as f64).sqrt()
}

/// `ceil(T^{3/4})`, clamped to `[1, T]`.
pub fn default_covering_q(rounds: usize) -> usize {
    let q = (rounds as f64).powf(0.75).ceil() as usize;
    q.clamp(1, rounds.max(1))
}
