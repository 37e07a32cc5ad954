use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hypotheses::{lift_separator, verify_separator, LiftedContext, SeparatorSet};
use crate::learners::reduction::InflatedBatch;
use crate::learners::Learner;
use crate::types::{HypothesisClass, Policy};

/// Noise added to each lifted-context coordinate.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Perturbation {
    /// Laplace with density `(omega / 2) exp(-omega |z|)`.
    #[default]
    Laplace,
    /// Uniform on `[-1/omega, 1/omega]`.
    Uniform,
    /// No noise: follow-the-leader.
    None,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FtplParams {
    pub omega: f64,
    pub perturbation: Perturbation,
    /// Deploy the empirical mixture of this many independent draws instead
    /// of a single hypothesis.
    pub mixture: Option<usize>,
}

impl FtplParams {
    pub fn laplace(omega: f64) -> Self {
        FtplParams { omega, perturbation: Perturbation::Laplace, mixture: None }
    }
}

/// Default rate minimizing `4 omega k' s S + (10 / omega) sqrt(s k') ln|H|`
/// where `S = T (k + C)^2` bounds the summed squared dual norms. Falls back
/// to 1 when the class is a singleton.
pub fn default_omega(separator_size: usize, batch_size: usize, penalty: u64, rounds: usize, class_size: usize) -> f64 {
    let s = separator_size.max(1) as f64;
    let k_inf = (batch_size as u64 + 2 * penalty) as f64;
    let ln_h = (class_size as f64).ln();
    if ln_h <= 0.0 {
        return 1.0;
    }
    let norm_sq = rounds as f64 * (batch_size as f64 + penalty as f64).powi(2);
    (10.0 * ln_h / (4.0 * (s * k_inf).sqrt() * norm_sq)).sqrt()
}

/// `4 omega k' s S + (10 / omega) sqrt(s k') ln|H|` for realized `S`.
pub fn ftpl_regret_bound(
    omega: f64,
    separator_size: usize,
    inflated_len: usize,
    sum_sq_dual_norms: f64,
    class_size: usize,
) -> f64 {
    let s = separator_size.max(1) as f64;
    let k_inf = inflated_len as f64;
    4.0 * omega * k_inf * s * sum_sq_dual_norms + 10.0 / omega * (s * k_inf).sqrt() * (class_size as f64).ln()
}

/// Dual norm of an inflated round's linear loss: the largest misclassification
/// loss any labeling can suffer, i.e. the number of zero labels.
pub fn dual_norm(inflated: &InflatedBatch) -> f64 {
    inflated.ys().iter().filter(|&&y| y == 0).count() as f64
}

/// Follow the perturbed leader in the small-separator setting.
///
/// The inflated loss of `h` is linear in its predictions: summed over the
/// inflated rounds it equals a constant plus `sum h(x') (1 - 2 y')`. Each
/// deployment perturbs that cumulative score with noise on the lifted
/// separator `(x, v, ..., v)` and takes the minimizer by enumeration, lowest
/// index on ties.
#[derive(Clone, Debug)]
pub struct Ftpl {
    class: Arc<HypothesisClass>,
    contexts: Vec<LiftedContext>,
    params: FtplParams,
    cumulative: Vec<f64>,
    rng: ChaCha8Rng,
}

impl Ftpl {
    pub fn new(
        class: Arc<HypothesisClass>,
        separator: &SeparatorSet,
        dummy: usize,
        inflated_len: usize,
        params: FtplParams,
        seed: u64,
    ) -> Result<Self> {
        if !(params.omega.is_finite() && params.omega > 0.0) {
            return Err(Error::config("omega", "must be a positive real"));
        }
        if params.mixture == Some(0) {
            return Err(Error::config("mixture", "must be at least 1"));
        }
        if dummy >= class.universe_size() {
            return Err(Error::config("dummy_instance", "outside the universe"));
        }
        if !verify_separator(&class, separator) {
            return Err(Error::Precondition("set does not separate the class".into()));
        }
        let contexts = lift_separator(separator, dummy, inflated_len.max(1));
        let cumulative = vec![0.0; class.len()];
        Ok(Ftpl { class, contexts, params, cumulative, rng: ChaCha8Rng::seed_from_u64(seed) })
    }

    pub fn params(&self) -> &FtplParams {
        &self.params
    }

    pub fn separator_size(&self) -> usize {
        self.contexts.len()
    }

    fn noise(&mut self) -> f64 {
        let omega = self.params.omega;
        match self.params.perturbation {
            Perturbation::Laplace => {
                let a: f64 = self.rng.sample(Exp1);
                let b: f64 = self.rng.sample(Exp1);
                (a - b) / omega
            }
            Perturbation::Uniform => self.rng.random_range(-1.0..=1.0) / omega,
            Perturbation::None => 0.0,
        }
    }

    /// One perturbed leader.
    pub fn draw(&mut self) -> usize {
        let mut weights = Vec::with_capacity(self.contexts.len());
        for i in 0..self.contexts.len() {
            let len = self.contexts[i].len;
            let first = self.noise();
            let rest: f64 = (1..len).map(|_| self.noise()).sum();
            weights.push((first, rest));
        }
        self.leader(&weights)
    }

    /// Minimizer of the cumulative score plus `<eps, psi_h(xi)>` for given
    /// per-context noise `(eps_0, sum of eps_j for j >= 1)`.
    pub fn leader(&self, noise: &[(f64, f64)]) -> usize {
        let mut best = 0;
        let mut best_score = f64::INFINITY;
        for (i, h) in self.class.hypotheses().iter().enumerate() {
            let mut score = self.cumulative[i];
            for (c, &(e0, rest)) in self.contexts.iter().zip(noise) {
                score += e0 * h.value(c.instance) + rest * h.value(c.dummy);
            }
            if score < best_score {
                best = i;
                best_score = score;
            }
        }
        best
    }

    pub fn cumulative_scores(&self) -> &[f64] {
        &self.cumulative
    }
}

impl Learner for Ftpl {
    fn deploy(&mut self) -> Policy {
        let n = self.class.len();
        match self.params.mixture {
            None => Policy::point_mass(n, self.draw()),
            Some(m) => {
                let mut counts = vec![0.0; n];
                for _ in 0..m {
                    counts[self.draw()] += 1.0;
                }
                Policy::from_unnormalized(counts).expect("m >= 1 draws")
            }
        }
    }

    fn observe(&mut self, inflated: &InflatedBatch) {
        for (i, h) in self.class.hypotheses().iter().enumerate() {
            let lin: f64 =
                inflated.xs().iter().zip(inflated.ys()).map(|(&x, &y)| h.value(x) * (1.0 - 2.0 * f64::from(y))).sum();
            self.cumulative[i] += lin;
        }
    }
}
