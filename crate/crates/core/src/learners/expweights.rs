use std::sync::Arc;

use crate::error::{Error, Result};
use crate::learners::reduction::InflatedBatch;
use crate::learners::Learner;
use crate::types::{HypothesisClass, Policy, RunConfig};

/// Exponential weights over a finite class, kept in log space.
///
/// Losses are divided by `loss_range` before the multiplicative step, so the
/// update is `w_h <- w_h * exp(-gamma * L(h) / M)`. With `M = C + k` the
/// realized Lagrangian regret is at most `M (ln|H| / gamma + gamma T / 2)`.
#[derive(Clone, Debug)]
pub struct ExpWeights {
    class: Arc<HypothesisClass>,
    log_weights: Vec<f64>,
    gamma: f64,
    loss_range: f64,
}

impl ExpWeights {
    pub fn new(class: Arc<HypothesisClass>, gamma: f64, loss_range: f64) -> Result<Self> {
        if !(gamma.is_finite() && gamma >= 0.0) {
            return Err(Error::config("gamma", "must be a nonnegative real"));
        }
        if !(loss_range.is_finite() && loss_range > 0.0) {
            return Err(Error::config("loss_range", "must be positive"));
        }
        let log_weights = vec![0.0; class.len()];
        Ok(ExpWeights { class, log_weights, gamma, loss_range })
    }

    /// Rate from the config (default `sqrt(ln|H| / T)`), range `C + k`.
    pub fn for_config(class: Arc<HypothesisClass>, config: &RunConfig) -> Result<Self> {
        let gamma = config.gamma_for(class.len());
        let range = config.penalty_f64() + config.batch_size as f64;
        ExpWeights::new(class, gamma, range)
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn loss_range(&self) -> f64 {
        self.loss_range
    }

    pub fn policy(&self) -> Policy {
        let max = self.log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let w: Vec<f64> = self.log_weights.iter().map(|l| (l - max).exp()).collect();
        Policy::from_unnormalized(w).expect("at least one weight is exp(0) = 1")
    }

    /// Multiplicative step on explicit per-hypothesis losses.
    pub fn update_with_losses(&mut self, losses: &[f64]) {
        assert_eq!(losses.len(), self.log_weights.len());
        let step = self.gamma / self.loss_range;
        for (lw, l) in self.log_weights.iter_mut().zip(losses) {
            *lw -= step * l;
        }
        let max = self.log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        for lw in &mut self.log_weights {
            *lw -= max;
        }
    }

    /// Per-hypothesis misclassification loss on an inflated batch.
    pub fn hypothesis_losses(&self, inflated: &InflatedBatch) -> Vec<f64> {
        self.class
            .hypotheses()
            .iter()
            .map(|h| inflated.xs().iter().zip(inflated.ys()).filter(|(&x, &y)| h.label(x) != y).count() as f64)
            .collect()
    }
}

/// Deterministic regret bound `M (ln|H| / gamma + gamma T / 2)` for losses
/// whose per-round spread across hypotheses is at most `2M`.
pub fn expweights_regret_bound(class_size: usize, rounds: usize, gamma: f64, loss_range: f64) -> f64 {
    if class_size <= 1 {
        return 0.0;
    }
    loss_range * ((class_size as f64).ln() / gamma + gamma * rounds as f64 / 2.0)
}

/// `2 (C + k) sqrt(ln|H| T)`, which dominates [`expweights_regret_bound`]
/// at the default rate.
pub fn expweights_headline_bound(class_size: usize, rounds: usize, penalty: u64, batch_size: usize) -> f64 {
    2.0 * (penalty as f64 + batch_size as f64) * ((class_size as f64).ln() * rounds as f64).sqrt()
}

impl Learner for ExpWeights {
    fn deploy(&mut self) -> Policy {
        self.policy()
    }

    fn observe(&mut self, inflated: &InflatedBatch) {
        let losses = self.hypothesis_losses(inflated);
        self.update_with_losses(&losses);
    }
}
