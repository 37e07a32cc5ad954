//! Online learners for the inflated (plain batch) problem, the reduction
//! that feeds them, and the protocol driver.

pub mod expweights;
pub mod ftpl;
pub mod protocol;
pub mod reduction;

use crate::types::{HypothesisClass, Policy};
use reduction::InflatedBatch;

pub use expweights::{expweights_headline_bound, expweights_regret_bound, ExpWeights};
pub use ftpl::{default_omega, dual_norm, ftpl_regret_bound, Ftpl, FtplParams, Perturbation};
pub use protocol::run_fair_online;
pub use reduction::reduction_inflate;

/// A learner deploys a policy each round and then sees the inflated batch.
pub trait Learner {
    fn deploy(&mut self) -> Policy;
    fn observe(&mut self, inflated: &InflatedBatch);
}

/// Always deploys the constant-zero hypothesis. Never unfair, never learns.
#[derive(Clone, Debug)]
pub struct ConstantZero {
    len: usize,
    index: usize,
}

impl ConstantZero {
    pub fn new(class: &HypothesisClass) -> Option<Self> {
        class.constant_zero_index().map(|index| ConstantZero { len: class.len(), index })
    }
}

impl Learner for ConstantZero {
    fn deploy(&mut self) -> Policy {
        Policy::point_mass(self.len, self.index)
    }

    fn observe(&mut self, _: &InflatedBatch) {}
}

impl<L: Learner + ?Sized> Learner for Box<L> {
    fn deploy(&mut self) -> Policy {
        (**self).deploy()
    }

    fn observe(&mut self, inflated: &InflatedBatch) {
        (**self).observe(inflated)
    }
}
