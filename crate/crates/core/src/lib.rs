//! Individually fair online classification with a pairwise fairness auditor.
//!
//! A learner deploys mixtures over a finite hypothesis class, batches arrive,
//! and an auditor that knows an (unknown to the learner) similarity function
//! points at one pair of individuals treated too differently. The
//! [`learners`] module turns that feedback into an ordinary online batch
//! classification problem; [`benchmark`] and [`environments`] recompute and
//! check every regret and generalization inequality from a finished trace.

pub mod auditor;
pub mod benchmark;
pub mod environments;
pub mod error;
pub mod fixtures;
pub mod hypotheses;
pub mod learners;
pub mod loss;
pub mod lp;
pub mod types;

pub use auditor::{Auditor, SimilarityFn, TieBreak};
pub use benchmark::{verify_bounds, BoundCheck, HindsightSolution, RegretReport};
pub use environments::{
    average_policy, empirical_beta, generalization_report, EnvRound, Environment, GeneralizationReport,
    JointDistribution, ScriptedEnv, StochasticEnv,
};
pub use error::{Error, Result};
pub use hypotheses::{find_separator, make_table_class, make_threshold_class, SeparatorSet};
pub use learners::{run_fair_online, ConstantZero, ExpWeights, Ftpl, FtplParams, Learner, Perturbation};
pub use types::{
    AuditOutcome, Batch, Hypothesis, HypothesisClass, PenaltyTarget, Policy, RoundRecord, RunConfig, RunTrace, Universe,
};
