use crate::auditor::Auditor;
use crate::environments::Environment;
use crate::error::{Error, Result};
use crate::learners::reduction::reduction_inflate;
use crate::learners::Learner;
use crate::loss::{batch_err, lagrangian, unfair_loss};
use crate::types::{HypothesisClass, RoundRecord, RunConfig, RunTrace};

/// Runs `config.rounds` rounds of the fair batch protocol.
///
/// Each round the learner deploys a policy, the environment reveals a batch
/// (possibly after seeing the deployed predictions) and optionally its own
/// pair, the auditor reports a pair or null, and the learner observes the
/// inflated batch. The environment's pair defaults to the auditor's.
pub fn run_fair_online<L, E>(
    learner: &mut L,
    env: &mut E,
    auditor: &mut Auditor,
    class: &HypothesisClass,
    config: &RunConfig,
) -> Result<RunTrace>
where
    L: Learner + ?Sized,
    E: Environment + ?Sized,
{
    config.validate(class.universe_size())?;
    if (auditor.tolerance() - config.alpha_prime).abs() > 1e-12 {
        return Err(Error::Precondition(format!(
            "auditor tolerance {} differs from alpha_prime {}",
            auditor.tolerance(),
            config.alpha_prime
        )));
    }
    if auditor.similarity().size() != class.universe_size() {
        return Err(Error::InvalidSimilarity(format!(
            "similarity covers {} instances but the universe has {}",
            auditor.similarity().size(),
            class.universe_size()
        )));
    }
    let alpha = config.alpha();
    let penalty = config.penalty_f64();
    let similarity = auditor.similarity().clone();
    let mut records = Vec::with_capacity(config.rounds);
    for t in 1..=config.rounds {
        let policy = learner.deploy();
        if policy.len() != class.len() {
            return Err(Error::InvalidPolicy(format!(
                "learner deployed {} weights for a class of {}",
                policy.len(),
                class.len()
            )));
        }
        let preds = policy.predictions(class);
        let round = env.next_round(t, &preds)?;
        let batch = round.batch;
        if batch.k() != config.batch_size {
            return Err(Error::InvalidBatch(format!(
                "round {t}: batch of size {} (expected {})",
                batch.k(),
                config.batch_size
            )));
        }
        batch.check_universe(class.universe_size())?;
        let audit = auditor.audit(batch.xs(), &preds);
        let env_pair = round.pair.unwrap_or(audit);
        env_pair.validate(batch.k())?;
        let err = batch_err(&preds, &batch);
        let unfair = unfair_loss(&preds, &batch, env_pair, &similarity, config.alpha_prime);
        let lagr = lagrangian(&preds, &batch, audit, penalty, alpha);
        let inflated = reduction_inflate(&batch, audit, config.penalty, config.dummy_instance)?;
        learner.observe(&inflated);
        records.push(RoundRecord { t, policy, batch, audit, env_pair, err, unfair, lagrangian: lagr });
    }
    Ok(RunTrace { batch_size: config.batch_size, penalty, alpha, alpha_prime: config.alpha_prime, similarity, records })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::auditor::TieBreak;
    use crate::environments::{ScriptedEnv, StochasticEnv};
    use crate::fixtures;
    use crate::learners::{ConstantZero, ExpWeights};
    use crate::types::{AuditOutcome, Batch};

    fn setup(rounds: usize) -> (Arc<HypothesisClass>, Auditor, RunConfig) {
        let class = Arc::new(fixtures::three_point_class());
        let config = RunConfig::new(rounds, 2, 0.3, 0.2).with_seed(1);
        let auditor = Auditor::new(0.3, TieBreak::MaxViolation, fixtures::three_point_similarity()).unwrap();
        (class, auditor, config)
    }

    #[test]
    fn single_round() {
        let (class, mut auditor, config) = setup(1);
        let mut env = ScriptedEnv::new(vec![Batch::new(vec![0, 1], vec![1, 0]).unwrap()]);
        let mut learner = ExpWeights::for_config(class.clone(), &config).unwrap();
        let trace = run_fair_online(&mut learner, &mut env, &mut auditor, &class, &config).unwrap();
        assert_eq!(trace.len(), 1);
        let r = &trace.records[0];
        assert_eq!(r.t, 1);
        // Uniform over {h1, h2, h0} predicts (2/3, 1/3, 0); the gap 1/3 exceeds 0.3.
        assert_eq!(r.audit, AuditOutcome::Pair(0, 1));
        assert!(trace.check_consistency(&class).is_ok());
    }

    #[test]
    fn constant_zero_is_never_unfair() {
        let (class, mut auditor, config) = setup(300);
        let mut env = StochasticEnv::uniform_labels(&[0.9, 0.4, 0.1], 2, 4).unwrap();
        let mut learner = ConstantZero::new(&class).unwrap();
        let trace = run_fair_online(&mut learner, &mut env, &mut auditor, &class, &config).unwrap();
        assert_eq!(trace.cumulative_unfair(), 0);
        assert!(trace.records.iter().all(|r| r.audit.is_null()));
    }

    #[test]
    fn runs_are_deterministic() {
        let run = || {
            let (class, mut auditor, config) = setup(200);
            let mut env = StochasticEnv::uniform_labels(&[0.9, 0.4, 0.1], 2, 11).unwrap();
            let mut learner = ExpWeights::for_config(class.clone(), &config).unwrap();
            run_fair_online(&mut learner, &mut env, &mut auditor, &class, &config).unwrap()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn rejects_mismatched_inputs() {
        let (class, _, config) = setup(2);
        let mut wrong_tol = Auditor::new(0.5, TieBreak::MaxViolation, fixtures::three_point_similarity()).unwrap();
        let mut env = ScriptedEnv::new(vec![Batch::new(vec![0, 1], vec![1, 0]).unwrap(); 2]);
        let mut learner = ConstantZero::new(&class).unwrap();
        assert!(run_fair_online(&mut learner, &mut env, &mut wrong_tol, &class, &config).is_err());

        let (class, mut auditor, config) = setup(2);
        let mut env = ScriptedEnv::new(vec![Batch::new(vec![0, 1, 2], vec![1, 0, 0]).unwrap(); 2]);
        assert!(matches!(
            run_fair_online(&mut learner, &mut env, &mut auditor, &class, &config),
            Err(Error::InvalidBatch(_))
        ));

        let mut short = ScriptedEnv::new(vec![Batch::new(vec![0, 1], vec![1, 0]).unwrap()]);
        assert!(matches!(
            run_fair_online(&mut learner, &mut short, &mut auditor, &class, &config),
            Err(Error::EnvironmentExhausted(2))
        ));
    }
}
