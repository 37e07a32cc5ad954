//! Misclassification, fairness-violation and Lagrangian losses.
//!
//! Losses take a policy's tabulated soft predictions (see
//! [`Policy::predictions`]) so that a round can be scored without
//! recomputing the mixture for every instance.

use crate::auditor::SimilarityFn;
use crate::error::{Error, Result};
use crate::types::{check_index, AuditOutcome, Batch, HypothesisClass, Policy};

/// Soft prediction `pi(x) = sum_h w_h h(x)`.
pub fn predict(policy: &Policy, class: &HypothesisClass, x: usize) -> Result<f64> {
    check_index(x, class.universe_size())?;
    if policy.len() != class.len() {
        return Err(Error::InvalidPolicy(format!(
            "policy has {} weights but class has {} hypotheses",
            policy.len(),
            class.len()
        )));
    }
    let p: f64 = policy.weights().iter().zip(class.hypotheses()).map(|(w, h)| w * h.value(x)).sum();
    Ok(p.clamp(0.0, 1.0))
}

/// Expected 0/1 loss of a soft prediction: `(1-p)y + p(1-y)`.
pub fn loss(p: f64, y: u8) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::PredictionOutOfRange(p));
    }
    if y > 1 {
        return Err(Error::InvalidLabel(y));
    }
    Ok(pointwise(p, y))
}

#[inline]
pub(crate) fn pointwise(p: f64, y: u8) -> f64 {
    if y == 1 {
        1.0 - p
    } else {
        p
    }
}

/// Batch misclassification loss `Err`, in `[0, k]`.
pub fn batch_err(preds: &[f64], batch: &Batch) -> f64 {
    batch.xs().iter().zip(batch.ys()).map(|(&x, &y)| pointwise(preds[x], y)).sum()
}

/// `max(0, |pi(x) - pi(x')| - d(x, x') - a)`.
pub fn violation(preds: &[f64], x: usize, x_prime: usize, d: &SimilarityFn, a: f64) -> f64 {
    ((preds[x] - preds[x_prime]).abs() - d.get(x, x_prime) - a).max(0.0)
}

/// Signed fairness margin of an ordered pair: `pi(x) - pi(x') - d(x,x') - a`.
#[inline]
pub fn margin(preds: &[f64], x: usize, x_prime: usize, d: &SimilarityFn, a: f64) -> f64 {
    preds[x] - preds[x_prime] - d.get(x, x_prime) - a
}

/// Fairness loss of a round: 1 iff `rho` is a pair on which the policy has a
/// strictly positive `a`-violation in the reported orientation.
pub fn unfair_loss(preds: &[f64], batch: &Batch, rho: AuditOutcome, d: &SimilarityFn, a: f64) -> u8 {
    match rho {
        AuditOutcome::Null => 0,
        AuditOutcome::Pair(r1, r2) => {
            let (x1, x2) = (batch.xs()[r1], batch.xs()[r2]);
            u8::from(margin(preds, x1, x2, d, a) > 0.0)
        }
    }
}

/// `(C, a)`-Lagrangian loss. The penalty term is signed and unclipped.
pub fn lagrangian(preds: &[f64], batch: &Batch, rho: AuditOutcome, penalty: f64, a: f64) -> f64 {
    let err = batch_err(preds, batch);
    match rho {
        AuditOutcome::Null => err,
        AuditOutcome::Pair(r1, r2) => {
            let (x1, x2) = (batch.xs()[r1], batch.xs()[r2]);
            err + penalty * (preds[x1] - preds[x2] - a)
        }
    }
}

/// True iff some ordered pair of the batch has a strictly positive
/// `a`-violation under `preds`.
pub fn batch_has_violation(preds: &[f64], batch: &Batch, d: &SimilarityFn, a: f64) -> bool {
    let xs = batch.xs();
    xs.iter()
        .enumerate()
        .any(|(i, &x)| xs.iter().enumerate().any(|(j, &x2)| i != j && margin(preds, x, x2, d, a) > 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::types::Hypothesis;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn h1_h2() -> HypothesisClass {
        HypothesisClass::unchecked_zero(
            3,
            vec![Hypothesis::new(vec![1, 0, 0]).unwrap(), Hypothesis::new(vec![1, 1, 0]).unwrap()],
            false,
        )
        .unwrap()
    }

    #[test]
    fn predict_examples() {
        let class = h1_h2();
        let uniform = Policy::uniform(2);
        assert_eq!(predict(&uniform, &class, 1).unwrap(), 0.5);
        let skew = Policy::new(vec![0.9, 0.1]).unwrap();
        assert_abs_diff_eq!(predict(&skew, &class, 0).unwrap(), 1.0, epsilon = 1e-15);

        let zero = HypothesisClass::new(3, vec![Hypothesis::constant_zero(3)]).unwrap();
        assert_eq!(predict(&Policy::uniform(1), &zero, 2).unwrap(), 0.0);
        assert!(matches!(predict(&uniform, &class, 3), Err(Error::IndexOutOfRange { index: 3, size: 3 })));
    }

    #[test]
    fn loss_examples() {
        assert_eq!(loss(0.5, 1).unwrap(), 0.5);
        assert_eq!(loss(0.0, 0).unwrap(), 0.0);
        assert_eq!(loss(0.3, 0).unwrap(), 0.3);
        assert!(loss(1.2, 0).is_err());
        assert!(loss(-0.1, 1).is_err());
    }

    #[test]
    fn batch_err_examples() {
        let zeros = vec![0.0; 4];
        let b = Batch::new(vec![0, 1, 2, 3], vec![0; 4]).unwrap();
        assert_eq!(batch_err(&zeros, &b), 0.0);
        let b = Batch::new(vec![0, 1, 2, 3], vec![1; 4]).unwrap();
        assert_eq!(batch_err(&zeros, &b), 4.0);

        let preds = Policy::uniform(2).predictions(&h1_h2());
        let b = Batch::new(vec![0, 1, 2], vec![1, 0, 0]).unwrap();
        assert_abs_diff_eq!(batch_err(&preds, &b), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn violation_examples() {
        let d = fixtures::three_point_similarity();
        let avg = [1.0, 0.5, 0.0];
        assert_abs_diff_eq!(violation(&avg, 0, 1, &d, 0.1), 0.4, epsilon = 1e-15);
        assert_eq!(violation(&avg, 0, 2, &d, 0.1), 0.0);
        assert_eq!(violation(&[0.3, 0.3, 0.3], 0, 2, &d, 0.05), 0.0);
        assert_eq!(violation(&avg, 1, 1, &d, 0.0), 0.0);
    }

    #[test]
    fn unfair_loss_examples() {
        let d = fixtures::three_point_similarity();
        let avg = [1.0, 0.5, 0.0];
        let b = Batch::new(vec![0, 1, 2], vec![1, 0, 0]).unwrap();
        assert_eq!(unfair_loss(&avg, &b, AuditOutcome::Null, &d, 0.1), 0);
        assert_eq!(unfair_loss(&avg, &b, AuditOutcome::Pair(0, 1), &d, 0.1), 1);
        assert_eq!(unfair_loss(&avg, &b, AuditOutcome::Pair(0, 1), &d, 0.6), 0);
    }

    #[test]
    fn lagrangian_examples() {
        let b = Batch::new(vec![0, 1], vec![0, 0]).unwrap();
        let preds = [0.9, 0.1];
        assert_abs_diff_eq!(lagrangian(&preds, &b, AuditOutcome::Null, 5.0, 0.1), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(lagrangian(&preds, &b, AuditOutcome::Pair(0, 1), 5.0, 0.1), 4.5, epsilon = 1e-12);
        let zeros = [0.0, 0.0];
        assert_abs_diff_eq!(lagrangian(&zeros, &b, AuditOutcome::Pair(0, 1), 5.0, 0.1), -0.5, epsilon = 1e-12);
    }

    proptest! {
        #[test]
        fn loss_is_absolute_difference(p in 0.0f64..=1.0, y in 0u8..=1) {
            prop_assert_eq!(loss(p, y).unwrap(), (p - f64::from(y)).abs());
        }

        #[test]
        fn violation_is_symmetric(
            preds in prop::collection::vec(0.0f64..=1.0, 4),
            seed in any::<u64>(),
            a in 0.0f64..0.5,
            x in 0usize..4,
            x2 in 0usize..4,
        ) {
            let d = SimilarityFn::random_nonmetric(4, seed, 0.7);
            prop_assert_eq!(violation(&preds, x, x2, &d, a), violation(&preds, x2, x, &d, a));
            prop_assert!(violation(&preds, x, x2, &d, a) >= 0.0);
        }

        #[test]
        fn lagrangian_is_linear_in_policy(
            w1 in prop::collection::vec(0.01f64..1.0, 5),
            w2 in prop::collection::vec(0.01f64..1.0, 5),
            lambda in 0.0f64..=1.0,
            ys in prop::collection::vec(0u8..=1, 3),
            penalty in 1.0f64..40.0,
            a in 0.0f64..0.5,
            flagged in any::<bool>(),
        ) {
            let class = fixtures::random_class(6, 5, 99);
            let p1 = Policy::from_unnormalized(w1).unwrap();
            let p2 = Policy::from_unnormalized(w2).unwrap();
            let mix = Policy::mixture(&[p1.clone(), p2.clone()], &[lambda, 1.0 - lambda]).unwrap();
            let batch = Batch::new(vec![0, 3, 5], ys).unwrap();
            let rho = if flagged { AuditOutcome::Pair(2, 0) } else { AuditOutcome::Null };
            let l = |p: &Policy| lagrangian(&p.predictions(&class), &batch, rho, penalty, a);
            let lhs = l(&mix);
            let rhs = lambda * l(&p1) + (1.0 - lambda) * l(&p2);
            prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + penalty));
        }

        #[test]
        fn lagrangian_range(
            w in prop::collection::vec(0.01f64..1.0, 5),
            ys in prop::collection::vec(0u8..=1, 3),
            penalty in 1.0f64..40.0,
            a in 0.0f64..0.5,
        ) {
            let class = fixtures::random_class(6, 5, 7);
            let preds = Policy::from_unnormalized(w).unwrap().predictions(&class);
            let batch = Batch::new(vec![1, 4, 2], ys).unwrap();
            let l = lagrangian(&preds, &batch, AuditOutcome::Pair(0, 1), penalty, a);
            prop_assert!(l >= -penalty * (1.0 + a) - 1e-12);
            prop_assert!(l <= 3.0 + penalty + 1e-12);
            let e = batch_err(&preds, &batch);
            prop_assert!((0.0..=3.0).contains(&e));
        }
    }
}
