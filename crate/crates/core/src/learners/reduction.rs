//! Batch inflation: turns a fair-batch round into a plain batch round whose
//! misclassification-loss differences equal Lagrangian-loss differences.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::loss::pointwise;
use crate::types::{AuditOutcome, Batch};

/// A round's batch padded to length `k + 2C`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InflatedBatch {
    xs: Vec<usize>,
    ys: Vec<u8>,
    original_len: usize,
}

impl InflatedBatch {
    pub fn xs(&self) -> &[usize] {
        &self.xs
    }

    pub fn ys(&self) -> &[u8] {
        &self.ys
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    pub fn original_len(&self) -> usize {
        self.original_len
    }

    /// Misclassification loss of soft predictions on the inflated batch.
    pub fn err(&self, preds: &[f64]) -> f64 {
        self.xs.iter().zip(&self.ys).map(|(&x, &y)| pointwise(preds[x], y)).sum()
    }
}

/// Appends `C` copies of `(x_rho1, 0)` then `C` copies of `(x_rho2, 1)`; on
/// a null audit the copies use the dummy instance `v` instead.
pub fn reduction_inflate(batch: &Batch, rho: AuditOutcome, penalty: u64, dummy: usize) -> Result<InflatedBatch> {
    if penalty == 0 {
        return Err(Error::config("penalty", "must be a positive integer"));
    }
    rho.validate(batch.k())?;
    let c = penalty as usize;
    let (first, second) = match rho {
        AuditOutcome::Pair(r1, r2) => (batch.xs()[r1], batch.xs()[r2]),
        AuditOutcome::Null => (dummy, dummy),
    };
    let mut xs = Vec::with_capacity(batch.k() + 2 * c);
    let mut ys = Vec::with_capacity(batch.k() + 2 * c);
    xs.extend_from_slice(batch.xs());
    ys.extend_from_slice(batch.ys());
    xs.extend(std::iter::repeat_n(first, c));
    ys.extend(std::iter::repeat_n(0, c));
    xs.extend(std::iter::repeat_n(second, c));
    ys.extend(std::iter::repeat_n(1, c));
    Ok(InflatedBatch { xs, ys, original_len: batch.k() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::loss::{batch_err, lagrangian};
    use crate::types::Policy;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn null_round_uses_dummy() {
        let b = Batch::new(vec![1, 2], vec![1, 0]).unwrap();
        let inf = reduction_inflate(&b, AuditOutcome::Null, 3, 0).unwrap();
        assert_eq!(inf.len(), 8);
        assert_eq!(&inf.xs()[..2], &[1, 2]);
        assert_eq!(&inf.xs()[2..], &[0; 6]);
        assert_eq!(&inf.ys()[2..5], &[0; 3]);
        assert_eq!(&inf.ys()[5..], &[1; 3]);
    }

    #[test]
    fn flagged_round_copies_pair() {
        let b = Batch::new(vec![4, 7], vec![1, 0]).unwrap();
        let inf = reduction_inflate(&b, AuditOutcome::Pair(0, 1), 3, 0).unwrap();
        assert_eq!(&inf.xs()[2..5], &[4; 3]);
        assert_eq!(&inf.ys()[2..5], &[0; 3]);
        assert_eq!(&inf.xs()[5..], &[7; 3]);
        assert_eq!(&inf.ys()[5..], &[1; 3]);
    }

    #[test]
    fn minimal_inflation_length() {
        let b = Batch::new(vec![0, 1], vec![0, 0]).unwrap();
        assert_eq!(reduction_inflate(&b, AuditOutcome::Null, 1, 0).unwrap().len(), 4);
        assert!(reduction_inflate(&b, AuditOutcome::Null, 0, 0).is_err());
        assert!(reduction_inflate(&b, AuditOutcome::Pair(0, 2), 1, 0).is_err());
    }

    #[test]
    fn dummy_padding_costs_every_hypothesis_exactly_c() {
        let class = fixtures::random_class(8, 20, 3);
        let b = Batch::new(vec![0, 5, 6], vec![1, 1, 0]).unwrap();
        let inf = reduction_inflate(&b, AuditOutcome::Null, 9, 2).unwrap();
        for h in 0..class.len() {
            let preds = Policy::point_mass(class.len(), h).predictions(&class);
            assert_eq!(inf.err(&preds) - batch_err(&preds, &b), 9.0);
        }
    }

    proptest! {
        #[test]
        fn inflated_differences_match_lagrangian_differences(
            seed in any::<u64>(),
            penalty in 1u64..20,
            alpha in 0.0f64..0.5,
            flagged in any::<bool>(),
        ) {
            use rand::Rng;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let class = fixtures::random_class(10, 12, seed);
            let k = rng.random_range(2..=6);
            let xs: Vec<usize> = (0..k).map(|_| rng.random_range(0..10)).collect();
            let ys: Vec<u8> = (0..k).map(|_| u8::from(rng.random_bool(0.5))).collect();
            let b = Batch::new(xs, ys).unwrap();
            let rho = if flagged {
                let r1 = rng.random_range(0..k);
                let r2 = (r1 + rng.random_range(1..k)) % k;
                AuditOutcome::Pair(r1, r2)
            } else {
                AuditOutcome::Null
            };
            let inf = reduction_inflate(&b, rho, penalty, rng.random_range(0..10)).unwrap();
            prop_assert_eq!(&inf.xs()[..k], b.xs());
            let p = fixtures::random_policy(class.len(), &mut rng).predictions(&class);
            let q = fixtures::random_policy(class.len(), &mut rng).predictions(&class);
            let c = penalty as f64;
            let lhs = lagrangian(&p, &b, rho, c, alpha) - lagrangian(&q, &b, rho, c, alpha);
            let rhs = inf.err(&p) - inf.err(&q);
            prop_assert!((lhs - rhs).abs() <= 1e-9);
        }
    }
}
