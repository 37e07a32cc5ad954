//! Batch generators, the average policy and exact distributional estimates.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::auditor::SimilarityFn;
use crate::benchmark::{fair_constraints, minimize_over_fair, BoundCheck, RegretReport, CHECK_TOLERANCE};
use crate::error::{Error, Result};
use crate::loss::violation;
use crate::types::{AuditOutcome, Batch, HypothesisClass, Policy, RunTrace};

/// What the environment reveals in one round.
#[derive(Clone, Debug, PartialEq)]
pub struct EnvRound {
    pub batch: Batch,
    /// Pair charged in the fairness loss; `None` defers to the auditor.
    pub pair: Option<AuditOutcome>,
}

pub trait Environment {
    /// Batch for 1-based round `t`. `deployed` holds the current policy's
    /// predictions, which adaptive environments may react to.
    fn next_round(&mut self, t: usize, deployed: &[f64]) -> Result<EnvRound>;

    /// The data distribution, when arrivals are i.i.d. from a known one.
    fn distribution(&self) -> Option<&JointDistribution> {
        None
    }
}

/// Explicit probability table `p(x, y)` over a finite universe.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JointDistribution {
    table: Vec<[f64; 2]>,
}

impl JointDistribution {
    /// Rows are `[p(x, 0), p(x, 1)]`.
    pub fn from_joint(table: Vec<[f64; 2]>) -> Result<Self> {
        if table.is_empty() {
            return Err(Error::InvalidDistribution("table is empty".into()));
        }
        if table.iter().flatten().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(Error::InvalidDistribution("probabilities must be nonnegative".into()));
        }
        let total: f64 = table.iter().flatten().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidDistribution(format!("probabilities sum to {total}, not 1")));
        }
        Ok(JointDistribution { table })
    }

    /// Uniform marginal with `Pr[y = 1 | x] = label_probs[x]`.
    pub fn uniform_labels(label_probs: &[f64]) -> Result<Self> {
        if label_probs.is_empty() {
            return Err(Error::InvalidDistribution("no instances".into()));
        }
        if label_probs.iter().any(|q| !(0.0..=1.0).contains(q)) {
            return Err(Error::InvalidDistribution("label probabilities must lie in [0, 1]".into()));
        }
        let n = label_probs.len() as f64;
        let table = label_probs.iter().map(|&q| [(1.0 - q) / n, q / n]).collect();
        JointDistribution::from_joint(table)
    }

    pub fn universe_size(&self) -> usize {
        self.table.len()
    }

    pub fn table(&self) -> &[[f64; 2]] {
        &self.table
    }

    pub fn marginal(&self) -> Vec<f64> {
        self.table.iter().map(|r| r[0] + r[1]).collect()
    }

    /// `E[l(pi(x), y)]` for soft predictions, exactly.
    pub fn expected_loss(&self, preds: &[f64]) -> f64 {
        self.table.iter().zip(preds).map(|(r, &p)| r[0] * p + r[1] * (1.0 - p)).sum()
    }

    /// `E[y]`.
    pub fn positive_rate(&self) -> f64 {
        self.table.iter().map(|r| r[1]).sum()
    }
}

/// I.i.d. batches from a known joint distribution.
#[derive(Clone, Debug)]
pub struct StochasticEnv {
    dist: JointDistribution,
    k: usize,
    sampler: WeightedIndex<f64>,
    rng: ChaCha8Rng,
}

impl StochasticEnv {
    pub fn new(dist: JointDistribution, k: usize, seed: u64) -> Result<Self> {
        if k < 2 {
            return Err(Error::config("batch_size", "must be at least 2"));
        }
        let sampler = WeightedIndex::new(dist.table.iter().flatten().copied())
            .map_err(|e| Error::InvalidDistribution(e.to_string()))?;
        Ok(StochasticEnv { dist, k, sampler, rng: ChaCha8Rng::seed_from_u64(seed) })
    }

    pub fn uniform_labels(label_probs: &[f64], k: usize, seed: u64) -> Result<Self> {
        StochasticEnv::new(JointDistribution::uniform_labels(label_probs)?, k, seed)
    }

    pub fn draw_batch(&mut self) -> Batch {
        let (xs, ys) = (0..self.k)
            .map(|_| {
                let cell = self.sampler.sample(&mut self.rng);
                (cell / 2, (cell % 2) as u8)
            })
            .unzip();
        Batch::new(xs, ys).expect("k >= 2 binary labels")
    }
}

impl Environment for StochasticEnv {
    fn next_round(&mut self, _t: usize, _deployed: &[f64]) -> Result<EnvRound> {
        Ok(EnvRound { batch: self.draw_batch(), pair: None })
    }

    fn distribution(&self) -> Option<&JointDistribution> {
        Some(&self.dist)
    }
}

/// A fixed sequence of batches, optionally with environment-chosen pairs.
#[derive(Clone, Debug, PartialEq)]
pub struct ScriptedEnv {
    batches: Vec<Batch>,
    pairs: Vec<Option<AuditOutcome>>,
}

impl ScriptedEnv {
    pub fn new(batches: Vec<Batch>) -> Self {
        let pairs = vec![None; batches.len()];
        ScriptedEnv { batches, pairs }
    }

    pub fn with_pairs(batches: Vec<Batch>, pairs: Vec<Option<AuditOutcome>>) -> Result<Self> {
        if pairs.len() != batches.len() {
            return Err(Error::InvalidBatch(format!("{} pairs for {} batches", pairs.len(), batches.len())));
        }
        for (b, p) in batches.iter().zip(&pairs) {
            if let Some(p) = p {
                p.validate(b.k())?;
            }
        }
        Ok(ScriptedEnv { batches, pairs })
    }

    pub fn len(&self) -> usize {
        self.batches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.batches.is_empty()
    }
}

impl Environment for ScriptedEnv {
    fn next_round(&mut self, t: usize, _deployed: &[f64]) -> Result<EnvRound> {
        let i = t.checked_sub(1).ok_or(Error::EnvironmentExhausted(t))?;
        let batch = self.batches.get(i).cloned().ok_or(Error::EnvironmentExhausted(t))?;
        Ok(EnvRound { batch, pair: self.pairs[i] })
    }
}

/// Uniform mixture of the given policies.
pub fn average_of(policies: &[Policy]) -> Result<Policy> {
    if policies.is_empty() {
        return Err(Error::EmptyTrace);
    }
    let coefficients = vec![1.0 / policies.len() as f64; policies.len()];
    Policy::mixture(policies, &coefficients)
}

/// Uniform mixture of every policy deployed in the trace.
pub fn average_policy(trace: &RunTrace) -> Result<Policy> {
    let policies: Vec<Policy> = trace.records.iter().map(|r| r.policy.clone()).collect();
    average_of(&policies)
}

/// Exact `Pr[|pi(x) - pi(x')| > d(x, x') + a]` for `x, x'` drawn
/// independently from `marginal`, self-pairs included.
pub fn beta_of_predictions(preds: &[f64], marginal: &[f64], d: &SimilarityFn, a: f64) -> f64 {
    let mut total = 0.0;
    for (x, &px) in marginal.iter().enumerate() {
        if px == 0.0 {
            continue;
        }
        for (xp, &pxp) in marginal.iter().enumerate() {
            if violation(preds, x, xp, d, a) > 0.0 {
                total += px * pxp;
            }
        }
    }
    total
}

pub fn empirical_beta(policy: &Policy, class: &HypothesisClass, marginal: &[f64], d: &SimilarityFn, a: f64) -> f64 {
    beta_of_predictions(&policy.predictions(class), marginal, d, a)
}

/// The average of `policies` at tolerance `alpha' + q/T` against the mean of
/// the per-round `betas` over `q`.
pub fn covering_check(
    class: &HypothesisClass,
    policies: &[Policy],
    betas: &[f64],
    q: usize,
    marginal: &[f64],
    d: &SimilarityFn,
    alpha_prime: f64,
) -> Result<BoundCheck> {
    let t = policies.len();
    if q == 0 || q > t {
        return Err(Error::config("covering_q", format!("must lie in [1, T = {t}]")));
    }
    let avg = average_of(policies)?;
    let lhs = empirical_beta(&avg, class, marginal, d, alpha_prime + q as f64 / t as f64);
    let rhs = betas.iter().sum::<f64>() / q as f64;
    Ok(BoundCheck::new("covering", lhs, rhs, 1e-12))
}

/// `beta(average at alpha') <= sum of per-round betas`.
pub fn naive_composition(
    class: &HypothesisClass,
    policies: &[Policy],
    betas: &[f64],
    marginal: &[f64],
    d: &SimilarityFn,
    alpha_prime: f64,
) -> Result<BoundCheck> {
    let avg = average_of(policies)?;
    let lhs = empirical_beta(&avg, class, marginal, d, alpha_prime);
    Ok(BoundCheck::new("naive_composition", lhs, betas.iter().sum(), 1e-12))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneralizationReport {
    pub delta: f64,
    pub q: usize,
    pub expected_loss_average: f64,
    pub best_fair_expected_loss: f64,
    pub beta_average: f64,
    pub betas: Vec<f64>,
    pub accuracy: BoundCheck,
    pub fairness: BoundCheck,
    /// `sum beta^t <= regret + slack`; derived assuming `R >= 0`.
    pub bounded_sum: BoundCheck,
    /// `sum beta^t <= regret - R + slack`; needs no sign assumption on `R`.
    pub bounded_sum_with_r: BoundCheck,
    pub r_nonnegative: bool,
}

impl GeneralizationReport {
    /// All bounds whose assumptions hold on this run.
    pub fn all_pass(&self) -> bool {
        self.accuracy.pass
            && self.fairness.pass
            && self.bounded_sum_with_r.pass
            && (self.bounded_sum.pass || !self.r_nonnegative)
    }
}

/// Exact evaluation of the average policy over `dist`, against bounds that
/// hold with probability `1 - delta` over the i.i.d. draw.
///
/// Regret terms come from `regret`, the trace's [`RegretReport`].
pub fn generalization_report(
    class: &HypothesisClass,
    trace: &RunTrace,
    dist: Option<&JointDistribution>,
    q: usize,
    delta: f64,
    regret: &RegretReport,
) -> Result<GeneralizationReport> {
    let dist = dist.ok_or_else(|| {
        Error::Precondition("generalization bounds need i.i.d. arrivals from a known distribution".into())
    })?;
    if dist.universe_size() != class.universe_size() {
        return Err(Error::InvalidDistribution("distribution and class disagree on universe size".into()));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::config("delta", "must lie in (0, 1)"));
    }
    let t = trace.len();
    if q == 0 || q > t {
        return Err(Error::config("covering_q", format!("must lie in [1, T = {t}]")));
    }
    let lagrangian_regret = regret.lagrangian_regret_vs_q_alpha;
    let tf = t as f64;
    let k = trace.batch_size as f64;
    let marginal = dist.marginal();
    let d = &trace.similarity;

    let avg = average_policy(trace)?;
    let avg_preds = avg.predictions(class);
    let expected_loss_average = dist.expected_loss(&avg_preds);

    let per_hypothesis: Vec<f64> = class
        .hypotheses()
        .iter()
        .map(|h| dist.expected_loss(&h.predictions().iter().map(|&v| f64::from(v)).collect::<Vec<_>>()))
        .collect();
    let cons = fair_constraints(class, trace.batches(), d, trace.alpha);
    let best = minimize_over_fair(&per_hypothesis, &cons)?;
    if !best.feasible {
        return Err(Error::Precondition("no policy is fair on every batch".into()));
    }
    let accuracy_rhs = best.objective + lagrangian_regret / (k * tf) + (8.0 * (4.0 / delta).ln() / tf).sqrt();

    let slack = (2.0 * tf * (2.0 / delta).ln()).sqrt();
    let beta_average = beta_of_predictions(&avg_preds, &marginal, d, trace.alpha_prime + q as f64 / tf);
    let fairness_rhs = (lagrangian_regret + slack) / q as f64;

    let betas: Vec<f64> = trace
        .records
        .iter()
        .map(|r| beta_of_predictions(&r.policy.predictions(class), &marginal, d, trace.alpha_prime))
        .collect();
    let beta_sum: f64 = betas.iter().sum();

    Ok(GeneralizationReport {
        delta,
        q,
        expected_loss_average,
        best_fair_expected_loss: best.objective,
        beta_average,
        accuracy: BoundCheck::new("average_policy_accuracy", expected_loss_average, accuracy_rhs, CHECK_TOLERANCE),
        fairness: BoundCheck::new("average_policy_fairness", beta_average, fairness_rhs, CHECK_TOLERANCE),
        bounded_sum: BoundCheck::new("per_round_beta_sum", beta_sum, lagrangian_regret + slack, CHECK_TOLERANCE),
        bounded_sum_with_r: BoundCheck::new(
            "per_round_beta_sum_with_r",
            beta_sum,
            lagrangian_regret - regret.r_value + slack,
            CHECK_TOLERANCE,
        ),
        r_nonnegative: regret.r_value >= 0.0,
        betas,
    })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::auditor::{Auditor, TieBreak};
    use crate::benchmark::verify_bounds;
    use crate::fixtures;
    use crate::learners::{run_fair_online, ConstantZero, ExpWeights};
    use crate::types::RunConfig;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::Rng;

    const UNIFORM3: [f64; 3] = [1.0 / 3.0; 3];

    /// Independent oracle: count violating ordered pairs directly.
    fn count_pairs(preds: &[f64], d: &SimilarityFn, a: f64) -> usize {
        let n = preds.len();
        (0..n)
            .flat_map(|x| (0..n).map(move |y| (x, y)))
            .filter(|&(x, y)| (preds[x] - preds[y]).abs() > d.get(x, y) + a)
            .count()
    }

    #[test]
    fn average_of_alternating_pair() {
        let class = fixtures::three_point_class();
        let avg = average_of(&fixtures::alternating_policies(2)).unwrap();
        assert_eq!(avg.predictions(&class), vec![1.0, 0.5, 0.0]);
        let avg4 = average_of(&fixtures::alternating_policies(4)).unwrap();
        assert_eq!(avg4, avg);
        let same = average_of(&vec![Policy::point_mass(3, 1); 5]).unwrap();
        assert_eq!(same, Policy::point_mass(3, 1));
        assert_eq!(average_of(&[]), Err(Error::EmptyTrace));
    }

    #[test]
    fn three_point_betas() {
        let class = fixtures::three_point_class();
        let d = fixtures::three_point_similarity();
        let h1 = Policy::point_mass(3, 0);
        let h2 = Policy::point_mass(3, 1);
        let avg = average_of(&[h1.clone(), h2.clone()]).unwrap();
        assert_eq!(count_pairs(&h1.predictions(&class), &d, 0.1), 2);
        assert_eq!(count_pairs(&avg.predictions(&class), &d, 0.1), 4);
        assert_abs_diff_eq!(empirical_beta(&h1, &class, &UNIFORM3, &d, 0.1), 2.0 / 9.0, epsilon = 1e-15);
        assert_abs_diff_eq!(empirical_beta(&h2, &class, &UNIFORM3, &d, 0.1), 2.0 / 9.0, epsilon = 1e-15);
        assert_abs_diff_eq!(empirical_beta(&avg, &class, &UNIFORM3, &d, 0.1), 4.0 / 9.0, epsilon = 1e-15);
        assert_eq!(empirical_beta(&Policy::point_mass(3, 2), &class, &UNIFORM3, &d, 0.1), 0.0);
    }

    #[test]
    fn three_point_covering_and_composition() {
        let class = fixtures::three_point_class();
        let d = fixtures::three_point_similarity();
        let pols = fixtures::alternating_policies(2);
        let betas = [2.0 / 9.0, 2.0 / 9.0];
        let c = covering_check(&class, &pols, &betas, 1, &UNIFORM3, &d, 0.1).unwrap();
        assert_eq!(c.lhs, 0.0);
        assert_abs_diff_eq!(c.rhs, 4.0 / 9.0, epsilon = 1e-15);
        assert!(c.pass);
        let n = naive_composition(&class, &pols, &betas, &UNIFORM3, &d, 0.1).unwrap();
        assert_abs_diff_eq!(n.lhs, n.rhs, epsilon = 1e-15);
        assert!(n.pass);
    }

    #[test]
    fn covering_with_q_equal_t_and_identical_policies() {
        let class = fixtures::random_class(5, 10, 2);
        let d = SimilarityFn::random_nonmetric(5, 2, 0.3);
        let pols = vec![Policy::point_mass(class.len(), 3); 4];
        let m = [0.2; 5];
        let b = empirical_beta(&pols[0], &class, &m, &d, 0.1);
        let c = covering_check(&class, &pols, &[b; 4], 4, &m, &d, 0.1).unwrap();
        assert_eq!(c.lhs, 0.0);
        assert!(c.pass);
        assert!(covering_check(&class, &pols, &[b; 4], 5, &m, &d, 0.1).is_err());
    }

    #[test]
    fn covering_and_composition_hold_on_random_tuples() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for case in 0..500 {
            let n = rng.random_range(2..8);
            let class = fixtures::random_class(n, rng.random_range(2..16), case);
            let d = SimilarityFn::random_nonmetric(n, case, rng.random_range(0.0..0.6));
            let raw: Vec<f64> = (0..n).map(|_| rng.random::<f64>() + 0.01).collect();
            let total: f64 = raw.iter().sum();
            let marginal: Vec<f64> = raw.iter().map(|v| v / total).collect();
            let t = rng.random_range(1..12);
            let pols: Vec<Policy> = (0..t)
                .map(|_| {
                    if rng.random_bool(0.5) {
                        Policy::point_mass(class.len(), rng.random_range(0..class.len()))
                    } else {
                        fixtures::random_policy(class.len(), &mut rng)
                    }
                })
                .collect();
            let a = rng.random_range(0.0..0.5);
            let betas: Vec<f64> = pols.iter().map(|p| empirical_beta(p, &class, &marginal, &d, a)).collect();
            let q = rng.random_range(1..=t);
            assert!(covering_check(&class, &pols, &betas, q, &marginal, &d, a).unwrap().pass, "case {case}");
            assert!(naive_composition(&class, &pols, &betas, &marginal, &d, a).unwrap().pass, "case {case}");
        }
    }

    proptest! {
        #[test]
        fn average_loss_is_average_of_losses(seed in any::<u64>(), t in 1usize..20) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let class = fixtures::random_class(6, 15, seed);
            let probs: Vec<f64> = (0..6).map(|_| rng.random::<f64>()).collect();
            let dist = JointDistribution::uniform_labels(&probs).unwrap();
            let pols: Vec<Policy> = (0..t).map(|_| fixtures::random_policy(class.len(), &mut rng)).collect();
            let avg = average_of(&pols).unwrap();
            let lhs = dist.expected_loss(&avg.predictions(&class));
            let rhs = pols.iter().map(|p| dist.expected_loss(&p.predictions(&class))).sum::<f64>() / t as f64;
            prop_assert!((lhs - rhs).abs() <= 1e-12);
        }
    }

    #[test]
    fn distribution_validation() {
        assert!(JointDistribution::from_joint(vec![[0.5, 0.4]]).is_err());
        assert!(JointDistribution::from_joint(vec![[0.5, 0.6], [-0.1, 0.0]]).is_err());
        assert!(JointDistribution::uniform_labels(&[1.2]).is_err());
        let d = JointDistribution::uniform_labels(&[0.9, 0.4, 0.1]).unwrap();
        assert_abs_diff_eq!(d.positive_rate(), 1.4 / 3.0, epsilon = 1e-15);
        assert_eq!(d.marginal().len(), 3);
    }

    #[test]
    fn stochastic_env_is_seeded() {
        let mut a = StochasticEnv::uniform_labels(&[0.9, 0.4, 0.1], 4, 7).unwrap();
        let mut b = StochasticEnv::uniform_labels(&[0.9, 0.4, 0.1], 4, 7).unwrap();
        let mut c = StochasticEnv::uniform_labels(&[0.9, 0.4, 0.1], 4, 8).unwrap();
        let sa: Vec<Batch> = (0..50).map(|_| a.draw_batch()).collect();
        let sb: Vec<Batch> = (0..50).map(|_| b.draw_batch()).collect();
        let sc: Vec<Batch> = (0..50).map(|_| c.draw_batch()).collect();
        assert_eq!(sa, sb);
        assert_ne!(sa, sc);
    }

    #[test]
    fn stochastic_env_frequencies_match_table() {
        let dist = JointDistribution::from_joint(vec![[0.1, 0.2], [0.3, 0.0], [0.0, 0.4]]).unwrap();
        let mut env = StochasticEnv::new(dist.clone(), 2, 1).unwrap();
        let mut counts = [[0usize; 2]; 3];
        let draws = 50_000;
        for _ in 0..draws / 2 {
            let b = env.draw_batch();
            for (&x, &y) in b.xs().iter().zip(b.ys()) {
                counts[x][y as usize] += 1;
            }
        }
        for (row, want) in counts.iter().zip(dist.table()) {
            for (c, p) in row.iter().zip(want) {
                assert!((*c as f64 / draws as f64 - p).abs() < 0.01);
            }
        }
    }

    #[test]
    fn scripted_env_replays_and_runs_out() {
        let b = Batch::new(vec![0, 1], vec![1, 0]).unwrap();
        let mut env =
            ScriptedEnv::with_pairs(vec![b.clone(), b.clone()], vec![None, Some(AuditOutcome::Pair(1, 0))]).unwrap();
        assert_eq!(env.next_round(1, &[]).unwrap().pair, None);
        assert_eq!(env.next_round(2, &[]).unwrap().pair, Some(AuditOutcome::Pair(1, 0)));
        assert_eq!(env.next_round(3, &[]), Err(Error::EnvironmentExhausted(3)));
        assert!(ScriptedEnv::with_pairs(vec![b], vec![Some(AuditOutcome::Pair(0, 5))]).is_err());
        assert!(env.distribution().is_none());
    }

    fn run<L: crate::learners::Learner>(
        learner: &mut L,
        class: &HypothesisClass,
        config: &RunConfig,
    ) -> (RunTrace, StochasticEnv) {
        let mut auditor =
            Auditor::new(config.alpha_prime, TieBreak::MaxViolation, fixtures::three_point_similarity()).unwrap();
        let mut env = StochasticEnv::uniform_labels(&[0.9, 0.4, 0.1], config.batch_size, config.seed).unwrap();
        let trace = run_fair_online(learner, &mut env, &mut auditor, class, config).unwrap();
        (trace, env)
    }

    #[test]
    fn constant_zero_generalization() {
        let class = fixtures::three_point_class();
        let config = RunConfig::new(500, 2, 0.3, 0.2).with_seed(4);
        let (trace, env) = run(&mut ConstantZero::new(&class).unwrap(), &class, &config);
        let report = verify_bounds(&class, &trace).unwrap();
        let g = generalization_report(&class, &trace, env.distribution(), config.covering_q(), 0.05, &report).unwrap();
        assert_abs_diff_eq!(g.expected_loss_average, 1.4 / 3.0, epsilon = 1e-12);
        assert_eq!(g.beta_average, 0.0);
        assert!(g.all_pass());
    }

    #[test]
    fn expweights_generalization() {
        let class = Arc::new(fixtures::three_point_class());
        let config = RunConfig::new(10_000, 2, 0.3, 0.2).with_seed(9);
        let mut learner = ExpWeights::for_config(class.clone(), &config).unwrap();
        let (trace, env) = run(&mut learner, &class, &config);
        let report = verify_bounds(&class, &trace).unwrap();
        let g = generalization_report(&class, &trace, env.distribution(), config.covering_q(), 0.05, &report).unwrap();
        assert!(g.all_pass(), "{g:#?}");
        assert!(g.bounded_sum_with_r.pass);
    }

    #[test]
    fn scripted_runs_are_refused() {
        let class = fixtures::three_point_class();
        let b = Batch::new(vec![0, 1], vec![1, 0]).unwrap();
        let config = RunConfig::new(3, 2, 0.3, 0.2);
        let mut env = ScriptedEnv::new(vec![b; 3]);
        let mut auditor = Auditor::new(0.3, TieBreak::MaxViolation, fixtures::three_point_similarity()).unwrap();
        let mut learner = ConstantZero::new(&class).unwrap();
        let trace = run_fair_online(&mut learner, &mut env, &mut auditor, &class, &config).unwrap();
        assert!(matches!(
            generalization_report(&class, &trace, env.distribution(), 1, 0.05, &verify_bounds(&class, &trace).unwrap()),
            Err(Error::Precondition(_))
        ));
    }
}
