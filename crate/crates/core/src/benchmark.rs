//! Hindsight comparators, regret accounting and inequality checks.
//!
//! Two comparator sets appear: the whole simplex over the class, and `Q_a`,
//! the policies that are `alpha`-fair on every pair inside every arrived
//! batch. Both are searched exactly, `Q_a` by linear programming.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::auditor::SimilarityFn;
use crate::error::{Error, Result};
use crate::loss::{batch_err, batch_has_violation, lagrangian};
use crate::lp::{LinearProgram, LpError};
use crate::types::{AuditOutcome, Batch, HypothesisClass, Policy, RunTrace};

/// Slack used on every `lhs <= rhs` comparison in [`verify_bounds`].
pub const CHECK_TOLERANCE: f64 = 1e-7;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
}

impl BoundCheck {
    pub fn new(name: impl Into<String>, lhs: f64, rhs: f64, tolerance: f64) -> Self {
        let pass = lhs <= rhs + tolerance;
        BoundCheck { name: name.into(), lhs, rhs, pass }
    }
}

/// `pi(x) - pi(x') <= d(x, x') + alpha` as a row over hypothesis weights.
#[derive(Clone, Debug, PartialEq)]
pub struct FairConstraint {
    pub x: usize,
    pub x_prime: usize,
    pub coefficients: Vec<f64>,
    pub bound: f64,
}

impl FairConstraint {
    pub fn slack(&self, policy: &Policy) -> f64 {
        self.bound - self.coefficients.iter().zip(policy.weights()).map(|(a, w)| a * w).sum::<f64>()
    }

    /// Whether some mixture could violate it (otherwise the row is implied
    /// by the simplex).
    fn can_bind(&self) -> bool {
        self.coefficients.iter().any(|&a| a > self.bound)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HindsightSolution {
    pub policy: Policy,
    pub objective: f64,
    pub feasible: bool,
    pub constraint_slacks: Vec<f64>,
}

/// One row per ordered pair of distinct instances sharing some batch.
pub fn fair_constraints<'a, I>(class: &HypothesisClass, batches: I, d: &SimilarityFn, alpha: f64) -> Vec<FairConstraint>
where
    I: IntoIterator<Item = &'a Batch>,
{
    let mut pairs = BTreeSet::new();
    for b in batches {
        for &x in b.xs() {
            for &xp in b.xs() {
                if x != xp {
                    pairs.insert((x, xp));
                }
            }
        }
    }
    pairs
        .into_iter()
        .map(|(x, xp)| FairConstraint {
            x,
            x_prime: xp,
            coefficients: class.hypotheses().iter().map(|h| h.value(x) - h.value(xp)).collect(),
            bound: d.get(x, xp) + alpha,
        })
        .collect()
}

/// Total misclassification loss of each hypothesis over the batches.
pub fn err_coefficients<'a, I>(class: &HypothesisClass, batches: I) -> Vec<f64>
where
    I: IntoIterator<Item = &'a Batch>,
{
    let mut c = vec![0.0; class.len()];
    for b in batches {
        for (i, h) in class.hypotheses().iter().enumerate() {
            c[i] += b.xs().iter().zip(b.ys()).filter(|(&x, &y)| h.label(x) != y).count() as f64;
        }
    }
    c
}

/// Total Lagrangian loss of each hypothesis under the recorded audits.
pub fn lagrangian_coefficients(class: &HypothesisClass, trace: &RunTrace) -> Vec<f64> {
    let preds: Vec<Vec<f64>> =
        class.hypotheses().iter().map(|h| h.predictions().iter().map(|&v| f64::from(v)).collect()).collect();
    let mut c = vec![0.0; class.len()];
    for r in &trace.records {
        for (ci, p) in c.iter_mut().zip(&preds) {
            *ci += lagrangian(p, &r.batch, r.audit, trace.penalty, trace.alpha);
        }
    }
    c
}

/// Minimizes `objective . w` over the simplex intersected with `constraints`.
pub fn minimize_over_fair(objective: &[f64], constraints: &[FairConstraint]) -> Result<HindsightSolution> {
    let mut lp = LinearProgram::on_simplex(objective.to_vec());
    lp.le = constraints.iter().filter(|c| c.can_bind()).map(|c| (c.coefficients.clone(), c.bound)).collect();
    match lp.solve() {
        Ok(sol) => {
            let policy = Policy::from_unnormalized(sol.x)?;
            let objective = policy.weights().iter().zip(objective).map(|(w, c)| w * c).sum();
            let constraint_slacks = constraints.iter().map(|c| c.slack(&policy)).collect();
            Ok(HindsightSolution { policy, objective, feasible: true, constraint_slacks })
        }
        Err(LpError::Infeasible) => Ok(HindsightSolution {
            policy: Policy::uniform(objective.len()),
            objective: f64::NAN,
            feasible: false,
            constraint_slacks: Vec::new(),
        }),
        Err(e) => Err(e.into()),
    }
}

/// Lowest-total-misclassification policy in `Q_alpha`.
pub fn best_fair_policy(
    class: &HypothesisClass,
    batches: &[Batch],
    d: &SimilarityFn,
    alpha: f64,
) -> Result<HindsightSolution> {
    let cons = fair_constraints(class, batches, d, alpha);
    minimize_over_fair(&err_coefficients(class, batches), &cons)
}

/// Lowest-total-Lagrangian policy over the whole simplex. The objective is
/// linear, so the best pure hypothesis is optimal (lowest index on ties).
pub fn best_lagrangian_policy(class: &HypothesisClass, trace: &RunTrace) -> HindsightSolution {
    let c = lagrangian_coefficients(class, trace);
    let (best, value) =
        c.iter().copied().enumerate().fold((0, f64::INFINITY), |acc, (i, v)| if v < acc.1 { (i, v) } else { acc });
    HindsightSolution {
        policy: Policy::point_mass(class.len(), best),
        objective: value,
        feasible: true,
        constraint_slacks: Vec::new(),
    }
}

/// Lowest-total-Lagrangian policy in `Q_alpha`.
pub fn best_fair_lagrangian_policy(class: &HypothesisClass, trace: &RunTrace) -> Result<HindsightSolution> {
    let cons = fair_constraints(class, trace.batches(), &trace.similarity, trace.alpha);
    minimize_over_fair(&lagrangian_coefficients(class, trace), &cons)
}

/// Rounds on which the deployed policy has no `alpha'`-violation inside its batch.
pub fn clean_rounds(class: &HypothesisClass, trace: &RunTrace) -> Vec<bool> {
    trace
        .records
        .iter()
        .map(|r| !batch_has_violation(&r.policy.predictions(class), &r.batch, &trace.similarity, trace.alpha_prime))
        .collect()
}

/// `sum over clean rounds of Err(pi^t) - Err(pi_star)`.
#[allow(non_snake_case)]
pub fn compute_R(class: &HypothesisClass, trace: &RunTrace, pi_star: &Policy) -> f64 {
    let star = pi_star.predictions(class);
    clean_rounds(class, trace)
        .into_iter()
        .zip(&trace.records)
        .filter(|(clean, _)| *clean)
        .map(|(_, r)| r.err - batch_err(&star, &r.batch))
        .sum()
}

/// Largest value of [`compute_R`] over comparators in `Q_alpha`.
pub fn sup_r(class: &HypothesisClass, trace: &RunTrace) -> Result<f64> {
    let clean = clean_rounds(class, trace);
    let clean_batches: Vec<&Batch> =
        trace.records.iter().zip(&clean).filter(|(_, c)| **c).map(|(r, _)| &r.batch).collect();
    if clean_batches.is_empty() {
        return Ok(0.0);
    }
    let deployed: f64 = trace.records.iter().zip(&clean).filter(|(_, c)| **c).map(|(r, _)| r.err).sum();
    let cons = fair_constraints(class, trace.batches(), &trace.similarity, trace.alpha);
    let sol = minimize_over_fair(&err_coefficients(class, clean_batches), &cons)?;
    if !sol.feasible {
        return Err(Error::Precondition("no policy is fair on every batch".into()));
    }
    Ok(deployed - sol.objective)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegretReport {
    pub rounds: usize,
    pub cumulative_err: f64,
    pub cumulative_lagrangian: f64,
    pub cumulative_unfair: u64,
    pub best_fair_err: f64,
    pub misclass_regret: f64,
    pub lagrangian_regret_vs_q_alpha: f64,
    pub lagrangian_regret_vs_simplex: f64,
    /// Largest clean-round accuracy gap over fair comparators.
    pub r_value: f64,
    /// Clean-round accuracy gap against the misclassification-optimal fair policy.
    pub r_at_best_fair: f64,
    pub violating_rounds: usize,
    pub fairness_checks_applicable: bool,
    pub bound_checks: Vec<BoundCheck>,
}

impl RegretReport {
    pub fn all_pass(&self) -> bool {
        self.bound_checks.iter().all(|c| c.pass)
    }

    pub fn push_check(&mut self, name: impl Into<String>, lhs: f64, rhs: f64) {
        self.bound_checks.push(BoundCheck::new(name, lhs, rhs, CHECK_TOLERANCE));
    }

    pub fn check(&self, name: &str) -> Option<&BoundCheck> {
        self.bound_checks.iter().find(|c| c.name == name)
    }
}

/// Recomputes every regret quantity from the trace and checks:
///
/// - unfairness plus misclassification regret against `Q_a` is at most the
///   Lagrangian regret against the simplex;
/// - the same with misclassification regret alone;
/// - unfairness is at most Lagrangian regret against `Q_a` minus `R`;
/// - pointwise, a fair comparator's Lagrangian never exceeds its error plus
///   `C d` on the audited pair;
/// - every violating round costs the learner at least 1 in Lagrangian regret.
///
/// The last two fairness checks only apply when `C >= (k + 1) / eps`.
pub fn verify_bounds(class: &HypothesisClass, trace: &RunTrace) -> Result<RegretReport> {
    if trace.is_empty() {
        return Err(Error::EmptyTrace);
    }
    let batches: Vec<Batch> = trace.batches().cloned().collect();
    let d = &trace.similarity;
    let c = trace.penalty;
    let k = trace.batch_size as f64;

    let cumulative_err: f64 = trace.records.iter().map(|r| r.err).sum();
    let cumulative_lagrangian: f64 = trace.records.iter().map(|r| r.lagrangian).sum();
    let cumulative_unfair = trace.cumulative_unfair();

    let fair = best_fair_policy(class, &batches, d, trace.alpha)?;
    if !fair.feasible {
        return Err(Error::Precondition("no policy is fair on every batch".into()));
    }
    let lag_fair = best_fair_lagrangian_policy(class, trace)?;
    let lag_simplex = best_lagrangian_policy(class, trace);

    let misclass_regret = cumulative_err - fair.objective;
    let lagrangian_regret_vs_q_alpha = cumulative_lagrangian - lag_fair.objective;
    let lagrangian_regret_vs_simplex = cumulative_lagrangian - lag_simplex.objective;
    let r_value = sup_r(class, trace)?;
    let r_at_best_fair = compute_R(class, trace, &fair.policy);

    let clean = clean_rounds(class, trace);
    let violating_rounds = clean.iter().filter(|c| !**c).count();
    let fairness_checks_applicable = c * trace.epsilon() >= k + 1.0 - 1e-9;

    let mut report = RegretReport {
        rounds: trace.len(),
        cumulative_err,
        cumulative_lagrangian,
        cumulative_unfair,
        best_fair_err: fair.objective,
        misclass_regret,
        lagrangian_regret_vs_q_alpha,
        lagrangian_regret_vs_simplex,
        r_value,
        r_at_best_fair,
        violating_rounds,
        fairness_checks_applicable,
        bound_checks: Vec::new(),
    };
    let unfair = cumulative_unfair as f64;
    report.push_check(
        "unfair_plus_misclass_vs_lagrangian_simplex",
        unfair + misclass_regret,
        lagrangian_regret_vs_simplex,
    );
    report.push_check("misclass_vs_lagrangian_simplex", misclass_regret, lagrangian_regret_vs_simplex);

    // Pointwise: a fair comparator is charged at most C d on the audited pair.
    let star = fair.policy.predictions(class);
    let mut worst_gap = 0.0f64;
    for r in &trace.records {
        if let AuditOutcome::Pair(a, b) = r.audit {
            let lhs = lagrangian(&star, &r.batch, r.audit, c, trace.alpha);
            let rhs = batch_err(&star, &r.batch) + c * d.get(r.batch.xs()[a], r.batch.xs()[b]);
            worst_gap = worst_gap.max(lhs - rhs);
        }
    }
    report.push_check("fair_comparator_lagrangian_pointwise", worst_gap, 0.0);

    if fairness_checks_applicable {
        report.push_check("unfair_vs_lagrangian_q_alpha_minus_r", unfair, lagrangian_regret_vs_q_alpha - r_value);
        let comparators = [star, lag_fair.policy.predictions(class)];
        let mut min_regret = f64::INFINITY;
        for (r, is_clean) in trace.records.iter().zip(&clean) {
            if *is_clean {
                continue;
            }
            for p in &comparators {
                let inst = r.lagrangian - lagrangian(p, &r.batch, r.audit, c, trace.alpha);
                min_regret = min_regret.min(inst);
            }
        }
        if violating_rounds == 0 {
            min_regret = 1.0;
        }
        // Written as 1 <= min so that the shared lhs <= rhs convention applies.
        report.push_check("violating_round_instant_regret_at_least_one", 1.0, min_regret);
    }
    Ok(report)
}
