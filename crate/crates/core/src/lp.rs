//! Dense two-phase simplex with Bland's anti-cycling rule.
//!
//! Problems are small (one variable per hypothesis, one row per ordered
//! instance pair), so a full tableau is fine and keeps results reproducible.

use thiserror::Error;

const TOL: f64 = 1e-10;
const MAX_PIVOTS: usize = 200_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("linear program is infeasible")]
    Infeasible,
    #[error("linear program is unbounded")]
    Unbounded,
    #[error("simplex stopped after {0} pivots")]
    IterationLimit(usize),
    #[error("malformed linear program: {0}")]
    Malformed(String),
}

/// `minimize c.x  s.t.  A_le x <= b_le,  A_eq x = b_eq,  x >= 0`.
#[derive(Clone, Debug, Default)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub le: Vec<(Vec<f64>, f64)>,
    pub eq: Vec<(Vec<f64>, f64)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
}

impl LinearProgram {
    pub fn new(objective: Vec<f64>) -> Self {
        LinearProgram { objective, ..Default::default() }
    }

    /// Convenience: the probability simplex `sum x = 1`.
    pub fn on_simplex(objective: Vec<f64>) -> Self {
        let n = objective.len();
        let mut lp = LinearProgram::new(objective);
        lp.eq.push((vec![1.0; n], 1.0));
        lp
    }

    pub fn solve(&self) -> Result<LpSolution, LpError> {
        solve(self)
    }
}

struct Tableau {
    rows: Vec<Vec<f64>>,
    basis: Vec<usize>,
    cols: usize,
}

impl Tableau {
    fn rhs(&self, i: usize) -> f64 {
        self.rows[i][self.cols]
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.rows[r][c];
        for v in &mut self.rows[r] {
            *v /= p;
        }
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[c];
            if f != 0.0 {
                for (v, pv) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
                row[c] = 0.0;
            }
        }
        self.basis[r] = c;
    }

    /// Minimizes `cost` with entering columns restricted to `0..enter_limit`.
    fn optimize(&mut self, cost: &[f64], enter_limit: usize, pivots: &mut usize) -> Result<(), LpError> {
        loop {
            let entering = (0..enter_limit).find(|&j| {
                if self.basis.contains(&j) {
                    return false;
                }
                let reduced: f64 =
                    cost[j] - self.rows.iter().zip(&self.basis).map(|(row, &b)| cost[b] * row[j]).sum::<f64>();
                reduced < -TOL
            });
            let Some(j) = entering else { return Ok(()) };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.rows.len() {
                let a = self.rows[i][j];
                if a > TOL {
                    let ratio = self.rhs(i) / a;
                    leave = match leave {
                        None => Some((i, ratio)),
                        Some((li, lr)) => {
                            if ratio < lr - TOL || (ratio <= lr + TOL && self.basis[i] < self.basis[li]) {
                                Some((i, ratio))
                            } else {
                                Some((li, lr))
                            }
                        }
                    };
                }
            }
            let Some((r, _)) = leave else { return Err(LpError::Unbounded) };
            self.pivot(r, j);
            *pivots += 1;
            if *pivots > MAX_PIVOTS {
                return Err(LpError::IterationLimit(*pivots));
            }
        }
    }
}

pub fn solve(lp: &LinearProgram) -> Result<LpSolution, LpError> {
    let n = lp.objective.len();
    for (a, b) in lp.le.iter().chain(&lp.eq) {
        if a.len() != n || !b.is_finite() || a.iter().any(|v| !v.is_finite()) {
            return Err(LpError::Malformed("row length or entries invalid".into()));
        }
    }
    let m_le = lp.le.len();
    let m = m_le + lp.eq.len();
    let art0 = n + m_le;
    let cols = art0 + m;
    let mut rows = Vec::with_capacity(m);
    for (i, (a, b)) in lp.le.iter().chain(&lp.eq).enumerate() {
        let mut row = vec![0.0; cols + 1];
        row[..n].copy_from_slice(a);
        if i < m_le {
            row[n + i] = 1.0;
        }
        row[cols] = *b;
        if *b < 0.0 {
            for v in &mut row[..art0] {
                *v = -*v;
            }
            row[cols] = -*b;
        }
        row[art0 + i] = 1.0;
        rows.push(row);
    }
    // Rows `a x <= b` with `b >= 0` start with their slack basic.
    let basis = (0..m).map(|i| if i < m_le && lp.le[i].1 >= 0.0 { n + i } else { art0 + i }).collect();
    let mut t = Tableau { rows, basis, cols };
    let mut pivots = 0;

    let mut phase1 = vec![0.0; cols];
    for c in &mut phase1[art0..] {
        *c = 1.0;
    }
    t.optimize(&phase1, art0, &mut pivots)?;
    let infeasibility: f64 = (0..m).filter(|&i| t.basis[i] >= art0).map(|i| t.rhs(i)).sum();
    let scale = 1.0 + lp.le.iter().chain(&lp.eq).map(|(_, b)| b.abs()).fold(0.0, f64::max);
    if infeasibility > 1e-9 * scale {
        return Err(LpError::Infeasible);
    }
    // Drive remaining (zero-valued) artificials out of the basis where possible.
    for i in 0..m {
        if t.basis[i] >= art0 {
            if let Some(j) = (0..art0).find(|&j| t.rows[i][j].abs() > 1e-9) {
                t.pivot(i, j);
            }
        }
    }

    let mut phase2 = vec![0.0; cols];
    phase2[..n].copy_from_slice(&lp.objective);
    t.optimize(&phase2, art0, &mut pivots)?;

    let mut x = vec![0.0; n];
    for (i, &b) in t.basis.iter().enumerate() {
        if b < n {
            x[b] = t.rhs(i).max(0.0);
        }
    }
    let objective = x.iter().zip(&lp.objective).map(|(a, c)| a * c).sum();
    Ok(LpSolution { x, objective })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use nalgebra::{DMatrix, DVector};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn feasible(lp: &LinearProgram, x: &[f64], tol: f64) -> bool {
        let dot = |a: &[f64]| a.iter().zip(x).map(|(p, q)| p * q).sum::<f64>();
        x.iter().all(|&v| v >= -tol)
            && lp.le.iter().all(|(a, b)| dot(a) <= b + tol)
            && lp.eq.iter().all(|(a, b)| (dot(a) - b).abs() <= tol)
    }

    #[test]
    fn textbook_maximization() {
        // max 3x + 2y s.t. x + y <= 4, x + 3y <= 6, x <= 3  ->  (3, 1), value 11.
        let mut lp = LinearProgram::new(vec![-3.0, -2.0]);
        lp.le = vec![(vec![1.0, 1.0], 4.0), (vec![1.0, 3.0], 6.0), (vec![1.0, 0.0], 3.0)];
        let s = lp.solve().unwrap();
        assert_abs_diff_eq!(s.objective, -11.0, epsilon = 1e-9);
        assert_abs_diff_eq!(s.x[0], 3.0, epsilon = 1e-9);
        assert_abs_diff_eq!(s.x[1], 1.0, epsilon = 1e-9);
    }

    #[test]
    fn detects_infeasible_and_unbounded() {
        let mut lp = LinearProgram::on_simplex(vec![1.0, 1.0]);
        lp.le.push((vec![1.0, 1.0], 0.5));
        assert_eq!(lp.solve(), Err(LpError::Infeasible));

        let mut lp = LinearProgram::new(vec![-1.0, 0.0]);
        lp.le.push((vec![0.0, 1.0], 1.0));
        assert_eq!(lp.solve(), Err(LpError::Unbounded));
    }

    #[test]
    fn negative_right_hand_sides() {
        // x >= 1 written as -x <= -1.
        let mut lp = LinearProgram::new(vec![1.0]);
        lp.le.push((vec![-1.0], -1.0));
        assert_abs_diff_eq!(lp.solve().unwrap().objective, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn degenerate_redundant_equalities() {
        let mut lp = LinearProgram::on_simplex(vec![2.0, 1.0, 3.0]);
        lp.eq.push((vec![2.0, 2.0, 2.0], 2.0));
        lp.le.push((vec![0.0, 1.0, 0.0], 0.0));
        let s = lp.solve().unwrap();
        assert_abs_diff_eq!(s.objective, 2.0, epsilon = 1e-9);
    }

    #[test]
    fn matches_grid_search_on_the_simplex() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..60 {
            let c: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
            let mut lp = LinearProgram::on_simplex(c.clone());
            for _ in 0..rng.random_range(0..4) {
                let a: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
                lp.le.push((a, rng.random_range(0.0..0.5)));
            }
            let steps = 200;
            let mut best = f64::INFINITY;
            for i in 0..=steps {
                for j in 0..=(steps - i) {
                    let x = [i as f64 / steps as f64, j as f64 / steps as f64, (steps - i - j) as f64 / steps as f64];
                    if feasible(&lp, &x, 1e-12) {
                        best = best.min(x.iter().zip(&c).map(|(a, b)| a * b).sum());
                    }
                }
            }
            match lp.solve() {
                Ok(s) => {
                    assert!(feasible(&lp, &s.x, 1e-9));
                    assert!(s.objective <= best + 1e-9);
                    // Grid spacing 1/200 bounds how far the grid optimum can lag.
                    if best.is_finite() {
                        assert!(best - s.objective <= 0.05, "{best} vs {}", s.objective);
                    }
                }
                Err(e) => {
                    assert_eq!(e, LpError::Infeasible);
                    assert!(best.is_infinite());
                }
            }
        }
    }

    /// Enumerates basic feasible points of `{x >= 0, sum x = 1, A x <= b}` in
    /// three variables by solving every 3x3 system of active constraints.
    fn vertex_minimum(c: &[f64], rows: &[(Vec<f64>, f64)]) -> Option<f64> {
        let mut cons: Vec<(Vec<f64>, f64)> = (0..3)
            .map(|i| {
                let mut e = vec![0.0; 3];
                e[i] = 1.0;
                (e, 0.0)
            })
            .collect();
        cons.extend(rows.iter().cloned());
        let mut best: Option<f64> = None;
        for a in 0..cons.len() {
            for b in (a + 1)..cons.len() {
                let m = DMatrix::from_row_slice(3, 3, &[&[1.0, 1.0, 1.0][..], &cons[a].0, &cons[b].0].concat());
                let rhs = DVector::from_vec(vec![1.0, cons[a].1, cons[b].1]);
                let Some(sol) = m.lu().solve(&rhs) else { continue };
                let x: Vec<f64> = sol.iter().copied().collect();
                let ok = x.iter().all(|&v| v >= -1e-9)
                    && rows.iter().all(|(r, bb)| r.iter().zip(&x).map(|(p, q)| p * q).sum::<f64>() <= bb + 1e-9);
                if ok {
                    let v: f64 = x.iter().zip(c).map(|(p, q)| p * q).sum();
                    best = Some(best.map_or(v, |cur: f64| cur.min(v)));
                }
            }
        }
        best
    }

    #[test]
    fn matches_vertex_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..300 {
            let c: Vec<f64> = (0..3).map(|_| rng.random_range(-2.0..2.0)).collect();
            let rows: Vec<(Vec<f64>, f64)> = (0..rng.random_range(0..5))
                .map(|_| ((0..3).map(|_| rng.random_range(-1.0..1.0)).collect(), rng.random_range(-0.2..0.6)))
                .collect();
            let mut lp = LinearProgram::on_simplex(c.clone());
            lp.le = rows.clone();
            match (lp.solve(), vertex_minimum(&c, &rows)) {
                (Ok(s), Some(v)) => assert_abs_diff_eq!(s.objective, v, epsilon = 1e-7),
                (Err(LpError::Infeasible), None) => {}
                (got, want) => panic!("solver {got:?} vs enumeration {want:?}"),
            }
        }
    }
}
