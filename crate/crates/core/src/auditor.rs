//! Ground-truth dissimilarity tables and the simulated fairness auditor.
//!
//! The auditor only ever hands back a pair of batch positions. Numeric
//! violation sizes never leave this module's public `audit` surface.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::loss::margin;
use crate::types::AuditOutcome;

/// Symmetric, nonnegative `n x n` dissimilarity table with zero diagonal.
/// The triangle inequality is not required.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimilarityFn {
    n: usize,
    table: Vec<f64>,
}

impl SimilarityFn {
    pub fn from_table(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::InvalidSimilarity("table is empty".into()));
        }
        if let Some(i) = rows.iter().position(|r| r.len() != n) {
            return Err(Error::InvalidSimilarity(format!("row {i} does not have {n} entries")));
        }
        for (i, row) in rows.iter().enumerate() {
            if row[i] != 0.0 {
                return Err(Error::InvalidSimilarity(format!("d({i},{i}) = {} is not 0", row[i])));
            }
            for (j, &v) in row.iter().enumerate() {
                if !(v.is_finite() && v >= 0.0) {
                    return Err(Error::InvalidSimilarity(format!("d({i},{j}) = {v} is not a nonnegative real")));
                }
                if v != rows[j][i] {
                    return Err(Error::InvalidSimilarity(format!("d({i},{j}) != d({j},{i})")));
                }
            }
        }
        Ok(SimilarityFn { n, table: rows.into_iter().flatten().collect() })
    }

    /// `d = 0` everywhere.
    pub fn zero(n: usize) -> Self {
        SimilarityFn { n, table: vec![0.0; n * n] }
    }

    /// `d(x, x') = sqrt((f_x - f_x')^T A (f_x - f_x'))` for a symmetric PSD `A`.
    pub fn mahalanobis(features: &[Vec<f64>], matrix: &[Vec<f64>]) -> Result<Self> {
        let dim = matrix.len();
        if dim == 0 || matrix.iter().any(|r| r.len() != dim) {
            return Err(Error::InvalidSimilarity("matrix must be square and nonempty".into()));
        }
        if features.is_empty() || features.iter().any(|f| f.len() != dim) {
            return Err(Error::InvalidSimilarity(format!("every feature vector must have dimension {dim}")));
        }
        let a = DMatrix::from_fn(dim, dim, |i, j| matrix[i][j]);
        if (&a - a.transpose()).amax() > 1e-12 {
            return Err(Error::NotPositiveSemidefinite);
        }
        let eigen = SymmetricEigen::new(a.clone());
        let scale = a.amax().max(1.0);
        if eigen.eigenvalues.iter().any(|&l| l < -1e-12 * scale) {
            return Err(Error::NotPositiveSemidefinite);
        }
        let n = features.len();
        let mut table = vec![0.0; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let diff = nalgebra::DVector::from_fn(dim, |r, _| features[i][r] - features[j][r]);
                let quad = diff.dot(&(&a * &diff)).max(0.0);
                let v = quad.sqrt();
                table[i * n + j] = v;
                table[j * n + i] = v;
            }
        }
        Ok(SimilarityFn { n, table })
    }

    /// I.i.d. `U[0, scale]` entries on the upper triangle, mirrored, zero
    /// diagonal. Deterministic in `seed`; typically violates the triangle
    /// inequality somewhere.
    pub fn random_nonmetric(n: usize, seed: u64, scale: f64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut table = vec![0.0; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let v = if scale > 0.0 { rng.random::<f64>() * scale } else { 0.0 };
                table[i * n + j] = v;
                table[j * n + i] = v;
            }
        }
        SimilarityFn { n, table }
    }

    #[inline]
    pub fn get(&self, x: usize, x_prime: usize) -> f64 {
        self.table[x * self.n + x_prime]
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn max_value(&self) -> f64 {
        self.table.iter().copied().fold(0.0, f64::max)
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.table.chunks(self.n).map(<[f64]>::to_vec).collect()
    }

    /// True if some triple has `d(a, c) > d(a, b) + d(b, c)`.
    pub fn violates_triangle_inequality(&self) -> bool {
        let n = self.n;
        (0..n).any(|a| (0..n).any(|b| (0..n).any(|c| self.get(a, c) > self.get(a, b) + self.get(b, c) + 1e-15)))
    }
}

/// How the auditor picks among several violating pairs.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TieBreak {
    /// First violating ordered pair in row-major order of batch positions.
    FirstLexicographic,
    /// Largest violation; equal violations resolved lexicographically.
    #[default]
    MaxViolation,
    /// Uniform among violating pairs, reproducible from `(seed, round)`.
    SeededRandom { seed: u64 },
}

/// Simulated auditor `J_{alpha'}`. Complete: it reports a pair whenever one
/// violates, and only then.
#[derive(Clone, Debug)]
pub struct Auditor {
    tolerance: f64,
    tie_break: TieBreak,
    similarity: SimilarityFn,
    rounds_audited: u64,
}

impl Auditor {
    pub fn new(tolerance: f64, tie_break: TieBreak, similarity: SimilarityFn) -> Result<Self> {
        if !(tolerance.is_finite() && tolerance > 0.0) {
            return Err(Error::config("alpha_prime", "auditor tolerance must be positive"));
        }
        Ok(Auditor { tolerance, tie_break, similarity, rounds_audited: 0 })
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    pub fn tie_break(&self) -> TieBreak {
        self.tie_break
    }

    pub fn similarity(&self) -> &SimilarityFn {
        &self.similarity
    }

    /// Swaps the ground-truth table between rounds.
    pub fn set_similarity(&mut self, similarity: SimilarityFn) {
        self.similarity = similarity;
    }

    /// Audits the next round. `preds` are the deployed policy's soft
    /// predictions over the universe.
    pub fn audit(&mut self, batch_instances: &[usize], preds: &[f64]) -> AuditOutcome {
        let round = self.rounds_audited;
        self.rounds_audited += 1;
        self.audit_round(round, batch_instances, preds)
    }

    /// Stateless audit of a given round index.
    pub fn audit_round(&self, round: u64, batch_instances: &[usize], preds: &[f64]) -> AuditOutcome {
        debug_assert!(batch_instances.len() >= 2);
        let d = &self.similarity;
        let mut violating: Vec<(usize, usize, f64)> = Vec::new();
        for (i, &x) in batch_instances.iter().enumerate() {
            for (j, &x2) in batch_instances.iter().enumerate() {
                if i == j {
                    continue;
                }
                let m = margin(preds, x, x2, d, self.tolerance);
                if m > 0.0 {
                    if self.tie_break == TieBreak::FirstLexicographic {
                        return AuditOutcome::Pair(i, j);
                    }
                    violating.push((i, j, m));
                }
            }
        }
        if violating.is_empty() {
            return AuditOutcome::Null;
        }
        let (i, j, _) = match self.tie_break {
            TieBreak::FirstLexicographic => unreachable!(),
            TieBreak::MaxViolation => {
                violating.iter().copied().fold(violating[0], |best, cand| if cand.2 > best.2 { cand } else { best })
            }
            TieBreak::SeededRandom { seed } => {
                let mut rng = round_rng(seed, round);
                violating[rng.random_range(0..violating.len())]
            }
        };
        AuditOutcome::Pair(i, j)
    }
}

fn round_rng(seed: u64, round: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(round);
    rng
}
