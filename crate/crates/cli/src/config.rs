//! TOML experiment schema and its translation into library objects.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, ensure, Context};
use fairlab::auditor::{Auditor, SimilarityFn, TieBreak};
use fairlab::environments::{Environment, JointDistribution, ScriptedEnv, StochasticEnv};
use fairlab::hypotheses::{find_separator, make_table_class, make_threshold_class, SeparatorSet};
use fairlab::learners::{default_omega, ConstantZero, ExpWeights, Ftpl, FtplParams, Learner, Perturbation};
use fairlab::types::{AuditOutcome, Batch, HypothesisClass, PenaltyTarget, RunConfig, Universe};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub log_policies: bool,
    pub run: RunSection,
    pub universe: UniverseSpec,
    pub class: ClassSpec,
    pub similarity: SimilaritySpec,
    #[serde(default)]
    pub auditor: AuditorSpec,
    pub learner: LearnerSpec,
    pub environment: EnvironmentSpec,
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("fairlab-out")
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}

fn default_delta() -> f64 {
    0.05
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub rounds: usize,
    pub batch_size: usize,
    pub alpha_prime: f64,
    pub epsilon: f64,
    /// Defaults to the smallest integer meeting `penalty_target`.
    pub penalty: Option<u64>,
    #[serde(default)]
    pub penalty_target: PenaltyTarget,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default)]
    pub dummy_instance: usize,
    pub covering_q: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UniverseSpec {
    pub size: usize,
    pub features: Option<Vec<Vec<f64>>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ClassSpec {
    /// One-dimensional thresholds over the universe order.
    Threshold,
    /// Explicit prediction rows; constant zero is appended when missing.
    Table(Vec<Vec<u8>>),
    Random {
        size: usize,
        seed: u64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum SimilaritySpec {
    Table(Vec<Vec<f64>>),
    Mahalanobis { matrix: Vec<Vec<f64>> },
    Random { seed: u64, scale: f64 },
    Zero,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuditorSpec {
    #[serde(default)]
    pub tie_break: TieBreak,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum LearnerSpec {
    Expweights {
        gamma: Option<f64>,
    },
    Ftpl {
        omega: Option<f64>,
        #[serde(default)]
        perturbation: Perturbation,
        /// Number of perturbed draws averaged per round; one when absent.
        mixture: Option<usize>,
    },
    ConstantZero,
}

impl LearnerSpec {
    pub fn name(&self) -> &'static str {
        match self {
            LearnerSpec::Expweights { .. } => "expweights",
            LearnerSpec::Ftpl { .. } => "ftpl",
            LearnerSpec::ConstantZero => "constant_zero",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScriptedBatch {
    pub xs: Vec<usize>,
    pub ys: Vec<u8>,
    /// Batch positions charged in the fairness loss instead of the audit.
    pub pair: Option<[usize; 2]>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum EnvironmentSpec {
    UniformLabels {
        label_probs: Vec<f64>,
    },
    /// Rows `[p(x, 0), p(x, 1)]`.
    Joint {
        table: Vec<[f64; 2]>,
    },
    Scripted {
        batches: Vec<ScriptedBatch>,
    },
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> anyhow::Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| anyhow::anyhow!("invalid config: {e}"))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> anyhow::Result<(Self, String)> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let cfg = ExperimentConfig::parse(&text).with_context(|| format!("in {}", path.display()))?;
        Ok((cfg, text))
    }

    /// Checks every cross-reference by building each component once.
    pub fn validate(&self) -> anyhow::Result<()> {
        ensure!(!self.seeds.is_empty(), "seeds: at least one seed is required");
        let setup = Setup::new(self)?;
        setup.run_config(self.seeds[0]).validate(setup.class.universe_size())?;
        if let EnvironmentSpec::Scripted { batches } = &self.environment {
            ensure!(
                batches.len() >= self.run.rounds,
                "environment.scripted.batches: {} batches for {} rounds",
                batches.len(),
                self.run.rounds
            );
        }
        setup.environment(self.seeds[0])?;
        Ok(())
    }
}

/// Seed-independent pieces of an experiment.
#[derive(Clone, Debug)]
pub struct Setup {
    pub config: ExperimentConfig,
    pub class: Arc<HypothesisClass>,
    pub similarity: SimilarityFn,
    pub separator: SeparatorSet,
}

/// Per-seed stream separation for the environment and learner RNGs.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

const ENV_STREAM: u64 = 1;
const LEARNER_STREAM: u64 = 2;

impl Setup {
    pub fn new(config: &ExperimentConfig) -> anyhow::Result<Self> {
        let n = config.universe.size;
        let universe = match &config.universe.features {
            Some(f) => {
                ensure!(f.len() == n, "universe.features: {} rows for size {n}", f.len());
                Universe::with_features(f.clone())?
            }
            None => Universe::new(n)?,
        };
        let class = match &config.class {
            ClassSpec::Threshold => make_threshold_class(&universe),
            ClassSpec::Table(rows) => make_table_class(rows).context("class.table")?,
            ClassSpec::Random { size, seed } => {
                ensure!(*size >= 1, "class.random.size: must be at least 1");
                fairlab::fixtures::random_class(n, *size, *seed)
            }
        };
        ensure!(
            class.universe_size() == n,
            "class: hypotheses cover {} instances but universe.size is {n}",
            class.universe_size()
        );
        let similarity = match &config.similarity {
            SimilaritySpec::Table(t) => SimilarityFn::from_table(t.clone()).context("similarity.table")?,
            SimilaritySpec::Mahalanobis { matrix } => {
                let Some(features) = universe.features() else {
                    bail!("similarity.mahalanobis: universe.features is required");
                };
                SimilarityFn::mahalanobis(features, matrix).context("similarity.mahalanobis")?
            }
            SimilaritySpec::Random { seed, scale } => {
                ensure!(scale.is_finite() && *scale >= 0.0, "similarity.random.scale: must be nonnegative");
                SimilarityFn::random_nonmetric(n, *seed, *scale)
            }
            SimilaritySpec::Zero => SimilarityFn::zero(n),
        };
        ensure!(similarity.size() == n, "similarity: covers {} instances but universe.size is {n}", similarity.size());
        let separator = find_separator(&class);
        Ok(Setup { config: config.clone(), class: Arc::new(class), similarity, separator })
    }

    pub fn penalty(&self) -> u64 {
        let r = &self.config.run;
        r.penalty.unwrap_or_else(|| r.penalty_target.min_penalty(r.batch_size, r.epsilon))
    }

    pub fn run_config(&self, seed: u64) -> RunConfig {
        let r = &self.config.run;
        let mut rc = RunConfig::new(r.rounds, r.batch_size, r.alpha_prime, r.epsilon).with_seed(seed);
        rc.penalty = self.penalty();
        rc.penalty_target = r.penalty_target;
        rc.delta = r.delta;
        rc.dummy_instance = r.dummy_instance;
        rc.covering_q = r.covering_q;
        match &self.config.learner {
            LearnerSpec::Expweights { gamma } => rc.gamma = *gamma,
            LearnerSpec::Ftpl { omega, .. } => rc.omega = Some(omega.unwrap_or_else(|| self.default_omega())),
            LearnerSpec::ConstantZero => {}
        }
        rc
    }

    pub fn default_omega(&self) -> f64 {
        let r = &self.config.run;
        default_omega(self.separator.size(), r.batch_size, self.penalty(), r.rounds, self.class.len())
    }

    pub fn auditor(&self) -> anyhow::Result<Auditor> {
        Ok(Auditor::new(self.config.run.alpha_prime, self.config.auditor.tie_break, self.similarity.clone())?)
    }

    pub fn learner(&self, rc: &RunConfig) -> anyhow::Result<Box<dyn Learner>> {
        Ok(match &self.config.learner {
            LearnerSpec::Expweights { .. } => Box::new(ExpWeights::for_config(self.class.clone(), rc)?),
            LearnerSpec::Ftpl { perturbation, mixture, .. } => {
                let params = FtplParams {
                    omega: rc.omega.expect("set by run_config"),
                    perturbation: *perturbation,
                    mixture: *mixture,
                };
                Box::new(Ftpl::new(
                    self.class.clone(),
                    &self.separator,
                    rc.dummy_instance,
                    rc.inflated_len(),
                    params,
                    derive_seed(rc.seed, LEARNER_STREAM),
                )?)
            }
            LearnerSpec::ConstantZero => Box::new(
                ConstantZero::new(&self.class).context("learner.constant_zero: class has no constant-zero member")?,
            ),
        })
    }

    pub fn environment(&self, seed: u64) -> anyhow::Result<Box<dyn Environment + Send>> {
        let k = self.config.run.batch_size;
        let n = self.class.universe_size();
        let env_seed = derive_seed(seed, ENV_STREAM);
        Ok(match &self.config.environment {
            EnvironmentSpec::UniformLabels { label_probs } => {
                ensure!(
                    label_probs.len() == n,
                    "environment.uniform_labels.label_probs: {} entries for universe size {n}",
                    label_probs.len()
                );
                Box::new(StochasticEnv::uniform_labels(label_probs, k, env_seed)?)
            }
            EnvironmentSpec::Joint { table } => {
                ensure!(table.len() == n, "environment.joint.table: {} rows for universe size {n}", table.len());
                Box::new(StochasticEnv::new(JointDistribution::from_joint(table.clone())?, k, env_seed)?)
            }
            EnvironmentSpec::Scripted { batches } => {
                let mut bs = Vec::with_capacity(batches.len());
                let mut pairs = Vec::with_capacity(batches.len());
                for (i, b) in batches.iter().enumerate() {
                    let batch = Batch::new(b.xs.clone(), b.ys.clone())
                        .with_context(|| format!("environment.scripted.batches[{i}]"))?;
                    batch.check_universe(n).with_context(|| format!("environment.scripted.batches[{i}]"))?;
                    pairs.push(match b.pair {
                        Some([r1, r2]) => Some(
                            AuditOutcome::pair(r1, r2, batch.k())
                                .with_context(|| format!("environment.scripted.batches[{i}].pair"))?,
                        ),
                        None => None,
                    });
                    bs.push(batch);
                }
                Box::new(ScriptedEnv::with_pairs(bs, pairs)?)
            }
        })
    }
}
