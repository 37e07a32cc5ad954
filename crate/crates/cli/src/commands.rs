//! The `run`, `verify` and `sweep` subcommands.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{ensure, Context};
use fairlab::benchmark::{verify_bounds, BoundCheck, CHECK_TOLERANCE};
use fairlab::environments::{generalization_report, JointDistribution};
use fairlab::learners::{expweights_headline_bound, expweights_regret_bound, run_fair_online};
use fairlab::types::{RunConfig, RunTrace};
use rayon::prelude::*;

use crate::artifacts::{
    read_file, read_policies_csv, read_summary, read_trace_csv, seed_dir, trace_rows, write_policies_csv,
    write_trace_csv, Summary,
};
use crate::config::{ExperimentConfig, LearnerSpec, Setup};

pub const THREADS_ENV: &str = "FAIRLAB_THREADS";

/// Worker pool sized by `FAIRLAB_THREADS` when set.
pub fn thread_pool() -> anyhow::Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v.trim().parse().with_context(|| format!("{THREADS_ENV}={v:?} is not a thread count"))?;
        ensure!(n >= 1, "{THREADS_ENV} must be at least 1");
        b = b.num_threads(n);
    }
    Ok(b.build()?)
}

/// One seed's run, kept in memory.
pub struct SeedRun {
    pub seed: u64,
    pub config: RunConfig,
    pub trace: RunTrace,
    pub distribution: Option<JointDistribution>,
}

pub fn execute(setup: &Setup, seed: u64) -> anyhow::Result<SeedRun> {
    let rc = setup.run_config(seed);
    let mut learner = setup.learner(&rc)?;
    let mut env = setup.environment(seed)?;
    let mut auditor = setup.auditor()?;
    let trace = run_fair_online(&mut learner, &mut *env, &mut auditor, &setup.class, &rc)
        .with_context(|| format!("seed {seed}"))?;
    Ok(SeedRun { seed, config: rc, trace, distribution: env.distribution().cloned() })
}

/// Recomputes every report for a (possibly externally supplied) trace.
pub fn summarize(
    setup: &Setup,
    rc: &RunConfig,
    trace: &RunTrace,
    distribution: Option<&JointDistribution>,
) -> anyhow::Result<Summary> {
    let class = &setup.class;
    let regret = verify_bounds(class, trace)?;
    let (gamma, learner_bound) = match setup.config.learner {
        LearnerSpec::Expweights { .. } => {
            let gamma = rc.gamma_for(class.len());
            let range = rc.penalty_f64() + rc.batch_size as f64;
            let bound = expweights_regret_bound(class.len(), trace.len(), gamma, range);
            let check =
                BoundCheck::new("expweights_regret", regret.lagrangian_regret_vs_simplex, bound, CHECK_TOLERANCE);
            (Some(gamma), Some(check))
        }
        _ => (None, None),
    };
    let generalization = match distribution {
        Some(d) => Some(generalization_report(class, trace, Some(d), rc.covering_q(), rc.delta, &regret)?),
        None => None,
    };
    Ok(Summary {
        seed: rc.seed,
        learner: setup.config.learner.name().to_string(),
        separator_size: setup.separator.size(),
        penalty: rc.penalty,
        gamma,
        omega: rc.omega,
        regret,
        learner_bound,
        generalization,
        config: setup.config.clone(),
    })
}

fn create(path: &Path) -> anyhow::Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

pub fn write_seed_artifacts(dir: &Path, run: &SeedRun, summary: &Summary, log_policies: bool) -> anyhow::Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    write_trace_csv(create(&dir.join("trace.csv"))?, &trace_rows(&run.trace))?;
    std::fs::write(dir.join("summary.json"), summary_json(summary)?)?;
    if log_policies {
        write_policies_csv(create(&dir.join("policies.csv"))?, &run.trace)?;
    }
    Ok(())
}

/// The exact text of `summary.json`.
pub fn summary_json(summary: &Summary) -> serde_json::Result<String> {
    let mut s = serde_json::to_string_pretty(summary)?;
    s.push('\n');
    Ok(s)
}

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub log_policies: bool,
}

/// Runs every configured seed (or just `--seed`) and writes artifacts.
pub fn cmd_run(config_path: &Path, opts: &RunOptions) -> anyhow::Result<Vec<Summary>> {
    let (mut cfg, text) = ExperimentConfig::load(config_path)?;
    if let Some(s) = opts.seed {
        cfg.seeds = vec![s];
    }
    let out_dir = opts.out.clone().unwrap_or_else(|| cfg.out_dir.clone());
    let log_policies = opts.log_policies || cfg.log_policies;
    std::fs::create_dir_all(&out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    std::fs::write(out_dir.join("config.toml"), &text)?;
    let setup = Setup::new(&cfg)?;
    let pool = thread_pool()?;
    pool.install(|| {
        cfg.seeds
            .par_iter()
            .map(|&seed| {
                let run = execute(&setup, seed)?;
                let summary = summarize(&setup, &run.config, &run.trace, run.distribution.as_ref())?;
                write_seed_artifacts(&seed_dir(&out_dir, seed), &run, &summary, log_policies)?;
                Ok(summary)
            })
            .collect()
    })
}

/// One named verification outcome.
#[derive(Clone, Debug, PartialEq)]
pub struct VerifyLine {
    pub seed: u64,
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl std::fmt::Display for VerifyLine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let tag = if self.pass { "PASS" } else { "FAIL" };
        write!(f, "seed {} {tag} {}: {}", self.seed, self.name, self.detail)
    }
}

fn check_line(seed: u64, c: &BoundCheck) -> VerifyLine {
    VerifyLine { seed, name: c.name.clone(), pass: c.pass, detail: format!("lhs {:.9e} rhs {:.9e}", c.lhs, c.rhs) }
}

/// Replays each seed and checks the stored artifacts against it.
///
/// Errors (missing or unparsable files) are returned as `Err`; failed checks
/// come back as lines with `pass == false`.
pub fn cmd_verify(dir: &Path, seed: Option<u64>) -> anyhow::Result<Vec<VerifyLine>> {
    let (cfg, _) = ExperimentConfig::load(&dir.join("config.toml"))?;
    let seeds = seed.map_or_else(|| cfg.seeds.clone(), |s| vec![s]);
    let setup = Setup::new(&cfg)?;
    let mut lines = Vec::new();
    for seed in seeds {
        let sdir = seed_dir(dir, seed);
        let csv_path = sdir.join("trace.csv");
        let rows = read_trace_csv(&read_file(&csv_path)?[..], &csv_path)?;
        let summary_path = sdir.join("summary.json");
        read_summary(&summary_path)?;
        let stored = String::from_utf8_lossy(&read_file(&summary_path)?).into_owned();
        let replay = execute(&setup, seed)?;
        let expected = trace_rows(&replay.trace);

        let mismatch = if rows.len() != expected.len() {
            Some(format!("{} rows, replay has {}", rows.len(), expected.len()))
        } else {
            rows.iter()
                .zip(&expected)
                .position(|(a, b)| a.fields() != b.fields())
                .map(|i| format!("first mismatch at t = {}", i + 1))
        };
        lines.push(VerifyLine {
            seed,
            name: "trace_replay".into(),
            pass: mismatch.is_none(),
            detail: mismatch.unwrap_or_else(|| format!("{} rows identical", rows.len())),
        });

        // Recompute from the stored values laid over the replayed batches.
        let mut trace = replay.trace.clone();
        for (rec, row) in trace.records.iter_mut().zip(&rows) {
            rec.err = row.err;
            rec.unfair = row.unfair;
            rec.lagrangian = row.lagrangian;
            rec.audit = row.audit;
        }
        trace.records.truncate(rows.len());
        let policy_path = sdir.join("policies.csv");
        if policy_path.exists() {
            let policies = read_policies_csv(&read_file(&policy_path)?[..], &policy_path)?;
            let same =
                policies.len() == trace.len() && policies.iter().zip(&trace.records).all(|(p, r)| p == &r.policy);
            lines.push(VerifyLine {
                seed,
                name: "policy_log".into(),
                pass: same,
                detail: format!("{} logged policies", policies.len()),
            });
            for (rec, p) in trace.records.iter_mut().zip(policies) {
                rec.policy = p;
            }
        }
        let consistent = trace.check_consistency(&setup.class);
        lines.push(VerifyLine {
            seed,
            name: "trace_consistency".into(),
            pass: consistent.is_ok(),
            detail: consistent.err().unwrap_or_else(|| "losses match policies".into()),
        });
        if trace.is_empty() {
            continue;
        }
        let summary = summarize(&setup, &replay.config, &trace, replay.distribution.as_ref())?;
        let same = summary_json(&summary)? == stored;
        lines.push(VerifyLine {
            seed,
            name: "summary_recomputed".into(),
            pass: same,
            detail: if same { "summary.json matches".into() } else { "summary.json differs from recomputation".into() },
        });
        lines.extend(summary.regret.bound_checks.iter().map(|c| check_line(seed, c)));
        if let Some(b) = &summary.learner_bound {
            lines.push(check_line(seed, b));
        }
        if let Some(g) = &summary.generalization {
            lines.push(check_line(seed, &g.accuracy));
            lines.push(check_line(seed, &g.fairness));
            lines.push(check_line(seed, &g.bounded_sum_with_r));
            let mut literal = check_line(seed, &g.bounded_sum);
            if !g.r_nonnegative {
                literal.pass = true;
                literal.detail.push_str(" (not applicable: R < 0)");
            }
            lines.push(literal);
        }
    }
    Ok(lines)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub rounds: usize,
    pub cumulative_unfair: u64,
    pub misclass_regret: f64,
    pub bound: f64,
}

/// Closed-form regret bound for the configured learner at horizon `rounds`.
pub fn theoretical_bound(setup: &Setup, rounds: usize) -> f64 {
    let r = &setup.config.run;
    let h = setup.class.len();
    match setup.config.learner {
        LearnerSpec::Expweights { .. } => expweights_headline_bound(h, rounds, setup.penalty(), r.batch_size),
        LearnerSpec::Ftpl { .. } => {
            let s = setup.separator.size().max(1) as f64;
            14.0 * (s * r.batch_size as f64 / r.epsilon).powf(0.75) * (rounds as f64 * (h as f64).ln()).sqrt()
        }
        LearnerSpec::ConstantZero => f64::NAN,
    }
}

pub fn cmd_sweep(config_path: &Path, rounds: &[usize], seed: Option<u64>) -> anyhow::Result<Vec<SweepRow>> {
    let (cfg, _) = ExperimentConfig::load(config_path)?;
    let seed = seed.unwrap_or(cfg.seeds[0]);
    let pool = thread_pool()?;
    pool.install(|| {
        rounds
            .par_iter()
            .map(|&t| {
                let mut c = cfg.clone();
                c.run.rounds = t;
                c.validate().with_context(|| format!("T = {t}"))?;
                let setup = Setup::new(&c)?;
                let run = execute(&setup, seed)?;
                let report = verify_bounds(&setup.class, &run.trace)?;
                Ok(SweepRow {
                    rounds: t,
                    cumulative_unfair: report.cumulative_unfair,
                    misclass_regret: report.misclass_regret,
                    bound: theoretical_bound(&setup, t),
                })
            })
            .collect()
    })
}

pub fn write_sweep_csv<W: Write>(out: W, rows: &[SweepRow]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["T", "cumulative_unfair", "misclass_regret", "bound"])?;
    for r in rows {
        w.write_record([
            r.rounds.to_string(),
            r.cumulative_unfair.to_string(),
            crate::artifacts::fmt_f64(r.misclass_regret),
            crate::artifacts::fmt_f64(r.bound),
        ])?;
    }
    w.flush()?;
    Ok(())
}
