use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fairlab_cli::commands::{cmd_run, cmd_sweep, cmd_verify, write_sweep_csv, RunOptions};

#[derive(Parser)]
#[command(name = "fairlab", version, about = "Individually fair online classification with a simulated auditor")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write per-seed artifacts.
    Run {
        config: PathBuf,
        /// Run only this seed instead of the configured list.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory (overrides `out_dir`).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write the deployed policy of every round.
        #[arg(long)]
        log_policies: bool,
    },
    /// Replay a run directory and recheck every stored number and bound.
    Verify {
        dir: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run one seed at several horizons and tabulate regret against the bound.
    Sweep {
        config: PathBuf,
        /// Comma-separated horizons.
        #[arg(long = "t", value_delimiter = ',', num_args = 0..)]
        rounds: Vec<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Write the CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(command: Command) -> anyhow::Result<bool> {
    match command {
        Command::Run { config, seed, out, log_policies } => {
            let summaries = cmd_run(&config, &RunOptions { seed, out, log_policies })?;
            for s in &summaries {
                let r = &s.regret;
                println!(
                    "seed {}: T={} err={:.4} unfair={} misclass_regret={:.4} checks={}",
                    s.seed,
                    r.rounds,
                    r.cumulative_err,
                    r.cumulative_unfair,
                    r.misclass_regret,
                    if s.all_pass() { "pass" } else { "FAIL" }
                );
            }
            Ok(true)
        }
        Command::Verify { dir, seed } => {
            let lines = cmd_verify(&dir, seed)?;
            for l in &lines {
                println!("{l}");
            }
            Ok(lines.iter().all(|l| l.pass))
        }
        Command::Sweep { config, rounds, seed, out } => {
            let rows = cmd_sweep(&config, &rounds, seed)?;
            match out {
                Some(p) => write_sweep_csv(std::fs::File::create(&p)?, &rows)?,
                None => {
                    let stdout = std::io::stdout();
                    let mut lock = stdout.lock();
                    write_sweep_csv(&mut lock, &rows)?;
                    lock.flush()?;
                }
            }
            Ok(true)
        }
    }
}
