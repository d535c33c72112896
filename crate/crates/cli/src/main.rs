//! `shadowlab`: runs experiment configs and writes report JSON and CSV.
//!
//! Exit status: 0 when every run is free of tolerance misses, 2 when some run
//! missed a tolerance (its report is still written), 1 on any error.

mod config;
mod experiments;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand};
use serde_json::json;
use thiserror::Error;

use config::Plan;
use output::{Artifacts, Cache};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config schema: {0}")]
    ConfigSchema(String),
    #[error("unknown experiment {0:?}")]
    UnknownExperiment(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("experiment failed: {0}")]
    Experiment(String),
}

#[derive(Parser)]
#[command(name = "shadowlab", version, about = "Shadowing and entropy experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiments of a config file
    Run {
        config: PathBuf,
        /// output directory (overrides the config's `output`)
        #[arg(long)]
        out: Option<PathBuf>,
        /// seed (overrides the config's `seed`)
        #[arg(long)]
        seed: Option<u64>,
        /// experiments run concurrently in a batch
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// directory of memoized results
        #[arg(long, env = "SHADOWLAB_CACHE")]
        cache: Option<PathBuf>,
    },
    /// Check a config file without running it
    Validate { config: PathBuf },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Status {
    Ok,
    Misses,
    Failed,
}

impl Status {
    fn code(self) -> ExitCode {
        match self {
            Status::Ok => ExitCode::SUCCESS,
            Status::Misses => ExitCode::from(2),
            Status::Failed => ExitCode::from(1),
        }
    }
}

fn unix_seconds() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

fn plans(path: &Path, seed: Option<u64>) -> Result<Vec<Plan>, CliError> {
    config::load(path)?.iter().map(|c| c.plan(seed)).collect()
}

// runs one plan into `dir`; returns the number of tolerance misses
fn execute(plan: &Plan, dir: &Path, cache: Option<&Cache>, config_path: &Path) -> Result<usize, CliError> {
    let started = unix_seconds();
    let clock = Instant::now();
    let key = Cache::key(plan);
    let cached = cache.and_then(|c| c.get(&key));
    let hit = cached.is_some();
    let art = match cached {
        Some(a) => a,
        None => {
            let outcome = experiments::run(plan)?;
            let art = Artifacts {
                report: output::report_json(plan, &outcome),
                csv: output::table_csv(&outcome.table, plan.seed)?,
                misses: outcome.misses.len(),
            };
            if let Some(c) = cache {
                c.put(&key, &art)?;
            }
            art
        }
    };
    let metadata = json!({
        "experiment": plan.experiment,
        "seed": plan.seed,
        "config": config_path.display().to_string(),
        "started_unix": started,
        "finished_unix": unix_seconds(),
        "elapsed_ms": clock.elapsed().as_millis() as u64,
        "cache_key": key,
        "cache_hit": hit,
        "version": output::VERSION,
    });
    output::write(dir, &art, &metadata)?;
    Ok(art.misses)
}

fn run(config: &Path, out: Option<PathBuf>, seed: Option<u64>, jobs: usize, cache: Option<PathBuf>) -> Result<Status, CliError> {
    let plans = plans(config, seed)?;
    let cache = cache.map(Cache::new);
    let batch = plans.len() > 1;
    let dir_for = |i: usize, plan: &Plan| {
        let base = out.clone().or_else(|| plan.output.clone()).unwrap_or_else(|| PathBuf::from("out"));
        if batch {
            base.join(format!("{i:03}-{}", plan.experiment))
        } else {
            base
        }
    };
    let next = AtomicUsize::new(0);
    let results = Mutex::new(vec![Status::Ok; plans.len()]);
    std::thread::scope(|s| {
        for _ in 0..jobs.clamp(1, plans.len()) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(plan) = plans.get(i) else { break };
                let status = match execute(plan, &dir_for(i, plan), cache.as_ref(), config) {
                    Ok(0) => Status::Ok,
                    Ok(n) => {
                        eprintln!("{}: {n} tolerance misses", plan.experiment);
                        Status::Misses
                    }
                    Err(e) => {
                        eprintln!("{}: {e}", plan.experiment);
                        Status::Failed
                    }
                };
                results.lock().expect("status lock")[i] = status;
            });
        }
    });
    let statuses = results.into_inner().expect("status lock");
    for (i, (plan, st)) in plans.iter().zip(&statuses).enumerate() {
        println!("{} -> {} ({st:?})", plan.experiment, dir_for(i, plan).display());
    }
    Ok(statuses.into_iter().max().unwrap_or(Status::Ok))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config, out, seed, jobs, cache } => run(&config, out, seed, jobs, cache),
        Command::Validate { config } => plans(&config, None).map(|ps| {
            for p in &ps {
                println!("ok: {} (seed {})", p.experiment, p.seed);
            }
            Status::Ok
        }),
    };
    match result {
        Ok(st) => st.code(),
        Err(e) => {
            eprintln!("error: {e}");
            Status::Failed.code()
        }
    }
}
