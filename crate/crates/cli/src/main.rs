mod config;
mod expr;
mod runs;
mod table;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde_json::json;

use config::ExperimentConfig;
use runs::{Failure, Outcome};
use table::write_atomic;

#[derive(Parser)]
#[command(name = "qimex", version, about = "Run Schrodingerized IMEX experiments from JSON configs")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    /// Seed for random ensembles; overrides the config's seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one experiment.
    Run {
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a front-end problem for every value in `epsilons`.
    Sweep {
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

const EXIT_INVALID: u8 = 1;
const EXIT_NUMERICAL: u8 = 2;

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(EXIT_INVALID);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot start thread pool: {e}");
            return ExitCode::from(EXIT_INVALID);
        }
    }
    let (path, out, is_sweep) = match &cli.cmd {
        Cmd::Run { config, out } => (config, out, false),
        Cmd::Sweep { config, out } => (config, out, true),
    };
    let mut cfg = match ExperimentConfig::load(path) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_INVALID);
        }
    };
    if cli.seed.is_some() {
        cfg.seed = cli.seed;
    }
    let start = Instant::now();
    let res = if is_sweep { runs::sweep(&cfg) } else { runs::run(&cfg) };
    match res {
        Ok(o) => match write_outcome(out, &cfg, o, start) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(EXIT_NUMERICAL)
            }
        },
        Err(Failure::Invalid(msg)) => {
            eprintln!("validation error: {msg}");
            ExitCode::from(EXIT_INVALID)
        }
        Err(Failure::Numerical(msg)) => {
            eprintln!("numerical failure: {msg}");
            let diag = json!({
                "schema": 1,
                "status": "numerical-failure",
                "message": msg,
                "config": cfg,
                "version": qimex::VERSION,
            });
            let bytes = serde_json::to_vec_pretty(&diag).unwrap_or_default();
            if let Err(e) = write_atomic(&out.join("diagnostic.json"), &bytes) {
                eprintln!("error: {e}");
            }
            ExitCode::from(EXIT_NUMERICAL)
        }
    }
}

fn write_outcome(out: &Path, cfg: &ExperimentConfig, o: Outcome, start: Instant) -> Result<(), String> {
    for (name, t) in &o.tables {
        write_atomic(&out.join(name), &t.to_bytes()?)?;
    }
    let report = json!({
        "schema": 1,
        "status": "ok",
        "kind": cfg.kind.name(),
        "config": cfg,
        "files": o.tables.iter().map(|(n, _)| n.clone()).collect::<Vec<_>>(),
        "result": o.report,
        "wall_clock_s": start.elapsed().as_secs_f64(),
        "version": { "qimex": qimex::VERSION, "cli": env!("CARGO_PKG_VERSION") },
    });
    let bytes = serde_json::to_vec_pretty(&report).map_err(|e| e.to_string())?;
    write_atomic(&out.join("report.json"), &bytes)
}
