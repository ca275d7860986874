use std::path::PathBuf;
use std::process::ExitCode;

use brlab_core::harness::{run, validate, Experiment, ExperimentConfig};
use brlab_core::Error;
use clap::Parser;

/// Runs one brlab experiment from a flat `key = value` config file.
#[derive(Debug, Parser)]
#[command(name = "brlab", version)]
struct Cli {
    /// decompose | kernel-decay | omega | atoms | weak-type | lp-bound | lemma-checks
    experiment: String,
    #[arg(long)]
    config: PathBuf,
    /// Output directory; defaults to the config's `out` or `runs/<experiment>-<hash>`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the config's base seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, env = "BRLAB_THREADS")]
    threads: Option<usize>,
}

const VALIDATION: u8 = 2;
const RUNTIME: u8 = 1;

fn fail(code: u8, msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("brlab: {msg}");
    ExitCode::from(code)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let experiment: Experiment = match cli.experiment.parse() {
        Ok(e) => e,
        Err(e) => return fail(VALIDATION, e),
    };
    let mut config = match ExperimentConfig::load(&cli.config) {
        Ok(c) => c,
        Err(Error::Io(e)) => return fail(VALIDATION, format!("cannot read {}: {e}", cli.config.display())),
        Err(e) => return fail(VALIDATION, e),
    };
    match config.experiment {
        Some(e) if e != experiment => {
            return fail(VALIDATION, format!("config is for '{e}', command line asked for '{experiment}'"))
        }
        _ => config.experiment = Some(experiment),
    }
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    let violations = validate(&config);
    if !violations.is_empty() {
        for v in &violations {
            eprintln!("violation: {v}");
        }
        return fail(VALIDATION, format!("{} violation(s); nothing was run", violations.len()));
    }
    if let Some(k) = cli.threads {
        if k == 0 {
            return fail(VALIDATION, "--threads must be at least 1");
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(k).build_global() {
            return fail(RUNTIME, e);
        }
    }
    let out = cli
        .out
        .or_else(|| config.out.clone())
        .unwrap_or_else(|| PathBuf::from("runs").join(format!("{experiment}-{}", &config.hash()[..12])));
    match run(&config, &out) {
        Ok(record) => {
            println!("{} -> {}", experiment, out.display());
            for a in &record.artifacts {
                println!("  {}  {}", a.sha256, a.path);
            }
            println!("wall time {:.2} s", record.wall_time_s);
            ExitCode::SUCCESS
        }
        Err(e @ Error::Config(_)) => fail(VALIDATION, e),
        Err(e) => fail(RUNTIME, e),
    }
}
