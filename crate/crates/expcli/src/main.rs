use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Parser, ValueEnum};
use lse_expcli::{run, ExperimentConfig, Mode};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Command {
    Replica,
    Sweep,
    Simulate,
    Compare,
    Calibrate,
    Saving,
    Plot,
}

impl From<Command> for Mode {
    fn from(c: Command) -> Self {
        match c {
            Command::Replica => Mode::Replica,
            Command::Sweep => Mode::Sweep,
            Command::Simulate => Mode::Simulate,
            Command::Compare => Mode::Compare,
            Command::Calibrate => Mode::Calibrate,
            Command::Saving => Mode::Saving,
            Command::Plot => Mode::Plot,
        }
    }
}

/// Replica analysis and finite-size simulation of LSE precoders.
#[derive(Debug, Parser)]
#[command(name = "lse", version, about)]
struct Cli {
    #[arg(value_enum)]
    mode: Command,
    /// Experiment configuration (TOML); a previous run's manifest.toml works too.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a configuration key, e.g. `--set simulation.n=200`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Output directory, created if missing.
    #[arg(long)]
    out: PathBuf,
    /// Master seed of the simulation; overrides simulation.seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; results do not depend on this.
    #[arg(long)]
    threads: Option<usize>,
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let mut overrides = cli.set.clone();
    if let Some(seed) = cli.seed {
        overrides.push(format!("simulation.seed={seed}"));
    }
    let cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path, &overrides),
        None => ExperimentConfig::resolve("", &overrides),
    }
    .context("reading configuration")?;
    if let Some(k) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
            .context("starting thread pool")?;
    }
    let mode = Mode::from(cli.mode);
    let out = run::run(mode, &cfg, &cli.out).with_context(|| format!("{mode} run"))?;
    print!("{}", out.summary);
    for f in &out.files {
        println!("wrote {}", f.display());
    }
    Ok(())
}
