//! Command-line driver: `hotwall <simulate|rates|rare|nonldp|verify>`.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use hotwall_cli::commands::{self, Check};
use hotwall_cli::config::ExperimentConfig;
use hotwall_cli::output::Outputs;

#[derive(Parser)]
#[command(name = "hotwall", version, about = "Particle in a box with a hot wall: simulation, rates and rare events")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Experiment configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides the configured output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads; all cores when absent.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Trajectory, histogram and LLN distance curve.
    Simulate,
    /// ξ, ξ̄ and the I / Ī tables over a grid of measures.
    Rates,
    /// Slope estimates, entropy costs, tightness and free-energy checks.
    Rare,
    /// Matched and mismatched subsequences for the ball A^{α,ℓ}.
    Nonldp,
    /// The full acceptance suite.
    Verify,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Self::Simulate => "simulate",
            Self::Rates => "rates",
            Self::Rare => "rare",
            Self::Nonldp => "nonldp",
            Self::Verify => "verify",
        }
    }
}

fn run(cli: &Cli) -> anyhow::Result<Vec<Check>> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    let mut out = Outputs::default();
    let loaded = match &cli.config {
        Some(path) => {
            let mut cfg = ExperimentConfig::load(path).map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))?;
            if let Some(s) = cli.seed {
                cfg.seed = s;
            }
            Some(cfg)
        }
        None => None,
    };
    let (checks, seed, dir, src) = match (cli.command, &loaded) {
        (Command::Verify, _) => {
            let seed = cli.seed.or(loaded.as_ref().map(|c| c.seed)).unwrap_or(20240611);
            let dir = loaded.as_ref().map_or_else(|| PathBuf::from("out"), |c| PathBuf::from(&c.out_dir));
            (commands::run_verify(seed, &mut out)?, seed, dir, loaded.as_ref().map(|c| c.emit()))
        }
        (cmd, None) => anyhow::bail!("{} needs --config", cmd.name()),
        (cmd, Some(cfg)) => {
            let checks = match cmd {
                Command::Simulate => commands::run_simulate(cfg, &mut out)?,
                Command::Rates => commands::run_rates(cfg, &mut out)?,
                Command::Rare => commands::run_rare(cfg, &mut out)?,
                Command::Nonldp => commands::run_nonldp(cfg, &mut out)?,
                Command::Verify => unreachable!(),
            };
            (checks, cfg.seed, PathBuf::from(&cfg.out_dir), Some(cfg.emit()))
        }
    };
    out.json("checks.json", &checks)?;
    let dir = cli.out.clone().unwrap_or(dir);
    let manifest = out.write(&dir, cli.command.name(), seed, src.as_deref())?;
    eprintln!("wrote {}", manifest.display());
    Ok(checks)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(checks) => {
            for c in &checks {
                println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            if checks.iter().all(|c| c.passed) {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
