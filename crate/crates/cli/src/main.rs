use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fraclab_cli::{accept, commands, CmdError, RunConfig};

/// Desk-scale laboratory for semilinear problems with singular absorption
/// and measure data: deterministic solves, capacity studies, stability
/// experiments and Monte Carlo cross-checks.
#[derive(Parser)]
#[command(name = "fraclab", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct RunArgs {
    /// Path to the TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides the config's `[output]` dir).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed override for the Monte Carlo section.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the semilinear problem and report the regularity bounds.
    Solve(RunArgs),
    /// Solve the two pure-power companions and the enveloped problem.
    Bracket(RunArgs),
    /// Point-capacity refinement study.
    Capacity(RunArgs),
    /// Measure-perturbation stability experiments (mode key in config).
    Stability(RunArgs),
    /// Cross-check a solve against the killed-walk estimator.
    McVerify(RunArgs),
    /// Run the full acceptance suite against a directory of reference configs.
    Accept {
        /// Directory containing the reference configs.
        #[arg(long = "config-dir")]
        config_dir: PathBuf,
        /// Output directory for artifacts and the verdict file.
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

fn load(args: &RunArgs) -> Result<(RunConfig, PathBuf), CmdError> {
    let mut cfg = RunConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        match cfg.mc.as_mut() {
            Some(mc) => mc.seed = seed,
            None => {
                return Err(CmdError::Config(
                    "--seed given but the config has no [mc] section".into(),
                ))
            }
        }
    }
    let out = args
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(&cfg.output.dir));
    Ok((cfg, out))
}

fn dispatch(cli: Cli) -> Result<(), CmdError> {
    match cli.command {
        Command::Solve(args) => {
            let (cfg, out) = load(&args)?;
            let summary = commands::cmd_solve(&cfg, &out)?;
            println!("{}", serde_json::to_string_pretty(&summary.json).unwrap());
            Ok(())
        }
        Command::Bracket(args) => {
            let (cfg, out) = load(&args)?;
            let summary = commands::cmd_bracket(&cfg, &out)?;
            println!("{}", serde_json::to_string_pretty(&summary.json).unwrap());
            Ok(())
        }
        Command::Capacity(args) => {
            let (cfg, out) = load(&args)?;
            let summary = commands::cmd_capacity(&cfg, &out)?;
            println!("{}", serde_json::to_string_pretty(&summary.json).unwrap());
            Ok(())
        }
        Command::Stability(args) => {
            let (cfg, out) = load(&args)?;
            let summary = commands::cmd_stability(&cfg, &out)?;
            println!("{}", serde_json::to_string_pretty(&summary.json).unwrap());
            Ok(())
        }
        Command::McVerify(args) => {
            let (cfg, out) = load(&args)?;
            let summary = commands::cmd_mc_verify(&cfg, &out)?;
            println!("{}", serde_json::to_string_pretty(&summary.json).unwrap());
            if !summary.all_pass {
                return Err(CmdError::Solver(
                    "monte carlo cross-check rejected the solution".into(),
                ));
            }
            Ok(())
        }
        Command::Accept { config_dir, out } => {
            let outcomes = accept::run_all(&config_dir, &out)?;
            if outcomes.iter().all(|o| o.pass) {
                println!("acceptance: all {} criteria passed", outcomes.len());
                Ok(())
            } else {
                let failed: Vec<String> = outcomes
                    .iter()
                    .filter(|o| !o.pass)
                    .map(|o| format!("{:02}", o.id))
                    .collect();
                Err(CmdError::Acceptance(format!(
                    "criteria failed: {}",
                    failed.join(", ")
                )))
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
