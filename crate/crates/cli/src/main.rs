use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use wmac_formation::SimConfig;
use wmac_formation_cli::{config, emit_outputs, matrix, preset, run_sweep, CliError};

const EXIT_NOT_CONVERGED: u8 = 2;
const EXIT_CONFIG: u8 = 3;

#[derive(Parser)]
#[command(name = "wmac-formation", version, about = "Formation control over a fading multiple-access channel")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one configuration and write trajectory.csv, metrics.json, config.toml.
    Run {
        #[command(flatten)]
        source: Source,
        /// Output directory.
        #[arg(long, env = "WMAC_FORMATION_OUT_DIR", default_value = "out")]
        out: PathBuf,
    },
    /// Run a preset or config over a range of seeds.
    Sweep {
        #[command(flatten)]
        source: Source,
        #[arg(long, default_value_t = 100)]
        seeds: u64,
        #[arg(long, default_value_t = 0)]
        first_seed: u64,
        /// Count runs converged by this round.
        #[arg(long, default_value_t = 10)]
        by_round: usize,
        #[arg(long, env = "WMAC_FORMATION_OUT_DIR", default_value = "out")]
        out: PathBuf,
    },
    /// Report row-stochasticity, irreducibility and primitivity of a matrix file.
    Certify {
        file: PathBuf,
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
    },
    /// Print a preset as TOML.
    Preset {
        name: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Args)]
struct Source {
    /// Built-in preset name (hexagon6).
    #[arg(long, required_unless_present = "config", conflicts_with = "config")]
    preset: Option<String>,
    /// TOML configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override the seed.
    #[arg(long)]
    seed: Option<u64>,
}

impl Source {
    fn resolve(&self) -> Result<SimConfig, CliError> {
        let mut c = match (&self.preset, &self.config) {
            (Some(name), _) => preset(name, 0)?,
            (None, Some(path)) => config::load_config(path)?,
            (None, None) => unreachable!("clap enforces one source"),
        };
        if let Some(seed) = self.seed {
            c.seed = seed;
        }
        config::check(&c)?;
        Ok(c)
    }
}

fn execute(cli: Cli) -> Result<ExitCode, CliError> {
    match cli.command {
        Command::Run { source, out } => {
            let c = source.resolve()?;
            let result = wmac_formation::run(&c)?;
            emit_outputs(&result.trace, &result.costs, &c, &out)?;
            match result.trace.converged_round {
                Some(k) => {
                    println!("converged at round {k}; outputs in {}", out.display());
                    Ok(ExitCode::SUCCESS)
                }
                None => {
                    eprintln!("not converged after {} rounds; outputs in {}", result.trace.rounds.len(), out.display());
                    Ok(ExitCode::from(EXIT_NOT_CONVERGED))
                }
            }
        }
        Command::Sweep { source, seeds, first_seed, by_round, out } => {
            let c = source.resolve()?;
            let list: Vec<u64> = (0..seeds).map(|i| first_seed + i).collect();
            for &s in &list {
                if s > config::MAX_SEED {
                    return Err(CliError::Config(format!("seed {s} exceeds {}", config::MAX_SEED)));
                }
            }
            let summary = run_sweep(&c, &list, by_round, Some(&out))?;
            let median = summary.median_converged_round.map_or_else(|| "n/a".to_string(), |m| m.to_string());
            println!(
                "{}/{} converged, {} by round {}, median round {median}",
                summary.converged, summary.seeds, summary.converged_by_round, by_round
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Certify { file, tol } => {
            let m = matrix::load_matrix(&file)?;
            let cert = wmac_formation::certify(&m, tol)?;
            let text = serde_json::to_string_pretty(&cert).map_err(|e| CliError::Serialize(e.to_string()))?;
            println!("{text}");
            Ok(ExitCode::SUCCESS)
        }
        Command::Preset { name, seed } => {
            print!("{}", config::to_toml_string(&preset(&name, seed)?)?);
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_config_error() {
                ExitCode::from(EXIT_CONFIG)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
