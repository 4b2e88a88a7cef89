//! Batch experiment runner: parse a config, dispatch to scheme + harness,
//! emit CSV/JSON reports and a one-line summary.

#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::type_complexity)]

mod config;
mod expr;
mod presets;
mod run;

use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "sdelab", version, about = "Convergence experiments for SDE/SPDE schemes with irregular coefficients")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a TOML config file.
    Run {
        /// Path to the experiment config.
        config: PathBuf,
        /// Override the config's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker thread count (default: SDELAB_THREADS or all cores).
        #[arg(long)]
        threads: Option<usize>,
        /// Output directory (default: the config's output.dir, else "out").
        #[arg(long)]
        out: Option<PathBuf>,
        /// Report format.
        #[arg(long, value_parser = ["csv", "json", "both"])]
        format: Option<String>,
        /// Run lattice configs that violate the stability bound.
        #[arg(long)]
        override_cfl: bool,
    },
    /// List the built-in coefficient presets.
    ListPresets,
}

fn main() -> ExitCode {
    match dispatch() {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(run::exit_code_for(&err) as u8)
        }
    }
}

fn dispatch() -> Result<String, sdelab_core::SimError> {
    let cli = Cli::parse();
    match cli.command {
        Command::ListPresets => Ok(presets::listing().trim_end().to_string()),
        Command::Run { config, seed, threads, out, format, override_cfl } => {
            let text = std::fs::read_to_string(&config)
                .map_err(|e| sdelab_core::SimError::Validation(format!("cannot read {}: {e}", config.display())))?;
            let mut cfg = config::ExperimentConfig::parse(&text)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(t) = threads {
                cfg.threads = Some(t);
            }
            if let Some(f) = format {
                cfg.output.format = match f.as_str() {
                    "csv" => config::OutputFormat::Csv,
                    "json" => config::OutputFormat::Json,
                    _ => config::OutputFormat::Both,
                };
            }
            if override_cfl {
                cfg.grid.override_cfl = true;
            }
            let plan = config::validate(&cfg)?;
            let out_dir = out
                .or_else(|| cfg.output.dir.as_ref().map(PathBuf::from))
                .unwrap_or_else(|| PathBuf::from("out"));
            let summary = run::execute(&plan, &out_dir)?;
            // drop the fully resolved config next to the reports
            std::fs::write(out_dir.join("config.resolved.toml"), cfg.to_toml())
                .map_err(|e| sdelab_core::SimError::Validation(format!("cannot write resolved config: {e}")))?;
            Ok(summary)
        }
    }
}
