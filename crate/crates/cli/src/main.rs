//! Argument parsing and process-level wiring for the `pulsevo` binary.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use pulsevo_cli::commands::{self, NoiseFlags, Overrides};
use pulsevo_cli::{CliError, CliResult};

#[derive(Parser)]
#[command(
    name = "pulsevo",
    version,
    about = "Evolutionary discovery of control pulses for cavity-coupled qubit registers"
)]
struct Cli {
    /// Master RNG seed override (optimize only).
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads for population evaluation (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Output root directory (default: $PULSEVO_OUT, then `runs`).
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the genetic optimizer on a config file and write a result bundle.
    Optimize {
        /// Run configuration file (TOML).
        config: PathBuf,
        /// Generation budget override.
        #[arg(long)]
        generations: Option<usize>,
    },
    /// Re-propagate a bundle and export fidelity, control, witness and
    /// detection-region series.
    Evaluate {
        /// Bundle directory written by `optimize`.
        bundle: PathBuf,
        /// Also evaluate the collective-spin witness with this bound.
        #[arg(long, value_name = "BOUND")]
        spin_witness: Option<f64>,
    },
    /// Re-propagate a bundle under decoherence and report fidelity losses.
    Noise {
        /// Bundle directory written by `optimize`.
        bundle: PathBuf,
        /// Cavity decay rate, rad/ns.
        #[arg(long)]
        kappa: Option<f64>,
        /// Per-qubit decay rate, rad/ns.
        #[arg(long)]
        gamma: Option<f64>,
        /// Per-qubit pure-dephasing rate, rad/ns.
        #[arg(long)]
        gamma_phi: Option<f64>,
        /// Start from literature superconducting-hardware rates
        /// (cavity 5 kHz, qubit decay 5 MHz, dephasing 300 kHz).
        #[arg(long)]
        typical_rates: bool,
    },
    /// Check a config file (and optionally a chromosome file) and print the
    /// normalized configuration.
    Validate {
        /// Run configuration file (TOML).
        config: PathBuf,
        /// Chromosome file to check against the config's layout.
        #[arg(long, value_name = "FILE")]
        chromosome: Option<PathBuf>,
    },
}

fn real_main(cli: Cli) -> CliResult<()> {
    if let Some(threads) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CliError::Internal(format!("thread pool: {e}")))?;
    }
    let out_root = commands::output_root(cli.out.as_deref());
    match cli.command {
        Command::Optimize { config, generations } => {
            let overrides = Overrides { seed: cli.seed, generations };
            let outcome = commands::cmd_optimize(&config, &overrides, &out_root)?;
            let report = &outcome.result.best_report;
            println!(
                "{} seed {}: best fidelity {:.6} at t = {:.4} ns (total {:+.6}, {} generations) -> {}",
                outcome.problem_name,
                outcome.seed,
                report.fidelity_at_tmax,
                report.t_max,
                report.total,
                outcome.result.generations_run,
                outcome.dir.display()
            );
        }
        Command::Evaluate { bundle, spin_witness } => {
            let summary = commands::cmd_evaluate(&bundle, spin_witness)?;
            println!(
                "re-evaluated {}: fidelity {:.6} at t = {:.4} ns (round-trip gap {:.3e})",
                summary.dir.display(),
                summary.fidelity_at_tmax,
                summary.t_max_ns,
                summary.round_trip_gap
            );
            for (name, count) in &summary.region_counts {
                println!("witness {name}: {count} detection region(s)");
            }
        }
        Command::Noise { bundle, kappa, gamma, gamma_phi, typical_rates } => {
            let flags = NoiseFlags { kappa, gamma, gamma_phi, typical: typical_rates };
            let summary = commands::cmd_noise(&bundle, &flags)?;
            println!(
                "noiseless maximum fidelity {:.6} ({})",
                summary.noiseless_max,
                summary.dir.display()
            );
            for case in &summary.cases {
                println!(
                    "{}: max fidelity {:.6} (drop {:+.6})",
                    case.label, case.max_fidelity, case.drop
                );
            }
        }
        Command::Validate { config, chromosome } => {
            let normalized = commands::cmd_validate(&config, chromosome.as_deref())?;
            print!("{normalized}");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    match real_main(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
