//! Implementations of the four subcommands, decoupled from argument parsing
//! so integration tests can call them in-process.

use std::path::{Path, PathBuf};

use log::{info, warn};

use pulsevo::units::{angular_from_khz, angular_from_mhz};
use pulsevo::witnesses::{
    FIDELITY_BOUND_BOX_CLUSTER4, FIDELITY_BOUND_DICKE3_2, FIDELITY_BOUND_GHZ_CLASS,
    FIDELITY_BOUND_GHZ_GME,
};
use pulsevo::{
    collective_spin_witness_value, control_value, decode_chromosome, evolve_closed,
    evolve_lindblad_with, fidelity_trace, gme_regions, register_density_from_state,
    register_fidelity_of_rho, report_from_trajectory, run, DensityMatrix, FitnessReport,
    GenerationStats, NoiseConfig, ObserverAction, OptimizationResult, ProgressObserver,
    TargetLabel,
};

use crate::bundle::{
    bundle_dir, control_names, load_chromosome, load_manifest, write_csv, write_optimize_bundle,
};
use crate::config_file::RunConfig;
use crate::{CliError, CliResult};

pub const CONTROLS_FILE: &str = "controls.csv";
pub const WITNESS_FILE: &str = "witness.csv";
pub const REGIONS_FILE: &str = "regions.csv";
pub const NOISE_TRACES_FILE: &str = "noise_traces.csv";
pub const NOISE_REPORT_FILE: &str = "noise_report.txt";

/// Environment variable overriding the default output root.
pub const OUT_ENV_VAR: &str = "PULSEVO_OUT";

/// Output root resolution: explicit flag, then environment, then `runs`.
pub fn output_root(flag: Option<&Path>) -> PathBuf {
    if let Some(p) = flag {
        return p.to_path_buf();
    }
    match std::env::var(OUT_ENV_VAR) {
        Ok(v) if !v.is_empty() => PathBuf::from(v),
        _ => PathBuf::from("runs"),
    }
}

/// Command-line overrides applied on top of the config file.
#[derive(Debug, Default, Clone, Copy)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub generations: Option<usize>,
}

/// Periodic progress logging through the `log` facade.
pub struct LogObserver {
    pub every: usize,
}

impl ProgressObserver for LogObserver {
    fn on_generation(&mut self, stats: &GenerationStats, best: &FitnessReport) -> ObserverAction {
        if self.every > 0 && stats.generation % self.every == 0 {
            info!(
                "generation {:5}  best total {:+.6}  best fidelity {:.6}  mean total {:+.6}",
                stats.generation, stats.best_total, best.fidelity_at_tmax, stats.mean_total
            );
        }
        ObserverAction::Continue
    }
}

pub struct OptimizeOutcome {
    pub dir: PathBuf,
    pub problem_name: String,
    pub seed: u64,
    pub result: OptimizationResult,
}

/// Runs the optimizer for a config file and writes the result bundle.
pub fn cmd_optimize(
    config_path: &Path,
    overrides: &Overrides,
    out_root: &Path,
) -> CliResult<OptimizeOutcome> {
    let mut config = RunConfig::load(config_path)?;
    if let Some(seed) = overrides.seed {
        config.ga.seed = seed;
    }
    if let Some(generations) = overrides.generations {
        config.ga.max_generations = generations;
    }
    let problem = config.problem()?;
    let ga = config.ga_config()?;
    info!(
        "optimizing `{}`: {} genes, population {}, up to {} generations, seed {}",
        config.problem,
        problem.system.n_var(),
        ga.n_pop,
        ga.max_generations,
        ga.seed
    );
    let mut observer = LogObserver { every: 25 };
    let result = run(&problem, &ga, &mut observer)?;
    let dir = bundle_dir(out_root, &config.problem, ga.seed);
    write_optimize_bundle(&dir, &config, &problem, &result)?;
    Ok(OptimizeOutcome { dir, problem_name: config.problem.clone(), seed: ga.seed, result })
}

/// Fidelity-witness columns for a built-in target: (label, bi-separable bound).
fn fidelity_witness_columns(label: TargetLabel) -> Vec<(&'static str, f64)> {
    match label {
        TargetLabel::Ghz3 => {
            vec![("gme", FIDELITY_BOUND_GHZ_GME), ("ghz_class", FIDELITY_BOUND_GHZ_CLASS)]
        }
        TargetLabel::Dicke3_2 => vec![("gme", FIDELITY_BOUND_DICKE3_2)],
        TargetLabel::BoxCluster4 => vec![("gme", FIDELITY_BOUND_BOX_CLUSTER4)],
        TargetLabel::Custom => vec![],
    }
}

pub struct EvalSummary {
    pub dir: PathBuf,
    pub fidelity_at_tmax: f64,
    pub t_max_ns: f64,
    /// |re-evaluated − recorded| fidelity at the maximum; should be ≤ 1e-9.
    pub round_trip_gap: f64,
    /// Number of detection regions per witness column.
    pub region_counts: Vec<(String, usize)>,
}

/// Re-propagates a bundle's schedule and writes fidelity, witness, control and
/// detection-region files next to it.
pub fn cmd_evaluate(dir: &Path, spin_bound: Option<f64>) -> CliResult<EvalSummary> {
    let manifest = load_manifest(dir)?;
    let config = &manifest.config;
    let problem = config.problem()?;
    let cfg = &problem.system;
    let chromosome = load_chromosome(dir, cfg.n_var())?;
    let schedule = decode_chromosome(&chromosome, cfg, &problem.shape)?;
    let traj = evolve_closed(&problem.fitness.initial_state, &schedule, cfg)?;
    let report = report_from_trajectory(&traj, &problem.fitness, cfg)?;
    let times = traj.times();
    let fid = &report.fidelity_trace;

    let round_trip_gap = (report.fidelity_at_tmax - manifest.result.best_fidelity_at_tmax).abs();
    if round_trip_gap > 1e-9 {
        warn!(
            "re-evaluated fidelity {} differs from recorded {} by {round_trip_gap:e}",
            report.fidelity_at_tmax, manifest.result.best_fidelity_at_tmax
        );
    }

    let mut control_rows = Vec::with_capacity(times.len());
    for &t in times {
        let mut row = format!("{t}");
        for k in 0..cfg.n_controls() {
            let v = control_value(&schedule, k, t)?;
            row.push(',');
            row.push_str(&format!("{v}"));
        }
        control_rows.push(row);
    }
    let mut controls_header = String::from("t_ns");
    for name in control_names(cfg.n_qubits) {
        controls_header.push(',');
        controls_header.push_str(&name);
        controls_header.push_str("_rad_per_ns");
    }
    write_csv(&dir.join(CONTROLS_FILE), &controls_header, control_rows)?;

    let label = config.target_label()?;
    let fid_witnesses = fidelity_witness_columns(label);

    // Collective-spin expectation Tr(rho (Jx^2 + Jy^2)) per step, if requested.
    let spin_expectation: Option<Vec<f64>> = match spin_bound {
        Some(b_s) => {
            if !(b_s > 0.0 && b_s.is_finite()) {
                return Err(CliError::config("spin witness bound must be positive"));
            }
            let states = traj.closed_states().expect("closed propagation yields states");
            let mut series = Vec::with_capacity(states.len());
            for state in states {
                let rho_reg = register_density_from_state(state, cfg)?;
                let w = collective_spin_witness_value(&rho_reg, b_s, cfg.n_qubits)?;
                series.push(b_s - w);
            }
            Some(series)
        }
        None => None,
    };

    let mut witness_header = String::from("t_ns,fidelity");
    for (name, _) in &fid_witnesses {
        witness_header.push_str(",witness_");
        witness_header.push_str(name);
    }
    if spin_expectation.is_some() {
        witness_header.push_str(",witness_spin");
    }
    let witness_rows: Vec<String> = times
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let mut row = format!("{t},{}", fid[i]);
            for &(_, bound) in &fid_witnesses {
                row.push(',');
                row.push_str(&format!("{}", bound - fid[i]));
            }
            if let Some(series) = &spin_expectation {
                let b_s = spin_bound.expect("bound present when series is");
                row.push(',');
                row.push_str(&format!("{}", b_s - series[i]));
            }
            row
        })
        .collect();
    write_csv(&dir.join(WITNESS_FILE), &witness_header, witness_rows)?;

    let mut region_counts = Vec::new();
    let mut region_rows = Vec::new();
    let mut push_regions = |name: &str, trace: &[f64], bound: f64| {
        let regions = gme_regions(times, trace, bound);
        for (k, r) in regions.iter().enumerate() {
            region_rows.push(format!(
                "{name},{k},{},{},{},{}",
                r.start_index, r.end_index, r.t_start, r.t_end
            ));
        }
        region_counts.push((name.to_string(), regions.len()));
    };
    for &(name, bound) in &fid_witnesses {
        push_regions(name, fid, bound);
    }
    if let Some(series) = &spin_expectation {
        push_regions("spin", series, spin_bound.expect("bound present when series is"));
    }
    write_csv(
        &dir.join(REGIONS_FILE),
        "witness,region,start_index,end_index,t_start_ns,t_end_ns",
        region_rows,
    )?;

    Ok(EvalSummary {
        dir: dir.to_path_buf(),
        fidelity_at_tmax: report.fidelity_at_tmax,
        t_max_ns: report.t_max,
        round_trip_gap,
        region_counts,
    })
}

/// Uniform per-qubit decoherence rates, angular (rad/ns).
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct NoiseRates {
    pub kappa: f64,
    pub gamma: f64,
    pub gamma_phi: f64,
}

/// Literature rates for superconducting hardware: cavity damping 5 kHz, qubit
/// decay 5 MHz, qubit dephasing 300 kHz (all converted to angular rad/ns).
pub fn typical_rates() -> NoiseRates {
    NoiseRates {
        kappa: angular_from_khz(5.0),
        gamma: angular_from_mhz(5.0),
        gamma_phi: angular_from_khz(300.0),
    }
}

/// Rate selection from the command line; unset fields fall back to the
/// bundle config's noise section (or zero).
#[derive(Debug, Default, Clone, Copy)]
pub struct NoiseFlags {
    pub kappa: Option<f64>,
    pub gamma: Option<f64>,
    pub gamma_phi: Option<f64>,
    pub typical: bool,
}

/// Baseline from `--typical-rates` or the config's `[noise]` section or zero,
/// then per-rate flag overrides.
pub fn resolve_rates(flags: &NoiseFlags, config: &RunConfig) -> NoiseRates {
    let mut rates = if flags.typical {
        typical_rates()
    } else if let Some(section) = &config.noise {
        NoiseRates {
            kappa: section.kappa_rad_per_ns,
            gamma: section.gamma_rad_per_ns,
            gamma_phi: section.gamma_phi_rad_per_ns,
        }
    } else {
        NoiseRates::default()
    };
    if let Some(k) = flags.kappa {
        rates.kappa = k;
    }
    if let Some(g) = flags.gamma {
        rates.gamma = g;
    }
    if let Some(gp) = flags.gamma_phi {
        rates.gamma_phi = gp;
    }
    rates
}

pub struct NoiseCase {
    pub label: &'static str,
    pub max_fidelity: f64,
    /// Noiseless maximum minus this case's maximum (positive means degraded).
    pub drop: f64,
}

pub struct NoiseSummary {
    pub dir: PathBuf,
    pub rates: NoiseRates,
    pub noiseless_max: f64,
    /// Cases in fixed order: cavity decay + dephasing, qubit decay, all rates.
    pub cases: Vec<NoiseCase>,
}

/// Re-propagates a bundle's schedule under open dynamics for three rate
/// splittings and reports maxima against the noiseless ceiling.
pub fn cmd_noise(dir: &Path, flags: &NoiseFlags) -> CliResult<NoiseSummary> {
    let manifest = load_manifest(dir)?;
    let config = &manifest.config;
    let rates = resolve_rates(flags, config);
    if !(rates.kappa >= 0.0 && rates.gamma >= 0.0 && rates.gamma_phi >= 0.0) {
        return Err(CliError::config("noise rates must be non-negative"));
    }
    let problem = config.problem()?;
    let cfg = &problem.system;
    let chromosome = load_chromosome(dir, cfg.n_var())?;
    let schedule = decode_chromosome(&chromosome, cfg, &problem.shape)?;

    let traj = evolve_closed(&problem.fitness.initial_state, &schedule, cfg)?;
    let closed_fid = fidelity_trace(&traj, &problem.fitness.target, cfg)?;
    let times = traj.times();
    let noiseless_max = closed_fid.iter().cloned().fold(f64::MIN, f64::max);

    let n = cfg.n_qubits;
    let splittings: [(&'static str, NoiseConfig); 3] = [
        ("cavity_decay_dephasing", NoiseConfig::uniform(n, rates.kappa, 0.0, rates.gamma_phi)),
        ("qubit_decay", NoiseConfig::uniform(n, 0.0, rates.gamma, 0.0)),
        ("all_rates", NoiseConfig::uniform(n, rates.kappa, rates.gamma, rates.gamma_phi)),
    ];

    let rho0 = DensityMatrix::from_pure(&problem.fitness.initial_state);
    let mut case_traces: Vec<Vec<f64>> = Vec::with_capacity(splittings.len());
    for (label, noise) in &splittings {
        info!("propagating open dynamics: {label}");
        let mut series = Vec::with_capacity(times.len());
        evolve_lindblad_with(&rho0, &schedule, noise, cfg, |_, _, rho| {
            let f = register_fidelity_of_rho(rho, &problem.fitness.target, cfg)
                .expect("dimensions validated before propagation");
            series.push(f);
        })?;
        case_traces.push(series);
    }

    let mut header = String::from("t_ns,fidelity_noiseless");
    for (label, _) in &splittings {
        header.push_str(",fidelity_");
        header.push_str(label);
    }
    let rows: Vec<String> = times
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let mut row = format!("{t},{}", closed_fid[i]);
            for series in &case_traces {
                row.push(',');
                row.push_str(&format!("{}", series[i]));
            }
            row
        })
        .collect();
    write_csv(&dir.join(NOISE_TRACES_FILE), &header, rows)?;

    let cases: Vec<NoiseCase> = splittings
        .iter()
        .zip(&case_traces)
        .map(|((label, _), series)| {
            let max_fidelity = series.iter().cloned().fold(f64::MIN, f64::max);
            NoiseCase { label, max_fidelity, drop: noiseless_max - max_fidelity }
        })
        .collect();

    let mut report = String::new();
    report.push_str(&format!("kappa_rad_per_ns = {}\n", rates.kappa));
    report.push_str(&format!("gamma_rad_per_ns = {}\n", rates.gamma));
    report.push_str(&format!("gamma_phi_rad_per_ns = {}\n", rates.gamma_phi));
    report.push_str(&format!("noiseless_max_fidelity = {}\n", noiseless_max));
    for case in &cases {
        report.push_str(&format!("{}_max_fidelity = {}\n", case.label, case.max_fidelity));
        report.push_str(&format!("{}_drop = {}\n", case.label, case.drop));
    }
    std::fs::write(dir.join(NOISE_REPORT_FILE), report)?;

    Ok(NoiseSummary { dir: dir.to_path_buf(), rates, noiseless_max, cases })
}

/// Parses and validates a config file (and optionally a chromosome file
/// against it); returns the normalized config text.
pub fn cmd_validate(config_path: &Path, chromosome: Option<&Path>) -> CliResult<String> {
    let config = RunConfig::load(config_path)?;
    let problem = config.problem()?;
    let _ = config.ga_config()?;
    if let Some(path) = chromosome {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
        crate::bundle::parse_chromosome(&text, problem.system.n_var())?;
    }
    Ok(config.to_toml())
}
