//! Result-bundle layout and IO.
//!
//! A bundle is one directory per run:
//! * `manifest.toml` -- tool info, creation time, the full run config
//!   (lossless round trip) and the headline result numbers,
//! * `chromosome.txt` -- best genes, one shortest-round-trip decimal per line,
//! * `schedule.csv` -- decoded control node values,
//! * `fidelity_trace.csv` -- fidelity and cavity-top-level population per
//!   grid point for the best schedule,
//! * `history.csv` -- per-generation best/mean fitness,
//! * `summary.txt`, `seed.txt` -- quick-look text.
//!
//! All numeric text uses `{}` formatting: locale-independent, shortest
//! representation that reparses to the identical bit pattern, so identical
//! runs produce byte-identical files.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use pulsevo::evolver::OptimizationResult;
use pulsevo::fitness::{FitnessReport, Problem};
use pulsevo::pulses::{decode_chromosome, Chromosome};

use crate::config_file::RunConfig;
use crate::{CliError, CliResult};

pub const MANIFEST_FILE: &str = "manifest.toml";
pub const CHROMOSOME_FILE: &str = "chromosome.txt";
pub const SCHEDULE_FILE: &str = "schedule.csv";
pub const FIDELITY_FILE: &str = "fidelity_trace.csv";
pub const HISTORY_FILE: &str = "history.csv";
pub const SUMMARY_FILE: &str = "summary.txt";
pub const SEED_FILE: &str = "seed.txt";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: ToolInfo,
    /// Seconds since the Unix epoch; honors `SOURCE_DATE_EPOCH` for
    /// reproducible builds.
    pub created_unix: u64,
    pub config: RunConfig,
    pub result: ResultInfo,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolInfo {
    pub name: String,
    pub version: String,
}

impl ToolInfo {
    pub fn current() -> Self {
        ToolInfo { name: "pulsevo".into(), version: env!("CARGO_PKG_VERSION").into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultInfo {
    pub generations_run: usize,
    pub best_total: f64,
    pub best_fidelity_at_tmax: f64,
    pub t_max_ns: f64,
    pub t_max_index: usize,
    pub phi1: f64,
    pub phi2: f64,
}

impl ResultInfo {
    pub fn from_report(generations_run: usize, report: &FitnessReport) -> Self {
        ResultInfo {
            generations_run,
            best_total: report.total,
            best_fidelity_at_tmax: report.fidelity_at_tmax,
            t_max_ns: report.t_max,
            t_max_index: report.t_max_index,
            phi1: report.phi1,
            phi2: report.phi2,
        }
    }
}

pub fn created_unix() -> u64 {
    if let Ok(v) = std::env::var("SOURCE_DATE_EPOCH") {
        if let Ok(secs) = v.trim().parse::<u64>() {
            return secs;
        }
    }
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

/// Column labels for the controls: per-qubit couplings then the drive.
pub fn control_names(n_qubits: usize) -> Vec<String> {
    let mut names: Vec<String> = (1..=n_qubits).map(|j| format!("g{j}")).collect();
    names.push("xi".into());
    names
}

/// Writes `header` then `rows` as comma-separated lines.
pub fn write_csv(path: &Path, header: &str, rows: impl IntoIterator<Item = String>) -> CliResult<()> {
    let mut text = String::new();
    text.push_str(header);
    text.push('\n');
    for row in rows {
        text.push_str(&row);
        text.push('\n');
    }
    std::fs::write(path, text)?;
    Ok(())
}

/// Writes a complete optimization bundle into `dir` (created if missing).
pub fn write_optimize_bundle(
    dir: &Path,
    config: &RunConfig,
    problem: &Problem,
    result: &OptimizationResult,
) -> CliResult<()> {
    std::fs::create_dir_all(dir)?;
    let manifest = Manifest {
        tool: ToolInfo::current(),
        created_unix: created_unix(),
        config: config.clone(),
        result: ResultInfo::from_report(result.generations_run, &result.best_report),
    };
    let manifest_text =
        toml::to_string_pretty(&manifest).map_err(|e| CliError::Internal(e.to_string()))?;
    std::fs::write(dir.join(MANIFEST_FILE), manifest_text)?;

    let mut chrom_text = String::new();
    for g in result.best_chromosome.genes() {
        let _ = writeln!(chrom_text, "{g}");
    }
    std::fs::write(dir.join(CHROMOSOME_FILE), chrom_text)?;

    let schedule = decode_chromosome(&result.best_chromosome, &problem.system, &problem.shape)?;
    let names = control_names(problem.system.n_qubits);
    let tau = problem.system.tau;
    let mut rows = Vec::new();
    for (k, name) in names.iter().enumerate() {
        for node in 0..problem.system.n_nodes() {
            let t = node as f64 * tau;
            let v = schedule.node_values()[(k, node)];
            rows.push(format!("{name},{node},{t},{v}"));
        }
    }
    write_csv(&dir.join(SCHEDULE_FILE), "control,node,time_ns,value_rad_per_ns", rows)?;

    let times = problem.system.grid_times();
    let report = &result.best_report;
    let rows = times.iter().enumerate().map(|(i, t)| {
        format!("{i},{t},{},{}", report.fidelity_trace[i], report.top_level_trace[i])
    });
    write_csv(
        &dir.join(FIDELITY_FILE),
        "index,time_ns,fidelity,top_level_population",
        rows,
    )?;

    let rows = result.history.iter().map(|s| {
        format!("{},{},{},{}", s.generation, s.best_total, s.mean_total, s.best_fidelity)
    });
    write_csv(
        &dir.join(HISTORY_FILE),
        "generation,best_total,mean_total,best_fidelity",
        rows,
    )?;

    let mut summary = String::new();
    let _ = writeln!(summary, "problem: {}", config.problem);
    let _ = writeln!(summary, "seed: {}", result.seed);
    let _ = writeln!(summary, "generations_run: {}", result.generations_run);
    let _ = writeln!(summary, "best_total: {}", report.total);
    let _ = writeln!(summary, "best_fidelity_at_tmax: {}", report.fidelity_at_tmax);
    let _ = writeln!(summary, "t_max_ns: {}", report.t_max);
    std::fs::write(dir.join(SUMMARY_FILE), summary)?;
    std::fs::write(dir.join(SEED_FILE), format!("{}\n", result.seed))?;
    Ok(())
}

pub fn load_manifest(dir: &Path) -> CliResult<Manifest> {
    let path = dir.join(MANIFEST_FILE);
    let text = std::fs::read_to_string(&path)
        .map_err(|e| CliError::corrupt(format!("cannot read {}: {e}", path.display())))?;
    let manifest: Manifest =
        toml::from_str(&text).map_err(|e| CliError::corrupt(format!("manifest: {e}")))?;
    if manifest.config.schema_version != crate::config_file::SCHEMA_VERSION {
        return Err(CliError::corrupt(format!(
            "manifest schema_version {} unsupported",
            manifest.config.schema_version
        )));
    }
    Ok(manifest)
}

pub fn load_chromosome(dir: &Path, n_var: usize) -> CliResult<Chromosome> {
    let path = dir.join(CHROMOSOME_FILE);
    let text = std::fs::read_to_string(&path)
        .map_err(|e| CliError::corrupt(format!("cannot read {}: {e}", path.display())))?;
    parse_chromosome(&text, n_var).map_err(|e| match e {
        CliError::Config(m) => CliError::corrupt(m),
        other => other,
    })
}

/// Parses a gene-per-line chromosome file and checks length and bounds.
pub fn parse_chromosome(text: &str, n_var: usize) -> CliResult<Chromosome> {
    let mut genes = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let v: f64 = line.parse().map_err(|_| {
            CliError::config(format!("chromosome line {}: \"{line}\" is not a number", lineno + 1))
        })?;
        genes.push(v);
    }
    if genes.len() != n_var {
        return Err(CliError::config(format!(
            "chromosome has {} genes, config requires {n_var}",
            genes.len()
        )));
    }
    Chromosome::new(genes).map_err(|e| CliError::config(e.to_string()))
}

/// The bundle directory for a problem/seed pair under `root`.
pub fn bundle_dir(root: &Path, problem: &str, seed: u64) -> PathBuf {
    root.join(format!("{problem}-s{seed}"))
}
