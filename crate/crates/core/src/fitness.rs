//! Chromosome scoring: closed-dynamics propagation followed by a
//! fidelity-plus-shaping objective.
//!
//! The score of a schedule is `F(t_max) + phi1 + phi2` where `t_max` is the
//! earliest time of maximal register fidelity, `phi1` penalises population of
//! the top cavity level (keeping the Fock truncation honest) and `phi2`
//! rewards holding high fidelity for a short window after the maximum.

use crate::config::SystemConfig;
use crate::dynamics::{evolve_closed, Trajectory, TrajectoryStates};
use crate::error::{CoreError, Result};
use crate::hilbert::{
    register_fidelity_from_rho, register_fidelity_from_state, top_level_population_from_rho,
    top_level_population_from_state, QuantumState, TargetState,
};
use crate::pulses::{decode_chromosome, Chromosome, PulseShape};

/// Objective weights plus the fixed endpoints of every evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct FitnessConfig {
    /// Weight of the top-cavity-level penalty, >= 0.
    pub nu: f64,
    /// Weight of the fidelity-maintenance bonus, >= 0.
    pub mu: f64,
    /// Length of the maintenance window in units of tau, >= 1.
    pub m_hold: usize,
    /// Register-space pure target state.
    pub target: TargetState,
    /// Full-space initial state.
    pub initial_state: QuantumState,
}

impl FitnessConfig {
    pub fn validate(&self, cfg: &SystemConfig) -> Result<()> {
        if !self.nu.is_finite() || self.nu < 0.0 {
            return Err(CoreError::invalid_config("nu must be finite and >= 0"));
        }
        if !self.mu.is_finite() || self.mu < 0.0 {
            return Err(CoreError::invalid_config("mu must be finite and >= 0"));
        }
        if self.m_hold == 0 {
            return Err(CoreError::invalid_config("m_hold must be at least 1"));
        }
        if self.target.state().dim() != cfg.register_dim() {
            return Err(CoreError::invalid_config(format!(
                "target dimension {} does not match register dimension {}",
                self.target.state().dim(),
                cfg.register_dim()
            )));
        }
        if self.initial_state.dim() != cfg.dim() {
            return Err(CoreError::invalid_config(format!(
                "initial state dimension {} does not match system dimension {}",
                self.initial_state.dim(),
                cfg.dim()
            )));
        }
        Ok(())
    }
}

/// Everything needed to score a chromosome.
#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    pub system: SystemConfig,
    pub fitness: FitnessConfig,
    pub shape: PulseShape,
}

impl Problem {
    pub fn validate(&self) -> Result<()> {
        self.system.validate()?;
        self.fitness.validate(&self.system)
    }
}

/// Full scoring breakdown for one chromosome.
#[derive(Debug, Clone, PartialEq)]
pub struct FitnessReport {
    /// `fidelity_at_tmax + phi1 + phi2`.
    pub total: f64,
    /// Register fidelity at the earliest maximum of the trace.
    pub fidelity_at_tmax: f64,
    /// Time of that maximum, ns, on the integration grid.
    pub t_max: f64,
    /// Grid index of `t_max`.
    pub t_max_index: usize,
    /// Top-cavity-level penalty, in `[-nu, 0]`.
    pub phi1: f64,
    /// Maintenance bonus, in `[0, mu]`.
    pub phi2: f64,
    /// Register fidelity at every grid time.
    pub fidelity_trace: Vec<f64>,
    /// Top-cavity-level population at every grid time.
    pub top_level_trace: Vec<f64>,
}

fn target_slice(target: &TargetState) -> &[crate::linalg::C64] {
    target.state().amplitudes().as_slice().expect("contiguous amplitudes")
}

/// Register fidelity against `target` at every trajectory step, i.e. the
/// fidelity of the cavity-traced state.
pub fn fidelity_trace(
    traj: &Trajectory,
    target: &TargetState,
    cfg: &SystemConfig,
) -> Result<Vec<f64>> {
    if target.state().dim() != cfg.register_dim() {
        return Err(CoreError::DimensionMismatch {
            expected: cfg.register_dim(),
            actual: target.state().dim(),
        });
    }
    let t = target_slice(target);
    let d = cfg.cavity_dim;
    match traj.states() {
        TrajectoryStates::Closed(states) => states
            .iter()
            .map(|s| {
                if s.dim() != cfg.dim() {
                    return Err(CoreError::DimensionMismatch {
                        expected: cfg.dim(),
                        actual: s.dim(),
                    });
                }
                Ok(register_fidelity_from_state(
                    s.amplitudes().as_slice().expect("contiguous amplitudes"),
                    t,
                    d,
                ))
            })
            .collect(),
        TrajectoryStates::Open(states) => states
            .iter()
            .map(|r| {
                if r.dim() != cfg.dim() {
                    return Err(CoreError::DimensionMismatch {
                        expected: cfg.dim(),
                        actual: r.dim(),
                    });
                }
                Ok(register_fidelity_from_rho(r.elements(), t, d))
            })
            .collect(),
    }
}

/// Population of the top cavity level `|d-1>` at every trajectory step.
pub fn top_level_trace(traj: &Trajectory, cfg: &SystemConfig) -> Result<Vec<f64>> {
    let d = cfg.cavity_dim;
    match traj.states() {
        TrajectoryStates::Closed(states) => states
            .iter()
            .map(|s| {
                if s.dim() != cfg.dim() {
                    return Err(CoreError::DimensionMismatch {
                        expected: cfg.dim(),
                        actual: s.dim(),
                    });
                }
                Ok(top_level_population_from_state(
                    s.amplitudes().as_slice().expect("contiguous amplitudes"),
                    d,
                ))
            })
            .collect(),
        TrajectoryStates::Open(states) => states
            .iter()
            .map(|r| {
                if r.dim() != cfg.dim() {
                    return Err(CoreError::DimensionMismatch {
                        expected: cfg.dim(),
                        actual: r.dim(),
                    });
                }
                Ok(top_level_population_from_rho(r.elements(), d))
            })
            .collect(),
    }
}

/// Trapezoid quadrature of consecutive samples spaced `dt` apart.
fn trapezoid(values: &[f64], dt: f64) -> f64 {
    values.windows(2).map(|w| 0.5 * (w[0] + w[1]) * dt).sum()
}

/// Penalty `-(nu / horizon) * integral of <d-1| rho_cav(t) |d-1> dt` over the
/// whole schedule, trapezoid rule on the grid. Always in `[-nu, 0]`.
pub fn phi1_penalty(traj: &Trajectory, fcfg: &FitnessConfig, cfg: &SystemConfig) -> Result<f64> {
    let top = top_level_trace(traj, cfg)?;
    Ok(phi1_from_trace(&top, fcfg, cfg))
}

pub(crate) fn phi1_from_trace(top: &[f64], fcfg: &FitnessConfig, cfg: &SystemConfig) -> f64 {
    -(fcfg.nu / cfg.horizon()) * trapezoid(top, cfg.dt())
}

/// Bonus `(mu / (m tau)) * integral of F dt` from `t_max` to
/// `min(t_max + m tau, horizon)`, trapezoid rule.
///
/// The window is clipped at the horizon but the normaliser stays `m tau`, so
/// fidelity peaks at the very end of the schedule earn a reduced bonus.
/// `t_max` must lie on the integration grid.
pub fn phi2_bonus(fid_trace: &[f64], t_max: f64, fcfg: &FitnessConfig, cfg: &SystemConfig) -> f64 {
    let idx = (t_max / cfg.dt()).round() as usize;
    debug_assert!(
        (t_max - cfg.grid_time(idx)).abs() <= 1e-9 * cfg.horizon().max(1.0),
        "t_max = {t_max} is off the integration grid"
    );
    phi2_from_index(fid_trace, idx.min(fid_trace.len() - 1), fcfg, cfg)
}

pub(crate) fn phi2_from_index(
    fid_trace: &[f64],
    t_max_index: usize,
    fcfg: &FitnessConfig,
    cfg: &SystemConfig,
) -> f64 {
    let end = (t_max_index + fcfg.m_hold * cfg.substeps_per_interval).min(fid_trace.len() - 1);
    if end <= t_max_index {
        return 0.0;
    }
    let window = trapezoid(&fid_trace[t_max_index..=end], cfg.dt());
    fcfg.mu / (fcfg.m_hold as f64 * cfg.tau) * window
}

/// Earliest index of the maximal value; strict comparison keeps the first of
/// any exact ties.
pub(crate) fn earliest_argmax(values: &[f64]) -> usize {
    let mut best = 0usize;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Scores one chromosome: decode, propagate closed dynamics, locate the
/// earliest fidelity maximum, assemble the report. Pure and deterministic.
pub fn evaluate_fitness(chromosome: &Chromosome, problem: &Problem) -> Result<FitnessReport> {
    problem.validate()?;
    let cfg = &problem.system;
    let fcfg = &problem.fitness;
    let schedule = decode_chromosome(chromosome, cfg, &problem.shape)?;
    let traj = evolve_closed(&fcfg.initial_state, &schedule, cfg)?;
    report_from_trajectory(&traj, fcfg, cfg)
}

/// Builds the scoring report for an already-propagated trajectory.
pub fn report_from_trajectory(
    traj: &Trajectory,
    fcfg: &FitnessConfig,
    cfg: &SystemConfig,
) -> Result<FitnessReport> {
    let fid = fidelity_trace(traj, &fcfg.target, cfg)?;
    let top = top_level_trace(traj, cfg)?;
    let t_max_index = earliest_argmax(&fid);
    let t_max = traj.times()[t_max_index];
    let fidelity_at_tmax = fid[t_max_index];
    let phi1 = phi1_from_trace(&top, fcfg, cfg);
    let phi2 = phi2_from_index(&fid, t_max_index, fcfg, cfg);
    Ok(FitnessReport {
        total: fidelity_at_tmax + phi1 + phi2,
        fidelity_at_tmax,
        t_max,
        t_max_index,
        phi1,
        phi2,
        fidelity_trace: fid,
        top_level_trace: top,
    })
}
