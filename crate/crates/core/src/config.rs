//! System-level configuration shared by the Hilbert-space, pulse and
//! propagation modules.

use crate::error::{CoreError, Result};

/// Static description of the physical system and the discretisation used for
/// control schedules and time propagation.
///
/// The full Hilbert space has dimension `2^n_qubits * cavity_dim`. A control
/// schedule covers `n_intervals` intervals of length `tau` ns each, so the
/// horizon is `tau * n_intervals` ns, and the integrator takes
/// `substeps_per_interval` fixed steps per interval.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig {
    /// Number of qubits coupled to the cavity, at least 1.
    pub n_qubits: usize,
    /// Cavity Fock-space truncation dimension, at least 2.
    pub cavity_dim: usize,
    /// Bound on each qubit-cavity coupling amplitude, rad/ns, positive.
    pub g_max: f64,
    /// Bound on the cavity drive amplitude, rad/ns, positive.
    pub xi_max: f64,
    /// Length of one control interval, ns, positive.
    pub tau: f64,
    /// Number of control intervals, at least 1.
    pub n_intervals: usize,
    /// Integrator steps per control interval, at least 1.
    pub substeps_per_interval: usize,
}

impl SystemConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_qubits == 0 {
            return Err(CoreError::invalid_config("n_qubits must be at least 1"));
        }
        if self.cavity_dim < 2 {
            return Err(CoreError::invalid_config("cavity_dim must be at least 2"));
        }
        if !(self.g_max > 0.0) || !self.g_max.is_finite() {
            return Err(CoreError::invalid_config("g_max must be positive and finite"));
        }
        if !(self.xi_max > 0.0) || !self.xi_max.is_finite() {
            return Err(CoreError::invalid_config("xi_max must be positive and finite"));
        }
        if !(self.tau > 0.0) || !self.tau.is_finite() {
            return Err(CoreError::invalid_config("tau must be positive and finite"));
        }
        if self.n_intervals == 0 {
            return Err(CoreError::invalid_config("n_intervals must be at least 1"));
        }
        if self.substeps_per_interval == 0 {
            return Err(CoreError::invalid_config(
                "substeps_per_interval must be at least 1",
            ));
        }
        Ok(())
    }

    /// Dimension of the qubit register, `2^n_qubits`.
    pub fn register_dim(&self) -> usize {
        1usize << self.n_qubits
    }

    /// Dimension of the full register-plus-cavity Hilbert space.
    pub fn dim(&self) -> usize {
        self.register_dim() * self.cavity_dim
    }

    /// Number of independent controls: one coupling per qubit plus the drive.
    pub fn n_controls(&self) -> usize {
        self.n_qubits + 1
    }

    /// Number of schedule nodes per control, `n_intervals + 1`.
    pub fn n_nodes(&self) -> usize {
        self.n_intervals + 1
    }

    /// Chromosome length: one gene per control per node.
    pub fn n_var(&self) -> usize {
        self.n_controls() * self.n_nodes()
    }

    /// Total schedule duration in ns.
    pub fn horizon(&self) -> f64 {
        self.tau * self.n_intervals as f64
    }

    /// Total number of integrator steps over the horizon.
    pub fn n_steps(&self) -> usize {
        self.n_intervals * self.substeps_per_interval
    }

    /// Integrator step size in ns.
    pub fn dt(&self) -> f64 {
        self.tau / self.substeps_per_interval as f64
    }

    /// Time of integrator grid node `k`, exact at interval boundaries.
    ///
    /// Multiplying before dividing keeps `grid_time(m * substeps_per_interval)`
    /// bit-equal to `m * tau` whenever that product is representable, so the
    /// recorded trajectory ends exactly at the horizon.
    pub fn grid_time(&self, k: usize) -> f64 {
        (k as f64 * self.tau) / self.substeps_per_interval as f64
    }

    /// All integrator grid times from 0 to the horizon inclusive.
    pub fn grid_times(&self) -> Vec<f64> {
        (0..=self.n_steps()).map(|k| self.grid_time(k)).collect()
    }
}
