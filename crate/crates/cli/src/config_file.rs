//! Versioned, human-editable run configuration (TOML) and its mapping onto
//! the core problem types.
//!
//! Every physical quantity carries its unit in the key name. Angular
//! frequencies and rates are rad/ns, times are ns. Missing optional sections
//! fall back to the documented defaults, so a minimal file only names the
//! system, the initial state and the target.

use serde::{Deserialize, Serialize};

use pulsevo::dynamics::NoiseConfig;
use pulsevo::evolver::GaConfig;
use pulsevo::fitness::{FitnessConfig, Problem};
use pulsevo::hilbert::{basis_state, make_target, TargetLabel};
use pulsevo::pulses::PulseShape;
use pulsevo::SystemConfig;

use crate::{CliError, CliResult};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    /// Short name used for the bundle directory and the manifest.
    pub problem: String,
    pub system: SystemSection,
    #[serde(default)]
    pub pulse: PulseSection,
    pub initial: InitialSection,
    pub target: TargetSection,
    #[serde(default)]
    pub fitness: FitnessSection,
    #[serde(default)]
    pub ga: GaSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSection {
    pub n_qubits: usize,
    pub cavity_dim: usize,
    pub g_max_rad_per_ns: f64,
    pub xi_max_rad_per_ns: f64,
    pub tau_ns: f64,
    pub n_intervals: usize,
    #[serde(default = "default_substeps")]
    pub substeps_per_interval: usize,
}

fn default_substeps() -> usize {
    100
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseSection {
    /// Dimensionless tanh window of each segment.
    pub window: f64,
}

impl Default for PulseSection {
    fn default() -> Self {
        PulseSection { window: PulseShape::DEFAULT_WINDOW }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSection {
    /// Register bits, qubit 1 first, e.g. "010".
    pub qubits: String,
    /// Initial cavity Fock level.
    #[serde(default)]
    pub fock: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetSection {
    /// One of "ghz3", "dicke3_2", "box_cluster4".
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitnessSection {
    pub nu: f64,
    pub mu: f64,
    pub m_hold: usize,
}

impl Default for FitnessSection {
    fn default() -> Self {
        FitnessSection { nu: 0.1, mu: 0.5, m_hold: 2 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaSection {
    pub n_pop: usize,
    pub n_survive: usize,
    pub n_parent_pairs: usize,
    pub alpha: f64,
    pub section_swap_prob: f64,
    pub blend_prob: f64,
    pub max_generations: usize,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fitness_target: Option<f64>,
}

impl Default for GaSection {
    fn default() -> Self {
        GaSection {
            n_pop: 48,
            n_survive: 24,
            n_parent_pairs: 12,
            alpha: 0.2,
            section_swap_prob: 0.5,
            blend_prob: 0.5,
            max_generations: 2000,
            seed: 1,
            fitness_target: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    #[serde(default)]
    pub kappa_rad_per_ns: f64,
    #[serde(default)]
    pub gamma_rad_per_ns: f64,
    #[serde(default)]
    pub gamma_phi_rad_per_ns: f64,
}

impl Default for NoiseSection {
    fn default() -> Self {
        NoiseSection { kappa_rad_per_ns: 0.0, gamma_rad_per_ns: 0.0, gamma_phi_rad_per_ns: 0.0 }
    }
}

impl NoiseSection {
    pub fn to_core(&self, n_qubits: usize) -> NoiseConfig {
        NoiseConfig::uniform(
            n_qubits,
            self.kappa_rad_per_ns,
            self.gamma_rad_per_ns,
            self.gamma_phi_rad_per_ns,
        )
    }
}

impl RunConfig {
    pub fn from_str_diagnostic(text: &str) -> CliResult<RunConfig> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::config(e.to_string()))?;
        if cfg.schema_version != SCHEMA_VERSION {
            return Err(CliError::config(format!(
                "schema_version {} unsupported (expected {})",
                cfg.schema_version, SCHEMA_VERSION
            )));
        }
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> CliResult<RunConfig> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
        RunConfig::from_str_diagnostic(&text)
    }

    pub fn system_config(&self) -> SystemConfig {
        SystemConfig {
            n_qubits: self.system.n_qubits,
            cavity_dim: self.system.cavity_dim,
            g_max: self.system.g_max_rad_per_ns,
            xi_max: self.system.xi_max_rad_per_ns,
            tau: self.system.tau_ns,
            n_intervals: self.system.n_intervals,
            substeps_per_interval: self.system.substeps_per_interval,
        }
    }

    pub fn target_label(&self) -> CliResult<TargetLabel> {
        match self.target.label.as_str() {
            "ghz3" => Ok(TargetLabel::Ghz3),
            "dicke3_2" => Ok(TargetLabel::Dicke3_2),
            "box_cluster4" => Ok(TargetLabel::BoxCluster4),
            other => Err(CliError::config(format!(
                "target.label \"{other}\" unknown (expected ghz3, dicke3_2 or box_cluster4)"
            ))),
        }
    }

    fn initial_bits(&self) -> CliResult<Vec<u8>> {
        let bits: Vec<u8> = self
            .initial
            .qubits
            .chars()
            .map(|c| match c {
                '0' => Ok(0u8),
                '1' => Ok(1u8),
                other => Err(CliError::config(format!(
                    "initial.qubits contains '{other}'; only '0' and '1' are allowed"
                ))),
            })
            .collect::<CliResult<_>>()?;
        if bits.len() != self.system.n_qubits {
            return Err(CliError::config(format!(
                "initial.qubits has {} bits but system.n_qubits = {}",
                bits.len(),
                self.system.n_qubits
            )));
        }
        Ok(bits)
    }

    /// Builds and validates the full optimization problem.
    pub fn problem(&self) -> CliResult<Problem> {
        let system = self.system_config();
        system.validate().map_err(CliError::from)?;
        let target = make_target(self.target_label()?, self.system.n_qubits)?;
        let bits = self.initial_bits()?;
        let initial_state = basis_state(&bits, self.initial.fock, &system)?;
        let fitness = FitnessConfig {
            nu: self.fitness.nu,
            mu: self.fitness.mu,
            m_hold: self.fitness.m_hold,
            target,
            initial_state,
        };
        let shape = PulseShape::new(self.pulse.window, system.tau)?;
        let problem = Problem { system, fitness, shape };
        problem.validate()?;
        Ok(problem)
    }

    pub fn ga_config(&self) -> CliResult<GaConfig> {
        let ga = GaConfig {
            n_pop: self.ga.n_pop,
            n_survive: self.ga.n_survive,
            n_parent_pairs: self.ga.n_parent_pairs,
            alpha: self.ga.alpha,
            section_swap_prob: self.ga.section_swap_prob,
            blend_prob: self.ga.blend_prob,
            max_generations: self.ga.max_generations,
            fitness_target: self.ga.fitness_target,
            seed: self.ga.seed,
        };
        ga.validate()?;
        Ok(ga)
    }

    /// Normalized text form (defaults made explicit, canonical key order).
    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }
}
