//! Evolutionary discovery of control pulses for cavity-coupled qubit registers.
//!
//! The crate models N two-level systems coupled to a single driven resonator
//! mode. Piecewise-smooth control schedules (per-qubit coupling strengths and
//! a cavity drive amplitude) are encoded as real-valued chromosomes, propagated
//! under closed (Schrodinger) or open (Lindblad) dynamics with a fixed-step
//! fourth-order Runge-Kutta integrator, scored by a fidelity-plus-penalty
//! objective, and optimised with a continuous genetic algorithm. Entanglement
//! of the resulting register states is certified with fidelity-based and
//! collective-spin witnesses.
//!
//! Conventions used throughout:
//! * frequencies and rates are angular, in rad/ns; times are in ns,
//! * the full Hilbert space is the qubit register tensor the cavity mode, with
//!   qubit 1 as the most significant bit and the cavity index fastest-varying,
//! * propagation follows `d psi / dt = -i H psi` (hbar = 1).

pub mod config;
pub mod dynamics;
pub mod error;
pub mod evolver;
pub mod fitness;
pub mod hilbert;
pub mod linalg;
pub mod pulses;
pub mod units;
pub mod witnesses;

pub use config::SystemConfig;
pub use dynamics::{
    assemble_hamiltonian, assemble_hamiltonian_detuned, evolve_closed, evolve_lindblad,
    evolve_lindblad_with, DetuningConfig, NoiseConfig, Trajectory, TrajectoryStates,
};
pub use error::{CoreError, Result};
pub use evolver::{
    init_population, mate, mutate, run, sample_parent_pairs, select_survivors, ChromosomeLayout,
    GaConfig, GenerationStats, NoObserver, ObserverAction, OptimizationResult, Population,
    ProgressObserver,
};
pub use fitness::{
    evaluate_fitness, fidelity_trace, phi1_penalty, phi2_bonus, report_from_trajectory,
    top_level_trace, FitnessConfig, FitnessReport, Problem,
};
pub use hilbert::{
    basis_state, build_operators, fidelity, make_target, partial_trace_cavity,
    partial_trace_register, register_density_from_state, register_fidelity_of_rho, DensityMatrix,
    OperatorSet, QuantumState, TargetLabel, TargetState,
};
pub use pulses::{
    control_value, decode_chromosome, segment_value, Chromosome, ControlSchedule, PulseShape,
};
pub use witnesses::{
    collective_spin_operators, collective_spin_witness_value, default_fidelity_bound,
    fidelity_witness_value, gme_regions, GmeRegion, WitnessSpec,
};
