//! Entanglement witnesses and detection regions.
//!
//! Two witness families certify genuine multipartite entanglement (GME) from
//! a register density matrix: the fidelity witness `bound - <psi|rho|psi>`
//! against a fixed target state, and the collective-spin witness
//! `bound - Tr(rho (Jx^2 + Jy^2))` tailored to symmetric Dicke states. A
//! negative value certifies entanglement; zero or positive is inconclusive.

use ndarray::Array2;

use crate::error::{CoreError, Result};
use crate::hilbert::{fidelity, DensityMatrix, TargetLabel, TargetState};
use crate::linalg::{kron, C64};

/// Maximal bi-separable overlap with the 3-qubit GHZ state; fidelity above
/// this certifies GME.
pub const FIDELITY_BOUND_GHZ_GME: f64 = 0.5;
/// Overlap bound separating GHZ-class states from the W class.
pub const FIDELITY_BOUND_GHZ_CLASS: f64 = 0.75;
/// Maximal bi-separable overlap with the two-excitation 3-qubit Dicke state.
pub const FIDELITY_BOUND_DICKE3_2: f64 = 2.0 / 3.0;
/// Maximal bi-separable overlap with the 4-qubit box cluster state.
pub const FIDELITY_BOUND_BOX_CLUSTER4: f64 = 0.5;
/// Collective-spin bound for the two-excitation 3-qubit Dicke state.
pub const SPIN_BOUND_DICKE3_2: f64 = 3.12;

/// The conventional GME fidelity bound for a built-in target, if one exists.
pub fn default_fidelity_bound(label: TargetLabel) -> Option<f64> {
    match label {
        TargetLabel::Ghz3 => Some(FIDELITY_BOUND_GHZ_GME),
        TargetLabel::Dicke3_2 => Some(FIDELITY_BOUND_DICKE3_2),
        TargetLabel::BoxCluster4 => Some(FIDELITY_BOUND_BOX_CLUSTER4),
        TargetLabel::Custom => None,
    }
}

/// A fully specified witness: which operator to evaluate and its threshold.
#[derive(Debug, Clone, PartialEq)]
pub enum WitnessSpec {
    /// `bound - <psi|rho|psi>` against `target`; `bound` is the maximal
    /// bi-separable overlap, in (0, 1).
    Fidelity { bound: f64, target: TargetState, label: String },
    /// `bound - Tr(rho (Jx^2 + Jy^2))` with collective spin operators
    /// `J_k = (1/2) sum_j sigma_k^(j)`; `bound` is positive.
    CollectiveSpin { bound: f64, label: String },
}

impl WitnessSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            WitnessSpec::Fidelity { bound, .. } => {
                if !(*bound > 0.0 && *bound < 1.0) {
                    return Err(CoreError::invalid_argument(
                        "fidelity witness bound must lie in (0, 1)",
                    ));
                }
            }
            WitnessSpec::CollectiveSpin { bound, .. } => {
                if !(*bound > 0.0 && bound.is_finite()) {
                    return Err(CoreError::invalid_argument(
                        "collective-spin witness bound must be positive",
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn label(&self) -> &str {
        match self {
            WitnessSpec::Fidelity { label, .. } | WitnessSpec::CollectiveSpin { label, .. } => label,
        }
    }
}

/// Evaluates the fidelity witness: `bound - <psi|rho|psi>`. Negative means
/// the state cannot be bi-separable.
pub fn fidelity_witness_value(rho: &DensityMatrix, spec: &WitnessSpec) -> Result<f64> {
    spec.validate()?;
    match spec {
        WitnessSpec::Fidelity { bound, target, .. } => Ok(bound - fidelity(rho, target)?),
        WitnessSpec::CollectiveSpin { .. } => Err(CoreError::invalid_argument(
            "spec describes a collective-spin witness, not a fidelity witness",
        )),
    }
}

/// Collective spin operators `(Jx, Jy, Jz)` on an `n_qubits` register,
/// `J_k = (1/2) sum_j sigma_k^(j)`, qubit 1 slowest index.
pub fn collective_spin_operators(n_qubits: usize) -> (Array2<C64>, Array2<C64>, Array2<C64>) {
    assert!(n_qubits >= 1, "need at least one qubit");
    let dim = 1usize << n_qubits;
    let half = C64::new(0.5, 0.0);
    let zero = C64::new(0.0, 0.0);
    let one = C64::new(1.0, 0.0);
    let i = C64::new(0.0, 1.0);
    let sx = Array2::from_shape_vec((2, 2), vec![zero, one, one, zero]).unwrap();
    let sy = Array2::from_shape_vec((2, 2), vec![zero, -i, i, zero]).unwrap();
    let sz = Array2::from_shape_vec((2, 2), vec![one, zero, zero, -one]).unwrap();
    let mut out = [Array2::zeros((dim, dim)), Array2::zeros((dim, dim)), Array2::zeros((dim, dim))];
    for (slot, sigma) in [&sx, &sy, &sz].into_iter().enumerate() {
        for j in 0..n_qubits {
            let mut term = Array2::from_diag_elem(1, one);
            for pos in 0..n_qubits {
                let factor = if pos == j { sigma.clone() } else { Array2::eye(2) };
                term = kron(&term, &factor);
            }
            out[slot] += &term;
        }
        out[slot].mapv_inplace(|z| z * half);
    }
    let [jx, jy, jz] = out;
    (jx, jy, jz)
}

/// Evaluates the collective-spin witness `b_s - Tr(rho (Jx^2 + Jy^2))` on a
/// register density matrix of dimension `2^n_qubits`.
pub fn collective_spin_witness_value(
    rho: &DensityMatrix,
    b_s: f64,
    n_qubits: usize,
) -> Result<f64> {
    let dim = 1usize << n_qubits;
    if rho.dim() != dim {
        return Err(CoreError::DimensionMismatch { expected: dim, actual: rho.dim() });
    }
    if !(b_s > 0.0 && b_s.is_finite()) {
        return Err(CoreError::invalid_argument("spin witness bound must be positive"));
    }
    let (jx, jy, _) = collective_spin_operators(n_qubits);
    let op = jx.dot(&jx) + jy.dot(&jy);
    let mut expectation = C64::new(0.0, 0.0);
    for r in 0..dim {
        for c in 0..dim {
            expectation += rho.elements()[(r, c)] * op[(c, r)];
        }
    }
    debug_assert!(expectation.im.abs() < 1e-10, "expectation should be real");
    Ok(b_s - expectation.re)
}

/// One maximal contiguous grid interval where the fidelity trace strictly
/// exceeds the witness bound. Indices are inclusive on both ends.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GmeRegion {
    pub start_index: usize,
    pub end_index: usize,
    pub t_start: f64,
    pub t_end: f64,
}

/// Splits a fidelity trace into the maximal runs of grid points with
/// `trace[i] > bound` (strict: a point exactly at the bound is excluded).
pub fn gme_regions(times: &[f64], trace: &[f64], bound: f64) -> Vec<GmeRegion> {
    assert_eq!(times.len(), trace.len(), "times and trace must align");
    let mut regions = Vec::new();
    let mut start: Option<usize> = None;
    for (i, &f) in trace.iter().enumerate() {
        if f > bound {
            if start.is_none() {
                start = Some(i);
            }
        } else if let Some(s) = start.take() {
            regions.push(GmeRegion {
                start_index: s,
                end_index: i - 1,
                t_start: times[s],
                t_end: times[i - 1],
            });
        }
    }
    if let Some(s) = start {
        let last = trace.len() - 1;
        regions.push(GmeRegion {
            start_index: s,
            end_index: last,
            t_start: times[s],
            t_end: times[last],
        });
    }
    regions
}
