//! Hilbert-space plumbing: states, density matrices, ladder operators,
//! partial traces, register fidelities and target-state construction.
//!
//! The full space is the N-qubit register tensor the truncated cavity mode.
//! Qubit 1 is the most significant bit of the register index and the cavity
//! index varies fastest, so the basis state with register bits `q` and cavity
//! level `n` sits at flat index `q * cavity_dim + n`.

use ndarray::{Array1, Array2};

use crate::config::SystemConfig;
use crate::error::{CoreError, Result};
use crate::linalg::{hermitian_eigenvalues, hermiticity_residual, kron, outer, C64};

const SQRT_2_INV: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Pure state in some Hilbert space, kept unit-normalised.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumState {
    amplitudes: Array1<C64>,
}

impl QuantumState {
    /// Wraps an amplitude vector, requiring finite entries and unit norm
    /// within 1e-9.
    pub fn new(amplitudes: Array1<C64>) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(CoreError::invalid_argument("state vector must be non-empty"));
        }
        if amplitudes.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(CoreError::invalid_argument("state vector has non-finite entries"));
        }
        let norm = amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(CoreError::invalid_argument(format!(
                "state vector norm is {norm}, expected 1 within 1e-9"
            )));
        }
        Ok(QuantumState { amplitudes })
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &Array1<C64> {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Wraps without norm validation; caller guarantees near-unit norm.
    pub(crate) fn from_raw(amplitudes: Array1<C64>) -> Self {
        QuantumState { amplitudes }
    }

    /// Inner product `<self|other>`.
    pub fn overlap(&self, other: &QuantumState) -> Result<C64> {
        if self.dim() != other.dim() {
            return Err(CoreError::DimensionMismatch {
                expected: self.dim(),
                actual: other.dim(),
            });
        }
        Ok(self
            .amplitudes
            .iter()
            .zip(other.amplitudes.iter())
            .map(|(a, b)| a.conj() * b)
            .sum())
    }
}

/// Product basis state `|bits> (x) |fock>` in the full register-cavity space.
///
/// `bits[0]` is qubit 1 (most significant); each entry must be 0 or 1.
pub fn basis_state(bits: &[u8], fock: usize, cfg: &SystemConfig) -> Result<QuantumState> {
    cfg.validate()?;
    if bits.len() != cfg.n_qubits {
        return Err(CoreError::invalid_argument(format!(
            "expected {} qubit bits, got {}",
            cfg.n_qubits,
            bits.len()
        )));
    }
    if bits.iter().any(|&b| b > 1) {
        return Err(CoreError::invalid_argument("qubit bits must be 0 or 1"));
    }
    if fock >= cfg.cavity_dim {
        return Err(CoreError::invalid_argument(format!(
            "fock level {fock} outside truncation 0..{}",
            cfg.cavity_dim - 1
        )));
    }
    let mut q = 0usize;
    for &b in bits {
        q = (q << 1) | b as usize;
    }
    let mut amplitudes = Array1::<C64>::zeros(cfg.dim());
    amplitudes[q * cfg.cavity_dim + fock] = C64::new(1.0, 0.0);
    Ok(QuantumState { amplitudes })
}

/// Density matrix with validated physicality.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    elements: Array2<C64>,
}

impl DensityMatrix {
    /// Validates Hermiticity (1e-10 elementwise), unit trace (1e-9) and
    /// positivity (smallest eigenvalue >= -1e-9) before wrapping.
    pub fn try_new(elements: Array2<C64>) -> Result<Self> {
        if elements.nrows() != elements.ncols() || elements.is_empty() {
            return Err(CoreError::invalid_argument("density matrix must be square and non-empty"));
        }
        let res = hermiticity_residual(&elements);
        if res > 1e-10 {
            return Err(CoreError::invalid_argument(format!(
                "density matrix is not Hermitian (residual {res:.3e})"
            )));
        }
        let tr: C64 = (0..elements.nrows()).map(|i| elements[(i, i)]).sum();
        if (tr - C64::new(1.0, 0.0)).norm() > 1e-9 {
            return Err(CoreError::invalid_argument(format!(
                "density matrix trace is {tr}, expected 1 within 1e-9"
            )));
        }
        let eigs = hermitian_eigenvalues(&elements)?;
        if eigs[0] < -1e-9 {
            return Err(CoreError::invalid_argument(format!(
                "density matrix has negative eigenvalue {:.3e}",
                eigs[0]
            )));
        }
        Ok(DensityMatrix { elements })
    }

    /// Projector onto a pure state.
    pub fn from_pure(state: &QuantumState) -> Self {
        DensityMatrix { elements: outer(state.amplitudes()) }
    }

    /// Wraps without validation; caller guarantees physicality.
    pub(crate) fn from_raw(elements: Array2<C64>) -> Self {
        DensityMatrix { elements }
    }

    pub fn dim(&self) -> usize {
        self.elements.nrows()
    }

    pub fn elements(&self) -> &Array2<C64> {
        &self.elements
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim()).map(|i| self.elements[(i, i)]).sum()
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(hermitian_eigenvalues(&self.elements)?[0])
    }
}

/// Named entangled target states for the qubit register.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TargetLabel {
    /// Three-qubit GHZ state `(|000> + |111>)/sqrt(2)`.
    Ghz3,
    /// Three-qubit Dicke state with two excitations,
    /// `(|011> + |101> + |110>)/sqrt(3)`.
    Dicke3_2,
    /// Four-qubit box cluster state: Hadamards on all qubits of `|0000>`
    /// followed by controlled-Z on the ring (1,2), (2,3), (3,4), (4,1).
    BoxCluster4,
    /// Caller-supplied register state.
    Custom,
}

/// A register-space pure target state together with its label.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetState {
    label: TargetLabel,
    state: QuantumState,
}

impl TargetState {
    pub fn custom(state: QuantumState) -> Result<Self> {
        if !state.dim().is_power_of_two() {
            return Err(CoreError::invalid_argument(
                "target state dimension must be a power of two",
            ));
        }
        Ok(TargetState { label: TargetLabel::Custom, state })
    }

    pub fn label(&self) -> TargetLabel {
        self.label
    }

    pub fn state(&self) -> &QuantumState {
        &self.state
    }

    /// Number of register qubits the target describes.
    pub fn n_qubits(&self) -> usize {
        self.state.dim().trailing_zeros() as usize
    }
}

/// In-place Hadamard on qubit `j` (1-based, qubit 1 most significant).
fn apply_hadamard(amps: &mut [C64], j: usize, n_qubits: usize) {
    let bit = 1usize << (n_qubits - j);
    for idx in 0..amps.len() {
        if idx & bit == 0 {
            let lo = amps[idx];
            let hi = amps[idx | bit];
            amps[idx] = (lo + hi) * SQRT_2_INV;
            amps[idx | bit] = (lo - hi) * SQRT_2_INV;
        }
    }
}

/// In-place controlled-Z between qubits `j1` and `j2` (1-based).
fn apply_cz(amps: &mut [C64], j1: usize, j2: usize, n_qubits: usize) {
    let b1 = 1usize << (n_qubits - j1);
    let b2 = 1usize << (n_qubits - j2);
    for idx in 0..amps.len() {
        if idx & b1 != 0 && idx & b2 != 0 {
            amps[idx] = -amps[idx];
        }
    }
}

/// Builds a named target state, checking it fits the requested register size.
pub fn make_target(label: TargetLabel, n_qubits: usize) -> Result<TargetState> {
    let state = match label {
        TargetLabel::Ghz3 => {
            if n_qubits != 3 {
                return Err(CoreError::invalid_argument("ghz3 target requires 3 qubits"));
            }
            let mut amps = Array1::<C64>::zeros(8);
            amps[0] = C64::new(SQRT_2_INV, 0.0);
            amps[7] = C64::new(SQRT_2_INV, 0.0);
            QuantumState { amplitudes: amps }
        }
        TargetLabel::Dicke3_2 => {
            if n_qubits != 3 {
                return Err(CoreError::invalid_argument("dicke3_2 target requires 3 qubits"));
            }
            let w = C64::new(1.0 / 3.0f64.sqrt(), 0.0);
            let mut amps = Array1::<C64>::zeros(8);
            amps[0b011] = w;
            amps[0b101] = w;
            amps[0b110] = w;
            QuantumState { amplitudes: amps }
        }
        TargetLabel::BoxCluster4 => {
            if n_qubits != 4 {
                return Err(CoreError::invalid_argument("box_cluster4 target requires 4 qubits"));
            }
            let mut amps = vec![C64::new(0.0, 0.0); 16];
            amps[0] = C64::new(1.0, 0.0);
            for j in 1..=4 {
                apply_hadamard(&mut amps, j, 4);
            }
            for (j1, j2) in [(1, 2), (2, 3), (3, 4), (4, 1)] {
                apply_cz(&mut amps, j1, j2, 4);
            }
            QuantumState { amplitudes: Array1::from_vec(amps) }
        }
        TargetLabel::Custom => {
            return Err(CoreError::invalid_argument(
                "custom targets carry their own amplitudes; use TargetState::custom",
            ));
        }
    };
    Ok(TargetState { label, state })
}

/// Dense ladder operators on the full register-cavity space.
#[derive(Debug, Clone)]
pub struct OperatorSet {
    cfg: SystemConfig,
    /// Cavity annihilation operator.
    pub a: Array2<C64>,
    /// Cavity creation operator.
    pub a_dag: Array2<C64>,
    /// Per-qubit lowering operators, index 0 is qubit 1.
    pub sigma_minus: Vec<Array2<C64>>,
    /// Per-qubit raising operators, index 0 is qubit 1.
    pub sigma_plus: Vec<Array2<C64>>,
}

impl OperatorSet {
    pub fn config(&self) -> &SystemConfig {
        &self.cfg
    }
}

/// Constructs the dense operator set for a validated system configuration.
pub fn build_operators(cfg: &SystemConfig) -> Result<OperatorSet> {
    cfg.validate()?;
    let d = cfg.cavity_dim;
    let n = cfg.n_qubits;

    let mut a_c = Array2::<C64>::zeros((d, d));
    for m in 0..d - 1 {
        a_c[(m, m + 1)] = C64::new(((m + 1) as f64).sqrt(), 0.0);
    }
    let eye_reg = Array2::<C64>::eye(1 << n);
    let a = kron(&eye_reg, &a_c);
    let a_dag = crate::linalg::dagger(&a);

    let mut sm = Array2::<C64>::zeros((2, 2));
    sm[(0, 1)] = C64::new(1.0, 0.0);
    let eye_cav = Array2::<C64>::eye(d);

    let mut sigma_minus = Vec::with_capacity(n);
    let mut sigma_plus = Vec::with_capacity(n);
    for j in 0..n {
        let left = Array2::<C64>::eye(1 << j);
        let right = Array2::<C64>::eye(1 << (n - 1 - j));
        let op_reg = kron(&kron(&left, &sm), &right);
        let op = kron(&op_reg, &eye_cav);
        sigma_plus.push(crate::linalg::dagger(&op));
        sigma_minus.push(op);
    }

    Ok(OperatorSet { cfg: cfg.clone(), a, a_dag, sigma_minus, sigma_plus })
}

/// Register reduced state `rho_Q[q, q'] = sum_n rho[q d + n, q' d + n]`
/// (cavity traced out). `rho` must live in the full space of `cfg`.
pub fn partial_trace_cavity(rho: &DensityMatrix, cfg: &SystemConfig) -> Result<DensityMatrix> {
    cfg.validate()?;
    if rho.dim() != cfg.dim() {
        return Err(CoreError::DimensionMismatch { expected: cfg.dim(), actual: rho.dim() });
    }
    Ok(DensityMatrix::from_raw(trace_out_cavity(
        rho.elements(),
        cfg.register_dim(),
        cfg.cavity_dim,
    )))
}

/// Cavity reduced state `rho_c[n, n'] = sum_q rho[q d + n, q d + n']`
/// (register traced out).
pub fn partial_trace_register(rho: &DensityMatrix, cfg: &SystemConfig) -> Result<DensityMatrix> {
    cfg.validate()?;
    if rho.dim() != cfg.dim() {
        return Err(CoreError::DimensionMismatch { expected: cfg.dim(), actual: rho.dim() });
    }
    Ok(DensityMatrix::from_raw(trace_out_register(
        rho.elements(),
        cfg.register_dim(),
        cfg.cavity_dim,
    )))
}

pub(crate) fn trace_out_cavity(rho: &Array2<C64>, reg_dim: usize, d: usize) -> Array2<C64> {
    let mut out = Array2::<C64>::zeros((reg_dim, reg_dim));
    for q in 0..reg_dim {
        for qp in 0..reg_dim {
            let mut acc = C64::new(0.0, 0.0);
            for n in 0..d {
                acc += rho[(q * d + n, qp * d + n)];
            }
            out[(q, qp)] = acc;
        }
    }
    out
}

pub(crate) fn trace_out_register(rho: &Array2<C64>, reg_dim: usize, d: usize) -> Array2<C64> {
    let mut out = Array2::<C64>::zeros((d, d));
    for n in 0..d {
        for np in 0..d {
            let mut acc = C64::new(0.0, 0.0);
            for q in 0..reg_dim {
                acc += rho[(q * d + n, q * d + np)];
            }
            out[(n, np)] = acc;
        }
    }
    out
}

/// Reduced register density matrix `Tr_cav |psi><psi|` computed directly from
/// a full-space pure state, skipping the full-space projector.
pub fn register_density_from_state(psi: &QuantumState, cfg: &SystemConfig) -> Result<DensityMatrix> {
    if psi.dim() != cfg.dim() {
        return Err(CoreError::DimensionMismatch { expected: cfg.dim(), actual: psi.dim() });
    }
    let d = cfg.cavity_dim;
    let reg = cfg.register_dim();
    let a = psi.amplitudes();
    let mut out = Array2::<C64>::zeros((reg, reg));
    for q in 0..reg {
        for qp in 0..reg {
            let mut acc = C64::new(0.0, 0.0);
            for n in 0..d {
                acc += a[q * d + n] * a[qp * d + n].conj();
            }
            out[(q, qp)] = acc;
        }
    }
    // Exact partial trace of a pure state: positive and unit-trace by
    // construction, so the expensive checks of try_new are unnecessary.
    Ok(DensityMatrix::from_raw(out))
}

/// Register fidelity of a full-space density matrix against a register
/// target, without materialising the reduced matrix. Suited to streaming
/// open-system traces where the caller only holds a view of the elements.
pub fn register_fidelity_of_rho(
    rho: &Array2<C64>,
    target: &TargetState,
    cfg: &SystemConfig,
) -> Result<f64> {
    if rho.nrows() != cfg.dim() || rho.ncols() != cfg.dim() {
        return Err(CoreError::DimensionMismatch { expected: cfg.dim(), actual: rho.nrows() });
    }
    if target.state().dim() != cfg.register_dim() {
        return Err(CoreError::DimensionMismatch {
            expected: cfg.register_dim(),
            actual: target.state().dim(),
        });
    }
    let t = target.state().amplitudes().as_slice().expect("contiguous amplitudes");
    Ok(register_fidelity_from_rho(rho, t, cfg.cavity_dim))
}

/// Fidelity `<psi_t| rho |psi_t>` of a register density matrix against a pure
/// target. The imaginary residue must vanish within 1e-12; it is checked and
/// discarded.
pub fn fidelity(rho: &DensityMatrix, target: &TargetState) -> Result<f64> {
    let v = target.state().amplitudes();
    if rho.dim() != v.len() {
        return Err(CoreError::DimensionMismatch { expected: v.len(), actual: rho.dim() });
    }
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..v.len() {
        for j in 0..v.len() {
            acc += v[i].conj() * rho.elements()[(i, j)] * v[j];
        }
    }
    if acc.im.abs() > 1e-12 {
        return Err(CoreError::invalid_argument(format!(
            "fidelity has imaginary residue {:.3e}",
            acc.im
        )));
    }
    Ok(acc.re)
}

/// Register fidelity of a full-space pure state against a register target,
/// without forming the reduced density matrix:
/// `F = sum_n |<target (x) n | psi>|^2`.
pub(crate) fn register_fidelity_from_state(psi: &[C64], target: &[C64], d: usize) -> f64 {
    let mut total = 0.0;
    for n in 0..d {
        let mut amp = C64::new(0.0, 0.0);
        for (q, t) in target.iter().enumerate() {
            amp += t.conj() * psi[q * d + n];
        }
        total += amp.norm_sqr();
    }
    total
}

/// Register fidelity of a full-space density matrix against a register target.
pub(crate) fn register_fidelity_from_rho(rho: &Array2<C64>, target: &[C64], d: usize) -> f64 {
    let reg_dim = target.len();
    let mut acc = C64::new(0.0, 0.0);
    for q in 0..reg_dim {
        for qp in 0..reg_dim {
            let mut block = C64::new(0.0, 0.0);
            for n in 0..d {
                block += rho[(q * d + n, qp * d + n)];
            }
            acc += target[q].conj() * block * target[qp];
        }
    }
    debug_assert!(acc.im.abs() < 1e-9);
    acc.re
}

/// Population of the top cavity level, `sum_q |psi[q d + (d-1)]|^2`.
pub(crate) fn top_level_population_from_state(psi: &[C64], d: usize) -> f64 {
    psi.iter().skip(d - 1).step_by(d).map(|z| z.norm_sqr()).sum()
}

/// Population of the top cavity level for a density matrix.
pub(crate) fn top_level_population_from_rho(rho: &Array2<C64>, d: usize) -> f64 {
    let dim = rho.nrows();
    let mut acc = 0.0;
    let mut i = d - 1;
    while i < dim {
        acc += rho[(i, i)].re;
        i += d;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::frobenius_norm;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    fn cfg() -> SystemConfig {
        SystemConfig {
            n_qubits: 3,
            cavity_dim: 6,
            g_max: 1.2566370614359172,
            xi_max: 1.2566370614359172,
            tau: 1.0,
            n_intervals: 10,
            substeps_per_interval: 100,
        }
    }

    #[test]
    fn basis_state_index_placement() {
        let c = cfg();
        let s = basis_state(&[0, 1, 0], 0, &c).unwrap();
        assert_eq!(s.dim(), 48);
        for (i, z) in s.amplitudes().iter().enumerate() {
            if i == 12 {
                assert_eq!(*z, C64::new(1.0, 0.0));
            } else {
                assert_eq!(*z, C64::new(0.0, 0.0));
            }
        }
        let s = basis_state(&[1, 1, 1], 5, &c).unwrap();
        assert_eq!(s.amplitudes()[7 * 6 + 5], C64::new(1.0, 0.0));
    }

    #[test]
    fn basis_state_rejects_bad_input() {
        let c = cfg();
        assert!(basis_state(&[0, 1], 0, &c).is_err());
        assert!(basis_state(&[0, 1, 2], 0, &c).is_err());
        assert!(basis_state(&[0, 1, 0], 6, &c).is_err());
    }

    #[test]
    fn quantum_state_validates_norm() {
        let good = Array1::from_vec(vec![C64::new(SQRT_2_INV, 0.0), C64::new(0.0, SQRT_2_INV)]);
        assert!(QuantumState::new(good).is_ok());
        let bad = Array1::from_vec(vec![C64::new(1.0, 0.0), C64::new(0.5, 0.0)]);
        assert!(QuantumState::new(bad).is_err());
    }

    #[test]
    fn ladder_commutator_in_truncated_space() {
        let c = cfg();
        let ops = build_operators(&c).unwrap();
        let comm = ops.a.dot(&ops.a_dag) - ops.a_dag.dot(&ops.a);
        // Truncation turns [a, a_dag] = 1 into 1 - d * P_top.
        let mut expected = Array2::<C64>::eye(c.dim());
        for q in 0..c.register_dim() {
            let i = q * c.cavity_dim + (c.cavity_dim - 1);
            expected[(i, i)] = C64::new(1.0 - c.cavity_dim as f64, 0.0);
        }
        assert!(frobenius_norm(&(&comm - &expected)) < 1e-12);
    }

    #[test]
    fn qubit_operators_act_on_their_own_qubit() {
        let c = cfg();
        let ops = build_operators(&c).unwrap();
        for j in 0..3 {
            // sigma_plus sigma_minus is the excited-state projector of qubit j+1.
            let proj = ops.sigma_plus[j].dot(&ops.sigma_minus[j]);
            for q in 0..c.register_dim() {
                for n in 0..c.cavity_dim {
                    let i = q * c.cavity_dim + n;
                    let excited = (q >> (2 - j)) & 1 == 1;
                    let expect = if excited { 1.0 } else { 0.0 };
                    assert_abs_diff_eq!(proj[(i, i)].re, expect, epsilon = 1e-14);
                }
            }
            // Lowering maps |..1..> (x) |n> to |..0..> (x) |n>.
            let src = basis_state(&[1, 1, 1], 2, &c).unwrap();
            let dst = ops.sigma_minus[j].dot(src.amplitudes());
            let mut bits = [1u8, 1, 1];
            bits[j] = 0;
            let expect = basis_state(&bits, 2, &c).unwrap();
            assert!(dst
                .iter()
                .zip(expect.amplitudes().iter())
                .all(|(a, b)| (a - b).norm() < 1e-14));
        }
    }

    #[test]
    fn operators_commute_across_subsystems() {
        let c = cfg();
        let ops = build_operators(&c).unwrap();
        let ab = ops.sigma_minus[0].dot(&ops.a_dag);
        let ba = ops.a_dag.dot(&ops.sigma_minus[0]);
        assert!(frobenius_norm(&(&ab - &ba)) < 1e-12);
        let ab = ops.sigma_minus[1].dot(&ops.sigma_plus[2]);
        let ba = ops.sigma_plus[2].dot(&ops.sigma_minus[1]);
        assert!(frobenius_norm(&(&ab - &ba)) < 1e-12);
    }

    #[test]
    fn ghz_target_amplitudes() {
        let t = make_target(TargetLabel::Ghz3, 3).unwrap();
        let a = t.state().amplitudes();
        assert_abs_diff_eq!(a[0].re, SQRT_2_INV, epsilon = 1e-15);
        assert_abs_diff_eq!(a[7].re, SQRT_2_INV, epsilon = 1e-15);
        for i in 1..7 {
            assert_eq!(a[i], C64::new(0.0, 0.0));
        }
        assert!(make_target(TargetLabel::Ghz3, 4).is_err());
    }

    #[test]
    fn dicke_target_has_two_excitation_support() {
        let t = make_target(TargetLabel::Dicke3_2, 3).unwrap();
        let a = t.state().amplitudes();
        let w = 1.0 / 3.0f64.sqrt();
        for idx in 0..8usize {
            let ones = idx.count_ones();
            if ones == 2 {
                assert_abs_diff_eq!(a[idx].re, w, epsilon = 1e-15);
            } else {
                assert_eq!(a[idx], C64::new(0.0, 0.0));
            }
        }
    }

    #[test]
    fn box_cluster_matches_dense_circuit_oracle() {
        // Independent construction: full 16x16 gate matrices multiplied out.
        let h = array![
            [C64::new(SQRT_2_INV, 0.0), C64::new(SQRT_2_INV, 0.0)],
            [C64::new(SQRT_2_INV, 0.0), C64::new(-SQRT_2_INV, 0.0)]
        ];
        let eye2 = Array2::<C64>::eye(2);
        let gate_on = |j: usize, g: &Array2<C64>| {
            let mut m = if j == 1 { g.clone() } else { eye2.clone() };
            for k in 2..=4 {
                let f = if k == j { g.clone() } else { eye2.clone() };
                m = kron(&m, &f);
            }
            m
        };
        let cz = |j1: usize, j2: usize| {
            let mut m = Array2::<C64>::eye(16);
            let b1 = 1usize << (4 - j1);
            let b2 = 1usize << (4 - j2);
            for idx in 0..16 {
                if idx & b1 != 0 && idx & b2 != 0 {
                    m[(idx, idx)] = C64::new(-1.0, 0.0);
                }
            }
            m
        };
        let mut psi = Array1::<C64>::zeros(16);
        psi[0] = C64::new(1.0, 0.0);
        for j in 1..=4 {
            psi = gate_on(j, &h).dot(&psi);
        }
        for (j1, j2) in [(1, 2), (2, 3), (3, 4), (4, 1)] {
            psi = cz(j1, j2).dot(&psi);
        }

        let t = make_target(TargetLabel::BoxCluster4, 4).unwrap();
        for (a, b) in t.state().amplitudes().iter().zip(psi.iter()) {
            assert!((a - b).norm() < 1e-14);
        }
        // All amplitudes have magnitude 1/4 and the state is normalised.
        for a in t.state().amplitudes() {
            assert_abs_diff_eq!(a.norm(), 0.25, epsilon = 1e-15);
        }
        assert_abs_diff_eq!(t.state().norm(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn partial_trace_of_product_state_recovers_factors() {
        let c = cfg();
        let s = basis_state(&[0, 1, 0], 3, &c).unwrap();
        let rho = DensityMatrix::from_pure(&s);
        let reg = partial_trace_cavity(&rho, &c).unwrap();
        assert_eq!(reg.dim(), 8);
        assert_abs_diff_eq!(reg.elements()[(2, 2)].re, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(reg.trace().re, 1.0, epsilon = 1e-14);
        let cav = partial_trace_register(&rho, &c).unwrap();
        assert_eq!(cav.dim(), 6);
        assert_abs_diff_eq!(cav.elements()[(3, 3)].re, 1.0, epsilon = 1e-14);
    }

    #[test]
    fn partial_trace_of_entangled_state_is_mixed() {
        // (|000>(x)|0> + |111>(x)|1>)/sqrt(2): tracing the cavity kills the
        // register coherence.
        let c = cfg();
        let mut amps = Array1::<C64>::zeros(c.dim());
        amps[0] = C64::new(SQRT_2_INV, 0.0);
        amps[7 * 6 + 1] = C64::new(SQRT_2_INV, 0.0);
        let rho = DensityMatrix::from_pure(&QuantumState::new(amps).unwrap());
        let reg = partial_trace_cavity(&rho, &c).unwrap();
        assert_abs_diff_eq!(reg.elements()[(0, 0)].re, 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(reg.elements()[(7, 7)].re, 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(reg.elements()[(0, 7)].norm(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn partial_traces_match_independent_index_oracle() {
        // Random pure state; oracle sums written with the opposite loop
        // nesting and explicit index arithmetic.
        use rand::{Rng, SeedableRng};
        let c = cfg();
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(3);
        let mut amps = Array1::<C64>::zeros(c.dim());
        for z in amps.iter_mut() {
            *z = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        }
        let norm = amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        amps.mapv_inplace(|z| z / norm);
        let rho = DensityMatrix::from_pure(&QuantumState::new(amps).unwrap());

        let reg = partial_trace_cavity(&rho, &c).unwrap();
        let cav = partial_trace_register(&rho, &c).unwrap();
        let d = c.cavity_dim;
        let mut reg_oracle = Array2::<C64>::zeros((8, 8));
        let mut cav_oracle = Array2::<C64>::zeros((d, d));
        for i in 0..c.dim() {
            for j in 0..c.dim() {
                let (qi, ni) = (i / d, i % d);
                let (qj, nj) = (j / d, j % d);
                let v = rho.elements()[(i, j)];
                if ni == nj {
                    reg_oracle[(qi, qj)] += v;
                }
                if qi == qj {
                    cav_oracle[(ni, nj)] += v;
                }
            }
        }
        assert!(frobenius_norm(&(reg.elements() - &reg_oracle)) < 1e-13);
        assert!(frobenius_norm(&(cav.elements() - &cav_oracle)) < 1e-13);
        assert_abs_diff_eq!(reg.trace().re, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(cav.trace().re, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn fidelity_of_named_states() {
        let t = make_target(TargetLabel::Ghz3, 3).unwrap();
        let rho_t = DensityMatrix::from_pure(t.state());
        assert_abs_diff_eq!(fidelity(&rho_t, &t).unwrap(), 1.0, epsilon = 1e-14);

        let mut zero = Array1::<C64>::zeros(8);
        zero[0] = C64::new(1.0, 0.0);
        let rho_zero = DensityMatrix::from_pure(&QuantumState::new(zero).unwrap());
        assert_abs_diff_eq!(fidelity(&rho_zero, &t).unwrap(), 0.5, epsilon = 1e-14);

        let mut one = Array1::<C64>::zeros(8);
        one[2] = C64::new(1.0, 0.0);
        let rho_010 = DensityMatrix::from_pure(&QuantumState::new(one).unwrap());
        assert_abs_diff_eq!(fidelity(&rho_010, &t).unwrap(), 0.0, epsilon = 1e-14);

        let mixed = DensityMatrix::try_new(Array2::<C64>::eye(8).mapv(|z| z / 8.0)).unwrap();
        assert_abs_diff_eq!(fidelity(&mixed, &t).unwrap(), 0.125, epsilon = 1e-14);
    }

    #[test]
    fn fast_fidelity_paths_match_partial_trace_route() {
        use rand::{Rng, SeedableRng};
        let c = cfg();
        let t = make_target(TargetLabel::Dicke3_2, 3).unwrap();
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(21);
        let mut amps = Array1::<C64>::zeros(c.dim());
        for z in amps.iter_mut() {
            *z = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        }
        let norm = amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        amps.mapv_inplace(|z| z / norm);
        let psi = QuantumState::new(amps).unwrap();
        let rho = DensityMatrix::from_pure(&psi);

        let slow = fidelity(&partial_trace_cavity(&rho, &c).unwrap(), &t).unwrap();
        let fast = register_fidelity_from_state(
            psi.amplitudes().as_slice().unwrap(),
            t.state().amplitudes().as_slice().unwrap(),
            c.cavity_dim,
        );
        let from_rho = register_fidelity_from_rho(
            rho.elements(),
            t.state().amplitudes().as_slice().unwrap(),
            c.cavity_dim,
        );
        assert_abs_diff_eq!(slow, fast, epsilon = 1e-13);
        assert_abs_diff_eq!(slow, from_rho, epsilon = 1e-13);

        let top_fast =
            top_level_population_from_state(psi.amplitudes().as_slice().unwrap(), c.cavity_dim);
        let cav = partial_trace_register(&rho, &c).unwrap();
        let top_slow = cav.elements()[(5, 5)].re;
        assert_abs_diff_eq!(top_fast, top_slow, epsilon = 1e-13);
        assert_abs_diff_eq!(
            top_level_population_from_rho(rho.elements(), c.cavity_dim),
            top_slow,
            epsilon = 1e-13
        );
    }

    #[test]
    fn register_density_from_state_matches_projector_route() {
        use rand::{Rng, SeedableRng};
        let cfg = cfg();
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(31);
        let amps = Array1::from_shape_fn(cfg.dim(), |_| {
            C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        });
        let norm = amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let psi = QuantumState::new(amps.mapv(|z| z / norm)).unwrap();
        let direct = register_density_from_state(&psi, &cfg).unwrap();
        let via_projector =
            partial_trace_cavity(&DensityMatrix::from_pure(&psi), &cfg).unwrap();
        assert!(
            frobenius_norm(&(direct.elements() - via_projector.elements())) < 1e-13
        );
        assert!((direct.trace().re - 1.0).abs() < 1e-12);

        let target = make_target(TargetLabel::Ghz3, cfg.n_qubits).unwrap();
        let f_reduced = fidelity(&direct, &target).unwrap();
        let f_fast = register_fidelity_from_state(
            psi.amplitudes().as_slice().unwrap(),
            target.state().amplitudes().as_slice().unwrap(),
            cfg.cavity_dim,
        );
        assert_abs_diff_eq!(f_reduced, f_fast, epsilon = 1e-13);
    }

    #[test]
    fn register_fidelity_of_rho_checks_dimensions_and_values() {
        let cfg = cfg();
        let target = make_target(TargetLabel::Ghz3, cfg.n_qubits).unwrap();
        let psi = basis_state(&[0, 0, 0], 2, &cfg).unwrap();
        let rho = DensityMatrix::from_pure(&psi);
        let f = register_fidelity_of_rho(rho.elements(), &target, &cfg).unwrap();
        // |000> overlaps the GHZ register target with probability 1/2.
        assert_abs_diff_eq!(f, 0.5, epsilon = 1e-13);
        let small = Array2::<C64>::eye(4);
        assert!(register_fidelity_of_rho(&small, &target, &cfg).is_err());
    }

    #[test]
    fn density_matrix_validation_rejects_unphysical_input() {
        // Not Hermitian.
        let mut m = Array2::<C64>::eye(2).mapv(|z| z / 2.0);
        m[(0, 1)] = C64::new(0.3, 0.0);
        assert!(DensityMatrix::try_new(m).is_err());
        // Wrong trace.
        assert!(DensityMatrix::try_new(Array2::<C64>::eye(2)).is_err());
        // Negative eigenvalue: diag(1.5, -0.5).
        let mut m = Array2::<C64>::zeros((2, 2));
        m[(0, 0)] = C64::new(1.5, 0.0);
        m[(1, 1)] = C64::new(-0.5, 0.0);
        assert!(DensityMatrix::try_new(m).is_err());
        // Valid.
        let mut m = Array2::<C64>::zeros((2, 2));
        m[(0, 0)] = C64::new(0.25, 0.0);
        m[(1, 1)] = C64::new(0.75, 0.0);
        assert!(DensityMatrix::try_new(m).is_ok());
    }
}
