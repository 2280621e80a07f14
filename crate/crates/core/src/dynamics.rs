//! Hamiltonian assembly and closed/open time propagation.
//!
//! The control Hamiltonian on resonance is
//! `H(t) = sum_j g_j(t) (a^dag sigma_j^- + a sigma_j^+) + xi(t) (a + a^dag)`,
//! with each coefficient sampled from a `ControlSchedule`. Closed dynamics
//! integrate `d psi / dt = -i H psi`; open dynamics integrate the Lindblad
//! master equation with cavity decay, per-qubit decay and per-qubit pure
//! dephasing. Both use fixed-step classical RK4 on the grid defined by
//! `SystemConfig`, recording the state at every step.
//!
//! Internally the Hamiltonian is never formed as a dense matrix during
//! propagation: each control multiplies a fixed sparse operator whose entries
//! follow directly from the index layout (qubit bits times cavity level), and
//! the dissipator's anticommutator parts collapse into one precomputed
//! elementwise mask because every jump operator here has a diagonal `Q^dag Q`.

use ndarray::{Array1, Array2, Zip};

use crate::config::SystemConfig;
use crate::error::{CoreError, Result};
use crate::hilbert::{DensityMatrix, OperatorSet, QuantumState};
use crate::linalg::{SparseOp, C64};
use crate::pulses::{control_value, ControlSchedule};

/// States recorded along a trajectory: vectors for closed evolution, density
/// matrices for open evolution.
#[derive(Debug, Clone)]
pub enum TrajectoryStates {
    Closed(Vec<QuantumState>),
    Open(Vec<DensityMatrix>),
}

/// Time-ordered record of the full-system state at every integrator step.
#[derive(Debug, Clone)]
pub struct Trajectory {
    times: Vec<f64>,
    states: TrajectoryStates,
}

impl Trajectory {
    pub(crate) fn new(times: Vec<f64>, states: TrajectoryStates) -> Self {
        Trajectory { times, states }
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn states(&self) -> &TrajectoryStates {
        &self.states
    }

    pub fn closed_states(&self) -> Option<&[QuantumState]> {
        match &self.states {
            TrajectoryStates::Closed(v) => Some(v),
            TrajectoryStates::Open(_) => None,
        }
    }

    pub fn open_states(&self) -> Option<&[DensityMatrix]> {
        match &self.states {
            TrajectoryStates::Open(v) => Some(v),
            TrajectoryStates::Closed(_) => None,
        }
    }
}

/// Decay and dephasing rates for open-system propagation, rad/ns.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseConfig {
    /// Cavity photon decay rate.
    pub kappa: f64,
    /// Per-qubit decay rates, one per qubit.
    pub gamma: Vec<f64>,
    /// Per-qubit pure dephasing rates, one per qubit.
    pub gamma_phi: Vec<f64>,
}

impl NoiseConfig {
    /// All rates zero.
    pub fn none(n_qubits: usize) -> Self {
        NoiseConfig { kappa: 0.0, gamma: vec![0.0; n_qubits], gamma_phi: vec![0.0; n_qubits] }
    }

    /// Same decay and dephasing rate on every qubit.
    pub fn uniform(n_qubits: usize, kappa: f64, gamma: f64, gamma_phi: f64) -> Self {
        NoiseConfig {
            kappa,
            gamma: vec![gamma; n_qubits],
            gamma_phi: vec![gamma_phi; n_qubits],
        }
    }

    pub fn validate(&self, cfg: &SystemConfig) -> Result<()> {
        if self.gamma.len() != cfg.n_qubits || self.gamma_phi.len() != cfg.n_qubits {
            return Err(CoreError::invalid_config(format!(
                "noise rates must list {} qubits",
                cfg.n_qubits
            )));
        }
        let all = std::iter::once(self.kappa)
            .chain(self.gamma.iter().copied())
            .chain(self.gamma_phi.iter().copied());
        for r in all {
            if !r.is_finite() || r < 0.0 {
                return Err(CoreError::invalid_config("noise rates must be finite and >= 0"));
            }
        }
        Ok(())
    }

    pub fn is_zero(&self) -> bool {
        self.kappa == 0.0
            && self.gamma.iter().all(|&g| g == 0.0)
            && self.gamma_phi.iter().all(|&g| g == 0.0)
    }
}

/// Qubit and drive detunings from the resonator frequency, rad/ns.
#[derive(Debug, Clone, PartialEq)]
pub struct DetuningConfig {
    /// Per-qubit detunings `omega_j - omega_c`.
    pub qubit_detunings: Vec<f64>,
    /// Drive detuning `omega_d - omega_c`.
    pub drive_detuning: f64,
}

impl DetuningConfig {
    pub fn validate(&self, cfg: &SystemConfig) -> Result<()> {
        if self.qubit_detunings.len() != cfg.n_qubits {
            return Err(CoreError::invalid_config(format!(
                "detunings must list {} qubits",
                cfg.n_qubits
            )));
        }
        if self.qubit_detunings.iter().any(|d| !d.is_finite())
            || !self.drive_detuning.is_finite()
        {
            return Err(CoreError::invalid_config("detunings must be finite"));
        }
        Ok(())
    }
}

fn warn_if_outside_bounds(g: &[f64], xi: f64, cfg: &SystemConfig) {
    for (j, gj) in g.iter().enumerate() {
        if gj.abs() > cfg.g_max * (1.0 + 1e-12) {
            log::warn!("coupling g[{j}] = {gj} exceeds bound {}", cfg.g_max);
        }
    }
    if xi.abs() > cfg.xi_max * (1.0 + 1e-12) {
        log::warn!("drive xi = {xi} exceeds bound {}", cfg.xi_max);
    }
}

/// Resonant control Hamiltonian
/// `H = sum_j g_j (a^dag sigma_j^- + a sigma_j^+) + xi (a + a^dag)`.
///
/// Amplitudes outside the configured bounds only log a warning; the matrix is
/// still assembled.
pub fn assemble_hamiltonian(g: &[f64], xi: f64, ops: &OperatorSet) -> Result<Array2<C64>> {
    let cfg = ops.config();
    if g.len() != cfg.n_qubits {
        return Err(CoreError::DimensionMismatch { expected: cfg.n_qubits, actual: g.len() });
    }
    warn_if_outside_bounds(g, xi, cfg);
    let dim = cfg.dim();
    let mut h = Array2::<C64>::zeros((dim, dim));
    for (j, &gj) in g.iter().enumerate() {
        let exchange = ops.a_dag.dot(&ops.sigma_minus[j]) + ops.a.dot(&ops.sigma_plus[j]);
        h.scaled_add(C64::new(gj, 0.0), &exchange);
    }
    let drive = &ops.a + &ops.a_dag;
    h.scaled_add(C64::new(xi, 0.0), &drive);
    Ok(h)
}

/// Detuned control Hamiltonian: adds `sum_j delta_j sigma_j^+ sigma_j^-` and
/// rotates the drive to `xi (a e^{i delta_d t} + a^dag e^{-i delta_d t})`.
pub fn assemble_hamiltonian_detuned(
    g: &[f64],
    xi: f64,
    det: &DetuningConfig,
    t: f64,
    ops: &OperatorSet,
) -> Result<Array2<C64>> {
    let cfg = ops.config();
    det.validate(cfg)?;
    if g.len() != cfg.n_qubits {
        return Err(CoreError::DimensionMismatch { expected: cfg.n_qubits, actual: g.len() });
    }
    warn_if_outside_bounds(g, xi, cfg);
    let dim = cfg.dim();
    let mut h = Array2::<C64>::zeros((dim, dim));
    for (j, &gj) in g.iter().enumerate() {
        let exchange = ops.a_dag.dot(&ops.sigma_minus[j]) + ops.a.dot(&ops.sigma_plus[j]);
        h.scaled_add(C64::new(gj, 0.0), &exchange);
        let number = ops.sigma_plus[j].dot(&ops.sigma_minus[j]);
        h.scaled_add(C64::new(det.qubit_detunings[j], 0.0), &number);
    }
    let phase = C64::new(0.0, det.drive_detuning * t).exp();
    let mut drive = ops.a.mapv(|z| z * phase);
    drive.scaled_add(phase.conj(), &ops.a_dag);
    h.scaled_add(C64::new(xi, 0.0), &drive);
    Ok(h)
}

/// Sparse control operators built straight from the index layout.
///
/// `ops[j]` for `j < n_qubits` is the exchange operator
/// `a^dag sigma_j^- + a sigma_j^+` of qubit `j + 1`; `ops[n_qubits]` is the
/// drive quadrature `a + a^dag`. The instantaneous Hamiltonian is the
/// control-weighted sum of these fixed matrices.
#[derive(Debug, Clone)]
pub(crate) struct ControlOps {
    pub dim: usize,
    pub ops: Vec<SparseOp>,
}

impl ControlOps {
    pub fn build(cfg: &SystemConfig) -> ControlOps {
        let d = cfg.cavity_dim;
        let reg = cfg.register_dim();
        let dim = cfg.dim();
        let mut ops = Vec::with_capacity(cfg.n_controls());
        for j in 0..cfg.n_qubits {
            let bit = 1usize << (cfg.n_qubits - 1 - j);
            let mut entries = Vec::new();
            for q in 0..reg {
                if q & bit == 0 {
                    continue;
                }
                let q_low = q & !bit;
                for n in 0..d - 1 {
                    let amp = C64::new(((n + 1) as f64).sqrt(), 0.0);
                    // a^dag sigma^- : |q excited, n> -> |q ground, n+1>
                    entries.push((q_low * d + n + 1, q * d + n, amp));
                    // a sigma^+ : Hermitian partner
                    entries.push((q * d + n, q_low * d + n + 1, amp));
                }
            }
            ops.push(SparseOp::new(dim, entries));
        }
        let mut entries = Vec::new();
        for q in 0..reg {
            for n in 0..d - 1 {
                let amp = C64::new(((n + 1) as f64).sqrt(), 0.0);
                entries.push((q * d + n, q * d + n + 1, amp)); // a
                entries.push((q * d + n + 1, q * d + n, amp)); // a^dag
            }
        }
        ops.push(SparseOp::new(dim, entries));
        ControlOps { dim, ops }
    }

    /// `y = H(coeffs) x`.
    pub fn apply(&self, coeffs: &[f64], x: &[C64], y: &mut [C64]) {
        debug_assert_eq!(x.len(), self.dim);
        debug_assert_eq!(y.len(), self.dim);
        y.fill(C64::new(0.0, 0.0));
        for (op, &w) in self.ops.iter().zip(coeffs) {
            if w != 0.0 {
                op.apply_scaled_re(w, x, y);
            }
        }
    }
}

fn check_schedule(schedule: &ControlSchedule, cfg: &SystemConfig) -> Result<()> {
    if schedule.n_controls() != cfg.n_controls() {
        return Err(CoreError::DimensionMismatch {
            expected: cfg.n_controls(),
            actual: schedule.n_controls(),
        });
    }
    if schedule.n_nodes() != cfg.n_nodes() {
        return Err(CoreError::DimensionMismatch {
            expected: cfg.n_nodes(),
            actual: schedule.n_nodes(),
        });
    }
    if (schedule.tau() - cfg.tau).abs() > 1e-12 * cfg.tau {
        return Err(CoreError::invalid_argument(format!(
            "schedule interval {} does not match configured tau {}",
            schedule.tau(),
            cfg.tau
        )));
    }
    Ok(())
}

/// Control coefficients on the half-step grid `t_m = m dt / 2`,
/// `m = 0 .. 2 n_steps`. RK4 stage `k` of step `s` reads rows `2s`, `2s + 1`
/// and `2s + 2`, so every stage samples the schedule at its own time.
fn sample_controls(schedule: &ControlSchedule, cfg: &SystemConfig) -> Result<Array2<f64>> {
    let n_steps = cfg.n_steps();
    let n_half = 2 * n_steps + 1;
    let denom = (2 * cfg.substeps_per_interval) as f64;
    let mut coeffs = Array2::<f64>::zeros((n_half, cfg.n_controls()));
    for m in 0..n_half {
        let t = (m as f64 * cfg.tau) / denom;
        for k in 0..cfg.n_controls() {
            coeffs[(m, k)] = control_value(schedule, k, t)?;
        }
    }
    Ok(coeffs)
}

fn finite(x: &[C64]) -> bool {
    x.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Closed-system propagation of `d psi / dt = -i H(t) psi` with fixed-step
/// RK4, recording the state at every grid time.
pub fn evolve_closed(
    psi0: &QuantumState,
    schedule: &ControlSchedule,
    cfg: &SystemConfig,
) -> Result<Trajectory> {
    cfg.validate()?;
    check_schedule(schedule, cfg)?;
    if psi0.dim() != cfg.dim() {
        return Err(CoreError::DimensionMismatch { expected: cfg.dim(), actual: psi0.dim() });
    }
    let ctrl = ControlOps::build(cfg);
    let coeffs = sample_controls(schedule, cfg)?;
    let n_steps = cfg.n_steps();
    let h = cfg.dt();
    let dim = cfg.dim();

    let mut psi: Vec<C64> = psi0.amplitudes().to_vec();
    let mut k1 = vec![C64::new(0.0, 0.0); dim];
    let mut k2 = k1.clone();
    let mut k3 = k1.clone();
    let mut k4 = k1.clone();
    let mut tmp = k1.clone();

    let mut times = Vec::with_capacity(n_steps + 1);
    let mut states = Vec::with_capacity(n_steps + 1);
    times.push(0.0);
    states.push(psi0.clone());

    // rhs = -i H x; the -i rotates (re, im) to (im, -re) in place.
    let rhs = |ctrl: &ControlOps, c: &[f64], x: &[C64], out: &mut [C64]| {
        ctrl.apply(c, x, out);
        for z in out.iter_mut() {
            *z = C64::new(z.im, -z.re);
        }
    };

    for step in 0..n_steps {
        let c0 = coeffs.row(2 * step);
        let c1 = coeffs.row(2 * step + 1);
        let c2 = coeffs.row(2 * step + 2);
        let c0 = c0.as_slice().unwrap();
        let c1 = c1.as_slice().unwrap();
        let c2 = c2.as_slice().unwrap();

        rhs(&ctrl, c0, &psi, &mut k1);
        for i in 0..dim {
            tmp[i] = psi[i] + 0.5 * h * k1[i];
        }
        rhs(&ctrl, c1, &tmp, &mut k2);
        for i in 0..dim {
            tmp[i] = psi[i] + 0.5 * h * k2[i];
        }
        rhs(&ctrl, c1, &tmp, &mut k3);
        for i in 0..dim {
            tmp[i] = psi[i] + h * k3[i];
        }
        rhs(&ctrl, c2, &tmp, &mut k4);
        let w = h / 6.0;
        for i in 0..dim {
            psi[i] += w * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }

        let t = cfg.grid_time(step + 1);
        if !finite(&psi) {
            return Err(CoreError::PropagationFailure {
                time: t,
                reason: "state vector became non-finite".into(),
            });
        }
        times.push(t);
        states.push(QuantumState::from_raw(Array1::from_vec(psi.clone())));
    }

    Ok(Trajectory::new(times, TrajectoryStates::Closed(states)))
}

/// Precomputed pieces of the Lindblad generator.
///
/// Every jump operator here (`a`, `sigma_j^-`, `sigma_j^+ sigma_j^-`) has a
/// diagonal `Q^dag Q`, so all anticommutator halves and the dephasing gain
/// term reduce to a single real elementwise mask on rho; only the coherent
/// commutator and the `a rho a^dag` / `sigma rho sigma^dag` gains need sparse
/// matrix passes.
struct LindbladOps {
    ctrl: ControlOps,
    /// Gain channels: (rate, Q, Q^dag) with contribution `rate * Q rho Q^dag`.
    gains: Vec<(f64, SparseOp, SparseOp)>,
    /// Elementwise damping/dephasing mask added as `mask[i][k] * rho[i][k]`.
    mask: Array2<f64>,
}

impl LindbladOps {
    fn build(cfg: &SystemConfig, noise: &NoiseConfig) -> LindbladOps {
        let d = cfg.cavity_dim;
        let reg = cfg.register_dim();
        let dim = cfg.dim();
        let ctrl = ControlOps::build(cfg);

        let mut gains = Vec::new();
        if noise.kappa > 0.0 {
            let mut entries = Vec::new();
            for q in 0..reg {
                for n in 0..d - 1 {
                    entries.push((q * d + n, q * d + n + 1, C64::new(((n + 1) as f64).sqrt(), 0.0)));
                }
            }
            let a = SparseOp::new(dim, entries);
            let a_dag = a.dagger();
            gains.push((noise.kappa, a, a_dag));
        }
        for j in 0..cfg.n_qubits {
            if noise.gamma[j] > 0.0 {
                let bit = 1usize << (cfg.n_qubits - 1 - j);
                let mut entries = Vec::new();
                for q in 0..reg {
                    if q & bit == 0 {
                        continue;
                    }
                    for n in 0..d {
                        entries.push(((q & !bit) * d + n, q * d + n, C64::new(1.0, 0.0)));
                    }
                }
                let sm = SparseOp::new(dim, entries);
                let sp = sm.dagger();
                gains.push((noise.gamma[j], sm, sp));
            }
        }

        // mask[i][k] = -kappa (n_i + n_k)/2
        //             - sum_j gamma_j (e_j(i) + e_j(k))/2
        //             - sum_j gamma_phi_j [e_j(i) != e_j(k)]
        // The last line is the dephasing dissipator 2 gamma_phi D[P_j] with
        // P_j the excited projector: gain and anticommutator combine to
        // -gamma_phi (e_i + e_k - 2 e_i e_k).
        let mut mask = Array2::<f64>::zeros((dim, dim));
        for i in 0..dim {
            for k in 0..dim {
                let (qi, ni) = (i / d, i % d);
                let (qk, nk) = (k / d, k % d);
                let mut m = -0.5 * noise.kappa * (ni + nk) as f64;
                for j in 0..cfg.n_qubits {
                    let bit = 1usize << (cfg.n_qubits - 1 - j);
                    let ei = (qi & bit != 0) as u8;
                    let ek = (qk & bit != 0) as u8;
                    m -= 0.5 * noise.gamma[j] * (ei + ek) as f64;
                    if ei != ek {
                        m -= noise.gamma_phi[j];
                    }
                }
                mask[(i, k)] = m;
            }
        }

        LindbladOps { ctrl, gains, mask }
    }

    /// `out = -i [H(coeffs), rho] + dissipator(rho)`, using `scratch` for the
    /// gain-channel intermediate products.
    fn rhs(&self, coeffs: &[f64], rho: &Array2<C64>, out: &mut Array2<C64>, scratch: &mut Array2<C64>) {
        out.fill(C64::new(0.0, 0.0));
        for (op, &u) in self.ctrl.ops.iter().zip(coeffs) {
            if u != 0.0 {
                op.left_mul(C64::new(0.0, -u), rho, out);
                op.right_mul(C64::new(0.0, u), rho, out);
            }
        }
        for (rate, q, q_dag) in &self.gains {
            scratch.fill(C64::new(0.0, 0.0));
            q.left_mul(C64::new(1.0, 0.0), rho, scratch);
            q_dag.right_mul(C64::new(*rate, 0.0), scratch, out);
        }
        Zip::from(out.view_mut()).and(rho).and(&self.mask).for_each(|o, &r, &m| {
            *o += m * r;
        });
    }
}

/// Open-system propagation streaming each recorded state to a visitor instead
/// of storing the whole trajectory. The visitor receives the step index, the
/// grid time and a view of the density-matrix elements.
///
/// This exists because full trajectories of density matrices grow quadratically
/// with dimension; callers that only need reductions (fidelity traces,
/// populations) should prefer it over [`evolve_lindblad`].
pub fn evolve_lindblad_with(
    rho0: &DensityMatrix,
    schedule: &ControlSchedule,
    noise: &NoiseConfig,
    cfg: &SystemConfig,
    mut visit: impl FnMut(usize, f64, &Array2<C64>),
) -> Result<()> {
    cfg.validate()?;
    check_schedule(schedule, cfg)?;
    noise.validate(cfg)?;
    if rho0.dim() != cfg.dim() {
        return Err(CoreError::DimensionMismatch { expected: cfg.dim(), actual: rho0.dim() });
    }
    let lops = LindbladOps::build(cfg, noise);
    let coeffs = sample_controls(schedule, cfg)?;
    let n_steps = cfg.n_steps();
    let h = cfg.dt();
    let dim = cfg.dim();

    let mut rho = rho0.elements().clone();
    let mut k1 = Array2::<C64>::zeros((dim, dim));
    let mut k2 = k1.clone();
    let mut k3 = k1.clone();
    let mut k4 = k1.clone();
    let mut tmp = k1.clone();
    let mut scratch = k1.clone();

    visit(0, 0.0, &rho);

    for step in 0..n_steps {
        let c0 = coeffs.row(2 * step).to_vec();
        let c1 = coeffs.row(2 * step + 1).to_vec();
        let c2 = coeffs.row(2 * step + 2).to_vec();

        lops.rhs(&c0, &rho, &mut k1, &mut scratch);
        Zip::from(&mut tmp).and(&rho).and(&k1).for_each(|t, &r, &k| *t = r + 0.5 * h * k);
        lops.rhs(&c1, &tmp, &mut k2, &mut scratch);
        Zip::from(&mut tmp).and(&rho).and(&k2).for_each(|t, &r, &k| *t = r + 0.5 * h * k);
        lops.rhs(&c1, &tmp, &mut k3, &mut scratch);
        Zip::from(&mut tmp).and(&rho).and(&k3).for_each(|t, &r, &k| *t = r + h * k);
        lops.rhs(&c2, &tmp, &mut k4, &mut scratch);
        let w = h / 6.0;
        Zip::from(&mut rho)
            .and(&k1)
            .and(&k2)
            .and(&k3)
            .and(&k4)
            .for_each(|r, &a, &b, &c, &dd| *r += w * (a + 2.0 * b + 2.0 * c + dd));

        let t = cfg.grid_time(step + 1);
        let tr: C64 = (0..dim).map(|i| rho[(i, i)]).sum();
        if !tr.re.is_finite() || !tr.im.is_finite() || !rho.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Err(CoreError::PropagationFailure {
                time: t,
                reason: "density matrix became non-finite".into(),
            });
        }
        if (tr.re - 1.0).abs() > 1e-5 || tr.im.abs() > 1e-5 {
            return Err(CoreError::PropagationFailure {
                time: t,
                reason: format!("trace drifted to {tr}"),
            });
        }
        visit(step + 1, t, &rho);
    }
    Ok(())
}

/// Open-system propagation with full trajectory capture.
pub fn evolve_lindblad(
    rho0: &DensityMatrix,
    schedule: &ControlSchedule,
    noise: &NoiseConfig,
    cfg: &SystemConfig,
) -> Result<Trajectory> {
    let mut times = Vec::with_capacity(cfg.n_steps() + 1);
    let mut states = Vec::with_capacity(cfg.n_steps() + 1);
    evolve_lindblad_with(rho0, schedule, noise, cfg, |_, t, rho| {
        times.push(t);
        states.push(DensityMatrix::from_raw(rho.clone()));
    })?;
    Ok(Trajectory::new(times, TrajectoryStates::Open(states)))
}
