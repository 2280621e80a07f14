//! Integrator checks against closed-form references: resonant vacuum-exchange
//! oscillations, RK4 convergence order, exponential cavity decay, zero-rate
//! open-vs-closed agreement and trace preservation.

use ndarray::Array2;
use pulsevo::linalg::{frobenius_norm, outer, C64};
use pulsevo::{
    basis_state, decode_chromosome, evolve_closed, evolve_lindblad, evolve_lindblad_with,
    partial_trace_register, Chromosome, NoiseConfig, PulseShape, SystemConfig,
};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

fn shape_for(cfg: &SystemConfig) -> PulseShape {
    PulseShape::new(PulseShape::DEFAULT_WINDOW, cfg.tau).unwrap()
}

/// Chromosome holding each control section at a constant gene value.
fn constant_genes(cfg: &SystemConfig, sections: &[f64]) -> Chromosome {
    assert_eq!(sections.len(), cfg.n_controls());
    let mut genes = Vec::with_capacity(cfg.n_var());
    for &v in sections {
        genes.extend(std::iter::repeat(v).take(cfg.n_nodes()));
    }
    Chromosome::new(genes).unwrap()
}

/// One excitation shared between a resonant qubit and the cavity swaps back
/// and forth at the coupling rate: P_excited(t) = cos^2(g t). The two-state
/// subspace is closed, so a two-level cavity truncation is exact.
#[test]
fn vacuum_exchange_matches_cosine_to_1e6() {
    let cfg = SystemConfig {
        n_qubits: 1,
        cavity_dim: 2,
        g_max: 0.2 * std::f64::consts::TAU,
        xi_max: 0.2 * std::f64::consts::TAU,
        tau: 1.0,
        n_intervals: 10,
        substeps_per_interval: 100,
    };
    let schedule = decode_chromosome(&constant_genes(&cfg, &[1.0, 0.0]), &cfg, &shape_for(&cfg)).unwrap();
    let psi0 = basis_state(&[1], 0, &cfg).unwrap();
    let traj = evolve_closed(&psi0, &schedule, &cfg).unwrap();

    let states = traj.closed_states().unwrap();
    let d = cfg.cavity_dim;
    let mut worst = 0.0f64;
    for (i, &t) in traj.times().iter().enumerate() {
        let a = states[i].amplitudes();
        let p_excited = a[d].norm_sqr() + a[d + 1].norm_sqr();
        let exact = (cfg.g_max * t).cos().powi(2);
        worst = worst.max((p_excited - exact).abs());
    }
    assert!(worst <= 1e-6, "worst deviation {worst:.3e} from cos^2(g t)");
}

/// Halving the step size must cut the endpoint error by about 2^4.
#[test]
fn rk4_endpoint_error_order_exceeds_three_point_five() {
    let base = SystemConfig {
        n_qubits: 1,
        cavity_dim: 3,
        g_max: 0.2 * std::f64::consts::TAU,
        xi_max: 0.2 * std::f64::consts::TAU,
        tau: 1.0,
        n_intervals: 2,
        substeps_per_interval: 20,
    };
    let mut rng = ChaCha12Rng::seed_from_u64(7);
    let chromosome = Chromosome::random(base.n_var(), &mut rng);
    let schedule = decode_chromosome(&chromosome, &base, &shape_for(&base)).unwrap();
    let psi0 = basis_state(&[1], 0, &base).unwrap();

    let endpoint = |substeps: usize| {
        let cfg = SystemConfig { substeps_per_interval: substeps, ..base.clone() };
        let traj = evolve_closed(&psi0, &schedule, &cfg).unwrap();
        traj.closed_states().unwrap().last().unwrap().clone()
    };
    let reference = endpoint(1280);
    let err = |substeps: usize| {
        let psi = endpoint(substeps);
        psi.amplitudes()
            .iter()
            .zip(reference.amplitudes())
            .map(|(x, y)| (x - y).norm_sqr())
            .sum::<f64>()
            .sqrt()
    };

    let (e20, e40, e80) = (err(20), err(40), err(80));
    assert!(e80 < e40 && e40 < e20, "errors must shrink with the step: {e20:.3e} {e40:.3e} {e80:.3e}");
    let order_coarse = (e20 / e40).log2();
    let order_fine = (e40 / e80).log2();
    assert!(
        order_coarse >= 3.5 && order_fine >= 3.5,
        "observed orders {order_coarse:.2} and {order_fine:.2} below 3.5"
    );
}

/// With no drive the n = 1 cavity level empties at exactly exp(-kappa t).
#[test]
fn undriven_fock_one_population_decays_exponentially() {
    let cfg = SystemConfig {
        n_qubits: 1,
        cavity_dim: 2,
        g_max: 1.0,
        xi_max: 1.0,
        tau: 1.0,
        n_intervals: 10,
        substeps_per_interval: 20,
    };
    let kappa = 0.1;
    let schedule = decode_chromosome(&constant_genes(&cfg, &[0.0, 0.0]), &cfg, &shape_for(&cfg)).unwrap();
    let rho0 = pulsevo::DensityMatrix::from_pure(&basis_state(&[0], 1, &cfg).unwrap());
    let noise = NoiseConfig::uniform(cfg.n_qubits, kappa, 0.0, 0.0);
    let traj = evolve_lindblad(&rho0, &schedule, &noise, &cfg).unwrap();

    let mut worst = 0.0f64;
    for (i, &t) in traj.times().iter().enumerate() {
        let cav = partial_trace_register(&traj.open_states().unwrap()[i], &cfg).unwrap();
        let p1 = cav.elements()[(1, 1)].re;
        worst = worst.max((p1 - (-kappa * t).exp()).abs());
    }
    assert!(worst <= 1e-6, "worst deviation {worst:.3e} from exp(-kappa t)");
}

/// Zero rates reduce the master equation to the closed equation; both
/// integrators must then agree on the projector to within accumulated
/// integration error.
#[test]
fn zero_rate_open_propagation_matches_closed_projector() {
    let cfg = SystemConfig {
        n_qubits: 1,
        cavity_dim: 3,
        g_max: 0.2 * std::f64::consts::TAU,
        xi_max: 0.2 * std::f64::consts::TAU,
        tau: 1.0,
        n_intervals: 2,
        substeps_per_interval: 320,
    };
    let mut rng = ChaCha12Rng::seed_from_u64(11);
    let chromosome = Chromosome::random(cfg.n_var(), &mut rng);
    let schedule = decode_chromosome(&chromosome, &cfg, &shape_for(&cfg)).unwrap();
    let psi0 = basis_state(&[1], 0, &cfg).unwrap();

    let closed = evolve_closed(&psi0, &schedule, &cfg).unwrap();
    let states = closed.closed_states().unwrap();
    let mut worst = 0.0f64;
    evolve_lindblad_with(
        &pulsevo::DensityMatrix::from_pure(&psi0),
        &schedule,
        &NoiseConfig::none(cfg.n_qubits),
        &cfg,
        |step, _t, rho| {
            let projector = outer(&states[step].amplitudes().to_owned());
            let diff = rho - &projector;
            worst = worst.max(frobenius_norm(&diff));
        },
    )
    .unwrap();
    assert!(worst <= 1e-8, "worst Frobenius gap {worst:.3e} between open and closed routes");
}

/// The dissipator moves population but never trace; a driven noisy run must
/// hold trace 1 to near round-off at every recorded step.
#[test]
fn driven_noisy_propagation_preserves_trace() {
    let cfg = SystemConfig {
        n_qubits: 2,
        cavity_dim: 3,
        g_max: 0.2 * std::f64::consts::TAU,
        xi_max: 0.2 * std::f64::consts::TAU,
        tau: 1.0,
        n_intervals: 3,
        substeps_per_interval: 60,
    };
    let mut rng = ChaCha12Rng::seed_from_u64(13);
    let chromosome = Chromosome::random(cfg.n_var(), &mut rng);
    let schedule = decode_chromosome(&chromosome, &cfg, &shape_for(&cfg)).unwrap();
    let rho0 = pulsevo::DensityMatrix::from_pure(&basis_state(&[1, 0], 0, &cfg).unwrap());
    let noise = NoiseConfig::uniform(cfg.n_qubits, 0.02, 0.01, 0.005);

    let mut worst = 0.0f64;
    evolve_lindblad_with(&rho0, &schedule, &noise, &cfg, |_step, _t, rho: &Array2<C64>| {
        let tr: C64 = (0..rho.nrows()).map(|i| rho[(i, i)]).sum();
        worst = worst.max(((tr.re - 1.0).powi(2) + tr.im.powi(2)).sqrt());
    })
    .unwrap();
    assert!(worst <= 1e-7, "worst trace drift {worst:.3e}");
}
