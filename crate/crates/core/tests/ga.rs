//! Optimiser-level checks: determinism across evaluation thread counts,
//! bulk gene-sum conservation under mating, and monotone best-so-far
//! progress with in-range genes.

use ndarray::Array1;
use pulsevo::linalg::C64;
use pulsevo::{
    basis_state, mate, run, Chromosome, ChromosomeLayout, FitnessConfig, GaConfig, NoObserver,
    Problem, PulseShape, SystemConfig,
};
use pulsevo::hilbert::{QuantumState, TargetState};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// Cheap single-qubit problem: steer |0> towards |1> in the register.
fn tiny_problem() -> Problem {
    let system = SystemConfig {
        n_qubits: 1,
        cavity_dim: 2,
        g_max: 1.2566370614359172,
        xi_max: 1.2566370614359172,
        tau: 1.0,
        n_intervals: 2,
        substeps_per_interval: 5,
    };
    let mut amps = Array1::<C64>::zeros(2);
    amps[1] = C64::new(1.0, 0.0);
    let target = TargetState::custom(QuantumState::new(amps).unwrap()).unwrap();
    let fitness = FitnessConfig {
        nu: 0.1,
        mu: 0.5,
        m_hold: 2,
        target,
        initial_state: basis_state(&[0], 1, &system).unwrap(),
    };
    let shape = PulseShape::new(PulseShape::DEFAULT_WINDOW, system.tau).unwrap();
    Problem { system, fitness, shape }
}

fn tiny_ga(generations: usize) -> GaConfig {
    GaConfig {
        n_pop: 8,
        n_survive: 4,
        n_parent_pairs: 2,
        max_generations: generations,
        seed: 5,
        ..GaConfig::default()
    }
}

/// Fitness evaluation is the only parallel phase; its thread count must not
/// leak into the result. Repeats in the same pool must also agree bitwise.
#[test]
fn results_are_identical_across_thread_pool_sizes() {
    let problem = tiny_problem();
    let ga = tiny_ga(6);

    let pool1 = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let pool2 = rayon::ThreadPoolBuilder::new().num_threads(2).build().unwrap();

    let r1 = pool1.install(|| run(&problem, &ga, &mut NoObserver)).unwrap();
    let r2 = pool2.install(|| run(&problem, &ga, &mut NoObserver)).unwrap();
    let r3 = pool1.install(|| run(&problem, &ga, &mut NoObserver)).unwrap();

    assert_eq!(r1, r2, "1-thread and 2-thread results diverge");
    assert_eq!(r1, r3, "repeat run in the same pool diverges");
}

/// Every mating must hand the gene sum of the parents to the children:
/// section swaps permute genes and each blend keeps x + y fixed.
#[test]
fn hundred_thousand_matings_conserve_gene_sums() {
    let layout = ChromosomeLayout { n_controls: 4, nodes_per_control: 11 };
    let n_var = layout.n_var();
    let ga = GaConfig::default();
    let mut rng = ChaCha12Rng::seed_from_u64(17);

    let mut worst = 0.0f64;
    for _ in 0..100_000 {
        let p1 = Chromosome::random(n_var, &mut rng);
        let p2 = Chromosome::random(n_var, &mut rng);
        let (c1, c2) = mate(&p1, &p2, &layout, &ga, &mut rng).unwrap();
        for i in 0..n_var {
            let gap = ((c1.genes()[i] + c2.genes()[i]) - (p1.genes()[i] + p2.genes()[i])).abs();
            worst = worst.max(gap);
            assert!(c1.genes()[i].abs() <= 1.0 && c2.genes()[i].abs() <= 1.0);
        }
    }
    assert!(worst <= 1e-15, "worst per-gene sum drift {worst:.3e}");
}

/// Elitism makes the recorded best total non-decreasing, the final population
/// still holds the best-ever member, and genes never escape [-1, 1].
#[test]
fn best_history_is_monotone_and_genes_stay_bounded() {
    let problem = tiny_problem();
    let result = run(&problem, &tiny_ga(30), &mut NoObserver).unwrap();

    assert_eq!(result.history.len(), result.generations_run + 1);
    for pair in result.history.windows(2) {
        assert!(
            pair[1].best_total >= pair[0].best_total,
            "best total fell from {} to {} at generation {}",
            pair[0].best_total,
            pair[1].best_total,
            pair[1].generation
        );
        assert!(pair[1].mean_total <= pair[1].best_total + 1e-12);
    }
    let last = result.history.last().unwrap();
    assert_eq!(last.best_total, result.best_report.total);
    assert!(result.best_chromosome.genes().iter().all(|g| g.abs() <= 1.0));
}
