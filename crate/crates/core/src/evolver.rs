//! Continuous genetic algorithm over pulse chromosomes.
//!
//! One generation is: evaluate every unevaluated member, keep the top half,
//! sample parent pairs by linear rank weight, produce complementary offspring
//! by section swap plus beta-blending, then mutate a fixed count of gene
//! slots across everyone except the single best member.
//!
//! Randomness discipline: one master seed; every phase of every generation
//! draws from its own counter-derived stream, so parallel fitness evaluation
//! can never perturb the random sequence and identical seeds give identical
//! runs at any thread count.

use rand::seq::index::sample as index_sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;

use crate::config::SystemConfig;
use crate::error::{CoreError, Result};
use crate::fitness::{evaluate_fitness, FitnessReport, Problem};
use crate::pulses::Chromosome;

/// Hyperparameters of the genetic algorithm.
#[derive(Debug, Clone, PartialEq)]
pub struct GaConfig {
    /// Population size.
    pub n_pop: usize,
    /// Members kept each generation; the rest are replaced by offspring.
    pub n_survive: usize,
    /// Nominal parent pairs per generation (config echo; the loop draws
    /// exactly the pairs needed to refill the population).
    pub n_parent_pairs: usize,
    /// Mutation rate: fraction of the non-elite gene pool redrawn per
    /// generation, in (0, 1).
    pub alpha: f64,
    /// Probability of swapping each control section between offspring copies.
    pub section_swap_prob: f64,
    /// Probability of beta-blending each gene index.
    pub blend_prob: f64,
    /// Generation budget.
    pub max_generations: usize,
    /// Stop once the best total reaches this value; non-finite values never
    /// trigger.
    pub fitness_target: Option<f64>,
    /// Master RNG seed.
    pub seed: u64,
}

impl Default for GaConfig {
    fn default() -> Self {
        GaConfig {
            n_pop: 48,
            n_survive: 24,
            n_parent_pairs: 12,
            alpha: 0.2,
            section_swap_prob: 0.5,
            blend_prob: 0.5,
            max_generations: 1000,
            fitness_target: None,
            seed: 0,
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_survive < 2 {
            return Err(CoreError::invalid_config("n_survive must be at least 2"));
        }
        if self.n_survive >= self.n_pop {
            return Err(CoreError::invalid_config("n_survive must be less than n_pop"));
        }
        if (self.n_pop - self.n_survive) % 2 != 0 {
            return Err(CoreError::invalid_config("n_pop - n_survive must be even"));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(CoreError::invalid_config("alpha must lie in (0, 1)"));
        }
        for (name, p) in [
            ("section_swap_prob", self.section_swap_prob),
            ("blend_prob", self.blend_prob),
        ] {
            if !(0.0..=1.0).contains(&p) || !p.is_finite() {
                return Err(CoreError::invalid_config(format!("{name} must lie in [0, 1]")));
            }
        }
        if self.n_parent_pairs == 0 {
            return Err(CoreError::invalid_config("n_parent_pairs must be at least 1"));
        }
        if 2 * self.n_parent_pairs != self.n_pop - self.n_survive {
            log::warn!(
                "n_parent_pairs = {} does not match the {} offspring needed; the loop draws what it needs",
                self.n_parent_pairs,
                self.n_pop - self.n_survive
            );
        }
        Ok(())
    }
}

/// Gene-block layout of a chromosome: `n_controls` sections of
/// `nodes_per_control` genes each.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChromosomeLayout {
    pub n_controls: usize,
    pub nodes_per_control: usize,
}

impl ChromosomeLayout {
    pub fn from_system(cfg: &SystemConfig) -> Self {
        ChromosomeLayout { n_controls: cfg.n_controls(), nodes_per_control: cfg.n_nodes() }
    }

    pub fn n_var(&self) -> usize {
        self.n_controls * self.nodes_per_control
    }
}

/// A generation's members plus any cached evaluations.
#[derive(Debug, Clone)]
pub struct Population {
    members: Vec<Chromosome>,
    reports: Vec<Option<FitnessReport>>,
    generation: usize,
}

impl Population {
    pub fn new(members: Vec<Chromosome>, generation: usize) -> Result<Self> {
        if members.is_empty() {
            return Err(CoreError::invalid_argument("population must be non-empty"));
        }
        let n_var = members[0].len();
        if members.iter().any(|m| m.len() != n_var) {
            return Err(CoreError::invalid_argument("population members differ in length"));
        }
        let reports = vec![None; members.len()];
        Ok(Population { members, reports, generation })
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn members(&self) -> &[Chromosome] {
        &self.members
    }

    pub fn report(&self, member: usize) -> Option<&FitnessReport> {
        self.reports.get(member).and_then(|r| r.as_ref())
    }

    pub fn generation(&self) -> usize {
        self.generation
    }

    pub fn is_fully_evaluated(&self) -> bool {
        self.reports.iter().all(|r| r.is_some())
    }
}

/// Per-generation summary statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct GenerationStats {
    pub generation: usize,
    pub best_total: f64,
    pub mean_total: f64,
    /// Fidelity component of the generation's best member.
    pub best_fidelity: f64,
}

/// Everything a finished run reports back.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationResult {
    pub best_chromosome: Chromosome,
    pub best_report: FitnessReport,
    /// One entry per evaluated generation, index 0 is the initial population.
    pub history: Vec<GenerationStats>,
    /// Generations bred after the initial population.
    pub generations_run: usize,
    pub ga: GaConfig,
    pub seed: u64,
}

/// Decision returned by a progress observer after each generation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObserverAction {
    Continue,
    Stop,
}

/// Callback surface for progress reporting; the engine stays file-agnostic.
pub trait ProgressObserver {
    fn on_generation(&mut self, stats: &GenerationStats, best: &FitnessReport) -> ObserverAction {
        let _ = (stats, best);
        ObserverAction::Continue
    }
}

/// Observer that never interferes.
pub struct NoObserver;

impl ProgressObserver for NoObserver {}

const STREAM_INIT: u64 = 1;
const STREAM_PAIRING: u64 = 2;
const STREAM_MATING: u64 = 3;
const STREAM_MUTATION: u64 = 4;

/// Independent RNG stream for one phase of one generation.
fn substream(seed: u64, purpose: u64, generation: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream((purpose << 56) | generation);
    rng
}

/// Fresh random population with genes i.i.d. uniform on [-1, 1].
pub fn init_population(ga: &GaConfig, n_var: usize, rng: &mut impl Rng) -> Result<Population> {
    if n_var == 0 {
        return Err(CoreError::invalid_argument("n_var must be at least 1"));
    }
    let members = (0..ga.n_pop).map(|_| Chromosome::random(n_var, rng)).collect();
    Population::new(members, 0)
}

/// Member indices of the `n_survive` highest totals, descending; exact ties
/// keep the lower index first.
pub fn select_survivors(pop: &Population, ga: &GaConfig) -> Result<Vec<usize>> {
    if !pop.is_fully_evaluated() {
        return Err(CoreError::InvalidState(
            "population has unevaluated members; evaluate before selecting".into(),
        ));
    }
    let totals: Vec<f64> = pop.reports.iter().map(|r| r.as_ref().unwrap().total).collect();
    let mut order: Vec<usize> = (0..pop.len()).collect();
    order.sort_by(|&i, &j| {
        totals[j].partial_cmp(&totals[i]).expect("finite totals").then(i.cmp(&j))
    });
    order.truncate(ga.n_survive.min(pop.len()));
    Ok(order)
}

/// Draws `n_pairs` parent pairs by linear rank weight.
///
/// Ranks index the descending survivor ordering: rank r (0-based) carries
/// weight `n_survivors - r`. The second parent is redrawn until distinct from
/// the first. Returned pairs hold rank positions, not member indices.
pub fn sample_parent_pairs(
    n_survivors: usize,
    n_pairs: usize,
    rng: &mut impl Rng,
) -> Result<Vec<(usize, usize)>> {
    if n_survivors < 2 {
        return Err(CoreError::invalid_argument("need at least 2 survivors to form pairs"));
    }
    let total: u64 = (n_survivors as u64 * (n_survivors as u64 + 1)) / 2;
    let draw = |rng: &mut dyn rand::RngCore| {
        let mut ticket = rng.gen_range(0..total);
        for rank in 0..n_survivors {
            let w = (n_survivors - rank) as u64;
            if ticket < w {
                return rank;
            }
            ticket -= w;
        }
        n_survivors - 1
    };
    let mut pairs = Vec::with_capacity(n_pairs);
    for _ in 0..n_pairs {
        let first = draw(rng);
        let mut second = draw(rng);
        while second == first {
            second = draw(rng);
        }
        pairs.push((first, second));
    }
    Ok(pairs)
}

/// One blend step: returns the complementary convex combinations
/// `(beta a + (1 - beta) b, (1 - beta) a + beta b)`.
pub(crate) fn blend_pair(a: f64, b: f64, beta: f64) -> (f64, f64) {
    (beta * a + (1.0 - beta) * b, (1.0 - beta) * a + beta * b)
}

/// Mates two parents into two complementary children.
///
/// Both parents are copied; each control section (block of
/// `nodes_per_control` genes) is swapped between the copies with probability
/// `section_swap_prob`; then each gene index independently blends with
/// probability `blend_prob` using a fresh beta uniform on [0, 1). Every draw
/// keeps `child1[i] + child2[i] = parent1[i] + parent2[i]` exactly.
pub fn mate(
    p1: &Chromosome,
    p2: &Chromosome,
    layout: &ChromosomeLayout,
    ga: &GaConfig,
    rng: &mut impl Rng,
) -> Result<(Chromosome, Chromosome)> {
    let n_var = layout.n_var();
    if p1.len() != n_var || p2.len() != n_var {
        return Err(CoreError::DimensionMismatch {
            expected: n_var,
            actual: if p1.len() != n_var { p1.len() } else { p2.len() },
        });
    }
    let mut c1: Vec<f64> = p1.genes().to_vec();
    let mut c2: Vec<f64> = p2.genes().to_vec();
    let block = layout.nodes_per_control;
    for k in 0..layout.n_controls {
        if rng.gen::<f64>() < ga.section_swap_prob {
            let span = k * block..(k + 1) * block;
            for i in span {
                std::mem::swap(&mut c1[i], &mut c2[i]);
            }
        }
    }
    for i in 0..n_var {
        if rng.gen::<f64>() < ga.blend_prob {
            let beta = rng.gen::<f64>();
            let (x, y) = blend_pair(c1[i], c2[i], beta);
            c1[i] = x;
            c2[i] = y;
        }
    }
    // Convex combinations of in-range genes stay in range; the clamp only
    // guards rounding at the boundary.
    for v in c1.iter_mut().chain(c2.iter_mut()) {
        let clamped = v.clamp(-1.0, 1.0);
        debug_assert_eq!(clamped, *v);
        *v = clamped;
    }
    Ok((Chromosome::from_raw(c1), Chromosome::from_raw(c2)))
}

/// The gene slots the mutation phase will touch: positions in the non-elite
/// gene pool, sampled without replacement, ascending.
fn mutation_slots(ga: &GaConfig, n_members: usize, n_var: usize, rng: &mut impl Rng) -> Vec<usize> {
    let pool = (n_members - 1) * n_var;
    let count = (ga.alpha * pool as f64).round() as usize;
    let mut slots: Vec<usize> = index_sample(rng, pool, count.min(pool)).into_iter().collect();
    slots.sort_unstable();
    slots
}

/// Redraws `round(alpha * (n_pop - 1) * n_var)` gene slots uniformly without
/// replacement across all members except the elite, which is returned
/// bitwise-unchanged. Mutated members lose their cached evaluation.
pub fn mutate(
    pop: &Population,
    elite_index: usize,
    ga: &GaConfig,
    rng: &mut impl Rng,
) -> Result<Population> {
    if elite_index >= pop.len() {
        return Err(CoreError::invalid_argument(format!(
            "elite index {elite_index} outside population of {}",
            pop.len()
        )));
    }
    if pop.len() < 2 {
        return Ok(pop.clone());
    }
    let n_var = pop.members[0].len();
    let slots = mutation_slots(ga, pop.len(), n_var, rng);
    let mut members = pop.members.clone();
    let mut reports = pop.reports.clone();
    for slot in slots {
        let below = slot / n_var;
        let member = if below >= elite_index { below + 1 } else { below };
        let gene = slot % n_var;
        members[member].genes_mut()[gene] = rng.gen_range(-1.0..=1.0);
        reports[member] = None;
    }
    Ok(Population { members, reports, generation: pop.generation })
}

/// Evaluates every member without a cached report, in parallel. Reports are
/// written back in member order; the first failing member (lowest index)
/// aborts with its generation attached.
fn evaluate_population(pop: &mut Population, problem: &Problem) -> Result<()> {
    let jobs: Vec<usize> = pop
        .reports
        .iter()
        .enumerate()
        .filter_map(|(i, r)| r.is_none().then_some(i))
        .collect();
    let members = &pop.members;
    let computed: Vec<(usize, Result<FitnessReport>)> = jobs
        .par_iter()
        .map(|&i| (i, evaluate_fitness(&members[i], problem)))
        .collect();
    for (i, res) in computed {
        match res {
            Ok(report) => pop.reports[i] = Some(report),
            Err(e) => {
                return Err(CoreError::EvaluationFailure {
                    generation: pop.generation,
                    member: i,
                    source: Box::new(e),
                })
            }
        }
    }
    Ok(())
}

fn generation_stats(pop: &Population) -> GenerationStats {
    let totals: Vec<f64> = pop.reports.iter().map(|r| r.as_ref().unwrap().total).collect();
    let best = crate::fitness::earliest_argmax(&totals);
    GenerationStats {
        generation: pop.generation,
        best_total: totals[best],
        mean_total: totals.iter().sum::<f64>() / totals.len() as f64,
        best_fidelity: pop.reports[best].as_ref().unwrap().fidelity_at_tmax,
    }
}

/// Runs the full loop: initialise, then evaluate / select / pair / mate /
/// mutate until the generation budget, the fitness target, or the observer
/// stops it. Deterministic for a fixed problem and config, independent of
/// evaluation parallelism.
pub fn run(
    problem: &Problem,
    ga: &GaConfig,
    observer: &mut dyn ProgressObserver,
) -> Result<OptimizationResult> {
    problem.validate()?;
    ga.validate()?;
    let layout = ChromosomeLayout::from_system(&problem.system);
    let n_var = layout.n_var();

    let mut pop = init_population(ga, n_var, &mut substream(ga.seed, STREAM_INIT, 0))?;
    evaluate_population(&mut pop, problem)?;

    let mut best_index = select_survivors(&pop, ga)?[0];
    let mut best_chromosome = pop.members[best_index].clone();
    let mut best_report = pop.reports[best_index].clone().unwrap();
    let mut history = vec![generation_stats(&pop)];
    let mut generations_run = 0usize;

    loop {
        if let Some(target) = ga.fitness_target {
            if target.is_finite() && best_report.total >= target {
                break;
            }
        }
        if generations_run >= ga.max_generations {
            break;
        }
        if observer.on_generation(history.last().unwrap(), &best_report) == ObserverAction::Stop {
            break;
        }

        let g = (generations_run + 1) as u64;
        let survivors = select_survivors(&pop, ga)?;
        let n_pairs = (ga.n_pop - ga.n_survive) / 2;
        let pairs = sample_parent_pairs(
            survivors.len(),
            n_pairs,
            &mut substream(ga.seed, STREAM_PAIRING, g),
        )?;

        let mut members: Vec<Chromosome> = Vec::with_capacity(ga.n_pop);
        let mut reports: Vec<Option<FitnessReport>> = Vec::with_capacity(ga.n_pop);
        for &s in &survivors {
            members.push(pop.members[s].clone());
            reports.push(pop.reports[s].clone());
        }
        let mut mate_rng = substream(ga.seed, STREAM_MATING, g);
        for &(ra, rb) in &pairs {
            let pa = members[ra].clone();
            let pb = members[rb].clone();
            let (c1, c2) = mate(&pa, &pb, &layout, ga, &mut mate_rng)?;
            members.push(c1);
            reports.push(None);
            members.push(c2);
            reports.push(None);
        }
        debug_assert_eq!(members.len(), ga.n_pop);

        let next = Population { members, reports, generation: pop.generation + 1 };
        // Survivors are ordered descending, so the elite sits at index 0.
        pop = mutate(&next, 0, ga, &mut substream(ga.seed, STREAM_MUTATION, g))?;
        evaluate_population(&mut pop, problem)?;
        generations_run += 1;

        best_index = select_survivors(&pop, ga)?[0];
        let candidate = pop.reports[best_index].as_ref().unwrap();
        if candidate.total > best_report.total {
            best_chromosome = pop.members[best_index].clone();
            best_report = candidate.clone();
        }
        let stats = generation_stats(&pop);
        debug_assert!(
            stats.best_total >= history.last().unwrap().best_total,
            "elitism violated: best total decreased"
        );
        history.push(stats);
    }

    Ok(OptimizationResult {
        best_chromosome,
        best_report,
        history,
        generations_run,
        ga: ga.clone(),
        seed: ga.seed,
    })
}
