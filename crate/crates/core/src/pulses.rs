//! Chromosome encoding and smooth control-schedule interpolation.
//!
//! A chromosome holds one gene in [-1, 1] per control per schedule node.
//! Genes scale linearly to physical node values (coupling genes by `g_max`,
//! the drive gene by `xi_max`), and consecutive nodes are bridged by a
//! rescaled, clipped hyperbolic-tangent ramp so every control is smooth in
//! time while passing exactly through its node values.

use ndarray::Array2;
use rand::Rng;

use crate::config::SystemConfig;
use crate::error::{CoreError, Result};

/// Real-valued genome with every gene in [-1, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct Chromosome {
    genes: Vec<f64>,
}

impl Chromosome {
    pub fn new(genes: Vec<f64>) -> Result<Self> {
        if genes.is_empty() {
            return Err(CoreError::invalid_argument("chromosome must be non-empty"));
        }
        for (i, g) in genes.iter().enumerate() {
            if !g.is_finite() || *g < -1.0 || *g > 1.0 {
                return Err(CoreError::invalid_argument(format!(
                    "gene {i} is {g}, outside [-1, 1]"
                )));
            }
        }
        Ok(Chromosome { genes })
    }

    /// Uniformly random genome of the given length.
    pub fn random(n_var: usize, rng: &mut impl Rng) -> Self {
        Chromosome { genes: (0..n_var).map(|_| rng.gen_range(-1.0..=1.0)).collect() }
    }

    pub fn len(&self) -> usize {
        self.genes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.genes.is_empty()
    }

    pub fn genes(&self) -> &[f64] {
        &self.genes
    }

    pub(crate) fn genes_mut(&mut self) -> &mut [f64] {
        &mut self.genes
    }

    pub(crate) fn from_raw(genes: Vec<f64>) -> Self {
        debug_assert!(genes.iter().all(|g| g.is_finite() && (-1.0..=1.0).contains(g)));
        Chromosome { genes }
    }
}

/// Shape of the smooth ramp joining two schedule nodes over one interval.
///
/// On the interval `[t_lo, t_lo + tau)` between node values `u_lo` and `u_hi`
/// the control follows
///
/// `u(t) = (u_hi - u_lo) * (S * tanh(W * (t - t_mid)) + 1) / 2 + u_lo`
///
/// with midpoint `t_mid = t_lo + tau / 2`, steepness `W = 2 * window / tau`
/// and scale `S = 1 / tanh(window)`. The scale stretches the tanh so the ramp
/// hits `u_lo` and `u_hi` exactly at the interval edges rather than only
/// asymptotically.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseShape {
    window: f64,
    steepness: f64,
    scale: f64,
}

impl PulseShape {
    /// Default half-width of the tanh argument at the interval edge.
    pub const DEFAULT_WINDOW: f64 = 2.5;

    pub fn new(window: f64, tau: f64) -> Result<Self> {
        if !(window > 0.0) || !window.is_finite() {
            return Err(CoreError::invalid_config("pulse window must be positive and finite"));
        }
        if !(tau > 0.0) || !tau.is_finite() {
            return Err(CoreError::invalid_config("tau must be positive and finite"));
        }
        Ok(PulseShape {
            window,
            steepness: 2.0 * window / tau,
            scale: 1.0 / window.tanh(),
        })
    }

    pub fn window(&self) -> f64 {
        self.window
    }

    pub fn steepness(&self) -> f64 {
        self.steepness
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }
}

/// Physical control schedule: per-control node values plus the ramp shape.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlSchedule {
    /// Row k holds the node values of control k, in physical units (rad/ns).
    node_values: Array2<f64>,
    shape: PulseShape,
    tau: f64,
}

impl ControlSchedule {
    pub fn new(node_values: Array2<f64>, shape: PulseShape, tau: f64) -> Result<Self> {
        if node_values.nrows() == 0 || node_values.ncols() < 2 {
            return Err(CoreError::invalid_argument(
                "schedule needs at least one control and two nodes",
            ));
        }
        if node_values.iter().any(|v| !v.is_finite()) {
            return Err(CoreError::invalid_argument("schedule has non-finite node values"));
        }
        if !(tau > 0.0) || !tau.is_finite() {
            return Err(CoreError::invalid_argument("tau must be positive and finite"));
        }
        Ok(ControlSchedule { node_values, shape, tau })
    }

    pub fn n_controls(&self) -> usize {
        self.node_values.nrows()
    }

    pub fn n_nodes(&self) -> usize {
        self.node_values.ncols()
    }

    pub fn n_intervals(&self) -> usize {
        self.n_nodes() - 1
    }

    pub fn node_values(&self) -> &Array2<f64> {
        &self.node_values
    }

    pub fn shape(&self) -> &PulseShape {
        &self.shape
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn horizon(&self) -> f64 {
        self.tau * self.n_intervals() as f64
    }
}

/// Ramp value between `u_lo` at `t_lo` and `u_hi` at `t_lo + tau`.
///
/// `t` must lie in the closed interval `[t_lo, t_lo + tau]`; both endpoints
/// evaluate exactly to their node values.
pub fn segment_value(
    u_lo: f64,
    u_hi: f64,
    t: f64,
    t_lo: f64,
    shape: &PulseShape,
    tau: f64,
) -> Result<f64> {
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(CoreError::invalid_argument("tau must be positive and finite"));
    }
    if !t.is_finite() || t < t_lo || t > t_lo + tau {
        return Err(CoreError::invalid_argument(format!(
            "t = {t} outside segment [{t_lo}, {}]",
            t_lo + tau
        )));
    }
    let t_mid = t_lo + 0.5 * tau;
    let ramp = shape.scale() * (shape.steepness() * (t - t_mid)).tanh();
    Ok((u_hi - u_lo) * 0.5 * (ramp + 1.0) + u_lo)
}

/// Value of control `control_idx` at time `t` in `[0, horizon]`.
///
/// Times on node boundaries belong to the interval starting there, except the
/// final horizon time which evaluates the last interval at its right edge.
pub fn control_value(schedule: &ControlSchedule, control_idx: usize, t: f64) -> Result<f64> {
    if control_idx >= schedule.n_controls() {
        return Err(CoreError::invalid_argument(format!(
            "control index {control_idx} outside 0..{}",
            schedule.n_controls()
        )));
    }
    let horizon = schedule.horizon();
    let slack = 1e-9 * horizon.max(1.0);
    if !t.is_finite() || t < -slack || t > horizon + slack {
        return Err(CoreError::invalid_argument(format!(
            "t = {t} outside schedule horizon [0, {horizon}]"
        )));
    }
    let t = t.clamp(0.0, horizon);
    let tau = schedule.tau();
    let last = schedule.n_intervals() - 1;
    let interval = ((t / tau) as usize).min(last);
    let t_lo = interval as f64 * tau;
    // Guard against rounding in t / tau putting t just below t_lo.
    let (interval, t_lo) = if t < t_lo && interval > 0 {
        (interval - 1, (interval - 1) as f64 * tau)
    } else {
        (interval, t_lo)
    };
    // Accumulated node times and n * tau can disagree by an ulp at the
    // horizon; pin t inside the chosen segment.
    let t = t.max(t_lo).min(t_lo + tau);
    segment_value(
        schedule.node_values()[(control_idx, interval)],
        schedule.node_values()[(control_idx, interval + 1)],
        t,
        t_lo,
        schedule.shape(),
        tau,
    )
}

/// Decodes a chromosome into a physical schedule for the given system.
///
/// Gene block `k` (indices `k * n_nodes .. (k + 1) * n_nodes`) holds the
/// nodes of control `k`. Controls `0 .. n_qubits` are qubit couplings scaled
/// by `g_max`; control `n_qubits` is the cavity drive scaled by `xi_max`.
pub fn decode_chromosome(
    chromosome: &Chromosome,
    cfg: &SystemConfig,
    shape: &PulseShape,
) -> Result<ControlSchedule> {
    cfg.validate()?;
    if chromosome.len() != cfg.n_var() {
        return Err(CoreError::DimensionMismatch {
            expected: cfg.n_var(),
            actual: chromosome.len(),
        });
    }
    let n_nodes = cfg.n_nodes();
    let mut node_values = Array2::<f64>::zeros((cfg.n_controls(), n_nodes));
    for k in 0..cfg.n_controls() {
        let bound = if k < cfg.n_qubits { cfg.g_max } else { cfg.xi_max };
        for i in 0..n_nodes {
            node_values[(k, i)] = bound * chromosome.genes()[k * n_nodes + i];
        }
    }
    ControlSchedule::new(node_values, *shape, cfg.tau)
}
