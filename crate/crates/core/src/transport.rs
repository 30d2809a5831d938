//! Monte Carlo realisation of the jump/delay transit model.
//!
//! Walkers move forward through a one-dimensional slab at speed `c`. Free
//! flights are exponential with mean `ℓ`. Each scattering act adds a delay
//! `τ₁` (no displacement) and an instantaneous jump `Δℓ` (no elapsed time).
//!
//! Walker `i` draws event `j` from a counter-based generator keyed by
//! `(master_seed, i, j)`, and per-walker statistics are combined by pairwise
//! summation in walker order, so results are bit-identical for any number of
//! threads.

use rayon::prelude::*;
use serde::Serialize;

use crate::constants::SPEED_OF_LIGHT;
use crate::rng::CounterRng;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TransportError {
    #[error("invalid walk configuration: {0}")]
    Config(String),
}

/// What happens to a walker in the scattering cycle that carries it past
/// the slab exit.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ExitRule {
    /// The cycle (flight, delay, jump) is completed and counted in full.
    /// Displacement and time then form a renewal-reward pair, and the ratio
    /// of their sums estimates `1 + Δℓ/ℓ` with no slab-edge bias.
    #[default]
    CompleteCycle,
    /// The walker stops at `L`: a flight is cut at the exit and a jump
    /// crossing it ends the walk with no further time.
    Clip,
}

impl std::str::FromStr for ExitRule {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "complete-cycle" | "complete_cycle" | "cycle" => Ok(Self::CompleteCycle),
            "clip" => Ok(Self::Clip),
            other => Err(format!("unknown exit rule {other:?} (expected complete-cycle or clip)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WalkConfig {
    /// Mean free path `ℓ`, metres.
    pub mean_free_path: f64,
    /// Jump per scattering act `Δℓ`, metres.
    pub jump: f64,
    /// Delay per scattering act `τ₁`, seconds.
    pub delay: f64,
    /// Slab length `L`, metres.
    pub length: f64,
    pub n_walkers: u64,
    pub master_seed: u64,
    pub exit_rule: ExitRule,
}

/// Upper limit on the expected number of scatterings per walker.
const MAX_EXPECTED_EVENTS: f64 = 1e8;

impl WalkConfig {
    pub fn new(mean_free_path: f64, jump: f64, delay: f64, length: f64, n_walkers: u64, master_seed: u64) -> Self {
        Self {
            mean_free_path,
            jump,
            delay,
            length,
            n_walkers,
            master_seed,
            exit_rule: ExitRule::default(),
        }
    }

    pub fn validate(&self) -> Result<(), TransportError> {
        let bad = |msg: String| Err(TransportError::Config(msg));
        if !(self.mean_free_path.is_finite() && self.mean_free_path > 0.0) {
            return bad(format!("mean free path must be positive, got {}", self.mean_free_path));
        }
        if !(self.length.is_finite() && self.length > 0.0) {
            return bad(format!("slab length must be positive, got {}", self.length));
        }
        if !(self.jump.is_finite() && self.jump >= 0.0) {
            return bad(format!("jump must be non-negative, got {}", self.jump));
        }
        if !(self.delay.is_finite() && self.delay >= 0.0) {
            return bad(format!("delay must be non-negative, got {}", self.delay));
        }
        if self.n_walkers == 0 {
            return bad("at least one walker is required".into());
        }
        if self.length / (self.mean_free_path + self.jump) > MAX_EXPECTED_EVENTS {
            return bad(format!(
                "slab spans more than {MAX_EXPECTED_EVENTS:e} free paths per walker"
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TransportResult {
    /// Total displacement over `c` times total elapsed time.
    pub mean_speed_ratio: f64,
    pub standard_error: f64,
    /// Reciprocal estimator, `c·Σt / Σd`: the simulated group index.
    pub implied_group_index: f64,
    pub group_index_standard_error: f64,
    pub mean_scatter_count: f64,
    pub scatter_count_standard_error: f64,
    pub walker_count: u64,
    pub master_seed: u64,
    pub mean_free_path: f64,
    pub jump: f64,
    pub delay: f64,
    pub length: f64,
    pub exit_rule: ExitRule,
}

impl TransportResult {
    pub const CSV_HEADER: [&'static str; 9] = [
        "seed",
        "n_walkers",
        "ell",
        "jump",
        "tau1",
        "L",
        "speed_ratio",
        "stderr",
        "mean_scatters",
    ];

    /// Values in [`Self::CSV_HEADER`] order, at full round-trip precision.
    pub fn csv_row(&self) -> [String; 9] {
        [
            self.master_seed.to_string(),
            self.walker_count.to_string(),
            self.mean_free_path.to_string(),
            self.jump.to_string(),
            self.delay.to_string(),
            self.length.to_string(),
            self.mean_speed_ratio.to_string(),
            self.standard_error.to_string(),
            self.mean_scatter_count.to_string(),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct WalkerStats {
    /// Total displacement, metres.
    displacement: f64,
    /// `c` times elapsed time, metres.
    light_path: f64,
    scatters: f64,
}

fn walk(cfg: &WalkConfig, rng: &CounterRng, walker: u64) -> WalkerStats {
    let c_delay = SPEED_OF_LIGHT * cfg.delay;
    let mut pos = 0.0;
    let mut flown = 0.0;
    let mut jumped = 0.0;
    let mut scatters: u64 = 0;
    let mut event: u64 = 0;
    match cfg.exit_rule {
        ExitRule::CompleteCycle => loop {
            let s = rng.exponential(walker, event, cfg.mean_free_path);
            event += 1;
            flown += s;
            scatters += 1;
            jumped += cfg.jump;
            pos += s + cfg.jump;
            if pos >= cfg.length {
                break;
            }
        },
        ExitRule::Clip => loop {
            let s = rng.exponential(walker, event, cfg.mean_free_path);
            event += 1;
            let remaining = cfg.length - pos;
            if s >= remaining {
                break;
            }
            pos += s;
            scatters += 1;
            let j = cfg.jump.min(cfg.length - pos);
            jumped += j;
            pos += cfg.jump;
            if pos >= cfg.length {
                break;
            }
        },
    }
    let (displacement, flown) = match cfg.exit_rule {
        ExitRule::CompleteCycle => (flown + jumped, flown),
        ExitRule::Clip => (cfg.length, cfg.length - jumped),
    };
    WalkerStats {
        displacement,
        light_path: flown + scatters as f64 * c_delay,
        scatters: scatters as f64,
    }
}

/// Pairwise (cascade) summation in index order.
fn pairwise_sum<F: Fn(&WalkerStats) -> f64 + Copy>(xs: &[WalkerStats], f: F) -> f64 {
    const LEAF: usize = 32;
    if xs.len() <= LEAF {
        return xs.iter().map(f).sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid], f) + pairwise_sum(&xs[mid..], f)
}

/// Ratio-of-sums estimate `Σnum/Σden` and its delta-method standard error.
fn ratio_estimate<N, D>(stats: &[WalkerStats], num: N, den: D) -> (f64, f64)
where
    N: Fn(&WalkerStats) -> f64 + Copy,
    D: Fn(&WalkerStats) -> f64 + Copy,
{
    let n = stats.len() as f64;
    let sum_num = pairwise_sum(stats, num);
    let sum_den = pairwise_sum(stats, den);
    let ratio = sum_num / sum_den;
    if stats.len() < 2 {
        return (ratio, 0.0);
    }
    let resid = pairwise_sum(stats, |w| (num(w) - ratio * den(w)).powi(2));
    let mean_den = sum_den / n;
    (ratio, (resid / (n * (n - 1.0))).sqrt() / mean_den)
}

fn aggregate(cfg: &WalkConfig, stats: &[WalkerStats]) -> TransportResult {
    let n = stats.len() as f64;
    let (speed, speed_se) = ratio_estimate(stats, |w| w.displacement, |w| w.light_path);
    let (index, index_se) = ratio_estimate(stats, |w| w.light_path, |w| w.displacement);
    let mean_k = pairwise_sum(stats, |w| w.scatters) / n;
    let k_se = if stats.len() < 2 {
        0.0
    } else {
        (pairwise_sum(stats, |w| (w.scatters - mean_k).powi(2)) / (n * (n - 1.0))).sqrt()
    };
    TransportResult {
        mean_speed_ratio: speed,
        standard_error: speed_se,
        implied_group_index: index,
        group_index_standard_error: index_se,
        mean_scatter_count: mean_k,
        scatter_count_standard_error: k_se,
        walker_count: cfg.n_walkers,
        master_seed: cfg.master_seed,
        mean_free_path: cfg.mean_free_path,
        jump: cfg.jump,
        delay: cfg.delay,
        length: cfg.length,
        exit_rule: cfg.exit_rule,
    }
}

/// Runs all walkers on the current rayon pool.
pub fn simulate(cfg: &WalkConfig) -> Result<TransportResult, TransportError> {
    cfg.validate()?;
    let rng = CounterRng::new(cfg.master_seed);
    let stats: Vec<WalkerStats> = (0..cfg.n_walkers)
        .into_par_iter()
        .map(|i| walk(cfg, &rng, i))
        .collect();
    Ok(aggregate(cfg, &stats))
}

/// Runs all walkers on a dedicated pool of `threads` threads.
pub fn simulate_with_threads(cfg: &WalkConfig, threads: usize) -> Result<TransportResult, TransportError> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| TransportError::Config(format!("cannot build thread pool: {e}")))?;
    pool.install(|| simulate(cfg))
}

/// Independent simulations, reported in input order. A bad configuration
/// yields an error in its slot without stopping the others.
pub fn sweep(configs: &[WalkConfig]) -> Vec<Result<TransportResult, TransportError>> {
    configs.iter().map(simulate).collect()
}
