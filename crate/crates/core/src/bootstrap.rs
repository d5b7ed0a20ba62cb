//! Parametric bootstrap under the fitted model and BCa percentile intervals.
//!
//! Each replicate `b` draws from its own ChaCha stream `(seed, b)`, so results
//! do not depend on how replicates are scheduled across threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::characteristics::{self, Characteristic, Scope};
use crate::error::{Error, Result};
use crate::estimation::{fit, fit_distribution, CountData, FitOptions, FitResult};
use crate::model::{lifetime_cdf, shifting_time, ModelParams, StepStressDesign, StressLevel};
use crate::stats::{normal_cdf, normal_quantile, two_sided_z, Interval};

/// RNG for replicate `index` of a run seeded with `seed`.
pub fn replicate_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Inverse of the marginal step-stress CDF of risk `j` at `u ∈ [0, 1)`.
pub fn invert_marginal_cdf(params: &ModelParams, design: &StepStressDesign, j: usize, u: f64) -> f64 {
    let tail = -(-u).ln_1p();
    if u < lifetime_cdf(params, design, design.tau1(), Some(j)) {
        params.scale(j, design.x1()) * tail
    } else {
        params.scale(j, design.x2()) * tail - shifting_time(params, design, j, StressLevel::Second)
    }
}

/// Flat cell index of one simulated unit.
fn draw_cell<R: Rng + ?Sized>(params: &ModelParams, design: &StepStressDesign, rng: &mut R) -> usize {
    let mut best = (f64::INFINITY, 0);
    for j in 0..design.num_risks() {
        let t = invert_marginal_cdf(params, design, j, rng.random::<f64>());
        if t < best.0 {
            best = (t, j);
        }
    }
    match design.interval_of(best.0) {
        Some(l) => design.cell_index(l, best.1),
        None => design.survival_cell(),
    }
}

/// Simulates `n` units without checking well-posedness.
pub fn simulate_units<R: Rng + ?Sized>(
    params: &ModelParams,
    design: &StepStressDesign,
    n: u64,
    rng: &mut R,
) -> CountData {
    let mut cells = vec![0u64; design.num_cells()];
    for _ in 0..n {
        cells[draw_cell(params, design, rng)] += 1;
    }
    CountData::from_cells(design.num_intervals(), design.num_risks(), &cells).expect("cell count matches design")
}

/// Simulates `n` units, redrawing until every risk fails at both stress levels.
pub fn simulate_dataset<R: Rng + ?Sized>(
    params: &ModelParams,
    design: &StepStressDesign,
    n: u64,
    max_regenerations: usize,
    rng: &mut R,
) -> Result<CountData> {
    for _ in 0..=max_regenerations {
        let data = simulate_units(params, design, n, rng);
        if data.is_well_posed(design) {
            return Ok(data);
        }
    }
    Err(Error::DegenerateData {
        attempts: max_regenerations + 1,
    })
}

/// Statistic whose sampling distribution is bootstrapped.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BootstrapTarget {
    Characteristic {
        kind: Characteristic,
        scope: Scope,
    },
    /// Index into `(a_01, a_11, …, a_0R, a_1R)`.
    Parameter(usize),
}

impl BootstrapTarget {
    pub fn mttf() -> Self {
        BootstrapTarget::Characteristic {
            kind: Characteristic::Mttf,
            scope: Scope::Overall,
        }
    }

    pub fn evaluate(&self, params: &ModelParams, design: &StepStressDesign) -> f64 {
        match *self {
            BootstrapTarget::Characteristic { kind, scope } => characteristics::value(params, design.x0(), kind, scope),
            BootstrapTarget::Parameter(k) => params.as_slice()[k],
        }
    }

    fn validate(&self, design: &StepStressDesign) -> Result<()> {
        match *self {
            BootstrapTarget::Characteristic { kind, scope } => {
                kind.validate()?;
                match scope {
                    Scope::Cause(j) if j >= design.num_risks() => {
                        Err(Error::InvalidParams(format!("risk index {j} out of range")))
                    }
                    _ => Ok(()),
                }
            }
            BootstrapTarget::Parameter(k) if k >= design.num_params() => {
                Err(Error::InvalidParams(format!("parameter index {k} out of range")))
            }
            BootstrapTarget::Parameter(_) => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapConfig {
    /// Number of bootstrap replicates `B`.
    pub replicates: usize,
    pub seed: u64,
    /// Consecutive discarded datasets tolerated per replicate.
    pub max_regenerations: usize,
    pub level: f64,
    pub target: BootstrapTarget,
}

pub const MIN_REPLICATES: usize = 100;

impl BootstrapConfig {
    pub fn new(replicates: usize, seed: u64, target: BootstrapTarget) -> Self {
        Self {
            replicates,
            seed,
            max_regenerations: 1000,
            level: 0.95,
            target,
        }
    }

    pub fn validate(&self, design: &StepStressDesign) -> Result<()> {
        if self.replicates < MIN_REPLICATES {
            return Err(Error::InvalidParams(format!(
                "at least {MIN_REPLICATES} bootstrap replicates required, got {}",
                self.replicates
            )));
        }
        if !(0.0..1.0).contains(&self.level) {
            return Err(Error::Domain(format!(
                "confidence level must lie in [0, 1), got {}",
                self.level
            )));
        }
        self.target.validate(design)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BcaInterval {
    pub interval: Interval,
    pub estimate: f64,
    /// `ẑ0`; infinite when every replicate fell on one side of the estimate.
    pub bias_correction: f64,
    pub acceleration: f64,
    /// One-based order statistics used for the endpoints.
    pub lower_index: usize,
    pub upper_index: usize,
    /// Set when `ẑ0` was infinite and the plain percentile interval was returned.
    pub percentile_fallback: bool,
}

/// Adjusted percentile `Φ(ẑ0 + (ẑ0 + z)/(1 − γ̂(ẑ0 + z)))`.
fn adjusted_level(z0: f64, acceleration: f64, z: f64) -> f64 {
    let shifted = z0 + z;
    let denom = 1.0 - acceleration * shifted;
    if denom <= 0.0 {
        // past the pole the adjustment saturates at the extreme order statistic
        return if shifted < 0.0 { 0.0 } else { 1.0 };
    }
    normal_cdf(z0 + shifted / denom)
}

fn order_index(gamma: f64, b: usize) -> usize {
    // absorb round-off in Φ(Φ⁻¹(·)) before taking the ceiling
    ((gamma * b as f64 - 1e-9).ceil() as usize).clamp(1, b)
}

/// BCa interval from already computed replicates.
pub fn bca_from_replicates(estimate: f64, replicates: &[f64], acceleration: f64, level: f64) -> Result<BcaInterval> {
    if replicates.is_empty() {
        return Err(Error::Degenerate("no bootstrap replicates".into()));
    }
    if replicates.iter().any(|v| !v.is_finite()) {
        return Err(Error::Degenerate("non-finite bootstrap replicate".into()));
    }
    let b = replicates.len();
    let mut sorted = replicates.to_vec();
    sorted.sort_by(f64::total_cmp);
    let below = sorted.partition_point(|&v| v <= estimate);
    let z0 = normal_quantile(below as f64 / b as f64);
    let percentile_fallback = !z0.is_finite();
    let (z0_used, accel_used) = if percentile_fallback {
        (0.0, 0.0)
    } else {
        (z0, acceleration)
    };
    let z = two_sided_z(level);
    let lower_index = order_index(adjusted_level(z0_used, accel_used, -z), b);
    let upper_index = order_index(adjusted_level(z0_used, accel_used, z), b);
    Ok(BcaInterval {
        interval: Interval::new(sorted[lower_index - 1], sorted[upper_index - 1]),
        estimate,
        bias_correction: z0,
        acceleration,
        lower_index,
        upper_index,
        percentile_fallback,
    })
}

/// Acceleration from the failure-level jackknife: one leave-one-out refit per
/// observed failure, computed once per distinct cell and weighted by its count.
/// Deletions whose refit fails are skipped; returns `(γ̂, skipped failures)`.
pub fn jackknife_acceleration(
    data: &CountData,
    design: &StepStressDesign,
    original: &FitResult,
    target: BootstrapTarget,
) -> (f64, u64) {
    let options = FitOptions {
        multi_start: false,
        initial: Some(original.params.clone()),
        compute_covariance: false,
        ..FitOptions::default()
    };
    let cells = data.cells();
    let failure_cells: Vec<usize> = (0..cells.len() - 1).filter(|&c| cells[c] > 0).collect();
    let results: Vec<(u64, Option<f64>)> = failure_cells
        .par_iter()
        .map(|&c| {
            let reduced = data.without_one(c).expect("nonempty cell");
            let stat = fit_distribution(&reduced.empirical(), reduced.total(), design, original.beta, &options)
                .ok()
                .map(|f| target.evaluate(&f.params, design));
            (cells[c], stat)
        })
        .collect();

    let skipped: u64 = results.iter().filter(|(_, s)| s.is_none()).map(|(n, _)| n).sum();
    let kept: Vec<(f64, f64)> = results.iter().filter_map(|&(n, s)| s.map(|v| (n as f64, v))).collect();
    let n_l: f64 = kept.iter().map(|(n, _)| n).sum();
    if n_l == 0.0 {
        return (0.0, skipped);
    }
    let mean = kept.iter().map(|(n, v)| n * v).sum::<f64>() / n_l;
    let num: f64 = kept.iter().map(|(n, v)| n * (mean - v).powi(3)).sum();
    let den: f64 = kept.iter().map(|(n, v)| n * (mean - v).powi(2)).sum();
    if den <= 0.0 {
        return (0.0, skipped);
    }
    (num / (6.0 * den.powf(1.5)), skipped)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapResult {
    pub bca: BcaInterval,
    /// Bootstrap statistics in replicate order.
    pub replicates: Vec<f64>,
    /// Simulated datasets discarded (ill-posed or failed fit) across all replicates.
    pub discarded: usize,
    pub jackknife_skipped: u64,
}

/// One bootstrap statistic from replicate stream `index`.
fn bootstrap_replicate(
    original: &FitResult,
    design: &StepStressDesign,
    config: &BootstrapConfig,
    options: &FitOptions,
    index: u64,
) -> Result<(f64, usize)> {
    let mut rng = replicate_rng(config.seed, index);
    let mut discarded = 0;
    loop {
        let data = simulate_units(&original.params, design, original.sample_size, &mut rng);
        if data.is_well_posed(design) {
            if let Ok(f) = fit(&data, design, original.beta, options) {
                return Ok((config.target.evaluate(&f.params, design), discarded));
            }
        }
        discarded += 1;
        if discarded > config.max_regenerations {
            return Err(Error::DegenerateData { attempts: discarded });
        }
    }
}

/// BCa interval around an existing fit of `data`.
pub fn bca_interval_for_fit(
    original: &FitResult,
    data: &CountData,
    design: &StepStressDesign,
    config: &BootstrapConfig,
) -> Result<BootstrapResult> {
    config.validate(design)?;
    let options = FitOptions {
        multi_start: false,
        initial: Some(original.params.clone()),
        compute_covariance: false,
        ..FitOptions::default()
    };
    let draws: Vec<(f64, usize)> = (0..config.replicates as u64)
        .into_par_iter()
        .map(|b| bootstrap_replicate(original, design, config, &options, b))
        .collect::<Result<_>>()?;
    let replicates: Vec<f64> = draws.iter().map(|d| d.0).collect();
    let discarded = draws.iter().map(|d| d.1).sum();
    let (acceleration, jackknife_skipped) = jackknife_acceleration(data, design, original, config.target);
    let estimate = config.target.evaluate(&original.params, design);
    let bca = bca_from_replicates(estimate, &replicates, acceleration, config.level)?;
    Ok(BootstrapResult {
        bca,
        replicates,
        discarded,
        jackknife_skipped,
    })
}

/// Fits `data` at `beta` and returns its BCa interval for `config.target`.
pub fn bca_interval(
    data: &CountData,
    design: &StepStressDesign,
    beta: f64,
    config: &BootstrapConfig,
) -> Result<BootstrapResult> {
    let options = FitOptions {
        compute_covariance: false,
        ..FitOptions::default()
    };
    let original = fit(data, design, beta, &options)?;
    bca_interval_for_fit(&original, data, design, config)
}
