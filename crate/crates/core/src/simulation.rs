//! Monte Carlo studies: contaminated data generation, mean squared errors and
//! confidence-interval coverage across tuning parameters.
//!
//! Replicate `r` draws all of its randomness from stream `(seed, r)` and the
//! results are reduced in replicate order, so reports are reproducible for any
//! thread count.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bootstrap::{bca_interval_for_fit, replicate_rng, simulate_units, BootstrapConfig, BootstrapTarget};
use crate::characteristics::{self, Characteristic, Scope};
use crate::error::{Error, Result};
use crate::estimation::{fit, CountData, FitOptions, FitResult};
use crate::model::{ModelParams, StepStressDesign};
use crate::stats::Interval;

/// Largest fraction of replicates allowed to fail before a study errors.
pub const MAX_FAILURE_RATE: f64 = 0.2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationScenario {
    pub design: StepStressDesign,
    pub true_params: ModelParams,
    pub sample_size: u64,
    /// Fraction `ε` of units replaced by outliers.
    pub contamination: f64,
    /// Zero-based `(interval, risk)` cells receiving outliers with equal probability.
    pub contamination_cells: Vec<(usize, usize)>,
    pub replications: usize,
    pub betas: Vec<f64>,
    pub seed: u64,
    pub max_regenerations: usize,
    /// Mission time for the reliability estimates in MSE studies.
    pub mission_time: f64,
    /// Bootstrap replicates per simulated dataset for BCa coverage.
    pub bootstrap_replicates: usize,
    pub level: f64,
}

impl SimulationScenario {
    /// Two stress levels (35, 45), change at 45, inspections every 10 hours from
    /// 15 to 75, N = 360, outliers spread over intervals 3 to 6 and both risks.
    pub fn reference() -> Self {
        let design = StepStressDesign::new(
            (35.0, 45.0),
            45.0,
            75.0,
            vec![15.0, 25.0, 35.0, 45.0, 55.0, 65.0, 75.0],
            2,
            25.0,
        )
        .expect("valid reference design");
        Self {
            contamination_cells: cells_for_intervals(&design, &[2, 3, 4, 5]),
            design,
            true_params: ModelParams::from_blocks(&[(5.0, -0.02), (6.2, -0.04)]).expect("finite"),
            sample_size: 360,
            contamination: 0.0,
            replications: 1000,
            betas: vec![0.0, 0.2, 0.4, 0.6, 0.8, 1.0],
            seed: 2024,
            max_regenerations: 1000,
            mission_time: 50.0,
            bootstrap_replicates: 1000,
            level: 0.95,
        }
    }

    pub fn with_contamination(mut self, contamination: f64) -> Self {
        self.contamination = contamination;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParams(m));
        if self.true_params.num_risks() != self.design.num_risks() {
            return bad("true parameters do not match the number of risks".into());
        }
        if !(0.0..1.0).contains(&self.contamination) {
            return bad(format!(
                "contamination fraction must lie in [0, 1), got {}",
                self.contamination
            ));
        }
        if self.contamination > 0.0 && self.contamination_cells.is_empty() {
            return bad("contamination requested but no contamination cells given".into());
        }
        if let Some(&(l, j)) = self
            .contamination_cells
            .iter()
            .find(|&&(l, j)| l >= self.design.num_intervals() || j >= self.design.num_risks())
        {
            return bad(format!(
                "contamination cell (interval {l}, risk {j}) outside the design"
            ));
        }
        if self.replications == 0 || self.sample_size == 0 {
            return bad("replications and sample size must be positive".into());
        }
        if self.betas.is_empty() || self.betas.iter().any(|b| !(*b >= 0.0) || !b.is_finite()) {
            return bad("tuning parameters must be a nonempty list of finite values >= 0".into());
        }
        if !(0.0..1.0).contains(&self.level) {
            return bad(format!("confidence level must lie in [0, 1), got {}", self.level));
        }
        Ok(())
    }
}

/// Every risk of the given zero-based intervals.
pub fn cells_for_intervals(design: &StepStressDesign, intervals: &[usize]) -> Vec<(usize, usize)> {
    intervals
        .iter()
        .flat_map(|&l| (0..design.num_risks()).map(move |j| (l, j)))
        .collect()
}

fn draw_contamination<R: Rng + ?Sized>(scenario: &SimulationScenario, m: u64, rng: &mut R) -> Vec<u64> {
    let design = &scenario.design;
    let mut cells = vec![0u64; design.num_cells()];
    for _ in 0..m {
        let (l, j) = scenario.contamination_cells[rng.random_range(0..scenario.contamination_cells.len())];
        cells[design.cell_index(l, j)] += 1;
    }
    cells
}

/// `⌊εN⌋` outliers spread uniformly over the contamination cells plus `N − ⌊εN⌋`
/// units from the model, redrawn until well-posed.
pub fn generate_contaminated<R: Rng + ?Sized>(scenario: &SimulationScenario, rng: &mut R) -> Result<CountData> {
    let eps = scenario.contamination;
    if !(0.0..=1.0).contains(&eps) {
        return Err(Error::InvalidParams(format!(
            "contamination fraction must lie in [0, 1], got {eps}"
        )));
    }
    let n = scenario.sample_size;
    let m = ((eps * n as f64) + 1e-9).floor() as u64;
    if m > 0 && scenario.contamination_cells.is_empty() {
        return Err(Error::InvalidParams("no contamination cells".into()));
    }
    let design = &scenario.design;
    for _ in 0..=scenario.max_regenerations {
        let clean = simulate_units(&scenario.true_params, design, n - m, rng);
        let data = if m == 0 {
            clean
        } else {
            let outliers = CountData::from_cells(
                design.num_intervals(),
                design.num_risks(),
                &draw_contamination(scenario, m, rng),
            )?;
            clean.merged(&outliers)?
        };
        if data.is_well_posed(design) {
            return Ok(data);
        }
    }
    Err(Error::DegenerateData {
        attempts: scenario.max_regenerations + 1,
    })
}

/// Fits every β on one dataset, warm-starting from the MLE.
fn fit_all_betas(data: &CountData, scenario: &SimulationScenario, covariance: bool) -> Vec<Option<FitResult>> {
    let design = &scenario.design;
    let base = FitOptions {
        compute_covariance: covariance,
        ..FitOptions::default()
    };
    let mle = fit(
        data,
        design,
        0.0,
        &FitOptions {
            multi_start: false,
            ..base.clone()
        },
    )
    .ok();
    scenario
        .betas
        .iter()
        .map(|&beta| {
            if beta == 0.0 {
                if let Some(m) = &mle {
                    return Some(m.clone());
                }
            }
            let warm = mle.as_ref().map(|m| FitOptions {
                multi_start: false,
                initial: Some(m.params.clone()),
                ..base.clone()
            });
            warm.and_then(|o| fit(data, design, beta, &o).ok())
                .or_else(|| fit(data, design, beta, &base).ok())
        })
        .collect()
}

fn check_failures(failed: usize, total: usize, what: &str) -> Result<()> {
    if failed as f64 > MAX_FAILURE_RATE * total as f64 {
        return Err(Error::Simulation(format!(
            "{failed} of {total} replicates failed ({what})"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MseRow {
    pub beta: f64,
    pub epsilon: f64,
    /// MSE of each coefficient `(a_01, a_11, …)`.
    pub params: Vec<f64>,
    pub mttf: f64,
    pub median: f64,
    pub reliability: f64,
    pub replicates_used: usize,
    pub fits_failed: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntervalMethod {
    Direct,
    Transformed,
    Bca,
}

impl IntervalMethod {
    pub fn label(&self) -> &'static str {
        match self {
            IntervalMethod::Direct => "direct",
            IntervalMethod::Transformed => "transformed",
            IntervalMethod::Bca => "bca",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageRow {
    pub beta: f64,
    pub epsilon: f64,
    pub method: IntervalMethod,
    pub characteristic: Characteristic,
    pub coverage: f64,
    pub mean_width: f64,
    pub replicates_used: usize,
    pub failed: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub mse: Vec<MseRow>,
    pub coverage: Vec<CoverageRow>,
    /// Datasets regenerated or replicates lost before fitting, summed over the study.
    pub datasets_failed: usize,
}

impl SimulationReport {
    pub fn extend(&mut self, other: SimulationReport) {
        self.mse.extend(other.mse);
        self.coverage.extend(other.coverage);
        self.datasets_failed += other.datasets_failed;
    }

    pub fn mse_row(&self, beta: f64, epsilon: f64) -> Option<&MseRow> {
        self.mse.iter().find(|r| r.beta == beta && r.epsilon == epsilon)
    }

    pub fn coverage_row(&self, beta: f64, epsilon: f64, method: IntervalMethod) -> Option<&CoverageRow> {
        self.coverage
            .iter()
            .find(|r| r.beta == beta && r.epsilon == epsilon && r.method == method)
    }
}

/// Per-β MSE of the coefficients and of MTTF, median and reliability at `x0`.
pub fn run_mse_study(scenario: &SimulationScenario) -> Result<SimulationReport> {
    scenario.validate()?;
    let design = &scenario.design;
    let x0 = design.x0();
    let kinds = [
        Characteristic::Mttf,
        Characteristic::median(),
        Characteristic::Reliability {
            mission_time: scenario.mission_time,
        },
    ];
    let truth_chars: Vec<f64> = kinds
        .iter()
        .map(|&k| characteristics::value(&scenario.true_params, x0, k, Scope::Overall))
        .collect();

    let per_rep: Vec<Option<Vec<Option<Vec<f64>>>>> =
        (0..scenario.replications as u64)
            .into_par_iter()
            .map(|r| {
                let mut rng = replicate_rng(scenario.seed, r);
                let data = generate_contaminated(scenario, &mut rng).ok()?;
                Some(
                    fit_all_betas(&data, scenario, false)
                        .into_iter()
                        .map(|f| {
                            f.map(|f| {
                                let mut errs: Vec<f64> = f
                                    .params
                                    .as_slice()
                                    .iter()
                                    .zip(scenario.true_params.as_slice())
                                    .map(|(a, b)| (a - b).powi(2))
                                    .collect();
                                errs.extend(kinds.iter().zip(&truth_chars).map(|(&k, t)| {
                                    (characteristics::value(&f.params, x0, k, Scope::Overall) - t).powi(2)
                                }));
                                errs
                            })
                        })
                        .collect(),
                )
            })
            .collect();

    let datasets_failed = per_rep.iter().filter(|r| r.is_none()).count();
    check_failures(datasets_failed, scenario.replications, "data generation")?;
    let np = design.num_params();
    let mut rows = Vec::new();
    for (b, &beta) in scenario.betas.iter().enumerate() {
        let errs: Vec<&Vec<f64>> = per_rep.iter().flatten().filter_map(|fits| fits[b].as_ref()).collect();
        let fits_failed = scenario.replications - errs.len();
        check_failures(fits_failed, scenario.replications, &format!("fits at beta {beta}"))?;
        let n = errs.len() as f64;
        let mean = |k: usize| errs.iter().map(|e| e[k]).sum::<f64>() / n;
        rows.push(MseRow {
            beta,
            epsilon: scenario.contamination,
            params: (0..np).map(mean).collect(),
            mttf: mean(np),
            median: mean(np + 1),
            reliability: mean(np + 2),
            replicates_used: errs.len(),
            fits_failed,
        });
    }
    Ok(SimulationReport {
        mse: rows,
        coverage: Vec::new(),
        datasets_failed,
    })
}

/// Empirical coverage and mean width of the requested interval methods for
/// an overall characteristic at `x0`.
pub fn run_coverage_study(
    scenario: &SimulationScenario,
    characteristic: Characteristic,
    methods: &[IntervalMethod],
) -> Result<SimulationReport> {
    scenario.validate()?;
    characteristic.validate()?;
    let design = &scenario.design;
    let truth = characteristics::value(&scenario.true_params, design.x0(), characteristic, Scope::Overall);
    let target = BootstrapTarget::Characteristic {
        kind: characteristic,
        scope: Scope::Overall,
    };

    // intervals[rep][beta][method]
    let per_rep: Vec<Option<Vec<Vec<Option<Interval>>>>> = (0..scenario.replications as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = replicate_rng(scenario.seed, r);
            let data = generate_contaminated(scenario, &mut rng).ok()?;
            let boot_seed: u64 = rng.random();
            let fits = fit_all_betas(&data, scenario, true);
            Some(
                fits.iter()
                    .map(|f| {
                        let Some(f) = f else {
                            return vec![None; methods.len()];
                        };
                        let est =
                            characteristics::estimate(f, design, characteristic, Scope::Overall, scenario.level).ok();
                        methods
                            .iter()
                            .map(|m| match m {
                                IntervalMethod::Direct => est.as_ref().map(|e| e.ci_direct),
                                IntervalMethod::Transformed => est.as_ref().map(|e| e.ci_transformed),
                                IntervalMethod::Bca => {
                                    let config = BootstrapConfig {
                                        replicates: scenario.bootstrap_replicates,
                                        seed: boot_seed,
                                        max_regenerations: scenario.max_regenerations,
                                        level: scenario.level,
                                        target,
                                    };
                                    bca_interval_for_fit(f, &data, design, &config)
                                        .ok()
                                        .map(|b| b.bca.interval)
                                }
                            })
                            .collect()
                    })
                    .collect(),
            )
        })
        .collect();

    let datasets_failed = per_rep.iter().filter(|r| r.is_none()).count();
    check_failures(datasets_failed, scenario.replications, "data generation")?;
    let mut rows = Vec::new();
    for (b, &beta) in scenario.betas.iter().enumerate() {
        for (k, &method) in methods.iter().enumerate() {
            let intervals: Vec<Interval> = per_rep.iter().flatten().filter_map(|rep| rep[b][k]).collect();
            let failed = scenario.replications - intervals.len();
            check_failures(
                failed,
                scenario.replications,
                &format!("{} intervals at beta {beta}", method.label()),
            )?;
            let n = intervals.len() as f64;
            rows.push(CoverageRow {
                beta,
                epsilon: scenario.contamination,
                method,
                characteristic,
                coverage: intervals.iter().filter(|i| i.contains(truth)).count() as f64 / n,
                mean_width: intervals.iter().map(Interval::width).sum::<f64>() / n,
                replicates_used: intervals.len(),
                failed,
            });
        }
    }
    Ok(SimulationReport {
        mse: Vec::new(),
        coverage: rows,
        datasets_failed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bootstrap::simulate_dataset;

    #[test]
    fn clean_generation_matches_bootstrap_generator() {
        let s = SimulationScenario::reference();
        let a = generate_contaminated(&s, &mut replicate_rng(3, 9)).unwrap();
        let b = simulate_dataset(
            &s.true_params,
            &s.design,
            360,
            s.max_regenerations,
            &mut replicate_rng(3, 9),
        )
        .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn full_contamination_lands_in_target_cells() {
        let s = SimulationScenario::reference().with_contamination(1.0);
        let data = generate_contaminated(&s, &mut replicate_rng(1, 1)).unwrap();
        let cells = data.cells();
        let targets: Vec<usize> = s
            .contamination_cells
            .iter()
            .map(|&(l, j)| s.design.cell_index(l, j))
            .collect();
        let inside: u64 = targets.iter().map(|&c| cells[c]).sum();
        assert_eq!(inside, 360);
    }

    #[test]
    fn outlier_count_is_floor() {
        let s = SimulationScenario {
            sample_size: 10,
            contamination: 0.35,
            ..SimulationScenario::reference()
        };
        let outliers = draw_contamination(&s, 3, &mut replicate_rng(0, 0));
        assert_eq!(outliers.iter().sum::<u64>(), 3);
        assert!(s.validate().is_ok());
        assert!(SimulationScenario {
            contamination: 1.0,
            ..s.clone()
        }
        .validate()
        .is_err());
        assert!(SimulationScenario {
            contamination_cells: vec![],
            ..s
        }
        .validate()
        .is_err());
    }

    #[test]
    fn small_mse_study_is_deterministic() {
        let s = SimulationScenario {
            replications: 20,
            betas: vec![0.0, 0.5],
            ..SimulationScenario::reference().with_contamination(0.1)
        };
        let a = run_mse_study(&s).unwrap();
        let b = run_mse_study(&s).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.mse.len(), 2);
        assert!(a.mse.iter().all(|r| r.params.iter().all(|v| *v >= 0.0)));
    }

    #[test]
    fn small_coverage_study_rows() {
        let s = SimulationScenario {
            replications: 10,
            betas: vec![0.0],
            ..SimulationScenario::reference()
        };
        let rep = run_coverage_study(
            &s,
            Characteristic::Mttf,
            &[IntervalMethod::Direct, IntervalMethod::Transformed],
        )
        .unwrap();
        assert_eq!(rep.coverage.len(), 2);
        for row in &rep.coverage {
            assert!((0.0..=1.0).contains(&row.coverage) && row.mean_width >= 0.0);
        }
    }
}
