//! Minimum density power divergence estimation for the multinomial
//! inspection-count model, its asymptotic covariance, and parameter intervals.
//!
//! For `β > 0` the objective is the density power divergence between the
//! empirical cell frequencies `p̂` and the model probabilities `p(a)`:
//!
//! ```text
//! d_β(p̂, p) = Σ_c [ p_c^{1+β} − (1 + 1/β) p̂_c p_c^β + (1/β) p̂_c^{1+β} ]
//! ```
//!
//! and `β = 0` is the Kullback–Leibler divergence, whose minimizer is the MLE.
//! The sandwich covariance `J⁻¹KJ⁻¹` describes `√N(â − a₀)`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{cell_probabilities, derivative_matrix, ModelParams, StepStressDesign, StressLevel};
use crate::optimize::{bfgs, nelder_mead, BfgsOptions};
use crate::stats::{two_sided_z, Interval};

/// Failure counts per (interval, risk) plus survivors at `τ2`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountData {
    num_intervals: usize,
    num_risks: usize,
    counts: Vec<u64>,
    survivors: u64,
}

impl CountData {
    /// `counts[l][j]` is the number of failures due to risk `j` in interval `l`.
    pub fn new(counts: Vec<Vec<u64>>, survivors: u64) -> Result<Self> {
        let num_intervals = counts.len();
        let num_risks = counts.first().map_or(0, Vec::len);
        if num_intervals == 0 || num_risks == 0 {
            return Err(Error::InvalidData("empty count table".into()));
        }
        if counts.iter().any(|row| row.len() != num_risks) {
            return Err(Error::InvalidData("ragged count table".into()));
        }
        Ok(Self {
            num_intervals,
            num_risks,
            counts: counts.into_iter().flatten().collect(),
            survivors,
        })
    }

    /// Survivors implied as `total − Σ counts`.
    pub fn with_total(counts: Vec<Vec<u64>>, total: u64) -> Result<Self> {
        let failures: u64 = counts.iter().flatten().sum();
        if failures > total {
            return Err(Error::InvalidData(format!(
                "{failures} failures recorded but only {total} units on test"
            )));
        }
        Self::new(counts, total - failures)
    }

    /// Builds from a flat cell vector of length `L·R + 1` (survivors last).
    pub fn from_cells(num_intervals: usize, num_risks: usize, cells: &[u64]) -> Result<Self> {
        if cells.len() != num_intervals * num_risks + 1 {
            return Err(Error::InvalidData(format!(
                "expected {} cells, got {}",
                num_intervals * num_risks + 1,
                cells.len()
            )));
        }
        Ok(Self {
            num_intervals,
            num_risks,
            counts: cells[..cells.len() - 1].to_vec(),
            survivors: cells[cells.len() - 1],
        })
    }

    pub fn num_intervals(&self) -> usize {
        self.num_intervals
    }

    pub fn num_risks(&self) -> usize {
        self.num_risks
    }

    pub fn count(&self, l: usize, j: usize) -> u64 {
        self.counts[l * self.num_risks + j]
    }

    pub fn survivors(&self) -> u64 {
        self.survivors
    }

    pub fn total_failures(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn total(&self) -> u64 {
        self.total_failures() + self.survivors
    }

    /// Cell counts in model order, survivors last.
    pub fn cells(&self) -> Vec<u64> {
        let mut v = self.counts.clone();
        v.push(self.survivors);
        v
    }

    /// Empirical probability vector `p̂ = n / N`.
    pub fn empirical(&self) -> Vec<f64> {
        let n = self.total() as f64;
        self.cells().into_iter().map(|c| c as f64 / n).collect()
    }

    pub fn check_design(&self, design: &StepStressDesign) -> Result<()> {
        if self.num_intervals != design.num_intervals() || self.num_risks != design.num_risks() {
            return Err(Error::InvalidData(format!(
                "count table is {}x{} but design has {} intervals and {} risks",
                self.num_intervals,
                self.num_risks,
                design.num_intervals(),
                design.num_risks()
            )));
        }
        if self.total() == 0 {
            return Err(Error::InvalidData("no units on test".into()));
        }
        Ok(())
    }

    pub fn failures_at_level(&self, design: &StepStressDesign, level: StressLevel, j: usize) -> u64 {
        (0..self.num_intervals)
            .filter(|&l| design.interval_level(l) == level)
            .map(|l| self.count(l, j))
            .sum()
    }

    /// At least one failure per risk under each stress level.
    pub fn is_well_posed(&self, design: &StepStressDesign) -> bool {
        (0..self.num_risks).all(|j| {
            self.failures_at_level(design, StressLevel::First, j) > 0
                && self.failures_at_level(design, StressLevel::Second, j) > 0
        })
    }

    /// Copy with one unit removed from `cell` (flat index), if that cell is nonempty.
    pub fn without_one(&self, cell: usize) -> Option<Self> {
        let mut out = self.clone();
        let slot = if cell == self.counts.len() {
            &mut out.survivors
        } else {
            out.counts.get_mut(cell)?
        };
        *slot = slot.checked_sub(1)?;
        Some(out)
    }

    /// Cellwise sum of two tables over the same design.
    pub fn merged(&self, other: &Self) -> Result<Self> {
        if self.num_intervals != other.num_intervals || self.num_risks != other.num_risks {
            return Err(Error::InvalidData(
                "cannot merge count tables of different shapes".into(),
            ));
        }
        Ok(Self {
            num_intervals: self.num_intervals,
            num_risks: self.num_risks,
            counts: self.counts.iter().zip(&other.counts).map(|(a, b)| a + b).collect(),
            survivors: self.survivors + other.survivors,
        })
    }
}

/// Divergence between an empirical and a model probability vector; `+∞` where undefined.
fn divergence_value(empirical: &[f64], model: &[f64], beta: f64) -> f64 {
    if beta == 0.0 {
        let mut kl = 0.0;
        for (&q, &p) in empirical.iter().zip(model) {
            if q > 0.0 {
                if p <= 0.0 {
                    return f64::INFINITY;
                }
                kl += q * (q / p).ln();
            }
        }
        kl
    } else {
        let c = 1.0 + 1.0 / beta;
        empirical
            .iter()
            .zip(model)
            .map(|(&q, &p)| p.powf(1.0 + beta) - c * q * p.powf(beta) + q.powf(1.0 + beta) / beta)
            .sum()
    }
}

/// Density power divergence `d_β(p̂, p)`; Kullback–Leibler at `β = 0`.
pub fn divergence(empirical: &[f64], model: &[f64], beta: f64) -> Result<f64> {
    if !(beta >= 0.0) || !beta.is_finite() {
        return Err(Error::Domain(format!(
            "tuning parameter must be finite and >= 0, got {beta}"
        )));
    }
    if empirical.len() != model.len() {
        return Err(Error::InvalidData("probability vectors differ in length".into()));
    }
    let v = divergence_value(empirical, model, beta);
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Domain("observed cell has zero model probability".into()))
    }
}

pub fn dpd_loss(params: &ModelParams, data: &CountData, design: &StepStressDesign, beta: f64) -> Result<f64> {
    data.check_design(design)?;
    let p = cell_probabilities(params, design);
    divergence(&data.empirical(), p.as_slice(), beta)
}

/// `D_p^{β−1}(p̂ − p)`; cells with `p = p̂ = 0` contribute nothing.
fn weighted_residual(empirical: &[f64], model: &[f64], beta: f64) -> DVector<f64> {
    DVector::from_iterator(
        model.len(),
        empirical.iter().zip(model).map(|(&q, &p)| {
            if p <= 0.0 {
                if q > 0.0 {
                    f64::INFINITY
                } else {
                    0.0
                }
            } else {
                p.powf(beta - 1.0) * (q - p)
            }
        }),
    )
}

fn residual_for(empirical: &[f64], params: &ModelParams, design: &StepStressDesign, beta: f64) -> DVector<f64> {
    let p = cell_probabilities(params, design);
    let w = derivative_matrix(params, design);
    w.transpose() * weighted_residual(empirical, p.as_slice(), beta)
}

/// Estimating-equation residual `Wᵀ D_p^{β−1} (p̂ − p(a))`. The gradient of the
/// divergence equals `−(1 + β)` times this vector.
pub fn estimating_equation_residual(
    params: &ModelParams,
    data: &CountData,
    design: &StepStressDesign,
    beta: f64,
) -> Result<DVector<f64>> {
    data.check_design(design)?;
    Ok(residual_for(&data.empirical(), params, design, beta))
}

/// `J_β = Wᵀ D^{β−1} W` and `K_β = Wᵀ (D^{2β−1} − p^β p^{βᵀ}) W`.
pub fn information_matrices(
    params: &ModelParams,
    design: &StepStressDesign,
    beta: f64,
) -> (DMatrix<f64>, DMatrix<f64>) {
    let p = cell_probabilities(params, design);
    let w = derivative_matrix(params, design);
    let m = p.len();
    let weight = |e: f64| {
        DVector::from_iterator(
            m,
            p.as_slice().iter().map(|&pi| if pi > 0.0 { pi.powf(e) } else { 0.0 }),
        )
    };
    let d1 = weight(beta - 1.0);
    let d2 = weight(2.0 * beta - 1.0);
    let pb = weight(beta);

    let mut wd1 = w.clone();
    let mut wd2 = w.clone();
    for (r, (a, b)) in d1.iter().zip(d2.iter()).enumerate() {
        wd1.row_mut(r).scale_mut(*a);
        wd2.row_mut(r).scale_mut(*b);
    }
    let j = w.transpose() * wd1;
    let wp = w.transpose() * pb;
    let k = w.transpose() * wd2 - &wp * wp.transpose();
    (symmetrize(j), symmetrize(k))
}

fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

/// Spectral condition number of a symmetric matrix; infinite if not positive definite.
pub fn condition_number(m: &DMatrix<f64>) -> f64 {
    let eig = m.clone().symmetric_eigenvalues();
    let max = eig.max();
    let min = eig.min();
    if min <= 0.0 || !min.is_finite() {
        f64::INFINITY
    } else {
        max / min
    }
}

pub fn invert_information(j: &DMatrix<f64>, max_condition: f64) -> Result<DMatrix<f64>> {
    let condition = condition_number(j);
    if !(condition <= max_condition) {
        return Err(Error::SingularInformation { condition });
    }
    let chol = j.clone().cholesky().ok_or(Error::SingularInformation { condition })?;
    Ok(symmetrize(chol.inverse()))
}

pub const DEFAULT_MAX_CONDITION: f64 = 1e12;

/// Sandwich covariance `Σ = J⁻¹ K J⁻¹` of `√N(â − a₀)`.
pub fn asymptotic_covariance(params: &ModelParams, design: &StepStressDesign, beta: f64) -> Result<DMatrix<f64>> {
    let (j, k) = information_matrices(params, design, beta);
    let j_inv = invert_information(&j, DEFAULT_MAX_CONDITION)?;
    Ok(symmetrize(&j_inv * k * &j_inv))
}

#[derive(Debug, Clone)]
pub struct FitOptions {
    pub max_iterations: usize,
    /// Relative to `1 + |loss|`.
    pub gradient_tolerance: f64,
    /// Also start from the β = 0 fit and the moment initializer and keep the best.
    pub multi_start: bool,
    pub initial: Option<ModelParams>,
    pub compute_covariance: bool,
    pub max_condition: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            max_iterations: 500,
            gradient_tolerance: 1e-8,
            multi_start: true,
            initial: None,
            compute_covariance: true,
            max_condition: DEFAULT_MAX_CONDITION,
        }
    }
}

#[derive(Debug, Clone)]
pub struct FitResult {
    pub params: ModelParams,
    pub beta: f64,
    pub loss: f64,
    /// Asymptotic covariance of `√N(â − a₀)`; divide by `N` for standard errors.
    pub covariance: Option<DMatrix<f64>>,
    pub sample_size: u64,
    pub converged: bool,
    pub gradient_norm: f64,
    pub iterations: usize,
    pub information_condition: Option<f64>,
}

impl FitResult {
    pub fn covariance(&self) -> Result<&DMatrix<f64>> {
        self.covariance
            .as_ref()
            .ok_or_else(|| Error::Degenerate("fit was run without covariance".into()))
    }

    /// Standard errors `sqrt(Σ_kk / N)`.
    pub fn standard_errors(&self) -> Result<Vec<f64>> {
        let cov = self.covariance()?;
        let n = self.sample_size as f64;
        Ok((0..cov.nrows()).map(|k| (cov[(k, k)].max(0.0) / n).sqrt()).collect())
    }
}

/// Per-level hazards from aggregate failure fractions, split by observed cause shares.
pub fn moment_initializer(empirical: &[f64], design: &StepStressDesign) -> ModelParams {
    let r = design.num_risks();
    let mut by_level = [vec![0.0; r], vec![0.0; r]];
    for l in 0..design.num_intervals() {
        let slot = match design.interval_level(l) {
            StressLevel::First => 0,
            StressLevel::Second => 1,
        };
        for j in 0..r {
            by_level[slot][j] += empirical[design.cell_index(l, j)];
        }
    }
    let f1: f64 = by_level[0].iter().sum();
    let f2: f64 = by_level[1].iter().sum();
    let half = 0.5 / (r as f64 * 100.0);
    let at_risk_after = (1.0 - f1).max(1e-6);
    let hazard1 = -(1.0 - f1.min(0.999)).ln() / design.tau1();
    let hazard2 = -(1.0 - (f2 / at_risk_after).min(0.999)).ln() / (design.tau2() - design.tau1());
    let rates = |shares: &[f64], total: f64, hazard: f64| -> Vec<f64> {
        shares
            .iter()
            .map(|&s| hazard.max(1e-8) * (s + half) / (total + r as f64 * half))
            .collect::<Vec<_>>()
    };
    let rates1 = rates(&by_level[0], f1, hazard1);
    let rates2 = rates(&by_level[1], f2, hazard2);
    let dx = design.x2() - design.x1();
    let blocks: Vec<(f64, f64)> = (0..r)
        .map(|j| {
            let log1 = -rates1[j].ln();
            let log2 = -rates2[j].ln();
            let a1 = (log2 - log1) / dx;
            (log1 - a1 * design.x1(), a1)
        })
        .collect();
    ModelParams::from_blocks(&blocks).expect("finite initial values")
}

const SCORING_STEPS: usize = 20;

struct Candidate {
    x: DVector<f64>,
    loss: f64,
    gradient_norm: f64,
    iterations: usize,
    converged: bool,
}

fn minimize_from(
    empirical: &[f64],
    design: &StepStressDesign,
    beta: f64,
    start: &ModelParams,
    options: &FitOptions,
) -> Candidate {
    let to_params = |x: &DVector<f64>| ModelParams::new(x.iter().copied().collect()).ok();
    let objective = |x: &DVector<f64>| match to_params(x) {
        Some(params) => divergence_value(empirical, cell_probabilities(&params, design).as_slice(), beta),
        None => f64::INFINITY,
    };
    let gradient = |x: &DVector<f64>| match to_params(x) {
        Some(params) => residual_for(empirical, &params, design, beta) * -(1.0 + beta),
        None => DVector::from_element(x.len(), f64::NAN),
    };
    let scoring = |x: &DVector<f64>| -> Option<DMatrix<f64>> {
        let params = to_params(x)?;
        let (j, _) = information_matrices(&params, design, beta);
        let inv = invert_information(&j, 1e14).ok()?;
        Some(inv / (1.0 + beta))
    };
    let opts = BfgsOptions {
        max_iterations: options.max_iterations,
        gradient_tolerance: options.gradient_tolerance,
    };

    let tolerance = |f: f64| options.gradient_tolerance * (1.0 + f.abs());

    // Scoring steps `a ← a + J⁻¹ Wᵀ D^{β−1}(p̂ − p)` solve the estimating
    // equation directly once function values can no longer guide a line search.
    let polish = |mut c: Candidate| -> Candidate {
        for _ in 0..SCORING_STEPS {
            if c.converged {
                break;
            }
            let Some(params) = to_params(&c.x) else { break };
            let (j, _) = information_matrices(&params, design, beta);
            let Ok(j_inv) = invert_information(&j, 1e14) else { break };
            let next = &c.x + j_inv * residual_for(empirical, &params, design, beta);
            let g = gradient(&next).norm();
            if !(g < c.gradient_norm) {
                break;
            }
            let f = objective(&next);
            c = Candidate {
                x: next,
                loss: f,
                gradient_norm: g,
                iterations: c.iterations + 1,
                converged: g < tolerance(f),
            };
        }
        c
    };

    let mut x = DVector::from_column_slice(start.as_slice());
    let mut total_iterations = 0;
    let mut best: Option<Candidate> = None;
    for _attempt in 0..3 {
        let (m, stalled) = bfgs(objective, gradient, x.clone(), scoring(&x), opts);
        total_iterations += m.iterations;
        let candidate = polish(Candidate {
            x: m.x.clone(),
            loss: m.value,
            gradient_norm: m.gradient_norm,
            iterations: total_iterations,
            converged: m.converged,
        });
        total_iterations = candidate.iterations;
        let done = candidate.converged || !stalled;
        let x_last = candidate.x.clone();
        if best
            .as_ref()
            .is_none_or(|b| candidate.loss <= b.loss || candidate.converged)
        {
            best = Some(candidate);
        }
        if done {
            break;
        }
        // still stalled: restart from a simplex search
        let (polished, _) = nelder_mead(objective, &x_last, 0.05, 4000, 1e-15);
        x = polished;
    }
    best.expect("at least one attempt")
}

/// Fits the MDPDE to an arbitrary probability vector over the cells, treating
/// it as the empirical distribution of `sample_size` units.
pub fn fit_distribution(
    empirical: &[f64],
    sample_size: u64,
    design: &StepStressDesign,
    beta: f64,
    options: &FitOptions,
) -> Result<FitResult> {
    if !(beta >= 0.0) || !beta.is_finite() {
        return Err(Error::Domain(format!(
            "tuning parameter must be finite and >= 0, got {beta}"
        )));
    }
    if empirical.len() != design.num_cells() {
        return Err(Error::InvalidData(format!(
            "expected {} cell frequencies, got {}",
            design.num_cells(),
            empirical.len()
        )));
    }

    let mut starts = Vec::new();
    if let Some(init) = &options.initial {
        starts.push(init.clone());
    }
    if options.multi_start || starts.is_empty() {
        starts.push(moment_initializer(empirical, design));
    }
    if options.multi_start && beta > 0.0 {
        let inner = FitOptions {
            multi_start: false,
            compute_covariance: false,
            initial: None,
            ..options.clone()
        };
        if let Ok(mle) = fit_distribution(empirical, sample_size, design, 0.0, &inner) {
            starts.push(mle.params);
        }
    }

    let mut best: Option<Candidate> = None;
    for start in &starts {
        let c = minimize_from(empirical, design, beta, start, options);
        let better = match &best {
            None => true,
            Some(b) => (c.converged && !b.converged) || (c.converged == b.converged && c.loss < b.loss),
        };
        if better {
            best = Some(c);
        }
    }
    let best = best.expect("at least one start");
    let params = ModelParams::new(best.x.iter().copied().collect())?;
    if !best.converged {
        return Err(Error::NonConvergence {
            iterations: best.iterations,
            gradient_norm: best.gradient_norm,
            params: params.into_vec(),
        });
    }

    let (covariance, information_condition) = if options.compute_covariance {
        let (j, k) = information_matrices(&params, design, beta);
        let j_inv = invert_information(&j, options.max_condition)?;
        (Some(symmetrize(&j_inv * k * &j_inv)), Some(condition_number(&j)))
    } else {
        (None, None)
    };

    Ok(FitResult {
        params,
        beta,
        loss: best.loss,
        covariance,
        sample_size,
        converged: true,
        gradient_norm: best.gradient_norm,
        iterations: best.iterations,
        information_condition,
    })
}

/// Minimum density power divergence estimate (the MLE at `β = 0`).
pub fn fit(data: &CountData, design: &StepStressDesign, beta: f64, options: &FitOptions) -> Result<FitResult> {
    data.check_design(design)?;
    if !data.is_well_posed(design) {
        return Err(Error::IllPosed(
            "every risk needs at least one failure under each stress level".into(),
        ));
    }
    fit_distribution(&data.empirical(), data.total(), design, beta, options)
}

/// Wald intervals `â_k ± z_{α/2}·sqrt(Σ_kk / N)`.
pub fn param_confidence_intervals(fit: &FitResult, level: f64) -> Result<Vec<Interval>> {
    let z = two_sided_z(level);
    let se = fit.standard_errors()?;
    Ok(fit
        .params
        .as_slice()
        .iter()
        .zip(se)
        .map(|(&a, s)| Interval::new(a - z * s, a + z * s))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn design() -> StepStressDesign {
        StepStressDesign::new(
            (35.0, 45.0),
            45.0,
            75.0,
            vec![15.0, 25.0, 35.0, 45.0, 55.0, 65.0, 75.0],
            2,
            25.0,
        )
        .unwrap()
    }

    fn truth() -> ModelParams {
        ModelParams::from_blocks(&[(5.0, -0.02), (6.2, -0.04)]).unwrap()
    }

    fn expected_counts(n: u64) -> CountData {
        let d = design();
        let p = cell_probabilities(&truth(), &d);
        let cells: Vec<u64> = p.as_slice().iter().map(|v| (v * n as f64).round() as u64).collect();
        CountData::from_cells(d.num_intervals(), d.num_risks(), &cells).unwrap()
    }

    #[test]
    fn two_cell_divergence_matches_closed_form() {
        // 0.8^1.5 + 0.2^1.5 − 3(0.5·0.8^0.5 + 0.5·0.2^0.5) + 2(2·0.5^1.5)
        let v = divergence(&[0.5, 0.5], &[0.8, 0.2], 0.5).unwrap();
        assert_relative_eq!(v, 0.206_736_854_523_208_6, max_relative = 1e-12);
    }

    #[test]
    fn divergence_vanishes_on_model() {
        let p = cell_probabilities(&truth(), &design());
        for beta in [0.0, 0.3, 1.0, 2.0] {
            assert!(divergence(p.as_slice(), p.as_slice(), beta).unwrap().abs() < 1e-14);
        }
    }

    #[test]
    fn kl_domain_error() {
        assert!(matches!(
            divergence(&[0.5, 0.5], &[1.0, 0.0], 0.0),
            Err(Error::Domain(_))
        ));
        // empty empirical cell is fine
        assert!(divergence(&[1.0, 0.0], &[0.5, 0.5], 0.0).is_ok());
        assert!(divergence(&[1.0, 0.0], &[0.5, 0.5], -0.1).is_err());
    }

    #[test]
    fn residual_vanishes_at_model_probabilities() {
        let d = design();
        let p = cell_probabilities(&truth(), &d);
        for beta in [0.0, 0.5] {
            let r = residual_for(p.as_slice(), &truth(), &d, beta);
            assert!(r.amax() < 1e-15);
        }
    }

    #[test]
    fn beta_zero_covariance_is_inverse_fisher() {
        let (j, k) = information_matrices(&truth(), &design(), 0.0);
        assert!((&j - &k).amax() < 1e-10 * j.amax());
        let sigma = asymptotic_covariance(&truth(), &design(), 0.0).unwrap();
        let ident = &sigma * &j;
        assert!((ident - DMatrix::identity(4, 4)).amax() < 1e-8);
    }

    #[test]
    fn recovers_truth_from_expected_counts() {
        let d = design();
        let data = expected_counts(1_000_000);
        for beta in [0.0, 0.5] {
            let f = fit(&data, &d, beta, &FitOptions::default()).unwrap();
            for (a, b) in f.params.as_slice().iter().zip(truth().as_slice()) {
                assert!((a - b).abs() < 1e-2, "beta {beta}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn ill_posed_data_is_rejected() {
        let d = design();
        let mut counts = vec![vec![3, 2]; 7];
        for row in counts.iter_mut().skip(4) {
            row[1] = 0;
        }
        let data = CountData::with_total(counts, 100).unwrap();
        assert!(!data.is_well_posed(&d));
        assert!(matches!(
            fit(&data, &d, 0.0, &FitOptions::default()),
            Err(Error::IllPosed(_))
        ));
    }

    #[test]
    fn zero_level_interval_collapses() {
        let d = design();
        let data = expected_counts(360);
        let f = fit(&data, &d, 0.2, &FitOptions::default()).unwrap();
        for ci in param_confidence_intervals(&f, 0.0).unwrap() {
            assert_eq!(ci.lower, ci.upper);
        }
    }

    #[test]
    fn count_table_accessors() {
        let data = CountData::with_total(vec![vec![2, 5], vec![6, 0]], 20).unwrap();
        assert_eq!(data.survivors(), 7);
        assert_eq!(data.cells(), vec![2, 5, 6, 0, 7]);
        assert!(data.without_one(3).is_none());
        assert_eq!(data.without_one(1).unwrap().total(), 19);
        assert!(CountData::with_total(vec![vec![30]], 20).is_err());
        assert!(CountData::new(vec![vec![1, 2], vec![1]], 0).is_err());
    }
}
