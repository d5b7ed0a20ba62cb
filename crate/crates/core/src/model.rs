//! Simple step-stress cumulative exposure model with independent exponential
//! competing risks, observed through periodic inspections.
//!
//! Each risk `j` has scale `θ_ij = exp(a_0j + a_1j·x_i)` at stress `x_i`. After
//! the stress change at `τ1` the lifetime due to risk `j` continues from the
//! accumulated exposure, which for exponential lifetimes is a time shift
//! `h_j = τ1·(θ_2j/θ_1j − 1)`.
//!
//! Inspection data form a multinomial with `L·R + 1` cells ordered
//! `(1,1), …, (1,R), (2,1), …, (L,R), survivors`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const TAU_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StressLevel {
    First,
    Second,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepStressDesign {
    x1: f64,
    x2: f64,
    tau1: f64,
    tau2: f64,
    inspection_times: Vec<f64>,
    num_risks: usize,
    x0: f64,
}

impl StepStressDesign {
    /// Builds a design; `inspection_times` must be strictly increasing, contain
    /// `tau1`, and end at `tau2`.
    pub fn new(
        (x1, x2): (f64, f64),
        tau1: f64,
        tau2: f64,
        inspection_times: Vec<f64>,
        num_risks: usize,
        x0: f64,
    ) -> Result<Self> {
        let bad = |msg: String| Err(Error::InvalidDesign(msg));
        if ![x1, x2, x0, tau1, tau2].iter().all(|v| v.is_finite()) {
            return bad("stress levels and times must be finite".into());
        }
        if x1 == x2 {
            return bad(format!("stress levels must differ (x1 = x2 = {x1})"));
        }
        if num_risks == 0 {
            return bad("at least one competing risk is required".into());
        }
        if !(tau1 > 0.0 && tau1 < tau2) {
            return bad(format!("need 0 < tau1 < tau2, got tau1 = {tau1}, tau2 = {tau2}"));
        }
        if inspection_times.is_empty() {
            return bad("no inspection times".into());
        }
        if inspection_times[0] <= 0.0 || inspection_times.iter().any(|t| !t.is_finite()) {
            return bad("inspection times must be positive and finite".into());
        }
        if inspection_times.windows(2).any(|w| w[0] >= w[1]) {
            return bad("inspection times must be strictly increasing".into());
        }
        let last = *inspection_times.last().unwrap();
        if (last - tau2).abs() > TAU_TOLERANCE * tau2.max(1.0) {
            return bad(format!("last inspection time {last} must equal tau2 = {tau2}"));
        }
        if !inspection_times
            .iter()
            .any(|t| (t - tau1).abs() <= TAU_TOLERANCE * tau1.max(1.0))
        {
            return bad(format!("tau1 = {tau1} must be one of the inspection times"));
        }
        Ok(Self {
            x1,
            x2,
            tau1,
            tau2,
            inspection_times,
            num_risks,
            x0,
        })
    }

    pub fn x1(&self) -> f64 {
        self.x1
    }

    pub fn x2(&self) -> f64 {
        self.x2
    }

    /// Normal operating stress used for extrapolated characteristics.
    pub fn x0(&self) -> f64 {
        self.x0
    }

    pub fn tau1(&self) -> f64 {
        self.tau1
    }

    pub fn tau2(&self) -> f64 {
        self.tau2
    }

    pub fn inspection_times(&self) -> &[f64] {
        &self.inspection_times
    }

    pub fn num_risks(&self) -> usize {
        self.num_risks
    }

    pub fn num_intervals(&self) -> usize {
        self.inspection_times.len()
    }

    pub fn num_cells(&self) -> usize {
        self.num_intervals() * self.num_risks + 1
    }

    pub fn num_params(&self) -> usize {
        2 * self.num_risks
    }

    pub fn stress(&self, level: StressLevel) -> f64 {
        match level {
            StressLevel::First => self.x1,
            StressLevel::Second => self.x2,
        }
    }

    /// Bounds `(IT_{l-1}, IT_l]` of the zero-based interval `l`, with `IT_0 = 0`.
    pub fn interval_bounds(&self, l: usize) -> (f64, f64) {
        let lower = if l == 0 { 0.0 } else { self.inspection_times[l - 1] };
        (lower, self.inspection_times[l])
    }

    /// Stress level in force on interval `l`: first level iff `IT_l ≤ τ1`.
    pub fn interval_level(&self, l: usize) -> StressLevel {
        if self.inspection_times[l] <= self.tau1 * (1.0 + TAU_TOLERANCE) {
            StressLevel::First
        } else {
            StressLevel::Second
        }
    }

    /// Flat index of cell `(l, j)` (both zero-based).
    pub fn cell_index(&self, l: usize, j: usize) -> usize {
        l * self.num_risks + j
    }

    pub fn survival_cell(&self) -> usize {
        self.num_intervals() * self.num_risks
    }

    /// Zero-based interval containing time `t`, or `None` past `τ2` (survivor).
    pub fn interval_of(&self, t: f64) -> Option<usize> {
        let l = self.inspection_times.partition_point(|&it| it < t);
        (l < self.num_intervals()).then_some(l)
    }

    /// Same design with a different extrapolation stress.
    pub fn with_x0(mut self, x0: f64) -> Self {
        self.x0 = x0;
        self
    }
}

/// Log-linear coefficients `(a_01, a_11, …, a_0R, a_1R)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ModelParams(Vec<f64>);

impl ModelParams {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() || !values.len().is_multiple_of(2) {
            return Err(Error::InvalidParams(format!(
                "expected 2R coefficients, got {}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParams("coefficients must be finite".into()));
        }
        Ok(Self(values))
    }

    pub fn from_blocks(blocks: &[(f64, f64)]) -> Result<Self> {
        Self::new(blocks.iter().flat_map(|&(a0, a1)| [a0, a1]).collect())
    }

    pub fn num_risks(&self) -> usize {
        self.0.len() / 2
    }

    pub fn a0(&self, j: usize) -> f64 {
        self.0[2 * j]
    }

    pub fn a1(&self, j: usize) -> f64 {
        self.0[2 * j + 1]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    /// `log θ_j(x) = a_0j + a_1j·x`.
    pub fn log_scale(&self, j: usize, x: f64) -> f64 {
        self.a0(j) + self.a1(j) * x
    }

    pub fn scale(&self, j: usize, x: f64) -> f64 {
        self.log_scale(j, x).exp()
    }

    /// Failure rate `1/θ_j(x)`.
    pub fn rate(&self, j: usize, x: f64) -> f64 {
        (-self.log_scale(j, x)).exp()
    }

    /// Reorders risk blocks; `order[k]` is the old index placed at position `k`.
    pub fn permute_risks(&self, order: &[usize]) -> Self {
        Self(order.iter().flat_map(|&j| [self.a0(j), self.a1(j)]).collect())
    }
}

fn check_dims(params: &ModelParams, design: &StepStressDesign) {
    assert_eq!(
        params.num_risks(),
        design.num_risks(),
        "parameter vector has {} risks but design has {}",
        params.num_risks(),
        design.num_risks()
    );
}

/// Shifting time `h_j^(i)`: zero at the first level, `τ1(θ_2j/θ_1j − 1)` at the second.
pub fn shifting_time(params: &ModelParams, design: &StepStressDesign, j: usize, level: StressLevel) -> f64 {
    match level {
        StressLevel::First => 0.0,
        StressLevel::Second => design.tau1 * (params.a1(j) * (design.x2 - design.x1)).exp_m1(),
    }
}

/// `∂h_j^(i)/∂a_1j`, i.e. `τ1·(θ_2j/θ_1j)·(x2 − x1)` at the second level.
pub fn shifting_time_derivative(params: &ModelParams, design: &StepStressDesign, j: usize, level: StressLevel) -> f64 {
    match level {
        StressLevel::First => 0.0,
        StressLevel::Second => {
            let dx = design.x2 - design.x1;
            design.tau1 * (params.a1(j) * dx).exp() * dx
        }
    }
}

/// Relative risk `π_ij`: share of the total hazard at level `i` due to risk `j`.
pub fn relative_risk(params: &ModelParams, design: &StepStressDesign, level: StressLevel, j: usize) -> f64 {
    check_dims(params, design);
    relative_risks_at(params, design.stress(level))[j]
}

/// All relative risks at a fixed stress, computed via log-sum-exp.
pub fn relative_risks_at(params: &ModelParams, x: f64) -> Vec<f64> {
    let neg_log: Vec<f64> = (0..params.num_risks()).map(|j| -params.log_scale(j, x)).collect();
    let max = neg_log.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let total: f64 = neg_log.iter().map(|v| (v - max).exp()).sum();
    neg_log.iter().map(|v| (v - max).exp() / total).collect()
}

/// Exponent of the overall survival function, `Σ_j (t + h_j^(i))/θ_ij`.
pub fn cumulative_hazard(params: &ModelParams, design: &StepStressDesign, t: f64, level: StressLevel) -> f64 {
    let x = design.stress(level);
    (0..params.num_risks())
        .map(|j| (t + shifting_time(params, design, j, level)) * params.rate(j, x))
        .sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CellProbabilities(Vec<f64>);

impl CellProbabilities {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn survival(&self) -> f64 {
        *self.0.last().unwrap()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

impl std::ops::Index<usize> for CellProbabilities {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Multinomial cell probabilities `p_lj = π_ij·[S(IT_{l-1}) − S(IT_l)]` and `p_0 = S(τ2)`.
pub fn cell_probabilities(params: &ModelParams, design: &StepStressDesign) -> CellProbabilities {
    check_dims(params, design);
    let r = design.num_risks();
    let mut p = Vec::with_capacity(design.num_cells());
    let pi1 = relative_risks_at(params, design.x1);
    let pi2 = relative_risks_at(params, design.x2);
    for l in 0..design.num_intervals() {
        let level = design.interval_level(l);
        let (lo, hi) = design.interval_bounds(l);
        let h_lo = cumulative_hazard(params, design, lo, level);
        let h_hi = cumulative_hazard(params, design, hi, level);
        // S(lo) − S(hi) = S(lo)·(1 − exp(−(H(hi) − H(lo))))
        let mass = (-h_lo).exp() * -(-(h_hi - h_lo)).exp_m1();
        let pi = match level {
            StressLevel::First => &pi1,
            StressLevel::Second => &pi2,
        };
        p.extend((0..r).map(|j| pi[j] * mass));
    }
    p.push((-cumulative_hazard(params, design, design.tau2, StressLevel::Second)).exp());
    CellProbabilities(p)
}

/// `(∂R_j/∂a_0k, ∂R_j/∂a_1k)` for `R_j(t) = π_ij·S(t)` evaluated on level `i`;
/// returned as an `R × 2R` matrix.
fn survival_share_jacobian(
    params: &ModelParams,
    design: &StepStressDesign,
    t: f64,
    level: StressLevel,
    pi: &[f64],
) -> DMatrix<f64> {
    let r = design.num_risks();
    let x = design.stress(level);
    let s = (-cumulative_hazard(params, design, t, level)).exp();
    let mut z = DMatrix::zeros(r, 2 * r);
    for k in 0..r {
        let rate = params.rate(k, x);
        let h = shifting_time(params, design, k, level);
        let h_star = shifting_time_derivative(params, design, k, level);
        let exposure_a0 = (t + h) * rate;
        let exposure_a1 = (-h_star + (t + h) * x) * rate;
        for j in 0..r {
            let share = if j == k { pi[j] - 1.0 } else { pi[k] };
            z[(j, 2 * k)] = pi[j] * s * (share + exposure_a0);
            z[(j, 2 * k + 1)] = pi[j] * s * (share * x + exposure_a1);
        }
    }
    z
}

/// Jacobian `W` of the cell probabilities with respect to the coefficients:
/// rows follow [`CellProbabilities`], columns are `(a_01, a_11, …, a_0R, a_1R)`.
pub fn derivative_matrix(params: &ModelParams, design: &StepStressDesign) -> DMatrix<f64> {
    check_dims(params, design);
    let r = design.num_risks();
    let mut w = DMatrix::zeros(design.num_cells(), 2 * r);
    let pi1 = relative_risks_at(params, design.x1);
    let pi2 = relative_risks_at(params, design.x2);
    for l in 0..design.num_intervals() {
        let level = design.interval_level(l);
        let pi = match level {
            StressLevel::First => &pi1,
            StressLevel::Second => &pi2,
        };
        let (lo, hi) = design.interval_bounds(l);
        let z_lo = survival_share_jacobian(params, design, lo, level, pi);
        let z_hi = survival_share_jacobian(params, design, hi, level, pi);
        for j in 0..r {
            let row = design.cell_index(l, j);
            for c in 0..2 * r {
                w[(row, c)] = z_lo[(j, c)] - z_hi[(j, c)];
            }
        }
    }
    let row = design.survival_cell();
    let level = StressLevel::Second;
    let p0 = (-cumulative_hazard(params, design, design.tau2, level)).exp();
    for k in 0..r {
        let rate = params.rate(k, design.x2);
        let h = shifting_time(params, design, k, level);
        let h_star = shifting_time_derivative(params, design, k, level);
        w[(row, 2 * k)] = p0 * (design.tau2 + h) * rate;
        w[(row, 2 * k + 1)] = p0 * (-h_star + (design.tau2 + h) * design.x2) * rate;
    }
    w
}

/// CDF of the lifetime under the step-stress profile. With `risk` set, the
/// marginal CDF of that risk; otherwise the overall `F_T = 1 − Π_j(1 − F_j)`.
pub fn lifetime_cdf(params: &ModelParams, design: &StepStressDesign, t: f64, risk: Option<usize>) -> f64 {
    check_dims(params, design);
    if t <= 0.0 {
        return 0.0;
    }
    let level = if t < design.tau1 {
        StressLevel::First
    } else {
        StressLevel::Second
    };
    let exponent = match risk {
        Some(j) => (t + shifting_time(params, design, j, level)) * params.rate(j, design.stress(level)),
        None => cumulative_hazard(params, design, t, level),
    };
    -(-exponent).exp_m1()
}

/// Density of `(T, C = j)` under the step-stress profile.
pub fn joint_density(params: &ModelParams, design: &StepStressDesign, t: f64, j: usize) -> f64 {
    if t < 0.0 {
        return 0.0;
    }
    let level = if t < design.tau1 {
        StressLevel::First
    } else {
        StressLevel::Second
    };
    params.rate(j, design.stress(level)) * (-cumulative_hazard(params, design, t, level)).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    pub(crate) fn simulation_design() -> StepStressDesign {
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

    fn simulation_params() -> ModelParams {
        ModelParams::from_blocks(&[(5.0, -0.02), (6.2, -0.04)]).unwrap()
    }

    #[test]
    fn design_validation() {
        let it = vec![1.0, 2.0, 3.0];
        assert!(StepStressDesign::new((0.0, 1.0), 2.0, 3.0, it.clone(), 1, 0.0).is_ok());
        assert!(StepStressDesign::new((1.0, 1.0), 2.0, 3.0, it.clone(), 1, 0.0).is_err());
        assert!(StepStressDesign::new((0.0, 1.0), 2.5, 3.0, it.clone(), 1, 0.0).is_err());
        assert!(StepStressDesign::new((0.0, 1.0), 2.0, 4.0, it.clone(), 1, 0.0).is_err());
        assert!(StepStressDesign::new((0.0, 1.0), 2.0, 3.0, vec![1.0, 1.0, 2.0, 3.0], 1, 0.0).is_err());
        assert!(StepStressDesign::new((0.0, 1.0), 2.0, 3.0, it, 0, 0.0).is_err());
        assert!(ModelParams::new(vec![1.0, 2.0, 3.0]).is_err());
        assert!(ModelParams::new(vec![1.0, f64::NAN]).is_err());
    }

    #[test]
    fn interval_levels_switch_after_tau1() {
        let d = simulation_design();
        let levels: Vec<_> = (0..7).map(|l| d.interval_level(l)).collect();
        assert_eq!(&levels[..4], &[StressLevel::First; 4]);
        assert_eq!(&levels[4..], &[StressLevel::Second; 3]);
        assert_eq!(d.interval_of(15.0), Some(0));
        assert_eq!(d.interval_of(15.0001), Some(1));
        assert_eq!(d.interval_of(75.0), Some(6));
        assert_eq!(d.interval_of(75.5), None);
    }

    #[test]
    fn shifting_time_examples() {
        let d = simulation_design();
        let p = simulation_params();
        assert_eq!(shifting_time(&p, &d, 0, StressLevel::First), 0.0);
        // 45·(e^{-0.2} − 1)
        assert_relative_eq!(
            shifting_time(&p, &d, 0, StressLevel::Second),
            -8.157_116_111_490_816,
            max_relative = 1e-12
        );
        let flat = ModelParams::from_blocks(&[(5.0, 0.0), (6.2, 0.0)]).unwrap();
        assert_eq!(shifting_time(&flat, &d, 1, StressLevel::Second), 0.0);
    }

    #[test]
    fn relative_risk_examples() {
        let d = simulation_design();
        let p = simulation_params();
        let pi11 = relative_risk(&p, &d, StressLevel::First, 0);
        let pi12 = relative_risk(&p, &d, StressLevel::First, 1);
        let (r1, r2) = ((-4.3f64).exp(), (-4.8f64).exp());
        assert_relative_eq!(pi11, r1 / (r1 + r2), max_relative = 1e-14);
        assert_relative_eq!(pi11 + pi12, 1.0, epsilon = 1e-15);

        let same = ModelParams::from_blocks(&[(3.0, 0.1), (3.0, 0.1)]).unwrap();
        assert_relative_eq!(relative_risk(&same, &d, StressLevel::Second, 0), 0.5);
        let one = ModelParams::from_blocks(&[(3.0, 0.1)]).unwrap();
        let d1 = StepStressDesign::new((35.0, 45.0), 45.0, 75.0, d.inspection_times().to_vec(), 1, 25.0).unwrap();
        assert_eq!(relative_risk(&one, &d1, StressLevel::First, 0), 1.0);
    }

    #[test]
    fn first_interval_mass() {
        let d = simulation_design();
        let p = simulation_params();
        let cells = cell_probabilities(&p, &d);
        let expected = 1.0 - (-15.0 * (p.rate(0, 35.0) + p.rate(1, 35.0))).exp();
        assert_relative_eq!(cells[0] + cells[1], expected, max_relative = 1e-13);
        let total: f64 = cells.as_slice().iter().sum();
        assert_relative_eq!(total, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn derivative_columns_sum_to_zero() {
        let d = simulation_design();
        let w = derivative_matrix(&simulation_params(), &d);
        for c in 0..w.ncols() {
            assert!(w.column(c).sum().abs() < 1e-10);
        }
    }

    #[test]
    fn cdf_is_continuous_at_tau1() {
        let d = simulation_design();
        let p = simulation_params();
        let below = lifetime_cdf(&p, &d, d.tau1() * (1.0 - 1e-15), None);
        let at = lifetime_cdf(&p, &d, d.tau1(), None);
        assert!((below - at).abs() < 1e-12);
        assert_eq!(lifetime_cdf(&p, &d, 0.0, None), 0.0);
        for j in 0..2 {
            let left = 1.0 - (-d.tau1() * p.rate(j, d.x1())).exp();
            assert!((lifetime_cdf(&p, &d, d.tau1(), Some(j)) - left).abs() < 1e-12);
        }
    }

    #[test]
    fn extreme_parameters_stay_finite() {
        let d = simulation_design();
        let p = ModelParams::from_blocks(&[(-30.0, 0.5), (40.0, -0.9)]).unwrap();
        let cells = cell_probabilities(&p, &d);
        assert!(cells.as_slice().iter().all(|v| v.is_finite() && *v >= 0.0));
        let total: f64 = cells.as_slice().iter().sum();
        assert_relative_eq!(total, 1.0, epsilon = 1e-12);
    }
}
