//! Lifetime characteristics at the normal operating stress `x0`: mean lifetime,
//! reliability at a mission time and lower quantiles, for the overall lifetime
//! or a single competing risk, with delta-method intervals.
//!
//! Under constant stress `x0` the overall lifetime is exponential with rate
//! `Σ_j 1/θ_0j` and risk `j` alone is exponential with mean `θ_0j`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimation::FitResult;
use crate::model::{relative_risks_at, ModelParams, StepStressDesign};
use crate::stats::{two_sided_z, Interval};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Characteristic {
    Mttf,
    Reliability {
        mission_time: f64,
    },
    /// Lower `alpha0` quantile, i.e. `F⁻¹(alpha0)`.
    Quantile {
        alpha0: f64,
    },
}

impl Characteristic {
    pub fn median() -> Self {
        Characteristic::Quantile { alpha0: 0.5 }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Characteristic::Mttf => Ok(()),
            Characteristic::Reliability { mission_time } if mission_time >= 0.0 && mission_time.is_finite() => Ok(()),
            Characteristic::Reliability { mission_time } => Err(Error::Domain(format!(
                "mission time must be finite and >= 0, got {mission_time}"
            ))),
            Characteristic::Quantile { alpha0 } if alpha0 > 0.0 && alpha0 < 1.0 => Ok(()),
            Characteristic::Quantile { alpha0 } => Err(Error::Domain(format!(
                "quantile level must lie in (0, 1), got {alpha0}"
            ))),
        }
    }

    /// Natural range of the characteristic.
    pub fn domain(&self) -> (f64, f64) {
        match self {
            Characteristic::Reliability { .. } => (0.0, 1.0),
            _ => (0.0, f64::INFINITY),
        }
    }

    pub fn label(&self) -> String {
        match *self {
            Characteristic::Mttf => "MTTF".into(),
            Characteristic::Reliability { mission_time } => format!("R({mission_time})"),
            Characteristic::Quantile { alpha0: 0.5 } => "median".into(),
            Characteristic::Quantile { alpha0 } => format!("Q({alpha0})"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scope {
    Overall,
    /// Marginal lifetime of one risk (zero-based).
    Cause(usize),
}

fn check_scope(params: &ModelParams, scope: Scope) -> Result<()> {
    match scope {
        Scope::Cause(j) if j >= params.num_risks() => Err(Error::InvalidParams(format!(
            "risk index {j} out of range for {} risks",
            params.num_risks()
        ))),
        _ => Ok(()),
    }
}

/// Mean lifetime at `x0`: `1/Σ_j 1/θ_0j` overall, `θ_0j` for one cause.
fn mean_lifetime(params: &ModelParams, x0: f64, scope: Scope) -> f64 {
    match scope {
        Scope::Cause(j) => params.scale(j, x0),
        Scope::Overall => {
            let neg: Vec<f64> = (0..params.num_risks()).map(|j| -params.log_scale(j, x0)).collect();
            let max = neg.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let lse = max + neg.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
            (-lse).exp()
        }
    }
}

/// Point value of a characteristic at `x0`.
pub fn value(params: &ModelParams, x0: f64, kind: Characteristic, scope: Scope) -> f64 {
    let e = mean_lifetime(params, x0, scope);
    match kind {
        Characteristic::Mttf => e,
        Characteristic::Reliability { mission_time } => (-mission_time / e).exp(),
        Characteristic::Quantile { alpha0 } => -(-alpha0).ln_1p() * e,
    }
}

/// Gradient with respect to `(a_01, a_11, …, a_0R, a_1R)`.
pub fn gradient(params: &ModelParams, x0: f64, kind: Characteristic, scope: Scope) -> DVector<f64> {
    let r = params.num_risks();
    let e = mean_lifetime(params, x0, scope);
    // ∂E/∂a_0k; ∂E/∂a_1k is x0 times this
    let mut de = vec![0.0; r];
    match scope {
        Scope::Overall => {
            for (k, pi) in relative_risks_at(params, x0).into_iter().enumerate() {
                de[k] = pi * e;
            }
        }
        Scope::Cause(j) => de[j] = e,
    }
    let factor = match kind {
        Characteristic::Mttf => 1.0,
        // R = exp(−t0/E) ⇒ ∂R = R·t0/E²·∂E
        Characteristic::Reliability { mission_time } => (-mission_time / e).exp() * mission_time / (e * e),
        Characteristic::Quantile { alpha0 } => -(-alpha0).ln_1p(),
    };
    DVector::from_iterator(2 * r, de.iter().flat_map(|&d| [factor * d, factor * d * x0]))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CharacteristicEstimate {
    pub kind: Characteristic,
    pub scope: Scope,
    pub value: f64,
    /// Asymptotic standard deviation of `√N(ĝ − g)`.
    pub sigma: f64,
    /// `sigma / √N`.
    pub std_error: f64,
    pub sample_size: u64,
    pub level: f64,
    /// Wald interval truncated to the natural domain.
    pub ci_direct: Interval,
    pub ci_transformed: Interval,
    /// Set when the transformed interval was undefined and the direct one was used.
    pub transformed_fallback: bool,
}

/// Delta-method variance `∇gᵀ Σ ∇g`.
pub fn delta_variance(grad: &DVector<f64>, covariance: &DMatrix<f64>) -> f64 {
    (grad.transpose() * covariance * grad)[(0, 0)].max(0.0)
}

/// Log-scale interval for positive characteristics and logit-scale for reliabilities.
pub fn transformed_ci(est: &CharacteristicEstimate, level: f64) -> Result<Interval> {
    let z = two_sided_z(level);
    let scaled = z * est.std_error;
    let g = est.value;
    match est.kind {
        Characteristic::Mttf | Characteristic::Quantile { .. } => {
            if !(g > 0.0) || !g.is_finite() {
                return Err(Error::Degenerate(format!("log transform undefined at {g}")));
            }
            let m = (scaled / g).exp();
            Ok(Interval::new(g / m, g * m))
        }
        Characteristic::Reliability { .. } => {
            if !(g > 0.0 && g < 1.0) {
                return Err(Error::Degenerate(format!("logit transform undefined at {g}")));
            }
            let s = (scaled / (g * (1.0 - g))).exp();
            Ok(Interval::new(g / (g + (1.0 - g) * s), g / (g + (1.0 - g) / s)))
        }
    }
}

/// Point estimate, standard error and asymptotic intervals from a fit with covariance.
pub fn estimate(
    fit: &FitResult,
    design: &StepStressDesign,
    kind: Characteristic,
    scope: Scope,
    level: f64,
) -> Result<CharacteristicEstimate> {
    kind.validate()?;
    check_scope(&fit.params, scope)?;
    if !(0.0..1.0).contains(&level) {
        return Err(Error::Domain(format!(
            "confidence level must lie in [0, 1), got {level}"
        )));
    }
    let x0 = design.x0();
    let g = value(&fit.params, x0, kind, scope);
    let sigma = delta_variance(&gradient(&fit.params, x0, kind, scope), fit.covariance()?).sqrt();
    let std_error = sigma / (fit.sample_size as f64).sqrt();
    let z = two_sided_z(level);
    let (lo, hi) = kind.domain();
    let ci_direct = Interval::new(g - z * std_error, g + z * std_error).clamp_to(lo, hi);
    let mut est = CharacteristicEstimate {
        kind,
        scope,
        value: g,
        sigma,
        std_error,
        sample_size: fit.sample_size,
        level,
        ci_direct,
        ci_transformed: ci_direct,
        transformed_fallback: false,
    };
    match transformed_ci(&est, level) {
        Ok(ci) => est.ci_transformed = ci,
        Err(_) => est.transformed_fallback = true,
    }
    Ok(est)
}

pub fn mttf(fit: &FitResult, design: &StepStressDesign, level: f64) -> Result<CharacteristicEstimate> {
    estimate(fit, design, Characteristic::Mttf, Scope::Overall, level)
}

pub fn reliability(
    fit: &FitResult,
    design: &StepStressDesign,
    mission_time: f64,
    level: f64,
) -> Result<CharacteristicEstimate> {
    estimate(
        fit,
        design,
        Characteristic::Reliability { mission_time },
        Scope::Overall,
        level,
    )
}

pub fn quantile(fit: &FitResult, design: &StepStressDesign, alpha0: f64, level: f64) -> Result<CharacteristicEstimate> {
    estimate(fit, design, Characteristic::Quantile { alpha0 }, Scope::Overall, level)
}

pub fn cause_specific_mttf(
    fit: &FitResult,
    design: &StepStressDesign,
    j: usize,
    level: f64,
) -> Result<CharacteristicEstimate> {
    estimate(fit, design, Characteristic::Mttf, Scope::Cause(j), level)
}

pub fn cause_specific_reliability(
    fit: &FitResult,
    design: &StepStressDesign,
    j: usize,
    mission_time: f64,
    level: f64,
) -> Result<CharacteristicEstimate> {
    estimate(
        fit,
        design,
        Characteristic::Reliability { mission_time },
        Scope::Cause(j),
        level,
    )
}

pub fn cause_specific_quantile(
    fit: &FitResult,
    design: &StepStressDesign,
    j: usize,
    alpha0: f64,
    level: f64,
) -> Result<CharacteristicEstimate> {
    estimate(fit, design, Characteristic::Quantile { alpha0 }, Scope::Cause(j), level)
}
