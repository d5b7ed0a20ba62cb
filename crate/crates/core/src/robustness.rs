//! Influence function of the MDPDE under point contamination of a multinomial
//! cell, and the derived gross-error and self-standardized sensitivities.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimation::{information_matrices, invert_information, DEFAULT_MAX_CONDITION};
use crate::model::{cell_probabilities, derivative_matrix, ModelParams, StepStressDesign};

/// Influence functions for every cell: column `i0` is
/// `J_β⁻¹ Wᵀ D_p^{β−1}(δ_{i0} − p)`.
pub fn influence_matrix(params: &ModelParams, design: &StepStressDesign, beta: f64) -> Result<DMatrix<f64>> {
    let p = cell_probabilities(params, design);
    let w = derivative_matrix(params, design);
    let (j, _) = information_matrices(params, design, beta);
    let j_inv = invert_information(&j, DEFAULT_MAX_CONDITION)?;
    let m = p.len();
    // (δ_{i0} − p) for all i0 as columns, then scaled row-wise by p^{β−1}
    let mut contrast = DMatrix::from_fn(m, m, |r, c| if r == c { 1.0 } else { 0.0 } - p[r]);
    for r in 0..m {
        let weight = if p[r] > 0.0 { p[r].powf(beta - 1.0) } else { 0.0 };
        contrast.row_mut(r).scale_mut(weight);
    }
    Ok(j_inv * w.transpose() * contrast)
}

pub fn influence_function(
    params: &ModelParams,
    design: &StepStressDesign,
    beta: f64,
    cell: usize,
) -> Result<DVector<f64>> {
    if cell >= design.num_cells() {
        return Err(Error::InvalidParams(format!(
            "cell {cell} out of range for {} cells",
            design.num_cells()
        )));
    }
    Ok(influence_matrix(params, design, beta)?.column(cell).into_owned())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SensitivityKind {
    /// `max_{i0} ‖IF(i0)‖₂`.
    GrossError,
    /// `max_{i0} IF(i0)ᵀ Σ_β⁻¹ IF(i0)`.
    SelfStandardized,
}

/// Per-cell sensitivity values.
pub fn cell_sensitivities(
    params: &ModelParams,
    design: &StepStressDesign,
    beta: f64,
    kind: SensitivityKind,
) -> Result<Vec<f64>> {
    let ifs = influence_matrix(params, design, beta)?;
    match kind {
        SensitivityKind::GrossError => Ok(ifs.column_iter().map(|c| c.norm()).collect()),
        SensitivityKind::SelfStandardized => {
            // Σ⁻¹ = J K⁻¹ J
            let (j, k) = information_matrices(params, design, beta);
            let chol = k.clone().cholesky().ok_or(Error::SingularInformation {
                condition: crate::estimation::condition_number(&k),
            })?;
            let ks = chol.solve(&(&j * &ifs));
            let jif = &j * &ifs;
            Ok((0..ifs.ncols()).map(|c| jif.column(c).dot(&ks.column(c))).collect())
        }
    }
}

pub fn sensitivity(params: &ModelParams, design: &StepStressDesign, beta: f64, kind: SensitivityKind) -> Result<f64> {
    Ok(cell_sensitivities(params, design, beta, kind)?
        .into_iter()
        .fold(0.0, f64::max))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityCurve {
    pub kind: SensitivityKind,
    pub betas: Vec<f64>,
    pub values: Vec<f64>,
    /// Zero-based flat cell index attaining the maximum at each β.
    pub worst_cells: Vec<usize>,
    /// Cells over which the maximum was taken.
    pub contamination_cells: Vec<usize>,
}

impl SensitivityCurve {
    /// True when no value exceeds its predecessor by more than `tolerance`.
    pub fn is_nonincreasing(&self, tolerance: f64) -> bool {
        self.values.windows(2).all(|w| w[1] <= w[0] + tolerance)
    }
}

pub fn sensitivity_curve(
    params: &ModelParams,
    design: &StepStressDesign,
    betas: &[f64],
    kind: SensitivityKind,
) -> Result<SensitivityCurve> {
    let mut values = Vec::with_capacity(betas.len());
    let mut worst_cells = Vec::with_capacity(betas.len());
    for &beta in betas {
        let cells = cell_sensitivities(params, design, beta, kind)?;
        let (arg, max) =
            cells.iter().copied().enumerate().fold(
                (0, f64::NEG_INFINITY),
                |acc, (i, v)| if v > acc.1 { (i, v) } else { acc },
            );
        values.push(max);
        worst_cells.push(arg);
    }
    Ok(SensitivityCurve {
        kind,
        betas: betas.to_vec(),
        values,
        worst_cells,
        contamination_cells: (0..design.num_cells()).collect(),
    })
}
