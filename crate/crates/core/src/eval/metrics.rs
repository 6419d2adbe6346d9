use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{svd, ComponentBasis, DataMatrix};
use crate::qapca::{assignment_rank, BinaryAssignment};

fn check_basis(d: usize, r: &ComponentBasis) -> Result<()> {
    if r.dimension() != d {
        return Err(Error::Dimension(format!(
            "basis has dimension {}, data has {d} features",
            r.dimension()
        )));
    }
    Ok(())
}

/// `||X - R R^T X||_F^2 / ||X||_F^2`.
pub fn reconstruction_error(x: &DataMatrix, r: &ComponentBasis) -> Result<f64> {
    check_basis(x.features(), r)?;
    let total = x.as_matrix().norm_squared();
    if total == 0.0 {
        return Err(Error::ZeroSignal);
    }
    Ok(r.residual(x.as_matrix()).norm_squared() / total)
}

/// Number of unique components before orthonormalization: the numerical rank
/// of `X B`.
pub fn average_rank(x: &DataMatrix, b: &BinaryAssignment) -> Result<usize> {
    assignment_rank(x, b)
}

/// Squared prediction error `||x - R R^T x||^2`.
pub fn spe(x: &DVector<f64>, r: &ComponentBasis) -> Result<f64> {
    check_basis(x.len(), r)?;
    let coords = r.as_matrix().transpose() * x;
    Ok((x - r.as_matrix() * coords).norm_squared())
}

/// SPE of every sample (column) of `x`.
pub fn spe_scores(x: &DataMatrix, r: &ComponentBasis) -> Result<Vec<f64>> {
    check_basis(x.features(), r)?;
    let residual = r.residual(x.as_matrix());
    Ok(residual.column_iter().map(|c| c.norm_squared()).collect())
}

/// Principal angles between two subspaces, ascending.
pub fn principal_angles(a: &ComponentBasis, b: &ComponentBasis) -> Result<Vec<f64>> {
    check_basis(a.dimension(), b)?;
    let m: DMatrix<f64> = a.as_matrix().transpose() * b.as_matrix();
    let mut angles: Vec<f64> = svd(&m)?
        .singular_values
        .iter()
        .map(|c| c.clamp(-1.0, 1.0).acos())
        .collect();
    angles.sort_by(f64::total_cmp);
    Ok(angles)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DetectionCounts {
    pub true_positives: u64,
    pub false_positives: u64,
    pub faultless: u64,
    pub faulty: u64,
}

impl DetectionCounts {
    pub fn new(true_positives: u64, false_positives: u64, faultless: u64, faulty: u64) -> Result<Self> {
        if false_positives > faultless {
            return Err(Error::InvalidCounts(format!(
                "{false_positives} false positives among {faultless} faultless samples"
            )));
        }
        if true_positives > faulty {
            return Err(Error::InvalidCounts(format!(
                "{true_positives} true positives among {faulty} faulty samples"
            )));
        }
        Ok(Self {
            true_positives,
            false_positives,
            faultless,
            faulty,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionRates {
    pub fpr: f64,
    pub tpr: f64,
    pub precision: f64,
}

/// FPR, TPR (recall) and precision. Precision is 1 when nothing was flagged.
pub fn detection_rates(c: &DetectionCounts) -> Result<DetectionRates> {
    let c = DetectionCounts::new(c.true_positives, c.false_positives, c.faultless, c.faulty)?;
    if c.faultless == 0 || c.faulty == 0 {
        return Err(Error::InvalidCounts(
            "rates need at least one faultless and one faulty sample".into(),
        ));
    }
    let flagged = c.true_positives + c.false_positives;
    Ok(DetectionRates {
        fpr: c.false_positives as f64 / c.faultless as f64,
        tpr: c.true_positives as f64 / c.faulty as f64,
        precision: if flagged == 0 {
            1.0
        } else {
            c.true_positives as f64 / flagged as f64
        },
    })
}

/// Mean and standard error of the mean (sample standard deviation / sqrt n).
pub fn mean_sem(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}
