//! Reproduction angular error and per-patch statistics.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::color::{xyz_to_linear_rgb, XyzColor};

/// Norms below this are treated as zero vectors.
pub const ZERO_NORM: f64 = 1e-12;

/// Error recorded for a patch whose corrected value collapsed to zero.
pub const DEGENERATE_PATCH_ERROR_DEG: f64 = 180.0;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("angular error is undefined for a zero vector")]
    ZeroVector,
    #[error("adjusted chart has {adjusted} patches but ground truth has {ground_truth}")]
    LengthMismatch { adjusted: usize, ground_truth: usize },
    #[error("nothing to aggregate")]
    EmptyInput,
    #[error("image {image} does not have the same patch ids as the first image")]
    InconsistentPatches { image: usize },
    #[error("ground-truth patch {patch_id} is a zero vector")]
    ZeroGroundTruth { patch_id: usize },
}

/// Color space in which angular errors are measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EvalSpace {
    #[default]
    Xyz,
    /// Linear sRGB primaries, unclamped.
    LinearRgb,
}

impl EvalSpace {
    fn project(self, c: XyzColor) -> XyzColor {
        match self {
            EvalSpace::Xyz => c,
            EvalSpace::LinearRgb => XyzColor::from_array(xyz_to_linear_rgb(c)),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            EvalSpace::Xyz => "xyz",
            EvalSpace::LinearRgb => "linear-rgb",
        }
    }
}

/// Angle in degrees between `p` and `q` as vectors.
///
/// Evaluated as `atan2(|p x q|, p . q)`, which equals the arccosine of the
/// normalized dot product but keeps full precision near 0 and 180 degrees.
pub fn angular_error(p: XyzColor, q: XyzColor) -> Result<f64, EvalError> {
    let (np, nq) = (p.norm(), q.norm());
    if !(np >= ZERO_NORM && nq >= ZERO_NORM) {
        return Err(EvalError::ZeroVector);
    }
    // Normalize first so the cross and dot products stay well scaled.
    let (p, q) = (p.scale(1.0 / np), q.scale(1.0 / nq));
    Ok(p.cross(q).norm().atan2(p.dot(q)).to_degrees())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PatchErrorRecord {
    /// 1-based patch number.
    pub patch_id: usize,
    pub error_deg: f64,
}

/// Angular error of every patch of a corrected chart against the ground truth.
pub fn evaluate_chart(adjusted: &[XyzColor], ground_truth: &[XyzColor]) -> Result<Vec<PatchErrorRecord>, EvalError> {
    evaluate_chart_in(EvalSpace::Xyz, adjusted, ground_truth)
}

/// [`evaluate_chart`] with both charts projected into `space` first.
///
/// A zero adjusted patch is scored [`DEGENERATE_PATCH_ERROR_DEG`] with a
/// warning; a zero ground-truth patch is an error.
pub fn evaluate_chart_in(
    space: EvalSpace,
    adjusted: &[XyzColor],
    ground_truth: &[XyzColor],
) -> Result<Vec<PatchErrorRecord>, EvalError> {
    if adjusted.len() != ground_truth.len() {
        return Err(EvalError::LengthMismatch { adjusted: adjusted.len(), ground_truth: ground_truth.len() });
    }
    adjusted
        .iter()
        .zip(ground_truth)
        .enumerate()
        .map(|(i, (a, g))| {
            let patch_id = i + 1;
            let (a, g) = (space.project(*a), space.project(*g));
            if g.norm().is_nan() || g.norm() < ZERO_NORM {
                return Err(EvalError::ZeroGroundTruth { patch_id });
            }
            let error_deg = angular_error(a, g).unwrap_or_else(|_| {
                log::warn!(
                    "patch {patch_id}: corrected value is a zero vector, scoring {DEGENERATE_PATCH_ERROR_DEG} deg"
                );
                DEGENERATE_PATCH_ERROR_DEG
            });
            Ok(PatchErrorRecord { patch_id, error_deg })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PatchStats {
    pub patch_id: usize,
    pub mean_deg: f64,
    /// Population standard deviation across images.
    pub std_deg: f64,
}

/// Per-patch mean/std of one method across a set of images.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatchReport {
    pub method_name: String,
    pub per_patch: Vec<PatchStats>,
    /// Mean over every (image, patch) error pooled together.
    pub total_average_mean: f64,
    /// Population std over the same pool.
    pub total_average_std: f64,
    pub image_count: usize,
}

/// Mean and population standard deviation, independent of input order.
fn mean_std(values: &mut [f64]) -> (f64, f64) {
    values.sort_by(f64::total_cmp);
    let n = values.len() as f64;
    let mean = compensated_sum(values.iter().copied()) / n;
    let mut deviations: Vec<f64> = values.iter().map(|v| (v - mean).powi(2)).collect();
    deviations.sort_by(f64::total_cmp);
    let var = compensated_sum(deviations.into_iter()) / n;
    (mean, var.sqrt())
}

/// Neumaier summation.
fn compensated_sum(values: impl Iterator<Item = f64>) -> f64 {
    let (mut sum, mut comp) = (0.0_f64, 0.0_f64);
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Aggregates per-image patch errors into per-patch and pooled statistics.
///
/// Results do not depend on the order of `reports`.
pub fn aggregate(reports: &[Vec<PatchErrorRecord>], method_name: &str) -> Result<PatchReport, EvalError> {
    let first = reports.first().ok_or(EvalError::EmptyInput)?;
    if first.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let ids: Vec<usize> = first.iter().map(|r| r.patch_id).collect();
    for (image, report) in reports.iter().enumerate() {
        if report.len() != ids.len() || report.iter().zip(&ids).any(|(r, id)| r.patch_id != *id) {
            return Err(EvalError::InconsistentPatches { image });
        }
    }
    let per_patch = ids
        .iter()
        .enumerate()
        .map(|(col, &patch_id)| {
            let mut values: Vec<f64> = reports.iter().map(|r| r[col].error_deg).collect();
            let (mean_deg, std_deg) = mean_std(&mut values);
            PatchStats { patch_id, mean_deg, std_deg }
        })
        .collect();
    let mut pooled: Vec<f64> = reports.iter().flatten().map(|r| r.error_deg).collect();
    let (total_average_mean, total_average_std) = mean_std(&mut pooled);
    Ok(PatchReport {
        method_name: method_name.to_owned(),
        per_patch,
        total_average_mean,
        total_average_std,
        image_count: reports.len(),
    })
}
