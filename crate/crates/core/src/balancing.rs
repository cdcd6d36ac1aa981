//! White balancing, n-color balancing and the least-squares multi-color
//! baseline.
//!
//! A white-balance matrix maps one observed white to its reference in some
//! adaptation basis: `M = M_A^-1 * diag(dest / source) * M_A`. n-color
//! balancing builds one such matrix per (target, ground truth) pair and blends
//! them per pixel, weighting each matrix by the inverse of the pixel's
//! chromaticity distance to that matrix's target. A pixel that coincides with a
//! target in chromaticity uses that target's matrix alone, so every target is
//! reproduced exactly.

use thiserror::Error;

use crate::color::{AdaptationModel, ColorError, Mat3, XyzColor};

/// Lower clamp applied to `Y` before forming chromaticity ratios.
pub const LUMINANCE_EPSILON: f64 = 1e-6;

/// A cone response is degenerate when its magnitude is below this fraction of
/// the largest component.
pub const DEGENERATE_CONE_RATIO: f64 = 1e-9;

/// Two targets closer than this in chromaticity are considered duplicates.
pub const DUPLICATE_TARGET_DISTANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BalanceError {
    #[error("source white has a near-zero cone response in the adaptation basis")]
    DegenerateWhite,
    #[error("target {0} has a near-zero cone response or non-positive luminance")]
    DegenerateTarget(usize),
    #[error("targets {0} and {1} have the same chromaticity")]
    DuplicateTarget(usize, usize),
    #[error("at least one color correspondence is required")]
    NoCorrespondences,
    #[error("target colors do not span three dimensions")]
    RankDeficient,
}

/// Something that maps working-space colors to corrected working-space colors.
pub trait ColorCorrector {
    fn correct(&self, p: XyzColor) -> XyzColor;
}

impl ColorCorrector for Mat3 {
    fn correct(&self, p: XyzColor) -> XyzColor {
        apply_matrix(self, p)
    }
}

impl<C: ColorCorrector + ?Sized> ColorCorrector for &C {
    fn correct(&self, p: XyzColor) -> XyzColor {
        (**self).correct(p)
    }
}

/// One observed target color and the color it should become.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ColorCorrespondence {
    /// Color as observed under the scene illuminant.
    pub target: XyzColor,
    /// Desired color after correction.
    pub ground_truth: XyzColor,
}

impl ColorCorrespondence {
    pub fn new(target: XyzColor, ground_truth: XyzColor) -> Self {
        Self { target, ground_truth }
    }
}

/// `M_A^-1 * diag(dest / source) * M_A`, or `None` when a source cone
/// response is degenerate.
fn adaptation_matrix(model: &AdaptationModel, source: XyzColor, dest: XyzColor) -> Option<Mat3> {
    let src = model.to_cone_response(source).to_array();
    let dst = model.to_cone_response(dest).to_array();
    let largest = src.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
    if !largest.is_finite() || src.iter().any(|v| v.abs() < DEGENERATE_CONE_RATIO * largest || *v == 0.0) {
        return None;
    }
    let gains = Mat3::diagonal(dst[0] / src[0], dst[1] / src[1], dst[2] / src[2]);
    let m = model.basis_inverse().mul_mat(&gains).mul_mat(model.basis());
    m.is_finite().then_some(m)
}

/// A conventional white-balance correction.
#[derive(Debug, Clone, PartialEq)]
pub struct WbCorrector {
    pub matrix: Mat3,
    pub model: AdaptationModel,
    pub source_white: XyzColor,
    pub dest_white: XyzColor,
}

/// Builds the white-balance matrix mapping `source_white` to `dest_white`.
pub fn build_wb(
    model: &AdaptationModel,
    source_white: XyzColor,
    dest_white: XyzColor,
) -> Result<WbCorrector, BalanceError> {
    let matrix = adaptation_matrix(model, source_white, dest_white).ok_or(BalanceError::DegenerateWhite)?;
    Ok(WbCorrector { matrix, model: *model, source_white, dest_white })
}

impl ColorCorrector for WbCorrector {
    fn correct(&self, p: XyzColor) -> XyzColor {
        apply_matrix(&self.matrix, p)
    }
}

/// Chromaticity distance between two colors, using `(X/Y, Z/Y)` ratios.
///
/// `Y` is clamped to [`LUMINANCE_EPSILON`] from below so black pixels stay
/// finite.
pub fn chroma_distance(p: XyzColor, t: XyzColor) -> f64 {
    let (px, pz) = chroma_ratios(p);
    let (tx, tz) = chroma_ratios(t);
    (px - tx).hypot(pz - tz)
}

fn chroma_ratios(c: XyzColor) -> (f64, f64) {
    let y = c.y.max(LUMINANCE_EPSILON);
    (c.x / y, c.z / y)
}

/// Distances from a pixel to each target and the resulting blend weights.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector {
    pub distances: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Per-pixel blend weights over `targets`.
///
/// With distances `d`, each target gets `d'_m = sum(d) / d_m` normalized so
/// the weights sum to one. If the pixel sits exactly on a target (`d_m = 0`),
/// that target alone gets weight one; ties go to the lowest index.
pub fn compute_weights(p: XyzColor, targets: &[XyzColor]) -> WeightVector {
    let distances: Vec<f64> = targets.iter().map(|t| chroma_distance(p, *t)).collect();
    let weights = weights_from_distances(&distances);
    WeightVector { distances, weights }
}

fn one_hot(n: usize, index: usize) -> Vec<f64> {
    let mut weights = vec![0.0; n];
    weights[index] = 1.0;
    weights
}

fn weights_from_distances(distances: &[f64]) -> Vec<f64> {
    let n = distances.len();
    if n == 0 {
        return Vec::new();
    }
    if let Some(hit) = distances.iter().position(|d| *d == 0.0) {
        return one_hot(n, hit);
    }
    let total: f64 = distances.iter().sum();
    let inverse: Vec<f64> = distances.iter().map(|d| total / d).collect();
    let inverse_total: f64 = inverse.iter().sum();
    if !inverse_total.is_finite() {
        // A distance so small that total/d overflowed: it dominates every
        // other term, so treat it as the zero-distance case.
        let nearest = distances.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).map(|(i, _)| i).unwrap_or(0);
        return one_hot(n, nearest);
    }
    inverse.iter().map(|d| d / inverse_total).collect()
}

/// n-color balancing: one adaptation matrix per correspondence, blended per
/// pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct NcbCorrector {
    matrices: Vec<Mat3>,
    correspondences: Vec<ColorCorrespondence>,
    targets: Vec<XyzColor>,
    model: AdaptationModel,
}

/// Builds an n-color corrector, one matrix per correspondence.
pub fn build_ncb(
    model: &AdaptationModel,
    correspondences: &[ColorCorrespondence],
) -> Result<NcbCorrector, BalanceError> {
    if correspondences.is_empty() {
        return Err(BalanceError::NoCorrespondences);
    }
    let matrices = correspondences
        .iter()
        .enumerate()
        .map(|(m, c)| {
            if !(c.target.y > 0.0 && c.ground_truth.y > 0.0) {
                return Err(BalanceError::DegenerateTarget(m));
            }
            adaptation_matrix(model, c.target, c.ground_truth).ok_or(BalanceError::DegenerateTarget(m))
        })
        .collect::<Result<Vec<_>, _>>()?;
    for (i, a) in correspondences.iter().enumerate() {
        for (j, b) in correspondences.iter().enumerate().skip(i + 1) {
            if chroma_distance(a.target, b.target) < DUPLICATE_TARGET_DISTANCE {
                return Err(BalanceError::DuplicateTarget(i, j));
            }
        }
    }
    Ok(NcbCorrector {
        matrices,
        targets: correspondences.iter().map(|c| c.target).collect(),
        correspondences: correspondences.to_vec(),
        model: *model,
    })
}

impl NcbCorrector {
    pub fn matrices(&self) -> &[Mat3] {
        &self.matrices
    }

    pub fn correspondences(&self) -> &[ColorCorrespondence] {
        &self.correspondences
    }

    pub fn targets(&self) -> &[XyzColor] {
        &self.targets
    }

    pub fn model(&self) -> &AdaptationModel {
        &self.model
    }

    pub fn len(&self) -> usize {
        self.matrices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matrices.is_empty()
    }

    pub fn weights(&self, p: XyzColor) -> WeightVector {
        compute_weights(p, &self.targets)
    }

    /// The blended matrix used for pixel `p`.
    pub fn blended_matrix(&self, p: XyzColor) -> Mat3 {
        let weights = self.weights(p).weights;
        // A single active weight selects its matrix unchanged.
        if let Some(hit) = weights.iter().position(|k| *k == 1.0) {
            return self.matrices[hit];
        }
        self.matrices
            .iter()
            .zip(&weights)
            .map(|(m, k)| m.scale(*k))
            .reduce(|acc, m| acc + m)
            .expect("corrector holds at least one matrix")
    }

    pub fn apply(&self, p: XyzColor) -> XyzColor {
        self.blended_matrix(p).apply(p)
    }
}

impl ColorCorrector for NcbCorrector {
    fn correct(&self, p: XyzColor) -> XyzColor {
        self.apply(p)
    }
}

/// Free-function form of [`NcbCorrector::apply`].
pub fn apply_ncb(corrector: &NcbCorrector, p: XyzColor) -> XyzColor {
    corrector.apply(p)
}

/// Plain matrix-vector product.
pub fn apply_matrix(m: &Mat3, p: XyzColor) -> XyzColor {
    m.apply(p)
}

/// Single-matrix multi-color baseline: the 3x3 matrix minimizing
/// `sum ||M T_m - G_m||^2` over all correspondences.
///
/// Solved with the normal equations `M = (sum G T^T) (sum T T^T)^-1`.
pub fn build_cheng(correspondences: &[ColorCorrespondence]) -> Result<Mat3, BalanceError> {
    if correspondences.len() < 3 {
        return Err(BalanceError::RankDeficient);
    }
    let outer = |a: XyzColor, b: XyzColor| {
        let (a, b) = (a.to_array(), b.to_array());
        Mat3::from_rows([
            [a[0] * b[0], a[0] * b[1], a[0] * b[2]],
            [a[1] * b[0], a[1] * b[1], a[1] * b[2]],
            [a[2] * b[0], a[2] * b[1], a[2] * b[2]],
        ])
    };
    let (gram, cross) = correspondences.iter().fold((Mat3::ZERO, Mat3::ZERO), |(gram, cross), c| {
        (gram + outer(c.target, c.target), cross + outer(c.ground_truth, c.target))
    });
    let gram_inv = gram.invert().map_err(|ColorError::SingularMatrix| BalanceError::RankDeficient)?;
    Ok(cross.mul_mat(&gram_inv))
}

/// Least-squares objective `sum ||M T_m - G_m||^2`.
pub fn least_squares_objective(m: &Mat3, correspondences: &[ColorCorrespondence]) -> f64 {
    correspondences
        .iter()
        .map(|c| {
            let r = m.apply(c.target);
            let g = c.ground_truth;
            (r.x - g.x).powi(2) + (r.y - g.y).powi(2) + (r.z - g.z).powi(2)
        })
        .sum()
}
