//! Tristimulus values, 3x3 matrix algebra and chromatic-adaptation bases.
//!
//! Everything here works in CIE XYZ with the convention that the reference
//! white has `Y = 1.0`. The sRGB helpers exist so that images can be moved
//! into and out of that working space.

use std::fmt;
use std::ops::{Add, Mul};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Relative singularity tolerance for [`Mat3::invert`]: a matrix is treated as
/// singular when `|det| <= SINGULARITY_TOLERANCE * max|entry|^3`.
pub const SINGULARITY_TOLERANCE: f64 = 1e-12;

/// CIE standard illuminant D65 (2 degree observer), `Y = 1`.
pub const D65: XyzColor = XyzColor::new(0.95047, 1.0, 1.08883);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum ColorError {
    #[error("matrix is singular (|det| below relative tolerance)")]
    SingularMatrix,
}

/// A tristimulus triple in CIE XYZ.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct XyzColor {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl XyzColor {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub const fn from_array(v: [f64; 3]) -> Self {
        Self::new(v[0], v[1], v[2])
    }

    pub const fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn scale(self, factor: f64) -> Self {
        Self::new(self.x * factor, self.y * factor, self.z * factor)
    }

    pub fn dot(self, other: Self) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn cross(self, other: Self) -> Self {
        Self::new(
            self.y * other.z - self.z * other.y,
            self.z * other.x - self.x * other.z,
            self.x * other.y - self.y * other.x,
        )
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    /// Largest absolute component.
    pub fn max_abs(self) -> f64 {
        self.x.abs().max(self.y.abs()).max(self.z.abs())
    }
}

impl fmt::Display for XyzColor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.x, self.y, self.z)
    }
}

/// A 3x3 matrix stored row-major: `m[row][col]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mat3 {
    pub m: [[f64; 3]; 3],
}

impl Mat3 {
    pub const IDENTITY: Mat3 = Mat3::from_rows([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);
    pub const ZERO: Mat3 = Mat3::from_rows([[0.0; 3]; 3]);

    pub const fn from_rows(m: [[f64; 3]; 3]) -> Self {
        Self { m }
    }

    pub const fn diagonal(a: f64, b: f64, c: f64) -> Self {
        Self::from_rows([[a, 0.0, 0.0], [0.0, b, 0.0], [0.0, 0.0, c]])
    }

    pub fn transpose(&self) -> Self {
        let m = &self.m;
        Self::from_rows([[m[0][0], m[1][0], m[2][0]], [m[0][1], m[1][1], m[2][1]], [m[0][2], m[1][2], m[2][2]]])
    }

    pub fn determinant(&self) -> f64 {
        let m = &self.m;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    pub fn max_abs(&self) -> f64 {
        self.m.iter().flatten().fold(0.0_f64, |acc, v| acc.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.m.iter().flatten().all(|v| v.is_finite())
    }

    /// Inverse via the adjugate.
    ///
    /// Fails with [`ColorError::SingularMatrix`] when `|det|` is not above
    /// [`SINGULARITY_TOLERANCE`] relative to the cube of the largest entry.
    pub fn invert(&self) -> Result<Mat3, ColorError> {
        let scale = self.max_abs();
        let det = self.determinant();
        if !det.is_finite() || scale == 0.0 || det.abs() <= SINGULARITY_TOLERANCE * scale.powi(3) {
            return Err(ColorError::SingularMatrix);
        }
        let m = &self.m;
        let cof = |r0: usize, r1: usize, c0: usize, c1: usize| m[r0][c0] * m[r1][c1] - m[r0][c1] * m[r1][c0];
        let adj = [
            [cof(1, 2, 1, 2), -cof(0, 2, 1, 2), cof(0, 1, 1, 2)],
            [-cof(1, 2, 0, 2), cof(0, 2, 0, 2), -cof(0, 1, 0, 2)],
            [cof(1, 2, 0, 1), -cof(0, 2, 0, 1), cof(0, 1, 0, 1)],
        ];
        let inv_det = 1.0 / det;
        let mut out = [[0.0; 3]; 3];
        for (row, adj_row) in out.iter_mut().zip(adj.iter()) {
            for (v, a) in row.iter_mut().zip(adj_row.iter()) {
                *v = a * inv_det;
            }
        }
        Ok(Mat3::from_rows(out))
    }

    pub fn mul_mat(&self, rhs: &Mat3) -> Mat3 {
        let mut out = [[0.0; 3]; 3];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = self.m[i][0] * rhs.m[0][j] + self.m[i][1] * rhs.m[1][j] + self.m[i][2] * rhs.m[2][j];
            }
        }
        Mat3::from_rows(out)
    }

    pub fn mul_vec(&self, v: [f64; 3]) -> [f64; 3] {
        let m = &self.m;
        [
            m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
            m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
            m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
        ]
    }

    pub fn apply(&self, c: XyzColor) -> XyzColor {
        XyzColor::from_array(self.mul_vec(c.to_array()))
    }

    pub fn scale(&self, factor: f64) -> Mat3 {
        let mut out = self.m;
        out.iter_mut().flatten().for_each(|v| *v *= factor);
        Mat3::from_rows(out)
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.m.iter().flatten().map(|v| v * v).sum::<f64>().sqrt()
    }
}

impl Default for Mat3 {
    fn default() -> Self {
        Self::IDENTITY
    }
}

impl Add for Mat3 {
    type Output = Mat3;

    fn add(self, rhs: Mat3) -> Mat3 {
        let mut out = self.m;
        for (row, rhs_row) in out.iter_mut().zip(rhs.m.iter()) {
            for (v, r) in row.iter_mut().zip(rhs_row.iter()) {
                *v += r;
            }
        }
        Mat3::from_rows(out)
    }
}

impl Mul for Mat3 {
    type Output = Mat3;

    fn mul(self, rhs: Mat3) -> Mat3 {
        self.mul_mat(&rhs)
    }
}

impl Mul<XyzColor> for Mat3 {
    type Output = XyzColor;

    fn mul(self, rhs: XyzColor) -> XyzColor {
        self.apply(rhs)
    }
}

/// Bradford cone-response matrix, entries as published by Lam.
pub const BRADFORD: Mat3 =
    Mat3::from_rows([[0.8951, 0.2664, -0.1614], [-0.7502, 1.7135, 0.0367], [0.0389, -0.0685, 1.0296]]);

/// Von Kries basis: the Hunt-Pointer-Estevez cone fundamentals normalized to
/// D65, as tabulated by Lindbloom.
pub const VON_KRIES: Mat3 =
    Mat3::from_rows([[0.40024, 0.70760, -0.08081], [-0.22630, 1.16532, 0.04570], [0.0, 0.0, 0.91822]]);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AdaptationKind {
    /// Identity basis: correction is a plain per-channel XYZ gain.
    XyzScaling,
    VonKries,
    Bradford,
}

impl AdaptationKind {
    pub const ALL: [AdaptationKind; 3] =
        [AdaptationKind::XyzScaling, AdaptationKind::VonKries, AdaptationKind::Bradford];

    pub fn basis(self) -> Mat3 {
        match self {
            AdaptationKind::XyzScaling => Mat3::IDENTITY,
            AdaptationKind::VonKries => VON_KRIES,
            AdaptationKind::Bradford => BRADFORD,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            AdaptationKind::XyzScaling => "XYZ",
            AdaptationKind::VonKries => "VonKries",
            AdaptationKind::Bradford => "Bradford",
        }
    }
}

impl fmt::Display for AdaptationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A chromatic adaptation model: the basis `M_A` in which an illuminant change
/// is modelled as a diagonal gain, together with its precomputed inverse.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptationModel {
    kind: AdaptationKind,
    basis: Mat3,
    basis_inverse: Mat3,
}

impl AdaptationModel {
    pub fn new(kind: AdaptationKind) -> Self {
        let basis = kind.basis();
        let basis_inverse = basis.invert().expect("built-in adaptation bases are well conditioned");
        Self { kind, basis, basis_inverse }
    }

    pub fn xyz_scaling() -> Self {
        Self::new(AdaptationKind::XyzScaling)
    }

    pub fn von_kries() -> Self {
        Self::new(AdaptationKind::VonKries)
    }

    pub fn bradford() -> Self {
        Self::new(AdaptationKind::Bradford)
    }

    pub fn kind(&self) -> AdaptationKind {
        self.kind
    }

    pub fn basis(&self) -> &Mat3 {
        &self.basis
    }

    pub fn basis_inverse(&self) -> &Mat3 {
        &self.basis_inverse
    }

    /// Maps a tristimulus value into the adaptation basis.
    pub fn to_cone_response(&self, c: XyzColor) -> ConeResponse {
        let [rho, gamma, beta] = self.basis.mul_vec(c.to_array());
        ConeResponse { rho, gamma, beta }
    }
}

impl From<AdaptationKind> for AdaptationModel {
    fn from(kind: AdaptationKind) -> Self {
        Self::new(kind)
    }
}

/// Coordinates of a color in an adaptation basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConeResponse {
    pub rho: f64,
    pub gamma: f64,
    pub beta: f64,
}

impl ConeResponse {
    pub fn to_array(self) -> [f64; 3] {
        [self.rho, self.gamma, self.beta]
    }
}

/// Free-function form of [`AdaptationModel::to_cone_response`].
pub fn to_cone_response(model: &AdaptationModel, c: XyzColor) -> ConeResponse {
    model.to_cone_response(c)
}

/// Inverts `m`, see [`Mat3::invert`].
pub fn mat3_invert(m: &Mat3) -> Result<Mat3, ColorError> {
    m.invert()
}

// ---------------------------------------------------------------------------
// sRGB (IEC 61966-2-1)
// ---------------------------------------------------------------------------

/// Linear sRGB (D65) to XYZ, four-decimal IEC 61966-2-1 primaries.
pub const SRGB_TO_XYZ: Mat3 =
    Mat3::from_rows([[0.4124, 0.3576, 0.1805], [0.2126, 0.7152, 0.0722], [0.0193, 0.1192, 0.9505]]);

fn xyz_to_srgb_matrix() -> &'static Mat3 {
    static INV: std::sync::OnceLock<Mat3> = std::sync::OnceLock::new();
    INV.get_or_init(|| SRGB_TO_XYZ.invert().expect("sRGB primaries matrix is invertible"))
}

/// Sample depth of display-encoded RGB.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BitDepth {
    Eight,
    Sixteen,
}

impl BitDepth {
    pub fn max_value(self) -> u16 {
        match self {
            BitDepth::Eight => 255,
            BitDepth::Sixteen => 65535,
        }
    }

    pub fn from_max_value(maxval: u32) -> Option<Self> {
        match maxval {
            255 => Some(BitDepth::Eight),
            65535 => Some(BitDepth::Sixteen),
            _ => None,
        }
    }
}

/// sRGB electro-optical transfer function on a normalized value.
pub fn srgb_decode(encoded: f64) -> f64 {
    if encoded <= 0.04045 {
        encoded / 12.92
    } else {
        ((encoded + 0.055) / 1.055).powf(2.4)
    }
}

/// Inverse of [`srgb_decode`].
pub fn srgb_encode(linear: f64) -> f64 {
    if linear <= 0.003_130_8 {
        linear * 12.92
    } else {
        1.055 * linear.powf(1.0 / 2.4) - 0.055
    }
}

pub fn linear_rgb_to_xyz(rgb: [f64; 3]) -> XyzColor {
    XyzColor::from_array(SRGB_TO_XYZ.mul_vec(rgb))
}

/// XYZ to linear sRGB without clamping; components may be negative or above 1.
pub fn xyz_to_linear_rgb(c: XyzColor) -> [f64; 3] {
    xyz_to_srgb_matrix().mul_vec(c.to_array())
}

/// Decodes a display-encoded sRGB triple into XYZ.
///
/// Channel values above the bit-depth maximum are treated as the maximum.
pub fn srgb_to_xyz(rgb: [u16; 3], depth: BitDepth) -> XyzColor {
    let max = f64::from(depth.max_value());
    let linear = rgb.map(|v| srgb_decode(f64::from(v).min(max) / max));
    linear_rgb_to_xyz(linear)
}

/// Encodes XYZ to display sRGB; linear values are clamped to `[0, 1]` first.
pub fn xyz_to_srgb(c: XyzColor, depth: BitDepth) -> [u16; 3] {
    let max = f64::from(depth.max_value());
    xyz_to_linear_rgb(c).map(|l| {
        // NaN falls through clamp unchanged; map it to black.
        let l = if l.is_nan() { 0.0 } else { l.clamp(0.0, 1.0) };
        (srgb_encode(l) * max).round().clamp(0.0, max) as u16
    })
}
