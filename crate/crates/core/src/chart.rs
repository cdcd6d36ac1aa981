//! Color chart measurements: CSV ingestion, ground-truth selection and
//! synthetic charts under simulated illuminants.
//!
//! The measurement CSV has one image per row:
//!
//! ```text
//! image_id,space,p1_x,p1_y,p1_z,...,p24_x,p24_y,p24_z
//! ```
//!
//! `space` is `xyz` or `linear-rgb`; linear RGB rows are converted to XYZ with
//! the sRGB primaries on load.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::balancing::chroma_distance;
use crate::color::{linear_rgb_to_xyz, srgb_to_xyz, BitDepth, XyzColor};

/// Patches on a standard 24-patch chart.
pub const STANDARD_PATCH_COUNT: usize = 24;
/// Patch numbers (1-based) of the standard chart's blue, green, red and white.
pub const BLUE_PATCH: usize = 13;
pub const GREEN_PATCH: usize = 14;
pub const RED_PATCH: usize = 15;
pub const WHITE_PATCH: usize = 19;
/// Targets used when none are given: blue, green, red, white.
pub const DEFAULT_TARGETS: [usize; 4] = [BLUE_PATCH, GREEN_PATCH, RED_PATCH, WHITE_PATCH];

#[derive(Debug, Error)]
pub enum ChartError {
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("image {image_id} (line {line}): expected {expected} patches, found {found}")]
    PatchCount { image_id: String, line: u64, expected: usize, found: usize },
    #[error("no chart measurements")]
    EmptyInput,
    #[error("image {image_id} has no patch {patch_id}")]
    MissingPatch { image_id: String, patch_id: usize },
    #[error("illuminant gains must be finite and positive, got {0:?}")]
    InvalidGains([f64; 3]),
    #[error("noise sigma must be finite and non-negative, got {0}")]
    InvalidNoise(f64),
    #[error("invalid target selection: {0}")]
    InvalidTarget(String),
    #[error("image id {0} not found in measurements")]
    UnknownImage(String),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

/// Native space of a measurement row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ColorSpaceTag {
    Xyz,
    LinearRgb,
}

impl ColorSpaceTag {
    pub fn as_str(self) -> &'static str {
        match self {
            ColorSpaceTag::Xyz => "xyz",
            ColorSpaceTag::LinearRgb => "linear-rgb",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "xyz" => Some(ColorSpaceTag::Xyz),
            "linear-rgb" => Some(ColorSpaceTag::LinearRgb),
            _ => None,
        }
    }
}

/// Patch means of one chart image, always held in XYZ.
#[derive(Debug, Clone, PartialEq)]
pub struct ChartMeasurement {
    pub image_id: String,
    pub patches: Vec<XyzColor>,
    /// Space the values were recorded in before conversion to XYZ.
    pub color_space_tag: ColorSpaceTag,
}

impl ChartMeasurement {
    pub fn new(image_id: impl Into<String>, patches: Vec<XyzColor>) -> Self {
        Self { image_id: image_id.into(), patches, color_space_tag: ColorSpaceTag::Xyz }
    }

    /// Patch by 1-based number.
    pub fn patch(&self, patch_id: usize) -> Result<XyzColor, ChartError> {
        patch_id
            .checked_sub(1)
            .and_then(|i| self.patches.get(i))
            .copied()
            .ok_or_else(|| ChartError::MissingPatch { image_id: self.image_id.clone(), patch_id })
    }

    pub fn white(&self) -> Result<XyzColor, ChartError> {
        self.patch(WHITE_PATCH)
    }

    /// Rescales every patch so that the white patch has `Y = 1`.
    pub fn normalized_to_white(&self) -> Result<ChartMeasurement, ChartError> {
        let white_y = self.white()?.y;
        if !(white_y > 0.0 && white_y.is_finite()) {
            return Err(ChartError::Parse {
                line: 0,
                message: format!("image {}: white patch has non-positive Y {white_y}", self.image_id),
            });
        }
        Ok(ChartMeasurement { patches: self.patches.iter().map(|p| p.scale(1.0 / white_y)).collect(), ..self.clone() })
    }

    /// Heuristic check that patch 19 is the brightest of the neutral ramp.
    fn check_neutral_ramp(&self) {
        if self.patches.len() != STANDARD_PATCH_COUNT {
            return;
        }
        let white = self.patches[WHITE_PATCH - 1].y;
        if self.patches[WHITE_PATCH..].iter().any(|p| p.y > white) {
            log::warn!("image {}: patch {WHITE_PATCH} is not the brightest neutral patch", self.image_id);
        }
    }
}

/// Ids of the patches used as correction targets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TargetSelection {
    patch_ids: Vec<usize>,
}

impl TargetSelection {
    pub fn new(patch_ids: Vec<usize>, patch_count: usize) -> Result<Self, ChartError> {
        if patch_ids.is_empty() {
            return Err(ChartError::InvalidTarget("no target patches".into()));
        }
        let mut seen = HashSet::new();
        for &id in &patch_ids {
            if id == 0 || id > patch_count {
                return Err(ChartError::InvalidTarget(format!("patch {id} outside 1..={patch_count}")));
            }
            if !seen.insert(id) {
                return Err(ChartError::InvalidTarget(format!("patch {id} listed twice")));
            }
        }
        Ok(Self { patch_ids })
    }

    /// Parses a comma-separated id list such as `13,14,15,19`.
    pub fn parse(list: &str, patch_count: usize) -> Result<Self, ChartError> {
        let ids = list
            .split(',')
            .map(|s| {
                let s = s.trim();
                s.parse::<usize>().map_err(|_| ChartError::InvalidTarget(format!("`{s}` is not a patch number")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(ids, patch_count)
    }

    pub fn standard() -> Self {
        Self { patch_ids: DEFAULT_TARGETS.to_vec() }
    }

    pub fn patch_ids(&self) -> &[usize] {
        &self.patch_ids
    }

    pub fn len(&self) -> usize {
        self.patch_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patch_ids.is_empty()
    }
}

fn expected_header(patch_count: usize) -> Vec<String> {
    let mut header = vec!["image_id".to_owned(), "space".to_owned()];
    for p in 1..=patch_count {
        for c in ["x", "y", "z"] {
            header.push(format!("p{p}_{c}"));
        }
    }
    header
}

fn parse_error(line: u64, message: impl Into<String>) -> ChartError {
    ChartError::Parse { line, message: message.into() }
}

/// Parses measurement CSV content.
///
/// The number of patches is taken from the header, which must list
/// `p1_x..pN_z` in order. Empty content yields an empty list.
pub fn parse_measurements(content: &str) -> Result<Vec<ChartMeasurement>, ChartError> {
    if content.trim().is_empty() {
        return Ok(Vec::new());
    }
    let mut reader =
        csv::ReaderBuilder::new().has_headers(true).flexible(true).trim(csv::Trim::All).from_reader(content.as_bytes());
    let header = reader.headers().map_err(|e| parse_error(1, e.to_string()))?.clone();
    let fields = header.len();
    if fields < 5 || (fields - 2) % 3 != 0 {
        return Err(parse_error(
            1,
            format!("header has {fields} columns; expected image_id,space and x,y,z per patch"),
        ));
    }
    let patch_count = (fields - 2) / 3;
    for (i, (got, want)) in header.iter().zip(expected_header(patch_count)).enumerate() {
        if got != want {
            return Err(parse_error(1, format!("header column {} is `{got}`, expected `{want}`", i + 1)));
        }
    }

    let mut out = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_error(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let image_id = record.get(0).unwrap_or_default().to_owned();
        if image_id.is_empty() {
            return Err(parse_error(line, "empty image_id"));
        }
        if record.len() != fields {
            return Err(ChartError::PatchCount {
                image_id,
                line,
                expected: patch_count,
                found: record.len().saturating_sub(2) / 3,
            });
        }
        let space_field = record.get(1).unwrap_or_default();
        let tag = ColorSpaceTag::parse(space_field)
            .ok_or_else(|| parse_error(line, format!("unknown space `{space_field}`, expected xyz or linear-rgb")))?;
        let values = record
            .iter()
            .skip(2)
            .enumerate()
            .map(|(i, s)| {
                s.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| parse_error(line, format!("column {}: `{s}` is not a finite number", i + 3)))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let patches = values
            .chunks_exact(3)
            .map(|v| match tag {
                ColorSpaceTag::Xyz => XyzColor::new(v[0], v[1], v[2]),
                ColorSpaceTag::LinearRgb => linear_rgb_to_xyz([v[0], v[1], v[2]]),
            })
            .collect();
        let measurement = ChartMeasurement { image_id, patches, color_space_tag: tag };
        measurement.check_neutral_ramp();
        out.push(measurement);
    }
    Ok(out)
}

/// Serializes charts as XYZ-tagged measurement CSV.
///
/// Values are written in shortest round-trip form, so parsing the output
/// reproduces the stored XYZ values bit for bit. All charts must have the
/// same patch count.
pub fn write_measurements(measurements: &[ChartMeasurement]) -> String {
    let patch_count = measurements.first().map_or(STANDARD_PATCH_COUNT, |m| m.patches.len());
    let mut out = expected_header(patch_count).join(",");
    out.push('\n');
    for m in measurements {
        debug_assert_eq!(m.patches.len(), patch_count);
        out.push_str(&m.image_id);
        out.push_str(",xyz");
        for p in &m.patches {
            let _ = write!(out, ",{},{},{}", p.x, p.y, p.z);
        }
        out.push('\n');
    }
    out
}

pub fn read_measurements_file(path: &Path) -> Result<Vec<ChartMeasurement>, ChartError> {
    let content =
        std::fs::read_to_string(path).map_err(|source| ChartError::Io { path: path.display().to_string(), source })?;
    parse_measurements(&content)
}

/// Parses an include list: image ids separated by whitespace, commas or
/// newlines. Lines starting with `#` are ignored.
pub fn parse_include_list(content: &str) -> Vec<String> {
    content
        .lines()
        .filter(|l| !l.trim_start().starts_with('#'))
        .flat_map(|l| l.split(|c: char| c == ',' || c.is_whitespace()))
        .filter(|s| !s.is_empty())
        .map(str::to_owned)
        .collect()
}

/// Keeps only the measurements named in `include`, in file order.
pub fn filter_included(
    measurements: Vec<ChartMeasurement>,
    include: &[String],
) -> Result<Vec<ChartMeasurement>, ChartError> {
    let known: HashSet<&str> = measurements.iter().map(|m| m.image_id.as_str()).collect();
    if let Some(missing) = include.iter().find(|id| !known.contains(id.as_str())) {
        return Err(ChartError::UnknownImage(missing.clone()));
    }
    let wanted: HashSet<&str> = include.iter().map(String::as_str).collect();
    Ok(measurements.into_iter().filter(|m| wanted.contains(m.image_id.as_str())).collect())
}

/// Returns the id of the image whose white patch is closest in chromaticity
/// to `d65_white`. Ties go to the lexicographically smallest id.
pub fn select_ground_truth(measurements: &[ChartMeasurement], d65_white: XyzColor) -> Result<String, ChartError> {
    let mut best: Option<(f64, &str)> = None;
    for m in measurements {
        let d = chroma_distance(m.white()?, d65_white);
        let better = match best {
            None => true,
            Some((bd, bid)) => d < bd || (d == bd && m.image_id.as_str() < bid),
        };
        if better {
            best = Some((d, m.image_id.as_str()));
        }
    }
    best.map(|(_, id)| id.to_owned()).ok_or(ChartError::EmptyInput)
}

/// Simulates `reference` under a diagonal illuminant change in XYZ, with
/// optional zero-mean Gaussian noise added to every component.
///
/// The same seed always produces the same chart. With unit gains and zero
/// sigma the result equals the reference.
pub fn synthesize_chart(
    reference: &ChartMeasurement,
    illuminant_gains: [f64; 3],
    noise_sigma: f64,
    seed: u64,
) -> Result<ChartMeasurement, ChartError> {
    if illuminant_gains.iter().any(|g| !(g.is_finite() && *g > 0.0)) {
        return Err(ChartError::InvalidGains(illuminant_gains));
    }
    if !(noise_sigma.is_finite() && noise_sigma >= 0.0) {
        return Err(ChartError::InvalidNoise(noise_sigma));
    }
    let [gx, gy, gz] = illuminant_gains;
    let mut patches: Vec<XyzColor> =
        reference.patches.iter().map(|p| XyzColor::new(p.x * gx, p.y * gy, p.z * gz)).collect();
    if noise_sigma > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, noise_sigma).expect("sigma validated above");
        for p in &mut patches {
            p.x += normal.sample(&mut rng);
            p.y += normal.sample(&mut rng);
            p.z += normal.sample(&mut rng);
        }
    }
    Ok(ChartMeasurement { image_id: reference.image_id.clone(), patches, color_space_tag: reference.color_space_tag })
}

/// Published 8-bit sRGB (D65) renderings of the 24 ColorChecker patches,
/// row by row from dark skin to black.
pub const COLORCHECKER_SRGB8: [[u16; 3]; STANDARD_PATCH_COUNT] = [
    [115, 82, 68],
    [194, 150, 130],
    [98, 122, 157],
    [87, 108, 67],
    [133, 128, 177],
    [103, 189, 170],
    [214, 126, 44],
    [80, 91, 166],
    [193, 90, 99],
    [94, 60, 108],
    [157, 188, 64],
    [224, 163, 46],
    [56, 61, 150],
    [70, 148, 73],
    [175, 54, 60],
    [231, 199, 31],
    [187, 86, 149],
    [8, 133, 161],
    [243, 243, 242],
    [200, 200, 200],
    [160, 160, 160],
    [122, 122, 121],
    [85, 85, 85],
    [52, 52, 52],
];

/// A standard chart under D65 built from [`COLORCHECKER_SRGB8`], normalized
/// so the white patch has `Y = 1`.
pub fn colorchecker_reference() -> ChartMeasurement {
    let patches = COLORCHECKER_SRGB8.iter().map(|rgb| srgb_to_xyz(*rgb, BitDepth::Eight)).collect();
    ChartMeasurement::new("reference-d65", patches).normalized_to_white().expect("reference white is bright")
}
