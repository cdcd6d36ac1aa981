//! Color constancy by n-color balancing.
//!
//! Given `n` colors observed under a scene illuminant and the colors they
//! should have, n-color balancing builds one chromatic-adaptation matrix per
//! pair and blends them per pixel with weights that grow as the pixel's
//! chromaticity approaches each target. Every target is reproduced exactly,
//! and with a single white target the method is plain white balancing.
//!
//! Modules:
//!
//! - [`color`]: XYZ values, 3x3 matrices, adaptation bases, sRGB codec.
//! - [`balancing`]: white balance, n-color balance, least-squares baseline.
//! - [`evaluation`]: reproduction angular error and per-patch statistics.
//! - [`chart`]: chart measurement CSV, ground-truth selection, synthesis.
//! - [`imaging`]: PPM images and per-pixel correction.
//! - [`experiment`] and [`report`]: method comparison and its output.

use thiserror::Error;

pub mod balancing;
pub mod chart;
pub mod color;
pub mod evaluation;
pub mod experiment;
pub mod imaging;
pub mod report;

pub use balancing::{
    apply_matrix, apply_ncb, build_cheng, build_ncb, build_wb, chroma_distance, compute_weights, BalanceError,
    ColorCorrector, ColorCorrespondence, NcbCorrector, WbCorrector, WeightVector,
};
pub use chart::{
    parse_measurements, select_ground_truth, synthesize_chart, write_measurements, ChartError, ChartMeasurement,
    ColorSpaceTag, TargetSelection,
};
pub use color::{
    mat3_invert, srgb_to_xyz, to_cone_response, xyz_to_srgb, AdaptationKind, AdaptationModel, BitDepth, ColorError,
    ConeResponse, Mat3, XyzColor, D65,
};
pub use evaluation::{
    aggregate, angular_error, evaluate_chart, EvalError, EvalSpace, PatchErrorRecord, PatchReport, PatchStats,
};
pub use experiment::{compare, Comparison, ComparisonConfig, Correction, Method};
pub use imaging::{correct_image, read_ppm, write_ppm, ImageError, RasterImage};

/// Any error raised by this crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Color(#[from] ColorError),
    #[error(transparent)]
    Balance(#[from] BalanceError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Chart(#[from] ChartError),
    #[error(transparent)]
    Raster(#[from] ImageError),
    #[error("no input charts")]
    EmptyInput,
    #[error("image {image_id}: {source}")]
    Image { image_id: String, source: Box<Error> },
}

impl Error {
    /// The innermost error, with per-image context stripped.
    pub fn root(&self) -> &Error {
        match self {
            Error::Image { source, .. } => source.root(),
            other => other,
        }
    }
}
