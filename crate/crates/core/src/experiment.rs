//! Method comparison over a batch of charts.
//!
//! Every input chart is corrected with each method, using the input's own
//! patches as targets and the reference chart's patches at the same ids as
//! ground truths, then scored patch by patch against the reference.

use std::fmt;

use rayon::prelude::*;
use serde::Serialize;

use crate::balancing::{
    build_cheng, build_ncb, build_wb, ColorCorrector, ColorCorrespondence, NcbCorrector, WbCorrector,
};
use crate::chart::{ChartMeasurement, TargetSelection, WHITE_PATCH};
use crate::color::{AdaptationKind, AdaptationModel, Mat3, XyzColor};
use crate::evaluation::{aggregate, evaluate_chart_in, EvalSpace, PatchErrorRecord, PatchReport};
use crate::Error;

/// A correction method as compared in the report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    /// Uncorrected input.
    Input,
    /// White balance from the white patch.
    WhiteBalance(AdaptationKind),
    /// n-color balance over the selected targets.
    NColorBalance(AdaptationKind),
    /// Least-squares single matrix over the selected targets.
    Cheng,
}

impl Method {
    /// Input plus the five corrections of the standard comparison.
    pub const STANDARD: [Method; 6] = [
        Method::Input,
        Method::WhiteBalance(AdaptationKind::XyzScaling),
        Method::WhiteBalance(AdaptationKind::Bradford),
        Method::NColorBalance(AdaptationKind::XyzScaling),
        Method::NColorBalance(AdaptationKind::Bradford),
        Method::Cheng,
    ];

    pub fn name(&self) -> String {
        match self {
            Method::Input => "Input".into(),
            Method::WhiteBalance(kind) => format!("WB-{kind}"),
            Method::NColorBalance(kind) => format!("NCB-{kind}"),
            Method::Cheng => "Cheng".into(),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

/// A built corrector of any family.
#[derive(Debug, Clone, PartialEq)]
pub enum Correction {
    Identity,
    WhiteBalance(WbCorrector),
    NColorBalance(NcbCorrector),
    Matrix(Mat3),
}

impl ColorCorrector for Correction {
    fn correct(&self, p: XyzColor) -> XyzColor {
        match self {
            Correction::Identity => p,
            Correction::WhiteBalance(wb) => wb.correct(p),
            Correction::NColorBalance(ncb) => ncb.correct(p),
            Correction::Matrix(m) => m.correct(p),
        }
    }
}

/// Pairs `input`'s patches at `targets` with `reference`'s patches.
pub fn correspondences(
    input: &ChartMeasurement,
    reference: &ChartMeasurement,
    targets: &TargetSelection,
) -> Result<Vec<ColorCorrespondence>, Error> {
    targets.patch_ids().iter().map(|&id| Ok(ColorCorrespondence::new(input.patch(id)?, reference.patch(id)?))).collect()
}

fn in_image(image_id: &str, err: impl Into<Error>) -> Error {
    Error::Image { image_id: image_id.to_owned(), source: Box::new(err.into()) }
}

/// Builds the corrector `method` derives from `input` and `reference`.
pub fn build_correction(
    method: Method,
    input: &ChartMeasurement,
    reference: &ChartMeasurement,
    targets: &TargetSelection,
) -> Result<Correction, Error> {
    let id = input.image_id.as_str();
    Ok(match method {
        Method::Input => Correction::Identity,
        Method::WhiteBalance(kind) => {
            let source = input.patch(WHITE_PATCH).map_err(|e| in_image(id, e))?;
            let dest = reference.patch(WHITE_PATCH).map_err(|e| in_image(id, e))?;
            Correction::WhiteBalance(build_wb(&AdaptationModel::new(kind), source, dest).map_err(|e| in_image(id, e))?)
        }
        Method::NColorBalance(kind) => {
            let corr = correspondences(input, reference, targets).map_err(|e| in_image(id, e))?;
            Correction::NColorBalance(build_ncb(&AdaptationModel::new(kind), &corr).map_err(|e| in_image(id, e))?)
        }
        Method::Cheng => {
            let corr = correspondences(input, reference, targets).map_err(|e| in_image(id, e))?;
            Correction::Matrix(build_cheng(&corr).map_err(|e| in_image(id, e))?)
        }
    })
}

/// Corrects every patch of a chart.
pub fn correct_chart<C: ColorCorrector + ?Sized>(chart: &ChartMeasurement, corrector: &C) -> ChartMeasurement {
    ChartMeasurement { patches: chart.patches.iter().map(|p| corrector.correct(*p)).collect(), ..chart.clone() }
}

/// Settings of one comparison run.
#[derive(Debug, Clone)]
pub struct ComparisonConfig {
    pub targets: TargetSelection,
    pub eval_space: EvalSpace,
    pub methods: Vec<Method>,
}

impl Default for ComparisonConfig {
    fn default() -> Self {
        Self { targets: TargetSelection::standard(), eval_space: EvalSpace::Xyz, methods: Method::STANDARD.to_vec() }
    }
}

/// Result of [`compare`]: one report per method, in configuration order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub reference_id: String,
    pub eval_space: EvalSpace,
    pub targets: Vec<usize>,
    pub image_ids: Vec<String>,
    pub reports: Vec<PatchReport>,
}

impl Comparison {
    pub fn report(&self, method_name: &str) -> Option<&PatchReport> {
        self.reports.iter().find(|r| r.method_name == method_name)
    }
}

/// Per-image patch errors of one method.
pub fn evaluate_method(
    method: Method,
    input: &ChartMeasurement,
    reference: &ChartMeasurement,
    targets: &TargetSelection,
    eval_space: EvalSpace,
) -> Result<Vec<PatchErrorRecord>, Error> {
    let correction = build_correction(method, input, reference, targets)?;
    let corrected = correct_chart(input, &correction);
    evaluate_chart_in(eval_space, &corrected.patches, &reference.patches).map_err(|e| in_image(&input.image_id, e))
}

/// Runs every configured method over `inputs` against `reference`.
///
/// Images are evaluated in parallel; results are merged in input order, so
/// the output does not depend on scheduling.
pub fn compare(
    inputs: &[ChartMeasurement],
    reference: &ChartMeasurement,
    config: &ComparisonConfig,
) -> Result<Comparison, Error> {
    if inputs.is_empty() {
        return Err(Error::EmptyInput);
    }
    let reports = config
        .methods
        .iter()
        .map(|&method| {
            let per_image = inputs
                .par_iter()
                .map(|input| evaluate_method(method, input, reference, &config.targets, config.eval_space))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(aggregate(&per_image, &method.name())?)
        })
        .collect::<Result<Vec<_>, Error>>()?;
    Ok(Comparison {
        reference_id: reference.image_id.clone(),
        eval_space: config.eval_space,
        targets: config.targets.patch_ids().to_vec(),
        image_ids: inputs.iter().map(|m| m.image_id.clone()).collect(),
        reports,
    })
}
