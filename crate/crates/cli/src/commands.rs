use std::fs;
use std::path::Path;

use log::info;
use ncb_core::chart::{
    colorchecker_reference, filter_included, parse_include_list, read_measurements_file, ChartMeasurement,
    STANDARD_PATCH_COUNT,
};
use ncb_core::experiment::{build_correction, correct_chart, ComparisonConfig, Method};
use ncb_core::imaging::{correct_image, read_ppm, write_ppm};
use ncb_core::report::{render_json, render_table};
use ncb_core::{
    select_ground_truth, synthesize_chart, write_measurements, AdaptationKind, ChartError, EvalError, ImageError,
    TargetSelection, D65,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::exit;
use crate::{CompareArgs, CorrectArgs, SelectGtArgs, SynthArgs};

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        Self { code: exit::USAGE, message: message.into() }
    }

    fn io(path: &Path, err: std::io::Error) -> Self {
        Self { code: exit::IO, message: format!("{}: {err}", path.display()) }
    }
}

fn exit_code(err: &ncb_core::Error) -> u8 {
    use ncb_core::Error as E;
    match err.root() {
        E::Chart(ChartError::Io { .. }) => exit::IO,
        E::Chart(ChartError::InvalidTarget(_) | ChartError::InvalidGains(_) | ChartError::InvalidNoise(_)) => {
            exit::USAGE
        }
        E::Chart(_) | E::EmptyInput => exit::PARSE,
        E::Eval(EvalError::EmptyInput | EvalError::LengthMismatch { .. } | EvalError::InconsistentPatches { .. }) => {
            exit::PARSE
        }
        E::Eval(_) | E::Balance(_) | E::Color(_) => exit::NUMERIC,
        E::Raster(ImageError::Workers(_)) => exit::IO,
        E::Raster(_) | E::Image { .. } => exit::PARSE,
    }
}

impl<E: Into<ncb_core::Error>> From<E> for CliError {
    fn from(err: E) -> Self {
        let err = err.into();
        Self { code: exit_code(&err), message: err.to_string() }
    }
}

fn write_output(path: Option<&Path>, bytes: &[u8]) -> Result<(), CliError> {
    match path {
        Some(path) => fs::write(path, bytes).map_err(|e| CliError::io(path, e)),
        None => {
            use std::io::Write;
            std::io::stdout().write_all(bytes).map_err(|e| CliError::io(Path::new("<stdout>"), e))
        }
    }
}

/// Reads a measurement file and rescales every chart to white `Y = 1`.
fn load_charts(path: &Path) -> Result<Vec<ChartMeasurement>, CliError> {
    let charts = read_measurements_file(path)?;
    Ok(charts.iter().map(ChartMeasurement::normalized_to_white).collect::<Result<_, _>>()?)
}

fn pick_ground_truth(charts: &[ChartMeasurement]) -> Result<ChartMeasurement, CliError> {
    let id = select_ground_truth(charts, D65)?;
    info!("ground truth image: {id}");
    Ok(charts.iter().find(|c| c.image_id == id).cloned().expect("selected id comes from the list"))
}

fn load_reference(
    path: Option<&Path>,
    inputs: Option<&[ChartMeasurement]>,
    normalize: bool,
) -> Result<ChartMeasurement, CliError> {
    match (path, inputs) {
        (Some(path), _) => {
            let charts = if normalize { load_charts(path)? } else { read_measurements_file(path)? };
            if charts.is_empty() {
                return Err(ChartError::EmptyInput.into());
            }
            pick_ground_truth(&charts)
        }
        (None, Some(inputs)) if !inputs.is_empty() => pick_ground_truth(inputs),
        (None, Some(_)) => Err(ChartError::EmptyInput.into()),
        (None, None) => Err(CliError::usage("--reference is required for image input")),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Wb,
    Ncb,
    Cheng,
}

fn is_ppm(path: &Path) -> Result<bool, CliError> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    Ok(bytes.starts_with(b"P6"))
}

/// `wb`, `ncb` and `cheng`: correct every chart of a CSV, or one PPM image.
pub fn correct(family: Family, args: &CorrectArgs, expected_n: Option<usize>) -> Result<(), CliError> {
    let kind = AdaptationKind::from(args.model);
    let method = match family {
        Family::Wb => Method::WhiteBalance(kind),
        Family::Ncb => Method::NColorBalance(kind),
        Family::Cheng => Method::Cheng,
    };
    let targets = TargetSelection::parse(&args.targets, STANDARD_PATCH_COUNT)?;
    if let Some(n) = expected_n {
        if n != targets.len() {
            return Err(CliError::usage(format!("--n {n} does not match {} target(s)", targets.len())));
        }
    }

    if is_ppm(&args.input)? {
        let chart_path = args.chart.as_deref().ok_or_else(|| CliError::usage("--chart is required for image input"))?;
        // Image mode keeps the chart in the image's own XYZ scale.
        let chart = read_measurements_file(chart_path)?.into_iter().next().ok_or(ChartError::EmptyInput)?;
        let reference = load_reference(args.reference.as_deref(), None, false)?;
        let bytes = fs::read(&args.input).map_err(|e| CliError::io(&args.input, e))?;
        let image = read_ppm(&bytes)?;
        let correction = build_correction(method, &chart, &reference, &targets)?;
        let out = correct_image(&image, &correction);
        let path = args.output.as_deref().ok_or_else(|| CliError::usage("--output is required for image input"))?;
        return write_output(Some(path), &write_ppm(&out));
    }

    let inputs = load_charts(&args.input)?;
    if inputs.is_empty() {
        return Err(ChartError::EmptyInput.into());
    }
    let reference = load_reference(args.reference.as_deref(), Some(&inputs), true)?;
    let corrected = inputs
        .iter()
        .map(|input| Ok(correct_chart(input, &build_correction(method, input, &reference, &targets)?)))
        .collect::<Result<Vec<_>, CliError>>()?;
    write_output(args.output.as_deref(), write_measurements(&corrected).as_bytes())
}

pub fn compare(args: &CompareArgs) -> Result<(), CliError> {
    let targets = TargetSelection::parse(&args.targets, STANDARD_PATCH_COUNT)?;
    let mut inputs = load_charts(&args.input)?;
    if let Some(include) = &args.include {
        let list = fs::read_to_string(include).map_err(|e| CliError::io(include, e))?;
        inputs = filter_included(inputs, &parse_include_list(&list))?;
    }
    if inputs.is_empty() {
        return Err(ncb_core::Error::EmptyInput.into());
    }
    let reference = load_reference(args.reference.as_deref(), Some(&inputs), true)?;
    let config = ComparisonConfig { targets, eval_space: args.eval_space.into(), ..ComparisonConfig::default() };
    let comparison = ncb_core::compare(&inputs, &reference, &config)?;
    // Build both renderings before writing anything so errors leave no partial output.
    let table = render_table(&comparison);
    let json = render_json(&comparison);
    if let Some(path) = &args.output {
        write_output(Some(path), json.as_bytes())?;
    }
    write_output(None, table.as_bytes())
}

fn parse_gains(s: &str) -> Result<[f64; 3], CliError> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| CliError::usage(format!("--gains `{s}` is not three numbers")))?;
    <[f64; 3]>::try_from(parts).map_err(|_| CliError::usage(format!("--gains `{s}` needs exactly three values")))
}

pub fn synth(args: &SynthArgs) -> Result<(), CliError> {
    let reference = match &args.reference {
        Some(path) => load_reference(Some(path), None, true)?,
        None => colorchecker_reference(),
    };
    let fixed = args.gains.as_deref().map(parse_gains).transpose()?;
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let mut charts = Vec::with_capacity(args.count + 1);
    if !args.no_reference {
        charts.push(reference.clone());
    }
    for i in 0..args.count {
        // Log-uniform gains in [0.7, 1.4] on X and Z; Y stays fixed.
        let mut gain = || (rng.random_range(0.7f64.ln()..1.4f64.ln())).exp();
        let gains = fixed.unwrap_or_else(|| [gain(), 1.0, gain()]);
        let noise_seed = rng.random::<u64>();
        let mut chart = synthesize_chart(&reference, gains, args.sigma, noise_seed)?;
        chart.image_id = format!("synth-{:04}", i + 1);
        charts.push(chart);
    }
    write_output(Some(&args.output), write_measurements(&charts).as_bytes())
}

pub fn select_gt(args: &SelectGtArgs) -> Result<(), CliError> {
    let charts = read_measurements_file(&args.input)?;
    let id = select_ground_truth(&charts, D65)?;
    println!("{id}");
    Ok(())
}
