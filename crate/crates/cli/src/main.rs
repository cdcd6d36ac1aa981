//! `ncb`: command-line front end for n-color balancing.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ncb_core::{AdaptationKind, EvalSpace};

mod commands;

use commands::CliError;

/// Exit codes.
pub mod exit {
    pub const SUCCESS: u8 = 0;
    pub const USAGE: u8 = 2;
    pub const PARSE: u8 = 3;
    pub const NUMERIC: u8 = 4;
    pub const IO: u8 = 5;
}

#[derive(Parser, Debug)]
#[command(name = "ncb", version, about = "White balance and n-color balance for color constancy")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// White-balance charts or an image from the white patch.
    Wb(CorrectArgs),
    /// n-color balance charts or an image over the target patches.
    Ncb(NcbArgs),
    /// Least-squares single-matrix correction over the target patches.
    Cheng(CorrectArgs),
    /// Compare Input, WB-XYZ, WB-Bradford, NCB-XYZ, NCB-Bradford and Cheng.
    Compare(CompareArgs),
    /// Generate a synthetic measurement file under random illuminants.
    Synth(SynthArgs),
    /// Print the id of the image whose white is closest to D65.
    SelectGt(SelectGtArgs),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum ModelArg {
    Xyz,
    Vonkries,
    Bradford,
}

impl From<ModelArg> for AdaptationKind {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::Xyz => AdaptationKind::XyzScaling,
            ModelArg::Vonkries => AdaptationKind::VonKries,
            ModelArg::Bradford => AdaptationKind::Bradford,
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum EvalSpaceArg {
    Xyz,
    LinearRgb,
}

impl From<EvalSpaceArg> for EvalSpace {
    fn from(s: EvalSpaceArg) -> Self {
        match s {
            EvalSpaceArg::Xyz => EvalSpace::Xyz,
            EvalSpaceArg::LinearRgb => EvalSpace::LinearRgb,
        }
    }
}

#[derive(Args, Debug)]
struct CorrectArgs {
    /// Measurement CSV or binary PPM to correct.
    #[arg(long)]
    input: PathBuf,
    /// Reference chart CSV; with several rows the one closest to D65 is used.
    /// Defaults to the ground-truth image of a CSV input.
    #[arg(long)]
    reference: Option<PathBuf>,
    /// Chart measured in a PPM input (first row is used). Required for images.
    #[arg(long)]
    chart: Option<PathBuf>,
    /// Output path; charts go to stdout when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "bradford")]
    model: ModelArg,
    /// Comma-separated target patch ids.
    #[arg(long, default_value = "13,14,15,19")]
    targets: String,
}

#[derive(Args, Debug)]
struct NcbArgs {
    #[command(flatten)]
    common: CorrectArgs,
    /// Expected number of targets; must match `--targets`.
    #[arg(long)]
    n: Option<usize>,
}

#[derive(Args, Debug)]
struct CompareArgs {
    /// Measurement CSV of the images to correct.
    #[arg(long)]
    input: PathBuf,
    /// Reference chart CSV; defaults to the ground-truth image of the input.
    #[arg(long)]
    reference: Option<PathBuf>,
    #[arg(long, default_value = "13,14,15,19")]
    targets: String,
    #[arg(long, value_enum, default_value = "xyz")]
    eval_space: EvalSpaceArg,
    /// File listing the image ids to evaluate.
    #[arg(long)]
    include: Option<PathBuf>,
    /// Write the machine-readable report here.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SynthArgs {
    #[arg(long)]
    output: PathBuf,
    /// Reference chart CSV; defaults to the built-in D65 chart.
    #[arg(long)]
    reference: Option<PathBuf>,
    #[arg(long, default_value_t = 20)]
    count: usize,
    /// Standard deviation of additive XYZ noise.
    #[arg(long, default_value_t = 0.0)]
    sigma: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Fixed illuminant gains `x,y,z` instead of random ones.
    #[arg(long)]
    gains: Option<String>,
    /// Do not write the reference chart as the first row.
    #[arg(long)]
    no_reference: bool,
}

#[derive(Args, Debug)]
struct SelectGtArgs {
    #[arg(long)]
    input: PathBuf,
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Wb(args) => commands::correct(commands::Family::Wb, &args, None),
        Command::Ncb(args) => commands::correct(commands::Family::Ncb, &args.common, args.n),
        Command::Cheng(args) => commands::correct(commands::Family::Cheng, &args, None),
        Command::Compare(args) => commands::compare(&args),
        Command::Synth(args) => commands::synth(&args),
        Command::SelectGt(args) => commands::select_gt(&args),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { exit::USAGE } else { exit::SUCCESS });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::from(exit::SUCCESS),
        Err(e) => {
            eprintln!("ncb: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
