//! `groupcal` command-line front end.

mod output;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use groupcal::calibration::FoldCalibrator;
use groupcal::resampling::{DEFAULT_CONFIDENCE, DEFAULT_REPLICATES};
use groupcal::{
    bootstrap_metric, cv_calibrate, filter_severity, generate, histogram_table, parse_eval_csv,
    subset_metric, summarize, summarize_with_bootstrap, write_eval_csv, BootstrapEstimate,
    BootstrapSettings, CalibrationScope, CostMatrix, ErrorKind, EvalSet, MetricName, MetricReport,
    Subset, SyntheticSpec, Transform,
};
use serde::Serialize;

use output::{sha256_hex, write_atomic, CliError};

#[derive(Parser)]
#[command(
    name = "groupcal",
    version,
    about = "Group-aware evaluation of classifier posteriors"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Score posteriors per group, optionally after cross-validated calibration.
    Evaluate(EvaluateArgs),
    /// Per-group, per-class histograms of log-odds or LLRs.
    Hist(HistArgs),
    /// Generate a synthetic dataset from a JSON scenario file.
    Synth(SynthArgs),
    /// Bootstrap interval for one metric on one subset.
    Bootstrap(BootstrapArgs),
}

#[derive(Args, Clone, Copy, Serialize)]
struct CostArgs {
    /// Cost of a false positive.
    #[arg(long, default_value_t = 1.0)]
    c_fp: f64,
    /// Cost of a false negative.
    #[arg(long, default_value_t = 3.0)]
    c_fn: f64,
}

impl CostArgs {
    fn matrix(self) -> Result<CostMatrix, CliError> {
        Ok(CostMatrix::new(self.c_fp, self.c_fn)?)
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum CalibrationMode {
    None,
    Global,
    GroupWise,
}

#[derive(Args, Serialize)]
struct EvaluateArgs {
    /// Scored samples in the CSV exchange format.
    #[arg(long)]
    input: PathBuf,
    #[command(flatten)]
    #[serde(flatten)]
    cost: CostArgs,
    #[arg(long, value_enum, default_value_t = CalibrationMode::None)]
    calibration: CalibrationMode,
    /// Speaker-disjoint folds for calibration.
    #[arg(long, default_value_t = 10)]
    folds: usize,
    /// Seed for fold assignment and bootstrap.
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Attach speaker-level bootstrap intervals to every cell.
    #[arg(long)]
    bootstrap: bool,
    #[arg(long, default_value_t = DEFAULT_REPLICATES)]
    replicates: usize,
    #[arg(long, default_value_t = DEFAULT_CONFIDENCE)]
    confidence: f64,
    /// Keep only disordered samples of at least this grade when scoring.
    #[arg(long)]
    min_g: Option<u8>,
    #[arg(long)]
    #[serde(skip)]
    out_json: Option<PathBuf>,
    /// Text table; printed to stdout when omitted.
    #[arg(long)]
    #[serde(skip)]
    out_text: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum TransformArg {
    LogOdds,
    Llr,
}

#[derive(Args)]
struct HistArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum, default_value_t = TransformArg::LogOdds)]
    transform: TransformArg,
    #[arg(long)]
    min_g: Option<u8>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SynthArgs {
    /// Scenario JSON.
    #[arg(long)]
    spec: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum MetricArg {
    Acc,
    Uar,
    Nter,
    Nber,
    Nec,
    Nxe,
}

impl From<MetricArg> for MetricName {
    fn from(m: MetricArg) -> Self {
        match m {
            MetricArg::Acc => MetricName::Acc,
            MetricArg::Uar => MetricName::Uar,
            MetricArg::Nter => MetricName::Nter,
            MetricArg::Nber => MetricName::Nber,
            MetricArg::Nec => MetricName::Nec,
            MetricArg::Nxe => MetricName::Nxe,
        }
    }
}

#[derive(Args)]
struct BootstrapArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum)]
    metric: MetricArg,
    /// A group name (YF, AF, OF, YM, AM, OM), `average` or `pooled`.
    #[arg(long, default_value = "pooled")]
    subset: Subset,
    #[command(flatten)]
    cost: CostArgs,
    #[arg(long, default_value_t = DEFAULT_REPLICATES)]
    replicates: usize,
    #[arg(long, default_value_t = DEFAULT_CONFIDENCE)]
    confidence: f64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// JSON result; printed to stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Serialize)]
struct InputInfo {
    path: String,
    sha256: String,
    rows: usize,
}

#[derive(Serialize)]
struct InvertedCalibrator {
    fold: usize,
    group: String,
    a: f64,
}

#[derive(Serialize)]
struct CalibrationInfo {
    scope: CalibrationScope,
    folds: usize,
    calibrators: Vec<FoldCalibrator>,
    inverted: Vec<InvertedCalibrator>,
}

#[derive(Serialize)]
struct EvaluateOutput<'a> {
    tool: &'static str,
    version: &'static str,
    input: InputInfo,
    config: &'a EvaluateArgs,
    calibration: Option<CalibrationInfo>,
    warnings: Vec<String>,
    report: MetricReport,
}

#[derive(Serialize)]
struct BootstrapOutput {
    tool: &'static str,
    version: &'static str,
    input: InputInfo,
    metric: String,
    subset: String,
    cost: CostMatrix,
    estimate: BootstrapEstimate,
}

fn read_input(path: &Path) -> Result<(EvalSet, InputInfo), CliError> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    let eval = parse_eval_csv(bytes.as_slice())?;
    let info = InputInfo {
        path: path.display().to_string(),
        sha256: sha256_hex(&bytes),
        rows: eval.len(),
    };
    Ok((eval, info))
}

fn to_json<T: Serialize>(value: &T) -> Result<String, CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(groupcal::Error::from)?;
    text.push('\n');
    Ok(text)
}

fn evaluate(args: &EvaluateArgs) -> Result<(), CliError> {
    let cost = args.cost.matrix()?;
    let (eval, input) = read_input(&args.input)?;
    let mut warnings = Vec::new();

    let scope = match args.calibration {
        CalibrationMode::None => None,
        CalibrationMode::Global => Some(CalibrationScope::Global),
        CalibrationMode::GroupWise => Some(CalibrationScope::GroupWise),
    };
    let (scored, calibration) = match scope {
        None => (eval, None),
        Some(scope) => {
            let cv = cv_calibrate(&eval, args.folds, scope, args.seed)?;
            let inverted: Vec<InvertedCalibrator> = cv
                .inverted()
                .map(|c| InvertedCalibrator {
                    fold: c.fold,
                    group: c.group.map_or_else(|| "all".to_string(), |g| g.to_string()),
                    a: c.calibrator.a,
                })
                .collect();
            for c in &inverted {
                warnings.push(format!(
                    "inverted calibrator: group {}, fold {}, a = {}",
                    c.group, c.fold, c.a
                ));
            }
            let info = CalibrationInfo {
                scope,
                folds: args.folds,
                calibrators: cv.calibrators,
                inverted,
            };
            (cv.eval, Some(info))
        }
    };

    let scored = match args.min_g {
        Some(g) => filter_severity(&scored, g),
        None => scored,
    };
    let report = if args.bootstrap {
        let settings = BootstrapSettings {
            replicates: args.replicates,
            confidence: args.confidence,
            seed: args.seed,
        };
        summarize_with_bootstrap(&scored, cost, &settings)?
    } else {
        summarize(&scored, cost)?
    };

    for w in &warnings {
        eprintln!("warning: {w}");
    }
    let text = report.to_text();
    if let Some(path) = &args.out_json {
        let out = EvaluateOutput {
            tool: "groupcal",
            version: groupcal::VERSION,
            input,
            config: args,
            calibration,
            warnings,
            report,
        };
        write_atomic(path, to_json(&out)?.as_bytes())?;
    }
    match &args.out_text {
        Some(path) => write_atomic(path, text.as_bytes())?,
        None => print!("{text}"),
    }
    Ok(())
}

fn hist(args: &HistArgs) -> Result<(), CliError> {
    let (eval, _) = read_input(&args.input)?;
    let transform = match args.transform {
        TransformArg::LogOdds => Transform::LogOdds,
        TransformArg::Llr => Transform::Llr,
    };
    let (table, warnings) = histogram_table(&eval, transform, args.min_g)?;
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    let mut buf = Vec::new();
    table.write_csv(&mut buf)?;
    write_atomic(&args.out, &buf)
}

fn synth(args: &SynthArgs) -> Result<(), CliError> {
    let text = fs::read_to_string(&args.spec).map_err(|e| CliError::io(&args.spec, e))?;
    let de = &mut serde_json::Deserializer::from_str(&text);
    let spec: SyntheticSpec = serde_path_to_error::deserialize(de)
        .map_err(|e| CliError::schema(format!("{}: {}", e.path(), e.inner())))?;
    let eval = generate(&spec)?;
    let mut buf = Vec::new();
    write_eval_csv(&eval, &mut buf)?;
    write_atomic(&args.out, &buf)
}

fn bootstrap(args: &BootstrapArgs) -> Result<(), CliError> {
    let cost = args.cost.matrix()?;
    let (eval, input) = read_input(&args.input)?;
    let metric = MetricName::from(args.metric);
    let settings = BootstrapSettings {
        replicates: args.replicates,
        confidence: args.confidence,
        seed: args.seed,
    };
    settings.validate()?;

    // Group cells resample within the group, matching the evaluate report.
    let (samples, within) = match args.subset {
        Subset::Group(g) => (eval.group(g), Subset::Pooled),
        other => (eval, other),
    };
    if subset_metric(&samples, metric, cost, within)?.is_none() {
        return Err(CliError::degenerate(format!(
            "{} is undefined on {}",
            metric.label(cost),
            args.subset
        )));
    }
    let estimate = bootstrap_metric(
        &samples,
        |s| subset_metric(s, metric, cost, within).ok().flatten(),
        &settings,
    )?;
    let out = BootstrapOutput {
        tool: "groupcal",
        version: groupcal::VERSION,
        input,
        metric: metric.label(cost),
        subset: args.subset.to_string(),
        cost,
        estimate,
    };
    let json = to_json(&out)?;
    match &args.out {
        Some(path) => write_atomic(path, json.as_bytes()),
        None => {
            print!("{json}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Evaluate(a) => evaluate(a),
        Command::Hist(a) => hist(a),
        Command::Synth(a) => synth(a),
        Command::Bootstrap(a) => bootstrap(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_line());
            ExitCode::from(match e.kind {
                ErrorKind::Schema => 2,
                ErrorKind::Degenerate => 3,
                ErrorKind::Io => 4,
            })
        }
    }
}
