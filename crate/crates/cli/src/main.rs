use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use outliergram::render::{self, PlotSpec};
use outliergram::report;
use outliergram::sample::{load_csv, CsvOptions};
use outliergram::simulation::{self, Method, Model, ModelSpec};
use outliergram::{run_outliergram, CalibrationConfig, Error, OutliergramOptions};

/// Environment variable capping the worker thread count.
const THREADS_VAR: &str = "OUTLIERGRAM_THREADS";

#[derive(Parser)]
#[command(name = "outliergram", version, about = "Shape outlier detection for functional data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Detect outliers in a CSV of curves (one curve per row).
    Detect(DetectArgs),
    /// Replicate a contaminated simulation model and report detection rates.
    Simulate(SimulateArgs),
}

#[derive(clap::Args)]
struct DetectArgs {
    /// CSV file; an optional first row starting with `t` holds the grid.
    #[arg(long)]
    input: PathBuf,
    /// Rows carry no leading label column.
    #[arg(long)]
    no_labels: bool,
    /// Calibrate the boundary factor on simulated clean data.
    #[arg(long)]
    adjusted: bool,
    /// Boxplot-rule factor for the standard boundary.
    #[arg(long, default_value_t = 1.5)]
    factor: f64,
    /// Seed for the adjusted calibration.
    #[arg(long)]
    seed: Option<u64>,
    /// Null datasets drawn during calibration.
    #[arg(long, default_value_t = 200)]
    null_datasets: usize,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Directory for the SVG figures.
    #[arg(long)]
    svg_dir: Option<PathBuf>,
    /// Also run the functional boxplot for magnitude outliers.
    #[arg(long)]
    with_fbplot: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Og,
    OgAdj,
    Fbplot,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Og => Method::Outliergram,
            MethodArg::OgAdj => Method::AdjustedOutliergram,
            MethodArg::Fbplot => Method::Fbplot,
        }
    }
}

#[derive(clap::Args)]
struct SimulateArgs {
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=3))]
    model: u8,
    #[arg(long, default_value_t = 100)]
    n: usize,
    /// Contamination rate.
    #[arg(long, default_value_t = 0.1)]
    c: f64,
    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(1..))]
    runs: u64,
    #[arg(long, value_enum, default_value = "og")]
    method: MethodArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Grid points per curve.
    #[arg(long, default_value_t = 50)]
    p: usize,
    /// Null datasets per calibration (og-adj only).
    #[arg(long, default_value_t = 200)]
    null_datasets: usize,
    /// Print a JSON object instead of a table row.
    #[arg(long)]
    json: bool,
}

/// Failures split by exit code: bad input exits with 2, anything else with 1.
enum Failure {
    Input(String),
    Other(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Io { .. } => Failure::Other(e.to_string()),
            _ => Failure::Input(e.to_string()),
        }
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), Failure> {
    fs::write(path, contents).map_err(|e| Failure::Other(format!("cannot write {}: {e}", path.display())))
}

fn detect(args: DetectArgs) -> Result<(), Failure> {
    if !(args.factor.is_finite() && args.factor >= 0.0) {
        return Err(Failure::Input(format!("factor must be a non-negative number, got {}", args.factor)));
    }
    let sample = load_csv(&args.input, &CsvOptions { has_labels: !args.no_labels }).map_err(|e| match e {
        Error::Io { .. } => Failure::Input(e.to_string()),
        other => other.into(),
    })?;

    let mut options = if args.adjusted {
        OutliergramOptions::adjusted(args.seed.unwrap_or(0))
    } else {
        OutliergramOptions::default()
    };
    options.factor = args.factor;
    options.with_fbplot = args.with_fbplot;
    options.calibration.n_null_datasets = args.null_datasets;

    let result = run_outliergram(&sample, &options)?;
    let seed = if args.adjusted { Some(options.calibration.seed) } else { args.seed };
    let json = report::to_json(&sample, &result, seed);

    match &args.report {
        Some(path) => {
            write_file(path, &json)?;
            let indices: Vec<String> = result.shape_outlier_indices().iter().map(|i| (i + 1).to_string()).collect();
            println!(
                "{} curves, threshold {:.6}, shape outliers (1-based): [{}]",
                sample.n(),
                result.threshold(),
                indices.join(", ")
            );
        }
        None => print!("{json}"),
    }

    if let Some(dir) = &args.svg_dir {
        fs::create_dir_all(dir).map_err(|e| Failure::Other(format!("cannot create {}: {e}", dir.display())))?;
        let spec = PlotSpec::default();
        write_file(
            &dir.join("outliergram.svg"),
            &render::render_outliergram(&result, Some(&sample), &spec)?,
        )?;
        write_file(
            &dir.join("curves.svg"),
            &render::render_curves(&sample, &result.shape_outlier_indices(), &spec),
        )?;
        if let Some(fb) = &result.fbplot {
            write_file(&dir.join("fbplot.svg"), &render::render_fbplot(&sample, fb, &spec))?;
        }
    }
    Ok(())
}

fn simulate(args: SimulateArgs) -> Result<(), Failure> {
    let mut spec = ModelSpec::new(Model::from_id(args.model)?, args.n, args.c, args.seed);
    spec.p = args.p;
    let method = Method::from(args.method);
    let calibration = CalibrationConfig {
        n_null_datasets: args.null_datasets,
        ..CalibrationConfig::default()
    };
    let started = Instant::now();
    let result = simulation::evaluate_with(method, &spec, args.runs as usize, &calibration)?;
    let elapsed = started.elapsed().as_secs_f64();

    if args.json {
        let text = serde_json::to_string_pretty(&result).expect("result serializes");
        println!("{text}");
        return Ok(());
    }
    let pc = match (result.pc_mean, result.pc_sd) {
        (Some(m), Some(s)) => format!("{m:.3} ({s:.3})"),
        _ => "n/a".to_owned(),
    };
    println!("model  n    c     runs  method  pc_mean (sd)    pf_mean (sd)    wall");
    println!(
        "{:<6} {:<4} {:<5} {:<5} {:<7} {:<15} {:<15} {:.2}s",
        args.model,
        args.n,
        args.c,
        args.runs,
        match args.method {
            MethodArg::Og => "og",
            MethodArg::OgAdj => "og-adj",
            MethodArg::Fbplot => "fbplot",
        },
        pc,
        format!("{:.3} ({:.3})", result.pf_mean, result.pf_sd),
        elapsed
    );
    Ok(())
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(value) = std::env::var(THREADS_VAR) else {
        return Ok(());
    };
    let threads: usize = value
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| Failure::Input(format!("{THREADS_VAR} must be a positive integer, got {value:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Failure::Other(e.to_string()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = configure_threads().and_then(|()| match cli.command {
        Command::Detect(args) => detect(args),
        Command::Simulate(args) => simulate(args),
    });
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Other(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}
