//! Command-line interface for the spheregp toolkit: seeded simulation,
//! maximum-likelihood fitting, kriging prediction, covariance diagnostics,
//! and cross-validated model comparison.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.
//! The `SPHEREGP_LOG` environment variable (quiet | info | debug, default
//! info) controls stderr chatter; results always go to the `--out` files.

pub mod error;
pub mod model;
pub mod output;
pub mod stations;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use error::CliError;
use model::ModelFile;
use serde::Serialize;
use spheregp::diagnostics::{
    check_axial_symmetry, check_latitudinal_reversibility, check_positive_definite,
    cross_validate, pole_continuity_probe, DiagnosticReport, PoleProbe, DEFAULT_POLE_EPSILONS,
};
use spheregp::fit::{fit_mle, FitConfig, FitResult};
use spheregp::geometry::{generate_grid, GridSpec, SpherePoint};
use spheregp::gp::{build_model, simulate, Dataset, JitterPolicy};
use spheregp::kernels::KernelSpec;
use std::ffi::OsString;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
enum LogLevel {
    Quiet = 0,
    Info = 1,
    Debug = 2,
}

fn log_level() -> LogLevel {
    match std::env::var("SPHEREGP_LOG").as_deref() {
        Ok("quiet") => LogLevel::Quiet,
        Ok("debug") => LogLevel::Debug,
        _ => LogLevel::Info,
    }
}

fn info(msg: impl AsRef<str>) {
    if log_level() >= LogLevel::Info {
        eprintln!("{}", msg.as_ref());
    }
}

fn debug(msg: impl AsRef<str>) {
    if log_level() >= LogLevel::Debug {
        eprintln!("{}", msg.as_ref());
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "spheregp",
    version,
    about = "Gaussian-process geostatistics on the sphere with axially symmetric product covariances"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Draw seeded field realizations of a kernel on a grid.
    Simulate(SimulateArgs),
    /// Fit kernel parameters to station data by maximum likelihood.
    Fit(FitArgs),
    /// Krige a fitted model at new targets.
    Predict(PredictArgs),
    /// Run covariance property checks on a kernel.
    Diagnose(DiagnoseArgs),
    /// Compare kernel templates by k-fold cross-validation.
    Crossval(CrossvalArgs),
}

#[derive(Args, Debug)]
struct SimulateArgs {
    /// Kernel spec: inline JSON or a path to a JSON file.
    #[arg(long)]
    kernel: String,
    /// Grid spec: regular:NLATxNLON | reduced:NLAT:SPACING | fibonacci:N.
    #[arg(long)]
    grid: String,
    #[arg(long)]
    seed: u64,
    /// Number of independent draws.
    #[arg(long)]
    draws: usize,
    /// Output CSV (lon_deg,lat_deg,draw_0,...).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct FitArgs {
    /// Kernel template: inline JSON or a path to a JSON file.
    #[arg(long = "kernel-template")]
    kernel_template: String,
    /// Station CSV (station_id,lat_deg,lon_deg,value[,level]).
    #[arg(long)]
    data: PathBuf,
    /// Fit configuration: inline JSON or a path; defaults when omitted.
    #[arg(long)]
    config: Option<String>,
    /// Output JSON holding the fit record and the reusable model.
    #[arg(long)]
    out: PathBuf,
    /// Permit stations sharing exact coordinates (requires a positive
    /// nugget in the kernel to build models).
    #[arg(long = "allow-nugget")]
    allow_nugget: bool,
    /// Subtract the sample mean before fitting; predictions add it back.
    #[arg(long)]
    center: bool,
}

#[derive(Args, Debug)]
struct PredictArgs {
    /// Model JSON written by `fit` (or a bare model object).
    #[arg(long)]
    model: PathBuf,
    /// The training station CSV; its content hash must match the model.
    #[arg(long)]
    data: PathBuf,
    /// Targets: a CSV with header lon_deg,lat_deg, or a grid spec
    /// (regular:NLATxNLON | reduced:NLAT:SPACING | fibonacci:N).
    #[arg(long)]
    targets: String,
    /// Output CSV (lon_deg,lat_deg,mean,variance).
    #[arg(long)]
    out: PathBuf,
    /// Permit stations sharing exact coordinates.
    #[arg(long = "allow-nugget")]
    allow_nugget: bool,
}

#[derive(Args, Debug)]
struct DiagnoseArgs {
    /// Kernel spec: inline JSON or a path to a JSON file.
    #[arg(long)]
    kernel: String,
    /// Comma-separated subset of positive_definite, axial_symmetry,
    /// latitudinal_reversibility, pole_continuity (default: all).
    #[arg(long)]
    checks: Option<String>,
    #[arg(long)]
    seed: u64,
    /// Output JSON report.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct CrossvalArgs {
    /// JSON array of kernel templates: inline or a path.
    #[arg(long)]
    templates: String,
    /// Station CSV.
    #[arg(long)]
    data: PathBuf,
    /// Number of folds (>= 2).
    #[arg(long)]
    folds: usize,
    #[arg(long)]
    seed: u64,
    /// Fit configuration: inline JSON or a path; defaults when omitted.
    #[arg(long)]
    config: Option<String>,
    /// Output JSON scorecard.
    #[arg(long)]
    out: PathBuf,
    /// Permit stations sharing exact coordinates.
    #[arg(long = "allow-nugget")]
    allow_nugget: bool,
}

/// Entry point shared by `main` and the test harness.
pub fn cli_main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    let result = match cli.command {
        Command::Simulate(args) => run_simulate(args),
        Command::Fit(args) => run_fit(args),
        Command::Predict(args) => run_predict(args),
        Command::Diagnose(args) => run_diagnose(args),
        Command::Crossval(args) => run_crossval(args),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Inline JSON (starts with '{' or '[') or a file path.
fn load_json_text(value: &str) -> Result<String, CliError> {
    let trimmed = value.trim_start();
    if trimmed.starts_with('{') || trimmed.starts_with('[') {
        Ok(value.to_string())
    } else {
        std::fs::read_to_string(value).map_err(|e| CliError::data(format!("{value}: {e}")))
    }
}

fn load_kernel(value: &str) -> Result<KernelSpec, CliError> {
    let text = load_json_text(value)?;
    let spec: KernelSpec =
        serde_json::from_str(&text).map_err(|e| CliError::data(format!("kernel spec: {e}")))?;
    Ok(spec)
}

fn load_kernel_list(value: &str) -> Result<Vec<KernelSpec>, CliError> {
    let text = load_json_text(value)?;
    let specs: Vec<KernelSpec> = serde_json::from_str(&text)
        .map_err(|e| CliError::data(format!("kernel template list: {e}")))?;
    if specs.is_empty() {
        return Err(CliError::data("kernel template list is empty"));
    }
    Ok(specs)
}

fn load_fit_config(value: Option<&str>) -> Result<FitConfig, CliError> {
    match value {
        None => Ok(FitConfig::default()),
        Some(v) => {
            let text = load_json_text(v)?;
            serde_json::from_str(&text)
                .map_err(|e| CliError::data(format!("fit config: {e}")))
        }
    }
}

/// Grid specs in flag form: `regular:NLATxNLON`, `reduced:NLAT:SPACING`
/// (spacing in radians of arc), `fibonacci:N`.
fn parse_grid(value: &str) -> Result<GridSpec, CliError> {
    let usage = "grid spec must be regular:NLATxNLON, reduced:NLAT:SPACING, or fibonacci:N";
    let invalid = || CliError::Usage(format!("{usage}; got {value:?}"));
    let (kind, rest) = value.split_once(':').ok_or_else(invalid)?;
    match kind {
        "regular" => {
            let (a, b) = rest.split_once('x').ok_or_else(invalid)?;
            Ok(GridSpec::RegularLonLat {
                n_lat: a.parse().map_err(|_| invalid())?,
                n_lon: b.parse().map_err(|_| invalid())?,
            })
        }
        "reduced" => {
            let (a, b) = rest.split_once(':').ok_or_else(invalid)?;
            Ok(GridSpec::ReducedGaussianLike {
                n_lat: a.parse().map_err(|_| invalid())?,
                target_spacing: b.parse().map_err(|_| invalid())?,
            })
        }
        "fibonacci" => Ok(GridSpec::Fibonacci {
            n_points: rest.parse().map_err(|_| invalid())?,
        }),
        _ => Err(invalid()),
    }
}

fn is_grid_spec(value: &str) -> bool {
    value.starts_with("regular:")
        || value.starts_with("reduced:")
        || value.starts_with("fibonacci:")
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::data(format!("serializing output: {e}")))?;
    std::fs::write(path, text + "\n")
        .map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
    Ok(())
}

fn run_simulate(args: SimulateArgs) -> Result<(), CliError> {
    let kernel = load_kernel(&args.kernel)?;
    let grid = parse_grid(&args.grid)?;
    let sites = generate_grid(&grid).map_err(|e| CliError::data(e.to_string()))?;
    info(format!(
        "simulating {} draws of {} at {} sites (seed {})",
        args.draws,
        kernel.family_name(),
        sites.len(),
        args.seed
    ));
    let draws = simulate(&kernel, &sites, args.seed, args.draws)?;
    output::write_draws(&args.out, &sites, &draws)?;
    info(format!("wrote {}", args.out.display()));
    Ok(())
}

#[derive(Serialize)]
struct FitOutput {
    fit: FitResult,
    model: ModelFile,
}

fn run_fit(args: FitArgs) -> Result<(), CliError> {
    let template = load_kernel(&args.kernel_template)?;
    let config = load_fit_config(args.config.as_deref())?;
    let station_data = stations::read_stations(&args.data, args.allow_nugget)?;
    let (dataset, mean_offset) = center_dataset(station_data.dataset, args.center)?;
    info(format!(
        "fitting {} to {} stations ({} restarts, centering {})",
        template.family_name(),
        dataset.len(),
        config.n_restarts,
        if args.center { "on" } else { "off" }
    ));
    let fit = fit_mle(&template, &dataset, &config)?;
    debug(format!(
        "log-likelihood {:.6}, {} evaluations, converged {}",
        fit.log_likelihood, fit.n_evals, fit.converged
    ));
    let model = ModelFile {
        kernel: fit.best_spec.clone(),
        data_path: args.data.display().to_string(),
        data_sha256: model::sha256_hex(&args.data)?,
        mean_offset,
    };
    write_json(&args.out, &FitOutput { fit, model })?;
    info(format!("wrote {}", args.out.display()));
    Ok(())
}

fn center_dataset(dataset: Dataset, center: bool) -> Result<(Dataset, f64), CliError> {
    if !center {
        return Ok((dataset, 0.0));
    }
    let mean = dataset.values().iter().sum::<f64>() / dataset.len() as f64;
    let values: Vec<f64> = dataset.values().iter().map(|v| v - mean).collect();
    let name = dataset.name().map(str::to_string);
    let mut centered = Dataset::new(dataset.sites().to_vec(), values)
        .map_err(|e| CliError::data(e.to_string()))?;
    if let Some(n) = name {
        centered = centered.with_name(n);
    }
    Ok((centered, mean))
}

fn run_predict(args: PredictArgs) -> Result<(), CliError> {
    let model_file = model::load_model(&args.model)?;
    model_file.verify_data(&args.data)?;
    let station_data = stations::read_stations(&args.data, args.allow_nugget)?;
    // Shift by the offset recorded at fit time (the hash check above
    // guarantees the data is the same file it was computed from).
    let dataset = if model_file.mean_offset != 0.0 {
        let values: Vec<f64> = station_data
            .dataset
            .values()
            .iter()
            .map(|v| v - model_file.mean_offset)
            .collect();
        Dataset::new(station_data.dataset.sites().to_vec(), values)
            .map_err(|e| CliError::data(e.to_string()))?
    } else {
        station_data.dataset
    };
    let targets: Vec<SpherePoint> = if is_grid_spec(&args.targets) {
        generate_grid(&parse_grid(&args.targets)?).map_err(|e| CliError::data(e.to_string()))?
    } else {
        output::read_targets(Path::new(&args.targets))?
    };
    info(format!(
        "predicting at {} targets from {} stations",
        targets.len(),
        dataset.len()
    ));
    let model = build_model(&model_file.kernel, &dataset, &JitterPolicy::default())?;
    let mut results = model.krige(&targets)?;
    for r in &mut results {
        r.mean += model_file.mean_offset;
    }
    output::write_predictions(&args.out, &targets, &results)?;
    info(format!("wrote {}", args.out.display()));
    Ok(())
}

#[derive(Serialize)]
struct DiagnoseOutput {
    kernel: KernelSpec,
    seed: u64,
    reports: Vec<DiagnosticReport>,
    pole_probe: Option<PoleProbe>,
}

fn run_diagnose(args: DiagnoseArgs) -> Result<(), CliError> {
    let kernel = load_kernel(&args.kernel)?;
    let all = [
        "positive_definite",
        "axial_symmetry",
        "latitudinal_reversibility",
        "pole_continuity",
    ];
    let selected: Vec<String> = match &args.checks {
        None => all.iter().map(|s| s.to_string()).collect(),
        Some(list) => {
            let picks: Vec<String> = list.split(',').map(|s| s.trim().to_string()).collect();
            for p in &picks {
                if !all.contains(&p.as_str()) {
                    return Err(CliError::Usage(format!(
                        "unknown check {p:?}; available: {}",
                        all.join(", ")
                    )));
                }
            }
            picks
        }
    };
    let mut reports = Vec::new();
    let mut pole_probe = None;
    for check in &selected {
        match check.as_str() {
            "positive_definite" => {
                reports.push(check_positive_definite(&kernel, 50, 60, args.seed)?);
            }
            "axial_symmetry" => {
                reports.push(check_axial_symmetry(&kernel, 1000, args.seed ^ 0xa71a)?);
            }
            "latitudinal_reversibility" => {
                reports.push(check_latitudinal_reversibility(
                    &kernel,
                    1000,
                    args.seed ^ 0x0e7e,
                )?);
            }
            "pole_continuity" => {
                let reference = SpherePoint::new(0.0, std::f64::consts::FRAC_PI_4)
                    .expect("valid reference");
                pole_probe = Some(pole_continuity_probe(
                    &kernel,
                    &DEFAULT_POLE_EPSILONS,
                    64,
                    &reference,
                )?);
            }
            _ => unreachable!("validated above"),
        }
    }
    for report in &reports {
        info(format!("{report}"));
    }
    if let Some(probe) = &pole_probe {
        info(format!("{probe}"));
    }
    write_json(
        &args.out,
        &DiagnoseOutput {
            kernel,
            seed: args.seed,
            reports,
            pole_probe,
        },
    )?;
    info(format!("wrote {}", args.out.display()));
    Ok(())
}

fn run_crossval(args: CrossvalArgs) -> Result<(), CliError> {
    if args.folds < 2 {
        return Err(CliError::Usage("--folds must be at least 2".into()));
    }
    let templates = load_kernel_list(&args.templates)?;
    let config = load_fit_config(args.config.as_deref())?;
    let station_data = stations::read_stations(&args.data, args.allow_nugget)?;
    info(format!(
        "cross-validating {} templates on {} stations ({} folds, seed {})",
        templates.len(),
        station_data.dataset.len(),
        args.folds,
        args.seed
    ));
    let card = cross_validate(
        &templates,
        &station_data.dataset,
        args.folds,
        &config,
        args.seed,
    )?;
    info(format!("{card}"));
    write_json(&args.out, &card)?;
    info(format!("wrote {}", args.out.display()));
    Ok(())
}
