//! `trisub` — sweep runner for the trimer photon-subtraction simulator.
//!
//! Exit codes: 0 success, 1 usage error, 2 domain error, 3 validation
//! failure.

mod config;
mod output;
mod pipeline;
mod validate;

use clap::{Parser, Subcommand};
use serde::Serialize;
use std::fmt::Write as _;
use std::process::ExitCode;

use config::{require_grid, resolve, CommonArgs, OutputFormat, RunConfig, ZMode};
use output::{emit, fmt_sig12, round_sig12};
use pipeline::{distribution_for, evolve_grid, observable_for, run_in_pool, Observable};

/// Error carrying its process exit code.
#[derive(Debug)]
pub struct CliError {
    code: u8,
    message: String,
}

impl CliError {
    fn usage(message: String) -> Self {
        Self { code: 1, message }
    }

    fn domain(message: String) -> Self {
        Self { code: 2, message }
    }

    fn from_core(err: trisub::Error) -> Self {
        Self::domain(err.to_string())
    }
}

#[derive(Parser)]
#[command(
    name = "trisub",
    version,
    about = "Photon subtraction from a squeezed two-mode source in a waveguide trimer"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Joint photon-number distributions, one matrix per (r, N), as JSON
    Jointdist {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Long-format (r, N, value) table for one observable
    Sweep {
        /// Which observable to tabulate
        #[arg(value_enum)]
        observable: Observable,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Run the internal consistency suite and report residuals
    Validate {
        #[command(flatten)]
        common: CommonArgs,
        /// Negative-control hook: offset the multinomial path's mixing angle
        /// so the oracle-equivalence check must fail
        #[arg(long = "perturb-theta", default_value_t = 0.0)]
        perturb_theta: f64,
    },
    /// Print the coupling length reaching a target center/outer ratio
    Zf {
        /// Coupling constant (1/length)
        #[arg(long, default_value_t = 1.0)]
        kappa: f64,
        /// Target center/outer intensity ratio
        #[arg(long, default_value_t = config::DEFAULT_RATIO)]
        ratio: f64,
        /// Output path; stdout when omitted
        #[arg(long)]
        out: Option<std::path::PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            use clap::error::ErrorKind;
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };

    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {}", err.message);
            ExitCode::from(err.code)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, CliError> {
    match cli.command {
        Command::Jointdist { common } => {
            let config = resolve(&common)?;
            require_grid(&config)?;
            if config.format == Some(OutputFormat::Csv) {
                return Err(CliError::usage(
                    "jointdist artifacts are JSON; --format csv is not supported here".into(),
                ));
            }
            cmd_jointdist(&config)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Sweep { observable, common } => {
            let config = resolve(&common)?;
            require_grid(&config)?;
            if observable == Observable::Xi && (config.eta_b < 1.0 || config.eta_outer < 1.0) {
                return Err(CliError::usage(
                    "xi is defined for ideal detection; it cannot be combined with eta < 1".into(),
                ));
            }
            cmd_sweep(&config, observable)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Validate {
            common,
            perturb_theta,
        } => {
            let config = resolve(&common)?;
            let report = validate::run(&config, perturb_theta);
            emit(config.out.as_deref(), &report.text)?;
            if report.all_passed() {
                Ok(ExitCode::SUCCESS)
            } else {
                Ok(ExitCode::from(3))
            }
        }
        Command::Zf { kappa, ratio, out } => {
            let z = trisub::trimer::solve_zf(kappa, ratio).map_err(CliError::from_core)?;
            emit(out.as_deref(), &format!("{}\n", fmt_sig12(z)))?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

#[derive(Serialize)]
struct ArtifactConfig {
    kappa: f64,
    z: f64,
    theta: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    ratio_target: Option<f64>,
    eta_b: f64,
    eta_outer: f64,
    tail_tol: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    lmax_override: Option<u32>,
    r_values: Vec<f64>,
    n_values: Vec<u32>,
}

impl ArtifactConfig {
    fn of(config: &RunConfig) -> Self {
        Self {
            kappa: round_sig12(config.kappa),
            z: round_sig12(config.z),
            theta: round_sig12(config.theta),
            ratio_target: match config.z_mode {
                ZMode::RatioTarget(t) => Some(round_sig12(t)),
                ZMode::Explicit => None,
            },
            eta_b: round_sig12(config.eta_b),
            eta_outer: round_sig12(config.eta_outer),
            tail_tol: round_sig12(config.tail_tol),
            lmax_override: config.l_max_override,
            r_values: config.r_values.iter().map(|&r| round_sig12(r)).collect(),
            n_values: config.n_values.clone(),
        }
    }
}

#[derive(Serialize)]
struct PointParams {
    r: f64,
    subtracted: u32,
    eta_b: f64,
    eta_a: f64,
    eta_c: f64,
    theta: f64,
    lmax: u32,
}

#[derive(Serialize)]
struct DistributionEntry {
    params: PointParams,
    #[serde(skip_serializing_if = "Option::is_none")]
    success_probability: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    matrix: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

#[derive(Serialize)]
struct DistributionArtifact {
    artifact: &'static str,
    generator: String,
    config: ArtifactConfig,
    results: Vec<DistributionEntry>,
}

fn generator_tag() -> String {
    format!("trisub {}", env!("CARGO_PKG_VERSION"))
}

fn cmd_jointdist(config: &RunConfig) -> Result<(), CliError> {
    let evolved = evolve_grid(config)?;
    let results = run_in_pool(config.jobs, || {
        use rayon::prelude::*;
        evolved
            .par_iter()
            .map(|point| {
                config
                    .n_values
                    .iter()
                    .map(|&n| {
                        let params = PointParams {
                            r: round_sig12(point.r),
                            subtracted: n,
                            eta_b: round_sig12(config.eta_b),
                            eta_a: round_sig12(config.eta_outer),
                            eta_c: round_sig12(config.eta_outer),
                            theta: round_sig12(config.theta),
                            lmax: point.l_max,
                        };
                        match distribution_for(config, point, n) {
                            Ok(dist) => {
                                let extent = dist.reported_extent();
                                let matrix = (0..extent)
                                    .map(|m| {
                                        (0..extent)
                                            .map(|k| round_sig12(dist.prob(m, k)))
                                            .collect()
                                    })
                                    .collect();
                                DistributionEntry {
                                    params,
                                    success_probability: Some(round_sig12(
                                        dist.success_probability(),
                                    )),
                                    matrix: Some(matrix),
                                    error: None,
                                }
                            }
                            Err(err) => DistributionEntry {
                                params,
                                success_probability: None,
                                matrix: None,
                                error: Some(err.to_string()),
                            },
                        }
                    })
                    .collect::<Vec<_>>()
            })
            .collect::<Vec<_>>()
    });

    let artifact = DistributionArtifact {
        artifact: "jointdist",
        generator: generator_tag(),
        config: ArtifactConfig::of(config),
        results: results.into_iter().flatten().collect(),
    };
    let mut body = serde_json::to_string_pretty(&artifact)
        .map_err(|e| CliError::domain(format!("serialization failed: {e}")))?;
    body.push('\n');
    emit(config.out.as_deref(), &body)
}

fn cmd_sweep(config: &RunConfig, observable: Observable) -> Result<(), CliError> {
    let evolved = evolve_grid(config)?;
    let rows = run_in_pool(config.jobs, || {
        use rayon::prelude::*;
        evolved
            .par_iter()
            .map(|point| {
                config
                    .n_values
                    .iter()
                    .map(|&n| {
                        let value = observable_for(config, point, n, observable);
                        (point.r, n, point.l_max, value.map_err(|e| e.to_string()))
                    })
                    .collect::<Vec<_>>()
            })
            .collect::<Vec<_>>()
    });
    let rows: Vec<_> = rows.into_iter().flatten().collect();

    let body = match config.format.unwrap_or(OutputFormat::Csv) {
        OutputFormat::Csv => sweep_csv(config, observable, &rows),
        OutputFormat::Json => sweep_json(config, observable, &rows)?,
    };
    emit(config.out.as_deref(), &body)
}

type SweepRow = (f64, u32, u32, Result<f64, String>);

fn sweep_csv(config: &RunConfig, observable: Observable, rows: &[SweepRow]) -> String {
    let mut text = String::new();
    let _ = writeln!(text, "# trisub sweep ({})", generator_tag());
    let _ = writeln!(text, "# observable = {}", observable.name());
    let _ = writeln!(text, "# kappa = {}", fmt_sig12(config.kappa));
    match config.z_mode {
        ZMode::RatioTarget(t) => {
            let _ = writeln!(text, "# ratio_target = {}", fmt_sig12(t));
        }
        ZMode::Explicit => {
            let _ = writeln!(text, "# z_mode = explicit");
        }
    }
    let _ = writeln!(text, "# z = {}", fmt_sig12(config.z));
    let _ = writeln!(text, "# theta = {}", fmt_sig12(config.theta));
    let _ = writeln!(text, "# eta_b = {}", fmt_sig12(config.eta_b));
    let _ = writeln!(text, "# eta_outer = {}", fmt_sig12(config.eta_outer));
    let _ = writeln!(text, "# tail_tol = {}", fmt_sig12(config.tail_tol));
    let _ = writeln!(
        text,
        "# lmax = {}",
        match config.l_max_override {
            Some(v) => format!("{v} (override)"),
            None => format!(
                "auto: {}",
                config
                    .r_values
                    .iter()
                    .map(|&r| format!("{}->{}", fmt_sig12(r), config.l_max_for(r)))
                    .collect::<Vec<_>>()
                    .join(", ")
            ),
        }
    );
    let _ = writeln!(text, "r,N,eta_b,eta_outer,theta,observable,value");
    for (r, n, _, value) in rows {
        let rendered = match value {
            Ok(v) => fmt_sig12(*v),
            // herald-impossible points are reported, not fatal
            Err(_) => "nan".to_string(),
        };
        let _ = writeln!(
            text,
            "{},{},{},{},{},{},{}",
            fmt_sig12(*r),
            n,
            fmt_sig12(config.eta_b),
            fmt_sig12(config.eta_outer),
            fmt_sig12(config.theta),
            observable.name(),
            rendered
        );
    }
    text
}

#[derive(Serialize)]
struct SweepEntry {
    r: f64,
    #[serde(rename = "N")]
    n: u32,
    lmax: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

#[derive(Serialize)]
struct SweepArtifact {
    artifact: &'static str,
    generator: String,
    observable: &'static str,
    config: ArtifactConfig,
    rows: Vec<SweepEntry>,
}

fn sweep_json(
    config: &RunConfig,
    observable: Observable,
    rows: &[SweepRow],
) -> Result<String, CliError> {
    let artifact = SweepArtifact {
        artifact: "sweep",
        generator: generator_tag(),
        observable: observable.name(),
        config: ArtifactConfig::of(config),
        rows: rows
            .iter()
            .map(|(r, n, lmax, value)| SweepEntry {
                r: round_sig12(*r),
                n: *n,
                lmax: *lmax,
                value: value.as_ref().ok().map(|v| round_sig12(*v)),
                error: value.as_ref().err().cloned(),
            })
            .collect(),
    };
    let mut body = serde_json::to_string_pretty(&artifact)
        .map_err(|e| CliError::domain(format!("serialization failed: {e}")))?;
    body.push('\n');
    Ok(body)
}
