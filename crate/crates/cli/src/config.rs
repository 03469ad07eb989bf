//! Run configuration: flag/file merging, validation, and derived quantities.
//!
//! A config file is a flat `key = value` list whose keys mirror the long flag
//! names; values given on the command line win over file values.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use trisub::evolve::default_l_max;
use trisub::trimer::solve_zf;

use crate::CliError;

pub const DEFAULT_RATIO: f64 = 1.0 / 9.0;
pub const DEFAULT_TAIL_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl fmt::Display for OutputFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OutputFormat::Csv => write!(f, "csv"),
            OutputFormat::Json => write!(f, "json"),
        }
    }
}

/// Raw options shared by the data-producing subcommands.
#[derive(clap::Args, Clone, Debug, Default)]
pub struct CommonArgs {
    /// Squeeze magnitudes |r| in (0, 1), comma-separated
    #[arg(long = "r", value_delimiter = ',')]
    pub r: Vec<f64>,

    /// Subtracted photon counts N, comma-separated
    #[arg(long = "N", value_delimiter = ',')]
    pub n: Vec<u32>,

    /// Center-guide detector efficiency in (0, 1]
    #[arg(long = "eta-b")]
    pub eta_b: Option<f64>,

    /// Outer-port detector efficiency in (0, 1]
    #[arg(long = "eta-outer")]
    pub eta_outer: Option<f64>,

    /// Coupling constant (1/length)
    #[arg(long)]
    pub kappa: Option<f64>,

    /// Explicit propagation distance; mutually exclusive with --ratio
    #[arg(long)]
    pub z: Option<f64>,

    /// Target center/outer intensity ratio used to derive z (default 1/9)
    #[arg(long)]
    pub ratio: Option<f64>,

    /// Override the per-r squeeze-sum truncation
    #[arg(long)]
    pub lmax: Option<u32>,

    /// Truncation tail tolerance for the automatic l_max policy
    #[arg(long = "tail-tol")]
    pub tail_tol: Option<f64>,

    /// Artifact format (sweep only; distributions are always JSON)
    #[arg(long)]
    pub format: Option<OutputFormat>,

    /// Output path; stdout when omitted
    #[arg(long)]
    pub out: Option<PathBuf>,

    /// Worker threads for sweep points (defaults to the number of cores)
    #[arg(long)]
    pub jobs: Option<usize>,

    /// Flat key = value config file; flags override file entries
    #[arg(long)]
    pub config: Option<PathBuf>,
}

/// How the propagation distance is fixed.
#[derive(Clone, Copy, Debug)]
pub enum ZMode {
    Explicit,
    RatioTarget(f64),
}

/// Fully resolved, validated run parameters.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub r_values: Vec<f64>,
    pub n_values: Vec<u32>,
    pub eta_b: f64,
    pub eta_outer: f64,
    pub kappa: f64,
    pub z_mode: ZMode,
    pub z: f64,
    pub theta: f64,
    pub l_max_override: Option<u32>,
    pub tail_tol: f64,
    /// None when neither flag nor file chose a format.
    pub format: Option<OutputFormat>,
    pub out: Option<PathBuf>,
    pub jobs: Option<usize>,
}

impl RunConfig {
    /// Truncation for a given squeeze magnitude: the override if present,
    /// otherwise the smallest l_max meeting the tail tolerance.
    pub fn l_max_for(&self, r_abs: f64) -> u32 {
        self.l_max_override
            .unwrap_or_else(|| default_l_max(r_abs, self.tail_tol))
    }
}

/// Parse a flat `key = value` file. Unknown keys are usage errors.
fn parse_config_file(path: &Path) -> Result<BTreeMap<String, String>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::usage(format!("cannot read config file {}: {e}", path.display())))?;
    let mut map = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            CliError::usage(format!(
                "{}:{}: expected `key = value`, got `{line}`",
                path.display(),
                lineno + 1
            ))
        })?;
        map.insert(key.trim().to_string(), value.trim().to_string());
    }
    const KNOWN: [&str; 12] = [
        "r", "N", "eta-b", "eta-outer", "kappa", "z", "ratio", "lmax", "tail-tol", "format",
        "out", "jobs",
    ];
    for key in map.keys() {
        if !KNOWN.contains(&key.as_str()) {
            return Err(CliError::usage(format!(
                "{}: unknown config key `{key}`",
                path.display()
            )));
        }
    }
    Ok(map)
}

fn parse_value<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, CliError> {
    value
        .parse()
        .map_err(|_| CliError::usage(format!("config key `{key}`: cannot parse `{value}`")))
}

fn parse_list<T: std::str::FromStr>(key: &str, value: &str) -> Result<Vec<T>, CliError> {
    value
        .split(',')
        .map(|item| parse_value(key, item.trim()))
        .collect()
}

/// Merge file values into unset flags, then validate and derive z and theta.
pub fn resolve(args: &CommonArgs) -> Result<RunConfig, CliError> {
    let mut args = args.clone();
    if let Some(path) = &args.config {
        let file = parse_config_file(path)?;
        if args.r.is_empty() {
            if let Some(v) = file.get("r") {
                args.r = parse_list("r", v)?;
            }
        }
        if args.n.is_empty() {
            if let Some(v) = file.get("N") {
                args.n = parse_list("N", v)?;
            }
        }
        macro_rules! fill {
            ($field:ident, $key:literal) => {
                if args.$field.is_none() {
                    if let Some(v) = file.get($key) {
                        args.$field = Some(parse_value($key, v)?);
                    }
                }
            };
        }
        fill!(eta_b, "eta-b");
        fill!(eta_outer, "eta-outer");
        fill!(kappa, "kappa");
        fill!(z, "z");
        fill!(ratio, "ratio");
        fill!(lmax, "lmax");
        fill!(tail_tol, "tail-tol");
        fill!(jobs, "jobs");
        if args.format.is_none() {
            if let Some(v) = file.get("format") {
                args.format = Some(match v.as_str() {
                    "csv" => OutputFormat::Csv,
                    "json" => OutputFormat::Json,
                    other => {
                        return Err(CliError::usage(format!(
                            "config key `format`: expected csv or json, got `{other}`"
                        )))
                    }
                });
            }
        }
        if args.out.is_none() {
            if let Some(v) = file.get("out") {
                args.out = Some(PathBuf::from(v));
            }
        }
    }

    if args.z.is_some() && args.ratio.is_some() {
        return Err(CliError::usage(
            "--z and --ratio are mutually exclusive".into(),
        ));
    }

    let kappa = args.kappa.unwrap_or(1.0);
    if !(kappa > 0.0) || !kappa.is_finite() {
        return Err(CliError::domain(format!(
            "kappa must be positive and finite, got {kappa}"
        )));
    }
    for &r in &args.r {
        if !(r > 0.0 && r < 1.0) {
            return Err(CliError::domain(format!(
                "every |r| must lie in (0, 1), got {r}"
            )));
        }
    }
    let eta_b = args.eta_b.unwrap_or(1.0);
    let eta_outer = args.eta_outer.unwrap_or(1.0);
    for (name, eta) in [("eta-b", eta_b), ("eta-outer", eta_outer)] {
        if !(eta > 0.0 && eta <= 1.0) {
            return Err(CliError::domain(format!(
                "{name} must lie in (0, 1], got {eta}"
            )));
        }
    }
    let tail_tol = args.tail_tol.unwrap_or(DEFAULT_TAIL_TOL);
    if !(tail_tol > 0.0 && tail_tol < 1.0) {
        return Err(CliError::domain(format!(
            "tail-tol must lie in (0, 1), got {tail_tol}"
        )));
    }

    let (z_mode, z) = match (args.z, args.ratio) {
        (Some(z), _) => {
            if !(z >= 0.0) || !z.is_finite() {
                return Err(CliError::domain(format!(
                    "z must be non-negative and finite, got {z}"
                )));
            }
            (ZMode::Explicit, z)
        }
        (None, ratio) => {
            let target = ratio.unwrap_or(DEFAULT_RATIO);
            let z = solve_zf(kappa, target).map_err(CliError::from_core)?;
            (ZMode::RatioTarget(target), z)
        }
    };
    let theta = std::f64::consts::SQRT_2 * kappa * z;

    Ok(RunConfig {
        r_values: args.r,
        n_values: args.n,
        eta_b,
        eta_outer,
        kappa,
        z_mode,
        z,
        theta,
        l_max_override: args.lmax,
        tail_tol,
        format: args.format,
        out: args.out,
        jobs: args.jobs,
    })
}

/// Data-producing commands need a non-empty grid.
pub fn require_grid(config: &RunConfig) -> Result<(), CliError> {
    if config.r_values.is_empty() {
        return Err(CliError::usage(
            "no squeeze values: pass --r (or set r in the config file)".into(),
        ));
    }
    if config.n_values.is_empty() {
        return Err(CliError::usage(
            "no subtraction counts: pass --N (or set N in the config file)".into(),
        ));
    }
    Ok(())
}
