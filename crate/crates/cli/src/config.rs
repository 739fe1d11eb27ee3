//! Run configuration: command-line flags layered over an optional
//! `key = value` file.
//!
//! File keys are the long flag names without the leading dashes
//! (`dq-hessian-trace = -10`; underscores are accepted too). Blank lines and
//! lines starting with `#` are skipped. Flags given on the command line win.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, ValueEnum};
use nalgebra::DMatrix;
use varexp_core::energy::{EnergyProblem, ExponentModel};
use varexp_core::special::DimParams;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    /// Aligned plain-text table (constants and moments only).
    Table,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        <Format as ValueEnum>::from_str(s, true)
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// Key=value file with defaults for any of the flags below.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Dimension.
    #[arg(long)]
    pub n: Option<u32>,
    /// Exponent at the concentration point.
    #[arg(long)]
    pub p: Option<f64>,
    /// Laplacian of q at the origin (isotropic model).
    #[arg(long, allow_negative_numbers = true)]
    pub dq_hessian_trace: Option<f64>,
    /// Laplacian of p at the origin (isotropic model).
    #[arg(long, allow_negative_numbers = true)]
    pub dp_hessian_trace: Option<f64>,
    /// Full Hessian of q at the origin, rows separated by `;`, entries by `,`.
    #[arg(long, allow_hyphen_values = true, value_name = "MATRIX")]
    pub dq_hessian: Option<String>,
    /// Full Hessian of p at the origin, rows separated by `;`, entries by `,`.
    #[arg(long, allow_hyphen_values = true, value_name = "MATRIX")]
    pub dp_hessian: Option<String>,
    /// Value of the lower-order coefficient h at the origin.
    #[arg(long, allow_negative_numbers = true)]
    pub h0: Option<f64>,
    /// Cut-off radius of the test functions (`inf` for none).
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub eps_min: Option<f64>,
    #[arg(long)]
    pub eps_max: Option<f64>,
    /// Fit tolerance (expansion), threshold band (mountainpass) or slack
    /// tolerance (propcheck).
    #[arg(long)]
    pub tol: Option<f64>,
    /// Write the report here instead of stdout.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Run expansions outside their validity range.
    #[arg(long)]
    pub override_guards: bool,
    /// Seed for randomized property checks.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of randomized cases.
    #[arg(long)]
    pub cases: Option<usize>,
}

const KEYS: [&str; 17] = [
    "n",
    "p",
    "dq-hessian-trace",
    "dp-hessian-trace",
    "dq-hessian",
    "dp-hessian",
    "h0",
    "delta",
    "eps-min",
    "eps-max",
    "tol",
    "out",
    "format",
    "override-guards",
    "seed",
    "cases",
    "config",
];

pub fn parse_config_file(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut map = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("config line {}: expected key = value", i + 1)))?;
        let key = key.trim().replace('_', "-");
        if !KEYS.contains(&key.as_str()) || key == "config" {
            return Err(CliError::Usage(format!("config line {}: unknown key `{key}`", i + 1)));
        }
        map.insert(key, value.trim().to_string());
    }
    Ok(map)
}

/// Flags and file merged, defaults not yet applied.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub n: Option<u32>,
    pub p: Option<f64>,
    pub dq_trace: Option<f64>,
    pub dp_trace: Option<f64>,
    pub dq_hessian: Option<DMatrix<f64>>,
    pub dp_hessian: Option<DMatrix<f64>>,
    pub h0: f64,
    pub delta: f64,
    pub eps_min: Option<f64>,
    pub eps_max: Option<f64>,
    pub tol: Option<f64>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub override_guards: bool,
    pub seed: u64,
    pub cases: Option<usize>,
}

fn pick<T: FromStr>(flag: Option<T>, file: &BTreeMap<String, String>, key: &str) -> Result<Option<T>, CliError> {
    if flag.is_some() {
        return Ok(flag);
    }
    match file.get(key) {
        None => Ok(None),
        Some(raw) => raw
            .parse()
            .map(Some)
            .map_err(|_| CliError::Usage(format!("config key `{key}`: cannot parse `{raw}`"))),
    }
}

fn parse_bool(raw: &str) -> Result<bool, CliError> {
    match raw.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(CliError::Usage(format!("expected a boolean, got `{raw}`"))),
    }
}

/// Parses `a,b;c,d` into a square matrix.
pub fn parse_matrix(raw: &str) -> Result<DMatrix<f64>, CliError> {
    let rows: Vec<Vec<f64>> = raw
        .split(';')
        .map(|row| {
            row.split(',')
                .map(|x| {
                    x.trim()
                        .parse::<f64>()
                        .map_err(|_| CliError::Usage(format!("matrix entry `{}` is not a number", x.trim())))
                })
                .collect()
        })
        .collect::<Result<_, _>>()?;
    let dim = rows.len();
    if rows.iter().any(|r| r.len() != dim) {
        return Err(CliError::Usage(format!("matrix `{raw}` is not square")));
    }
    Ok(DMatrix::from_fn(dim, dim, |i, j| rows[i][j]))
}

impl RunConfig {
    pub fn resolve(args: &RunArgs) -> Result<Self, CliError> {
        let file = match &args.config {
            Some(path) => load(path)?,
            None => BTreeMap::new(),
        };
        let matrix = |flag: &Option<String>, key: &str| -> Result<Option<DMatrix<f64>>, CliError> {
            pick(flag.clone(), &file, key)?.map(|s: String| parse_matrix(&s)).transpose()
        };
        let override_guards = args.override_guards || file.get("override-guards").map(|s| parse_bool(s)).transpose()?.unwrap_or(false);
        Ok(Self {
            n: pick(args.n, &file, "n")?,
            p: pick(args.p, &file, "p")?,
            dq_trace: pick(args.dq_hessian_trace, &file, "dq-hessian-trace")?,
            dp_trace: pick(args.dp_hessian_trace, &file, "dp-hessian-trace")?,
            dq_hessian: matrix(&args.dq_hessian, "dq-hessian")?,
            dp_hessian: matrix(&args.dp_hessian, "dp-hessian")?,
            h0: pick(args.h0, &file, "h0")?.unwrap_or(0.0),
            delta: pick(args.delta, &file, "delta")?.unwrap_or(1.0),
            eps_min: pick(args.eps_min, &file, "eps-min")?,
            eps_max: pick(args.eps_max, &file, "eps-max")?,
            tol: pick(args.tol, &file, "tol")?,
            out: pick(args.out.clone(), &file, "out")?,
            format: pick(args.format, &file, "format")?,
            override_guards,
            seed: pick(args.seed, &file, "seed")?.unwrap_or(0),
            cases: pick(args.cases, &file, "cases")?,
        })
    }

    pub fn dims(&self) -> Result<DimParams, CliError> {
        let n = self.n.ok_or_else(|| CliError::Usage("--n is required".into()))?;
        let p = self.p.ok_or_else(|| CliError::Usage("--p is required".into()))?;
        DimParams::new(n, p).map_err(|e| CliError::Usage(e.to_string()))
    }

    pub fn problem(&self) -> Result<EnergyProblem, CliError> {
        let dims = self.dims()?;
        let model = |value: f64, trace: Option<f64>, hessian: &Option<DMatrix<f64>>, name: &str| match (trace, hessian) {
            (Some(_), Some(_)) => Err(CliError::Usage(format!(
                "give either --{name}-hessian-trace or --{name}-hessian, not both"
            ))),
            (_, Some(h)) => ExponentModel::new(value, vec![0.0; h.nrows()], h.clone()).map_err(CliError::from),
            (t, None) => ExponentModel::isotropic(dims.n(), value, t.unwrap_or(0.0)).map_err(CliError::from),
        };
        let p_model = model(dims.p(), self.dp_trace, &self.dp_hessian, "dp")?;
        let q_model = model(dims.p_star(), self.dq_trace, &self.dq_hessian, "dq")?;
        Ok(EnergyProblem::new(dims, p_model, q_model, self.h0)?.with_delta(self.delta)?)
    }

    /// Halving sequence from `eps-max` down to `eps-min`.
    pub fn eps(&self, default_max: f64, default_min: f64) -> Result<Vec<f64>, CliError> {
        let max = self.eps_max.unwrap_or(default_max);
        let min = self.eps_min.unwrap_or(default_min);
        varexp_core::energy::eps_sequence(max, min).map_err(|e| CliError::Usage(e.to_string()))
    }
}

fn load(path: &Path) -> Result<BTreeMap<String, String>, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    parse_config_file(&text)
}
