//! `varexp`: batch reports for instanton constants, bubble expansions,
//! mountain-pass levels and variable-exponent norm properties.
//!
//! Exit codes: 0 success, 1 numerical failure, 2 usage or validation error,
//! 3 validity guard violated, 4 fit tolerance or verdict not met.

mod config;
mod output;

use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use thiserror::Error;

use varexp_core::energy::{expansion_report, guard_flags, mountain_pass_report, Expansion};
use varexp_core::instanton::{
    c_p_threshold, d_np, d_np_oracle, energy_threshold, k_np, moments_closed_form, normalization_constant, Moment,
};
use varexp_core::modular::{
    holder_check, norm_modular_properties, random_exponent_field, random_function, random_holder_exponents,
    Measure, RadialGrid,
};
use varexp_core::quadrature::QuadSpec;
use varexp_core::Error;

use config::{Format, RunArgs, RunConfig};
use output::{table, Report};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Core(Error::InvalidParams(_) | Error::InvalidModel(_) | Error::Domain(_)) => 2,
            CliError::Core(Error::Guard { .. } | Error::DivergentMoment { .. }) => 3,
            _ => 1,
        }
    }
}

#[derive(Parser)]
#[command(name = "varexp", version, about = "Reports for critical variable-exponent problems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Instanton moments, Sobolev constant, energy threshold, C_p and D(n,p).
    Constants(RunArgs),
    /// Closed-form moments against radial quadrature.
    Moments(RunArgs),
    /// Bubble integral under variable exponents against its closed expansion.
    Expansion {
        #[arg(value_enum)]
        kind: ExpansionKind,
        #[command(flatten)]
        args: RunArgs,
    },
    /// sup_t J(t v_eps) against the compactness threshold.
    Mountainpass(RunArgs),
    /// Randomized checks of norm/modular relations or the Hölder inequality.
    Propcheck {
        #[arg(value_enum)]
        check: PropKind,
        #[command(flatten)]
        args: RunArgs,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ExpansionKind {
    Lq,
    Grad,
    Lp,
}

impl From<ExpansionKind> for Expansion {
    fn from(k: ExpansionKind) -> Self {
        match k {
            ExpansionKind::Lq => Expansion::Lq,
            ExpansionKind::Grad => Expansion::Grad,
            ExpansionKind::Lp => Expansion::Lp,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum PropKind {
    Holder,
    Normmodular,
}

const EXPANSION_TOL: f64 = 0.1;
const MOMENT_TOL: f64 = 1e-8;
const MP_BAND: f64 = 1e-6;
const SLACK_TOL: f64 = 1e-12;
const DEFAULT_CASES: usize = 500;

/// Outcome of a command: the report and whether it met its tolerance.
struct Outcome {
    report: Report,
    ok: bool,
    summary: String,
}

fn to_value<T: serde::Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("reports serialize")
}

fn constants(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let dims = cfg.dims()?;
    let spec = QuadSpec::default();
    let m = moments_closed_form(&dims)?;
    let mut rows = vec![("p*".to_string(), Some(dims.p_star()), String::new())];
    let mut moments = serde_json::Map::new();
    for moment in Moment::ALL {
        let value = m.get(moment);
        let note = if value.is_some() {
            format!("finite ({})", moment.condition())
        } else {
            format!("divergent (requires {})", moment.condition())
        };
        rows.push((moment.name().to_string(), value, note.clone()));
        moments.insert(
            moment.name().into(),
            json!({"value": value, "finite": value.is_some(), "condition": moment.condition()}),
        );
    }
    let k = k_np(&dims)?;
    let threshold = energy_threshold(&dims)?;
    let c_p = c_p_threshold(&dims);
    let norm = normalization_constant(&dims)?;
    rows.push(("K(n,p)".into(), Some(k), String::new()));
    rows.push(("K(n,p)^-n/n".into(), Some(threshold), "compactness threshold".into()));
    rows.push(("C_p".into(), Some(c_p), "gradient threshold constant".into()));
    rows.push(("normalization".into(), Some(norm), "v_eps = c^(1/(p*-p)) u_eps".into()));
    let (d_closed, d_oracle) = if Moment::G2.is_finite_for(&dims) && Moment::Q2.is_finite_for(&dims) {
        (Some(d_np(&dims)?), Some(d_np_oracle(&dims, &spec)?))
    } else {
        (None, None)
    };
    let d_note = if d_closed.is_some() { "" } else { "undefined: m_g2 or m_q2 diverges" };
    rows.push(("D(n,p)".into(), d_closed, format!("closed form {d_note}").trim().to_string()));
    rows.push(("D(n,p) oracle".into(), d_oracle, "quadrature ratio".into()));
    let guards = guard_flags(&dims);
    for g in &guards {
        let status = if g.satisfied { "holds" } else { "violated" };
        rows.push((format!("guard {}", g.expansion.name()), None, format!("{} {status}", g.bound)));
    }
    let json = json!({
        "schema_version": 1,
        "n": dims.n(),
        "p": dims.p(),
        "p_star": dims.p_star(),
        "moments": moments,
        "k_np": k,
        "threshold": threshold,
        "c_p": c_p,
        "normalization": norm,
        "d_np": d_closed,
        "d_np_oracle": d_oracle,
        "guards": to_value(&guards),
    });
    let csv_rows = rows
        .iter()
        .map(|(name, value, note)| json!({"name": name, "value": value, "note": note}))
        .collect();
    Ok(Outcome {
        report: Report::new(json).with_rows(csv_rows).with_table(table(&rows)),
        ok: true,
        summary: format!("constants for n = {}, p = {}", dims.n(), dims.p()),
    })
}

fn moments(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let dims = cfg.dims()?;
    let tol = cfg.tol.unwrap_or(MOMENT_TOL);
    let spec = QuadSpec::default();
    let mut rows = Vec::new();
    let mut table_rows = Vec::new();
    let mut worst: f64 = 0.0;
    for moment in Moment::ALL {
        if !moment.is_finite_for(&dims) {
            rows.push(json!({"moment": moment.name(), "finite": false, "condition": moment.condition(),
                "closed": null, "quadrature": null, "quad_error": null, "rel_diff": null}));
            table_rows.push((moment.name().to_string(), None, format!("divergent (requires {})", moment.condition())));
            continue;
        }
        let closed = moment.closed_form(&dims)?;
        let quad = moment.by_quadrature(&dims, &spec)?;
        let diff = (closed - quad.value).abs() / quad.value.abs();
        if moment != Moment::P0 {
            worst = worst.max(diff);
        }
        rows.push(json!({"moment": moment.name(), "finite": true, "condition": moment.condition(),
            "closed": closed, "quadrature": quad.value, "quad_error": quad.error, "rel_diff": diff}));
        let note = if moment == Moment::P0 {
            "quadrature only".to_string()
        } else {
            format!("quadrature {} (rel diff {})", output::fmt_num(quad.value), output::fmt_num(diff))
        };
        table_rows.push((moment.name().to_string(), Some(closed), note));
    }
    let ok = worst <= tol;
    let json = json!({"schema_version": 1, "n": dims.n(), "p": dims.p(), "tolerance": tol,
        "max_rel_diff": worst, "within_tolerance": ok, "rows": rows});
    Ok(Outcome {
        report: Report::new(json).with_table(table(&table_rows)),
        ok,
        summary: format!("moments: max relative difference {} (tol {})", output::fmt_num(worst), output::fmt_num(tol)),
    })
}

fn expansion(kind: Expansion, cfg: &RunConfig) -> Result<Outcome, CliError> {
    let prob = cfg.problem()?;
    let tol = cfg.tol.unwrap_or(EXPANSION_TOL);
    let eps = cfg.eps(2f64.powi(-4), 2f64.powi(-9))?;
    if cfg.override_guards && !kind.guard_holds(&prob.dims()) {
        eprintln!("warning: guard {} violated, running anyway", kind.guard());
    }
    let report = expansion_report(&prob, kind, &eps, cfg.override_guards)?;
    let ok = report.within(tol);
    let summary = format!(
        "expansion {}: fitted {} vs closed {} (relative error {}, tol {})",
        kind.name(),
        output::fmt_num(report.fitted_coefficient),
        output::fmt_num(report.closed_coefficient),
        output::fmt_num(report.relative_error),
        output::fmt_num(tol)
    );
    let mut json = to_value(&report);
    json["tolerance"] = json!(tol);
    json["within_tolerance"] = json!(ok);
    Ok(Outcome {
        report: Report::new(json),
        ok,
        summary,
    })
}

fn mountainpass(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let prob = cfg.problem()?;
    let band = cfg.tol.unwrap_or(MP_BAND);
    let eps = cfg.eps(2f64.powi(-6), 2f64.powi(-8))?;
    let report = mountain_pass_report(&prob, &eps, band)?;
    let last = report.rows.last().expect("at least one scale");
    let summary = format!(
        "mountainpass: margin {} at eps {}, predicted {:?}, observed {:?}",
        output::fmt_num(last.margin),
        output::fmt_num(last.eps),
        report.prediction,
        report.observed
    );
    Ok(Outcome {
        ok: report.verdict_matches,
        report: Report::new(to_value(&report)),
        summary,
    })
}

fn propcheck(check: PropKind, cfg: &RunConfig) -> Result<Outcome, CliError> {
    let cases = cfg.cases.unwrap_or(DEFAULT_CASES);
    let tol = cfg.tol.unwrap_or(SLACK_TOL);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let grid = Arc::new(RadialGrid::uniform(Measure::Radial(3), 1.0, 6, 12)?);
    let (name, json, violations) = match check {
        PropKind::Holder => {
            let mut min_slack = f64::INFINITY;
            let mut max_ratio: f64 = 0.0;
            let mut violations = Vec::new();
            for case in 0..cases {
                let (p, q) = random_holder_exponents(&grid, &mut rng)?;
                let f = random_function(&grid, &mut rng)?;
                let g = random_function(&grid, &mut rng)?;
                let rep = holder_check(&f, &g, &p, &q)?;
                min_slack = min_slack.min(rep.slack);
                max_ratio = max_ratio.max(rep.lhs / rep.bound);
                if !rep.holds(tol) {
                    violations.push(json!({"case": case, "lhs": rep.lhs, "bound": rep.bound, "slack": rep.slack}));
                }
            }
            let n = violations.len();
            let json = json!({"schema_version": 1, "check": "holder", "cases": cases, "seed": cfg.seed,
                "tolerance": tol, "min_slack": min_slack, "max_lhs_over_bound": max_ratio,
                "violation_count": n, "violations": violations});
            ("holder", json, n)
        }
        PropKind::Normmodular => {
            let mut checks = [0usize; 6];
            let mut violations = Vec::new();
            for case in 0..cases {
                let p = random_exponent_field(&grid, 1.1, 6.0, &mut rng)?;
                let u = random_function(&grid, &mut rng)?;
                let rep = norm_modular_properties(&[u], &p)?;
                for (total, c) in checks.iter_mut().zip(rep.checks) {
                    *total += c;
                }
                for mut v in rep.violations {
                    v.case = case;
                    violations.push(to_value(&v));
                }
            }
            let n = violations.len();
            let json = json!({"schema_version": 1, "check": "normmodular", "cases": cases, "seed": cfg.seed,
                "checks_per_item": checks, "violation_count": n, "violations": violations});
            ("normmodular", json, n)
        }
    };
    Ok(Outcome {
        report: Report::new(json),
        ok: violations == 0,
        summary: format!("propcheck {name}: {violations} violations in {cases} cases"),
    })
}

fn run(cli: Cli) -> Result<u8, CliError> {
    let (args, default_format) = match &cli.command {
        Command::Constants(a) | Command::Moments(a) => (a, Format::Table),
        Command::Expansion { args, .. } | Command::Propcheck { args, .. } => (args, Format::Json),
        Command::Mountainpass(a) => (a, Format::Json),
    };
    let cfg = RunConfig::resolve(args)?;
    let outcome = match cli.command {
        Command::Constants(_) => constants(&cfg)?,
        Command::Moments(_) => moments(&cfg)?,
        Command::Expansion { kind, .. } => expansion(kind.into(), &cfg)?,
        Command::Mountainpass(_) => mountainpass(&cfg)?,
        Command::Propcheck { check, .. } => propcheck(check, &cfg)?,
    };
    outcome.report.emit(cfg.format.unwrap_or(default_format), cfg.out.as_deref())?;
    eprintln!("{}", outcome.summary);
    Ok(if outcome.ok { 0 } else { 4 })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
