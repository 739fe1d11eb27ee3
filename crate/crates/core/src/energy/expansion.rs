use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::model::{guard_flags, EnergyProblem, Expansion, GuardFlag};
use crate::error::{Error, Result};
use crate::instanton::{cutoff_eta, u_eps, u_eps_derivative, Moment};
use crate::quadrature::{integrate_radial_ball, integrate_radial_from, Estimate, QuadSpec};

/// Tolerances for the bubble integrals; the ε² ln ε corrections are five
/// orders below the leading terms at the smallest default scale.
pub fn bubble_quad_spec() -> QuadSpec {
    QuadSpec {
        abs_tol: 1e-16,
        rel_tol: 1e-12,
        max_subdivisions: 5000,
        tail_transform: true,
    }
}

/// `ε_k = ε_max 2^{-k}` down to `ε_min`.
pub fn eps_sequence(eps_max: f64, eps_min: f64) -> Result<Vec<f64>> {
    if !(eps_max < 1.0 && eps_min > 0.0 && eps_min <= eps_max) {
        return Err(Error::InvalidParams(format!(
            "scale range must satisfy 0 < eps_min <= eps_max < 1, got [{eps_min}, {eps_max}]"
        )));
    }
    let mut out = vec![eps_max];
    loop {
        let next = out.last().unwrap() * 0.5;
        if next < eps_min * (1.0 - 1e-9) {
            break;
        }
        out.push(next);
    }
    Ok(out)
}

/// `2^{-4}, …, 2^{-9}`.
pub fn default_eps_sequence() -> Vec<f64> {
    (4..=9).map(|k| 2f64.powi(-k)).collect()
}

fn check_eps(eps: &[f64], min_len: usize) -> Result<()> {
    if eps.len() < min_len {
        return Err(Error::InvalidParams(format!("need at least {min_len} scales, got {}", eps.len())));
    }
    if eps.iter().any(|e| !(*e > 0.0 && *e < 1.0)) || eps.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::InvalidParams("scales must lie in (0, 1) and strictly decrease".into()));
    }
    Ok(())
}

/// Radial integral of a bubble-shaped integrand: panels at `ε 2^k` resolve
/// the core, the cut-off annulus gets its own panels.
pub(crate) fn bubble_integral(
    prob: &EnergyProblem,
    eps: f64,
    g: impl Fn(f64) -> f64,
    spec: &QuadSpec,
) -> Result<Estimate> {
    let n = prob.dims().n();
    let delta = prob.delta();
    let core_end = if delta.is_finite() { delta } else { eps * 2f64.powi(8) };
    let mut breaks = vec![0.0];
    breaks.extend((-2..=7).map(|k| eps * 2f64.powi(k)).filter(|r| *r < core_end));
    breaks.push(core_end);
    if delta.is_finite() {
        breaks.extend([1.5 * delta, 2.0 * delta]);
        integrate_radial_ball(n, g, &breaks, spec)
    } else {
        let head = integrate_radial_ball(n, &g, &breaks, spec)?;
        let tail = integrate_radial_from(n, &g, core_end, spec)?;
        Ok(Estimate {
            value: head.value + tail.value,
            error: head.error + tail.error,
        })
    }
}

fn pow_abs(x: f64, e: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x.abs().powf(e)
    }
}

/// Measured bubble integral without the guard check.
pub fn measure_expansion(kind: Expansion, prob: &EnergyProblem, eps: f64, spec: &QuadSpec) -> Result<Estimate> {
    let bp = prob.bubble(eps)?;
    match kind {
        Expansion::Lq => bubble_integral(prob, eps, |r| prob.f_at(r) * pow_abs(u_eps(&bp, r), prob.q_at(r)), spec),
        Expansion::Grad => bubble_integral(
            prob,
            eps,
            |r| {
                if cutoff_eta(bp.delta, r) == 0.0 {
                    return 0.0;
                }
                prob.f_at(r) * pow_abs(u_eps_derivative(&bp, r), prob.p_at(r))
            },
            spec,
        ),
        Expansion::Lp => bubble_integral(prob, eps, |r| prob.f_at(r) * pow_abs(u_eps(&bp, r), prob.p_at(r)), spec),
    }
}

/// `∫ f u_ε^{q(x)} dx`.
pub fn expansion_lq(prob: &EnergyProblem, eps: f64) -> Result<f64> {
    Expansion::Lq.check_guard(&prob.dims())?;
    Ok(measure_expansion(Expansion::Lq, prob, eps, &bubble_quad_spec())?.value)
}

/// `∫ f |∇u_ε|^{p(x)} dx`.
pub fn expansion_grad(prob: &EnergyProblem, eps: f64) -> Result<f64> {
    Expansion::Grad.check_guard(&prob.dims())?;
    Ok(measure_expansion(Expansion::Grad, prob, eps, &bubble_quad_spec())?.value)
}

/// `∫ f u_ε^{p(x)} dx`.
pub fn expansion_lp(prob: &EnergyProblem, eps: f64) -> Result<f64> {
    Expansion::Lp.check_guard(&prob.dims())?;
    Ok(measure_expansion(Expansion::Lp, prob, eps, &bubble_quad_spec())?.value)
}

fn closed_unchecked(kind: Expansion, prob: &EnergyProblem) -> Result<(f64, f64)> {
    let dims = prob.dims();
    let f0 = prob.f0();
    match kind {
        Expansion::Lq => {
            let lead = f0 * Moment::Q0.closed_form(&dims)?;
            let dq = prob.dq_laplacian();
            let coef = if dq == 0.0 {
                0.0
            } else {
                -f0 * dq * Moment::Q2.closed_form(&dims)? / (2.0 * dims.p_star())
            };
            Ok((lead, coef))
        }
        Expansion::Grad => {
            let lead = f0 * Moment::G0.closed_form(&dims)?;
            let dp = prob.dp_laplacian();
            let coef = if dp == 0.0 {
                0.0
            } else {
                -f0 * dp * Moment::G2.closed_form(&dims)? / (2.0 * dims.p())
            };
            Ok((lead, coef))
        }
        Expansion::Lp => Ok((0.0, f0 * Moment::P0.closed_form(&dims)?)),
    }
}

/// `A0 = f(0) ∫U^{p*}` and `A1 = -(f(0)/(2p*)) Δq(0) ∫|x|² U^{p*}`.
pub fn closed_a0_a1(prob: &EnergyProblem) -> Result<(f64, f64)> {
    Expansion::Lq.check_guard(&prob.dims())?;
    closed_unchecked(Expansion::Lq, prob)
}

/// `-(f(0)/p*) Δq(0) ∫|x|² U^{p*}`, twice [`closed_a0_a1`]'s correction.
/// Kept for comparison with the variant that does not carry the factor ½ of
/// the Taylor expansion.
pub fn a1_without_half(prob: &EnergyProblem) -> Result<f64> {
    Ok(2.0 * closed_a0_a1(prob)?.1)
}

/// `B0 = f(0) ∫|∇U|^p` and `B1 = -(f(0)/(2p)) Δp(0) ∫|x|² |∇U|^p`.
pub fn closed_b0_b1(prob: &EnergyProblem) -> Result<(f64, f64)> {
    Expansion::Grad.check_guard(&prob.dims())?;
    closed_unchecked(Expansion::Grad, prob)
}

/// `C0 = f(0) ∫U^p`.
pub fn closed_c0(prob: &EnergyProblem) -> Result<f64> {
    Expansion::Lp.check_guard(&prob.dims())?;
    Ok(closed_unchecked(Expansion::Lp, prob)?.1)
}

/// Size of the correction coefficient per unit Laplacian (or the leading
/// constant for `Lp`), used to judge coefficients whose closed value is 0.
pub fn reference_scale(kind: Expansion, prob: &EnergyProblem) -> Result<f64> {
    let dims = prob.dims();
    let f0 = prob.f0().abs();
    match kind {
        Expansion::Lq => Ok(f0 * Moment::Q2.closed_form(&dims)? / (2.0 * dims.p_star())),
        Expansion::Grad => Ok(f0 * Moment::G2.closed_form(&dims)? / (2.0 * dims.p())),
        Expansion::Lp => Ok(f0 * Moment::P0.closed_form(&dims)?),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpansionRow {
    pub eps: f64,
    pub measured: f64,
    pub quad_error: f64,
    pub regressor: f64,
    /// `measured - leading constant`
    pub deviation: f64,
    /// `deviation / regressor`
    pub ratio: f64,
    /// `|deviation - closed coefficient · regressor| / |regressor|`
    pub residual: f64,
    /// Coefficient of `ε² ln ε` from this scale and the previous one, with
    /// the plain `ε²` term eliminated.
    pub two_point: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpansionReport {
    pub schema_version: u32,
    pub expansion: Expansion,
    pub n: u32,
    pub p: f64,
    pub dp_laplacian: f64,
    pub dq_laplacian: f64,
    pub f0: f64,
    /// `None` for the full-space bubble.
    pub delta: Option<f64>,
    pub regressor: String,
    pub guards: Vec<GuardFlag>,
    pub guards_overridden: bool,
    pub closed_leading: f64,
    pub closed_coefficient: f64,
    pub fitted_coefficient: f64,
    /// Slope of `deviation/ε² = a ln ε + b` over all scales.
    pub ls_coefficient: Option<f64>,
    pub reference_scale: f64,
    pub relative_error: f64,
    pub rows: Vec<ExpansionRow>,
}

impl ExpansionReport {
    pub fn within(&self, tol: f64) -> bool {
        self.relative_error <= tol
    }

    pub fn write_rows_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for row in &self.rows {
            w.serialize(row)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn ls_slope(x: &[f64], y: &[f64]) -> f64 {
    let m = x.len() as f64;
    let mx = x.iter().sum::<f64>() / m;
    let my = y.iter().sum::<f64>() / m;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Measures one expansion along `eps` and compares the extracted
/// coefficient with its closed form. With `override_guards` the validity
/// range is reported but not enforced.
pub fn expansion_report(
    prob: &EnergyProblem,
    kind: Expansion,
    eps: &[f64],
    override_guards: bool,
) -> Result<ExpansionReport> {
    let dims = prob.dims();
    if !override_guards {
        kind.check_guard(&dims)?;
    }
    let log_kind = kind != Expansion::Lp;
    check_eps(eps, if log_kind { 2 } else { 1 })?;
    let (lead, coef) = closed_unchecked(kind, prob)?;
    let scale = reference_scale(kind, prob)?;
    let spec = bubble_quad_spec();
    let measured: Vec<Estimate> = eps
        .par_iter()
        .map(|&e| measure_expansion(kind, prob, e, &spec))
        .collect::<Result<_>>()?;

    let mut rows = Vec::with_capacity(eps.len());
    for (i, (&e, m)) in eps.iter().zip(&measured).enumerate() {
        let x = kind.regressor(e, dims.p());
        let deviation = m.value - lead;
        let two_point = if log_kind && i > 0 {
            let e0 = eps[i - 1];
            let y0 = (measured[i - 1].value - lead) / (e0 * e0);
            let y1 = deviation / (e * e);
            Some((y0 - y1) / (e0.ln() - e.ln()))
        } else {
            None
        };
        rows.push(ExpansionRow {
            eps: e,
            measured: m.value,
            quad_error: m.error,
            regressor: x,
            deviation,
            ratio: deviation / x,
            residual: (deviation - coef * x).abs() / x.abs(),
            two_point,
        });
    }
    let last = rows.last().unwrap();
    let fitted = if log_kind { last.two_point.unwrap() } else { last.ratio };
    let ls_coefficient = log_kind.then(|| {
        let xs: Vec<f64> = eps.iter().map(|e| e.ln()).collect();
        let ys: Vec<f64> = rows.iter().map(|r| r.deviation / (r.eps * r.eps)).collect();
        ls_slope(&xs, &ys)
    });
    let relative_error = if coef != 0.0 {
        (fitted - coef).abs() / coef.abs()
    } else {
        fitted.abs() / scale
    };
    Ok(ExpansionReport {
        schema_version: 1,
        expansion: kind,
        n: dims.n(),
        p: dims.p(),
        dp_laplacian: prob.dp_laplacian(),
        dq_laplacian: prob.dq_laplacian(),
        f0: prob.f0(),
        delta: prob.delta().is_finite().then_some(prob.delta()),
        regressor: kind.regressor_name().to_string(),
        guards: guard_flags(&dims),
        guards_overridden: override_guards && !kind.guard_holds(&dims),
        closed_leading: lead,
        closed_coefficient: coef,
        fitted_coefficient: fitted,
        ls_coefficient,
        reference_scale: scale,
        relative_error,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn eps_sequences() {
        let s = eps_sequence(2f64.powi(-4), 2f64.powi(-9)).unwrap();
        assert_eq!(s, default_eps_sequence());
        assert!(eps_sequence(0.1, 0.2).is_err());
        assert!(eps_sequence(1.0, 0.1).is_err());
        assert!(check_eps(&[0.1, 0.2], 2).is_err());
        assert!(check_eps(&[0.1], 2).is_err());
    }

    #[test]
    fn closed_constants_n5_p2() {
        let prob = EnergyProblem::isotropic(5, 2.0, 10.0, -10.0, 0.0).unwrap();
        let (a0, a1) = closed_a0_a1(&prob).unwrap();
        let m_q2 = 5.0 * PI.powi(3) / 96.0;
        assert!((a1 - 1.5 * m_q2).abs() < 1e-12);
        assert!((a1_without_half(&prob).unwrap() - 3.0 * m_q2).abs() < 1e-12);
        assert!((a0 - Moment::Q0.closed_form(&prob.dims()).unwrap()).abs() < 1e-15);
        let (_, b1) = closed_b0_b1(&prob).unwrap();
        assert!((b1 + 2.5 * Moment::G2.closed_form(&prob.dims()).unwrap()).abs() < 1e-12);
        assert!(b1 < 0.0);
    }

    #[test]
    fn flat_exponents_have_no_correction() {
        let prob = EnergyProblem::isotropic(5, 2.0, 0.0, 0.0, 0.0).unwrap();
        assert_eq!(closed_a0_a1(&prob).unwrap().1, 0.0);
        assert_eq!(closed_b0_b1(&prob).unwrap().1, 0.0);
        let a0 = closed_a0_a1(&prob).unwrap().0;
        // only the cut-off tail separates the measured value from A0
        let m = expansion_lq(&prob, 2f64.powi(-8)).unwrap();
        assert!((m - a0).abs() / a0 < 1e-10);
    }

    #[test]
    fn guard_errors_name_the_bound() {
        let prob = EnergyProblem::isotropic(5, 2.3, 0.0, 0.0, 0.0).unwrap();
        match expansion_lp(&prob, 0.1) {
            Err(Error::Guard { guard, .. }) => assert_eq!(guard, "p < sqrt(n)"),
            other => panic!("{other:?}"),
        }
        assert!(expansion_grad(&prob, 0.1).is_err());
        assert!(expansion_lq(&prob, 0.1).is_ok());
    }

    #[test]
    fn full_space_bubble_reproduces_moments() {
        let prob = EnergyProblem::isotropic(5, 2.0, 0.0, 0.0, 0.0)
            .unwrap()
            .with_delta(f64::INFINITY)
            .unwrap();
        let d = prob.dims();
        for eps in [0.5, 0.01] {
            let lq = expansion_lq(&prob, eps).unwrap();
            assert!((lq / Moment::Q0.closed_form(&d).unwrap() - 1.0).abs() < 1e-10);
            let g = expansion_grad(&prob, eps).unwrap();
            assert!((g / Moment::G0.closed_form(&d).unwrap() - 1.0).abs() < 1e-10);
            let lp = expansion_lp(&prob, eps).unwrap();
            assert!((lp / eps.powi(2) / Moment::P0.closed_form(&d).unwrap() - 1.0).abs() < 1e-9);
        }
    }
}
