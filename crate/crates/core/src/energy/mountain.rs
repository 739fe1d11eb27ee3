use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::model::{EnergyProblem, Expansion};
use crate::error::{Error, Result};
use crate::instanton::{d_np, energy_threshold, k_np, normalization_constant, u_eps, u_eps_derivative, Moment};
use crate::modular::{luxemburg_norm, DiscreteFunction, ExponentField, Measure, RadialGrid};

const PANEL_ORDER: usize = 30;
const GOLDEN_TOL: f64 = 1e-8;

/// `J(t u)` for a fixed sampled `u`, with the logarithms of `|u|` and
/// `|u'|` precomputed so the ray can be scanned cheaply.
#[derive(Debug, Clone)]
pub struct RayEnergy {
    weights: Vec<f64>,
    p: Vec<f64>,
    q: Vec<f64>,
    h: Vec<f64>,
    ln_grad: Vec<f64>,
    ln_value: Vec<f64>,
}

fn ln_abs(x: f64) -> f64 {
    if x == 0.0 {
        f64::NEG_INFINITY
    } else {
        x.abs().ln()
    }
}

impl RayEnergy {
    pub fn new(prob: &EnergyProblem, u: &DiscreteFunction) -> Result<Self> {
        let grid = u.grid();
        if grid.measure() != Measure::Radial(prob.dims().n()) {
            return Err(Error::GridMismatch(format!(
                "grid measure {:?} does not match dimension {}",
                grid.measure(),
                prob.dims().n()
            )));
        }
        let du = u
            .derivative()
            .ok_or_else(|| Error::Domain("J needs the radial derivative of u".into()))?;
        let edge = |v: &[f64]| {
            let sup = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            v.last().unwrap().abs() <= 1e-12 * sup
        };
        if !edge(u.values()) || !edge(du) {
            return Err(Error::Domain(format!(
                "grid ending at r = {} does not cover the support of u",
                grid.r_max()
            )));
        }
        let nodes = grid.nodes();
        Ok(Self {
            weights: grid.weights().to_vec(),
            p: nodes.iter().map(|&r| prob.p_at(r)).collect(),
            q: nodes.iter().map(|&r| prob.q_at(r)).collect(),
            h: nodes.iter().map(|&r| prob.h_at(r)).collect(),
            ln_grad: du.iter().map(|&d| ln_abs(d)).collect(),
            ln_value: u.values().iter().map(|&v| ln_abs(v)).collect(),
        })
    }

    /// `J(t u)`.
    pub fn eval(&self, t: f64) -> f64 {
        if t == 0.0 {
            return 0.0;
        }
        let lt = t.abs().ln();
        let mut sum = 0.0;
        for i in 0..self.weights.len() {
            let w = self.weights[i];
            if w == 0.0 {
                continue;
            }
            let (p, q) = (self.p[i], self.q[i]);
            let g = (p * (lt + self.ln_grad[i])).exp();
            let v = lt + self.ln_value[i];
            let lower = self.h[i] * (p * v).exp();
            sum += w * ((g + lower) / p - (q * v).exp() / q);
        }
        sum
    }

    /// `(∫|∇u|^{p(x)}, ∫h|u|^{p(x)}, ∫|u|^{q(x)})` at `t = 1`.
    pub fn parts(&self) -> (f64, f64, f64) {
        let mut out = (0.0, 0.0, 0.0);
        for i in 0..self.weights.len() {
            let w = self.weights[i];
            out.0 += w * (self.p[i] * self.ln_grad[i]).exp();
            out.1 += w * self.h[i] * (self.p[i] * self.ln_value[i]).exp();
            out.2 += w * (self.q[i] * self.ln_value[i]).exp();
        }
        out
    }
}

/// `J(u) = ∫ (|∇u|^{p(x)} + h|u|^{p(x)})/p(x) - ∫ |u|^{q(x)}/q(x)` by grid
/// quadrature; `u` must carry its radial derivative.
pub fn functional_j(u: &DiscreteFunction, prob: &EnergyProblem) -> Result<f64> {
    Ok(RayEnergy::new(prob, u)?.eval(1.0))
}

/// Radial mesh for `v_ε`: panels at `ε 2^k` through the core, then the
/// cut-off annulus, or a long geometric tail for the full-space bubble.
pub fn ray_grid(prob: &EnergyProblem, eps: f64) -> Result<Arc<RadialGrid>> {
    let dims = prob.dims();
    let (n, p) = (dims.nf(), dims.p());
    let delta = prob.delta();
    let mut breaks = vec![0.0];
    if delta.is_finite() {
        breaks.extend((-6..=8).map(|k| eps * 2f64.powi(k)).filter(|r| *r < delta));
        breaks.extend([delta, 1.5 * delta, 2.0 * delta]);
    } else {
        // slowest algebraic decay among the energy densities of U
        let mut decay = (n - p) / (p - 1.0);
        if prob.h0() != 0.0 {
            decay = decay.min((n - p) * p / (p - 1.0) - n);
        }
        if decay <= 0.0 {
            return Err(Error::InvalidParams(format!(
                "full-space bubble has infinite energy for n = {n}, p = {p}"
            )));
        }
        let reach = 10f64.powf(14.0 / decay).min(10f64.powf(250.0 / (n - 1.0)) / eps);
        let mut k = -6;
        while 2f64.powi(k) < reach {
            breaks.push(eps * 2f64.powi(k));
            k += 1;
        }
        breaks.push(eps * reach);
    }
    Ok(Arc::new(RadialGrid::from_breaks(Measure::Radial(dims.n()), &breaks, PANEL_ORDER)?))
}

/// The normalized test function `v_ε = c u_ε` sampled with its derivative.
pub fn bubble_direction(prob: &EnergyProblem, eps: f64) -> Result<DiscreteFunction> {
    let bp = prob.bubble(eps)?;
    let c = normalization_constant(&prob.dims())?;
    let grid = ray_grid(prob, eps)?;
    DiscreteFunction::from_fns(grid, |r| c * u_eps(&bp, r), |r| c * u_eps_derivative(&bp, r))
}

/// Golden-section maximum of `t ↦ J(t v)` on `[0, t₀]`, where `t₀` doubles
/// from 2 until `J(t₀ v) < 0`.
pub fn maximize_on_ray(energy: &RayEnergy) -> Result<(f64, f64)> {
    let mut t0 = 2.0;
    while energy.eval(t0) >= 0.0 {
        t0 *= 2.0;
        if t0 > 1e12 {
            return Err(Error::NoNegativeEnergy { t_max: t0 });
        }
    }
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (0.0, t0);
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let mut fc = energy.eval(c);
    let mut fd = energy.eval(d);
    while b - a > GOLDEN_TOL {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = energy.eval(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = energy.eval(d);
        }
    }
    let t = 0.5 * (a + b);
    Ok((t, energy.eval(t)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MPRow {
    pub eps: f64,
    pub sup: f64,
    pub t_eps: f64,
    /// `sup - (1/n) K^{-n}`
    pub margin: f64,
    pub regressor: f64,
    /// `margin / regressor`
    pub ratio: f64,
}

/// `sup_{t>0} J(t v_ε)` and where it is attained.
pub fn sup_over_ray(prob: &EnergyProblem, eps: f64) -> Result<MPRow> {
    let dims = prob.dims();
    let v = bubble_direction(prob, eps)?;
    let energy = RayEnergy::new(prob, &v)?;
    let (t, sup) = maximize_on_ray(&energy)?;
    let margin = sup - energy_threshold(&dims)?;
    let regressor = branch_of(dims.p()).regressor(eps, dims.p());
    Ok(MPRow {
        eps,
        sup,
        t_eps: t,
        margin,
        regressor,
        ratio: margin / regressor,
    })
}

/// The normalized constants of the bubble integrals of `v_ε`:
/// `∫|v_ε|^{q} = K^{-n} + A ε² ln ε + …`, `∫|∇v_ε|^{p} = K^{-n} + B ε² ln ε + …`,
/// `∫|v_ε|^{p} = C ε^p + …`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalizedConstants {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

/// `A = -(Δq/(2p*)) K^{-n} ‖U‖_{p*}^{-p*} ∫|x|²U^{p*}`,
/// `B = -(Δp/(2p)) K^{p-n} ‖U‖_{p*}^{-p} ∫|x|²|∇U|^p`,
/// `C = K^{p-n} ‖U‖_{p*}^{-p} ‖U‖_p^p`. All three guards must hold.
pub fn normalized_abc(prob: &EnergyProblem) -> Result<NormalizedConstants> {
    let dims = prob.dims();
    for e in Expansion::ALL {
        e.check_guard(&dims)?;
    }
    let (n, p, ps) = (dims.nf(), dims.p(), dims.p_star());
    let k = k_np(&dims)?;
    let m_q0 = Moment::Q0.closed_form(&dims)?;
    let grad_scale = k.powf(p - n) * m_q0.powf(-p / ps);
    Ok(NormalizedConstants {
        a: -(prob.dq_laplacian() / (2.0 * ps)) * k.powf(-n) * Moment::Q2.closed_form(&dims)? / m_q0,
        b: -(prob.dp_laplacian() / (2.0 * p)) * grad_scale * Moment::G2.closed_form(&dims)?,
        c: grad_scale * Moment::P0.closed_form(&dims)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CondResult {
    /// `-Δp(0)`
    pub lhs: f64,
    /// `-Δq(0) (p/p*)² D(n,p)`
    pub rhs: f64,
    pub d_np: f64,
    pub holds: bool,
}

/// Strict inequality `-Δp(0) < -Δq(0) (p/p*)² D(n,p)`.
pub fn cond_check(prob: &EnergyProblem) -> Result<CondResult> {
    let dims = prob.dims();
    let d = d_np(&dims)?;
    let ratio = dims.p() / dims.p_star();
    let lhs = -prob.dp_laplacian();
    let rhs = -prob.dq_laplacian() * ratio * ratio * d;
    Ok(CondResult {
        lhs,
        rhs,
        d_np: d,
        holds: lhs < rhs,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Branch {
    /// `p ≥ 2`: correction of order `ε² ln ε`, governed by the curvatures.
    #[serde(rename = "p>=2")]
    Curvature,
    /// `p < 2`: correction of order `ε^p`, governed by `h(0)`.
    #[serde(rename = "p<2")]
    LowerOrder,
}

impl Branch {
    pub fn regressor(self, eps: f64, p: f64) -> f64 {
        match self {
            Branch::Curvature => eps * eps * eps.ln(),
            Branch::LowerOrder => eps.powf(p),
        }
    }

    pub fn regressor_name(self) -> &'static str {
        match self {
            Branch::Curvature => "eps^2 ln eps",
            Branch::LowerOrder => "eps^p",
        }
    }
}

pub fn branch_of(p: f64) -> Branch {
    if p >= 2.0 {
        Branch::Curvature
    } else {
        Branch::LowerOrder
    }
}

/// Position of the mountain-pass level relative to the threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LevelSide {
    Below,
    AtThreshold,
    NotBelow,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MPReport {
    pub schema_version: u32,
    pub n: u32,
    pub p: f64,
    pub dp_laplacian: f64,
    pub dq_laplacian: f64,
    pub h0: f64,
    pub delta: Option<f64>,
    pub branch: Branch,
    pub regressor: String,
    pub threshold: f64,
    /// Margins within `±band` count as at the threshold.
    pub band: f64,
    pub rows: Vec<MPRow>,
    /// `A/p* - B/p` (`p ≥ 2`) or `h(0)C/p` (`p < 2`).
    pub predicted_coefficient: Option<f64>,
    /// Coefficient obtained by inserting the bubble expansions into
    /// `J(v_ε)`: `B/p - A/p*` (`p ≥ 2`) or `h(0)C/p` (`p < 2`).
    pub direct_coefficient: Option<f64>,
    /// `margin / regressor` at the smallest scale.
    pub fitted_coefficient: f64,
    /// `-f₁'(1)/f₀''(1)` with the predicted correction.
    pub t_shift_predicted: Option<f64>,
    /// `(t_ε - 1) / regressor` at the smallest scale.
    pub t_shift_observed: f64,
    pub cond: Option<CondResult>,
    pub q_local_max: bool,
    pub p_local_min: bool,
    pub prediction: LevelSide,
    pub observed: LevelSide,
    pub verdict_matches: bool,
}

impl MPReport {
    pub fn write_rows_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for row in &self.rows {
            w.serialize(row)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn predicted_side(prob: &EnergyProblem, branch: Branch, cond: Option<&CondResult>) -> LevelSide {
    if prob.dp_laplacian() == 0.0 && prob.dq_laplacian() == 0.0 && prob.h0() == 0.0 {
        return LevelSide::AtThreshold;
    }
    let below = match branch {
        Branch::Curvature => cond.is_some_and(|c| c.holds),
        Branch::LowerOrder => prob.h0() < 0.0,
    };
    if below {
        LevelSide::Below
    } else {
        LevelSide::NotBelow
    }
}

fn observed_side(margin: f64, band: f64) -> LevelSide {
    if margin < -band {
        LevelSide::Below
    } else if margin <= band {
        LevelSide::AtThreshold
    } else {
        LevelSide::NotBelow
    }
}

fn sides_match(predicted: LevelSide, observed: LevelSide) -> bool {
    match predicted {
        LevelSide::Below => observed == LevelSide::Below,
        LevelSide::AtThreshold => observed == LevelSide::AtThreshold,
        LevelSide::NotBelow => observed != LevelSide::Below,
    }
}

/// Scans `sup_t J(t v_ε)` along `eps` and compares the margin at the smallest
/// scale with the predicted side of the threshold. `band_rel` is the
/// tolerance band relative to the threshold.
pub fn mountain_pass_report(prob: &EnergyProblem, eps: &[f64], band_rel: f64) -> Result<MPReport> {
    if eps.is_empty() || eps.iter().any(|e| !(*e > 0.0 && *e < 1.0)) || eps.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::InvalidParams("scales must lie in (0, 1) and strictly decrease".into()));
    }
    if !(band_rel >= 0.0) {
        return Err(Error::InvalidParams(format!("band {band_rel} must be nonnegative")));
    }
    let dims = prob.dims();
    let (n, p, ps) = (dims.nf(), dims.p(), dims.p_star());
    let branch = branch_of(p);
    let threshold = energy_threshold(&dims)?;
    let band = band_rel * threshold;
    let rows: Vec<MPRow> = eps.par_iter().map(|&e| sup_over_ray(prob, e)).collect::<Result<_>>()?;

    let abc = normalized_abc(prob).ok();
    let cond = cond_check(prob).ok();
    let f0_second = (p - ps) * k_np(&dims)?.powf(-n);
    let (predicted, direct, slope) = match (branch, abc) {
        (Branch::Curvature, Some(k)) => (Some(k.a / ps - k.b / p), Some(k.b / p - k.a / ps), Some(k.a - k.b)),
        (Branch::LowerOrder, Some(k)) => {
            let f1 = prob.h0() * k.c / p;
            (Some(f1), Some(f1), Some(prob.h0() * k.c))
        }
        (_, None) => (None, None, None),
    };
    let last = *rows.last().unwrap();
    let prediction = predicted_side(prob, branch, cond.as_ref());
    let observed = observed_side(last.margin, band);
    Ok(MPReport {
        schema_version: 1,
        n: dims.n(),
        p,
        dp_laplacian: prob.dp_laplacian(),
        dq_laplacian: prob.dq_laplacian(),
        h0: prob.h0(),
        delta: prob.delta().is_finite().then_some(prob.delta()),
        branch,
        regressor: branch.regressor_name().to_string(),
        threshold,
        band,
        fitted_coefficient: last.ratio,
        t_shift_predicted: slope.map(|s| -s / f0_second),
        t_shift_observed: (last.t_eps - 1.0) / last.regressor,
        rows,
        predicted_coefficient: predicted,
        direct_coefficient: direct,
        cond,
        q_local_max: prob.q_model().is_local_max(),
        p_local_min: prob.p_model().is_local_min(),
        prediction,
        observed,
        verdict_matches: sides_match(prediction, observed),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeometryOptions {
    pub directions: usize,
    /// `‖∇v‖_{p(x)}` of the sampled directions.
    pub radius: f64,
    pub seed: u64,
    /// Scale of the bubble used for the negative-energy point.
    pub eps: f64,
}

impl Default for GeometryOptions {
    fn default() -> Self {
        Self {
            directions: 100,
            radius: 1e-3,
            seed: 0,
            eps: 2f64.powi(-6),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeometryReport {
    pub j_zero: f64,
    pub radius: f64,
    pub directions: usize,
    pub positive: usize,
    pub min_energy: f64,
    pub max_energy: f64,
    /// `min (∫|∇v|^{p} + h|v|^{p}) / ‖∇v‖^{p⁺}` over the sampled directions.
    pub empirical_coercivity: f64,
    pub t_star: f64,
    /// `J(10 t* v_ε)`
    pub j_beyond: f64,
    pub passed: bool,
}

/// Random radial direction `Σ aⱼ (1 - (r/S)²)^{kⱼ}` vanishing at `r = S`.
fn random_direction(grid: &Arc<RadialGrid>, support: f64, rng: &mut ChaCha8Rng) -> Result<DiscreteFunction> {
    let terms: Vec<(f64, i32)> = (0..rng.gen_range(1..=3))
        .map(|_| (rng.gen_range(-1.0..1.0), rng.gen_range(2..=6)))
        .collect();
    let f = |r: f64| {
        let s = 1.0 - (r / support).powi(2);
        terms.iter().map(|(a, k)| a * s.powi(*k)).sum::<f64>()
    };
    let df = |r: f64| {
        let s = 1.0 - (r / support).powi(2);
        terms
            .iter()
            .map(|(a, k)| -a * 2.0 * *k as f64 * r / (support * support) * s.powi(k - 1))
            .sum::<f64>()
    };
    DiscreteFunction::from_fns(grid.clone(), f, df)
}

/// Mountain-pass geometry on sampled functions: `J(0) = 0`, `J > 0` on a
/// small sphere `‖∇v‖_{p(x)} = r`, and `J(10 t* v_ε) < 0`.
pub fn mp_geometry_check(prob: &EnergyProblem, opts: &GeometryOptions) -> Result<GeometryReport> {
    if opts.directions == 0 || !(opts.radius > 0.0) {
        return Err(Error::InvalidParams("need at least one direction and a positive radius".into()));
    }
    let n = prob.dims().n();
    let support = if prob.delta().is_finite() { 2.0 * prob.delta() } else { 2.0 };
    let grid = Arc::new(RadialGrid::uniform(Measure::Radial(n), support, 16, 16)?);
    let p_field = ExponentField::from_fn(grid.clone(), |r| prob.p_at(r))?;
    let p_plus = p_field.p_plus();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);

    let mut positive = 0;
    let mut min_energy = f64::INFINITY;
    let mut max_energy = f64::NEG_INFINITY;
    let mut coercivity = f64::INFINITY;
    for _ in 0..opts.directions {
        let dir = random_direction(&grid, support, &mut rng)?;
        let norm = luxemburg_norm(&dir.derivative_function()?, &p_field)?;
        if norm == 0.0 {
            continue;
        }
        let v = dir.scaled(opts.radius / norm);
        let energy = RayEnergy::new(prob, &v)?;
        let j = energy.eval(1.0);
        if j > 0.0 {
            positive += 1;
        }
        min_energy = min_energy.min(j);
        max_energy = max_energy.max(j);
        let (grad, lower, _) = energy.parts();
        coercivity = coercivity.min((grad + lower) / opts.radius.powf(p_plus));
    }

    let bubble = bubble_direction(prob, opts.eps)?;
    let energy = RayEnergy::new(prob, &bubble)?;
    let (t_star, _) = maximize_on_ray(&energy)?;
    let j_zero = energy.eval(0.0);
    let j_beyond = energy.eval(10.0 * t_star);
    Ok(GeometryReport {
        j_zero,
        radius: opts.radius,
        directions: opts.directions,
        positive,
        min_energy,
        max_energy,
        empirical_coercivity: coercivity,
        t_star,
        j_beyond,
        passed: j_zero == 0.0 && positive == opts.directions && j_beyond < 0.0,
    })
}
