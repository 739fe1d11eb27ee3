//! Variable-exponent modulars `ρ(u) = ∫|u|^{p(x)}` and Luxemburg norms for
//! radial functions sampled on a one-dimensional mesh.

use std::io::{Read, Write};
use std::path::Path;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::composite_rule;
use crate::special::sphere_area;

/// Measure carried by a [`RadialGrid`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Measure {
    /// Radial functions on ℝⁿ: `dx = ω_{n-1} r^{n-1} dr`.
    Radial(u32),
    /// Plain Lebesgue measure on an interval.
    Line,
}

/// Quadrature nodes `0 = r₀ < r₁ < … < r_M = r_max` with weights that
/// already contain the measure. The two end nodes carry zero weight; they are
/// kept so that sampled profiles include their values at the origin and at
/// the outer edge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialGrid {
    measure: Measure,
    r_max: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl RadialGrid {
    /// Composite Gauss–Legendre rule of `order` nodes on each panel
    /// `[breaks[i], breaks[i+1]]`; `breaks` must start at 0 and increase.
    pub fn from_breaks(measure: Measure, breaks: &[f64], order: usize) -> Result<Self> {
        if breaks.len() < 2 || breaks[0] != 0.0 {
            return Err(Error::InvalidParams("grid breaks must start at 0 and contain a panel".into()));
        }
        if breaks.windows(2).any(|w| !(w[1] > w[0])) || !breaks.iter().all(|b| b.is_finite()) {
            return Err(Error::InvalidParams("grid breaks must be finite and strictly increasing".into()));
        }
        if order == 0 {
            return Err(Error::InvalidParams("panel order must be positive".into()));
        }
        let (rs, ws) = composite_rule(breaks, order);
        let (omega, power) = match measure {
            Measure::Radial(n) => (sphere_area(n)?, n as i32 - 1),
            Measure::Line => (1.0, 0),
        };
        let mut nodes = Vec::with_capacity(rs.len() + 1);
        let mut weights = Vec::with_capacity(rs.len() + 1);
        nodes.push(0.0);
        weights.push(0.0);
        for (r, w) in rs.into_iter().zip(ws) {
            nodes.push(r);
            weights.push(omega * r.powi(power) * w);
        }
        let r_max = *breaks.last().unwrap();
        nodes.push(r_max);
        weights.push(0.0);
        Ok(Self {
            measure,
            r_max,
            nodes,
            weights,
        })
    }

    /// `panels` equal panels on `[0, r_max]`.
    pub fn uniform(measure: Measure, r_max: f64, panels: usize, order: usize) -> Result<Self> {
        if !(r_max > 0.0) || panels == 0 {
            return Err(Error::InvalidParams("uniform grid needs r_max > 0 and at least one panel".into()));
        }
        let breaks: Vec<f64> = (0..=panels).map(|i| r_max * i as f64 / panels as f64).collect();
        Self::from_breaks(measure, &breaks, order)
    }

    /// Panels that double in width from `r_min` out to `r_max`, preceded by
    /// `[0, r_min]`. Suited to profiles concentrated near the origin.
    pub fn geometric(measure: Measure, r_min: f64, r_max: f64, order: usize) -> Result<Self> {
        if !(r_min > 0.0 && r_max > r_min) {
            return Err(Error::InvalidParams("geometric grid needs 0 < r_min < r_max".into()));
        }
        let mut breaks = vec![0.0, r_min];
        while *breaks.last().unwrap() * 2.0 < r_max {
            let next = breaks.last().unwrap() * 2.0;
            breaks.push(next);
        }
        breaks.push(r_max);
        Self::from_breaks(measure, &breaks, order)
    }

    pub fn measure(&self) -> Measure {
        self.measure
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `Σ wᵢ`, the measure of the ball (or interval) of radius `r_max`.
    pub fn volume(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// `Σ wᵢ g(rᵢ)`.
    pub fn integrate(&self, g: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&r, &w)| w * g(r)).sum()
    }
}

fn same_grid(a: &Arc<RadialGrid>, b: &Arc<RadialGrid>) -> Result<()> {
    if Arc::ptr_eq(a, b) || a == b {
        Ok(())
    } else {
        Err(Error::GridMismatch("operands are sampled on different grids".into()))
    }
}

/// Real values sampled on the nodes of a grid, optionally with the radial
/// derivative.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteFunction {
    grid: Arc<RadialGrid>,
    values: Vec<f64>,
    derivative: Option<Vec<f64>>,
}

fn check_samples(grid: &RadialGrid, values: &[f64], what: &str) -> Result<()> {
    if values.len() != grid.len() {
        return Err(Error::GridMismatch(format!(
            "{what} has {} samples, grid has {} nodes",
            values.len(),
            grid.len()
        )));
    }
    if let Some((i, v)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
        return Err(Error::Domain(format!("{what} is not finite at node {i} ({v})")));
    }
    Ok(())
}

impl DiscreteFunction {
    pub fn new(grid: Arc<RadialGrid>, values: Vec<f64>) -> Result<Self> {
        check_samples(&grid, &values, "function")?;
        Ok(Self {
            grid,
            values,
            derivative: None,
        })
    }

    pub fn with_derivative(mut self, derivative: Vec<f64>) -> Result<Self> {
        check_samples(&self.grid, &derivative, "derivative")?;
        self.derivative = Some(derivative);
        Ok(self)
    }

    pub fn from_fn(grid: Arc<RadialGrid>, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.nodes().iter().map(|&r| f(r)).collect();
        Self::new(grid, values)
    }

    /// Samples `f` and its derivative `df`.
    pub fn from_fns(grid: Arc<RadialGrid>, f: impl Fn(f64) -> f64, df: impl Fn(f64) -> f64) -> Result<Self> {
        let derivative = grid.nodes().iter().map(|&r| df(r)).collect();
        Self::from_fn(grid, f)?.with_derivative(derivative)
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn derivative(&self) -> Option<&[f64]> {
        self.derivative.as_deref()
    }

    /// The derivative samples as a function on the same grid.
    pub fn derivative_function(&self) -> Result<Self> {
        let d = self
            .derivative
            .clone()
            .ok_or_else(|| Error::Domain("function carries no derivative samples".into()))?;
        Self::new(self.grid.clone(), d)
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| c * v).collect(),
            derivative: self.derivative.as_ref().map(|d| d.iter().map(|v| c * v).collect()),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        same_grid(&self.grid, &other.grid)?;
        let derivative = match (&self.derivative, &other.derivative) {
            (Some(a), Some(b)) => Some(a.iter().zip(b).map(|(x, y)| x + y).collect()),
            _ => None,
        };
        Ok(Self {
            grid: self.grid.clone(),
            values: self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect(),
            derivative,
        })
    }

    /// Pointwise product (the derivative is dropped).
    pub fn mul(&self, other: &Self) -> Result<Self> {
        same_grid(&self.grid, &other.grid)?;
        Self::new(
            self.grid.clone(),
            self.values.iter().zip(&other.values).map(|(a, b)| a * b).collect(),
        )
    }

    /// True when every sample with positive weight vanishes.
    pub fn is_zero(&self) -> bool {
        self.values
            .iter()
            .zip(self.grid.weights())
            .all(|(v, w)| *v == 0.0 || *w == 0.0)
    }

    /// Largest `|u|` over the weighted nodes.
    pub fn sup_abs(&self) -> f64 {
        self.values
            .iter()
            .zip(self.grid.weights())
            .filter(|(_, w)| **w > 0.0)
            .fold(0.0, |m, (v, _)| m.max(v.abs()))
    }

    /// Writes `r,value` rows.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["r", "value"])?;
        for (r, v) in self.grid.nodes().iter().zip(&self.values) {
            w.write_record([format!("{r:e}"), format!("{v:e}")])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }

    /// Reads `r,value` rows written by [`DiscreteFunction::write_csv`]; the
    /// radii must coincide with the nodes of `grid`.
    pub fn read_csv<R: Read>(grid: Arc<RadialGrid>, input: R) -> Result<Self> {
        let mut reader = csv::Reader::from_reader(input);
        let mut values = Vec::with_capacity(grid.len());
        for (i, record) in reader.deserialize::<(f64, f64)>().enumerate() {
            let (r, v) = record?;
            let node = grid
                .nodes()
                .get(i)
                .copied()
                .ok_or_else(|| Error::GridMismatch(format!("more rows than the {} grid nodes", grid.len())))?;
            if (r - node).abs() > 1e-12 * node.abs().max(1e-300) {
                return Err(Error::GridMismatch(format!("row {i}: radius {r} does not match node {node}")));
            }
            values.push(v);
        }
        Self::new(grid, values)
    }

    pub fn load_csv(grid: Arc<RadialGrid>, path: impl AsRef<Path>) -> Result<Self> {
        Self::read_csv(grid, std::fs::File::open(path)?)
    }
}

/// A variable exponent sampled on the grid, with `p⁻ = inf p` and
/// `p⁺ = sup p` cached.
#[derive(Debug, Clone, PartialEq)]
pub struct ExponentField {
    grid: Arc<RadialGrid>,
    values: Vec<f64>,
    p_minus: f64,
    p_plus: f64,
}

impl ExponentField {
    /// Requires `1 < p(x) < ∞` at every node.
    pub fn new(grid: Arc<RadialGrid>, values: Vec<f64>) -> Result<Self> {
        check_samples(&grid, &values, "exponent")?;
        if let Some(v) = values.iter().find(|v| !(**v > 1.0)) {
            return Err(Error::Domain(format!("exponent must exceed 1, got {v}")));
        }
        Ok(Self::unchecked(grid, values))
    }

    // Exponents down to 1 are legitimate for the Hölder conjugate.
    fn unchecked(grid: Arc<RadialGrid>, values: Vec<f64>) -> Self {
        let p_minus = values.iter().copied().fold(f64::INFINITY, f64::min);
        let p_plus = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Self {
            grid,
            values,
            p_minus,
            p_plus,
        }
    }

    pub fn from_fn(grid: Arc<RadialGrid>, p: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.nodes().iter().map(|&r| p(r)).collect();
        Self::new(grid, values)
    }

    pub fn constant(grid: Arc<RadialGrid>, p: f64) -> Result<Self> {
        let len = grid.len();
        Self::new(grid, vec![p; len])
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn p_minus(&self) -> f64 {
        self.p_minus
    }

    pub fn p_plus(&self) -> f64 {
        self.p_plus
    }
}

/// `ρ(u) = Σ wᵢ |uᵢ|^{p(rᵢ)}`.
pub fn modular_rho(u: &DiscreteFunction, p: &ExponentField) -> Result<f64> {
    same_grid(&u.grid, &p.grid)?;
    Ok(rho_scaled(u, p, 1.0))
}

fn rho_scaled(u: &DiscreteFunction, p: &ExponentField, lambda: f64) -> f64 {
    u.values
        .iter()
        .zip(&p.values)
        .zip(u.grid.weights())
        .map(|((v, e), w)| if *w == 0.0 || *v == 0.0 { 0.0 } else { w * (v.abs() / lambda).powf(*e) })
        .sum()
}

/// Luxemburg norm `inf{λ > 0 : ρ(u/λ) ≤ 1}`, 0 for `u ≡ 0`.
pub fn luxemburg_norm(u: &DiscreteFunction, p: &ExponentField) -> Result<f64> {
    same_grid(&u.grid, &p.grid)?;
    if u.is_zero() {
        return Ok(0.0);
    }
    let rho = |lambda: f64| rho_scaled(u, p, lambda);
    // ρ(u/λ) ≤ 1 on the upper end, > 1 on the lower end
    let mut hi = u.sup_abs().max(f64::MIN_POSITIVE);
    let mut lo = hi;
    let mut steps = 0;
    while rho(hi) > 1.0 {
        hi *= 2.0;
        steps += 1;
        if steps > 4000 || !hi.is_finite() {
            return Err(Error::Bracket(format!("no upper bracket for the Luxemburg norm below {hi}")));
        }
    }
    steps = 0;
    while rho(lo) <= 1.0 {
        lo *= 0.5;
        steps += 1;
        if steps > 4000 || lo == 0.0 {
            return Err(Error::Bracket(format!("no lower bracket for the Luxemburg norm above {lo}")));
        }
    }
    if lo > hi {
        return Err(Error::Bracket(format!("inconsistent bracket [{hi}, {lo}]")));
    }
    for _ in 0..200 {
        if hi - lo <= 1e-13 * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if rho(mid) > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Outcome of the Hölder-type inequality
/// `‖fg‖_s ≤ ((s/p)⁺ + (s/q)⁺) ‖f‖_p ‖g‖_q` with `1/s = 1/p + 1/q`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HolderReport {
    pub lhs: f64,
    pub bound: f64,
    pub slack: f64,
    pub s_minus: f64,
    pub s_plus: f64,
}

impl HolderReport {
    pub fn holds(&self, tol: f64) -> bool {
        self.slack >= -tol
    }
}

pub fn holder_check(
    f: &DiscreteFunction,
    g: &DiscreteFunction,
    p: &ExponentField,
    q: &ExponentField,
) -> Result<HolderReport> {
    same_grid(&f.grid, &g.grid)?;
    same_grid(&f.grid, &p.grid)?;
    same_grid(&f.grid, &q.grid)?;
    let s_values: Vec<f64> = p
        .values
        .iter()
        .zip(&q.values)
        .map(|(a, b)| 1.0 / (1.0 / a + 1.0 / b))
        .collect();
    if let Some(s) = s_values.iter().find(|s| !(s.is_finite() && **s >= 1.0 - 1e-14)) {
        return Err(Error::Domain(format!("conjugate exponent s = {s} falls below 1")));
    }
    let s = ExponentField::unchecked(f.grid.clone(), s_values);
    let sup_ratio = |e: &ExponentField| {
        s.values
            .iter()
            .zip(&e.values)
            .fold(f64::NEG_INFINITY, |m, (a, b)| m.max(a / b))
    };
    let constant = sup_ratio(p) + sup_ratio(q);
    let lhs = luxemburg_norm(&f.mul(g)?, &s)?;
    let bound = constant * luxemburg_norm(f, p)? * luxemburg_norm(g, q)?;
    Ok(HolderReport {
        lhs,
        bound,
        slack: bound - lhs,
        s_minus: s.p_minus,
        s_plus: s.p_plus,
    })
}

/// One failed check in [`norm_modular_properties`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub case: usize,
    pub item: u8,
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct NormModularReport {
    pub cases: usize,
    /// Checks performed per item, index 0 is item 1.
    pub checks: [usize; 6],
    pub violations: Vec<Violation>,
}

impl NormModularReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

const PROPERTY_TOL: f64 = 1e-10;

fn le(a: f64, b: f64) -> bool {
    a <= b + PROPERTY_TOL * b.abs().max(a.abs()).max(1e-300)
}

/// Checks the norm–modular relations on each function of the batch:
///
/// 1. `ρ(u/‖u‖) = 1`
/// 2. `‖u‖ < 1 (= 1, > 1) ⇔ ρ(u) < 1 (= 1, > 1)`
/// 3. `‖u‖ > 1 ⇒ ‖u‖^{p⁻} ≤ ρ(u) ≤ ‖u‖^{p⁺}`
/// 4. `‖u‖ < 1 ⇒ ‖u‖^{p⁺} ≤ ρ(u) ≤ ‖u‖^{p⁻}`
/// 5. `u_k = u/k`: norms and modulars decrease together to 0
/// 6. `u_k = k u`: norms and modulars increase together without bound
///
/// Items 2–4 are evaluated on `u` rescaled to several norms on both sides of 1.
pub fn norm_modular_properties(batch: &[DiscreteFunction], p: &ExponentField) -> Result<NormModularReport> {
    let mut report = NormModularReport {
        cases: batch.len(),
        ..Default::default()
    };
    let (pm, pp) = (p.p_minus, p.p_plus);
    for (case, u) in batch.iter().enumerate() {
        let mut fail = |item: u8, detail: String| report.violations.push(Violation { case, item, detail });
        let norm = luxemburg_norm(u, p)?;
        if norm == 0.0 {
            continue;
        }
        let rho_unit = modular_rho(&u.scaled(1.0 / norm), p)?;
        report.checks[0] += 1;
        if (rho_unit - 1.0).abs() > PROPERTY_TOL {
            fail(1, format!("rho(u/|u|) = {rho_unit}"));
        }
        for target in [1e-3, 0.2, 0.7, 1.0, 1.5, 4.0, 1e3] {
            let v = u.scaled(target / norm);
            let nv = luxemburg_norm(&v, p)?;
            let rv = modular_rho(&v, p)?;
            report.checks[1] += 1;
            let consistent = if (nv - 1.0).abs() <= PROPERTY_TOL {
                (rv - 1.0).abs() <= 1e3 * PROPERTY_TOL
            } else if nv < 1.0 {
                rv < 1.0
            } else {
                rv > 1.0
            };
            if !consistent {
                fail(2, format!("norm {nv} but modular {rv}"));
            }
            if nv > 1.0 {
                report.checks[2] += 1;
                if !(le(nv.powf(pm), rv) && le(rv, nv.powf(pp))) {
                    fail(3, format!("norm {nv} > 1: modular {rv} outside [{}, {}]", nv.powf(pm), nv.powf(pp)));
                }
            } else if nv < 1.0 {
                report.checks[3] += 1;
                if !(le(nv.powf(pp), rv) && le(rv, nv.powf(pm))) {
                    fail(4, format!("norm {nv} < 1: modular {rv} outside [{}, {}]", nv.powf(pp), nv.powf(pm)));
                }
            }
        }
        let ks: Vec<f64> = (0..12).map(|j| 4f64.powi(j)).collect();
        for (item, grow) in [(5u8, false), (6u8, true)] {
            report.checks[item as usize - 1] += 1;
            let mut prev: Option<(f64, f64)> = None;
            let mut last = (0.0, 0.0);
            for &k in &ks {
                let v = u.scaled(if grow { k } else { 1.0 / k });
                let cur = (luxemburg_norm(&v, p)?, modular_rho(&v, p)?);
                if let Some((pn, pr)) = prev {
                    let monotone = if grow { cur.0 > pn && cur.1 > pr } else { cur.0 < pn && cur.1 < pr };
                    if !monotone {
                        fail(item, format!("sequence not monotone at k = {k}: {cur:?} after {:?}", (pn, pr)));
                    }
                }
                prev = Some(cur);
                last = cur;
            }
            let k_last = *ks.last().unwrap();
            let limit_ok = if grow {
                // ‖u_k‖ = k‖u‖ and ρ(u_k) ≥ ‖u_k‖^{p⁻} once ‖u_k‖ > 1
                (last.0 / (k_last * norm) - 1.0).abs() < 1e-9 && last.0 > 1.0 && le(last.0.powf(pm), last.1)
            } else {
                (last.0 * k_last / norm - 1.0).abs() < 1e-9 && last.0 < 1.0 && le(last.1, last.0.powf(pm))
            };
            if !limit_ok {
                fail(item, format!("limit check failed: final norm {}, modular {}", last.0, last.1));
            }
        }
    }
    Ok(report)
}

/// Random piecewise-constant exponent with values in `[lo, hi]`.
pub fn random_exponent_field<R: Rng>(grid: &Arc<RadialGrid>, lo: f64, hi: f64, rng: &mut R) -> Result<ExponentField> {
    let pieces = rng.gen_range(1..=5);
    let mut cuts: Vec<f64> = (0..pieces - 1).map(|_| rng.gen_range(0.0..grid.r_max())).collect();
    cuts.sort_by(f64::total_cmp);
    let levels: Vec<f64> = (0..pieces).map(|_| rng.gen_range(lo..=hi)).collect();
    ExponentField::from_fn(grid.clone(), |r| levels[cuts.partition_point(|c| *c < r)])
}

/// Random exponent pair with `1/p + 1/q ≤ 1` everywhere, as the Hölder-type
/// inequality requires.
pub fn random_holder_exponents<R: Rng>(grid: &Arc<RadialGrid>, rng: &mut R) -> Result<(ExponentField, ExponentField)> {
    let p = random_exponent_field(grid, 1.1, 6.0, rng)?;
    let stretch = random_exponent_field(grid, 1.0 + 1e-9, 4.0, rng)?;
    let q = p
        .values
        .iter()
        .zip(&stretch.values)
        .map(|(a, k)| a / (a - 1.0) * k)
        .collect();
    Ok((p, ExponentField::new(grid.clone(), q)?))
}

/// Random smooth-ish radial function: a sum of a few bumps and oscillations
/// with magnitudes spread over several decades, sometimes vanishing on a
/// sub-interval.
pub fn random_function<R: Rng>(grid: &Arc<RadialGrid>, rng: &mut R) -> Result<DiscreteFunction> {
    let r_max = grid.r_max();
    let terms: Vec<(f64, f64, f64, f64)> = (0..rng.gen_range(1..=4))
        .map(|_| {
            (
                rng.gen_range(-1.0..1.0),
                rng.gen_range(0.0..r_max),
                rng.gen_range(0.05..1.0) * r_max,
                rng.gen_range(0.0..6.0),
            )
        })
        .collect();
    let scale = 10f64.powf(rng.gen_range(-3.0..3.0));
    let gap = if rng.gen_bool(0.3) {
        let a = rng.gen_range(0.0..r_max);
        Some((a, a + rng.gen_range(0.0..0.3) * r_max))
    } else {
        None
    };
    let mut u = DiscreteFunction::from_fn(grid.clone(), |r| {
        if let Some((a, b)) = gap {
            if r > a && r < b {
                return 0.0;
            }
        }
        scale
            * terms
                .iter()
                .map(|(amp, centre, width, freq)| {
                    let z = (r - centre) / width;
                    amp * (-z * z).exp() * (1.0 + 0.5 * (freq * r).cos())
                })
                .sum::<f64>()
    })?;
    if u.is_zero() {
        u = DiscreteFunction::from_fn(grid.clone(), |_| scale)?;
    }
    Ok(u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn line_two_step() -> (DiscreteFunction, ExponentField) {
        let grid = Arc::new(RadialGrid::from_breaks(Measure::Line, &[0.0, 1.0, 2.0], 12).unwrap());
        let u = DiscreteFunction::from_fn(grid.clone(), |_| 1.0).unwrap();
        let p = ExponentField::from_fn(grid, |r| if r < 1.0 { 2.0 } else { 4.0 }).unwrap();
        (u, p)
    }

    fn ball(n: u32) -> Arc<RadialGrid> {
        Arc::new(RadialGrid::uniform(Measure::Radial(n), 1.0, 8, 16).unwrap())
    }

    #[test]
    fn grid_volume_matches_ball() {
        for n in 2..=6 {
            let g = ball(n);
            let exact = sphere_area(n).unwrap() / n as f64;
            assert!((g.volume() - exact).abs() / exact < 1e-12);
            assert_eq!(g.nodes()[0], 0.0);
            assert_eq!(g.weights()[0], 0.0);
            assert!(g.nodes().windows(2).all(|w| w[1] > w[0]));
            assert!(g.weights().iter().all(|w| *w >= 0.0));
        }
        let g = RadialGrid::geometric(Measure::Radial(3), 1e-3, 2.0, 10).unwrap();
        assert!((g.volume() - 4.0 * PI * 8.0 / 3.0).abs() < 1e-10);
        assert!(RadialGrid::from_breaks(Measure::Line, &[0.0, 1.0, 1.0], 4).is_err());
        assert!(RadialGrid::from_breaks(Measure::Line, &[0.5, 1.0], 4).is_err());
    }

    #[test]
    fn modular_examples() {
        let g = ball(3);
        let zero = DiscreteFunction::from_fn(g.clone(), |_| 0.0).unwrap();
        let two = ExponentField::constant(g.clone(), 2.0).unwrap();
        assert_eq!(modular_rho(&zero, &two).unwrap(), 0.0);
        assert_eq!(luxemburg_norm(&zero, &two).unwrap(), 0.0);
        let one = DiscreteFunction::from_fn(g, |_| 1.0).unwrap();
        assert!((modular_rho(&one, &two).unwrap() - 4.0 * PI / 3.0).abs() < 1e-12);
        let (u, p) = line_two_step();
        assert!((modular_rho(&u, &p).unwrap() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn two_step_luxemburg_norm() {
        let (u, p) = line_two_step();
        let expected = ((1.0 + 5f64.sqrt()) / 2.0).sqrt();
        assert!((luxemburg_norm(&u, &p).unwrap() - expected).abs() < 1e-10);
        assert!((expected - 1.27202).abs() < 1e-5);
    }

    #[test]
    fn constant_exponent_is_lp_norm() {
        let g = ball(3);
        let u = DiscreteFunction::from_fn(g.clone(), |r| 1.0 - r * r).unwrap();
        let p = ExponentField::constant(g.clone(), 3.0).unwrap();
        let lp = g.integrate(|r| (1.0 - r * r).powi(3)).powf(1.0 / 3.0);
        assert!((luxemburg_norm(&u, &p).unwrap() - lp).abs() / lp < 1e-12);
    }

    #[test]
    fn grid_mismatch_is_reported() {
        let u = DiscreteFunction::from_fn(ball(3), |_| 1.0).unwrap();
        let p = ExponentField::constant(ball(4), 2.0).unwrap();
        assert!(matches!(modular_rho(&u, &p), Err(Error::GridMismatch(_))));
        assert!(DiscreteFunction::new(ball(3), vec![1.0; 3]).is_err());
        assert!(DiscreteFunction::from_fn(ball(3), |_| f64::NAN).is_err());
        assert!(ExponentField::constant(ball(3), 1.0).is_err());
    }

    #[test]
    fn holder_examples() {
        let g = ball(3);
        let two = ExponentField::constant(g.clone(), 2.0).unwrap();
        let f = DiscreteFunction::from_fn(g.clone(), |r| 1.0 + r).unwrap();
        let zero = DiscreteFunction::from_fn(g.clone(), |_| 0.0).unwrap();
        let rep = holder_check(&f, &zero, &two, &two).unwrap();
        assert_eq!(rep.lhs, 0.0);
        assert_eq!(rep.bound, 0.0);
        assert!(rep.holds(1e-12));
        let h = DiscreteFunction::from_fn(g.clone(), |r| (3.0 * r).cos()).unwrap();
        let rep = holder_check(&f, &h, &two, &two).unwrap();
        assert!((rep.s_minus - 1.0).abs() < 1e-15);
        let fg1 = g.integrate(|r| ((1.0 + r) * (3.0 * r).cos()).abs());
        assert!((rep.lhs - fg1).abs() < 1e-10);
        assert!(rep.slack > 0.0);
        let one_half = ExponentField::unchecked(g, vec![1.5; f.values().len()]);
        assert!(holder_check(&f, &h, &one_half, &one_half).is_err());
    }

    #[test]
    fn norm_modular_examples() {
        let g = ball(3);
        let p = ExponentField::constant(g.clone(), 2.5).unwrap();
        let u = DiscreteFunction::from_fn(g.clone(), |r| 2.0 - r).unwrap();
        let norm = luxemburg_norm(&u, &p).unwrap();
        let v = u.scaled(2.0 / norm);
        assert!((modular_rho(&v, &p).unwrap() - 2f64.powf(2.5)).abs() < 1e-9);
        let report = norm_modular_properties(&[u], &p).unwrap();
        assert!(report.passed(), "{:?}", report.violations);
        assert!(report.checks.iter().all(|c| *c > 0));
    }

    #[test]
    fn randomized_properties() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let g = ball(3);
        for _ in 0..40 {
            let (p, q) = random_holder_exponents(&g, &mut rng).unwrap();
            let f = random_function(&g, &mut rng).unwrap();
            let h = random_function(&g, &mut rng).unwrap();
            let rep = holder_check(&f, &h, &p, &q).unwrap();
            assert!(rep.holds(1e-12), "{rep:?}");
            let report = norm_modular_properties(&[f, h], &p).unwrap();
            assert!(report.passed(), "{:?}", report.violations);
        }
    }

    #[test]
    fn csv_round_trip() {
        let g = ball(2);
        let u = DiscreteFunction::from_fn(g.clone(), |r| (r * 7.0).sin() / 3.0).unwrap();
        let mut buf = Vec::new();
        u.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("r,value\n"));
        let back = DiscreteFunction::read_csv(g, buf.as_slice()).unwrap();
        assert_eq!(back.values(), u.values());
        let other = ball(3);
        let shifted = RadialGrid::uniform(Measure::Radial(3), 1.1, 8, 16).unwrap();
        assert!(DiscreteFunction::read_csv(Arc::new(shifted), buf.as_slice()).is_err());
        drop(other);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn norm_is_homogeneous(seed in any::<u64>(), c in -50.0f64..50.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let g = ball(2);
            let p = random_exponent_field(&g, 1.2, 5.0, &mut rng).unwrap();
            let u = random_function(&g, &mut rng).unwrap();
            let n1 = luxemburg_norm(&u, &p).unwrap();
            let n2 = luxemburg_norm(&u.scaled(c), &p).unwrap();
            prop_assert!((n2 - c.abs() * n1).abs() <= 1e-10 * n2.max(c.abs() * n1).max(1e-300));
        }

        #[test]
        fn norm_triangle_inequality(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let g = ball(2);
            let p = random_exponent_field(&g, 1.2, 5.0, &mut rng).unwrap();
            let u = random_function(&g, &mut rng).unwrap();
            let v = random_function(&g, &mut rng).unwrap();
            let lhs = luxemburg_norm(&u.add(&v).unwrap(), &p).unwrap();
            let rhs = luxemburg_norm(&u, &p).unwrap() + luxemburg_norm(&v, &p).unwrap();
            prop_assert!(lhs <= rhs * (1.0 + 1e-10));
        }

        #[test]
        fn modular_strictly_decreasing_in_lambda(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let g = ball(3);
            let p = random_exponent_field(&g, 1.2, 5.0, &mut rng).unwrap();
            let u = random_function(&g, &mut rng).unwrap();
            let mut prev = f64::INFINITY;
            for k in -20..20 {
                let lambda = 1.5f64.powi(k) * u.sup_abs();
                let r = rho_scaled(&u, &p, lambda);
                prop_assert!(r < prev);
                prev = r;
            }
        }
    }
}
