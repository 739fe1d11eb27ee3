//! Numerical integration used as the independent oracle for every closed form
//! in the crate.
//!
//! The workhorse is a globally adaptive 21-point Gauss–Kronrod rule with
//! bisection of the worst interval. Integrals over `[0, ∞)` are mapped onto
//! `[0, 1)` with `r = t/(1-t)`, which turns the algebraic tails of the
//! instanton integrands into bounded (or integrably singular) endpoint
//! behaviour. Radial integrals over ℝⁿ reduce to one dimension, and a small
//! tensor-product rule computes second-moment matrices `∫ g(|x|) x_a x_b dx`
//! in dimensions up to four without assuming radial symmetry.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::sphere_area;

/// Tolerances and limits for the adaptive integrator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadSpec {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
    /// Map `[a, ∞)` with `r = a + (1-t)/t`; otherwise split at `a+1` and use `r = 1/s`
    /// on the tail.
    pub tail_transform: bool,
}

impl Default for QuadSpec {
    fn default() -> Self {
        Self {
            abs_tol: 1e-12,
            rel_tol: 1e-10,
            max_subdivisions: 2000,
            tail_transform: true,
        }
    }
}

impl QuadSpec {
    pub fn with_tolerances(abs_tol: f64, rel_tol: f64) -> Self {
        Self {
            abs_tol,
            rel_tol,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0 && self.rel_tol > 0.0) {
            return Err(Error::InvalidParams(format!(
                "quadrature tolerances must be positive (abs {}, rel {})",
                self.abs_tol, self.rel_tol
            )));
        }
        if self.max_subdivisions < 1 {
            return Err(Error::InvalidParams("max_subdivisions must be >= 1".into()));
        }
        Ok(())
    }

    fn target(&self, value: f64) -> f64 {
        self.abs_tol.max(self.rel_tol * value.abs())
    }
}

/// An integral value together with its estimated absolute error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

impl Estimate {
    pub fn scale(self, factor: f64) -> Self {
        Self {
            value: self.value * factor,
            error: self.error * factor.abs(),
        }
    }
}

const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_208_977_211_800,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

// 10-point Gauss weights for XGK[1], XGK[3], ..., XGK[9]
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

fn eval<F: Fn(f64) -> f64>(f: &F, x: f64) -> Result<f64> {
    let y = f(x);
    if y.is_finite() {
        Ok(y)
    } else {
        Err(Error::Domain(format!("integrand is not finite at x = {x:e}")))
    }
}

fn gauss_kronrod_21<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Result<Segment> {
    let centre = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = eval(f, centre)?;
    let mut res_g = 0.0;
    let mut res_k = WGK[10] * fc;
    let mut res_abs = res_k.abs();
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];

    for j in 0..5 {
        let jtw = 2 * j + 1;
        let dx = half * XGK[jtw];
        let f1 = eval(f, centre - dx)?;
        let f2 = eval(f, centre + dx)?;
        fv1[jtw] = f1;
        fv2[jtw] = f2;
        res_g += WG[j] * (f1 + f2);
        res_k += WGK[jtw] * (f1 + f2);
        res_abs += WGK[jtw] * (f1.abs() + f2.abs());
    }
    for j in 0..5 {
        let jtwm1 = 2 * j;
        let dx = half * XGK[jtwm1];
        let f1 = eval(f, centre - dx)?;
        let f2 = eval(f, centre + dx)?;
        fv1[jtwm1] = f1;
        fv2[jtwm1] = f2;
        res_k += WGK[jtwm1] * (f1 + f2);
        res_abs += WGK[jtwm1] * (f1.abs() + f2.abs());
    }

    let mean = 0.5 * res_k;
    let mut res_asc = WGK[10] * (fc - mean).abs();
    for j in 0..10 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }

    let value = res_k * half;
    res_abs *= half.abs();
    res_asc *= half.abs();
    let mut error = ((res_k - res_g) * half).abs();
    if res_asc != 0.0 && error != 0.0 {
        error = res_asc * (200.0 * error / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        error = error.max(50.0 * f64::EPSILON * res_abs);
    }
    Ok(Segment { a, b, value, error })
}

/// Adaptive integration over `[a, b]`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, spec: &QuadSpec) -> Result<Estimate> {
    integrate_with_breakpoints(f, &[a, b], spec)
}

/// Adaptive integration over `[points[0], points[last]]`, starting from the
/// partition given by `points` (which must be nondecreasing). Breakpoints let
/// the caller tell the integrator where the integrand changes scale.
pub fn integrate_with_breakpoints<F: Fn(f64) -> f64>(
    f: F,
    points: &[f64],
    spec: &QuadSpec,
) -> Result<Estimate> {
    spec.validate()?;
    if points.len() < 2 {
        return Err(Error::InvalidParams("need at least two integration limits".into()));
    }
    if points.windows(2).any(|w| !(w[1] >= w[0])) || points.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidParams(format!(
            "breakpoints must be finite and nondecreasing: {points:?}"
        )));
    }

    let mut segments = Vec::with_capacity(points.len() + 64);
    for w in points.windows(2) {
        if w[1] > w[0] {
            segments.push(gauss_kronrod_21(&f, w[0], w[1])?);
        }
    }
    if segments.is_empty() {
        return Ok(Estimate { value: 0.0, error: 0.0 });
    }

    loop {
        let (value, error) = totals(&segments);
        if error <= spec.target(value) {
            return Ok(Estimate { value, error });
        }
        if segments.len() >= spec.max_subdivisions {
            return Err(Error::AccuracyNotReached {
                estimate: value,
                error,
                subdivisions: segments.len(),
            });
        }
        // worst segment, first one on ties
        let worst = segments
            .iter()
            .enumerate()
            .fold(0, |best, (i, s)| if s.error > segments[best].error { i } else { best });
        let seg = segments[worst];
        let mid = 0.5 * (seg.a + seg.b);
        if !(mid > seg.a && mid < seg.b) {
            return Err(Error::AccuracyNotReached {
                estimate: value,
                error,
                subdivisions: segments.len(),
            });
        }
        segments[worst] = gauss_kronrod_21(&f, seg.a, mid)?;
        segments.push(gauss_kronrod_21(&f, mid, seg.b)?);
    }
}

fn totals(segments: &[Segment]) -> (f64, f64) {
    // Fixed left-to-right order keeps results bit-stable.
    let mut order: Vec<&Segment> = segments.iter().collect();
    order.sort_by(|x, y| x.a.total_cmp(&y.a));
    order
        .iter()
        .fold((0.0, 0.0), |(v, e), s| (v + s.value, e + s.error))
}

/// `∫₀^∞ f(r) dr`.
pub fn integrate_halfline<F: Fn(f64) -> f64>(f: F, spec: &QuadSpec) -> Result<Estimate> {
    integrate_from(f, 0.0, spec)
}

/// `∫_a^∞ f(r) dr`.
pub fn integrate_from<F: Fn(f64) -> f64>(f: F, a: f64, spec: &QuadSpec) -> Result<Estimate> {
    if spec.tail_transform {
        // r = a + (1-t)/t keeps the slowly decaying end at t = 0, where
        // floating point resolution is fine enough for algebraic tails
        let mapped = |t: f64| {
            if t <= 0.0 {
                return 0.0;
            }
            f(a + (1.0 - t) / t) / (t * t)
        };
        integrate(mapped, 0.0, 1.0, spec)
    } else {
        let split = a + 1.0;
        let head = integrate(&f, a, split, spec)?;
        // r = split - 1 + 1/s, s ∈ (0, 1]
        let tail = integrate(|s: f64| f(a + 1.0 / s) / (s * s), 0.0, 1.0, spec)?;
        Ok(Estimate {
            value: head.value + tail.value,
            error: head.error + tail.error,
        })
    }
}

/// `∫_{ℝⁿ} g(|x|) dx = ω_{n-1} ∫₀^∞ g(r) r^{n-1} dr`.
pub fn integrate_radial<G: Fn(f64) -> f64>(n: u32, g: G, spec: &QuadSpec) -> Result<Estimate> {
    let omega = sphere_area(n)?;
    let k = n as i32 - 1;
    Ok(integrate_halfline(|r| g(r) * r.powi(k), spec)?.scale(omega))
}

/// `∫_{|x| > a} g(|x|) dx`.
pub fn integrate_radial_from<G: Fn(f64) -> f64>(
    n: u32,
    g: G,
    a: f64,
    spec: &QuadSpec,
) -> Result<Estimate> {
    let omega = sphere_area(n)?;
    let k = n as i32 - 1;
    Ok(integrate_from(|r| g(r) * r.powi(k), a, spec)?.scale(omega))
}

/// `∫_{|x| < r_max} g(|x|) dx` with interior breakpoints.
pub fn integrate_radial_ball<G: Fn(f64) -> f64>(
    n: u32,
    g: G,
    breakpoints: &[f64],
    spec: &QuadSpec,
) -> Result<Estimate> {
    let omega = sphere_area(n)?;
    let k = n as i32 - 1;
    Ok(integrate_with_breakpoints(|r| g(r) * r.powi(k), breakpoints, spec)?.scale(omega))
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`, ascending nodes.
pub fn gauss_legendre(k: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(k >= 1, "Gauss-Legendre rule needs at least one node");
    let mut nodes = vec![0.0; k];
    let mut weights = vec![0.0; k];
    let kf = k as f64;
    for i in 0..k.div_ceil(2) {
        // Chebyshev-like initial guess, then Newton on P_k
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (kf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(k, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(k, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[k - 1 - i] = x;
        weights[i] = w;
        weights[k - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(k: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for j in 2..=k {
        let jf = j as f64;
        let p2 = ((2.0 * jf - 1.0) * x * p1 - (jf - 1.0) * p0) / jf;
        p0 = p1;
        p1 = p2;
    }
    if k == 0 {
        return (1.0, 0.0);
    }
    let d = k as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Composite Gauss–Legendre rule on `[lo, hi]` split at `breaks`.
pub(crate) fn composite_rule(breaks: &[f64], k: usize) -> (Vec<f64>, Vec<f64>) {
    let (xs, ws) = gauss_legendre(k);
    let mut nodes = Vec::with_capacity(breaks.len() * k);
    let mut weights = Vec::with_capacity(breaks.len() * k);
    for w in breaks.windows(2) {
        let (a, b) = (w[0], w[1]);
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        for (x, wt) in xs.iter().zip(&ws) {
            nodes.push(mid + half * x);
            weights.push(half * wt);
        }
    }
    (nodes, weights)
}

/// Tensor-product second moments `M_ab = ∫_{[-L,L]ⁿ} g(|x|) x_a x_b dx`.
#[derive(Debug, Clone)]
pub struct SecondMoments {
    pub matrix: DMatrix<f64>,
    /// Largest entrywise difference between two rule resolutions, plus the
    /// truncation bound.
    pub error: f64,
    pub radius: f64,
    /// Bound on `∫_{|x|>L} |g| |x|² dx`.
    pub tail: f64,
}

const MAX_TENSOR_DIM: u32 = 4;

/// Second-moment matrix of a radial profile by brute-force tensor quadrature.
///
/// The box half-width `L` is doubled until the radial tail bound
/// `∫_{|x|>L}|g||x|²` falls below `rel_tol/10` of the full second moment.
pub fn second_moments<G: Fn(f64) -> f64 + Sync>(
    n: u32,
    g: G,
    spec: &QuadSpec,
) -> Result<SecondMoments> {
    if !(2..=MAX_TENSOR_DIM).contains(&n) {
        return Err(Error::InvalidParams(format!(
            "tensor quadrature supports 2 <= n <= {MAX_TENSOR_DIM}, got {n}"
        )));
    }
    spec.validate()?;
    let total = integrate_radial(n, |r| g(r).abs() * r * r, spec)?.value;
    if total == 0.0 {
        return Ok(SecondMoments {
            matrix: DMatrix::zeros(n as usize, n as usize),
            error: 0.0,
            radius: 0.0,
            tail: 0.0,
        });
    }
    let budget = spec.rel_tol / 10.0 * total;
    let mut radius = 1.0;
    let tail = loop {
        let tail = integrate_radial_from(n, |r| g(r).abs() * r * r, radius, spec)?.value;
        if tail <= budget {
            break tail;
        }
        if radius >= 1024.0 {
            return Err(Error::SlowDecay { radius, tail });
        }
        radius *= 2.0;
    };

    // dyadic panels towards the edge of the box, mirrored
    let mut half: Vec<f64> = vec![0.0, 0.25];
    while *half.last().unwrap() < radius {
        let next = (half.last().unwrap() * 2.0).min(radius);
        half.push(next);
    }
    let mut breaks: Vec<f64> = half.iter().rev().map(|x| -x).collect();
    breaks.extend_from_slice(&half[1..]);

    // node counts per panel shrink with dimension to keep the grid tractable
    let (k_coarse, k_fine) = match n {
        2 => (16, 24),
        3 => (10, 14),
        _ => (6, 9),
    };
    let coarse = tensor_moments(n, &g, &breaks, k_coarse);
    let fine = tensor_moments(n, &g, &breaks, k_fine);
    let diff = (&fine - &coarse).abs().max();
    Ok(SecondMoments {
        matrix: fine,
        error: diff + tail,
        radius,
        tail,
    })
}

fn tensor_moments<G: Fn(f64) -> f64 + Sync>(
    n: u32,
    g: &G,
    breaks: &[f64],
    k: usize,
) -> DMatrix<f64> {
    let dim = n as usize;
    let (nodes, weights) = composite_rule(breaks, k);
    let m = nodes.len();
    // Parallel over the first coordinate; partial matrices are summed in index order.
    let partials: Vec<DMatrix<f64>> = (0..m)
        .into_par_iter()
        .map(|i0| {
            let mut acc = DMatrix::<f64>::zeros(dim, dim);
            let mut idx = vec![0usize; dim];
            idx[0] = i0;
            let mut x = vec![0.0; dim];
            loop {
                let mut w = 1.0;
                let mut r2 = 0.0;
                for d in 0..dim {
                    x[d] = nodes[idx[d]];
                    w *= weights[idx[d]];
                    r2 += x[d] * x[d];
                }
                let gw = g(r2.sqrt()) * w;
                for a in 0..dim {
                    for b in a..dim {
                        acc[(a, b)] += gw * x[a] * x[b];
                    }
                }
                // odometer over coordinates 1..dim
                let mut d = dim - 1;
                loop {
                    if d == 0 {
                        break;
                    }
                    idx[d] += 1;
                    if idx[d] < m {
                        break;
                    }
                    idx[d] = 0;
                    d -= 1;
                }
                if d == 0 {
                    break;
                }
            }
            acc
        })
        .collect();
    let mut out = DMatrix::<f64>::zeros(dim, dim);
    for p in &partials {
        out += p;
    }
    for a in 0..dim {
        for b in 0..a {
            out[(a, b)] = out[(b, a)];
        }
    }
    out
}

/// `∫_{ℝⁿ} g(|x|) (Ax, x) dx` for `2 <= n <= 4` by tensor quadrature.
pub fn integrate_quadratic_form<G: Fn(f64) -> f64 + Sync>(
    n: u32,
    g: G,
    a: &DMatrix<f64>,
    spec: &QuadSpec,
) -> Result<Estimate> {
    let dim = n as usize;
    if a.nrows() != dim || a.ncols() != dim {
        return Err(Error::InvalidParams(format!(
            "matrix is {}x{}, expected {dim}x{dim}",
            a.nrows(),
            a.ncols()
        )));
    }
    let moments = second_moments(n, g, spec)?;
    let value = a.component_mul(&moments.matrix).sum();
    let norm = a.abs().sum();
    Ok(Estimate {
        value,
        error: norm * moments.error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn tight() -> QuadSpec {
        QuadSpec::with_tolerances(1e-14, 1e-12)
    }

    #[test]
    fn halfline_examples() {
        let spec = QuadSpec::default();
        for transform in [true, false] {
            let spec = QuadSpec {
                tail_transform: transform,
                ..spec
            };
            let e = integrate_halfline(|t| (1.0 + t).powi(-3), &spec).unwrap();
            assert!((e.value - 0.5).abs() < 1e-10, "{e:?}");
            assert!((e.value - 0.5).abs() <= e.error.max(1e-15));
            let e = integrate_halfline(|t| (-t).exp(), &spec).unwrap();
            assert!((e.value - 1.0).abs() < 1e-10);
            let e = integrate_halfline(|t| t / (1.0 + t * t).powi(2), &spec).unwrap();
            assert!((e.value - 0.5).abs() < 1e-10);
        }
    }

    #[test]
    fn finite_interval_and_breakpoints() {
        let e = integrate(|x| x.sin(), 0.0, PI, &tight()).unwrap();
        assert!((e.value - 2.0).abs() < 1e-13);
        // kink at 1
        let e = integrate_with_breakpoints(|x| (x - 1.0).abs(), &[0.0, 1.0, 3.0], &tight()).unwrap();
        assert!((e.value - 2.5).abs() < 1e-13);
        let e = integrate_with_breakpoints(|x| x, &[2.0, 2.0], &tight()).unwrap();
        assert_eq!(e.value, 0.0);
    }

    #[test]
    fn endpoint_singularity_converges() {
        // ∫₀¹ x^{-1/2} = 2
        let e = integrate(|x| x.powf(-0.5), 0.0, 1.0, &QuadSpec::default()).unwrap();
        assert!((e.value - 2.0).abs() < 1e-9);
    }

    #[test]
    fn non_convergence_reports_best_estimate() {
        let spec = QuadSpec {
            max_subdivisions: 3,
            ..tight()
        };
        match integrate(|x| (50.0 * x).sin().abs(), 0.0, 10.0, &spec) {
            Err(Error::AccuracyNotReached { estimate, subdivisions, .. }) => {
                assert_eq!(subdivisions, 3);
                assert!(estimate.is_finite());
            }
            other => panic!("expected AccuracyNotReached, got {other:?}"),
        }
    }

    #[test]
    fn bad_specs_rejected() {
        let spec = QuadSpec {
            abs_tol: 0.0,
            ..QuadSpec::default()
        };
        assert!(integrate(|x| x, 0.0, 1.0, &spec).is_err());
        assert!(integrate_with_breakpoints(|x| x, &[1.0, 0.0], &QuadSpec::default()).is_err());
    }

    #[test]
    fn radial_examples() {
        let spec = QuadSpec::default();
        let e = integrate_radial(2, |r| (-r * r).exp(), &spec).unwrap();
        assert!((e.value - PI).abs() / PI < 1e-10);
        let e = integrate_radial(4, |r| (1.0 + r * r).powi(-4), &spec).unwrap();
        assert!((e.value - PI * PI / 6.0).abs() / (PI * PI / 6.0) < 1e-10);
        let target = 5.0 * PI.powi(3) / 96.0;
        let e = integrate_radial(5, |r| (1.0 + r * r).powi(-5) * r * r, &spec).unwrap();
        assert!((e.value - target).abs() / target < 1e-10);
    }

    #[test]
    fn gaussian_mass_all_dimensions() {
        for n in 2..=8u32 {
            let e = integrate_radial(n, |r| (-r * r).exp(), &QuadSpec::default()).unwrap();
            let exact = PI.powf(n as f64 / 2.0);
            assert!((e.value - exact).abs() / exact < 1e-8, "n = {n}");
            assert!((e.value - exact).abs() <= e.error.max(1e-14 * exact));
        }
    }

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        for k in 1..=20 {
            let (x, w) = gauss_legendre(k);
            assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-13);
            assert!(x.windows(2).all(|p| p[0] < p[1]));
            // degree 2k-1 is exact; ∫ x^{2k-2} = 2/(2k-1)
            let deg = 2 * k - 2;
            let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
            assert!((s - 2.0 / (deg as f64 + 1.0)).abs() < 1e-12, "k = {k}");
        }
    }

    #[test]
    fn quadratic_form_examples() {
        let spec = QuadSpec::with_tolerances(1e-12, 1e-9);
        let g = |r: f64| (-r * r).exp();
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 3.0]);
        let e = integrate_quadratic_form(2, g, &a, &spec).unwrap();
        assert!((e.value - 2.0 * PI).abs() < 1e-7, "{e:?}");
        let e = integrate_quadratic_form(2, g, &DMatrix::identity(2, 2), &spec).unwrap();
        assert!((e.value - PI).abs() < 1e-7);
        let anti = DMatrix::from_row_slice(3, 3, &[0.0, 1.0, -2.0, -1.0, 0.0, 0.5, 2.0, -0.5, 0.0]);
        let e = integrate_quadratic_form(3, g, &anti, &spec).unwrap();
        assert!(e.value.abs() < 1e-12);
    }

    #[test]
    fn quadratic_form_rejects_slow_decay_and_bad_dims() {
        let spec = QuadSpec::default();
        // |x|² (1+r²)^{-3} in n = 3 has a 1/L tail
        let g = |r: f64| (1.0 + r * r).powi(-3);
        assert!(matches!(
            integrate_quadratic_form(3, g, &DMatrix::identity(3, 3), &spec),
            Err(Error::SlowDecay { .. })
        ));
        assert!(integrate_quadratic_form(5, g, &DMatrix::identity(5, 5), &spec).is_err());
        assert!(integrate_quadratic_form(2, g, &DMatrix::identity(3, 3), &spec).is_err());
    }
}
