//! The Aubin–Talenti extremal `U(x) = (1 + |x|^{p/(p-1)})^{-(n-p)/p}`, its
//! rescalings and cut-off versions, and the constants built from its moments:
//! the Sobolev constant `K(n,p)`, the gradient threshold `C_p`, and the ratio
//! `D(n,p)`.
//!
//! All closed-form moments come from the substitution `t = r^{p/(p-1)}`,
//! which turns each radial integral into an `I_n^q`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{integrate_radial, Estimate, QuadSpec};
use crate::special::{ipq, sphere_area, DimParams};

/// `U(r)`.
pub fn u_profile(dims: &DimParams, r: f64) -> f64 {
    let p = dims.p();
    let n = dims.nf();
    (1.0 + r.powf(p / (p - 1.0))).powf(-(n - p) / p)
}

/// `U'(r)`, which is nonpositive.
pub fn u_derivative(dims: &DimParams, r: f64) -> f64 {
    let p = dims.p();
    let n = dims.nf();
    -u_prime_abs(n, p, r)
}

fn u_prime_abs(n: f64, p: f64, r: f64) -> f64 {
    let c = (n - p) / (p - 1.0);
    if r <= 1.0 {
        c * r.powf(1.0 / (p - 1.0)) * (1.0 + r.powf(p / (p - 1.0))).powf(-n / p)
    } else {
        // factor out r^{p/(p-1)} so large r does not produce inf * 0
        c * r.powf(-(n - 1.0) / (p - 1.0)) * (1.0 + r.powf(-p / (p - 1.0))).powf(-n / p)
    }
}

/// Concentrating bubble `U_{ε,x₀}` multiplied by a cut-off supported in
/// `B_{2δ}(x₀)`. `delta = +inf` means no cut-off (full-space bubble).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BubbleParams {
    pub dims: DimParams,
    pub eps: f64,
    pub center: Vec<f64>,
    pub delta: f64,
}

impl BubbleParams {
    /// Bubble centred at the origin with cut-off radius `delta`.
    pub fn new(dims: DimParams, eps: f64, delta: f64) -> Result<Self> {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::InvalidParams(format!("scale eps = {eps} must be positive")));
        }
        if !(delta > 0.0) {
            return Err(Error::InvalidParams(format!("cut-off radius delta = {delta} must be positive")));
        }
        Ok(Self {
            dims,
            eps,
            center: vec![0.0; dims.n() as usize],
            delta,
        })
    }

    pub fn full_space(dims: DimParams, eps: f64) -> Result<Self> {
        Self::new(dims, eps, f64::INFINITY)
    }

    pub fn with_center(mut self, center: Vec<f64>) -> Result<Self> {
        if center.len() != self.dims.n() as usize {
            return Err(Error::InvalidParams(format!(
                "center has {} coordinates, expected {}",
                center.len(),
                self.dims.n()
            )));
        }
        self.center = center;
        Ok(self)
    }

    pub fn with_eps(&self, eps: f64) -> Result<Self> {
        let mut out = Self::new(self.dims, eps, self.delta)?;
        out.center = self.center.clone();
        Ok(out)
    }

    pub fn has_cutoff(&self) -> bool {
        self.delta.is_finite()
    }

    /// Outer edge of the support, `2δ` (infinite without cut-off).
    pub fn support_radius(&self) -> f64 {
        2.0 * self.delta
    }

    /// `ε^{-(n-p)/p}`.
    pub fn amplitude(&self) -> f64 {
        let (n, p) = (self.dims.nf(), self.dims.p());
        self.eps.powf(-(n - p) / p)
    }

    /// Distance from the centre.
    pub fn radius_of(&self, x: &[f64]) -> f64 {
        x.iter()
            .zip(&self.center)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

fn bump(t: f64) -> f64 {
    if t > 0.0 {
        (-1.0 / t).exp()
    } else {
        0.0
    }
}

fn bump_derivative(t: f64) -> f64 {
    if t > 0.0 {
        (-1.0 / t).exp() / (t * t)
    } else {
        0.0
    }
}

/// Smooth radial cut-off: 1 on `[0, δ]`, 0 on `[2δ, ∞)`, strictly decreasing
/// in between.
pub fn cutoff_eta(delta: f64, r: f64) -> f64 {
    if !delta.is_finite() {
        return 1.0;
    }
    let s = r / delta;
    if s <= 1.0 {
        return 1.0;
    }
    if s >= 2.0 {
        return 0.0;
    }
    let a = bump(2.0 - s);
    let b = bump(s - 1.0);
    a / (a + b)
}

/// `η'(r)`.
pub fn cutoff_eta_derivative(delta: f64, r: f64) -> f64 {
    if !delta.is_finite() {
        return 0.0;
    }
    let s = r / delta;
    if s <= 1.0 || s >= 2.0 {
        return 0.0;
    }
    let a = bump(2.0 - s);
    let b = bump(s - 1.0);
    let da = bump_derivative(2.0 - s);
    let db = bump_derivative(s - 1.0);
    let sum = a + b;
    -(da * b + a * db) / (sum * sum) / delta
}

/// `u_ε(r) = ε^{-(n-p)/p} U(r/ε) η(r)`.
pub fn u_eps(bp: &BubbleParams, r: f64) -> f64 {
    let eta = cutoff_eta(bp.delta, r);
    if eta == 0.0 {
        return 0.0;
    }
    bp.amplitude() * u_profile(&bp.dims, r / bp.eps) * eta
}

/// Radial derivative of `u_ε`, including the cut-off term.
pub fn u_eps_derivative(bp: &BubbleParams, r: f64) -> f64 {
    let eta = cutoff_eta(bp.delta, r);
    let deta = cutoff_eta_derivative(bp.delta, r);
    if eta == 0.0 && deta == 0.0 {
        return 0.0;
    }
    let amp = bp.amplitude();
    let s = r / bp.eps;
    amp / bp.eps * u_derivative(&bp.dims, s) * eta + amp * u_profile(&bp.dims, s) * deta
}

/// `u_ε` at a point of ℝⁿ.
pub fn u_eps_at(bp: &BubbleParams, x: &[f64]) -> f64 {
    u_eps(bp, bp.radius_of(x))
}

/// `|∇U_ε|(r)` for the bubble without cut-off:
/// `((n-p)/(p-1)) ε^{-n/p} (r/ε)^{1/(p-1)} (1+(r/ε)^{p/(p-1)})^{-n/p}`.
pub fn grad_u_eps_magnitude(bp: &BubbleParams, r: f64) -> f64 {
    let (n, p) = (bp.dims.nf(), bp.dims.p());
    bp.eps.powf(-n / p) * u_prime_abs(n, p, r / bp.eps)
}

/// `C_p = ((n-p)/(p-1))^{(p-1)/(n-1)}`: `|∇U_ε| < 1` once
/// `|x| > C_p ε^{(n-p)/(p(n-1))}`.
pub fn c_p_threshold(dims: &DimParams) -> f64 {
    let (n, p) = (dims.nf(), dims.p());
    ((n - p) / (p - 1.0)).powf((p - 1.0) / (n - 1.0))
}

/// `c · ε^{(n-p)/(p(n-1))}`.
pub fn gradient_threshold_radius(dims: &DimParams, eps: f64, c: f64) -> f64 {
    let (n, p) = (dims.nf(), dims.p());
    c * eps.powf((n - p) / (p * (n - 1.0)))
}

/// The five full-space moments of `U`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Moment {
    /// `∫ U^{p*}`
    Q0,
    /// `∫ |x|² U^{p*}`
    Q2,
    /// `∫ |∇U|^p`
    G0,
    /// `∫ |x|² |∇U|^p`
    G2,
    /// `∫ U^p`
    P0,
}

impl Moment {
    pub const ALL: [Moment; 5] = [Moment::Q0, Moment::Q2, Moment::G0, Moment::G2, Moment::P0];

    pub fn name(self) -> &'static str {
        match self {
            Moment::Q0 => "m_q0",
            Moment::Q2 => "m_q2",
            Moment::G0 => "m_g0",
            Moment::G2 => "m_g2",
            Moment::P0 => "m_p0",
        }
    }

    pub fn condition(self) -> &'static str {
        match self {
            Moment::Q0 | Moment::G0 => "1 < p < n",
            Moment::Q2 => "p < (n+2)/2",
            Moment::G2 => "p < (n+2)/3",
            Moment::P0 => "p^2 < n",
        }
    }

    pub fn is_finite_for(self, dims: &DimParams) -> bool {
        let (n, p) = (dims.nf(), dims.p());
        match self {
            Moment::Q0 | Moment::G0 => true,
            Moment::Q2 => 2.0 * p < n + 2.0,
            Moment::G2 => 3.0 * p < n + 2.0,
            Moment::P0 => p * p < n,
        }
    }

    fn check(self, dims: &DimParams) -> Result<()> {
        if self.is_finite_for(dims) {
            Ok(())
        } else {
            Err(Error::DivergentMoment {
                moment: self.name(),
                condition: self.condition(),
                n: dims.n(),
                p: dims.p(),
            })
        }
    }

    /// The radial integrand `g(r)` with `moment = ∫_{ℝⁿ} g(|x|) dx`.
    pub fn integrand(self, dims: &DimParams, r: f64) -> f64 {
        let p = dims.p();
        match self {
            Moment::Q0 => u_profile(dims, r).powf(dims.p_star()),
            Moment::Q2 => r * r * u_profile(dims, r).powf(dims.p_star()),
            Moment::G0 => u_derivative(dims, r).abs().powf(p),
            Moment::G2 => r * r * u_derivative(dims, r).abs().powf(p),
            Moment::P0 => u_profile(dims, r).powf(p),
        }
    }

    /// Closed Beta-function value; `P0` has none and is integrated numerically.
    pub fn closed_form(self, dims: &DimParams) -> Result<f64> {
        self.check(dims)?;
        let (n, p) = (dims.nf(), dims.p());
        let prefactor = sphere_area(dims.n())? * (p - 1.0) / p;
        let base = n * (p - 1.0) / p;
        let grad = ((n - p) / (p - 1.0)).powf(p);
        match self {
            Moment::Q0 => Ok(prefactor * ipq(n, base)?),
            Moment::Q2 => Ok(prefactor * ipq(n, base - 2.0 / p + 2.0)?),
            Moment::G0 => Ok(prefactor * grad * ipq(n, base + 1.0)?),
            Moment::G2 => Ok(prefactor * grad * ipq(n, base - 2.0 / p + 3.0)?),
            Moment::P0 => Ok(self.by_quadrature(dims, &QuadSpec::default())?.value),
        }
    }

    /// Direct radial quadrature of [`Moment::integrand`].
    pub fn by_quadrature(self, dims: &DimParams, spec: &QuadSpec) -> Result<Estimate> {
        self.check(dims)?;
        integrate_radial(dims.n(), |r| self.integrand(dims, r), spec)
    }
}

/// Moments of `U`; entries that diverge for the given `(n, p)` are `None`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentSet {
    pub dims: DimParams,
    pub m_q0: f64,
    pub m_g0: f64,
    pub m_q2: Option<f64>,
    pub m_g2: Option<f64>,
    pub m_p0: Option<f64>,
}

impl MomentSet {
    fn require(&self, moment: Moment, value: Option<f64>) -> Result<f64> {
        value.ok_or(Error::DivergentMoment {
            moment: moment.name(),
            condition: moment.condition(),
            n: self.dims.n(),
            p: self.dims.p(),
        })
    }

    pub fn m_q2(&self) -> Result<f64> {
        self.require(Moment::Q2, self.m_q2)
    }

    pub fn m_g2(&self) -> Result<f64> {
        self.require(Moment::G2, self.m_g2)
    }

    pub fn m_p0(&self) -> Result<f64> {
        self.require(Moment::P0, self.m_p0)
    }

    pub fn get(&self, moment: Moment) -> Option<f64> {
        match moment {
            Moment::Q0 => Some(self.m_q0),
            Moment::G0 => Some(self.m_g0),
            Moment::Q2 => self.m_q2,
            Moment::G2 => self.m_g2,
            Moment::P0 => self.m_p0,
        }
    }
}

fn optional(moment: Moment, dims: &DimParams, f: impl Fn(Moment) -> Result<f64>) -> Result<Option<f64>> {
    if moment.is_finite_for(dims) {
        f(moment).map(Some)
    } else {
        Ok(None)
    }
}

/// Beta-function moments (plus the quadrature value of `∫U^p`).
pub fn moments_closed_form(dims: &DimParams) -> Result<MomentSet> {
    let f = |m: Moment| m.closed_form(dims);
    Ok(MomentSet {
        dims: *dims,
        m_q0: f(Moment::Q0)?,
        m_g0: f(Moment::G0)?,
        m_q2: optional(Moment::Q2, dims, f)?,
        m_g2: optional(Moment::G2, dims, f)?,
        m_p0: optional(Moment::P0, dims, f)?,
    })
}

/// All moments by direct radial quadrature.
pub fn moments_by_quadrature(dims: &DimParams, spec: &QuadSpec) -> Result<MomentSet> {
    let f = |m: Moment| m.by_quadrature(dims, spec).map(|e| e.value);
    Ok(MomentSet {
        dims: *dims,
        m_q0: f(Moment::Q0)?,
        m_g0: f(Moment::G0)?,
        m_q2: optional(Moment::Q2, dims, f)?,
        m_g2: optional(Moment::G2, dims, f)?,
        m_p0: optional(Moment::P0, dims, f)?,
    })
}

/// Best constant of the Sobolev inequality in ℝⁿ,
/// `K(n,p) = ‖U‖_{p*} / ‖∇U‖_p`.
pub fn k_np(dims: &DimParams) -> Result<f64> {
    let m_q0 = Moment::Q0.closed_form(dims)?;
    let m_g0 = Moment::G0.closed_form(dims)?;
    Ok(m_q0.powf(1.0 / dims.p_star()) / m_g0.powf(1.0 / dims.p()))
}

/// The same quotient measured by quadrature on `U_ε` (no cut-off); it does not
/// depend on `ε`.
pub fn k_np_from_bubble(dims: &DimParams, eps: f64, spec: &QuadSpec) -> Result<f64> {
    let bp = BubbleParams::full_space(*dims, eps)?;
    let (p, ps) = (dims.p(), dims.p_star());
    let lq = integrate_radial(dims.n(), |r| u_eps(&bp, r).powf(ps), spec)?.value;
    let grad = integrate_radial(dims.n(), |r| grad_u_eps_magnitude(&bp, r).powf(p), spec)?.value;
    Ok(lq.powf(1.0 / ps) / grad.powf(1.0 / p))
}

/// Compactness threshold `(1/n) K(n,p)^{-n}`.
pub fn energy_threshold(dims: &DimParams) -> Result<f64> {
    Ok(k_np(dims)?.powf(-dims.nf()) / dims.nf())
}

/// `D(n,p) = n/(n-p) · ((n-p) - 2(p-1))/(n+2)`.
pub fn d_np(dims: &DimParams) -> Result<f64> {
    Moment::G2.check(dims)?;
    let (n, p) = (dims.nf(), dims.p());
    Ok(n / (n - p) * ((n - p) - 2.0 * (p - 1.0)) / (n + 2.0))
}

/// `D(n,p) = (m_g0 m_q2)/(m_q0 m_g2)` with every moment integrated numerically.
pub fn d_np_oracle(dims: &DimParams, spec: &QuadSpec) -> Result<f64> {
    let m = |moment: Moment| moment.by_quadrature(dims, spec).map(|e| e.value);
    Ok(m(Moment::G0)? * m(Moment::Q2)? / (m(Moment::Q0)? * m(Moment::G2)?))
}

/// Scale `c = C^{1/(p*-p)}` with `C = K^{-p} ‖U‖_{p*}^{-(p*-p)}`, so that
/// `V = cU` solves `-Δ_p V = V^{p*-1}` and `∫|∇V|^p = ∫V^{p*} = K^{-n}`.
pub fn normalization_constant(dims: &DimParams) -> Result<f64> {
    let (p, ps) = (dims.p(), dims.p_star());
    let k = k_np(dims)?;
    let m_q0 = Moment::Q0.closed_form(dims)?;
    let big_c = k.powf(-p) * m_q0.powf(-(ps - p) / ps);
    Ok(big_c.powf(1.0 / (ps - p)))
}

/// `v_ε = c u_ε`.
pub fn v_eps(bp: &BubbleParams, c: f64, r: f64) -> f64 {
    c * u_eps(bp, r)
}

/// `v_ε'(r)`.
pub fn v_eps_derivative(bp: &BubbleParams, c: f64, r: f64) -> f64 {
    c * u_eps_derivative(bp, r)
}
