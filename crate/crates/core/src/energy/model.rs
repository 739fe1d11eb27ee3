use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instanton::BubbleParams;
use crate::special::{critical_exponent, DimParams};

/// A radial function `r ↦ value`, shared between threads.
pub type RadialProfile = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

const SYMMETRY_TOL: f64 = 1e-12;
const EXPONENT_MARGIN: f64 = 1e-6;

/// Second-order model of an exponent around a critical point at the origin:
/// `e(x) = e₀ + ½(Hx, x) + o(|x|²)`.
///
/// Integrals only see the radial profile `e₀ + ½(tr H/n) r²`, or the
/// user-supplied radial extension when one is attached.
#[derive(Clone)]
pub struct ExponentModel {
    value: f64,
    gradient: DVector<f64>,
    hessian: DMatrix<f64>,
    global: Option<RadialProfile>,
}

impl fmt::Debug for ExponentModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ExponentModel")
            .field("value", &self.value)
            .field("gradient", &self.gradient.as_slice())
            .field("hessian", &self.hessian)
            .field("global", &self.global.is_some())
            .finish()
    }
}

impl ExponentModel {
    pub fn new(value: f64, gradient: Vec<f64>, hessian: DMatrix<f64>) -> Result<Self> {
        let n = gradient.len();
        if n < 2 {
            return Err(Error::InvalidModel(format!("dimension {n} is below 2")));
        }
        if !value.is_finite() || value <= 1.0 {
            return Err(Error::InvalidModel(format!("value {value} must be a finite exponent above 1")));
        }
        if hessian.nrows() != n || hessian.ncols() != n {
            return Err(Error::InvalidModel(format!(
                "Hessian is {}x{}, gradient has {n} entries",
                hessian.nrows(),
                hessian.ncols()
            )));
        }
        if gradient.iter().any(|g| *g != 0.0) {
            return Err(Error::InvalidModel(
                "gradient at the concentration point must vanish".into(),
            ));
        }
        if hessian.iter().any(|h| !h.is_finite()) {
            return Err(Error::InvalidModel("Hessian has non-finite entries".into()));
        }
        let scale = hessian.amax().max(1.0);
        for i in 0..n {
            for j in 0..i {
                if (hessian[(i, j)] - hessian[(j, i)]).abs() > SYMMETRY_TOL * scale {
                    return Err(Error::InvalidModel(format!(
                        "Hessian is not symmetric: H[{i},{j}] = {} but H[{j},{i}] = {}",
                        hessian[(i, j)],
                        hessian[(j, i)]
                    )));
                }
            }
        }
        Ok(Self {
            value,
            gradient: DVector::from_vec(gradient),
            hessian,
            global: None,
        })
    }

    /// Hessian `(Δ/n) I`.
    pub fn isotropic(n: u32, value: f64, laplacian: f64) -> Result<Self> {
        let n = n as usize;
        Self::new(value, vec![0.0; n], DMatrix::identity(n, n) * (laplacian / n as f64))
    }

    pub fn flat(n: u32, value: f64) -> Result<Self> {
        Self::isotropic(n, value, 0.0)
    }

    /// Replaces the quadratic extension away from the origin by `profile`.
    /// The profile must agree with the local model to second order.
    pub fn with_global(mut self, profile: RadialProfile) -> Self {
        self.global = Some(profile);
        self
    }

    pub fn n(&self) -> u32 {
        self.gradient.len() as u32
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn hessian(&self) -> &DMatrix<f64> {
        &self.hessian
    }

    pub fn laplacian(&self) -> f64 {
        self.hessian.trace()
    }

    /// Ascending eigenvalues of the Hessian.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = self.hessian.clone().symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    /// Hessian negative semidefinite.
    pub fn is_local_max(&self) -> bool {
        self.eigenvalues().last().is_some_and(|e| *e <= 0.0)
    }

    /// Hessian positive semidefinite.
    pub fn is_local_min(&self) -> bool {
        self.eigenvalues().first().is_some_and(|e| *e >= 0.0)
    }

    /// `e₀ + ½(Hx, x)`.
    pub fn local_value(&self, x: &[f64]) -> f64 {
        let v = DVector::from_column_slice(x);
        self.value + 0.5 * v.dot(&(&self.hessian * &v))
    }

    /// Radialized value at distance `r`, before any clamping.
    pub fn radial_value(&self, r: f64) -> f64 {
        match &self.global {
            Some(g) => g(r),
            None => self.value + 0.5 * self.laplacian() / self.n() as f64 * r * r,
        }
    }
}

/// The concentration problem: dimension and exponents at the origin, the
/// exponent models, the lower-order coefficient `h`, the weight `f` used by
/// the expansions, and the cut-off radius of the test functions.
#[derive(Clone)]
pub struct EnergyProblem {
    dims: DimParams,
    p_model: ExponentModel,
    q_model: ExponentModel,
    h0: f64,
    h_profile: Option<RadialProfile>,
    f_profile: Option<RadialProfile>,
    delta: f64,
}

impl fmt::Debug for EnergyProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EnergyProblem")
            .field("dims", &self.dims)
            .field("p_model", &self.p_model)
            .field("q_model", &self.q_model)
            .field("h0", &self.h0)
            .field("delta", &self.delta)
            .finish()
    }
}

impl EnergyProblem {
    /// Requires `p_model` to take the value `p` and `q_model` the value `p*`
    /// at the origin. The cut-off radius defaults to `δ = 1`.
    pub fn new(dims: DimParams, p_model: ExponentModel, q_model: ExponentModel, h0: f64) -> Result<Self> {
        if p_model.n() != dims.n() || q_model.n() != dims.n() {
            return Err(Error::InvalidModel(format!(
                "exponent models live in dimensions {} and {}, problem in {}",
                p_model.n(),
                q_model.n(),
                dims.n()
            )));
        }
        if p_model.value() != dims.p() {
            return Err(Error::InvalidModel(format!(
                "p model has value {} at the origin, expected p = {}",
                p_model.value(),
                dims.p()
            )));
        }
        let ps = dims.p_star();
        if (q_model.value() - ps).abs() > 1e-12 * ps {
            return Err(Error::InvalidModel(format!(
                "q model has value {} at the origin, expected p* = {ps}",
                q_model.value()
            )));
        }
        if !h0.is_finite() {
            return Err(Error::InvalidParams(format!("h0 = {h0} is not finite")));
        }
        Ok(Self {
            dims,
            p_model,
            q_model,
            h0,
            h_profile: None,
            f_profile: None,
            delta: 1.0,
        })
    }

    /// Radially symmetric exponents with the given Laplacians at the origin.
    pub fn isotropic(n: u32, p: f64, dp_laplacian: f64, dq_laplacian: f64, h0: f64) -> Result<Self> {
        let dims = DimParams::new(n, p)?;
        Self::new(
            dims,
            ExponentModel::isotropic(n, p, dp_laplacian)?,
            ExponentModel::isotropic(n, dims.p_star(), dq_laplacian)?,
            h0,
        )
    }

    /// `delta = +inf` removes the cut-off.
    pub fn with_delta(mut self, delta: f64) -> Result<Self> {
        if !(delta > 0.0) {
            return Err(Error::InvalidParams(format!("cut-off radius {delta} must be positive")));
        }
        self.delta = delta;
        Ok(self)
    }

    /// Spatially varying `h`; `h(0)` replaces `h0`.
    pub fn with_h(mut self, h: RadialProfile) -> Self {
        self.h0 = h(0.0);
        self.h_profile = Some(h);
        self
    }

    /// Weight `f` of the expansion integrals (default `f ≡ 1`).
    pub fn with_f(mut self, f: RadialProfile) -> Self {
        self.f_profile = Some(f);
        self
    }

    pub fn dims(&self) -> DimParams {
        self.dims
    }

    pub fn p_model(&self) -> &ExponentModel {
        &self.p_model
    }

    pub fn q_model(&self) -> &ExponentModel {
        &self.q_model
    }

    pub fn h0(&self) -> f64 {
        self.h0
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn dp_laplacian(&self) -> f64 {
        self.p_model.laplacian()
    }

    pub fn dq_laplacian(&self) -> f64 {
        self.q_model.laplacian()
    }

    /// `p(r)`, kept inside `(1, n)`.
    pub fn p_at(&self, r: f64) -> f64 {
        let n = self.dims.nf();
        self.p_model
            .radial_value(r)
            .clamp(1.0 + EXPONENT_MARGIN, n - EXPONENT_MARGIN)
    }

    /// `q(r)`, kept between `p(r) + (q₀ - p₀)/2` and `p*(r)` so that
    /// `p < q ≤ p*` on the whole support.
    pub fn q_at(&self, r: f64) -> f64 {
        let p = self.p_at(r);
        let lower = p + 0.5 * (self.q_model.value() - self.p_model.value());
        let upper = critical_exponent(self.dims.n(), p);
        self.q_model.radial_value(r).max(lower).min(upper)
    }

    pub fn h_at(&self, r: f64) -> f64 {
        self.h_profile.as_ref().map_or(self.h0, |h| h(r))
    }

    pub fn f_at(&self, r: f64) -> f64 {
        self.f_profile.as_ref().map_or(1.0, |f| f(r))
    }

    pub fn f0(&self) -> f64 {
        self.f_at(0.0)
    }

    /// Cut-off bubble `u_ε` centred at the origin.
    pub fn bubble(&self, eps: f64) -> Result<BubbleParams> {
        BubbleParams::new(self.dims, eps, self.delta)
    }

    /// `-Δp(0) ≤ 0 ≤ -Δq(0)`.
    pub fn curvature_signs_hold(&self) -> bool {
        self.dp_laplacian() >= 0.0 && self.dq_laplacian() <= 0.0
    }
}

/// The three expansions of the bubble integrals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Expansion {
    /// `∫ f u_ε^{q(x)}`
    Lq,
    /// `∫ f |∇u_ε|^{p(x)}`
    Grad,
    /// `∫ f u_ε^{p(x)}`
    Lp,
}

impl Expansion {
    pub const ALL: [Expansion; 3] = [Expansion::Lq, Expansion::Grad, Expansion::Lp];

    pub fn name(self) -> &'static str {
        match self {
            Expansion::Lq => "lq",
            Expansion::Grad => "grad",
            Expansion::Lp => "lp",
        }
    }

    /// Validity range of the expansion.
    pub fn guard(self) -> &'static str {
        match self {
            Expansion::Lq => "p <= n/2",
            Expansion::Grad => "p < min(sqrt(n), (n+2)/3)",
            Expansion::Lp => "p < sqrt(n)",
        }
    }

    pub fn guard_holds(self, dims: &DimParams) -> bool {
        let (n, p) = (dims.nf(), dims.p());
        match self {
            Expansion::Lq => p <= n / 2.0,
            Expansion::Grad => p * p < n && 3.0 * p < n + 2.0,
            Expansion::Lp => p * p < n,
        }
    }

    pub fn check_guard(self, dims: &DimParams) -> Result<()> {
        if self.guard_holds(dims) {
            Ok(())
        } else {
            Err(Error::Guard {
                guard: self.guard(),
                n: dims.n(),
                p: dims.p(),
            })
        }
    }

    /// Label of the correction term.
    pub fn regressor_name(self) -> &'static str {
        match self {
            Expansion::Lq | Expansion::Grad => "eps^2 ln eps",
            Expansion::Lp => "eps^p",
        }
    }

    pub fn regressor(self, eps: f64, p: f64) -> f64 {
        match self {
            Expansion::Lq | Expansion::Grad => eps * eps * eps.ln(),
            Expansion::Lp => eps.powf(p),
        }
    }
}

/// State of one validity guard.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GuardFlag {
    pub expansion: Expansion,
    pub bound: String,
    pub satisfied: bool,
}

pub fn guard_flags(dims: &DimParams) -> Vec<GuardFlag> {
    Expansion::ALL
        .iter()
        .map(|e| GuardFlag {
            expansion: *e,
            bound: e.guard().to_string(),
            satisfied: e.guard_holds(dims),
        })
        .collect()
}
