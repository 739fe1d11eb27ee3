//! Gamma and Beta functions, the instanton integral family
//! `I_p^q = ∫₀^∞ t^{q-1} (1+t)^{-p} dt`, and the dimensional parameters
//! shared by every other module.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Spatial dimension `n` and the exponent `p` at the concentration point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DimParams {
    n: u32,
    p: f64,
}

impl DimParams {
    /// Requires `n >= 2` and `1 < p < n`.
    pub fn new(n: u32, p: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidParams(format!("dimension n = {n} must be >= 2")));
        }
        if !(p.is_finite() && p > 1.0 && p < n as f64) {
            return Err(Error::InvalidParams(format!(
                "exponent p = {p} must lie in (1, n) with n = {n}"
            )));
        }
        Ok(Self { n, p })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn nf(&self) -> f64 {
        self.n as f64
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    /// Critical Sobolev exponent `p* = np/(n-p)`.
    pub fn p_star(&self) -> f64 {
        critical_exponent(self.n, self.p)
    }
}

/// `np/(n-p)`, or `+inf` once `p >= n`.
pub fn critical_exponent(n: u32, p: f64) -> f64 {
    let n = n as f64;
    if p >= n {
        f64::INFINITY
    } else {
        n * p / (n - p)
    }
}

// Lanczos approximation, g = 7, nine terms.
const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

fn lanczos_sum(z: f64) -> f64 {
    // z is the shifted argument x - 1
    LANCZOS[1..]
        .iter()
        .enumerate()
        .fold(LANCZOS[0], |acc, (i, c)| acc + c / (z + (i + 1) as f64))
}

/// Γ(x) for any real x that is not a pole; the public entry points
/// restrict to x > 0.
fn gamma_unchecked(x: f64) -> f64 {
    if x < 0.5 {
        // reflection
        PI / ((PI * x).sin() * gamma_unchecked(1.0 - x))
    } else {
        let z = x - 1.0;
        let t = z + LANCZOS_G + 0.5;
        (2.0 * PI).sqrt() * t.powf(z + 0.5) * (-t).exp() * lanczos_sum(z)
    }
}

fn ln_gamma_unchecked(x: f64) -> f64 {
    if x < 0.5 {
        (PI / (PI * x).sin()).abs().ln() - ln_gamma_unchecked(1.0 - x)
    } else {
        let z = x - 1.0;
        let t = z + LANCZOS_G + 0.5;
        0.5 * (2.0 * PI).ln() + (z + 0.5) * t.ln() - t + lanczos_sum(z).ln()
    }
}

fn check_positive(name: &str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} requires a positive finite argument, got {x}")))
    }
}

/// The Gamma function on the positive half-line.
pub fn gamma(x: f64) -> Result<f64> {
    check_positive("gamma", x)?;
    Ok(gamma_unchecked(x))
}

/// `ln Γ(x)` for `x > 0`.
pub fn ln_gamma(x: f64) -> Result<f64> {
    check_positive("ln_gamma", x)?;
    Ok(ln_gamma_unchecked(x))
}

/// Euler's Beta function `B(x, y) = Γ(x)Γ(y)/Γ(x+y)`.
pub fn beta(x: f64, y: f64) -> Result<f64> {
    check_positive("beta", x)?;
    check_positive("beta", y)?;
    if x + y < 150.0 {
        Ok(gamma_unchecked(x) * gamma_unchecked(y) / gamma_unchecked(x + y))
    } else {
        Ok((ln_gamma_unchecked(x) + ln_gamma_unchecked(y) - ln_gamma_unchecked(x + y)).exp())
    }
}

/// `I_p^q = ∫₀^∞ t^{q-1}(1+t)^{-p} dt = B(q, p-q)`.
///
/// The integral converges only for `0 < q < p`; anything else is reported as
/// [`Error::DivergentIntegral`].
pub fn ipq(p: f64, q: f64) -> Result<f64> {
    if !(q > 0.0 && q < p) || !p.is_finite() {
        return Err(Error::DivergentIntegral { p, q });
    }
    beta(q, p - q)
}

/// Surface measure of the unit sphere `S^{n-1} ⊂ ℝⁿ`, `2π^{n/2}/Γ(n/2)`.
pub fn sphere_area(n: u32) -> Result<f64> {
    if n < 1 {
        return Err(Error::Domain("sphere_area requires n >= 1".into()));
    }
    let half = n as f64 / 2.0;
    Ok(2.0 * PI.powf(half) / gamma_unchecked(half))
}
