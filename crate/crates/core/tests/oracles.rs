//! Closed forms against independent quadrature oracles, plus end-to-end
//! checks of the report types.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use proptest::prelude::*;

use varexp_core::energy::{
    bubble_direction, expansion_report, measure_expansion, mountain_pass_report, normalized_abc, sup_over_ray,
    EnergyProblem, Expansion, LevelSide, RayEnergy,
};
use varexp_core::instanton::{
    k_np, k_np_from_bubble, moments_closed_form, normalization_constant, u_profile, v_eps, BubbleParams,
    Moment,
};
use varexp_core::quadrature::{integrate, integrate_halfline, integrate_quadratic_form, integrate_radial, QuadSpec};
use varexp_core::special::{beta, gamma, ipq, sphere_area, DimParams};
use varexp_core::{Error, ExpansionReport, MPReport};

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

/// `∫₀^∞ t^{q-1}(1+t)^{-p} dt`, split at 1 with `t = s^{1/q}` below and
/// `t = s^{-1/(p-q)}` above so both pieces are smooth on `[0, 1]`.
fn defining_integral(p: f64, q: f64) -> f64 {
    let spec = QuadSpec::default();
    let head = integrate(|s| (1.0 + s.powf(1.0 / q)).powf(-p), 0.0, 1.0, &spec).unwrap().value / q;
    let tail = integrate(|s| (1.0 + s.powf(1.0 / (p - q))).powf(-p), 0.0, 1.0, &spec).unwrap().value / (p - q);
    head + tail
}

#[test]
fn beta_examples_against_quadrature() {
    assert!((beta(1.0, 1.0).unwrap() - 1.0).abs() < 1e-14);
    let b12 = beta(1.0, 2.0).unwrap();
    assert!(rel(b12, 0.5) < 1e-13);
    assert!(rel(b12, defining_integral(3.0, 1.0)) < 1e-8);
    let b = beta(2.5, 1.5).unwrap();
    let oracle = integrate_halfline(|t| t.powf(1.5) * (1.0 + t).powi(-4), &QuadSpec::default()).unwrap();
    assert!(rel(b, oracle.value) < 1e-8, "{b} {oracle:?}");
    assert!(rel(b, gamma(2.5).unwrap() * gamma(1.5).unwrap() / 6.0) < 1e-13);
}

#[test]
fn ipq_examples_against_quadrature() {
    for (p, q, exact) in [(3.0, 1.0, 0.5), (4.0, 2.0, 1.0 / 6.0)] {
        let v = ipq(p, q).unwrap();
        assert!(rel(v, exact) < 1e-13);
        assert!(rel(v, defining_integral(p, q)) < 1e-8);
    }
    assert!(matches!(ipq(2.0, 2.0), Err(Error::DivergentIntegral { .. })));
    assert!(matches!(ipq(2.0, 0.0), Err(Error::DivergentIntegral { .. })));
}

#[test]
fn sphere_area_matches_gaussian_integral() {
    // ∫ e^{-r²} = π^{n/2} determines ω_{n-1}
    for n in 1..=8u32 {
        let gauss = integrate_halfline(|r| (-r * r).exp() * r.powi(n as i32 - 1), &QuadSpec::default())
            .unwrap()
            .value;
        assert!(rel(sphere_area(n).unwrap() * gauss, PI.powf(n as f64 / 2.0)) < 1e-10, "n = {n}");
    }
    assert!(rel(sphere_area(5).unwrap(), 8.0 * PI * PI / 3.0) < 1e-13);
}

#[test]
fn radial_examples() {
    let spec = QuadSpec::default();
    let v = integrate_radial(4, |r| (1.0 + r * r).powi(-4), &spec).unwrap().value;
    assert!(rel(v, PI * PI / 6.0) < 1e-9);
    let v = integrate_radial(5, |r| (1.0 + r * r).powi(-5) * r * r, &spec).unwrap().value;
    assert!(rel(v, 5.0 * PI.powi(3) / 96.0) < 1e-9);
    let m = moments_closed_form(&DimParams::new(5, 2.0).unwrap()).unwrap();
    assert!(rel(m.m_q2().unwrap(), v) < 1e-9);
}

#[test]
fn quadratic_form_examples() {
    let spec = QuadSpec::default();
    let g = |r: f64| (-r * r).exp();
    let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 3.0]);
    let v = integrate_quadratic_form(2, g, &a, &spec).unwrap().value;
    assert!(rel(v, 2.0 * PI) < 1e-9, "{v}");
    let v = integrate_quadratic_form(2, g, &DMatrix::identity(2, 2), &spec).unwrap().value;
    assert!(rel(v, PI) < 1e-9);
    let skew = DMatrix::from_row_slice(3, 3, &[0.0, 1.0, -2.0, -1.0, 0.0, 0.5, 2.0, -0.5, 0.0]);
    assert!(integrate_quadratic_form(3, g, &skew, &spec).unwrap().value.abs() < 1e-12);
}

#[test]
fn normalized_bubble_carries_threshold_energy() {
    // ∫|∇(C U)|^p over ℝⁿ by direct quadrature of the scaled derivative
    for (n, p) in [(4u32, 2.0), (5, 2.0), (6, 2.5), (4, 1.8)] {
        let dims = DimParams::new(n, p).unwrap();
        let c = normalization_constant(&dims).unwrap();
        let bp = BubbleParams::full_space(dims, 1.0).unwrap();
        let h = 1e-6;
        let grad = integrate_radial(
            n,
            |r| {
                let d = (v_eps(&bp, c, r + h) - v_eps(&bp, c, (r - h).max(0.0))) / (r + h - (r - h).max(0.0));
                d.abs().powf(p)
            },
            &QuadSpec::with_tolerances(1e-12, 1e-9),
        )
        .unwrap()
        .value;
        let target = k_np(&dims).unwrap().powf(-(n as f64));
        assert!(rel(grad, target) < 1e-6, "n={n} p={p}: {grad} vs {target}");
    }
}

#[test]
fn sobolev_quotient_is_scale_invariant() {
    let dims = DimParams::new(5, 2.0).unwrap();
    let k = k_np(&dims).unwrap();
    for eps in [0.1, 1.0, 7.0] {
        assert!(rel(k_np_from_bubble(&dims, eps, &QuadSpec::default()).unwrap(), k) < 1e-8);
    }
}

#[test]
fn normalized_a_matches_direct_bubble_integral() {
    // ∫|v_ε|^{q(x)} - K^{-n} against A ε² ln ε, using the full-space bubble
    let prob = EnergyProblem::isotropic(6, 2.0, 0.0, -12.0, 0.0)
        .unwrap()
        .with_delta(f64::INFINITY)
        .unwrap();
    let dims = prob.dims();
    let abc = normalized_abc(&prob).unwrap();
    let c = normalization_constant(&dims).unwrap();
    let kn = k_np(&dims).unwrap().powf(-6.0);
    let mut est = Vec::new();
    for k in [7, 8] {
        let eps = 2f64.powi(-k);
        let bp = prob.bubble(eps).unwrap();
        let measured = integrate_radial(6, |r| v_eps(&bp, c, r).powf(prob.q_at(r)), &QuadSpec::with_tolerances(1e-16, 1e-13))
            .unwrap()
            .value;
        est.push(((measured - kn) / (eps * eps), eps.ln()));
    }
    let slope = (est[0].0 - est[1].0) / (est[0].1 - est[1].1);
    assert!(rel(slope, abc.a) < 0.1, "{slope} vs {}", abc.a);
}

#[test]
fn constant_q_remainder_is_higher_order() {
    // flat q: the cut-off bubble differs from the full moment by O(ε^{n/p})
    let prob = EnergyProblem::isotropic(5, 2.0, 0.0, 0.0, 0.0).unwrap();
    let m_q0 = Moment::Q0.closed_form(&prob.dims()).unwrap();
    let spec = QuadSpec::with_tolerances(1e-16, 1e-13);
    let scaled: Vec<f64> = (5..=8)
        .map(|k| {
            let eps = 2f64.powi(-k);
            let v = measure_expansion(Expansion::Lq, &prob, eps, &spec).unwrap().value;
            (v - m_q0).abs() / eps.powf(5.0)
        })
        .collect();
    let spread = scaled.iter().cloned().fold(0.0, f64::max) / scaled.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!(spread < 2.0, "{scaled:?}");
}

#[test]
fn constant_p_gradient_remainder_is_higher_order() {
    // flat p: deviation of ∫|∇u_ε|^p scales like ε^{(n-p)/(p-1)}
    let prob = EnergyProblem::isotropic(5, 2.0, 0.0, 0.0, 0.0).unwrap();
    let m_g0 = Moment::G0.closed_form(&prob.dims()).unwrap();
    let spec = QuadSpec::with_tolerances(1e-16, 1e-13);
    let scaled: Vec<f64> = (4..=7)
        .map(|k| {
            let eps = 2f64.powi(-k);
            let v = measure_expansion(Expansion::Grad, &prob, eps, &spec).unwrap().value;
            (v - m_g0).abs() / eps.powf(3.0)
        })
        .collect();
    let spread = scaled.iter().cloned().fold(0.0, f64::max) / scaled.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!(spread < 2.0, "{scaled:?}");
}

#[test]
fn ray_energy_matches_explicit_functional() {
    let prob = EnergyProblem::isotropic(4, 1.8, 0.0, 0.0, -1.0).unwrap();
    let eps = 2f64.powi(-5);
    let v = bubble_direction(&prob, eps).unwrap();
    let energy = RayEnergy::new(&prob, &v).unwrap();
    let (grad, low, crit) = energy.parts();
    let (p, q) = (1.8, prob.dims().p_star());
    for t in [0.5f64, 1.0, 1.3] {
        let explicit = t.powf(p) * grad / p + t.powf(p) * low / p - t.powf(q) * crit / q;
        assert!((energy.eval(t) - explicit).abs() < 1e-12 * grad, "t = {t}");
    }
}

#[test]
fn lower_order_term_pushes_level_below() {
    let prob = EnergyProblem::isotropic(4, 1.8, 0.0, 0.0, -1.0).unwrap();
    let eps: Vec<f64> = (6..=8).map(|k| 2f64.powi(-k)).collect();
    let report = mountain_pass_report(&prob, &eps, 1e-9).unwrap();
    assert_eq!(report.prediction, LevelSide::Below);
    assert_eq!(report.observed, LevelSide::Below);
    assert!(report.verdict_matches);
    // margins shrink towards the threshold as ε decreases
    assert!(report.rows.windows(2).all(|w| w[1].margin.abs() < w[0].margin.abs()));
    let predicted = report.predicted_coefficient.unwrap();
    assert!(rel(report.fitted_coefficient, predicted) < 0.15);
}

#[test]
fn t_eps_moves_by_the_predicted_shift() {
    let prob = EnergyProblem::isotropic(4, 1.8, 0.0, 0.0, -1.0).unwrap();
    let eps = [2f64.powi(-8)];
    let report = mountain_pass_report(&prob, &eps, 1e-9).unwrap();
    let predicted = report.t_shift_predicted.unwrap();
    assert!(predicted.signum() == report.t_shift_observed.signum());
    assert!(rel(report.t_shift_observed, predicted) < 0.15, "{} vs {predicted}", report.t_shift_observed);
}

#[test]
fn constant_exponents_sit_at_threshold() {
    let prob = EnergyProblem::isotropic(5, 2.0, 0.0, 0.0, 0.0).unwrap().with_delta(f64::INFINITY).unwrap();
    let report = mountain_pass_report(&prob, &[2f64.powi(-6)], 1e-8).unwrap();
    assert_eq!(report.prediction, LevelSide::AtThreshold);
    assert_eq!(report.observed, LevelSide::AtThreshold);
    assert!(report.delta.is_none());
    let row = sup_over_ray(&prob, 2f64.powi(-6)).unwrap();
    assert!((row.t_eps - 1.0).abs() < 1e-6);
}

#[test]
fn reports_round_trip_through_json_and_csv() {
    let prob = EnergyProblem::isotropic(5, 2.0, 10.0, 0.0, 0.0).unwrap();
    let eps: Vec<f64> = (4..=6).map(|k| 2f64.powi(-k)).collect();
    let report = expansion_report(&prob, Expansion::Grad, &eps, false).unwrap();
    let json = serde_json::to_string(&report).unwrap();
    let back: ExpansionReport = serde_json::from_str(&json).unwrap();
    assert_eq!(back, report);
    assert_eq!(serde_json::to_value(&report).unwrap()["expansion"], "grad");
    let mut buf = Vec::new();
    report.write_rows_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().count(), 1 + eps.len());
    assert!(text.starts_with("eps,measured,"));

    let prob = EnergyProblem::isotropic(4, 1.8, 0.0, 0.0, -1.0).unwrap();
    let mp = mountain_pass_report(&prob, &[2f64.powi(-5)], 1e-9).unwrap();
    let back: MPReport = serde_json::from_str(&serde_json::to_string(&mp).unwrap()).unwrap();
    assert_eq!(back, mp);
}

#[test]
fn instanton_profile_decay_rate() {
    let dims = DimParams::new(5, 2.0).unwrap();
    let (a, b): (f64, f64) = (1e4, 2e4);
    let slope = (u_profile(&dims, b) / u_profile(&dims, a)).ln() / (b / a).ln();
    assert!((slope + 3.0).abs() < 1e-6);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn ipq_matches_defining_integral(p in 2.5f64..12.0, frac in 0.1f64..0.9) {
        let q = frac * p;
        let v = ipq(p, q).unwrap();
        prop_assert!(rel(v, defining_integral(p, q)) < 1e-8);
    }

    #[test]
    fn moments_agree_with_radial_quadrature(n in 3u32..=8, p in 1.2f64..2.8) {
        prop_assume!(p < n as f64);
        let dims = DimParams::new(n, p).unwrap();
        for m in [Moment::Q0, Moment::G0] {
            let closed = m.closed_form(&dims).unwrap();
            let quad = integrate_radial(n, |r| m.integrand(&dims, r), &QuadSpec::default()).unwrap().value;
            prop_assert!(rel(closed, quad) < 1e-8, "{} n={} p={}", m.name(), n, p);
        }
    }
}
