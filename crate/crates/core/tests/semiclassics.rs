mod common;

use std::f64::consts::PI;
use std::sync::OnceLock;

use proptest::prelude::*;
use tfp_core::corrections::Dim;
use tfp_core::groundstate::{solve_many, GroundState, GroundStateConfig};
use tfp_core::semiclassics::*;
use tfp_core::spectrum::m0_spectrum;
use tfp_core::Error;

use common::hm_default;

const EPS: [f64; 3] = [0.1, 0.05, 0.025];

fn w0_profile() -> &'static PotentialProfile {
    static P: OnceLock<PotentialProfile> = OnceLock::new();
    P.get_or_init(|| PotentialProfile::from_solution(hm_default()).expect("W0 profile"))
}

fn mu_m0() -> &'static [f64] {
    static M: OnceLock<Vec<f64>> = OnceLock::new();
    M.get_or_init(|| m0_spectrum(hm_default(), 8, false).expect("M0").eigenvalues)
}

fn states() -> &'static [GroundState] {
    static S: OnceLock<Vec<GroundState>> = OnceLock::new();
    S.get_or_init(|| solve_many(&EPS, Dim::One, &GroundStateConfig::default()).expect("ground states"))
}

#[test]
fn simplified_turning_points_and_action() {
    let w = PotentialProfile::simplified();
    for mu in [0.5, 2.0, 9.0] {
        let (a, b) = turning_points(&w, mu).unwrap();
        assert!((a + mu).abs() < 1e-12 * (1.0 + mu) && (b - mu / 2.0).abs() < 1e-12 * (1.0 + mu));
        assert!((action(&w, mu).unwrap() - mu.powf(1.5)).abs() < 1e-9);
    }
    let (a, b) = turning_points(&w, 1e-9).unwrap();
    assert!(a < 0.0 && 0.0 < b && b - a < 1e-3);
}

#[test]
fn harmonic_action_is_circle_area() {
    let w = PotentialProfile::harmonic();
    for mu in [0.1, 1.0, 4.0, 25.0] {
        assert!((action(&w, mu).unwrap() - PI * mu / 2.0).abs() < 1e-9);
    }
    // y² levels: action π(2n−1) gives μ = 2(2n−1)
    for n in 1..=4 {
        assert!((bs_eigenvalue(&w, n).unwrap() - 2.0 * (2 * n - 1) as f64).abs() < 1e-8);
    }
}

#[test]
fn simplified_quantization_closed_form() {
    let w = PotentialProfile::simplified();
    assert!((bs_eigenvalue(&w, 1).unwrap() - 2.14503).abs() < 1e-5);
    for n in 1..=5 {
        let want = (PI * (2 * n - 1) as f64).powf(2.0 / 3.0);
        let got = bs_eigenvalue(&w, n).unwrap();
        assert!((got - want).abs() < 1e-8, "n={n} {got} vs {want}");
    }
}

#[test]
fn w0_profile_is_a_certified_single_well() {
    let w = w0_profile();
    assert_eq!(w.monotone_flags(), (true, true));
    let (loc, val) = w.well_min();
    assert!(loc > -1.0 && loc < 1.0 && val > 1.0);
    let mu1 = mu_m0()[0];
    let (a, b) = turning_points(w, mu1).unwrap();
    assert!(a < loc && loc < b);
    assert!((w.eval(a) - mu1).abs() < 1e-10 && (w.eval(b) - mu1).abs() < 1e-10);
    assert!(matches!(turning_points(w, val - 0.1), Err(Error::OutOfRange { .. })));
}

#[test]
fn w0_quantization_against_m0() {
    let rows = bs_table(w0_profile(), mu_m0()).unwrap();
    assert_eq!(rows.len(), 8);
    let rel = |n: usize| rows[n - 1].rel_err;
    assert!(rel(2) > rel(4) && rel(4) > rel(8), "{} {} {}", rel(2), rel(4), rel(8));
    assert!(rel(8) < 0.05);
    let mut buf = Vec::new();
    write_bs_csv(&rows, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().next(), Some("n,mu_bs,mu_m0,rel_err"));
    assert_eq!(text.lines().count(), 9);
}

#[test]
fn inverse_of_action() {
    for w in [w0_profile().clone(), PotentialProfile::simplified()] {
        for mu in [1.5, 3.0, 8.0] {
            let mu = mu + w.well_min().1;
            let a = action(&w, mu).unwrap();
            assert!((mu_for_action(&w, a).unwrap() - mu).abs() < 1e-8);
        }
    }
}

#[test]
fn change_of_variables_weight() {
    // x-form ∫√(λ − V(x)) dx against (ε/2)∫√(μ − W(y))(1 − ε^{2/3}y)^{−1/2} dy,
    // with V(x) = ε^{2/3} W((1 − x²)/ε^{2/3}) and λ = ε^{2/3} μ
    let w = |y: f64| (y - 0.3) * (y - 0.3) + 1.0;
    for eps in [0.1f64, 0.05] {
        let e = eps.powf(2.0 / 3.0);
        let v = move |x: f64| e * w((1.0 - x * x) / e);
        let xw = (1.0 - 0.3 * e).sqrt();
        let vx = PotentialProfile::from_fn(v, (xw, v(xw)), (0.0, 3.0)).unwrap();
        let wy = PotentialProfile::from_fn(w, (0.3, 1.0), (-8.0 / e, 1.0 / e)).unwrap();
        for mu in [1.5, 4.0, 9.0] {
            let x_form = action(&vx, e * mu).unwrap();
            let y_form = 0.5 * eps * weighted_action(&wy, mu, |y| (1.0 - e * y).powf(-0.5)).unwrap();
            assert!((x_form - y_form).abs() < 1e-8 * y_form, "eps={eps} mu={mu}: {x_form} {y_form}");
        }
    }
}

#[test]
fn x_rule_scale_and_limit() {
    let mu1 = mu_m0()[0];
    let y_rule = bs_eigenvalue(w0_profile(), 1).unwrap();
    let mut dist = Vec::new();
    for gs in states() {
        let r = bs_rule_x(gs, 1).unwrap();
        assert!((0.2..=20.0).contains(&r.scaled), "eps={} scaled {}", gs.eps(), r.scaled);
        assert!((r.lambda / gs.eps().powf(2.0 / 3.0) - r.scaled).abs() < 1e-12);
        dist.push((r.scaled - y_rule).abs());
    }
    // the x-rule tends to the W₀ rule, which stays away from μ₁
    assert!(dist.windows(2).all(|d| d[1] < d[0]), "{dist:?}");
    assert!((y_rule - mu1).abs() / mu1 > 0.01);
}

#[test]
fn bad_requests() {
    let w = PotentialProfile::simplified();
    assert!(bs_eigenvalue(&w, 0).is_err());
    assert!(action(&w, -0.5).is_err());
    let boxed = PotentialProfile::from_fn(|y| y * y, (0.0, 0.0), (-2.0, 2.0)).unwrap();
    assert!(matches!(bs_eigenvalue(&boxed, 5), Err(Error::Bracket(_))));
    assert!(PotentialProfile::from_fn(|y| y, (3.0, 3.0), (-1.0, 1.0)).is_err());
}

proptest! {
    #[test]
    fn action_increases_with_level(a in 0.01f64..20.0, b in 0.01f64..20.0) {
        prop_assume!((a - b).abs() > 1e-6);
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        for w in [PotentialProfile::simplified(), PotentialProfile::harmonic()] {
            prop_assert!(action(&w, lo).unwrap() < action(&w, hi).unwrap());
        }
    }

    #[test]
    fn turning_points_sit_on_the_level(mu in 0.01f64..50.0) {
        let w = PotentialProfile::harmonic();
        let (a, b) = turning_points(&w, mu).unwrap();
        prop_assert!((w.eval(a) - mu).abs() < 1e-10 * (1.0 + mu));
        prop_assert!((w.eval(b) - mu).abs() < 1e-10 * (1.0 + mu));
        prop_assert!(a < 0.0 && b > 0.0);
    }
}
