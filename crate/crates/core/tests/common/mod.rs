#![allow(dead_code)]

use std::sync::OnceLock;

use tfp_core::painleve::{solve_hastings_mcleod, tail_minus, tail_minus_derivative, HmConfig, PainleveSolution};

/// Default Hastings–McLeod solve, shared across tests of one binary.
pub fn hm_default() -> &'static PainleveSolution {
    static SOL: OnceLock<PainleveSolution> = OnceLock::new();
    SOL.get_or_init(|| solve_hastings_mcleod(&HmConfig::default()).expect("default solve"))
}

enum Fate {
    Blows,
    Turns,
}

/// RK4 for `4ν'' = ν³ − yν` from `y0` upward, starting on `k·tail_minus`.
/// Returns the fate of the trajectory and `ν(0)`.
fn shoot(k: f64, y0: f64, h: f64) -> (Fate, f64) {
    let f = |y: f64, v: f64, dv: f64| (dv, (v * v * v - y * v) / 4.0);
    let mut y = y0;
    let mut v = k * tail_minus(y0).unwrap();
    let mut dv = k * tail_minus_derivative(y0).unwrap();
    let mut at_zero = f64::NAN;
    let steps = ((-y0) / h).round() as usize;
    let mut i = 0usize;
    loop {
        if i == steps {
            at_zero = v;
        }
        if v > 3.0 * (y.max(0.0) + 1.0).sqrt() {
            return (Fate::Blows, at_zero);
        }
        if dv < 0.0 && y > -5.0 {
            return (Fate::Turns, at_zero);
        }
        if y > 12.0 {
            return (Fate::Turns, at_zero);
        }
        let (a1, b1) = f(y, v, dv);
        let (a2, b2) = f(y + h / 2.0, v + h / 2.0 * a1, dv + h / 2.0 * b1);
        let (a3, b3) = f(y + h / 2.0, v + h / 2.0 * a2, dv + h / 2.0 * b2);
        let (a4, b4) = f(y + h, v + h * a3, dv + h * b3);
        v += h / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
        dv += h / 6.0 * (b1 + 2.0 * b2 + 2.0 * b3 + b4);
        i += 1;
        y = y0 + i as f64 * h;
    }
}

/// `ν₀(0)` by shooting from the left tail and bisecting on the amplitude.
pub fn shooting_nu0_at_zero() -> f64 {
    static V: OnceLock<f64> = OnceLock::new();
    *V.get_or_init(|| {
        let (mut lo, mut hi) = (0.9, 1.1);
        let mut last = f64::NAN;
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            let (fate, v0) = shoot(mid, -20.0, 1e-3);
            if v0.is_finite() {
                last = v0;
            }
            match fate {
                Fate::Blows => hi = mid,
                Fate::Turns => lo = mid,
            }
        }
        last
    })
}
