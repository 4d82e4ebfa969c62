//! Bohr–Sommerfeld quantization for single-well potentials.

use std::io::Write;
use std::num::NonZeroUsize;
use std::sync::{Arc, OnceLock};

use gauss_quad::GaussLegendre;

use crate::corrections::Dim;
use crate::error::{invalid, Error, Result};
use crate::grids::{CubicSpline, Grid1D};
use crate::groundstate::GroundState;
use crate::painleve::{parabola_vertex, PainleveSolution};
use crate::spectrum::lplus_potential;

/// Gauss–Legendre nodes per monotone branch.
pub const QUAD_NODES: usize = 200;

fn rule() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(NonZeroUsize::new(QUAD_NODES).expect("non-zero")))
}

type Closure = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
enum Evaluator {
    Closure(Closure),
    Samples(CubicSpline),
}

/// A potential with a single well on a certified range.
#[derive(Clone)]
pub struct PotentialProfile {
    eval: Evaluator,
    well: (f64, f64),
    range: (f64, f64),
    monotone_left: bool,
    monotone_right: bool,
}

impl std::fmt::Debug for PotentialProfile {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PotentialProfile")
            .field("well", &self.well)
            .field("range", &self.range)
            .finish()
    }
}

impl PotentialProfile {
    /// A closed-form single well with known minimum; `range` bounds the
    /// turning-point search.
    pub fn from_fn(f: impl Fn(f64) -> f64 + Send + Sync + 'static, well: (f64, f64), range: (f64, f64)) -> Result<Self> {
        if !(range.0 < well.0 && well.0 < range.1) {
            return Err(invalid("well location must lie inside the range"));
        }
        Ok(Self {
            eval: Evaluator::Closure(Arc::new(f)),
            well,
            range,
            monotone_left: true,
            monotone_right: true,
        })
    }

    /// `−y` for `y ≤ 0` and `2y` for `y ≥ 0`.
    pub fn simplified() -> Self {
        Self::from_fn(|y| if y >= 0.0 { 2.0 * y } else { -y }, (0.0, 0.0), (-1e6, 1e6)).expect("valid well")
    }

    /// `y²`.
    pub fn harmonic() -> Self {
        Self::from_fn(|y| y * y, (0.0, 0.0), (-1e6, 1e6)).expect("valid well")
    }

    /// Cubic-spline profile through samples. The well is the refined discrete
    /// minimum; the certified range is the widest interval around it on which
    /// the samples decrease to the left and increase to the right (ties are
    /// accepted).
    pub fn from_samples(grid: &Grid1D, values: &[f64]) -> Result<Self> {
        if values.len() != grid.len() || grid.len() < 3 {
            return Err(invalid("need at least 3 samples matching the grid"));
        }
        let y = grid.nodes();
        let j = values
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .expect("non-empty");
        if j == 0 || j + 1 == values.len() {
            return Err(Error::InvariantViolation {
                stage: "semiclassics",
                detail: "potential minimum sits at the end of the sample range".into(),
            });
        }
        let well = parabola_vertex([y[j - 1], y[j], y[j + 1]], [values[j - 1], values[j], values[j + 1]]);
        let mut lo = j;
        while lo > 0 && values[lo - 1] >= values[lo] {
            lo -= 1;
        }
        let mut hi = j;
        while hi + 1 < values.len() && values[hi + 1] >= values[hi] {
            hi += 1;
        }
        Ok(Self {
            eval: Evaluator::Samples(CubicSpline::new(grid, values)?),
            well,
            range: (y[lo], y[hi]),
            monotone_left: lo == 0,
            monotone_right: hi + 1 == values.len(),
        })
    }

    /// `W₀` of a Painlevé solution.
    pub fn from_solution(sol: &PainleveSolution) -> Result<Self> {
        Self::from_samples(sol.grid(), &sol.w0())
    }

    pub fn eval(&self, y: f64) -> f64 {
        match &self.eval {
            Evaluator::Closure(f) => f(y),
            Evaluator::Samples(s) => s.eval(y),
        }
    }

    /// `(location, value)` of the well bottom.
    pub fn well_min(&self) -> (f64, f64) {
        self.well
    }

    pub fn range(&self) -> (f64, f64) {
        self.range
    }

    /// Whether the whole sampled range left/right of the well is monotone.
    pub fn monotone_flags(&self) -> (bool, bool) {
        (self.monotone_left, self.monotone_right)
    }
}

/// Bisection for `W = μ` on a bracket where `W − μ` changes sign.
fn bisect_level(w: &PotentialProfile, mu: f64, mut a: f64, mut b: f64) -> f64 {
    let fa = w.eval(a) - mu;
    if fa == 0.0 {
        return a;
    }
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if (b - a).abs() <= 1e-13 * (1.0 + m.abs()) || m == a || m == b {
            break;
        }
        let fm = w.eval(m) - mu;
        if (fm > 0.0) == (fa > 0.0) {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Roots `y₋ < well < y₊` of `W(y) = μ`.
pub fn turning_points(w: &PotentialProfile, mu: f64) -> Result<(f64, f64)> {
    let (yw, vw) = w.well;
    if !(mu > vw) {
        return Err(Error::OutOfRange {
            what: "mu",
            value: mu,
            lo: vw,
            hi: f64::INFINITY,
        });
    }
    let (lo, hi) = w.range;
    if w.eval(lo) < mu || w.eval(hi) < mu {
        return Err(Error::OutOfRange {
            what: "mu",
            value: mu,
            lo: vw,
            hi: w.eval(lo).min(w.eval(hi)),
        });
    }
    // tighten the outer brackets for closed forms with huge ranges
    let mut left = yw - 1.0;
    while left > lo && w.eval(left) <= mu {
        left = yw - 2.0 * (yw - left);
    }
    let mut right = yw + 1.0;
    while right < hi && w.eval(right) <= mu {
        right = yw + 2.0 * (right - yw);
    }
    Ok((bisect_level(w, mu, left.max(lo), yw), bisect_level(w, mu, yw, right.min(hi))))
}

/// `∫_{y₋}^{y₊} g(y) √(μ − W(y)) dy`. Each monotone branch is mapped by
/// `y = y_tp ± L u²` (`u ∈ [0, 1]`, `L` the branch length), which turns the
/// square-root endpoint into a smooth integrand.
pub fn weighted_action(w: &PotentialProfile, mu: f64, g: impl Fn(f64) -> f64) -> Result<f64> {
    let (ym, yp) = turning_points(w, mu)?;
    let yw = w.well.0;
    let branch = |tp: f64, len: f64, dir: f64| {
        rule().integrate(0.0, 1.0, |u| {
            let y = tp + dir * len * u * u;
            (mu - w.eval(y)).max(0.0).sqrt() * g(y) * 2.0 * len * u
        })
    };
    Ok(branch(ym, yw - ym, 1.0) + branch(yp, yp - yw, -1.0))
}

/// `∫_{y₋}^{y₊} √(μ − W(y)) dy`.
pub fn action(w: &PotentialProfile, mu: f64) -> Result<f64> {
    weighted_action(w, mu, |_| 1.0)
}

/// Root in `μ` of `target(μ) = goal` for an increasing `target`, by bisection
/// interleaved with secant steps, to `tol` in the target value.
/// The upper end grows away from `lo` until it brackets the root or hits `hi_cap`.
fn solve_increasing(mut f: impl FnMut(f64) -> Result<f64>, goal: f64, lo: f64, mut hi: f64, hi_cap: f64, tol: f64) -> Result<f64> {
    let mut flo = f(lo)? - goal;
    let mut fhi = f(hi)? - goal;
    while fhi < 0.0 {
        if hi >= hi_cap {
            return Err(Error::Bracket(format!("no root below {hi_cap}")));
        }
        hi = (lo + 2.0 * (hi - lo)).min(hi_cap);
        fhi = f(hi)? - goal;
    }
    let mut lo = lo;
    if flo > 0.0 {
        return Err(Error::Bracket(format!("value at lower end {lo} already exceeds the goal")));
    }
    for it in 0..200 {
        let secant = lo - flo * (hi - lo) / (fhi - flo);
        let mid = if it % 2 == 0 && secant > lo && secant < hi { secant } else { 0.5 * (lo + hi) };
        let fm = f(mid)? - goal;
        if fm.abs() <= tol {
            return Ok(mid);
        }
        if fm < 0.0 {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
            fhi = fm;
        }
        if hi - lo <= 1e-15 * hi.abs() {
            return Ok(0.5 * (lo + hi));
        }
    }
    Err(Error::Bracket("bisection did not settle".into()))
}

/// `μ` with `action(W, μ) = π(2n − 1)`.
pub fn bs_eigenvalue(w: &PotentialProfile, n: usize) -> Result<f64> {
    if n < 1 {
        return Err(invalid("quantum number starts at 1"));
    }
    mu_for_action(w, std::f64::consts::PI * (2 * n - 1) as f64)
}

/// Inverse of [`action`]: the level `μ` whose action equals `goal` (to 1e−9).
pub fn mu_for_action(w: &PotentialProfile, goal: f64) -> Result<f64> {
    if !(goal > 0.0) {
        return Err(invalid("action target must be positive"));
    }
    let bottom = w.well.1;
    let (lo, hi) = w.range;
    let cap = w.eval(lo).min(w.eval(hi));
    let start = bottom + 1.0f64.min(0.5 * (cap - bottom));
    let mu_lo = bottom + 1e-12 * (1.0 + bottom.abs());
    solve_increasing(|mu| action(w, mu), goal, mu_lo, start, cap - 1e-12 * (1.0 + cap.abs()), 1e-9)
}

/// Result of the quantization rule in the original variable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct XRule {
    pub lambda: f64,
    pub scaled: f64,
}

/// Single-well profile of `V_ε` on the half-line, well near `x = 1`.
pub fn lplus_profile(gs: &GroundState) -> Result<PotentialProfile> {
    if gs.dim() != Dim::One {
        return Err(invalid("the x-rule uses a one-dimensional ground state"));
    }
    PotentialProfile::from_samples(gs.grid(), &lplus_potential(gs))
}

/// `λ` with `∫_{x₋}^{x₊} √(λ − V_ε(x)) dx = επ(n − 1/2)` on the half-line well.
pub fn bs_rule_x(gs: &GroundState, n: usize) -> Result<XRule> {
    if n < 1 {
        return Err(invalid("quantum number starts at 1"));
    }
    let v = lplus_profile(gs)?;
    let goal = gs.eps() * std::f64::consts::PI * (n as f64 - 0.5);
    let (lo, hi) = v.range;
    let cap = v.eval(lo).min(v.eval(hi));
    let bottom = v.well.1;
    let mu_lo = bottom + 1e-12 * (1.0 + bottom.abs());
    let start = bottom + 0.1 * (cap - bottom);
    let lambda = solve_increasing(|l| action(&v, l), goal, mu_lo, start, cap - 1e-12 * (1.0 + cap.abs()), 1e-12)?;
    Ok(XRule {
        lambda,
        scaled: lambda / gs.eps().powf(2.0 / 3.0),
    })
}

/// One row of the Bohr–Sommerfeld comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct BsRow {
    pub n: usize,
    pub mu_bs: f64,
    pub mu_m0: f64,
    pub rel_err: f64,
}

/// Bohr–Sommerfeld values for `W₀` against `M₀` eigenvalues (`mu[n−1] = μ_n`).
pub fn bs_table(w: &PotentialProfile, mu: &[f64]) -> Result<Vec<BsRow>> {
    mu.iter()
        .enumerate()
        .map(|(i, &m)| {
            let b = bs_eigenvalue(w, i + 1)?;
            Ok(BsRow {
                n: i + 1,
                mu_bs: b,
                mu_m0: m,
                rel_err: (b - m).abs() / m,
            })
        })
        .collect()
}

pub fn write_bs_csv<W: Write>(rows: &[BsRow], mut out: W) -> std::io::Result<()> {
    writeln!(out, "n,mu_bs,mu_m0,rel_err")?;
    for r in rows {
        writeln!(out, "{},{:.16e},{:.16e},{:.16e}", r.n, r.mu_bs, r.mu_m0, r.rel_err)?;
    }
    Ok(())
}
