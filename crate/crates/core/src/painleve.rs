//! The Hastings–McLeod solution of `4ν'' + yν − ν³ = 0`, its tail series and
//! the linearization potential `W₀ = 3ν₀² − y`.

use std::io::Write;

use log::warn;

use crate::error::{invalid, Error, Result};
use crate::grids::{first_difference, second_difference, CubicSpline, Grid1D, TridiagonalOperator};

/// Coefficients `b_n` of `ν₀(y) ≈ y^{1/2} Σ b_n (2y)^{-3n/2}` as `y → +∞`.
#[derive(Debug, Clone, PartialEq)]
pub struct TailSeries {
    coeffs: Vec<f64>,
}

impl TailSeries {
    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Highest index `M` carried by the series.
    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// The series cut after `b_m`.
    pub fn truncated(&self, m: usize) -> TailSeries {
        TailSeries {
            coeffs: self.coeffs[..=m.min(self.order())].to_vec(),
        }
    }

    /// Magnitude of the n-th term `|b_n| y^{1/2} (2y)^{-3n/2}`.
    pub fn term(&self, n: usize, y: f64) -> f64 {
        self.coeffs.get(n).copied().unwrap_or(0.0).abs() * y.sqrt() * (2.0 * y).powf(-1.5 * n as f64)
    }
}

/// `b_0..b_M` from the three-term recursion obtained by substituting the
/// series into the equation:
///
/// `b_{n+2} = 4(9n²−1) b_n − (3/2) Σ_{m=1}^{n+1} b_m b_{n+2−m}
///            − (1/2) Σ_{l,m,k ≥ 1, l+m+k = n+2} b_l b_m b_k`.
pub fn bn_coefficients(m: usize) -> Result<TailSeries> {
    if m < 1 {
        return Err(invalid("tail series needs M >= 1"));
    }
    let mut b = vec![1.0, 0.0];
    for n in 0..m.saturating_sub(1) {
        let k = n + 2;
        let pairs: f64 = (1..k).map(|i| b[i] * b[k - i]).sum();
        let mut triples = 0.0;
        for l in 1..k {
            for j in 1..k - l {
                triples += b[l] * b[j] * b[k - l - j];
            }
        }
        let nf = n as f64;
        b.push(4.0 * (9.0 * nf * nf - 1.0) * b[n] - 1.5 * pairs - 0.5 * triples);
    }
    b.truncate(m + 1);
    Ok(TailSeries { coeffs: b })
}

/// Partial sum of the right-tail series and its term-by-term derivative.
pub fn tail_plus(y: f64, series: &TailSeries) -> Result<(f64, f64)> {
    if !(y > 0.0) {
        return Err(Error::OutOfRange {
            what: "y",
            value: y,
            lo: 0.0,
            hi: f64::INFINITY,
        });
    }
    let mut value = 0.0;
    let mut slope = 0.0;
    let mut last = f64::INFINITY;
    for (n, &b) in series.coeffs.iter().enumerate() {
        let p = 0.5 - 1.5 * n as f64;
        let c = b * 2f64.powf(-1.5 * n as f64);
        let t = c * y.powf(p);
        value += t;
        slope += c * p * y.powf(p - 1.0);
        if b != 0.0 {
            if t.abs() > last {
                warn!("tail_plus: series terms grow at y={y}; asymptotic range not reached");
            }
            last = t.abs();
        }
    }
    Ok((value, slope))
}

/// Leading left-tail asymptote `π^{-1/2} (−y)^{-1/4} exp(−(−y)^{3/2}/3)`,
/// i.e. `2^{5/6} Ai(−2^{-2/3} y)` to leading order.
pub fn tail_minus(y: f64) -> Result<f64> {
    if !(y < 0.0) {
        return Err(Error::OutOfRange {
            what: "y",
            value: y,
            lo: f64::NEG_INFINITY,
            hi: 0.0,
        });
    }
    if y > -1.0 {
        warn!("tail_minus: y={y} is outside the asymptotic range");
    }
    let s = -y;
    Ok(std::f64::consts::PI.sqrt().recip() * s.powf(-0.25) * (-s.powf(1.5) / 3.0).exp())
}

/// Derivative of [`tail_minus`].
pub fn tail_minus_derivative(y: f64) -> Result<f64> {
    let v = tail_minus(y)?;
    let s = -y;
    // d/dy = -d/ds; d/ds log v = -1/(4s) - s^{1/2}/2
    Ok(v * (0.25 / s + 0.5 * s.sqrt()))
}

/// Truncation and solver controls for [`solve_hastings_mcleod`].
#[derive(Debug, Clone, PartialEq)]
pub struct HmConfig {
    pub y_min: f64,
    pub y_max: f64,
    pub n_nodes: usize,
    pub tol: f64,
    pub tail_terms: usize,
    pub max_iter: usize,
}

impl Default for HmConfig {
    fn default() -> Self {
        Self {
            y_min: -20.0,
            y_max: 40.0,
            n_nodes: 6001,
            tol: 1e-10,
            tail_terms: 6,
            max_iter: 100,
        }
    }
}

impl HmConfig {
    pub fn validate(&self) -> Result<()> {
        if self.y_min > -15.0 {
            return Err(invalid(format!("y_min must be <= -15 (got {})", self.y_min)));
        }
        if self.y_max < 30.0 {
            return Err(invalid(format!("y_max must be >= 30 (got {})", self.y_max)));
        }
        if self.n_nodes < 2000 {
            return Err(invalid(format!("n_nodes must be >= 2000 (got {})", self.n_nodes)));
        }
        if !(self.tol > 0.0) {
            return Err(invalid("tol must be positive"));
        }
        if self.tail_terms < 1 {
            return Err(invalid("tail_terms must be >= 1"));
        }
        Ok(())
    }
}

/// Sampled Hastings–McLeod solution on a truncated line.
#[derive(Debug, Clone)]
pub struct PainleveSolution {
    grid: Grid1D,
    nu0: Vec<f64>,
    dnu0: Vec<f64>,
    residual_max: f64,
    tail_terms: usize,
    tol: f64,
    iterations: usize,
    series: TailSeries,
    spline: CubicSpline,
}

/// Interior residual `4D²ν + yν − ν³` (zero at the two pinned ends).
pub fn p2_residual(grid: &Grid1D, nu: &[f64]) -> Result<Vec<f64>> {
    let d2 = second_difference(nu, grid)?;
    let n = grid.len();
    let mut r: Vec<f64> = grid
        .nodes()
        .iter()
        .zip(nu)
        .zip(&d2)
        .map(|((&y, &v), &dd)| 4.0 * dd + y * v - v * v * v)
        .collect();
    r[0] = 0.0;
    r[n - 1] = 0.0;
    Ok(r)
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

/// Smooth positive starting profile `sqrt((y + sqrt(y² + 4))/2)`.
pub fn initial_guess(y: f64) -> f64 {
    ((y + (y * y + 4.0).sqrt()) / 2.0).sqrt()
}

/// Damped Newton solve of the finite-difference Painlevé-II system with the
/// ends pinned to the tail asymptotes.
pub fn solve_hastings_mcleod(cfg: &HmConfig) -> Result<PainleveSolution> {
    cfg.validate()?;
    let grid = Grid1D::uniform(cfg.y_min, cfg.y_max, cfg.n_nodes)?;
    let guess: Vec<f64> = grid.nodes().iter().map(|&y| initial_guess(y)).collect();
    solve_from(cfg, grid, guess)
}

/// Same as [`solve_hastings_mcleod`] but starting from supplied samples.
pub fn solve_hastings_mcleod_with_guess(cfg: &HmConfig, guess: &[f64]) -> Result<PainleveSolution> {
    cfg.validate()?;
    let grid = Grid1D::uniform(cfg.y_min, cfg.y_max, cfg.n_nodes)?;
    if guess.len() != grid.len() {
        return Err(invalid("initial guess length must equal n_nodes"));
    }
    solve_from(cfg, grid, guess.to_vec())
}

fn solve_from(cfg: &HmConfig, grid: Grid1D, mut nu: Vec<f64>) -> Result<PainleveSolution> {
    const STAGE: &str = "painleve";
    let series = bn_coefficients(cfg.tail_terms)?;
    let n = grid.len();
    let h = grid.step().expect("uniform grid");
    nu[0] = tail_minus(cfg.y_min)?;
    nu[n - 1] = tail_plus(cfg.y_max, &series)?.0;

    let y = grid.nodes().to_vec();
    let mut res = p2_residual(&grid, &nu)?;
    let mut rnorm = max_abs(&res);
    let mut iterations = 0;
    let c = 4.0 / (h * h);
    while rnorm > cfg.tol && iterations < cfg.max_iter {
        iterations += 1;
        let mut sub = vec![c; n - 1];
        let mut sup = vec![c; n - 1];
        let mut diag: Vec<f64> = (0..n).map(|i| -2.0 * c + y[i] - 3.0 * nu[i] * nu[i]).collect();
        // pinned ends: their steps are zero, so drop the couplings to them
        diag[0] = 1.0;
        sup[0] = 0.0;
        sub[0] = 0.0;
        diag[n - 1] = 1.0;
        sub[n - 2] = 0.0;
        sup[n - 2] = 0.0;
        let jac = TridiagonalOperator::new(sub, diag, sup)?;
        let rhs: Vec<f64> = res.iter().map(|r| -r).collect();
        let step = crate::grids::solve_tridiagonal(&jac, &rhs)?;

        let mut lambda = 1.0;
        let mut accepted = None;
        for _ in 0..=30 {
            let trial: Vec<f64> = nu.iter().zip(&step).map(|(v, d)| v + lambda * d).collect();
            let tres = p2_residual(&grid, &trial)?;
            let tnorm = max_abs(&tres);
            if tnorm < rnorm {
                accepted = Some((trial, tres, tnorm));
                break;
            }
            lambda *= 0.5;
        }
        let Some((trial, tres, tnorm)) = accepted else {
            // residual sits at its rounding floor
            break;
        };
        let moved = lambda * max_abs(&step);
        nu = trial;
        res = tres;
        rnorm = tnorm;
        if moved <= 1e-14 * (1.0 + max_abs(&nu)) {
            break;
        }
    }
    if !(rnorm <= cfg.tol) {
        return Err(Error::NonConvergence {
            stage: STAGE,
            iterations,
            residual: rnorm,
        });
    }

    if let Some(i) = nu.iter().position(|&v| !(v > 0.0)) {
        return Err(Error::InvariantViolation {
            stage: STAGE,
            detail: format!("nu0 not positive at y={}", y[i]),
        });
    }
    if let Some(i) = nu.windows(2).position(|w| !(w[1] > w[0])) {
        return Err(Error::InvariantViolation {
            stage: STAGE,
            detail: format!("nu0 not increasing at y={}", y[i]),
        });
    }

    let dnu0 = first_difference(&nu, &grid)?;
    let spline = CubicSpline::new(&grid, &nu)?;
    let sol = PainleveSolution {
        grid,
        nu0: nu,
        dnu0,
        residual_max: rnorm,
        tail_terms: cfg.tail_terms,
        tol: cfg.tol,
        iterations,
        series,
        spline,
    };
    let inflections = sol.inflection_count()?;
    if inflections != 1 {
        return Err(Error::InvariantViolation {
            stage: STAGE,
            detail: format!("nu0'' changes sign {inflections} times"),
        });
    }
    Ok(sol)
}

impl PainleveSolution {
    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn nu0(&self) -> &[f64] {
        &self.nu0
    }

    pub fn dnu0(&self) -> &[f64] {
        &self.dnu0
    }

    pub fn residual_max(&self) -> f64 {
        self.residual_max
    }

    pub fn tail_terms(&self) -> usize {
        self.tail_terms
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn series(&self) -> &TailSeries {
        &self.series
    }

    /// `ν₀''` from the equation itself, `(ν₀³ − yν₀)/4`.
    pub fn d2nu0(&self) -> Vec<f64> {
        self.grid
            .nodes()
            .iter()
            .zip(&self.nu0)
            .map(|(&y, &v)| (v * v * v - y * v) / 4.0)
            .collect()
    }

    /// `ν₀(y)` by spline inside the grid and by the tail asymptotes outside.
    pub fn nu0_at(&self, y: f64) -> f64 {
        if y < self.grid.start() {
            tail_minus(y).unwrap_or(0.0)
        } else if y > self.grid.end() {
            tail_plus(y, &self.series).map(|t| t.0).unwrap_or(f64::NAN)
        } else {
            self.spline.eval(y)
        }
    }

    pub fn w0(&self) -> Vec<f64> {
        w0_eval(self)
    }

    pub fn w0_at(&self, y: f64) -> f64 {
        let v = self.nu0_at(y);
        3.0 * v * v - y
    }

    /// Sign changes of the discrete second difference of the samples.
    pub fn inflection_count(&self) -> Result<usize> {
        let d2 = second_difference(&self.nu0, &self.grid)?;
        let signs: Vec<bool> = d2.iter().filter(|v| **v != 0.0).map(|v| *v > 0.0).collect();
        Ok(signs.windows(2).filter(|w| w[0] != w[1]).count())
    }

    /// Writes `y,nu0,dnu0,W0` with 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "y,nu0,dnu0,W0")?;
        for (i, &y) in self.grid.nodes().iter().enumerate() {
            let v = self.nu0[i];
            writeln!(out, "{:.16e},{:.16e},{:.16e},{:.16e}", y, v, self.dnu0[i], 3.0 * v * v - y)?;
        }
        Ok(())
    }

    /// Samples mapped to the standard form `q'' = sq + 2q³` through
    /// `ν(y) = 2^{5/6} q(−2^{-2/3} y)`; returned on an increasing `s` grid.
    pub fn standard_form(&self) -> Result<(Grid1D, Vec<f64>)> {
        let a = 2f64.powf(5.0 / 6.0);
        let c = 2f64.powf(-2.0 / 3.0);
        let s: Vec<f64> = self.grid.nodes().iter().rev().map(|&y| -c * y).collect();
        let q: Vec<f64> = self.nu0.iter().rev().map(|v| v / a).collect();
        Ok((Grid1D::from_nodes(s)?, q))
    }
}

/// `W₀ = 3ν₀² − y` on the solution grid.
pub fn w0_eval(sol: &PainleveSolution) -> Vec<f64> {
    sol.grid
        .nodes()
        .iter()
        .zip(&sol.nu0)
        .map(|(&y, &v)| 3.0 * v * v - y)
        .collect()
}

/// Location and value of the minimum of `W₀`, refined by the parabola through
/// the discrete minimizer and its neighbours.
pub fn w0_min(sol: &PainleveSolution) -> Result<(f64, f64)> {
    let w = w0_eval(sol);
    let y = sol.grid.nodes();
    let j = w
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .expect("non-empty grid");
    let (loc, val) = if j == 0 || j + 1 == w.len() {
        (y[j], w[j])
    } else {
        parabola_vertex([y[j - 1], y[j], y[j + 1]], [w[j - 1], w[j], w[j + 1]])
    };
    if !(val > 0.0) {
        return Err(Error::InvariantViolation {
            stage: "w0_min",
            detail: format!("W0 minimum {val} is not positive"),
        });
    }
    Ok((loc, val))
}

pub(crate) fn parabola_vertex(x: [f64; 3], f: [f64; 3]) -> (f64, f64) {
    // Newton divided differences
    let d1 = (f[1] - f[0]) / (x[1] - x[0]);
    let d2 = (f[2] - f[1]) / (x[2] - x[1]);
    let a = (d2 - d1) / (x[2] - x[0]);
    if a <= 0.0 {
        return (x[1], f[1]);
    }
    let b = d1 - a * (x[0] + x[1]);
    let xv = -b / (2.0 * a);
    let fv = f[0] + d1 * (xv - x[0]) + a * (xv - x[0]) * (xv - x[1]);
    (xv, fv)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bn_examples() {
        assert_eq!(bn_coefficients(1).unwrap().coeffs(), &[1.0, 0.0]);
        assert_eq!(bn_coefficients(2).unwrap().coeffs(), &[1.0, 0.0, -4.0]);
        assert_eq!(bn_coefficients(3).unwrap().coeffs(), &[1.0, 0.0, -4.0, 0.0]);
        assert!(bn_coefficients(0).is_err());
        let b = bn_coefficients(6).unwrap();
        // odd coefficients vanish
        assert!(b.coeffs().iter().skip(1).step_by(2).all(|v| *v == 0.0));
    }

    #[test]
    fn tail_plus_examples() {
        let b = bn_coefficients(6).unwrap();
        let (v, _) = tail_plus(100.0, &b.truncated(0)).unwrap();
        assert!((v - 10.0).abs() < 1e-14);
        let (v, _) = tail_plus(100.0, &b.truncated(2)).unwrap();
        assert!((v - 10.0 * (1.0 - 5e-7)).abs() < 1e-13);
        let d = (tail_plus(25.0, &b.truncated(2)).unwrap().0 - tail_plus(25.0, &b.truncated(4)).unwrap().0).abs();
        assert!(d <= b.term(4, 25.0) + 1e-14);
        assert!(tail_plus(0.0, &b).is_err());
        assert!(tail_plus(-3.0, &b).is_err());
    }

    #[test]
    fn tail_plus_derivative_matches_difference() {
        let b = bn_coefficients(6).unwrap();
        let y = 31.0;
        let h = 1e-4;
        let fd = (tail_plus(y + h, &b).unwrap().0 - tail_plus(y - h, &b).unwrap().0) / (2.0 * h);
        assert!((fd - tail_plus(y, &b).unwrap().1).abs() < 1e-9);
    }

    #[test]
    fn tail_minus_examples() {
        let v = tail_minus(-10.0).unwrap();
        let want = std::f64::consts::PI.sqrt().recip() * 10f64.powf(-0.25) * (-(10f64.powf(1.5)) / 3.0).exp();
        assert!((v - want).abs() <= 1e-15 * want);
        let ratio = tail_minus(-20.0).unwrap() / v;
        // exp(-(20^{3/2} - 10^{3/2})/3) · 2^{-1/4}
        assert!(ratio < 5e-9 && ratio > 1e-9, "{ratio}");
        let edge = tail_minus(-1e-8).unwrap();
        assert!(edge.is_finite() && edge > 1.0);
        assert!(tail_minus(0.0).is_err());
        let h = 1e-5;
        let fd = (tail_minus(-7.0 + h).unwrap() - tail_minus(-7.0 - h).unwrap()) / (2.0 * h);
        assert!((fd - tail_minus_derivative(-7.0).unwrap()).abs() < 1e-9 * fd.abs());
    }

    #[test]
    fn parabola_vertex_exact() {
        let f = |x: f64| 2.0 * (x - 0.3) * (x - 0.3) + 1.5;
        let (x, v) = parabola_vertex([0.0, 0.5, 1.2], [f(0.0), f(0.5), f(1.2)]);
        assert!((x - 0.3).abs() < 1e-14 && (v - 1.5).abs() < 1e-14);
    }

    #[test]
    fn config_preconditions() {
        let bad = HmConfig {
            y_min: -10.0,
            ..HmConfig::default()
        };
        assert!(solve_hastings_mcleod(&bad).is_err());
        let bad = HmConfig {
            n_nodes: 100,
            ..HmConfig::default()
        };
        assert!(matches!(solve_hastings_mcleod(&bad), Err(Error::InvalidArgument(_))));
    }
}
