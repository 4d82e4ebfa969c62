//! Radial ground state of `ε²Δη + (1 − |x|²)η − η³ = 0`, its energy, and the
//! comparison with the composite boundary-layer expansion.

use std::io::Write;

use log::debug;
use rayon::prelude::*;

use crate::corrections::{partial_sum, CorrectionSet, Dim};
use crate::error::{invalid, Error, Result};
use crate::grids::{first_difference, solve_tridiagonal, to_boundary_layer, Grid1D, TridiagonalOperator};
use crate::painleve::PainleveSolution;

/// `(1 − x²)^{1/2}` inside the unit ball, 0 outside.
pub fn thomas_fermi(x: f64) -> f64 {
    if x < 1.0 {
        (1.0 - x * x).sqrt()
    } else {
        0.0
    }
}

/// Radial grid and Newton controls.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundStateConfig {
    pub r_max: f64,
    pub n_nodes: usize,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for GroundStateConfig {
    fn default() -> Self {
        Self {
            r_max: 2.5,
            n_nodes: 20001,
            tol: 1e-9,
            max_iter: 60,
        }
    }
}

impl GroundStateConfig {
    pub fn grid(&self) -> Result<Grid1D> {
        Grid1D::uniform(0.0, self.r_max, self.n_nodes)
    }
}

/// A converged radial ground state.
#[derive(Debug, Clone)]
pub struct GroundState {
    eps: f64,
    d: Dim,
    grid: Grid1D,
    eta: Vec<f64>,
    energy: f64,
    residual_max: f64,
    tol: f64,
    iterations: usize,
    continued: bool,
}

impl GroundState {
    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn dim(&self) -> Dim {
        self.d
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn eta(&self) -> &[f64] {
        &self.eta
    }

    pub fn energy(&self) -> f64 {
        self.energy
    }

    pub fn residual_max(&self) -> f64 {
        self.residual_max
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    /// True when the state was reached by continuation in `ε` from the
    /// Thomas–Fermi seeded branch rather than by a direct solve.
    pub fn continued(&self) -> bool {
        self.continued
    }

    /// `η_ε(r)` by linear interpolation of the samples.
    pub fn eta_at(&self, r: f64) -> f64 {
        let i = self.grid.interval(r);
        let y = self.grid.nodes();
        let t = ((r - y[i]) / (y[i + 1] - y[i])).clamp(0.0, 1.0);
        (1.0 - t) * self.eta[i] + t * self.eta[i + 1]
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps <= 0.5) {
        return Err(Error::OutOfRange {
            what: "eps",
            value: eps,
            lo: 0.0,
            hi: 0.5,
        });
    }
    Ok(())
}

fn check_grid(eps: f64, grid: &Grid1D) -> Result<f64> {
    let h = grid.step().ok_or_else(|| invalid("ground-state grid must be uniform"))?;
    if grid.start() != 0.0 {
        return Err(invalid("ground-state grid must start at r = 0"));
    }
    if grid.end() < 2.0 {
        return Err(invalid(format!("r_max must be >= 2 (got {})", grid.end())));
    }
    let width = eps.powf(2.0 / 3.0);
    if width / h < 20.0 {
        return Err(invalid(format!(
            "grid spacing {h:.3e} resolves the layer width {width:.3e} with fewer than 20 nodes"
        )));
    }
    Ok(h)
}

/// Weights `r_{i±1/2}^{d−1}` and `r_i^{d−1}` of the conservative radial Laplacian.
struct Radial {
    h: f64,
    d: f64,
    r: Vec<f64>,
    left: Vec<f64>,
    right: Vec<f64>,
    center: Vec<f64>,
}

impl Radial {
    fn new(grid: &Grid1D, d: Dim) -> Self {
        let h = grid.step().expect("checked uniform");
        let p = d.value() as i32 - 1;
        let r = grid.nodes().to_vec();
        let left = r.iter().map(|ri| (ri - h / 2.0).max(0.0).powi(p)).collect();
        let right = r.iter().map(|ri| (ri + h / 2.0).powi(p)).collect();
        let center = r.iter().map(|ri| ri.powi(p)).collect();
        Self {
            h,
            d: d.value() as f64,
            r,
            left,
            right,
            center,
        }
    }

    /// Laplacian coefficients (sub, diag, sup) of row `i`; row 0 uses the
    /// even-extension form `2d(η₁ − η₀)/h²`.
    fn row(&self, i: usize) -> (f64, f64, f64) {
        let h2 = self.h * self.h;
        if i == 0 {
            let c = 2.0 * self.d / h2;
            return (0.0, -c, c);
        }
        let a = self.left[i] / (self.center[i] * h2);
        let b = self.right[i] / (self.center[i] * h2);
        (a, -(a + b), b)
    }
}

fn gp_residual(rad: &Radial, eps: f64, eta: &[f64]) -> Vec<f64> {
    let n = eta.len();
    let e2 = eps * eps;
    let mut out = vec![0.0; n];
    for i in 0..n - 1 {
        let (a, c, b) = rad.row(i);
        let lap = if i == 0 {
            c * eta[0] + b * eta[1]
        } else {
            a * eta[i - 1] + c * eta[i] + b * eta[i + 1]
        };
        let r = rad.r[i];
        out[i] = e2 * lap + (1.0 - r * r) * eta[i] - eta[i] * eta[i] * eta[i];
    }
    out
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

/// Smoothed Thomas–Fermi start `ε^{1/3} sqrt((y + sqrt(y² + 4))/2)` in the
/// layer variable, which is the profile `sqrt(1 − r²)` away from `r = 1`.
pub fn smoothed_thomas_fermi(eps: f64, r: f64) -> f64 {
    let y = to_boundary_layer(r, eps);
    eps.cbrt() * ((y + (y * y + 4.0).sqrt()) / 2.0).sqrt()
}

fn newton(eps: f64, d: Dim, grid: &Grid1D, tol: f64, max_iter: usize, mut eta: Vec<f64>) -> Result<(Vec<f64>, f64, usize)> {
    const STAGE: &str = "groundstate";
    let rad = Radial::new(grid, d);
    let n = eta.len();
    eta[n - 1] = 0.0;
    let e2 = eps * eps;
    let mut res = gp_residual(&rad, eps, &eta);
    let mut rnorm = max_abs(&res);
    let mut iterations = 0;
    while rnorm > tol && iterations < max_iter {
        iterations += 1;
        let mut sub = vec![0.0; n - 1];
        let mut diag = vec![1.0; n];
        let mut sup = vec![0.0; n - 1];
        for i in 0..n - 1 {
            let (a, c, b) = rad.row(i);
            let r = rad.r[i];
            diag[i] = e2 * c + 1.0 - r * r - 3.0 * eta[i] * eta[i];
            if i > 0 {
                sub[i - 1] = e2 * a;
            }
            // the pinned last node is known; drop its coupling
            if i + 1 < n - 1 {
                sup[i] = e2 * b;
            }
        }
        let jac = TridiagonalOperator::new(sub, diag, sup)?;
        let rhs: Vec<f64> = res.iter().map(|v| -v).collect();
        let step = solve_tridiagonal(&jac, &rhs)?;

        let mut lambda = 1.0;
        let mut accepted = None;
        for _ in 0..=30 {
            let trial: Vec<f64> = eta.iter().zip(&step).map(|(v, s)| v + lambda * s).collect();
            if trial[..n - 1].iter().all(|v| *v > 0.0) {
                let tres = gp_residual(&rad, eps, &trial);
                let tnorm = max_abs(&tres);
                if tnorm < rnorm {
                    accepted = Some((trial, tres, tnorm));
                    break;
                }
            }
            lambda *= 0.5;
        }
        let Some((trial, tres, tnorm)) = accepted else {
            break;
        };
        let moved = lambda * max_abs(&step);
        eta = trial;
        res = tres;
        rnorm = tnorm;
        debug!("groundstate eps={eps} it={iterations} lambda={lambda} residual={rnorm:.3e}");
        if moved <= 1e-14 {
            break;
        }
    }
    if !(rnorm <= tol) {
        return Err(Error::NonConvergence {
            stage: STAGE,
            iterations,
            residual: rnorm,
        });
    }
    Ok((eta, rnorm, iterations))
}

fn finish(eps: f64, d: Dim, grid: &Grid1D, tol: f64, eta: Vec<f64>, residual: f64, iterations: usize, continued: bool) -> Result<GroundState> {
    const STAGE: &str = "groundstate";
    let n = eta.len();
    if let Some(i) = eta[..n - 1].iter().position(|v| !(*v > 0.0)) {
        return Err(Error::InvariantViolation {
            stage: STAGE,
            detail: format!("eta not positive at r={}", grid.nodes()[i]),
        });
    }
    let peak = eta.iter().cloned().fold(f64::MIN, f64::max);
    if peak > 1.0 + 10.0 * tol {
        return Err(Error::InvariantViolation {
            stage: STAGE,
            detail: format!("max eta = {peak} exceeds 1"),
        });
    }
    let energy = energy_of(grid, &eta, eps, d)?;
    Ok(GroundState {
        eps,
        d,
        grid: grid.clone(),
        eta,
        energy,
        residual_max: residual,
        tol,
        iterations,
        continued,
    })
}

/// Newton solve from the smoothed Thomas–Fermi start; on failure the branch is
/// followed by continuation `ε_k = 0.3·2^{−k}` down to `eps`.
pub fn solve_ground_state(eps: f64, d: Dim, grid: &Grid1D, tol: f64) -> Result<GroundState> {
    solve_ground_state_from(eps, d, grid, tol, None)
}

/// Same as [`solve_ground_state`] with an optional initial profile, e.g. the
/// composite expansion sampled on `grid`.
pub fn solve_ground_state_from(eps: f64, d: Dim, grid: &Grid1D, tol: f64, guess: Option<&[f64]>) -> Result<GroundState> {
    check_eps(eps)?;
    check_grid(eps, grid)?;
    if !(tol > 0.0) {
        return Err(invalid("tol must be positive"));
    }
    let max_iter = GroundStateConfig::default().max_iter;
    let start = match guess {
        Some(g) if g.len() == grid.len() => g.to_vec(),
        Some(_) => return Err(invalid("initial profile length must match the grid")),
        None => grid.nodes().iter().map(|&r| smoothed_thomas_fermi(eps, r)).collect(),
    };
    match newton(eps, d, grid, tol, max_iter, start) {
        Ok((eta, res, it)) => finish(eps, d, grid, tol, eta, res, it, false),
        Err(direct) => {
            debug!("direct solve at eps={eps} failed ({direct}); continuing from 0.3");
            let mut schedule: Vec<f64> = (0..).map(|k| 0.3 * 0.5f64.powi(k)).take_while(|e| *e > eps).collect();
            schedule.push(eps);
            let mut eta: Vec<f64> = grid.nodes().iter().map(|&r| smoothed_thomas_fermi(schedule[0], r)).collect();
            let mut total = 0;
            let mut last = (0.0, 0);
            for &e in &schedule {
                let (next, res, it) = newton(e, d, grid, tol, max_iter, eta)?;
                eta = next;
                total += it;
                last = (res, it);
            }
            finish(eps, d, grid, tol, eta, last.0, total, true)
        }
    }
}

/// `E_ε(u) = |S^{d−1}| ∫ r^{d−1}(ε²u'² + (r² − 1)u² + u⁴/2) dr` by the trapezoid rule.
pub fn energy_of(grid: &Grid1D, u: &[f64], eps: f64, d: Dim) -> Result<f64> {
    if u.len() != grid.len() {
        return Err(invalid("profile length must match the grid"));
    }
    let du = first_difference(u, grid)?;
    let w = grid.trapezoid_weights();
    let p = d.value() as i32 - 1;
    let e2 = eps * eps;
    let total: f64 = grid
        .nodes()
        .iter()
        .enumerate()
        .map(|(i, &r)| w[i] * r.powi(p) * (e2 * du[i] * du[i] + (r * r - 1.0) * u[i] * u[i] + 0.5 * u[i].powi(4)))
        .sum();
    Ok(d.sphere_area() * total)
}

pub fn energy(gs: &GroundState) -> f64 {
    gs.energy
}

/// `ε^{1/3} Σ_{n≤order} ε^{2n/3} ν_n((1 − x²)/ε^{2/3})`, with the tail
/// asymptotes used outside the Painlevé grid.
pub fn composite_eta(sol: &PainleveSolution, set: &CorrectionSet, eps: f64, x: f64) -> f64 {
    composite_eta_order(sol, set, eps, x, set.order())
}

pub fn composite_eta_order(sol: &PainleveSolution, set: &CorrectionSet, eps: f64, x: f64, order: usize) -> f64 {
    let y = to_boundary_layer(x, eps);
    eps.cbrt() * partial_sum(set, sol, eps, y, order)
}

/// Smallest `C` with `η_ε(r) ≤ C ε^{1/3} exp((1 − r²)/(4ε^{2/3}))` for `r ≥ r_from`.
pub fn outer_decay_constant(gs: &GroundState, r_from: f64) -> f64 {
    let e = gs.eps;
    gs.grid
        .nodes()
        .iter()
        .zip(&gs.eta)
        .filter(|(r, _)| **r >= r_from)
        .map(|(&r, &v)| v / (e.cbrt() * ((1.0 - r * r) / (4.0 * e.powf(2.0 / 3.0))).exp()))
        .fold(0.0, f64::max)
}

/// Smallest `C` with `(1 − r²)^{1/2} − η_ε(r) ≤ C ε^{1/3}` on `r ≤ 1`.
pub fn inner_deficit_constant(gs: &GroundState) -> f64 {
    gs.grid
        .nodes()
        .iter()
        .zip(&gs.eta)
        .filter(|(r, _)| **r <= 1.0)
        .map(|(&r, &v)| (thomas_fermi(r) - v) / gs.eps.cbrt())
        .fold(0.0, f64::max)
}

/// `sup_{r ∈ [0, r_to]} |η_ε(r) − (1 − r²)^{1/2}|`.
pub fn interior_deviation(gs: &GroundState, r_to: f64) -> f64 {
    gs.grid
        .nodes()
        .iter()
        .zip(&gs.eta)
        .filter(|(r, _)| **r <= r_to)
        .map(|(&r, &v)| (v - thomas_fermi(r)).abs())
        .fold(0.0, f64::max)
}

/// `sup_r |η_ε(r) − composite(r)|` over the whole radial grid.
pub fn composite_error(gs: &GroundState, sol: &PainleveSolution, set: &CorrectionSet, order: usize) -> f64 {
    gs.grid
        .nodes()
        .iter()
        .zip(&gs.eta)
        .map(|(&r, &v)| (v - composite_eta_order(sol, set, gs.eps, r, order)).abs())
        .fold(0.0, f64::max)
}

/// Slope of `log err` against `log ε` for every consecutive pair, followed by
/// nothing else; rows must be sorted by decreasing `ε`.
pub fn empirical_orders(eps: &[f64], err: &[f64]) -> Vec<f64> {
    eps.windows(2)
        .zip(err.windows(2))
        .map(|(e, r)| (r[0] / r[1]).ln() / (e[0] / e[1]).ln())
        .collect()
}

/// Least-squares slope of `log err` against `log ε`.
pub fn fitted_order(eps: &[f64], err: &[f64]) -> f64 {
    let m = eps.len() as f64;
    let xs: Vec<f64> = eps.iter().map(|e| e.ln()).collect();
    let ys: Vec<f64> = err.iter().map(|e| e.ln()).collect();
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// One row of a remainder study.
#[derive(Debug, Clone, PartialEq)]
pub struct RemainderRow {
    pub eps: f64,
    pub err: f64,
    /// Order measured against the previous (larger) `ε`; `None` on the first row.
    pub order: Option<f64>,
}

/// Theorem-style predicted order `(2N + 4 − d)/3` of the composite error.
pub fn predicted_order(d: Dim, order: usize) -> f64 {
    (2.0 * order as f64 + 4.0 - d.value() as f64) / 3.0
}

/// Ground states for every `ε` (solved in parallel), sorted by decreasing `ε`.
pub fn solve_many(eps_list: &[f64], d: Dim, cfg: &GroundStateConfig) -> Result<Vec<GroundState>> {
    let grid = cfg.grid()?;
    let mut eps: Vec<f64> = eps_list.to_vec();
    eps.sort_by(|a, b| b.total_cmp(a));
    eps.dedup();
    eps.par_iter().map(|&e| solve_ground_state(e, d, &grid, cfg.tol)).collect()
}

/// Sup-norm composite error for each state and the consecutive empirical orders.
pub fn remainder_study(states: &[GroundState], sol: &PainleveSolution, set: &CorrectionSet, order: usize) -> Vec<RemainderRow> {
    let errs: Vec<f64> = states.par_iter().map(|gs| composite_error(gs, sol, set, order)).collect();
    let eps: Vec<f64> = states.iter().map(|g| g.eps).collect();
    let orders = empirical_orders(&eps, &errs);
    eps.iter()
        .zip(&errs)
        .enumerate()
        .map(|(i, (&e, &r))| RemainderRow {
            eps: e,
            err: r,
            order: if i == 0 { None } else { Some(orders[i - 1]) },
        })
        .collect()
}

/// Writes `eps,err,order` (order empty on the first row).
pub fn write_remainder_csv<W: Write>(rows: &[RemainderRow], mut out: W) -> std::io::Result<()> {
    writeln!(out, "eps,err,order")?;
    for row in rows {
        match row.order {
            Some(p) => writeln!(out, "{:.16e},{:.16e},{:.16e}", row.eps, row.err, p)?,
            None => writeln!(out, "{:.16e},{:.16e},", row.eps, row.err)?,
        }
    }
    Ok(())
}

/// Writes `r,eta,composite,absdiff`.
pub fn write_profile_csv<W: Write>(gs: &GroundState, sol: &PainleveSolution, set: &CorrectionSet, mut out: W) -> std::io::Result<()> {
    writeln!(out, "r,eta,composite,absdiff")?;
    for (&r, &v) in gs.grid.nodes().iter().zip(&gs.eta) {
        let c = composite_eta(sol, set, gs.eps, r);
        writeln!(out, "{:.16e},{:.16e},{:.16e},{:.16e}", r, v, c, (v - c).abs())?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thomas_fermi_values() {
        assert_eq!(thomas_fermi(0.0), 1.0);
        assert_eq!(thomas_fermi(1.0), 0.0);
        assert_eq!(thomas_fermi(2.0), 0.0);
        assert!((thomas_fermi(0.6) - 0.8).abs() < 1e-15);
    }

    #[test]
    fn energy_of_zero_and_thomas_fermi() {
        let g = Grid1D::uniform(0.0, 2.5, 25001).unwrap();
        let zero = vec![0.0; g.len()];
        assert_eq!(energy_of(&g, &zero, 0.1, Dim::One).unwrap(), 0.0);
        let tf: Vec<f64> = g.nodes().iter().map(|&r| thomas_fermi(r)).collect();
        let e = energy_of(&g, &tf, 0.0, Dim::One).unwrap();
        assert!((e + 8.0 / 15.0).abs() < 1e-6, "{e}");
    }

    #[test]
    fn orders_of_exact_power_law() {
        let eps = [0.1, 0.05, 0.025];
        let err: Vec<f64> = eps.iter().map(|e: &f64| 3.0 * e.powf(7.0 / 3.0)).collect();
        for p in empirical_orders(&eps, &err) {
            assert!((p - 7.0 / 3.0).abs() < 1e-12);
        }
        assert!((fitted_order(&eps, &err) - 7.0 / 3.0).abs() < 1e-12);
        assert!((predicted_order(Dim::One, 2) - 7.0 / 3.0).abs() < 1e-15);
        assert!((predicted_order(Dim::Three, 2) - 5.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn preconditions() {
        let g = Grid1D::uniform(0.0, 2.5, 20001).unwrap();
        assert!(solve_ground_state(0.0, Dim::One, &g, 1e-9).is_err());
        assert!(solve_ground_state(0.6, Dim::One, &g, 1e-9).is_err());
        let coarse = Grid1D::uniform(0.0, 2.5, 200).unwrap();
        assert!(solve_ground_state(0.05, Dim::One, &coarse, 1e-9).is_err());
        let short = Grid1D::uniform(0.0, 1.5, 20001).unwrap();
        assert!(solve_ground_state(0.05, Dim::One, &short, 1e-9).is_err());
    }
}
