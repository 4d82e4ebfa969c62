//! Correction hierarchy `ν₁..ν_N` of the inner expansion `ν_ε = Σ ε^{2n/3} ν_n`.
//!
//! Every `ν_n` solves `(−4∂² + W₀) ν_n = F_n` on the Painlevé grid, with
//! `F_n = −Σ ν_{n₁}ν_{n₂}ν_{n₃} − 2d ν'_{n−1} − 4y ν''_{n−1}` (indices summing to
//! `n`, each below `n`).

use std::io::Write;

use crate::error::{invalid, Error, Result};
use crate::grids::{first_difference, second_difference, solve_tridiagonal, CubicSpline, Grid1D, TridiagonalOperator};
use crate::painleve::{tail_minus, tail_plus, PainleveSolution};

/// Spatial dimension of the trap.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Dim {
    One,
    Two,
    Three,
}

impl Dim {
    pub fn value(self) -> usize {
        match self {
            Dim::One => 1,
            Dim::Two => 2,
            Dim::Three => 3,
        }
    }

    /// Right-tail exponent base: `ν_n ~ y^{β−2n}`.
    pub fn beta(self) -> f64 {
        match self {
            Dim::One => -2.5,
            _ => 0.5,
        }
    }

    /// Surface measure of the unit sphere `S^{d−1}`.
    pub fn sphere_area(self) -> f64 {
        match self {
            Dim::One => 2.0,
            Dim::Two => 2.0 * std::f64::consts::PI,
            Dim::Three => 4.0 * std::f64::consts::PI,
        }
    }
}

impl TryFrom<usize> for Dim {
    type Error = Error;

    fn try_from(d: usize) -> Result<Self> {
        match d {
            1 => Ok(Dim::One),
            2 => Ok(Dim::Two),
            3 => Ok(Dim::Three),
            _ => Err(invalid(format!("dimension must be 1, 2 or 3 (got {d})"))),
        }
    }
}

/// Highest supported expansion order.
pub const MAX_ORDER: usize = 3;

/// Ordered triples `(n₁, n₂, n₃)` with `n₁+n₂+n₃ = n` and every index `< n`.
pub fn index_triples(n: usize) -> Vec<(usize, usize, usize)> {
    let mut out = Vec::new();
    for a in 0..n {
        for b in 0..n {
            if a + b <= n && n - a - b < n {
                out.push((a, b, n - a - b));
            }
        }
    }
    out
}

/// Smooth step: 0 for `y ≤ 1/2`, 1 for `y ≥ 1`, `C^∞` in between.
pub fn cutoff(y: f64) -> f64 {
    let t = 2.0 * y - 1.0;
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        let a = (-1.0 / t).exp();
        let b = (-1.0 / (1.0 - t)).exp();
        a / (a + b)
    }
}

/// Extra length appended beyond the Painlevé grid while solving, so that the
/// layer left by the far-end closure never reaches the stored samples.
pub const BUFFER_LENGTH: f64 = 20.0;

/// Width of the window, ending `BLEND_OFFSET` before the right end of the
/// Painlevé grid, over which the sampled `ν₀` is blended into its tail series.
pub const BLEND_WIDTH: f64 = 5.0;
pub const BLEND_OFFSET: f64 = 5.0;

/// `ν₀` and `W₀` on the grid the corrections are solved on. Either the
/// Painlevé grid itself, or that grid continued to the right with `ν₀` taken
/// from its tail series.
#[derive(Debug, Clone)]
pub struct Background {
    grid: Grid1D,
    nu0: Vec<f64>,
    dnu0: Vec<f64>,
    w0: Vec<f64>,
    kept: usize,
}

impl Background {
    pub fn from_solution(sol: &PainleveSolution) -> Self {
        Self {
            grid: sol.grid().clone(),
            nu0: sol.nu0().to_vec(),
            dnu0: sol.dnu0().to_vec(),
            w0: sol.w0(),
            kept: sol.grid().len(),
        }
    }

    /// Painlevé grid continued by `length` with the same spacing. The sampled
    /// `ν₀` is handed over smoothly to the tail series before the pinned end,
    /// whose small kink would otherwise be amplified by every correction level.
    pub fn extended(sol: &PainleveSolution, length: f64) -> Result<Self> {
        let h = sol.grid().step().ok_or_else(|| invalid("corrections need a uniform Painlevé grid"))?;
        let mut bg = Self::from_solution(sol);
        let extra = (length / h).round() as usize;
        let (y0, n0) = (sol.grid().start(), sol.grid().len());
        let total = n0 + extra;
        bg.grid = Grid1D::uniform(y0, y0 + (total - 1) as f64 * h, total)?;
        let b = sol.grid().end() - BLEND_OFFSET;
        let a = b - BLEND_WIDTH;
        bg.nu0.resize(total, 0.0);
        for (i, &y) in bg.grid.nodes().iter().enumerate() {
            if y <= a {
                continue;
            }
            let series = tail_plus(y, sol.series())?.0;
            let t = cutoff(0.5 + 0.5 * (y - a) / (b - a));
            bg.nu0[i] = if i < n0 { (1.0 - t) * bg.nu0[i] + t * series } else { series };
        }
        bg.w0 = bg.grid.nodes().iter().zip(&bg.nu0).map(|(y, v)| 3.0 * v * v - y).collect();
        // same stencil on both sides of the junction
        bg.dnu0 = first_difference(&bg.nu0, &bg.grid)?;
        Ok(bg)
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn nu0(&self) -> &[f64] {
        &self.nu0
    }

    pub fn w0(&self) -> &[f64] {
        &self.w0
    }

    /// Number of leading nodes that belong to the Painlevé grid.
    pub fn kept(&self) -> usize {
        self.kept
    }

    /// Restriction to the Painlevé grid.
    pub fn truncated(&self) -> Self {
        let k = self.kept;
        Self {
            grid: Grid1D::from_nodes(self.grid.nodes()[..k].to_vec()).expect("prefix of a valid grid"),
            nu0: self.nu0[..k].to_vec(),
            dnu0: self.dnu0[..k].to_vec(),
            w0: self.w0[..k].to_vec(),
            kept: k,
        }
    }

    fn step(&self) -> Result<f64> {
        self.grid.step().ok_or_else(|| invalid("corrections need a uniform grid"))
    }
}

/// `F₁ = −2d ν₀' − 4y ν₀''` with `ν₀''` taken from the equation.
pub fn assemble_f1(bg: &Background, d: Dim) -> Vec<f64> {
    let dd = d.value() as f64;
    bg.grid
        .nodes()
        .iter()
        .zip(&bg.nu0)
        .zip(&bg.dnu0)
        .map(|((&y, &v), &dv)| {
            let ddv = (v * v * v - y * v) / 4.0;
            -2.0 * dd * dv - 4.0 * y * ddv
        })
        .collect()
}

/// `F_n` for `n ≥ 2` from `ν₀` and the already computed `ν₁..ν_{n−1}`
/// (`lower[k−1] = ν_k`).
pub fn assemble_fn(bg: &Background, lower: &[Vec<f64>], d: Dim, n: usize) -> Result<Vec<f64>> {
    if n < 2 {
        return Err(invalid("assemble_fn needs n >= 2"));
    }
    if lower.len() < n - 1 {
        return Err(invalid(format!("F_{n} needs nu_1..nu_{}", n - 1)));
    }
    let grid = &bg.grid;
    let term = |k: usize| -> &[f64] {
        if k == 0 {
            &bg.nu0
        } else {
            &lower[k - 1]
        }
    };
    let prev = term(n - 1);
    let dprev = first_difference(prev, grid)?;
    let d2prev = second_difference(prev, grid)?;
    let triples = index_triples(n);
    let dd = d.value() as f64;
    Ok(grid
        .nodes()
        .iter()
        .enumerate()
        .map(|(i, &y)| {
            let cubic: f64 = triples.iter().map(|&(a, b, c)| term(a)[i] * term(b)[i] * term(c)[i]).sum();
            -cubic - 2.0 * dd * dprev[i] - 4.0 * y * d2prev[i]
        })
        .collect())
}

/// Far-field part `(1−d) Φ(y) / (W₀(y) y^{1/2})` of `ν₁`.
pub fn split_part(bg: &Background, d: Dim) -> Vec<f64> {
    let k = 1.0 - d.value() as f64;
    bg.grid
        .nodes()
        .iter()
        .zip(&bg.w0)
        .map(|(&y, &w)| {
            let phi = cutoff(y);
            if phi == 0.0 {
                0.0
            } else {
                k * phi / (w * y.sqrt())
            }
        })
        .collect()
}

/// Discrete `−4D² + W₀` with Dirichlet rows at both ends; the couplings to
/// the known end values are moved out of the matrix.
fn correction_operator(bg: &Background) -> Result<TridiagonalOperator> {
    let h = bg.step()?;
    let n = bg.grid.len();
    let c = 4.0 / (h * h);
    let mut sub = vec![-c; n - 1];
    let mut sup = vec![-c; n - 1];
    let mut diag: Vec<f64> = bg.w0.iter().map(|wi| 2.0 * c + wi).collect();
    diag[0] = 1.0;
    sup[0] = 0.0;
    sub[0] = 0.0;
    diag[n - 1] = 1.0;
    sub[n - 2] = 0.0;
    sup[n - 2] = 0.0;
    TridiagonalOperator::new(sub, diag, sup)
}

/// Zero on the left; on the right the slowly varying value `F/W₀`.
fn solve_with_closure(bg: &Background, rhs: &[f64]) -> Result<Vec<f64>> {
    let op = correction_operator(bg)?;
    let h = bg.step()?;
    let mut b = rhs.to_vec();
    let n = b.len();
    b[0] = 0.0;
    b[n - 1] = rhs[n - 1] / bg.w0[n - 1];
    b[n - 2] += 4.0 / (h * h) * b[n - 1];
    solve_tridiagonal(&op, &b)
}

/// Interior residual of `(−4D² + W₀) ν − F`.
pub fn correction_residual(bg: &Background, nu: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let d2 = second_difference(nu, &bg.grid)?;
    let w = &bg.w0;
    let n = nu.len();
    let mut r: Vec<f64> = (0..n).map(|i| -4.0 * d2[i] + w[i] * nu[i] - rhs[i]).collect();
    r[0] = 0.0;
    r[n - 1] = 0.0;
    Ok(r)
}

/// Least-squares slope of `log|v|` against `log y` over nodes in `[a, b]`.
pub fn loglog_slope(grid: &Grid1D, values: &[f64], a: f64, b: f64) -> Result<f64> {
    let pts: Vec<(f64, f64)> = grid
        .nodes()
        .iter()
        .zip(values)
        .filter(|(y, v)| **y >= a && **y <= b && **y > 0.0 && **v != 0.0)
        .map(|(y, v)| (y.ln(), v.abs().ln()))
        .collect();
    if pts.len() < 2 {
        return Err(invalid(format!("no usable samples in [{a}, {b}] for a slope fit")));
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    Ok(sxy / sxx)
}

/// Window used for right-tail order checks.
pub const TAIL_WINDOW: (f64, f64) = (25.0, 40.0);

fn tail_window(grid: &Grid1D) -> (f64, f64) {
    let hi = TAIL_WINDOW.1.min(grid.end());
    let lo = TAIL_WINDOW.0.min(hi - 5.0);
    (lo, hi)
}

fn check_tail(stage: &'static str, grid: &Grid1D, nu: &[f64], expected: f64) -> Result<f64> {
    let (lo, hi) = tail_window(grid);
    let slope = loglog_slope(grid, nu, lo, hi)?;
    if (slope - expected).abs() > 0.5 {
        return Err(Error::InvariantViolation {
            stage,
            detail: format!("right-tail slope {slope:.3} differs from {expected} by more than 0.5"),
        });
    }
    let peak = nu.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if nu[0].abs() > 1e-8 * peak {
        return Err(Error::InvariantViolation {
            stage,
            detail: format!("no decay at the left end: |nu(y_min)| = {:.3e}", nu[0].abs()),
        });
    }
    Ok(slope)
}

/// Result of solving for `ν₁` alone.
#[derive(Debug, Clone)]
pub struct FirstCorrection {
    pub nu1: Vec<f64>,
    pub rhs: Vec<f64>,
    pub split_part: Option<Vec<f64>>,
}

/// `ν₁`: a direct solve for `d = 1`; for `d ≥ 2` the far-field part is split
/// off and only the remainder `ν̃₁` is solved for.
pub fn solve_correction_1(bg: &Background, d: Dim) -> Result<FirstCorrection> {
    let f1 = assemble_f1(bg, d);
    let out = match d {
        Dim::One => FirstCorrection {
            nu1: solve_with_closure(bg, &f1)?,
            rhs: f1,
            split_part: None,
        },
        _ => {
            let s = split_part(bg, d);
            let d2s = second_difference(&s, &bg.grid)?;
            let k = 1.0 - d.value() as f64;
            let ft: Vec<f64> = bg
                .grid
                .nodes()
                .iter()
                .enumerate()
                .map(|(i, &y)| {
                    let phi = cutoff(y);
                    let far = if phi == 0.0 { 0.0 } else { k * phi / y.sqrt() };
                    f1[i] - far + 4.0 * d2s[i]
                })
                .collect();
            let tilde = solve_with_closure(bg, &ft)?;
            FirstCorrection {
                nu1: s.iter().zip(&tilde).map(|(a, b)| a + b).collect(),
                rhs: f1,
                split_part: Some(s),
            }
        }
    };
    check_tail("correction 1", &bg.grid, &out.nu1, d.beta() - 2.0)?;
    Ok(out)
}

/// `ν_n` for `n ≥ 2` from its assembled right-hand side.
pub fn solve_correction_n(bg: &Background, rhs: &[f64], d: Dim, n: usize) -> Result<Vec<f64>> {
    if n < 2 {
        return Err(invalid("solve_correction_n needs n >= 2"));
    }
    let nu = solve_with_closure(bg, rhs)?;
    check_tail("correction n", &bg.grid, &nu, d.beta() - 2.0 * n as f64)?;
    Ok(nu)
}

/// The corrections `ν₁..ν_N` for one dimension, sampled on the Painlevé grid.
#[derive(Debug, Clone)]
pub struct CorrectionSet {
    d: Dim,
    grid: Grid1D,
    terms: Vec<Vec<f64>>,
    rhs: Vec<Vec<f64>>,
    split_part: Option<Vec<f64>>,
    splines: Vec<CubicSpline>,
    background: Background,
}

impl CorrectionSet {
    /// Solves the hierarchy up to order `order` (0 gives an empty set).
    pub fn build(sol: &PainleveSolution, d: Dim, order: usize) -> Result<Self> {
        if order > MAX_ORDER {
            return Err(invalid(format!("expansion order must be <= {MAX_ORDER} (got {order})")));
        }
        let bg = Background::extended(sol, BUFFER_LENGTH)?;
        let mut terms = Vec::with_capacity(order);
        let mut rhs = Vec::with_capacity(order);
        let mut split = None;
        if order >= 1 {
            let first = solve_correction_1(&bg, d)?;
            terms.push(first.nu1);
            rhs.push(first.rhs);
            split = first.split_part;
        }
        for n in 2..=order {
            let f = assemble_fn(&bg, &terms, d, n)?;
            let nu = solve_correction_n(&bg, &f, d, n)?;
            terms.push(nu);
            rhs.push(f);
        }
        let keep = bg.kept();
        for v in terms.iter_mut().chain(rhs.iter_mut()).chain(split.iter_mut()) {
            v.truncate(keep);
        }
        let background = bg.truncated();
        let splines = terms
            .iter()
            .map(|t| CubicSpline::new(sol.grid(), t))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            d,
            grid: sol.grid().clone(),
            terms,
            rhs,
            split_part: split,
            splines,
            background,
        })
    }

    pub fn dim(&self) -> Dim {
        self.d
    }

    pub fn order(&self) -> usize {
        self.terms.len()
    }

    pub fn beta(&self) -> f64 {
        self.d.beta()
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    /// `ν_n` samples for `n ≥ 1`.
    pub fn term(&self, n: usize) -> &[f64] {
        &self.terms[n - 1]
    }

    /// `F_n` samples for `n ≥ 1`.
    pub fn rhs(&self, n: usize) -> &[f64] {
        &self.rhs[n - 1]
    }

    pub fn split_part(&self) -> Option<&[f64]> {
        self.split_part.as_deref()
    }

    /// `ν_n(y)` for `n ≥ 1`. Inside the grid: cubic interpolation. Left of it
    /// the corrections are taken as 0; right of it the tail power law
    /// `y^{β−2n}` is continued from the last node.
    pub fn term_at(&self, n: usize, y: f64) -> f64 {
        if y < self.grid.start() {
            0.0
        } else if y > self.grid.end() {
            let last = *self.terms[n - 1].last().expect("non-empty");
            last * (y / self.grid.end()).powf(self.beta() - 2.0 * n as f64)
        } else {
            self.splines[n - 1].eval(y)
        }
    }

    /// The `ν₀`, `W₀` samples the hierarchy was solved against.
    pub fn background(&self) -> &Background {
        &self.background
    }

    /// Max interior residual of every defining equation, scaled by `1 + max|F_n|`.
    pub fn residuals(&self) -> Result<Vec<f64>> {
        let bg = &self.background;
        self.terms
            .iter()
            .zip(&self.rhs)
            .map(|(nu, f)| {
                let r = correction_residual(bg, nu, f)?;
                let fmax = f.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
                Ok(r.iter().fold(0.0_f64, |m, v| m.max(v.abs())) / (1.0 + fmax))
            })
            .collect()
    }

    /// Right-tail log–log slopes of `ν_1..ν_N` on the tail window.
    pub fn tail_slopes(&self) -> Result<Vec<f64>> {
        let (lo, hi) = tail_window(&self.grid);
        self.terms.iter().map(|t| loglog_slope(&self.grid, t, lo, hi)).collect()
    }

    /// Writes `y,nu1,..,nuN,F1,..,FN`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let mut header = vec!["y".to_string()];
        header.extend((1..=self.order()).map(|n| format!("nu{n}")));
        header.extend((1..=self.order()).map(|n| format!("F{n}")));
        writeln!(out, "{}", header.join(","))?;
        for (i, y) in self.grid.nodes().iter().enumerate() {
            let mut row = vec![format!("{y:.16e}")];
            row.extend(self.terms.iter().map(|t| format!("{:.16e}", t[i])));
            row.extend(self.rhs.iter().map(|f| format!("{:.16e}", f[i])));
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// `Σ_{n=0..N} ε^{2n/3} ν_n(y)` using every term in `set`.
pub fn composite_nu(set: &CorrectionSet, sol: &PainleveSolution, eps: f64, y: f64) -> Result<f64> {
    composite_nu_order(set, sol, eps, y, set.order())
}

/// Same as [`composite_nu`] but truncated after `ν_order`.
pub fn composite_nu_order(set: &CorrectionSet, sol: &PainleveSolution, eps: f64, y: f64, order: usize) -> Result<f64> {
    let g = sol.grid();
    if !(y >= g.start() && y <= g.end()) {
        return Err(Error::OutOfRange {
            what: "y",
            value: y,
            lo: g.start(),
            hi: g.end(),
        });
    }
    Ok(partial_sum(set, sol, eps, y, order))
}

/// The partial sum with tail continuation outside the grid: `tail_minus` and
/// zero corrections on the left, the series and power laws on the right.
pub(crate) fn partial_sum(set: &CorrectionSet, sol: &PainleveSolution, eps: f64, y: f64, order: usize) -> f64 {
    let order = order.min(set.order());
    let nu0 = if y < sol.grid().start() {
        tail_minus(y).unwrap_or(0.0)
    } else if y > sol.grid().end() {
        tail_plus(y, sol.series()).map(|t| t.0).unwrap_or(f64::NAN)
    } else {
        sol.nu0_at(y)
    };
    let e = eps.powf(2.0 / 3.0);
    let mut acc = nu0;
    let mut scale = 1.0;
    for n in 1..=order {
        scale *= e;
        acc += scale * set.term_at(n, y);
    }
    acc
}
