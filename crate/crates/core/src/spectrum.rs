//! Spectra of `M₀ = −4∂² + W₀` and of the half- and full-line versions of
//! `L₊ = −ε²∂² + 3η_ε² − 1 + x²`, by Sturm-sequence bisection and inverse
//! iteration on symmetric tridiagonal matrices.

use std::io::Write;

use rayon::prelude::*;

use crate::corrections::Dim;
use crate::error::{invalid, Error, Result};
use crate::grids::{first_difference, solve_tridiagonal, Grid1D, TridiagonalOperator};
use crate::groundstate::GroundState;
use crate::painleve::PainleveSolution;

/// Which operator a report belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OperatorKind {
    M0,
    LplusNeumann,
    LplusDirichlet,
    LplusFullLine,
}

impl OperatorKind {
    pub fn name(self) -> &'static str {
        match self {
            OperatorKind::M0 => "M0",
            OperatorKind::LplusNeumann => "Lplus-neumann",
            OperatorKind::LplusDirichlet => "Lplus-dirichlet",
            OperatorKind::LplusFullLine => "Lplus-fullline",
        }
    }
}

/// Boundary condition at one end of a Sturm–Liouville problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    Dirichlet,
    Neumann,
}

/// Condition at `x = 0` for `L₊`; `FullLine` assembles on `[−r_max, r_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LplusBoundary {
    Neumann,
    Dirichlet,
    FullLine,
}

/// Symmetric matrix for `−c u'' + V u` together with the data needed to map
/// its eigenvectors back to grid functions.
#[derive(Debug, Clone)]
pub struct Assembled {
    pub op: TridiagonalOperator,
    /// Grid nodes carried as unknowns.
    pub nodes: Vec<f64>,
    /// Quadrature weights of those nodes.
    pub weights: Vec<f64>,
}

/// Finite-volume assembly of `−c u'' + V u` on an arbitrary grid: with node
/// weights `w` and stiffness `K`, returns `W^{-1/2} K W^{-1/2} + V`. A Dirichlet
/// end node is removed; a Neumann end node keeps a half-cell weight.
pub fn assemble_sturm_liouville(grid: &Grid1D, c: f64, potential: &[f64], left: Boundary, right: Boundary) -> Result<Assembled> {
    let n = grid.len();
    if potential.len() != n {
        return Err(invalid("potential length must match the grid"));
    }
    if !(c > 0.0) {
        return Err(invalid("kinetic coefficient must be positive"));
    }
    let x = grid.nodes();
    let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let lo = if left == Boundary::Dirichlet { 1 } else { 0 };
    let hi = if right == Boundary::Dirichlet { n - 1 } else { n };
    if hi <= lo + 1 {
        return Err(invalid("grid too small for the requested boundary conditions"));
    }
    let weight = |i: usize| -> f64 {
        let a = if i > 0 { h[i - 1] } else { 0.0 };
        let b = if i + 1 < n { h[i] } else { 0.0 };
        0.5 * (a + b)
    };
    let stiff_diag = |i: usize| -> f64 {
        let a = if i > 0 { 1.0 / h[i - 1] } else { 0.0 };
        let b = if i + 1 < n { 1.0 / h[i] } else { 0.0 };
        c * (a + b)
    };
    let idx: Vec<usize> = (lo..hi).collect();
    let weights: Vec<f64> = idx.iter().map(|&i| weight(i)).collect();
    let diag: Vec<f64> = idx
        .iter()
        .zip(&weights)
        .map(|(&i, &w)| stiff_diag(i) / w + potential[i])
        .collect();
    let off: Vec<f64> = idx
        .windows(2)
        .zip(weights.windows(2))
        .map(|(i, w)| -c / (h[i[0]] * (w[0] * w[1]).sqrt()))
        .collect();
    Ok(Assembled {
        op: TridiagonalOperator::symmetric(diag, off)?,
        nodes: idx.iter().map(|&i| x[i]).collect(),
        weights,
    })
}

/// `M₀ = −4∂² + W₀` on the Painlevé grid with Dirichlet truncation.
pub fn assemble_m0(sol: &PainleveSolution) -> Result<Assembled> {
    assemble_sturm_liouville(sol.grid(), 4.0, &sol.w0(), Boundary::Dirichlet, Boundary::Dirichlet)
}

/// `V_ε = 3η_ε² − 1 + x²` on the ground-state grid.
pub fn lplus_potential(gs: &GroundState) -> Vec<f64> {
    gs.grid()
        .nodes()
        .iter()
        .zip(gs.eta())
        .map(|(&x, &v)| 3.0 * v * v - 1.0 + x * x)
        .collect()
}

/// `L₊^ε` for a one-dimensional ground state.
pub fn assemble_lplus(gs: &GroundState, bc: LplusBoundary) -> Result<Assembled> {
    if gs.dim() != Dim::One {
        return Err(invalid("L+ is assembled for d = 1 only"));
    }
    let c = gs.eps() * gs.eps();
    let v = lplus_potential(gs);
    match bc {
        LplusBoundary::Neumann => assemble_sturm_liouville(gs.grid(), c, &v, Boundary::Neumann, Boundary::Dirichlet),
        LplusBoundary::Dirichlet => assemble_sturm_liouville(gs.grid(), c, &v, Boundary::Dirichlet, Boundary::Dirichlet),
        LplusBoundary::FullLine => {
            let x = gs.grid().nodes();
            let nodes: Vec<f64> = x.iter().rev().map(|r| -r).chain(x[1..].iter().copied()).collect();
            let pot: Vec<f64> = v.iter().rev().chain(v[1..].iter()).copied().collect();
            let grid = Grid1D::from_nodes(nodes)?;
            assemble_sturm_liouville(&grid, c, &pot, Boundary::Dirichlet, Boundary::Dirichlet)
        }
    }
}

/// Number of eigenvalues of `op` strictly below `lambda`, from the signs of
/// the `LDLᵀ` pivots of `op − λI`.
pub fn sturm_count(op: &TridiagonalOperator, lambda: f64) -> usize {
    let a = op.diag();
    let b = op.sub();
    let scale = a.iter().chain(b).fold(0.0_f64, |m, v| m.max(v.abs())).max(lambda.abs()).max(f64::MIN_POSITIVE);
    let guard = scale * f64::EPSILON * f64::EPSILON;
    let mut count = 0;
    let mut d = a[0] - lambda;
    for i in 0..a.len() {
        if i > 0 {
            d = a[i] - lambda - b[i - 1] * b[i - 1] / d;
        }
        if d.abs() < guard {
            d = -guard;
        }
        if d < 0.0 {
            count += 1;
        }
    }
    count
}

/// Interval containing every eigenvalue.
pub fn gershgorin_bounds(op: &TridiagonalOperator) -> (f64, f64) {
    let a = op.diag();
    let (lo_off, up_off) = (op.sub(), op.sup());
    let n = a.len();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let mut rad = 0.0;
        if i > 0 {
            rad += lo_off[i - 1].abs();
        }
        if i + 1 < n {
            rad += up_off[i].abs();
        }
        lo = lo.min(a[i] - rad);
        hi = hi.max(a[i] + rad);
    }
    (lo, hi)
}

/// The `j`-th smallest eigenvalue (0-based) by bisection down to adjacent
/// floating-point numbers.
fn bisect_eigenvalue(op: &TridiagonalOperator, j: usize, bounds: (f64, f64)) -> Result<f64> {
    let (mut lo, mut hi) = bounds;
    let span = hi - lo;
    lo -= 1e-12 * span.max(1.0);
    hi += 1e-12 * span.max(1.0);
    if sturm_count(op, lo) > j || sturm_count(op, hi) <= j {
        return Err(Error::Bracket(format!("eigenvalue {j} not inside Gershgorin bounds [{lo}, {hi}]")));
    }
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return Ok(hi);
        }
        if sturm_count(op, mid) > j {
            hi = mid;
        } else {
            lo = mid;
        }
    }
}

fn normalize(v: &mut [f64]) -> f64 {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= norm);
    norm
}

/// Eigenvector for an accurately known eigenvalue by shifted inverse
/// iteration; the sign is fixed so the largest component is positive.
pub fn inverse_iteration(op: &TridiagonalOperator, lambda: f64, shift: f64) -> Result<Vec<f64>> {
    let n = op.dim();
    let shifted = op.shifted(lambda + shift);
    let mut v: Vec<f64> = (0..n).map(|i| 1.0 + 0.25 * ((i as f64) * 0.7).sin()).collect();
    normalize(&mut v);
    for it in 0..50 {
        let mut w = solve_tridiagonal(&shifted, &v)?;
        normalize(&mut w);
        let dot: f64 = w.iter().zip(&v).map(|(a, b)| a * b).sum();
        if dot < 0.0 {
            w.iter_mut().for_each(|x| *x = -*x);
        }
        let change = w.iter().zip(&v).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        v = w;
        if change < 1e-13 && it > 0 {
            let peak = v.iter().cloned().fold(0.0_f64, |m, x| if x.abs() > m.abs() { x } else { m });
            if peak < 0.0 {
                v.iter_mut().for_each(|x| *x = -*x);
            }
            return Ok(v);
        }
    }
    Err(Error::NonConvergence {
        stage: "inverse iteration",
        iterations: 50,
        residual: f64::NAN,
    })
}

/// Smallest `k` eigenvalues (ascending) and, optionally, unit-norm eigenvectors.
pub fn eig_smallest(op: &TridiagonalOperator, k: usize, want_vectors: bool) -> Result<(Vec<f64>, Option<Vec<Vec<f64>>>)> {
    if !op.is_symmetric() {
        return Err(invalid("eig_smallest needs a symmetric operator"));
    }
    if k == 0 || k > op.dim() {
        return Err(invalid(format!("cannot take {k} eigenvalues of a {}-dimensional operator", op.dim())));
    }
    let bounds = gershgorin_bounds(op);
    let values = (0..k)
        .into_par_iter()
        .map(|j| bisect_eigenvalue(op, j, bounds))
        .collect::<Result<Vec<f64>>>()?;
    if !want_vectors {
        return Ok((values, None));
    }
    let spread = bounds.1 - bounds.0;
    let vectors = (0..k)
        .into_par_iter()
        .map(|j| {
            let mut gap = f64::INFINITY;
            if j > 0 {
                gap = gap.min(values[j] - values[j - 1]);
            }
            if j + 1 < k {
                gap = gap.min(values[j + 1] - values[j]);
            }
            let shift = if gap > 0.0 { (1e-8 * spread).min(1e-3 * gap) } else { 1e-8 * spread };
            inverse_iteration(op, values[j], shift.max(f64::EPSILON * values[j].abs()))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((values, Some(vectors)))
}

/// Sorted eigenvalues of one operator with optional eigenfunctions.
#[derive(Debug, Clone)]
pub struct SpectrumReport {
    pub operator: OperatorKind,
    pub eps: Option<f64>,
    pub eigenvalues: Vec<f64>,
    pub scaled: Option<Vec<f64>>,
    /// Grid functions `u` with `Σ w u² = 1`, sampled on `nodes`.
    pub eigenvectors: Option<Vec<Vec<f64>>>,
    pub nodes: Vec<f64>,
}

impl SpectrumReport {
    /// Eigenvalues increase; the full-line operator may carry pairs that
    /// coincide at double precision, so only a non-decreasing order is asked
    /// of it.
    pub fn check(&self) -> Result<()> {
        let strict = self.operator != OperatorKind::LplusFullLine;
        for w in self.eigenvalues.windows(2) {
            if w[1] < w[0] || (strict && w[1] == w[0]) {
                return Err(Error::InvariantViolation {
                    stage: "spectrum",
                    detail: format!("eigenvalues out of order: {} then {}", w[0], w[1]),
                });
            }
        }
        if let Some(v) = self.eigenvalues.iter().find(|v| !(**v > 0.0)) {
            return Err(Error::InvariantViolation {
                stage: "spectrum",
                detail: format!("non-positive eigenvalue {v}"),
            });
        }
        Ok(())
    }
}

/// Spectrum of an assembled operator; vectors are mapped back to grid
/// functions normalized in the weighted `L²` sense.
pub fn spectrum_of(assembled: &Assembled, kind: OperatorKind, eps: Option<f64>, k: usize, want_vectors: bool) -> Result<SpectrumReport> {
    let (values, vectors) = eig_smallest(&assembled.op, k, want_vectors)?;
    let vectors = vectors.map(|vs| {
        vs.into_iter()
            .map(|v| v.iter().zip(&assembled.weights).map(|(x, w)| x / w.sqrt()).collect())
            .collect()
    });
    let scaled = eps.map(|e| values.iter().map(|l| l / e.powf(2.0 / 3.0)).collect());
    let report = SpectrumReport {
        operator: kind,
        eps,
        eigenvalues: values,
        scaled,
        eigenvectors: vectors,
        nodes: assembled.nodes.clone(),
    };
    report.check()?;
    Ok(report)
}

pub fn m0_spectrum(sol: &PainleveSolution, k: usize, want_vectors: bool) -> Result<SpectrumReport> {
    spectrum_of(&assemble_m0(sol)?, OperatorKind::M0, None, k, want_vectors)
}

pub fn lplus_spectrum(gs: &GroundState, bc: LplusBoundary, k: usize) -> Result<SpectrumReport> {
    let kind = match bc {
        LplusBoundary::Neumann => OperatorKind::LplusNeumann,
        LplusBoundary::Dirichlet => OperatorKind::LplusDirichlet,
        LplusBoundary::FullLine => OperatorKind::LplusFullLine,
    };
    spectrum_of(&assemble_lplus(gs, bc)?, kind, Some(gs.eps()), k, false)
}

/// One row of the eigenvalue-scaling table.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingRow {
    pub eps: f64,
    pub n: usize,
    pub lambda_odd: f64,
    pub lambda_even: f64,
    pub scaled_odd: f64,
    pub scaled_even: f64,
    pub mu_n: f64,
    pub pair_gap: f64,
}

/// For each ground state: the first `n_pairs` Neumann (`λ_{2n−1}`) and
/// Dirichlet (`λ_{2n}`) eigenvalues of `L₊`, scaled by `ε^{2/3}`, against
/// `μ_n`. Rows are sorted by decreasing `ε`, then `n`.
pub fn scaling_study(states: &[GroundState], mu: &[f64], n_pairs: usize) -> Result<Vec<ScalingRow>> {
    if mu.len() < n_pairs {
        return Err(invalid("need one M0 eigenvalue per pair"));
    }
    let mut per_eps = states
        .par_iter()
        .map(|gs| {
            let neu = lplus_spectrum(gs, LplusBoundary::Neumann, n_pairs)?;
            let dir = lplus_spectrum(gs, LplusBoundary::Dirichlet, n_pairs)?;
            let e = gs.eps();
            let s = e.powf(2.0 / 3.0);
            Ok((0..n_pairs)
                .map(|i| {
                    let (lo, le) = (neu.eigenvalues[i], dir.eigenvalues[i]);
                    ScalingRow {
                        eps: e,
                        n: i + 1,
                        lambda_odd: lo,
                        lambda_even: le,
                        scaled_odd: lo / s,
                        scaled_even: le / s,
                        mu_n: mu[i],
                        pair_gap: (le - lo) / le,
                    }
                })
                .collect::<Vec<_>>())
        })
        .collect::<Result<Vec<_>>>()?;
    per_eps.sort_by(|a, b| b[0].eps.total_cmp(&a[0].eps));
    Ok(per_eps.into_iter().flatten().collect())
}

pub fn write_scaling_csv<W: Write>(rows: &[ScalingRow], mut out: W) -> std::io::Result<()> {
    writeln!(out, "eps,n,lambda_odd,lambda_even,scaled_odd,scaled_even,mu_n,pair_gap")?;
    for r in rows {
        writeln!(
            out,
            "{:.16e},{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            r.eps, r.n, r.lambda_odd, r.lambda_even, r.scaled_odd, r.scaled_even, r.mu_n, r.pair_gap
        )?;
    }
    Ok(())
}

/// Exponential-decay certificate of one eigenfunction.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayCertificate {
    pub m: usize,
    /// Smallest `C` with `|u_m(y)| ≤ C e^{−|y|}` on the grid.
    pub c_value: f64,
    /// Smallest `C` with `|u_m'(y)| ≤ C (|y| + 1) e^{−|y|}`.
    pub c_derivative: f64,
}

/// Decay constants of every eigenfunction in an `M₀` report.
pub fn decay_check(report: &SpectrumReport) -> Result<Vec<DecayCertificate>> {
    if report.operator != OperatorKind::M0 {
        return Err(invalid("decay_check applies to M0 reports"));
    }
    let vectors = report
        .eigenvectors
        .as_ref()
        .ok_or_else(|| invalid("decay_check needs eigenvectors"))?;
    let grid = Grid1D::from_nodes(report.nodes.clone())?;
    vectors
        .iter()
        .enumerate()
        .map(|(m, u)| {
            let du = first_difference(u, &grid)?;
            let (mut cv, mut cd) = (0.0_f64, 0.0_f64);
            for ((&y, &v), &dv) in report.nodes.iter().zip(u).zip(&du) {
                let e = y.abs().exp();
                cv = cv.max(v.abs() * e);
                cd = cd.max(dv.abs() * e / (y.abs() + 1.0));
            }
            Ok(DecayCertificate {
                m: m + 1,
                c_value: cv,
                c_derivative: cd,
            })
        })
        .collect()
}

/// `sup |W_ε(y) − W₀(y)|` over ground-state nodes whose layer coordinate lies
/// in `[y_lo, y_hi]`, with `W_ε = 3(η_ε/ε^{1/3})² − y`.
pub fn layer_potential_deviation(gs: &GroundState, sol: &PainleveSolution, y_lo: f64, y_hi: f64) -> f64 {
    let e = gs.eps();
    gs.grid()
        .nodes()
        .iter()
        .zip(gs.eta())
        .filter_map(|(&x, &v)| {
            let y = crate::grids::to_boundary_layer(x, e);
            (y >= y_lo && y <= y_hi).then(|| {
                let nu = v / e.cbrt();
                (3.0 * nu * nu - y - sol.w0_at(y)).abs()
            })
        })
        .fold(0.0, f64::max)
}

/// Interior local minima of a sampled potential.
pub fn local_minima(nodes: &[f64], values: &[f64]) -> Vec<f64> {
    values
        .windows(3)
        .enumerate()
        .filter(|(_, w)| w[1] < w[0] && w[1] <= w[2])
        .map(|(i, _)| nodes[i + 1])
        .collect()
}
