//! One-dimensional grids, finite-difference stencils, tridiagonal solves and
//! the boundary-layer change of variables `y = (1 - x²)/ε^{2/3}`.

use crate::error::{invalid, Error, Result};

/// How the nodes of a [`Grid1D`] were laid out.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridKind {
    Uniform,
    Graded,
}

/// Strictly increasing set of nodes on a line segment.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid1D {
    nodes: Vec<f64>,
    kind: GridKind,
}

impl Grid1D {
    /// `n` equally spaced nodes from `a` to `b` inclusive.
    pub fn uniform(a: f64, b: f64, n: usize) -> Result<Self> {
        if n < 2 || !(b > a) || !a.is_finite() || !b.is_finite() {
            return Err(invalid(format!("uniform grid needs n >= 2 and a < b (got n={n}, [{a}, {b}])")));
        }
        let h = (b - a) / (n - 1) as f64;
        let mut nodes: Vec<f64> = (0..n).map(|i| a + i as f64 * h).collect();
        nodes[n - 1] = b;
        Ok(Self {
            nodes,
            kind: GridKind::Uniform,
        })
    }

    /// Nodes clustered around `center` with local spacing of order
    /// `width·asinh-range/n`, via `x = c + width·sinh(A + (B - A)ξ)`.
    pub fn graded(a: f64, b: f64, n: usize, center: f64, width: f64) -> Result<Self> {
        if n < 2 || !(b > a) || !(width > 0.0) {
            return Err(invalid("graded grid needs n >= 2, a < b and width > 0"));
        }
        let lo = ((a - center) / width).asinh();
        let hi = ((b - center) / width).asinh();
        let mut nodes: Vec<f64> = (0..n)
            .map(|i| {
                let xi = i as f64 / (n - 1) as f64;
                center + width * (lo + (hi - lo) * xi).sinh()
            })
            .collect();
        nodes[0] = a;
        nodes[n - 1] = b;
        let grid = Self::from_nodes(nodes)?;
        Ok(Self {
            kind: GridKind::Graded,
            ..grid
        })
    }

    /// Wraps arbitrary strictly increasing nodes. A node set whose spacing is
    /// constant to 1e-14 relative is tagged uniform.
    pub fn from_nodes(nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(invalid("grid needs at least two nodes"));
        }
        if nodes.iter().any(|x| !x.is_finite()) {
            return Err(invalid("grid nodes must be finite"));
        }
        if let Some(i) = nodes.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(invalid(format!("grid nodes not strictly increasing at index {i}")));
        }
        let h = (nodes[nodes.len() - 1] - nodes[0]) / (nodes.len() - 1) as f64;
        let uniform = nodes
            .windows(2)
            .all(|w| ((w[1] - w[0]) - h).abs() <= 1e-14 * h.abs().max(w[0].abs().max(w[1].abs())) * 4.0);
        Ok(Self {
            nodes,
            kind: if uniform {
                GridKind::Uniform
            } else {
                GridKind::Graded
            },
        })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn kind(&self) -> GridKind {
        self.kind
    }

    pub fn start(&self) -> f64 {
        self.nodes[0]
    }

    pub fn end(&self) -> f64 {
        self.nodes[self.nodes.len() - 1]
    }

    /// Width of interval `i` (between nodes `i` and `i + 1`).
    pub fn spacing(&self, i: usize) -> f64 {
        self.nodes[i + 1] - self.nodes[i]
    }

    /// The constant step of a uniform grid.
    pub fn step(&self) -> Option<f64> {
        match self.kind {
            GridKind::Uniform => Some((self.end() - self.start()) / (self.len() - 1) as f64),
            GridKind::Graded => None,
        }
    }

    /// Dual-cell (trapezoid) weights: half intervals at the ends.
    pub fn trapezoid_weights(&self) -> Vec<f64> {
        let n = self.len();
        let mut w = vec![0.0; n];
        for i in 0..n - 1 {
            let h = self.spacing(i);
            w[i] += 0.5 * h;
            w[i + 1] += 0.5 * h;
        }
        w
    }

    /// Index of the node closest to `x`.
    pub fn nearest(&self, x: f64) -> usize {
        let k = self.nodes.partition_point(|&v| v < x);
        if k == 0 {
            0
        } else if k >= self.len() {
            self.len() - 1
        } else if (x - self.nodes[k - 1]) <= (self.nodes[k] - x) {
            k - 1
        } else {
            k
        }
    }

    /// Index `i` with `nodes[i] <= x <= nodes[i+1]`, clamped to valid intervals.
    pub fn interval(&self, x: f64) -> usize {
        let k = self.nodes.partition_point(|&v| v <= x);
        k.saturating_sub(1).min(self.len() - 2)
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.start() && x <= self.end()
    }
}

/// Stretched boundary-layer coordinate `y = (1 - x²)/ε^{2/3}`.
pub fn to_boundary_layer(x: f64, eps: f64) -> f64 {
    debug_assert!(eps > 0.0);
    (1.0 - x * x) / eps.powf(2.0 / 3.0)
}

/// Inverse of [`to_boundary_layer`] on `x >= 0`: `x = sqrt(1 - ε^{2/3} y)`,
/// defined for `y <= ε^{-2/3}`.
pub fn from_boundary_layer(y: f64, eps: f64) -> Result<f64> {
    if !(eps > 0.0) {
        return Err(invalid("eps must be positive"));
    }
    let e23 = eps.powf(2.0 / 3.0);
    let s = 1.0 - e23 * y;
    if s < 0.0 {
        // allow rounding at the right end of J_eps
        if s > -4.0 * f64::EPSILON {
            return Ok(0.0);
        }
        return Err(Error::OutOfRange {
            what: "y",
            value: y,
            lo: f64::NEG_INFINITY,
            hi: 1.0 / e23,
        });
    }
    Ok(s.sqrt())
}

/// A (possibly nonsymmetric) tridiagonal matrix stored by diagonals.
#[derive(Debug, Clone, PartialEq)]
pub struct TridiagonalOperator {
    sub: Vec<f64>,
    diag: Vec<f64>,
    sup: Vec<f64>,
    symmetric: bool,
}

impl TridiagonalOperator {
    pub fn new(sub: Vec<f64>, diag: Vec<f64>, sup: Vec<f64>) -> Result<Self> {
        let n = diag.len();
        if n == 0 || sub.len() + 1 != n || sup.len() + 1 != n {
            return Err(invalid(format!(
                "tridiagonal lengths mismatch: sub {}, diag {}, sup {}",
                sub.len(),
                n,
                sup.len()
            )));
        }
        let scale = 1.0 + diag.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let symmetric = sub
            .iter()
            .zip(&sup)
            .all(|(a, b)| (a - b).abs() <= 1e-14 * scale);
        Ok(Self {
            sub,
            diag,
            sup,
            symmetric,
        })
    }

    /// Symmetric matrix from its diagonal and off-diagonal.
    pub fn symmetric(diag: Vec<f64>, off: Vec<f64>) -> Result<Self> {
        Self::new(off.clone(), diag, off)
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn sub(&self) -> &[f64] {
        &self.sub
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn sup(&self) -> &[f64] {
        &self.sup
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    /// Matrix-vector product.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.dim();
        assert_eq!(x.len(), n, "vector length must match operator dimension");
        (0..n)
            .map(|i| {
                let mut v = self.diag[i] * x[i];
                if i > 0 {
                    v += self.sub[i - 1] * x[i - 1];
                }
                if i + 1 < n {
                    v += self.sup[i] * x[i + 1];
                }
                v
            })
            .collect()
    }

    /// Returns a copy with `shift` subtracted from the diagonal.
    pub fn shifted(&self, shift: f64) -> Self {
        Self {
            diag: self.diag.iter().map(|d| d - shift).collect(),
            ..self.clone()
        }
    }
}

/// Gaussian elimination with partial pivoting for a tridiagonal system.
///
/// Row interchanges fill a second superdiagonal, so the factorization is
/// stable for any nonsingular operator, not only diagonally dominant ones.
pub fn solve_tridiagonal(op: &TridiagonalOperator, rhs: &[f64]) -> Result<Vec<f64>> {
    let n = op.dim();
    if rhs.len() != n {
        return Err(invalid(format!("rhs length {} != operator dimension {n}", rhs.len())));
    }
    let mut d = op.diag.clone();
    let mut du = op.sup.clone();
    // dl holds the subdiagonal on input and the second superdiagonal fill after elimination
    let mut dl = op.sub.clone();
    let mut b = rhs.to_vec();

    for i in 0..n.saturating_sub(1) {
        if d[i].abs() >= dl[i].abs() {
            if d[i] == 0.0 || !d[i].is_finite() {
                return Err(Error::SingularPivot { index: i });
            }
            let fact = dl[i] / d[i];
            d[i + 1] -= fact * du[i];
            b[i + 1] -= fact * b[i];
            dl[i] = 0.0;
        } else {
            let fact = d[i] / dl[i];
            d[i] = dl[i];
            let temp = d[i + 1];
            d[i + 1] = du[i] - fact * temp;
            if i + 2 < n {
                dl[i] = du[i + 1];
                du[i + 1] = -fact * dl[i];
            } else {
                dl[i] = 0.0;
            }
            du[i] = temp;
            let tb = b[i];
            b[i] = b[i + 1];
            b[i + 1] = tb - fact * b[i + 1];
        }
    }
    if d[n - 1] == 0.0 || !d[n - 1].is_finite() {
        return Err(Error::SingularPivot { index: n - 1 });
    }

    b[n - 1] /= d[n - 1];
    if n > 1 {
        b[n - 2] = (b[n - 2] - du[n - 2] * b[n - 1]) / d[n - 2];
    }
    for i in (0..n.saturating_sub(2)).rev() {
        b[i] = (b[i] - du[i] * b[i + 1] - dl[i] * b[i + 2]) / d[i];
    }
    Ok(b)
}

/// Fornberg's recursion: weights `c[k][j]` such that
/// `f^{(k)}(z) ≈ Σ_j c[k][j] f(xs[j])` for `k = 0..=order`.
pub fn fd_weights(z: f64, xs: &[f64], order: usize) -> Vec<Vec<f64>> {
    let n = xs.len();
    let mut c = vec![vec![0.0; n]; order + 1];
    let mut c1 = 1.0;
    let mut c4 = xs[0] - z;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(order);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = xs[i] - z;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c
}

fn stencil_apply(values: &[f64], nodes: &[f64], idx: &[usize], at: usize, order: usize) -> f64 {
    let xs: Vec<f64> = idx.iter().map(|&j| nodes[j]).collect();
    let w = fd_weights(nodes[at], &xs, order);
    idx.iter().zip(&w[order]).map(|(&j, c)| c * values[j]).sum()
}

fn derivative(values: &[f64], grid: &Grid1D, order: usize) -> Result<Vec<f64>> {
    let n = grid.len();
    if values.len() != n {
        return Err(invalid("values length must match grid"));
    }
    if n < 3 {
        return Err(invalid("finite differences need at least 3 nodes"));
    }
    let x = grid.nodes();
    let mut out = vec![0.0; n];
    if let Some(h) = grid.step() {
        for i in 1..n - 1 {
            out[i] = match order {
                1 => (values[i + 1] - values[i - 1]) / (2.0 * h),
                _ => (values[i + 1] - 2.0 * values[i] + values[i - 1]) / (h * h),
            };
        }
    } else {
        for i in 1..n - 1 {
            out[i] = stencil_apply(values, x, &[i - 1, i, i + 1], i, order);
        }
    }
    // one-sided second-order end stencils (4 points for the second derivative)
    let width = if order == 2 && n >= 4 { 4 } else { 3 };
    let left: Vec<usize> = (0..width).collect();
    let right: Vec<usize> = (n - width..n).collect();
    out[0] = stencil_apply(values, x, &left, 0, order);
    out[n - 1] = stencil_apply(values, x, &right, n - 1, order);
    Ok(out)
}

/// Three-point central second difference in the interior, one-sided
/// second-order stencils at the two ends.
pub fn second_difference(values: &[f64], grid: &Grid1D) -> Result<Vec<f64>> {
    derivative(values, grid, 2)
}

/// Central first difference in the interior, one-sided second-order at the ends.
pub fn first_difference(values: &[f64], grid: &Grid1D) -> Result<Vec<f64>> {
    derivative(values, grid, 1)
}

/// Natural cubic spline through samples on a strictly increasing grid.
#[derive(Debug, Clone)]
pub struct CubicSpline {
    x: Vec<f64>,
    y: Vec<f64>,
    m: Vec<f64>,
}

impl CubicSpline {
    pub fn new(grid: &Grid1D, values: &[f64]) -> Result<Self> {
        let n = grid.len();
        if values.len() != n {
            return Err(invalid("spline values length must match grid"));
        }
        let x = grid.nodes().to_vec();
        let mut m = vec![0.0; n];
        if n > 2 {
            let k = n - 2;
            let mut sub = vec![0.0; k - 1];
            let mut diag = vec![0.0; k];
            let mut sup = vec![0.0; k - 1];
            let mut rhs = vec![0.0; k];
            for r in 0..k {
                let i = r + 1;
                let h0 = x[i] - x[i - 1];
                let h1 = x[i + 1] - x[i];
                diag[r] = 2.0 * (h0 + h1);
                if r > 0 {
                    sub[r - 1] = h0;
                }
                if r + 1 < k {
                    sup[r] = h1;
                }
                rhs[r] = 6.0 * ((values[i + 1] - values[i]) / h1 - (values[i] - values[i - 1]) / h0);
            }
            let op = TridiagonalOperator::new(sub, diag, sup)?;
            let inner = solve_tridiagonal(&op, &rhs)?;
            m[1..n - 1].copy_from_slice(&inner);
        }
        Ok(Self {
            x,
            y: values.to_vec(),
            m,
        })
    }

    pub fn start(&self) -> f64 {
        self.x[0]
    }

    pub fn end(&self) -> f64 {
        self.x[self.x.len() - 1]
    }

    fn locate(&self, t: f64) -> usize {
        let k = self.x.partition_point(|&v| v <= t);
        k.saturating_sub(1).min(self.x.len() - 2)
    }

    /// Value at `t`; outside the nodes the end cubic is extrapolated.
    pub fn eval(&self, t: f64) -> f64 {
        let i = self.locate(t);
        let h = self.x[i + 1] - self.x[i];
        let a = (self.x[i + 1] - t) / h;
        let b = (t - self.x[i]) / h;
        a * self.y[i]
            + b * self.y[i + 1]
            + ((a * a * a - a) * self.m[i] + (b * b * b - b) * self.m[i + 1]) * h * h / 6.0
    }

    pub fn derivative(&self, t: f64) -> f64 {
        let i = self.locate(t);
        let h = self.x[i + 1] - self.x[i];
        let a = (self.x[i + 1] - t) / h;
        let b = (t - self.x[i]) / h;
        (self.y[i + 1] - self.y[i]) / h
            + ((1.0 - 3.0 * a * a) * self.m[i] + (3.0 * b * b - 1.0) * self.m[i + 1]) * h / 6.0
    }
}
