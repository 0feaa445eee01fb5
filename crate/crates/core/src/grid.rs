//! Symmetry-reduced computational domains: reduced coordinates with weighted
//! quadrature, the conservative kinetic form, and the direct Laplacian stencil.
//!
//! Group-invariant functions on R^N are stored on a box of block radii. Each
//! axis carries the angular-measure exponent `m - 1` of its block, so that
//! `integrate` realizes the full R^N integral. Half-line axes start at the
//! coordinate singularity r = 0 (even reflection); full-line axes support
//! integer-node translations and use uniform weights so that shifts commute
//! with the quadrature exactly.

use crate::error::{Error, Result};
use std::sync::Arc;

/// Invariance class of the fields living on a grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SymmetryClass {
    /// fully radial in R^n
    Radial { n: u32 },
    /// O(m) x O(m) x id block invariance intersected with the swap-antisymmetric class
    O1Tau { n: u32, m: u32 },
    /// O(m) x O(m) x O(n-2m) block invariance intersected with the swap-antisymmetric class
    O2Tau { n: u32, m: u32 },
    /// plain 1-D line, used for translation fixtures
    Line,
}

impl SymmetryClass {
    pub fn ambient_dim(&self) -> u32 {
        match self {
            SymmetryClass::Radial { n } => *n,
            SymmetryClass::O1Tau { n, .. } | SymmetryClass::O2Tau { n, .. } => *n,
            SymmetryClass::Line => 1,
        }
    }

    /// Swap-antisymmetry applies (first two axes form the tau pair).
    pub fn has_tau_pair(&self) -> bool {
        matches!(self, SymmetryClass::O1Tau { .. } | SymmetryClass::O2Tau { .. })
    }

    pub fn label(&self) -> String {
        match self {
            SymmetryClass::Radial { n } => format!("radial(N={n})"),
            SymmetryClass::O1Tau { n, m } => format!("o1tau(N={n},M={m})"),
            SymmetryClass::O2Tau { n, m } => format!("o2tau(N={n},M={m})"),
            SymmetryClass::Line => "line".into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AxisKind {
    /// [0, r_inf], angular exponent p, even reflection at 0, Dirichlet at r_inf
    HalfLine { exponent: u32 },
    /// [-r_inf, r_inf], exponent 0, Dirichlet at both ends
    FullLine,
}

/// One reduced coordinate with its quadrature data.
#[derive(Debug, Clone)]
pub struct Axis {
    pub kind: AxisKind,
    pub h: f64,
    pub n: usize,
    origin: f64,
    /// per-node quadrature weight (includes r^p and h factors, not omega)
    weights: Vec<f64>,
    /// exact measure of each cell: integral of r^p over [x_i, x_{i+1}]
    cell_moment: Vec<f64>,
}

impl Axis {
    fn half_line(r_inf: f64, h: f64, exponent: u32) -> Result<Self> {
        let n = checked_nodes(r_inf, h)? + 1;
        let weights = half_line_weights(n, h, exponent);
        let cell_moment = (0..n - 1)
            .map(|i| monomial_integral(exponent, i as f64 * h, (i + 1) as f64 * h))
            .collect();
        Ok(Self { kind: AxisKind::HalfLine { exponent }, h, n, origin: 0.0, weights, cell_moment })
    }

    fn full_line(r_inf: f64, h: f64) -> Result<Self> {
        let half = checked_nodes(r_inf, h)?;
        let n = 2 * half + 1;
        let mut weights = vec![h; n];
        weights[0] = 0.5 * h;
        weights[n - 1] = 0.5 * h;
        let cell_moment = vec![h; n - 1];
        Ok(Self { kind: AxisKind::FullLine, h, n, origin: -(half as f64) * h, weights, cell_moment })
    }

    #[inline]
    pub fn coord(&self, i: usize) -> f64 {
        self.origin + i as f64 * self.h
    }

    pub fn r_inf(&self) -> f64 {
        self.coord(self.n - 1)
    }

    pub fn exponent(&self) -> u32 {
        match self.kind {
            AxisKind::HalfLine { exponent } => exponent,
            AxisKind::FullLine => 0,
        }
    }

    fn is_boundary(&self, i: usize) -> bool {
        match self.kind {
            AxisKind::HalfLine { .. } => i == self.n - 1,
            AxisKind::FullLine => i == 0 || i == self.n - 1,
        }
    }
}

fn checked_nodes(r_inf: f64, h: f64) -> Result<usize> {
    let ratio = r_inf / h;
    let cells = ratio.round();
    if (ratio - cells).abs() > 1e-9 * ratio.max(1.0) || cells < 1.0 {
        return Err(Error::Config(format!("r_inf = {r_inf} must be an integer multiple of h = {h}")));
    }
    let cells = cells as usize;
    if cells + 1 < 8 {
        return Err(Error::BadResolution(cells + 1));
    }
    Ok(cells)
}

/// exact integral of r^p over [a, b]
fn monomial_integral(p: u32, a: f64, b: f64) -> f64 {
    let q = p as i32 + 1;
    (b.powi(q) - a.powi(q)) / q as f64
}

/// Multiply polynomial coefficient vectors.
fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// integral of (sum c_k r^k) * r^p over [a, b]
fn poly_weighted_integral(coeffs: &[f64], p: u32, a: f64, b: f64) -> f64 {
    coeffs
        .iter()
        .enumerate()
        .map(|(k, &c)| c * monomial_integral(p + k as u32, a, b))
        .sum()
}

/// Lagrange-basis moment weights for the nodes `xs` against weight r^p over
/// [xs[0], xs[last]].
fn lagrange_moment_weights(xs: &[f64], p: u32) -> Vec<f64> {
    let (a, b) = (xs[0], xs[xs.len() - 1]);
    xs.iter()
        .enumerate()
        .map(|(j, &xj)| {
            let mut num = vec![1.0];
            let mut den = 1.0;
            for (k, &xk) in xs.iter().enumerate() {
                if k != j {
                    num = poly_mul(&num, &[-xk, 1.0]);
                    den *= xj - xk;
                }
            }
            poly_weighted_integral(&num, p, a, b) / den
        })
        .collect()
}

/// Hat-function (piecewise-linear) moment weights over a run of cells,
/// always nonnegative. Used where the quadratic fit would produce a
/// non-positive node weight, which only happens in the cell pair touching
/// the coordinate singularity.
fn hat_moment_weights(xs: &[f64], p: u32) -> Vec<f64> {
    let m = xs.len();
    let mut w = vec![0.0; m];
    for i in 0..m - 1 {
        let (a, b) = (xs[i], xs[i + 1]);
        let h = b - a;
        // (b - r)/h and (r - a)/h against r^p
        w[i] += poly_weighted_integral(&[b / h, -1.0 / h], p, a, b);
        w[i + 1] += poly_weighted_integral(&[-a / h, 1.0 / h], p, a, b);
    }
    w
}

/// Per-node quadrature weights on a half-line axis: quadratic moment fitting
/// per cell pair (exact for degree <= 2 integrands against r^p), with a
/// nonnegative hat-weight stencil where the fit degenerates.
fn half_line_weights(n: usize, h: f64, p: u32) -> Vec<f64> {
    let coord = |i: usize| i as f64 * h;
    let mut w = vec![0.0; n];
    let cells = n - 1;
    let paired = if cells % 2 == 0 { cells } else { cells - 3 };
    let mut i = 0;
    while i < paired {
        let xs = [coord(i), coord(i + 1), coord(i + 2)];
        let mut ws = lagrange_moment_weights(&xs, p);
        if ws.iter().any(|&x| x <= 0.0) && p > 0 {
            ws = hat_moment_weights(&xs, p);
        }
        for (k, &x) in ws.iter().enumerate() {
            w[i + k] += x;
        }
        i += 2;
    }
    if paired < cells {
        let xs = [coord(i), coord(i + 1), coord(i + 2), coord(i + 3)];
        let mut ws = lagrange_moment_weights(&xs, p);
        if ws.iter().any(|&x| x <= 0.0) && p > 0 {
            ws = hat_moment_weights(&xs, p);
        }
        for (k, &x) in ws.iter().enumerate() {
            w[i + k] += x;
        }
    }
    w
}

/// Surface area of the unit sphere in R^m.
pub fn unit_sphere_area(m: u32) -> f64 {
    // 2 pi^{m/2} / Gamma(m/2), with Gamma at integer or half-integer argument
    let half = m as f64 / 2.0;
    2.0 * std::f64::consts::PI.powf(half) / gamma_half(m)
}

/// Gamma(n/2) for integer n >= 1.
fn gamma_half(n: u32) -> f64 {
    if n % 2 == 0 {
        let k = n / 2;
        (1..k).fold(1.0, |acc, j| acc * j as f64)
    } else {
        let mut acc = std::f64::consts::PI.sqrt();
        let mut x = 0.5;
        while x + 1.0 <= n as f64 / 2.0 {
            acc *= x;
            x += 1.0;
        }
        acc
    }
}

/// A reduced computational domain with quadrature.
#[derive(Debug, Clone)]
pub struct ReducedGrid {
    pub class: SymmetryClass,
    pub axes: Vec<Axis>,
    /// surface-area prefactor multiplying the tensor quadrature
    pub omega: f64,
    dims: Vec<usize>,
    strides: Vec<usize>,
    node_weight: Vec<f64>,
    dirichlet: Vec<bool>,
}

pub type GridRef = Arc<ReducedGrid>;

/// Build the reduced grid for a symmetry class with outer radius `r_inf` and
/// spacing `h` on every axis.
pub fn build_grid(class: SymmetryClass, r_inf: f64, h: f64) -> Result<GridRef> {
    let (axes, omega): (Vec<Axis>, f64) = match class {
        SymmetryClass::Radial { n } => {
            let ax = Axis::half_line(r_inf, h, n - 1)?;
            (vec![ax], unit_sphere_area(n))
        }
        SymmetryClass::Line => (vec![Axis::full_line(r_inf, h)?], 1.0),
        SymmetryClass::O1Tau { n, m } | SymmetryClass::O2Tau { n, m } => {
            if m < 2 || 2 * m > n {
                return Err(Error::Config(format!("need 2 <= M <= N/2, got N={n}, M={m}")));
            }
            let block = n - 2 * m;
            let pair = || Axis::half_line(r_inf, h, m - 1);
            let mut axes = vec![pair()?, pair()?];
            let mut omega = unit_sphere_area(m).powi(2);
            let o1 = matches!(class, SymmetryClass::O1Tau { .. });
            match block {
                0 => {}
                1 if o1 => {
                    // noncompact axis kept as a genuine line so that
                    // translations along it are available
                    axes.push(Axis::full_line(r_inf, h)?);
                }
                b => {
                    axes.push(Axis::half_line(r_inf, h, b - 1)?);
                    omega *= unit_sphere_area(b);
                }
            }
            (axes, omega)
        }
    };

    let dims: Vec<usize> = axes.iter().map(|a| a.n).collect();
    let mut strides = vec![1usize; dims.len()];
    for a in (0..dims.len().saturating_sub(1)).rev() {
        strides[a] = strides[a + 1] * dims[a + 1];
    }
    let total: usize = dims.iter().product();
    let mut node_weight = vec![0.0; total];
    let mut dirichlet = vec![false; total];
    let mut idx = vec![0usize; dims.len()];
    for flat in 0..total {
        let mut w = omega;
        let mut dir = false;
        for (a, &i) in idx.iter().enumerate() {
            w *= axes[a].weights[i];
            dir |= axes[a].is_boundary(i);
        }
        node_weight[flat] = w;
        dirichlet[flat] = dir;
        // odometer
        for a in (0..dims.len()).rev() {
            idx[a] += 1;
            if idx[a] < dims[a] {
                break;
            }
            idx[a] = 0;
        }
    }
    Ok(Arc::new(ReducedGrid { class, axes, omega, dims, strides, node_weight, dirichlet }))
}

impl ReducedGrid {
    pub fn node_count(&self) -> usize {
        self.node_weight.len()
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn strides(&self) -> &[usize] {
        &self.strides
    }

    pub fn node_weights(&self) -> &[f64] {
        &self.node_weight
    }

    pub fn is_dirichlet(&self, flat: usize) -> bool {
        self.dirichlet[flat]
    }

    pub fn ambient_dim(&self) -> u32 {
        self.class.ambient_dim()
    }

    /// Decode a flat index into per-axis indices.
    #[inline]
    pub fn unravel(&self, flat: usize) -> [usize; 3] {
        let mut out = [0usize; 3];
        let mut rem = flat;
        for a in 0..self.dims.len() {
            out[a] = rem / self.strides[a];
            rem %= self.strides[a];
        }
        out
    }

    #[inline]
    pub fn ravel(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.strides).map(|(i, s)| i * s).sum()
    }

    /// Physical coordinates of a node.
    pub fn coords(&self, flat: usize) -> Vec<f64> {
        let idx = self.unravel(flat);
        (0..self.dims.len()).map(|a| self.axes[a].coord(idx[a])).collect()
    }

    /// Weighted sum realizing the R^N integral of a node-sampled function.
    pub fn integrate(&self, g: &[f64]) -> Result<f64> {
        if g.len() != self.node_count() {
            return Err(Error::ShapeMismatch { got: g.len(), want: self.node_count() });
        }
        Ok(self.node_weight.iter().zip(g).map(|(w, v)| w * v).sum())
    }

    /// Weighted L2 inner product.
    pub fn inner(&self, a: &[f64], b: &[f64]) -> f64 {
        self.node_weight
            .iter()
            .zip(a.iter().zip(b))
            .map(|(w, (x, y))| w * x * y)
            .sum()
    }

    /// Conservative kinetic form: the R^N integral of |grad u|^2 realized by
    /// staggered central differences, cell measures exact per axis.
    pub fn kinetic(&self, v: &[f64]) -> f64 {
        let d = self.dims.len();
        let mut acc = 0.0;
        let mut idx = vec![0usize; d];
        let total = self.node_count();
        for flat in 0..total {
            for a in 0..d {
                if idx[a] + 1 < self.dims[a] {
                    let inv_h = 1.0 / self.axes[a].h;
                    let mut c = self.omega * self.axes[a].cell_moment[idx[a]];
                    for b in 0..d {
                        if b != a {
                            c *= self.axes[b].weights[idx[b]];
                        }
                    }
                    let diff = (v[flat + self.strides[a]] - v[flat]) * inv_h;
                    acc += c * diff * diff;
                }
            }
            for a in (0..d).rev() {
                idx[a] += 1;
                if idx[a] < self.dims[a] {
                    break;
                }
                idx[a] = 0;
            }
        }
        acc
    }

    /// Exact discrete gradient of `1/2 * kinetic` divided by the node weight:
    /// the divergence-form `-Delta_w u`. Zero on Dirichlet nodes.
    pub fn neg_laplacian_weighted(&self, v: &[f64]) -> Vec<f64> {
        let d = self.dims.len();
        let total = self.node_count();
        let mut raw = vec![0.0; total];
        let mut idx = vec![0usize; d];
        for flat in 0..total {
            for a in 0..d {
                if idx[a] + 1 < self.dims[a] {
                    let inv_h2 = 1.0 / (self.axes[a].h * self.axes[a].h);
                    let mut c = self.omega * self.axes[a].cell_moment[idx[a]];
                    for b in 0..d {
                        if b != a {
                            c *= self.axes[b].weights[idx[b]];
                        }
                    }
                    let diff = v[flat + self.strides[a]] - v[flat];
                    raw[flat] -= c * diff * inv_h2;
                    raw[flat + self.strides[a]] += c * diff * inv_h2;
                }
            }
            for a in (0..d).rev() {
                idx[a] += 1;
                if idx[a] < self.dims[a] {
                    break;
                }
                idx[a] = 0;
            }
        }
        for flat in 0..total {
            if self.dirichlet[flat] {
                raw[flat] = 0.0;
            } else {
                raw[flat] /= self.node_weight[flat];
            }
        }
        raw
    }

    /// Direct second-order stencil for the reduced Laplacian
    /// `sum_a [ u_rr + (m_a - 1)/r * u_r ]`, with the even-reflection ghost
    /// node at r = 0 and the L'Hopital form `m * u_rr` at the singularity.
    /// Dirichlet nodes map to zero.
    pub fn laplacian_apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.node_count() {
            return Err(Error::ShapeMismatch { got: v.len(), want: self.node_count() });
        }
        let d = self.dims.len();
        let total = self.node_count();
        let mut out = vec![0.0; total];
        let mut idx = vec![0usize; d];
        for flat in 0..total {
            if self.dirichlet[flat] {
                for a in (0..d).rev() {
                    idx[a] += 1;
                    if idx[a] < self.dims[a] {
                        break;
                    }
                    idx[a] = 0;
                }
                continue;
            }
            let mut acc = 0.0;
            for a in 0..d {
                let ax = &self.axes[a];
                let h2 = ax.h * ax.h;
                let i = idx[a];
                let center = v[flat];
                let up = if i + 1 < self.dims[a] { v[flat + self.strides[a]] } else { 0.0 };
                let singular_center =
                    matches!(ax.kind, AxisKind::HalfLine { .. }) && i == 0;
                if singular_center {
                    let p = ax.exponent() as f64;
                    // even reflection: u_{-1} = u_1; (m-1)/r * u_r -> (m-1) u_rr
                    acc += (1.0 + p) * 2.0 * (up - center) / h2;
                } else {
                    let down = v[flat - self.strides[a]];
                    acc += (up - 2.0 * center + down) / h2;
                    let p = ax.exponent() as f64;
                    if p > 0.0 {
                        let r = ax.coord(i);
                        acc += p / r * (up - down) / (2.0 * ax.h);
                    }
                }
            }
            out[flat] = acc;
            for a in (0..d).rev() {
                idx[a] += 1;
                if idx[a] < self.dims[a] {
                    break;
                }
                idx[a] = 0;
            }
        }
        Ok(out)
    }
}
