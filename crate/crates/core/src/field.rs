//! Node-sampled functions on a reduced grid, with the symmetry projections
//! and the CSV exchange format.

use crate::error::{Error, Result};
use crate::grid::{AxisKind, GridRef};
use std::io::{BufRead, Write};

/// Which half of the swap-symmetric box survives a restriction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Half {
    /// r1 > r2
    First,
    /// r1 < r2
    Second,
}

/// Values on a reduced grid. Outer (Dirichlet) nodes are kept at zero.
#[derive(Debug, Clone)]
pub struct Field {
    grid: GridRef,
    values: Vec<f64>,
}

impl Field {
    pub fn zeros(grid: &GridRef) -> Self {
        Self { grid: grid.clone(), values: vec![0.0; grid.node_count()] }
    }

    /// Sample a coordinate function, zeroing the Dirichlet boundary.
    pub fn from_fn(grid: &GridRef, f: impl Fn(&[f64]) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.node_count());
        for flat in 0..grid.node_count() {
            if grid.is_dirichlet(flat) {
                values.push(0.0);
            } else {
                values.push(f(&grid.coords(flat)));
            }
        }
        Self { grid: grid.clone(), values }
    }

    pub fn from_values(grid: &GridRef, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.node_count() {
            return Err(Error::ShapeMismatch { got: values.len(), want: grid.node_count() });
        }
        let mut f = Self { grid: grid.clone(), values };
        f.enforce_dirichlet();
        Ok(f)
    }

    pub fn grid(&self) -> &GridRef {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn enforce_dirichlet(&mut self) {
        for flat in 0..self.values.len() {
            if self.grid.is_dirichlet(flat) {
                self.values[flat] = 0.0;
            }
        }
    }

    pub fn scale(&mut self, s: f64) {
        for v in &mut self.values {
            *v *= s;
        }
    }

    pub fn axpy(&mut self, a: f64, x: &Field) {
        for (v, xv) in self.values.iter_mut().zip(&x.values) {
            *v += a * xv;
        }
    }

    /// (1 - w) * self + w * other
    pub fn lerp(&self, other: &Field, w: f64) -> Field {
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * (1.0 - w) + b * w)
            .collect();
        Field { grid: self.grid.clone(), values }
    }

    pub fn l2_sq(&self) -> f64 {
        self.grid.inner(&self.values, &self.values)
    }

    pub fn l2(&self) -> f64 {
        self.l2_sq().sqrt()
    }

    pub fn kinetic(&self) -> f64 {
        self.grid.kinetic(&self.values)
    }

    pub fn h1_sq(&self) -> f64 {
        self.kinetic() + self.l2_sq()
    }

    pub fn h1(&self) -> f64 {
        self.h1_sq().sqrt()
    }

    pub fn inner(&self, other: &Field) -> f64 {
        self.grid.inner(&self.values, &other.values)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn max(&self) -> f64 {
        self.values.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().fold(f64::INFINITY, |m, &v| m.min(v))
    }

    fn require_tau_pair(&self) -> Result<()> {
        if !self.grid.class.has_tau_pair() {
            return Err(Error::WrongSymmetryClass(self.grid.class.label()));
        }
        Ok(())
    }

    /// Antisymmetrize under the swap of the first two reduced coordinates:
    /// (u - u o swap)/2. Idempotent; exact on the node lattice.
    pub fn project_tau(&self) -> Result<Field> {
        self.require_tau_pair()?;
        let mut out = self.clone();
        let dims = self.grid.dims();
        let strides = self.grid.strides();
        let third: usize = if dims.len() == 3 { dims[2] } else { 1 };
        for i in 0..dims[0] {
            for j in 0..dims[1] {
                for k in 0..third {
                    let a = i * strides[0] + j * strides[1] + k;
                    let b = j * strides[0] + i * strides[1] + k;
                    out.values[a] = 0.5 * (self.values[a] - self.values[b]);
                }
            }
        }
        Ok(out)
    }

    /// Exact check of the swap antisymmetry.
    pub fn tau_defect(&self) -> Result<f64> {
        self.require_tau_pair()?;
        let dims = self.grid.dims();
        let strides = self.grid.strides();
        let third: usize = if dims.len() == 3 { dims[2] } else { 1 };
        let mut defect = 0.0f64;
        for i in 0..dims[0] {
            for j in 0..dims[1] {
                for k in 0..third {
                    let a = i * strides[0] + j * strides[1] + k;
                    let b = j * strides[0] + i * strides[1] + k;
                    defect = defect.max((self.values[a] + self.values[b]).abs());
                }
            }
        }
        Ok(defect)
    }

    /// Zero out one half of the swap-symmetric box (diagonal included).
    pub fn half_restriction(&self, half: Half) -> Result<Field> {
        self.require_tau_pair()?;
        let mut out = self.clone();
        let dims = self.grid.dims();
        let strides = self.grid.strides();
        let third: usize = if dims.len() == 3 { dims[2] } else { 1 };
        for i in 0..dims[0] {
            for j in 0..dims[1] {
                let keep = match half {
                    Half::First => i > j,
                    Half::Second => i < j,
                };
                if !keep {
                    for k in 0..third {
                        out.values[i * strides[0] + j * strides[1] + k] = 0.0;
                    }
                }
            }
        }
        Ok(out)
    }

    /// Grid-rescaled evaluation of `u(x/t)` by multilinear interpolation;
    /// points mapped outside the domain read as zero.
    pub fn dilate(&self, t: f64) -> Field {
        assert!(t > 0.0, "dilation factor must be positive");
        let grid = &self.grid;
        let d = grid.dim();
        let mut out = Field::zeros(grid);
        for flat in 0..grid.node_count() {
            if grid.is_dirichlet(flat) {
                continue;
            }
            let coords = grid.coords(flat);
            // per-axis cell and weight for the source point coord/t
            let mut base = [0usize; 3];
            let mut frac = [0.0f64; 3];
            let mut outside = false;
            for a in 0..d {
                let ax = &grid.axes[a];
                let q = coords[a] / t;
                let pos = (q - ax.coord(0)) / ax.h;
                if pos < 0.0 || pos > (ax.n - 1) as f64 {
                    outside = true;
                    break;
                }
                let cell = (pos.floor() as usize).min(ax.n - 2);
                base[a] = cell;
                frac[a] = pos - cell as f64;
            }
            if outside {
                continue;
            }
            let mut acc = 0.0;
            for corner in 0..(1usize << d) {
                let mut w = 1.0;
                let mut idx = [0usize; 3];
                for a in 0..d {
                    if corner >> a & 1 == 1 {
                        idx[a] = base[a] + 1;
                        w *= frac[a];
                    } else {
                        idx[a] = base[a];
                        w *= 1.0 - frac[a];
                    }
                }
                if w != 0.0 {
                    acc += w * self.values[grid.ravel(&idx[..d])];
                }
            }
            out.values[flat] = acc;
        }
        out
    }

    /// Translate by `shift` nodes along a full-line axis; vacated nodes are
    /// zero. Exact on the lattice, commutes with the quadrature for fields
    /// supported away from the boundary.
    pub fn shift_nodes(&self, axis: usize, shift: i64) -> Result<Field> {
        let ax = &self.grid.axes[axis];
        if !matches!(ax.kind, AxisKind::FullLine) {
            return Err(Error::WrongSymmetryClass(format!(
                "axis {axis} of {} is not translation-capable",
                self.grid.class.label()
            )));
        }
        let dims = self.grid.dims();
        let strides = self.grid.strides();
        let mut out = Field::zeros(&self.grid);
        for flat in 0..self.grid.node_count() {
            let idx = self.grid.unravel(flat);
            let src = idx[axis] as i64 - shift;
            if src >= 0 && (src as usize) < dims[axis] {
                let src_flat = flat - idx[axis] * strides[axis] + src as usize * strides[axis];
                out.values[flat] = self.values[src_flat];
            }
        }
        out.enforce_dirichlet();
        Ok(out)
    }
}

/// Write a field in the exchange format: header `r1[,r2[,r3]],u`, one node
/// per row, rows lexicographic in node indices.
pub fn write_field_csv(field: &Field, mut w: impl Write) -> Result<()> {
    let d = field.grid().dim();
    let header: Vec<String> = (1..=d).map(|a| format!("r{a}")).collect();
    writeln!(w, "{},u", header.join(","))?;
    for flat in 0..field.grid().node_count() {
        let coords = field.grid().coords(flat);
        for c in &coords {
            write!(w, "{c},")?;
        }
        writeln!(w, "{}", field.values()[flat])?;
    }
    Ok(())
}

/// Read a field written by [`write_field_csv`] back onto its grid. The node
/// coordinates are cross-checked row by row.
pub fn read_field_csv(grid: &GridRef, r: impl BufRead) -> Result<Field> {
    let mut lines = r.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty field csv".into()))?
        .map_err(Error::Io)?;
    let d = grid.dim();
    let want_header: Vec<String> = (1..=d).map(|a| format!("r{a}")).collect();
    let want_header = format!("{},u", want_header.join(","));
    if header.trim() != want_header {
        return Err(Error::Parse(format!(
            "field csv header {header:?} does not match grid ({want_header})"
        )));
    }
    let mut values = Vec::with_capacity(grid.node_count());
    for (row, line) in lines.enumerate() {
        let line = line.map_err(Error::Io)?;
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.trim().split(',').collect();
        if cols.len() != d + 1 {
            return Err(Error::Parse(format!("row {row}: expected {} columns", d + 1)));
        }
        if row >= grid.node_count() {
            return Err(Error::Parse("more rows than grid nodes".into()));
        }
        let coords = grid.coords(row);
        for (a, c) in coords.iter().enumerate() {
            let parsed: f64 = cols[a]
                .parse()
                .map_err(|e| Error::Parse(format!("row {row} col {a}: {e}")))?;
            if parsed != *c {
                return Err(Error::Parse(format!(
                    "row {row}: coordinate {parsed} does not match grid node {c}"
                )));
            }
        }
        values.push(
            cols[d]
                .parse()
                .map_err(|e| Error::Parse(format!("row {row} value: {e}")))?,
        );
    }
    Field::from_values(grid, values)
}
