//! Uniform Cartesian lattices and the scalar fields that live on them.
//!
//! Every field in the crate uses the same layout: row-major with the x index
//! running fastest, so the flat index of `(i, j, k)` is
//! `i + nx * (j + ny * k)`. Two-dimensional grids keep a unit third axis.

use crate::error::{Error, Result};

pub type Point = [f64; 3];

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    dim: usize,
    origin: [f64; 3],
    spacing: [f64; 3],
    counts: [usize; 3],
}

impl Grid {
    /// Builds a grid from per-axis slices; their common length is the dimension.
    pub fn new(origin: &[f64], spacing: &[f64], counts: &[usize]) -> Result<Self> {
        let dim = counts.len();
        if !(dim == 2 || dim == 3) {
            return Err(Error::InvalidGrid(format!("dimension must be 2 or 3, got {dim}")));
        }
        if origin.len() != dim || spacing.len() != dim {
            return Err(Error::InvalidGrid("origin, spacing and counts must have the same length".into()));
        }
        let mut grid = Grid { dim, origin: [0.0; 3], spacing: [1.0; 3], counts: [1; 3] };
        for a in 0..dim {
            if !(spacing[a] > 0.0 && spacing[a].is_finite()) {
                return Err(Error::InvalidGrid(format!("spacing on axis {a} must be positive, got {}", spacing[a])));
            }
            if counts[a] < 2 {
                return Err(Error::InvalidGrid(format!("count on axis {a} must be at least 2, got {}", counts[a])));
            }
            if !origin[a].is_finite() {
                return Err(Error::InvalidGrid(format!("origin on axis {a} is not finite")));
            }
            grid.origin[a] = origin[a];
            grid.spacing[a] = spacing[a];
            grid.counts[a] = counts[a];
        }
        Ok(grid)
    }

    /// `n` cells per axis tiling the cube `[lo, hi]^dim`; sample points are cell centers.
    pub fn cell_centered(dim: usize, n: usize, lo: f64, hi: f64) -> Result<Self> {
        if !(hi > lo) {
            return Err(Error::InvalidGrid(format!("empty interval [{lo}, {hi}]")));
        }
        let h = (hi - lo) / n as f64;
        Grid::new(&vec![lo + 0.5 * h; dim], &vec![h; dim], &vec![n; dim])
    }

    /// `n` nodes per axis with the first and last node on `lo` and `hi`.
    pub fn nodal(dim: usize, n: usize, lo: f64, hi: f64) -> Result<Self> {
        if !(hi > lo) || n < 2 {
            return Err(Error::InvalidGrid(format!("bad nodal grid [{lo}, {hi}] x {n}")));
        }
        let h = (hi - lo) / (n - 1) as f64;
        Grid::new(&vec![lo; dim], &vec![h; dim], &vec![n; dim])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn origin(&self) -> &[f64] {
        &self.origin[..self.dim]
    }

    pub fn spacing(&self) -> &[f64] {
        &self.spacing[..self.dim]
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts[..self.dim]
    }

    pub(crate) fn origin3(&self) -> [f64; 3] {
        self.origin
    }

    pub(crate) fn spacing3(&self) -> [f64; 3] {
        self.spacing
    }

    pub(crate) fn counts3(&self) -> [usize; 3] {
        self.counts
    }

    /// Number of cells.
    pub fn len(&self) -> usize {
        self.counts.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Area (2D) or volume (3D) of one cell.
    pub fn cell_measure(&self) -> f64 {
        self.spacing().iter().product()
    }

    /// Total area or volume covered by the cells.
    pub fn domain_measure(&self) -> f64 {
        self.cell_measure() * self.len() as f64
    }

    pub fn min_spacing(&self) -> f64 {
        self.spacing().iter().copied().fold(f64::INFINITY, f64::min)
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.counts[0] * (j + self.counts[1] * k)
    }

    #[inline]
    pub fn unravel(&self, idx: usize) -> [usize; 3] {
        let nx = self.counts[0];
        let ny = self.counts[1];
        [idx % nx, (idx / nx) % ny, idx / (nx * ny)]
    }

    /// Sample point of the cell with flat index `idx`.
    #[inline]
    pub fn point(&self, idx: usize) -> Point {
        let ijk = self.unravel(idx);
        let mut p = [0.0; 3];
        for a in 0..self.dim {
            p[a] = self.origin[a] + ijk[a] as f64 * self.spacing[a];
        }
        p
    }

    /// Cell extent: `origin - h/2` to `origin + (n - 1/2) h` on each axis.
    pub fn bounds(&self) -> (Point, Point) {
        let mut lo = [0.0; 3];
        let mut hi = [0.0; 3];
        for a in 0..self.dim {
            lo[a] = self.origin[a] - 0.5 * self.spacing[a];
            hi[a] = self.origin[a] + (self.counts[a] as f64 - 0.5) * self.spacing[a];
        }
        (lo, hi)
    }

    pub fn center(&self) -> Point {
        let (lo, hi) = self.bounds();
        let mut c = [0.0; 3];
        for a in 0..self.dim {
            c[a] = 0.5 * (lo[a] + hi[a]);
        }
        c
    }

    /// Radius of the smallest ball about [`Grid::center`] containing the cell extent.
    pub fn circumradius(&self) -> f64 {
        let (lo, hi) = self.bounds();
        (0..self.dim).map(|a| 0.25 * (hi[a] - lo[a]).powi(2)).sum::<f64>().sqrt()
    }

    /// Diameter of the cell extent.
    pub fn diameter(&self) -> f64 {
        2.0 * self.circumradius()
    }

    pub fn contains_point(&self, p: &Point) -> bool {
        let (lo, hi) = self.bounds();
        (0..self.dim).all(|a| p[a] >= lo[a] && p[a] <= hi[a])
    }

    /// Same cell geometry up to a relative tolerance on origin and spacing.
    pub fn approx_eq(&self, other: &Grid, rel: f64) -> bool {
        if self.dim != other.dim || self.counts != other.counts {
            return false;
        }
        let scale = self.circumradius().max(f64::MIN_POSITIVE);
        (0..self.dim).all(|a| {
            (self.spacing[a] - other.spacing[a]).abs() <= rel * self.spacing[a]
                && (self.origin[a] - other.origin[a]).abs() <= rel * scale
        })
    }

    /// Multilinear interpolation of `values` (laid out on this grid) at `p`.
    ///
    /// Nodes outside the lattice count as zero, so the interpolant decays to
    /// zero over one spacing past the outermost samples.
    #[inline]
    pub fn interpolate(&self, values: &[f64], p: &Point) -> f64 {
        let mut base = [0isize; 3];
        let mut frac = [0.0f64; 3];
        for a in 0..self.dim {
            let u = (p[a] - self.origin[a]) / self.spacing[a];
            if !(u > -1.0 && u < self.counts[a] as f64) {
                return 0.0;
            }
            let f = u.floor();
            base[a] = f as isize;
            frac[a] = u - f;
        }
        let nx = self.counts[0] as isize;
        let ny = self.counts[1] as isize;
        let nz = self.counts[2] as isize;
        let corners = if self.dim == 2 { 4 } else { 8 };
        let mut acc = 0.0;
        for c in 0..corners {
            let di = (c & 1) as isize;
            let dj = ((c >> 1) & 1) as isize;
            let dk = ((c >> 2) & 1) as isize;
            let i = base[0] + di;
            let j = base[1] + dj;
            let k = base[2] + dk;
            if i < 0 || j < 0 || k < 0 || i >= nx || j >= ny || k >= nz {
                continue;
            }
            let wx = if di == 1 { frac[0] } else { 1.0 - frac[0] };
            let wy = if dj == 1 { frac[1] } else { 1.0 - frac[1] };
            let wz = if self.dim == 2 {
                1.0
            } else if dk == 1 {
                frac[2]
            } else {
                1.0 - frac[2]
            };
            let w = wx * wy * wz;
            if w != 0.0 {
                acc += w * values[(i + nx * (j + ny * k)) as usize];
            }
        }
        acc
    }

    /// Header descriptor `dim,counts...,origin...,spacing...` used by the CSV formats.
    pub fn descriptor(&self) -> String {
        let mut parts = vec![self.dim.to_string()];
        parts.extend(self.counts().iter().map(|c| c.to_string()));
        parts.extend(self.origin().iter().map(|v| format!("{v:e}")));
        parts.extend(self.spacing().iter().map(|v| format!("{v:e}")));
        parts.join(",")
    }

    pub fn from_descriptor(text: &str) -> Result<Self> {
        let fields: Vec<&str> = text.split(',').map(str::trim).collect();
        let dim: usize = fields
            .first()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Format(format!("bad grid descriptor `{text}`")))?;
        if !(dim == 2 || dim == 3) || fields.len() != 1 + 3 * dim {
            return Err(Error::Format(format!("bad grid descriptor `{text}`")));
        }
        let bad = || Error::Format(format!("bad grid descriptor `{text}`"));
        let counts =
            fields[1..1 + dim].iter().map(|s| s.parse::<usize>().map_err(|_| bad())).collect::<Result<Vec<_>>>()?;
        let origin = fields[1 + dim..1 + 2 * dim]
            .iter()
            .map(|s| s.parse::<f64>().map_err(|_| bad()))
            .collect::<Result<Vec<_>>>()?;
        let spacing =
            fields[1 + 2 * dim..].iter().map(|s| s.parse::<f64>().map_err(|_| bad())).collect::<Result<Vec<_>>>()?;
        Grid::new(&origin, &spacing, &counts)
    }
}

/// Real values sampled on a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: Grid,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidArgument(format!(
                "field has {} values but grid has {} cells",
                values.len(),
                grid.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("non-finite field value at index {i}")));
        }
        Ok(ScalarField { grid, values })
    }

    pub fn zeros(grid: Grid) -> Self {
        let values = vec![0.0; grid.len()];
        ScalarField { grid, values }
    }

    /// Samples `f` at every grid point.
    pub fn from_fn(grid: Grid, f: impl Fn(&Point) -> f64) -> Self {
        let values = (0..grid.len()).map(|i| f(&grid.point(i))).collect();
        ScalarField { grid, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn interpolate(&self, p: &Point) -> f64 {
        self.grid.interpolate(&self.values, p)
    }

    /// Continuous L2 norm (sum of squares times cell measure, square-rooted).
    pub fn l2_norm(&self) -> f64 {
        (self.values.iter().map(|v| v * v).sum::<f64>() * self.grid.cell_measure()).sqrt()
    }
}

/// `||a - b|| / ||b||` over the entries selected by `mask` (all when `None`).
pub fn relative_l2(a: &[f64], b: &[f64], mask: Option<&[bool]>) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..a.len().min(b.len()) {
        if mask.is_none_or(|m| m[i]) {
            num += (a[i] - b[i]).powi(2);
            den += b[i] * b[i];
        }
    }
    if den == 0.0 {
        return num.sqrt();
    }
    (num / den).sqrt()
}

#[inline]
pub(crate) fn dist(a: &Point, b: &Point) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}
