//! Boundary measurement points and the discretized measurement kernel `l(x, y)`.

use crate::error::{Error, Result};
use crate::grid::{Grid, ScalarField};

/// Which edge of the square a boundary point sits on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Bottom,
    Right,
    Top,
    Left,
}

/// Boundary nodes `y_j`, the applied Neumann datum `g = σ ∂u/∂n` at each node
/// (positive where current enters the domain) and the boundary length each node
/// represents.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryElectrodes {
    points: Vec<[f64; 2]>,
    current: Vec<f64>,
    segments: Vec<f64>,
}

impl BoundaryElectrodes {
    pub fn new(points: Vec<[f64; 2]>, current: Vec<f64>, segments: Vec<f64>) -> Result<Self> {
        if points.len() != current.len() || points.len() != segments.len() {
            return Err(Error::InvalidArgument(
                "electrode points, currents and segment lengths differ in length".into(),
            ));
        }
        if points.is_empty() {
            return Err(Error::InvalidArgument("no electrodes".into()));
        }
        if current.iter().chain(&segments).any(|v| !v.is_finite()) || segments.iter().any(|&s| s < 0.0) {
            return Err(Error::InvalidArgument("electrode data must be finite with non-negative segments".into()));
        }
        Ok(BoundaryElectrodes { points, current, segments })
    }

    /// One node per boundary face of a 2D cell-centered grid, walked
    /// counter-clockwise from the bottom-left corner. `current(side, point)`
    /// gives the Neumann datum at each face midpoint.
    pub fn square_boundary(grid: &Grid, current: impl Fn(Side, [f64; 2]) -> f64) -> Result<Self> {
        if grid.dim() != 2 {
            return Err(Error::UnsupportedDimension("boundary electrodes need a 2D grid".into()));
        }
        let (lo, hi) = grid.bounds();
        let n = grid.counts();
        let h = grid.spacing();
        let mut points = Vec::with_capacity(2 * (n[0] + n[1]));
        let mut sides = Vec::with_capacity(points.capacity());
        let mut segments = Vec::with_capacity(points.capacity());
        for i in 0..n[0] {
            points.push([lo[0] + (i as f64 + 0.5) * h[0], lo[1]]);
            sides.push(Side::Bottom);
            segments.push(h[0]);
        }
        for j in 0..n[1] {
            points.push([hi[0], lo[1] + (j as f64 + 0.5) * h[1]]);
            sides.push(Side::Right);
            segments.push(h[1]);
        }
        for i in (0..n[0]).rev() {
            points.push([lo[0] + (i as f64 + 0.5) * h[0], hi[1]]);
            sides.push(Side::Top);
            segments.push(h[0]);
        }
        for j in (0..n[1]).rev() {
            points.push([lo[0], lo[1] + (j as f64 + 0.5) * h[1]]);
            sides.push(Side::Left);
            segments.push(h[1]);
        }
        let current = points.iter().zip(&sides).map(|(p, s)| current(*s, *p)).collect();
        BoundaryElectrodes::new(points, current, segments)
    }

    /// Current `+magnitude` entering through the left edge and leaving through
    /// the right edge; top and bottom insulated.
    pub fn left_right(grid: &Grid, magnitude: f64) -> Result<Self> {
        BoundaryElectrodes::square_boundary(grid, |side, _| match side {
            Side::Left => magnitude,
            Side::Right => -magnitude,
            _ => 0.0,
        })
    }

    /// Measurement-only channels with no geometry or current, used when a
    /// kernel is synthesized directly rather than derived from a conduction problem.
    pub fn channels(n: usize) -> Self {
        BoundaryElectrodes {
            points: vec![[0.0, 0.0]; n.max(1)],
            current: vec![0.0; n.max(1)],
            segments: vec![0.0; n.max(1)],
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[[f64; 2]] {
        &self.points
    }

    pub fn current(&self) -> &[f64] {
        &self.current
    }

    pub fn segments(&self) -> &[f64] {
        &self.segments
    }

    /// `Σ current · segment`; zero for solvable Neumann data.
    pub fn net_current(&self) -> f64 {
        self.current.iter().zip(&self.segments).map(|(c, s)| c * s).sum()
    }

    pub fn check_compatibility(&self) -> Result<()> {
        let net = self.net_current();
        let scale: f64 = self.current.iter().zip(&self.segments).map(|(c, s)| (c * s).abs()).sum();
        if net.abs() > 1e-12 * scale.max(f64::MIN_POSITIVE) && net.abs() > 1e-300 {
            return Err(Error::IncompatibleNeumann { net });
        }
        Ok(())
    }
}

/// `values[j * n_pixels + i]` is `l(x_i, y_j)`: the response at electrode `j`
/// per unit log-conductivity perturbation per unit area at pixel `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelMatrix {
    electrodes: BoundaryElectrodes,
    interior: Grid,
    values: Vec<f64>,
}

impl KernelMatrix {
    pub fn new(electrodes: BoundaryElectrodes, interior: Grid, values: Vec<f64>) -> Result<Self> {
        let expected = electrodes.len() * interior.len();
        if values.len() != expected {
            return Err(Error::InvalidArgument(format!(
                "kernel has {} entries, expected {} electrodes x {} pixels",
                values.len(),
                electrodes.len(),
                interior.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("non-finite kernel entry at {i}")));
        }
        Ok(KernelMatrix { electrodes, interior, values })
    }

    pub fn zeros(electrodes: BoundaryElectrodes, interior: Grid) -> Self {
        let values = vec![0.0; electrodes.len() * interior.len()];
        KernelMatrix { electrodes, interior, values }
    }

    /// One kernel row per field; all fields must share a grid.
    pub fn from_fields(electrodes: BoundaryElectrodes, fields: &[ScalarField]) -> Result<Self> {
        let grid = fields.first().ok_or_else(|| Error::InvalidArgument("no fields".into()))?.grid().clone();
        if fields.len() != electrodes.len() {
            return Err(Error::InvalidArgument(format!("{} fields for {} electrodes", fields.len(), electrodes.len())));
        }
        let mut values = Vec::with_capacity(grid.len() * fields.len());
        for f in fields {
            if f.grid() != &grid {
                return Err(Error::InvalidArgument("fields live on different grids".into()));
            }
            values.extend_from_slice(f.values());
        }
        KernelMatrix::new(electrodes, grid, values)
    }

    pub fn electrodes(&self) -> &BoundaryElectrodes {
        &self.electrodes
    }

    pub fn interior(&self) -> &Grid {
        &self.interior
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn n_electrodes(&self) -> usize {
        self.electrodes.len()
    }

    pub fn n_pixels(&self) -> usize {
        self.interior.len()
    }

    /// `l(·, y_j)` over the interior pixels.
    pub fn row(&self, j: usize) -> &[f64] {
        let n = self.n_pixels();
        &self.values[j * n..(j + 1) * n]
    }

    pub fn get(&self, electrode: usize, pixel: usize) -> f64 {
        self.values[electrode * self.n_pixels() + pixel]
    }

    pub fn row_field(&self, j: usize) -> ScalarField {
        ScalarField::new(self.interior.clone(), self.row(j).to_vec()).expect("kernel rows are finite")
    }

    /// `(L f)(y_j) = Σ_i l(x_i, y_j) f_i · pixel area`.
    pub fn apply(&self, f: &[f64]) -> Result<Vec<f64>> {
        if f.len() != self.n_pixels() {
            return Err(Error::InvalidArgument(format!(
                "perturbation has {} values, kernel has {} pixels",
                f.len(),
                self.n_pixels()
            )));
        }
        let area = self.interior.cell_measure();
        Ok((0..self.n_electrodes())
            .map(|j| self.row(j).iter().zip(f).map(|(k, v)| k * v).sum::<f64>() * area)
            .collect())
    }

    pub fn frobenius(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// `||self - reference||_F / ||reference||_F`.
    pub fn relative_error(&self, reference: &KernelMatrix) -> f64 {
        crate::grid::relative_l2(&self.values, &reference.values, None)
    }

    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> KernelMatrix {
        KernelMatrix {
            electrodes: self.electrodes.clone(),
            interior: self.interior.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }
}
