//! Piecewise-constant log-conductivity phantoms made of disks (balls in 3D).

use crate::error::{Error, Result};
use crate::grid::{Grid, Point, ScalarField};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Disk {
    pub center: Point,
    pub radius: f64,
    pub amplitude: f64,
}

impl Disk {
    pub fn new_2d(cx: f64, cy: f64, radius: f64, amplitude: f64) -> Self {
        Disk { center: [cx, cy, 0.0], radius, amplitude }
    }

    fn contains(&self, p: &Point, dim: usize) -> bool {
        let d2: f64 = (0..dim).map(|a| (p[a] - self.center[a]).powi(2)).sum();
        d2 <= self.radius * self.radius
    }
}

/// Rasterized log-conductivity `log σ` together with the disks that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct Phantom {
    field: ScalarField,
    disks: Vec<Disk>,
}

impl Phantom {
    pub fn field(&self) -> &ScalarField {
        &self.field
    }

    pub fn grid(&self) -> &Grid {
        self.field.grid()
    }

    pub fn disks(&self) -> &[Disk] {
        &self.disks
    }

    /// Uniform background `log σ ≡ 0`.
    pub fn homogeneous(grid: Grid) -> Self {
        Phantom { field: ScalarField::zeros(grid), disks: Vec::new() }
    }

    /// Wraps an arbitrary log-conductivity field (no disk description).
    pub fn from_field(field: ScalarField) -> Self {
        Phantom { field, disks: Vec::new() }
    }

    /// Conductivity `σ = exp(log σ)` per cell.
    pub fn conductivity(&self) -> Vec<f64> {
        self.field.values().iter().map(|v| v.exp()).collect()
    }
}

/// Rasterizes `disks` on `grid`: each cell takes the sum of the amplitudes of
/// the disks containing its center, background 0.
pub fn build_phantom_disks(grid: Grid, disks: &[Disk]) -> Result<Phantom> {
    let dim = grid.dim();
    let (lo, hi) = grid.bounds();
    for (index, d) in disks.iter().enumerate() {
        if !(d.radius > 0.0) {
            return Err(Error::DiskOutsideDomain {
                index,
                reason: format!("radius must be positive, got {}", d.radius),
            });
        }
        if !(-1.0..=1.0).contains(&d.amplitude) {
            return Err(Error::DiskOutsideDomain {
                index,
                reason: format!("amplitude {} outside [-1, 1]", d.amplitude),
            });
        }
        for a in 0..dim {
            if d.center[a] - d.radius < lo[a] || d.center[a] + d.radius > hi[a] {
                return Err(Error::DiskOutsideDomain {
                    index,
                    reason: format!(
                        "extent [{}, {}] on axis {a} leaves the grid box [{}, {}]",
                        d.center[a] - d.radius,
                        d.center[a] + d.radius,
                        lo[a],
                        hi[a]
                    ),
                });
            }
        }
    }
    let values = (0..grid.len())
        .map(|i| {
            let p = grid.point(i);
            disks.iter().filter(|d| d.contains(&p, dim)).map(|d| d.amplitude).sum::<f64>()
        })
        .collect();
    Ok(Phantom { field: ScalarField::new(grid, values)?, disks: disks.to_vec() })
}

/// Four disks of log-contrast ±0.05 inside the square `[-1/2, 1/2]^2`.
pub fn default_disks() -> Vec<Disk> {
    vec![
        Disk::new_2d(-0.20, 0.18, 0.12, 0.05),
        Disk::new_2d(0.21, 0.16, 0.10, -0.05),
        Disk::new_2d(0.14, -0.20, 0.13, 0.05),
        Disk::new_2d(-0.19, -0.17, 0.09, -0.05),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_square(n: usize) -> Grid {
        Grid::cell_centered(2, n, -0.5, 0.5).unwrap()
    }

    #[test]
    fn empty_list_is_background() {
        let p = build_phantom_disks(unit_square(16), &[]).unwrap();
        assert!(p.field().values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn plus_minus_contrast_takes_exact_values() {
        let disks = [Disk::new_2d(-0.2, 0.0, 0.15, 0.05), Disk::new_2d(0.2, 0.0, 0.15, -0.05)];
        let p = build_phantom_disks(unit_square(64), &disks).unwrap();
        let vals = p.field().values();
        assert!(vals.iter().all(|&v| v == 0.0 || v == 0.05 || v == -0.05));
        assert!(vals.contains(&0.05) && vals.contains(&-0.05) && vals.contains(&0.0));
    }

    #[test]
    fn overlapping_disks_add() {
        let disks = [Disk::new_2d(-0.05, 0.0, 0.2, 0.05), Disk::new_2d(0.05, 0.0, 0.2, 0.05)];
        let p = build_phantom_disks(unit_square(64), &disks).unwrap();
        let g = p.grid();
        let center = g.index(32, 32, 0);
        assert!((p.field().values()[center] - 0.10).abs() < 1e-15);
    }

    #[test]
    fn disk_leaving_domain_is_rejected() {
        let err = build_phantom_disks(unit_square(16), &[Disk::new_2d(0.45, 0.0, 0.1, 0.05)]);
        assert!(matches!(err, Err(Error::DiskOutsideDomain { index: 0, .. })));
        let err = build_phantom_disks(unit_square(16), &[Disk::new_2d(0.0, 0.0, 0.1, 1.5)]);
        assert!(err.is_err());
    }

    #[test]
    fn rasterization_is_idempotent() {
        let a = build_phantom_disks(unit_square(48), &default_disks()).unwrap();
        let b = build_phantom_disks(unit_square(48), &default_disks()).unwrap();
        let bits = |p: &Phantom| p.field().values().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a), bits(&b));
    }

    #[test]
    fn balls_rasterize_in_3d() {
        let g = Grid::cell_centered(3, 20, -0.5, 0.5).unwrap();
        let ball = Disk { center: [0.0, 0.0, 0.0], radius: 0.3, amplitude: 1.0 };
        let p = build_phantom_disks(g, &[ball]).unwrap();
        let vol = p.field().values().iter().sum::<f64>() * p.grid().cell_measure();
        let exact = 4.0 / 3.0 * std::f64::consts::PI * 0.027;
        assert!((vol - exact).abs() / exact < 0.05);
    }
}
