//! Steady conduction `∇·(σ∇u) = 0` on the square with Neumann data, and the
//! measurement kernel derived from it.
//!
//! The discretization is cell-centered: one unknown per cell of the phantom
//! grid, five-point fluxes with the harmonic mean of the two cell
//! conductivities on interior faces, and prescribed current on boundary faces.
//! The assembled operator is symmetric positive semi-definite with the
//! constants as its null space, so preconditioned conjugate gradients solve it
//! for any compatible right-hand side.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{Grid, ScalarField};
use crate::kernel::{BoundaryElectrodes, KernelMatrix, Side};
use crate::phantom::Phantom;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Relative residual `||b - A u|| / ||b||` at which CG stops.
    pub tol: f64,
    /// Iteration cap; `None` picks a multiple of the grid size.
    pub max_iter: Option<usize>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { tol: 1e-10, max_iter: None }
    }
}

impl SolverOptions {
    pub fn with_tol(tol: f64) -> Self {
        SolverOptions { tol, max_iter: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelOptions {
    /// Log-conductivity step of the finite-difference perturbation.
    pub eps: f64,
    pub solver: SolverOptions,
}

impl Default for KernelOptions {
    fn default() -> Self {
        KernelOptions { eps: 1e-3, solver: SolverOptions::default() }
    }
}

#[derive(Debug, Clone)]
pub struct ConductionSolution {
    potential: ScalarField,
    boundary_trace: Vec<f64>,
    residual: f64,
    iterations: usize,
    net_flux: f64,
}

impl ConductionSolution {
    /// Cell-centered potential, shifted by the same constant as the trace.
    pub fn potential(&self) -> &ScalarField {
        &self.potential
    }

    /// Potential `h(y_j)` at each electrode, mean zero.
    pub fn boundary_trace(&self) -> &[f64] {
        &self.boundary_trace
    }

    /// Final relative residual of the linear solve.
    pub fn residual(&self) -> f64 {
        self.residual
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    /// `|Σ_cells (A u)_c| / Σ_cells |(A u)_c|`: the net flux leaving through
    /// the boundary of the solved potential, relative to the total flux.
    pub fn flux_imbalance(&self) -> f64 {
        self.net_flux
    }
}

/// Maps each electrode onto the boundary face of the grid it sits on.
#[derive(Debug, Clone)]
struct FaceMap {
    cell: Vec<usize>,
    /// Cell width normal to the face.
    normal_width: Vec<f64>,
}

impl FaceMap {
    fn new(grid: &Grid, electrodes: &BoundaryElectrodes) -> Result<Self> {
        let (lo, hi) = grid.bounds();
        let h = grid.spacing();
        let n = grid.counts();
        let mut cell = Vec::with_capacity(electrodes.len());
        let mut normal_width = Vec::with_capacity(electrodes.len());
        let locate = |v: f64, lo: f64, h: f64, n: usize| -> Option<usize> {
            let u = (v - lo) / h - 0.5;
            let i = u.round();
            ((u - i).abs() < 1e-6 && i >= 0.0 && (i as usize) < n).then_some(i as usize)
        };
        for (e, p) in electrodes.points().iter().enumerate() {
            let on = |a: f64, b: f64, scale: f64| (a - b).abs() <= 1e-9 * scale;
            let side = if on(p[0], lo[0], h[0]) {
                Side::Left
            } else if on(p[0], hi[0], h[0]) {
                Side::Right
            } else if on(p[1], lo[1], h[1]) {
                Side::Bottom
            } else if on(p[1], hi[1], h[1]) {
                Side::Top
            } else {
                return Err(Error::InvalidArgument(format!(
                    "electrode {e} at ({}, {}) is not on the grid boundary",
                    p[0], p[1]
                )));
            };
            let (i, j, w) = match side {
                Side::Left | Side::Right => {
                    let j = locate(p[1], lo[1], h[1], n[1]);
                    let i = if side == Side::Left { 0 } else { n[0] - 1 };
                    (Some(i), j, h[0])
                }
                Side::Bottom | Side::Top => {
                    let i = locate(p[0], lo[0], h[0], n[0]);
                    let j = if side == Side::Bottom { 0 } else { n[1] - 1 };
                    (i, Some(j), h[1])
                }
            };
            match (i, j) {
                (Some(i), Some(j)) => {
                    cell.push(grid.index(i, j, 0));
                    normal_width.push(w);
                }
                _ => return Err(Error::InvalidArgument(format!("electrode {e} is not at a boundary face midpoint"))),
            }
        }
        Ok(FaceMap { cell, normal_width })
    }
}

/// Assembled face conductances for one conductivity map.
struct Operator {
    nx: usize,
    ny: usize,
    /// Face between `(i, j)` and `(i+1, j)`, index `i + (nx-1) j`.
    cx: Vec<f64>,
    /// Face between `(i, j)` and `(i, j+1)`, index `i + nx j`.
    cy: Vec<f64>,
    diag: Vec<f64>,
}

#[inline]
fn harmonic(a: f64, b: f64) -> f64 {
    2.0 * a * b / (a + b)
}

/// `σ_a ∂/∂σ_a` of the harmonic mean.
#[inline]
fn harmonic_log_derivative(a: f64, b: f64) -> f64 {
    2.0 * a * b * b / ((a + b) * (a + b))
}

impl Operator {
    fn new(grid: &Grid, sigma: &[f64]) -> Self {
        let n = grid.counts();
        let (nx, ny) = (n[0], n[1]);
        let h = grid.spacing();
        let gx = h[1] / h[0];
        let gy = h[0] / h[1];
        let mut cx = vec![0.0; (nx - 1) * ny];
        let mut cy = vec![0.0; nx * (ny - 1)];
        let mut diag = vec![0.0; nx * ny];
        for j in 0..ny {
            for i in 0..nx - 1 {
                let a = i + nx * j;
                let c = gx * harmonic(sigma[a], sigma[a + 1]);
                cx[i + (nx - 1) * j] = c;
                diag[a] += c;
                diag[a + 1] += c;
            }
        }
        for j in 0..ny - 1 {
            for i in 0..nx {
                let a = i + nx * j;
                let c = gy * harmonic(sigma[a], sigma[a + nx]);
                cy[i + nx * j] = c;
                diag[a] += c;
                diag[a + nx] += c;
            }
        }
        Operator { nx, ny, cx, cy, diag }
    }

    fn apply(&self, u: &[f64], out: &mut [f64]) {
        let (nx, ny) = (self.nx, self.ny);
        for j in 0..ny {
            for i in 0..nx {
                let a = i + nx * j;
                let mut acc = self.diag[a] * u[a];
                if i > 0 {
                    acc -= self.cx[i - 1 + (nx - 1) * j] * u[a - 1];
                }
                if i + 1 < nx {
                    acc -= self.cx[i + (nx - 1) * j] * u[a + 1];
                }
                if j > 0 {
                    acc -= self.cy[i + nx * (j - 1)] * u[a - nx];
                }
                if j + 1 < ny {
                    acc -= self.cy[i + nx * j] * u[a + nx];
                }
                out[a] = acc;
            }
        }
    }

    /// Jacobi-preconditioned conjugate gradients from `x0`.
    fn solve(&self, b: &[f64], x0: Option<&[f64]>, opts: &SolverOptions) -> Result<(Vec<f64>, f64, usize)> {
        let n = b.len();
        let bnorm = norm(b);
        if bnorm == 0.0 {
            return Ok((vec![0.0; n], 0.0, 0));
        }
        let max_iter = opts.max_iter.unwrap_or(20 * n + 100);
        let mut x = x0.map_or_else(|| vec![0.0; n], <[f64]>::to_vec);
        let mut r = vec![0.0; n];
        self.apply(&x, &mut r);
        for (ri, bi) in r.iter_mut().zip(b) {
            *ri = bi - *ri;
        }
        let inv_diag: Vec<f64> = self.diag.iter().map(|d| if *d > 0.0 { 1.0 / d } else { 1.0 }).collect();
        let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(r, d)| r * d).collect();
        let mut p = z.clone();
        let mut ap = vec![0.0; n];
        let mut rz = dot(&r, &z);
        let mut rel = norm(&r) / bnorm;
        let mut it = 0;
        while rel > opts.tol {
            if it >= max_iter {
                return Err(Error::NoConvergence { iterations: it, residual: rel });
            }
            self.apply(&p, &mut ap);
            let pap = dot(&p, &ap);
            if !(pap > 0.0) {
                return Err(Error::NoConvergence { iterations: it, residual: rel });
            }
            let alpha = rz / pap;
            for k in 0..n {
                x[k] += alpha * p[k];
                r[k] -= alpha * ap[k];
            }
            for k in 0..n {
                z[k] = r[k] * inv_diag[k];
            }
            let rz_new = dot(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            for k in 0..n {
                p[k] = z[k] + beta * p[k];
            }
            it += 1;
            rel = norm(&r) / bnorm;
        }
        // recompute the true residual so drift in the recursion is reported honestly
        self.apply(&x, &mut ap);
        let true_res: Vec<f64> = b.iter().zip(&ap).map(|(b, a)| b - a).collect();
        Ok((x, norm(&true_res) / bnorm, it))
    }

    /// `λᵀ (∂A/∂ log σ_c) u` for every cell `c`.
    fn sensitivity(&self, grid: &Grid, sigma: &[f64], u: &[f64], lambda: &[f64]) -> Vec<f64> {
        let (nx, ny) = (self.nx, self.ny);
        let h = grid.spacing();
        let gx = h[1] / h[0];
        let gy = h[0] / h[1];
        let mut out = vec![0.0; nx * ny];
        for j in 0..ny {
            for i in 0..nx - 1 {
                let a = i + nx * j;
                let b = a + 1;
                let w = (u[a] - u[b]) * (lambda[a] - lambda[b]) * gx;
                out[a] += harmonic_log_derivative(sigma[a], sigma[b]) * w;
                out[b] += harmonic_log_derivative(sigma[b], sigma[a]) * w;
            }
        }
        for j in 0..ny - 1 {
            for i in 0..nx {
                let a = i + nx * j;
                let b = a + nx;
                let w = (u[a] - u[b]) * (lambda[a] - lambda[b]) * gy;
                out[a] += harmonic_log_derivative(sigma[a], sigma[b]) * w;
                out[b] += harmonic_log_derivative(sigma[b], sigma[a]) * w;
            }
        }
        out
    }

    /// `A u` summed over all cells, and the sum of magnitudes.
    fn net_flux(&self, u: &[f64]) -> (f64, f64) {
        let mut au = vec![0.0; u.len()];
        self.apply(u, &mut au);
        (au.iter().sum(), au.iter().map(|v| v.abs()).sum())
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Everything that does not change when the conductivity is perturbed.
struct Setup<'a> {
    grid: &'a Grid,
    electrodes: &'a BoundaryElectrodes,
    faces: FaceMap,
    rhs: Vec<f64>,
}

impl<'a> Setup<'a> {
    fn new(phantom: &'a Phantom, electrodes: &'a BoundaryElectrodes) -> Result<Self> {
        let grid = phantom.grid();
        if grid.dim() != 2 {
            return Err(Error::UnsupportedDimension("conduction is solved in 2D only".into()));
        }
        electrodes.check_compatibility()?;
        let faces = FaceMap::new(grid, electrodes)?;
        let mut rhs = vec![0.0; grid.len()];
        for (e, &c) in faces.cell.iter().enumerate() {
            rhs[c] += electrodes.current()[e] * electrodes.segments()[e];
        }
        Ok(Setup { grid, electrodes, faces, rhs })
    }

    /// Raw (un-gauged) boundary potential at each electrode.
    fn trace(&self, u: &[f64], sigma: &[f64]) -> Vec<f64> {
        self.faces
            .cell
            .iter()
            .zip(&self.faces.normal_width)
            .zip(self.electrodes.current())
            .map(|((&c, &w), &g)| u[c] + 0.5 * w * g / sigma[c])
            .collect()
    }

    fn solve(&self, sigma: &[f64], x0: Option<&[f64]>, opts: &SolverOptions) -> Result<ConductionSolution> {
        let op = Operator::new(self.grid, sigma);
        let (mut u, residual, iterations) = op.solve(&self.rhs, x0, opts)?;
        let mut trace = self.trace(&u, sigma);
        gauge_fix(&mut u, &mut trace);
        let (net, total) = op.net_flux(&u);
        let net_flux = if total > 0.0 { net.abs() / total } else { 0.0 };
        Ok(ConductionSolution {
            potential: ScalarField::new(self.grid.clone(), u)?,
            boundary_trace: trace,
            residual,
            iterations,
            net_flux,
        })
    }
}

/// Shifts potential and trace so the trace has zero mean.
pub fn gauge_fix(u: &mut [f64], trace: &mut [f64]) {
    let mean = trace.iter().sum::<f64>() / trace.len() as f64;
    u.iter_mut().for_each(|v| *v -= mean);
    trace.iter_mut().for_each(|v| *v -= mean);
}

/// Solves for the potential of `phantom` under the electrode current pattern.
pub fn solve_conduction(phantom: &Phantom, electrodes: &BoundaryElectrodes, tol: f64) -> Result<ConductionSolution> {
    solve_conduction_with(phantom, electrodes, &SolverOptions::with_tol(tol))
}

pub fn solve_conduction_with(
    phantom: &Phantom,
    electrodes: &BoundaryElectrodes,
    opts: &SolverOptions,
) -> Result<ConductionSolution> {
    let setup = Setup::new(phantom, electrodes)?;
    setup.solve(&phantom.conductivity(), None, opts)
}

/// Phantom cells covered by each interior pixel.
fn pixel_blocks(phantom_grid: &Grid, interior: &Grid) -> Result<Vec<Vec<usize>>> {
    if interior.dim() != 2 {
        return Err(Error::UnsupportedDimension("kernel interior grid must be 2D".into()));
    }
    let (plo, phi) = phantom_grid.bounds();
    let (ilo, ihi) = interior.bounds();
    let pn = phantom_grid.counts();
    let inn = interior.counts();
    for a in 0..2 {
        let scale = (phi[a] - plo[a]).abs();
        if (plo[a] - ilo[a]).abs() > 1e-9 * scale
            || (phi[a] - ihi[a]).abs() > 1e-9 * scale
            || !pn[a].is_multiple_of(inn[a])
        {
            return Err(Error::InvalidArgument(format!(
                "interior grid must tile the phantom grid (axis {a}: {} phantom cells, {} pixels)",
                pn[a], inn[a]
            )));
        }
    }
    let (bx, by) = (pn[0] / inn[0], pn[1] / inn[1]);
    Ok((0..interior.len())
        .map(|p| {
            let [i, j, _] = interior.unravel(p);
            let mut cells = Vec::with_capacity(bx * by);
            for dj in 0..by {
                for di in 0..bx {
                    cells.push(phantom_grid.index(i * bx + di, j * by + dj, 0));
                }
            }
            cells
        })
        .collect())
}

/// Kernel by direct perturbation: one conduction solve per interior pixel.
///
/// Entry `(j, i)` is `[h_ε(y_j) - h(y_j)] / (ε · pixel area)` where `h_ε` is
/// the trace after adding `ε` to `log σ` on pixel `i`.
pub fn kernel_bruteforce(
    phantom: &Phantom,
    electrodes: &BoundaryElectrodes,
    interior: &Grid,
    eps: f64,
) -> Result<KernelMatrix> {
    kernel_bruteforce_with(phantom, electrodes, interior, &KernelOptions { eps, ..KernelOptions::default() })
}

pub fn kernel_bruteforce_with(
    phantom: &Phantom,
    electrodes: &BoundaryElectrodes,
    interior: &Grid,
    opts: &KernelOptions,
) -> Result<KernelMatrix> {
    if !(opts.eps != 0.0 && opts.eps.is_finite()) {
        return Err(Error::InvalidArgument(format!("perturbation eps must be non-zero, got {}", opts.eps)));
    }
    let setup = Setup::new(phantom, electrodes)?;
    let blocks = pixel_blocks(phantom.grid(), interior)?;
    let sigma = phantom.conductivity();
    let base = setup.solve(&sigma, None, &opts.solver)?;
    let base_u = base.potential.values();
    let scale = 1.0 / (opts.eps * interior.cell_measure());
    let factor = opts.eps.exp();

    let columns: Vec<Vec<f64>> = blocks
        .par_iter()
        .map(|cells| {
            let mut s = sigma.clone();
            for &c in cells {
                s[c] *= factor;
            }
            let pert = setup.solve(&s, Some(base_u), &opts.solver)?;
            Ok(pert.boundary_trace.iter().zip(&base.boundary_trace).map(|(p, b)| (p - b) * scale).collect())
        })
        .collect::<Result<_>>()?;

    let n_pix = interior.len();
    let mut values = vec![0.0; electrodes.len() * n_pix];
    for (i, col) in columns.iter().enumerate() {
        for (j, v) in col.iter().enumerate() {
            values[j * n_pix + i] = *v;
        }
    }
    KernelMatrix::new(electrodes.clone(), interior.clone(), values)
}

/// Exact derivative of the discrete trace with respect to pixel log-conductivity,
/// computed with one adjoint solve per electrode.
pub fn kernel_adjoint(phantom: &Phantom, electrodes: &BoundaryElectrodes, interior: &Grid) -> Result<KernelMatrix> {
    kernel_adjoint_with(phantom, electrodes, interior, &SolverOptions::default())
}

pub fn kernel_adjoint_with(
    phantom: &Phantom,
    electrodes: &BoundaryElectrodes,
    interior: &Grid,
    opts: &SolverOptions,
) -> Result<KernelMatrix> {
    let setup = Setup::new(phantom, electrodes)?;
    let blocks = pixel_blocks(phantom.grid(), interior)?;
    let grid = phantom.grid();
    let sigma = phantom.conductivity();
    let op = Operator::new(grid, &sigma);
    let (u, _, _) = op.solve(&setup.rhs, None, opts)?;

    let m = electrodes.len();
    let faces = &setup.faces;
    // ∂/∂ log σ_c of the explicit σ in the trace: -(w/2) g / σ_c at the electrode's own cell.
    let direct: Vec<f64> =
        (0..m).map(|e| -0.5 * faces.normal_width[e] * electrodes.current()[e] / sigma[faces.cell[e]]).collect();
    // Gauge projection of the trace: every row picks its own cell minus the mean pick.
    let mut mean_pick = vec![0.0; grid.len()];
    for &c in &faces.cell {
        mean_pick[c] += 1.0 / m as f64;
    }
    let mut direct_mean = vec![0.0; grid.len()];
    for e in 0..m {
        direct_mean[faces.cell[e]] += direct[e] / m as f64;
    }

    let area = interior.cell_measure();
    let rows: Vec<Vec<f64>> = (0..m)
        .into_par_iter()
        .map(|e| {
            let mut rhs: Vec<f64> = mean_pick.iter().map(|v| -v).collect();
            rhs[faces.cell[e]] += 1.0;
            let (lambda, _, _) = op.solve(&rhs, None, opts)?;
            let sens = op.sensitivity(grid, &sigma, &u, &lambda);
            let mut per_cell: Vec<f64> = sens.iter().zip(&direct_mean).map(|(s, d)| -s - d).collect();
            per_cell[faces.cell[e]] += direct[e];
            Ok(blocks.iter().map(|cells| cells.iter().map(|&c| per_cell[c]).sum::<f64>() / area).collect())
        })
        .collect::<Result<_>>()?;
    KernelMatrix::new(electrodes.clone(), interior.clone(), rows.concat())
}
