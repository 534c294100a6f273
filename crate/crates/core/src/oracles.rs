//! Reference computations used as ground truth by the tests and the validation runs.
//!
//! Nothing here shares quadrature code with [`crate::wavegen`]. Sphere
//! integrals use composite Gauss–Legendre in the polar angle, measured from
//! the direction of the phantom center and broken at the angles where the
//! integrand has a kink or concentrates, times a uniform azimuthal rule.

use std::f64::consts::PI;
use std::io::Write;

use crate::error::{Error, Result};
use crate::grid::Point;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhantomKind {
    Gaussian,
    Ball,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyticPhantom {
    pub kind: PhantomKind,
    pub dim: usize,
    pub center: Point,
    /// Gaussian width `s` or ball radius `ρ`.
    pub scale: f64,
    pub amplitude: f64,
}

impl AnalyticPhantom {
    pub fn new(kind: PhantomKind, dim: usize, center: Point, scale: f64, amplitude: f64) -> Result<Self> {
        if !(scale > 0.0) {
            return Err(Error::InvalidArgument(format!("phantom scale must be positive, got {scale}")));
        }
        if !(dim == 2 || dim == 3) {
            return Err(Error::UnsupportedDimension(format!("analytic phantoms are 2D or 3D, got {dim}")));
        }
        Ok(AnalyticPhantom { kind, dim, center, scale, amplitude })
    }

    pub fn gaussian(dim: usize, center: Point, s: f64, amplitude: f64) -> Result<Self> {
        AnalyticPhantom::new(PhantomKind::Gaussian, dim, center, s, amplitude)
    }

    pub fn ball(dim: usize, center: Point, radius: f64, amplitude: f64) -> Result<Self> {
        AnalyticPhantom::new(PhantomKind::Ball, dim, center, radius, amplitude)
    }

    /// Value at `x`; the ball is closed.
    pub fn eval(&self, x: &Point) -> f64 {
        eval_phantom(self, x)
    }

    fn radial(&self, r2: f64) -> f64 {
        match self.kind {
            PhantomKind::Gaussian => self.amplitude * (-r2 / (2.0 * self.scale * self.scale)).exp(),
            PhantomKind::Ball => {
                if r2 <= self.scale * self.scale {
                    self.amplitude
                } else {
                    0.0
                }
            }
        }
    }
}

pub fn eval_phantom(p: &AnalyticPhantom, x: &Point) -> f64 {
    let r2: f64 = (0..p.dim).map(|a| (x[a] - p.center[a]).powi(2)).sum();
    p.radial(r2)
}

/// Gauss–Legendre nodes and weights on `[-1, 1]` by Newton iteration on `P_n`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let mut p0 = 1.0;
            let mut p1 = 0.0;
            for k in 0..n {
                let p2 = p1;
                p1 = p0;
                p0 = ((2 * k + 1) as f64 * z * p1 - k as f64 * p2) / (k + 1) as f64;
            }
            dp = n as f64 * (z * p0 - p1) / (z * z - 1.0);
            let dz = p0 / dp;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// Composite Gauss–Legendre rule over consecutive panels `[breaks[i], breaks[i+1]]`.
fn panel_rule(breaks: &[f64], per_panel: usize) -> Vec<(f64, f64)> {
    let (x, w) = gauss_legendre(per_panel);
    let mut out = Vec::with_capacity(per_panel * breaks.len());
    for pair in breaks.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        if !(b > a) {
            continue;
        }
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        for (xi, wi) in x.iter().zip(&w) {
            out.push((mid + half * xi, half * wi));
        }
    }
    out
}

/// Angle from the center direction at which the sphere `|x - z| = t` crosses
/// the sphere `|x - c| = ρ`, if it does.
fn crossing_angle(d: f64, t: f64, rho: f64) -> Option<f64> {
    if d == 0.0 {
        return None;
    }
    let c = (t * t + d * d - rho * rho) / (2.0 * t * d);
    (c > -1.0 && c < 1.0).then(|| c.acos())
}

/// Integral of the phantom over the sphere (circle in 2D) `|x - z| = t`
/// with roughly `n_quad` nodes.
pub fn spherical_mean_quadrature(p: &AnalyticPhantom, z: &Point, t: f64, n_quad: usize) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::InvalidArgument(format!("sphere radius must be positive, got {t}")));
    }
    if n_quad < 64 {
        return Err(Error::InvalidArgument(format!("need at least 64 quadrature nodes, got {n_quad}")));
    }
    let dim = p.dim;
    let mut axis = [0.0; 3];
    for a in 0..dim {
        axis[a] = p.center[a] - z[a];
    }
    let d = axis.iter().map(|v| v * v).sum::<f64>().sqrt();
    let rho = p.scale;

    if p.kind == PhantomKind::Ball {
        if t + d <= rho {
            let measure = if dim == 2 { 2.0 * PI * t } else { 4.0 * PI * t * t };
            return Ok(p.amplitude * measure);
        }
        if (t - d).abs() >= rho {
            return Ok(0.0);
        }
    } else if (t - d).powi(2) / (2.0 * rho * rho) > 745.0 {
        // every node would underflow to exactly zero
        return Ok(0.0);
    }

    // Polar break: the ball's crossing angle, or where the Gaussian has decayed.
    let knee = match p.kind {
        PhantomKind::Ball => crossing_angle(d, t, rho).unwrap_or(PI / 2.0),
        PhantomKind::Gaussian => (10.0 * rho / t).min(PI / 2.0),
    };

    if d == 0.0 {
        axis = [0.0, 0.0, 1.0];
        if dim == 2 {
            axis = [1.0, 0.0, 0.0];
        }
    } else {
        for v in axis.iter_mut() {
            *v /= d;
        }
    }

    if dim == 2 {
        let per_panel = (n_quad / 4).max(16);
        let perp = [-axis[1], axis[0]];
        let rule = panel_rule(&[-PI, -knee, 0.0, knee, PI], per_panel);
        let mut acc = 0.0;
        for (phi, w) in rule {
            let (s, c) = phi.sin_cos();
            let x = [z[0] + t * (c * axis[0] + s * perp[0]), z[1] + t * (c * axis[1] + s * perp[1]), 0.0];
            acc += w * p.eval(&x);
        }
        return Ok(acc * t);
    }

    // Orthonormal frame (e1, e2, axis).
    let helper = if axis[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
    let e1 = normalize(cross(&axis, &helper));
    let e2 = cross(&axis, &e1);
    let n_theta = ((n_quad as f64 / 2.0).sqrt().ceil() as usize).max(8);
    let n_phi = 2 * n_theta;
    let rule = panel_rule(&[0.0, knee, PI], n_theta.div_ceil(2).max(4));
    let mut acc = 0.0;
    for (theta, w) in rule {
        let (st, ct) = theta.sin_cos();
        let mut ring = 0.0;
        for m in 0..n_phi {
            let phi = 2.0 * PI * m as f64 / n_phi as f64;
            let (sp, cp) = phi.sin_cos();
            let mut x = [0.0; 3];
            for a in 0..3 {
                x[a] = z[a] + t * (st * (cp * e1[a] + sp * e2[a]) + ct * axis[a]);
            }
            ring += p.eval(&x);
        }
        acc += w * st * ring * (2.0 * PI / n_phi as f64);
    }
    Ok(acc * t * t)
}

fn cross(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn normalize(v: [f64; 3]) -> [f64; 3] {
    let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    [v[0] / n, v[1] / n, v[2] / n]
}

/// Line integral of a 2D phantom along `{x : x·θ(angle) = offset}`.
pub fn disk_sinogram(p: &AnalyticPhantom, angle: f64, offset: f64) -> Result<f64> {
    if p.dim != 2 {
        return Err(Error::UnsupportedDimension("line integrals of analytic phantoms are 2D".into()));
    }
    let (s, c) = angle.sin_cos();
    let d = p.center[0] * c + p.center[1] * s - offset;
    Ok(match p.kind {
        PhantomKind::Ball => {
            if d.abs() >= p.scale {
                0.0
            } else {
                2.0 * p.amplitude * (p.scale * p.scale - d * d).sqrt()
            }
        }
        PhantomKind::Gaussian => p.amplitude * p.scale * (2.0 * PI).sqrt() * (-d * d / (2.0 * p.scale * p.scale)).exp(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixtureRow {
    pub z: Point,
    pub t: f64,
    pub value: f64,
}

/// Oracle spherical integrals for every `(z, t)` pair.
pub fn fixture_table(p: &AnalyticPhantom, centers: &[Point], radii: &[f64], n_quad: usize) -> Result<Vec<FixtureRow>> {
    let mut rows = Vec::with_capacity(centers.len() * radii.len());
    for z in centers {
        for &t in radii {
            rows.push(FixtureRow { z: *z, t, value: spherical_mean_quadrature(p, z, t, n_quad)? });
        }
    }
    Ok(rows)
}

/// CSV dump `z0,z1,z2,t,value` with a header comment describing the phantom.
pub fn write_fixture<W: Write>(mut w: W, p: &AnalyticPhantom, rows: &[FixtureRow]) -> Result<()> {
    writeln!(
        w,
        "# phantom: {:?},dim={},center={:e};{:e};{:e},scale={:e},amplitude={:e}",
        p.kind, p.dim, p.center[0], p.center[1], p.center[2], p.scale, p.amplitude
    )?;
    writeln!(w, "z0,z1,z2,t,value")?;
    for r in rows {
        writeln!(w, "{:e},{:e},{:e},{:e},{:e}", r.z[0], r.z[1], r.z[2], r.t, r.value)?;
    }
    Ok(())
}
