//! Divergence-form backprojection on a spherical aperture in 3D.
//!
//! Both spherical routes reduce the detector data to one radial profile per
//! transducer, smear `n(z) · profile(|z - x|)` over the output grid with the
//! aperture quadrature weights, and take the divergence of the resulting
//! vector field:
//!
//! * pulses: `f = 1/(8π²) div Σ w n [(1/t) d/dt (g/t)](|z - x|)`
//! * monochromatic waves: `l = -1/(2π²) div Σ w n h(z, |z - x|)` with
//!   `h(z, t) = -(1/t) ∫ [cos(λt) Im Ŵ - sin(λt) Re Ŵ] λ dλ`

use std::f64::consts::PI;

use rayon::prelude::*;

use super::Reconstruction;
use crate::error::{Error, Result};
use crate::grid::{dist, Grid, ScalarField};
use crate::transducer::TransducerArray;
use crate::wavegen::{MonochromaticData, SphericalMeanData};

/// A filtered radial profile per transducer on a uniform `t` lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct FilteredDetectorData {
    pub array: TransducerArray,
    pub t_samples: Vec<f64>,
    /// `values[i * n_t + k]`.
    pub values: Vec<f64>,
}

impl FilteredDetectorData {
    fn step(&self) -> f64 {
        if self.t_samples.len() > 1 {
            self.t_samples[1] - self.t_samples[0]
        } else {
            self.t_samples[0]
        }
    }

    /// Linear interpolation of transducer `i`'s profile; zero outside the lattice.
    #[inline]
    fn sample(&self, i: usize, t: f64) -> f64 {
        let n = self.t_samples.len();
        let u = (t - self.t_samples[0]) / self.step();
        if !(u >= 0.0) || u > (n - 1) as f64 {
            return 0.0;
        }
        let k = (u.floor() as usize).min(n.saturating_sub(2));
        let f = u - k as f64;
        let row = &self.values[i * n..(i + 1) * n];
        if n == 1 {
            return row[0];
        }
        row[k] * (1.0 - f) + row[k + 1] * f
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonochromaticOptions {
    /// Number of `t` samples on `(0, R + diameter]`.
    pub t_samples: usize,
    /// Fraction of the top of the frequency band covered by the cosine taper.
    pub taper_fraction: f64,
}

impl Default for MonochromaticOptions {
    fn default() -> Self {
        MonochromaticOptions { t_samples: 400, taper_fraction: 0.1 }
    }
}

/// Second-order derivative on a uniform lattice (one-sided at the ends).
fn derivative(y: &[f64], h: f64) -> Vec<f64> {
    let n = y.len();
    if n < 3 {
        return vec![0.0; n];
    }
    (0..n)
        .map(|k| {
            if k == 0 {
                (-3.0 * y[0] + 4.0 * y[1] - y[2]) / (2.0 * h)
            } else if k == n - 1 {
                (3.0 * y[n - 1] - 4.0 * y[n - 2] + y[n - 3]) / (2.0 * h)
            } else {
                (y[k + 1] - y[k - 1]) / (2.0 * h)
            }
        })
        .collect()
}

fn uniform_step(t: &[f64]) -> Result<f64> {
    if t.len() < 3 {
        return Err(Error::InvalidArgument("need at least three radii".into()));
    }
    let h = (t[t.len() - 1] - t[0]) / (t.len() - 1) as f64;
    if t.iter().enumerate().any(|(k, v)| (v - (t[0] + k as f64 * h)).abs() > 1e-9 * h.max(t[0])) {
        return Err(Error::InvalidArgument("radii must be uniformly spaced".into()));
    }
    Ok(h)
}

/// `(1/t) d/dt (g(z, t) / t)` for one electrode.
pub fn filter_spherical_means(data: &SphericalMeanData, electrode: usize) -> Result<FilteredDetectorData> {
    let radii = data.radii();
    let h = uniform_step(radii)?;
    let n_t = radii.len();
    let mut values = Vec::with_capacity(data.array().len() * n_t);
    for i in 0..data.array().len() {
        let g_over_t: Vec<f64> = data.profile(i, electrode).iter().zip(radii).map(|(g, t)| g / t).collect();
        values.extend(derivative(&g_over_t, h).iter().zip(radii).map(|(d, t)| d / t));
    }
    Ok(FilteredDetectorData { array: data.array().clone(), t_samples: radii.to_vec(), values })
}

/// `h(z, t)` on `t_k = k t_max / n_t`, by trapezoid quadrature over the band
/// `[0, λ_max]` (the `λ = 0` node contributes nothing) with a cosine taper on top.
pub fn filter_monochromatic(
    data: &MonochromaticData,
    electrode: usize,
    t_max: f64,
    opts: &MonochromaticOptions,
) -> Result<FilteredDetectorData> {
    let freqs = data.frequencies();
    if freqs.is_empty() {
        return Err(Error::InvalidArgument("empty frequency list".into()));
    }
    if opts.t_samples < 3 {
        return Err(Error::InvalidArgument("need at least three t samples".into()));
    }
    let n_f = freqs.len();
    let step = if n_f > 1 { freqs[1] - freqs[0] } else { freqs[0] };
    let (lo, hi) = (freqs[0], freqs[n_f - 1]);
    let taper_start = hi - opts.taper_fraction * (hi - lo);
    let weights: Vec<f64> = freqs
        .iter()
        .enumerate()
        .map(|(m, &lam)| {
            let trap = if n_f == 1 {
                lam
            } else if m == 0 {
                0.5 * (lam + step)
            } else if m == n_f - 1 {
                0.5 * step
            } else {
                step
            };
            let taper = if lam > taper_start && hi > taper_start {
                0.5 * (1.0 + (PI * (lam - taper_start) / (hi - taper_start)).cos())
            } else {
                1.0
            };
            trap * taper * lam
        })
        .collect();
    let t_samples: Vec<f64> = (1..=opts.t_samples).map(|k| t_max * k as f64 / opts.t_samples as f64).collect();
    let n_tr = data.array().len();
    let values: Vec<f64> = (0..n_tr)
        .into_par_iter()
        .flat_map_iter(|i| {
            let w: Vec<(f64, f64, f64)> = (0..n_f)
                .map(|m| {
                    let v = data.value(i, m, electrode);
                    (freqs[m], weights[m] * v.re, weights[m] * v.im)
                })
                .collect();
            t_samples
                .iter()
                .map(move |&t| {
                    let acc: f64 = w
                        .iter()
                        .map(|&(lam, re, im)| {
                            let (s, c) = (lam * t).sin_cos();
                            c * im - s * re
                        })
                        .sum();
                    -acc / t
                })
                .collect::<Vec<_>>()
        })
        .collect();
    Ok(FilteredDetectorData { array: data.array().clone(), t_samples, values })
}

/// Checks the output grid against the aperture and collects warnings.
fn check_geometry(array: &TransducerArray, out: &Grid, dt: f64) -> Result<Vec<String>> {
    if array.dim() != 3 || out.dim() != 3 {
        return Err(Error::UnsupportedDimension("spherical backprojection is implemented in 3D only".into()));
    }
    let r = array.radius();
    let mut closest = f64::INFINITY;
    for idx in 0..out.len() {
        let p = out.point(idx);
        let rho = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
        if rho >= r {
            return Err(Error::InvalidArgument(format!(
                "output point at radius {rho} is not inside the transducer sphere of radius {r}"
            )));
        }
        closest = closest.min(r - rho);
    }
    let mut warnings = Vec::new();
    if closest < 2.0 * dt {
        warnings.push(format!(
            "output grid comes within {closest:.3e} of the aperture (< 2Δt = {:.3e}); \
             values in that shell are unreliable",
            2.0 * dt
        ));
    }
    Ok(warnings)
}

/// `scale · div Σ_i w_i n_i p_i(|z_i - x|)` on `out`.
fn backproject_divergence(filtered: &FilteredDetectorData, out: &Grid, scale: f64) -> ScalarField {
    let array = &filtered.array;
    let n = out.len();
    let field: Vec<[f64; 3]> = (0..n)
        .into_par_iter()
        .map(|idx| {
            let x = out.point(idx);
            let mut v = [0.0; 3];
            for (i, ((z, nv), w)) in array.positions().iter().zip(array.normals()).zip(array.weights()).enumerate() {
                let q = w * filtered.sample(i, dist(z, &x));
                v[0] += q * nv[0];
                v[1] += q * nv[1];
                v[2] += q * nv[2];
            }
            v
        })
        .collect();
    let counts = out.counts3();
    let h = out.spacing3();
    let values = (0..n)
        .map(|idx| {
            let ijk = out.unravel(idx);
            let mut div = 0.0;
            for a in 0..3 {
                let stride = match a {
                    0 => 1,
                    1 => counts[0],
                    _ => counts[0] * counts[1],
                };
                let i = ijk[a];
                let m = counts[a];
                let comp = |k: usize| field[idx - i * stride + k * stride][a];
                div += if i == 0 {
                    (-3.0 * comp(0) + 4.0 * comp(1) - comp(2)) / (2.0 * h[a])
                } else if i == m - 1 {
                    (3.0 * comp(m - 1) - 4.0 * comp(m - 2) + comp(m - 3)) / (2.0 * h[a])
                } else {
                    (comp(i + 1) - comp(i - 1)) / (2.0 * h[a])
                };
            }
            scale * div
        })
        .collect();
    ScalarField::new(out.clone(), values).expect("finite backprojection")
}

/// Spherical-mean inversion on a spherical aperture: one field per electrode.
pub fn invert_spherical_means_3d(data: &SphericalMeanData, out: &Grid) -> Result<Reconstruction> {
    let dt = uniform_step(data.radii())?;
    let warnings = check_geometry(data.array(), out, dt)?;
    if out.counts().iter().any(|&c| c < 3) {
        return Err(Error::InvalidGrid("divergence needs at least 3 points per axis".into()));
    }
    let fields = (0..data.electrodes().len())
        .map(|j| {
            let filtered = filter_spherical_means(data, j)?;
            Ok(backproject_divergence(&filtered, out, 1.0 / (8.0 * PI * PI)))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Reconstruction::new(fields, warnings))
}

pub fn invert_monochromatic_3d(data: &MonochromaticData, out: &Grid) -> Result<Reconstruction> {
    invert_monochromatic_3d_with(data, out, &MonochromaticOptions::default())
}

/// Monochromatic-wave inversion: `h(z, t)` by frequency quadrature, then the
/// same backprojection as the pulse route.
pub fn invert_monochromatic_3d_with(
    data: &MonochromaticData,
    out: &Grid,
    opts: &MonochromaticOptions,
) -> Result<Reconstruction> {
    if data.frequencies().is_empty() {
        return Err(Error::InvalidArgument("empty frequency list".into()));
    }
    if out.counts().iter().any(|&c| c < 3) {
        return Err(Error::InvalidGrid("divergence needs at least 3 points per axis".into()));
    }
    let t_max = data.array().radius() + out.diameter();
    let dt = t_max / opts.t_samples as f64;
    let warnings = check_geometry(data.array(), out, dt)?;
    let fields = (0..data.electrodes().len())
        .map(|j| {
            let filtered = filter_monochromatic(data, j, t_max, opts)?;
            Ok(backproject_divergence(&filtered, out, -1.0 / (2.0 * PI * PI)))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Reconstruction::new(fields, warnings))
}
