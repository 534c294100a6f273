//! Filtered backprojection of line integrals in 2D.

use std::f64::consts::PI;

use rayon::prelude::*;
use rustfft::FftDirection;

use super::Reconstruction;
use crate::error::{Error, Result};
use crate::fft::fft_real_padded;
use crate::grid::{Grid, ScalarField};
use crate::wavegen::Sinogram;

/// Convolves a projection sampled at step `tau` with the band-limited ramp
/// kernel `h(0) = 1/(4τ²)`, `h(n odd) = -1/(n²π²τ²)`, `h(n even) = 0`.
pub fn ramp_filter(projection: &[f64], tau: f64) -> Vec<f64> {
    let n = projection.len();
    if n == 0 {
        return Vec::new();
    }
    let m = (2 * n).next_power_of_two();
    let mut h = vec![0.0; m];
    h[0] = 1.0 / (4.0 * tau * tau);
    for k in (1..n).step_by(2) {
        let v = -1.0 / ((k * k) as f64 * PI * PI * tau * tau);
        h[k] = v;
        h[m - k] = v;
    }
    let hf = fft_real_padded(&h, m, FftDirection::Forward);
    let mut pf = fft_real_padded(projection, m, FftDirection::Forward);
    for (p, q) in pf.iter_mut().zip(&hf) {
        *p *= q;
    }
    rustfft::FftPlanner::new().plan_fft(m, FftDirection::Inverse).process(&mut pf);
    pf[..n].iter().map(|c| c.re * tau / m as f64).collect()
}

/// Filtered backprojection of every electrode's sinogram onto `out`.
pub fn invert_xray_2d(data: &Sinogram, out: &Grid) -> Result<Reconstruction> {
    if out.dim() != 2 {
        return Err(Error::UnsupportedDimension(format!(
            "filtered backprojection needs a 2D output grid, got {}D",
            out.dim()
        )));
    }
    let angles = data.angles();
    let offsets = data.offsets();
    let n_a = angles.len();
    let n_s = offsets.len();
    let tau = offsets[1] - offsets[0];
    let mut warnings = Vec::new();
    if n_a < 8 {
        warnings.push(format!("only {n_a} angles; expect streak artifacts"));
    }
    let c = data.center();
    let trig: Vec<(f64, f64)> = angles.iter().map(|a| a.sin_cos()).collect();
    let weight = PI / n_a as f64;
    let n_el = data.electrodes().len();
    let mut fields = Vec::with_capacity(n_el);
    for j in 0..n_el {
        let filtered: Vec<Vec<f64>> = (0..n_a)
            .map(|a| {
                let p: Vec<f64> = (0..n_s).map(|s| data.value(a, s, j)).collect();
                ramp_filter(&p, tau)
            })
            .collect();
        let values: Vec<f64> = (0..out.len())
            .into_par_iter()
            .map(|idx| {
                let x = out.point(idx);
                let (dx, dy) = (x[0] - c[0], x[1] - c[1]);
                let mut acc = 0.0;
                for (q, &(sa, ca)) in filtered.iter().zip(&trig) {
                    let u = (dx * ca + dy * sa - offsets[0]) / tau;
                    if u < 0.0 || u > (n_s - 1) as f64 {
                        continue;
                    }
                    let k = (u.floor() as usize).min(n_s - 2);
                    let f = u - k as f64;
                    acc += q[k] * (1.0 - f) + q[k + 1] * f;
                }
                weight * acc
            })
            .collect();
        fields.push(ScalarField::new(out.clone(), values)?);
    }
    Ok(Reconstruction::new(fields, warnings))
}
