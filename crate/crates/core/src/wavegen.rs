//! Responses of the measurement operator to unfocused ultrasound waves.
//!
//! Each family evaluates `∫ l(x, y_j) w(x) dx` for a set of waves `w`:
//! spherical pulses (integrals over spheres centered on the transducers),
//! monochromatic spherical waves (integrals against the Helmholtz Green's
//! function), plane waves (the Fourier transform of each kernel row) and
//! pencil beams (line integrals).

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use rustfft::FftDirection;

use crate::error::{Error, Result};
use crate::fft::fft_nd;
use crate::grid::{dist, Grid, Point};
use crate::kernel::{BoundaryElectrodes, KernelMatrix};
use crate::transducer::TransducerArray;

/// Angular oversampling of the sphere and circle quadratures, relative to grid spacing.
pub const DEFAULT_OVERSAMPLE: usize = 2;

/// Spherical (circular in 2D) integrals `g(z_i, t_k)` of every kernel row.
#[derive(Debug, Clone, PartialEq)]
pub struct SphericalMeanData {
    array: TransducerArray,
    radii: Vec<f64>,
    electrodes: BoundaryElectrodes,
    values: Vec<f64>,
}

impl SphericalMeanData {
    /// `values[(i * n_radii + k) * n_electrodes + j]`.
    pub fn new(
        array: TransducerArray,
        radii: Vec<f64>,
        electrodes: BoundaryElectrodes,
        values: Vec<f64>,
    ) -> Result<Self> {
        check_radii(&radii)?;
        check_len(values.len(), array.len() * radii.len() * electrodes.len(), "spherical-mean")?;
        check_finite(values.iter().copied())?;
        Ok(SphericalMeanData { array, radii, electrodes, values })
    }

    pub fn array(&self) -> &TransducerArray {
        &self.array
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn electrodes(&self) -> &BoundaryElectrodes {
        &self.electrodes
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, transducer: usize, radius: usize, electrode: usize) -> f64 {
        self.values[(transducer * self.radii.len() + radius) * self.electrodes.len() + electrode]
    }

    /// `g(z_i, ·)` for one electrode.
    pub fn profile(&self, transducer: usize, electrode: usize) -> Vec<f64> {
        (0..self.radii.len()).map(|k| self.value(transducer, k, electrode)).collect()
    }
}

/// `Ŵ(z_i, λ_m, y_j) = ∫ l(x, y_j) Φ_λ(x, z_i) dx` with `Φ_λ = e^{iλr} / (4πr)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MonochromaticData {
    array: TransducerArray,
    frequencies: Vec<f64>,
    electrodes: BoundaryElectrodes,
    values: Vec<Complex64>,
}

impl MonochromaticData {
    /// `values[(i * n_freqs + m) * n_electrodes + j]`.
    pub fn new(
        array: TransducerArray,
        frequencies: Vec<f64>,
        electrodes: BoundaryElectrodes,
        values: Vec<Complex64>,
    ) -> Result<Self> {
        check_frequencies(&frequencies)?;
        check_len(values.len(), array.len() * frequencies.len() * electrodes.len(), "monochromatic")?;
        check_finite(values.iter().flat_map(|c| [c.re, c.im]))?;
        Ok(MonochromaticData { array, frequencies, electrodes, values })
    }

    pub fn array(&self) -> &TransducerArray {
        &self.array
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    pub fn electrodes(&self) -> &BoundaryElectrodes {
        &self.electrodes
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn value(&self, transducer: usize, freq: usize, electrode: usize) -> Complex64 {
        self.values[(transducer * self.frequencies.len() + freq) * self.electrodes.len() + electrode]
    }
}

/// Samples `∫ e^{ik·x} l(x, y_j) dx` on the wave-vector lattice conjugate to `spatial`.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierData {
    kgrid: Grid,
    spatial: Grid,
    electrodes: BoundaryElectrodes,
    values: Vec<Complex64>,
}

impl FourierData {
    /// `values[k * n_electrodes + j]` with `k` the flat index on `kgrid`.
    pub fn new(spatial: Grid, electrodes: BoundaryElectrodes, values: Vec<Complex64>) -> Result<Self> {
        let kgrid = conjugate_lattice(&spatial);
        check_len(values.len(), kgrid.len() * electrodes.len(), "Fourier")?;
        check_finite(values.iter().flat_map(|c| [c.re, c.im]))?;
        Ok(FourierData { kgrid, spatial, electrodes, values })
    }

    pub fn kgrid(&self) -> &Grid {
        &self.kgrid
    }

    /// The grid whose Fourier lattice this is.
    pub fn spatial(&self) -> &Grid {
        &self.spatial
    }

    pub fn electrodes(&self) -> &BoundaryElectrodes {
        &self.electrodes
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn value(&self, k: usize, electrode: usize) -> Complex64 {
        self.values[k * self.electrodes.len() + electrode]
    }

    /// `Π_a Δk_a / (2π)`: the factor that makes `Σ |F|² · norm = ∫ |f|²`.
    pub fn lattice_norm(&self) -> f64 {
        self.kgrid.spacing().iter().map(|dk| dk / (2.0 * PI)).product()
    }
}

/// Wave vectors `k_m = (m - ⌊N/2⌋) · 2π / (N h)` on each axis.
pub fn conjugate_lattice(spatial: &Grid) -> Grid {
    let n = spatial.counts();
    let dk: Vec<f64> = n.iter().zip(spatial.spacing()).map(|(&n, &h)| 2.0 * PI / (n as f64 * h)).collect();
    let origin: Vec<f64> = n.iter().zip(&dk).map(|(&n, &dk)| -((n / 2) as f64) * dk).collect();
    Grid::new(&origin, &dk, n).expect("conjugate of a valid grid is valid")
}

/// Line integrals of every kernel row; lines `{x : (x - center)·θ(a) = s}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Sinogram {
    angles: Vec<f64>,
    offsets: Vec<f64>,
    center: [f64; 2],
    electrodes: BoundaryElectrodes,
    values: Vec<f64>,
}

impl Sinogram {
    /// `values[(a * n_offsets + s) * n_electrodes + j]`.
    pub fn new(
        angles: Vec<f64>,
        offsets: Vec<f64>,
        center: [f64; 2],
        electrodes: BoundaryElectrodes,
        values: Vec<f64>,
    ) -> Result<Self> {
        check_angles(&angles)?;
        check_offsets(&offsets)?;
        check_len(values.len(), angles.len() * offsets.len() * electrodes.len(), "sinogram")?;
        check_finite(values.iter().copied())?;
        Ok(Sinogram { angles, offsets, center, electrodes, values })
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    pub fn offsets(&self) -> &[f64] {
        &self.offsets
    }

    pub fn center(&self) -> [f64; 2] {
        self.center
    }

    pub fn electrodes(&self) -> &BoundaryElectrodes {
        &self.electrodes
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, angle: usize, offset: usize, electrode: usize) -> f64 {
        self.values[(angle * self.offsets.len() + offset) * self.electrodes.len() + electrode]
    }
}

/// Any of the measurement families.
#[derive(Debug, Clone, PartialEq)]
pub enum WaveData {
    SphericalMeans(SphericalMeanData),
    Monochromatic(MonochromaticData),
    PlaneWaves(FourierData),
    LineIntegrals(Sinogram),
}

impl WaveData {
    pub fn family(&self) -> &'static str {
        match self {
            WaveData::SphericalMeans(_) => "spherical",
            WaveData::Monochromatic(_) => "monochromatic",
            WaveData::PlaneWaves(_) => "plane",
            WaveData::LineIntegrals(_) => "xray",
        }
    }

    pub fn electrodes(&self) -> &BoundaryElectrodes {
        match self {
            WaveData::SphericalMeans(d) => &d.electrodes,
            WaveData::Monochromatic(d) => &d.electrodes,
            WaveData::PlaneWaves(d) => &d.electrodes,
            WaveData::LineIntegrals(d) => &d.electrodes,
        }
    }

    /// Number of scalar samples (complex samples count once).
    pub fn len(&self) -> usize {
        match self {
            WaveData::SphericalMeans(d) => d.values.len(),
            WaveData::Monochromatic(d) => d.values.len(),
            WaveData::PlaneWaves(d) => d.values.len(),
            WaveData::LineIntegrals(d) => d.values.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Root mean square of the sample magnitudes.
    pub fn rms(&self) -> f64 {
        let (sum, n) = match self {
            WaveData::SphericalMeans(d) => (d.values.iter().map(|v| v * v).sum::<f64>(), d.values.len()),
            WaveData::LineIntegrals(d) => (d.values.iter().map(|v| v * v).sum::<f64>(), d.values.len()),
            WaveData::Monochromatic(d) => (d.values.iter().map(|v| v.norm_sqr()).sum::<f64>(), d.values.len()),
            WaveData::PlaneWaves(d) => (d.values.iter().map(|v| v.norm_sqr()).sum::<f64>(), d.values.len()),
        };
        if n == 0 {
            0.0
        } else {
            (sum / n as f64).sqrt()
        }
    }
}

impl From<SphericalMeanData> for WaveData {
    fn from(d: SphericalMeanData) -> Self {
        WaveData::SphericalMeans(d)
    }
}

impl From<MonochromaticData> for WaveData {
    fn from(d: MonochromaticData) -> Self {
        WaveData::Monochromatic(d)
    }
}

impl From<FourierData> for WaveData {
    fn from(d: FourierData) -> Self {
        WaveData::PlaneWaves(d)
    }
}

impl From<Sinogram> for WaveData {
    fn from(d: Sinogram) -> Self {
        WaveData::LineIntegrals(d)
    }
}

fn check_len(got: usize, expected: usize, what: &str) -> Result<()> {
    if got != expected {
        return Err(Error::InvalidArgument(format!("{what} data has {got} values, expected {expected}")));
    }
    Ok(())
}

fn check_finite(mut values: impl Iterator<Item = f64>) -> Result<()> {
    if values.any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("non-finite data value".into()));
    }
    Ok(())
}

fn check_radii(radii: &[f64]) -> Result<()> {
    if radii.is_empty() {
        return Err(Error::InvalidArgument("empty radius list".into()));
    }
    if let Some(r) = radii.iter().find(|r| !(**r > 0.0)) {
        return Err(Error::InvalidArgument(format!("radius must be positive, got {r}")));
    }
    if radii.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidArgument("radii must be strictly increasing".into()));
    }
    Ok(())
}

fn is_uniform(v: &[f64]) -> bool {
    if v.len() < 3 {
        return true;
    }
    let step = (v[v.len() - 1] - v[0]) / (v.len() - 1) as f64;
    v.iter().enumerate().all(|(i, x)| (x - (v[0] + i as f64 * step)).abs() <= 1e-9 * step.abs().max(v[0].abs()))
}

fn check_frequencies(freqs: &[f64]) -> Result<()> {
    if freqs.is_empty() {
        return Err(Error::InvalidArgument("empty frequency list".into()));
    }
    if freqs.iter().any(|f| !(*f > 0.0)) || freqs.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidArgument("frequencies must be positive and increasing".into()));
    }
    if !is_uniform(freqs) {
        return Err(Error::InvalidArgument("frequencies must be uniformly spaced".into()));
    }
    Ok(())
}

fn check_angles(angles: &[f64]) -> Result<()> {
    if angles.is_empty() {
        return Err(Error::InvalidArgument("empty angle list".into()));
    }
    let n = angles.len() as f64;
    let uniform = angles.iter().enumerate().all(|(i, a)| (a - PI * i as f64 / n).abs() <= 1e-9);
    if !uniform {
        return Err(Error::InvalidArgument("angles must be uniform on [0, π)".into()));
    }
    Ok(())
}

fn check_offsets(offsets: &[f64]) -> Result<()> {
    if offsets.len() < 2 {
        return Err(Error::InvalidArgument("need at least two offsets".into()));
    }
    let lo = offsets[0];
    let hi = offsets[offsets.len() - 1];
    if !(hi > lo) || !is_uniform(offsets) || (lo + hi).abs() > 1e-9 * hi.abs() {
        return Err(Error::InvalidArgument("offsets must be uniform, increasing and symmetric about 0".into()));
    }
    Ok(())
}

/// `n` angles `π a / n`.
pub fn uniform_angles(n: usize) -> Vec<f64> {
    (0..n).map(|a| PI * a as f64 / n as f64).collect()
}

/// `n` offsets spanning the circumscribed disk of `grid` symmetrically.
pub fn default_offsets(grid: &Grid, n: usize) -> Vec<f64> {
    let r = grid.circumradius();
    let n = n.max(2);
    (0..n).map(|s| -r + 2.0 * r * s as f64 / (n - 1) as f64).collect()
}

/// Odd offset count with spacing about `Δx/8` across the circumscribed disk.
/// The kernel peaks sharply next to each electrode and coarser sampling aliases it.
pub fn auto_offset_count(grid: &Grid) -> usize {
    let n = (16.0 * grid.circumradius() / grid.min_spacing()).ceil() as usize + 1;
    n | 1
}

/// `n` radii `t_k = k (R + diameter) / n`, `k = 1..=n`.
pub fn default_radii(array: &TransducerArray, grid: &Grid, n: usize) -> Vec<f64> {
    let t_max = array.radius() + grid.diameter();
    (1..=n).map(|k| t_max * k as f64 / n as f64).collect()
}

/// Uniform band `λ ∈ [Δλ, π/Δx]` with `Δλ = π / (2 · diameter)`, diameter of the
/// transducer aperture; `n` overrides the count (keeping the end points).
pub fn default_frequencies(array: &TransducerArray, grid: &Grid, n: Option<usize>) -> Vec<f64> {
    let d_lambda = PI / (2.0 * 2.0 * array.radius());
    let lambda_max = PI / grid.min_spacing();
    let count = n.unwrap_or(((lambda_max / d_lambda).floor() as usize).max(1));
    if count == 1 {
        return vec![d_lambda];
    }
    let step = (lambda_max - d_lambda) / (count - 1) as f64;
    (0..count).map(|m| d_lambda + step * m as f64).collect()
}

/// Pixel-major copy of the kernel so one interpolation stencil reads all electrodes contiguously.
fn transpose(kernel: &KernelMatrix) -> Vec<f64> {
    let m = kernel.n_electrodes();
    let n = kernel.n_pixels();
    let mut out = vec![0.0; m * n];
    for j in 0..m {
        for (i, v) in kernel.row(j).iter().enumerate() {
            out[i * m + j] = *v;
        }
    }
    out
}

/// Adds `weight × (multilinear interpolant of every row at p)` into `acc`.
#[inline]
fn accumulate_interpolated(grid: &Grid, kt: &[f64], n_el: usize, p: &Point, weight: f64, acc: &mut [f64]) {
    let o = grid.origin3();
    let h = grid.spacing3();
    let n = grid.counts3();
    let dim = grid.dim();
    let mut base = [0isize; 3];
    let mut frac = [0.0; 3];
    for a in 0..dim {
        let u = (p[a] - o[a]) / h[a];
        if !(u > -1.0 && u < n[a] as f64) {
            return;
        }
        let f = u.floor();
        base[a] = f as isize;
        frac[a] = u - f;
    }
    let corners = if dim == 2 { 4 } else { 8 };
    for c in 0..corners {
        let d = [(c & 1) as isize, ((c >> 1) & 1) as isize, ((c >> 2) & 1) as isize];
        let mut w = weight;
        let mut idx = 0usize;
        let mut stride = 1usize;
        let mut inside = true;
        for a in 0..dim {
            let i = base[a] + d[a];
            if i < 0 || i >= n[a] as isize {
                inside = false;
                break;
            }
            w *= if d[a] == 1 { frac[a] } else { 1.0 - frac[a] };
            idx += i as usize * stride;
            stride *= n[a];
        }
        if !inside || w == 0.0 {
            continue;
        }
        let row = &kt[idx * n_el..(idx + 1) * n_el];
        for (a, v) in acc.iter_mut().zip(row) {
            *a += w * v;
        }
    }
}

/// Quadrature nodes and weights on the circle or sphere `|x - z| = t`.
///
/// Uniform angles in 2D. In 3D, polar bands of equal angular width, each with
/// an azimuthal count proportional to its circumference and weights equal to
/// the band's exact area split evenly, so constants integrate exactly.
pub(crate) fn sphere_rule(dim: usize, z: &Point, t: f64, dx: f64, oversample: usize) -> Vec<(Point, f64)> {
    let os = oversample.max(1) as f64;
    if dim == 2 {
        let n = (((2.0 * PI * t / dx).ceil() * os) as usize).max(8);
        let w = 2.0 * PI * t / n as f64;
        return (0..n)
            .map(|m| {
                let a = 2.0 * PI * m as f64 / n as f64;
                ([z[0] + t * a.cos(), z[1] + t * a.sin(), 0.0], w)
            })
            .collect();
    }
    let n_theta = (((PI * t / dx).ceil() * os) as usize).max(4);
    let d_theta = PI / n_theta as f64;
    let mut nodes = Vec::new();
    for b in 0..n_theta {
        let (ta, tb) = (b as f64 * d_theta, (b + 1) as f64 * d_theta);
        let tc = 0.5 * (ta + tb);
        let n_phi = (((2.0 * PI * t * tc.sin() / dx).ceil() * os) as usize).max(4);
        let w = 2.0 * PI * t * t * (ta.cos() - tb.cos()) / n_phi as f64;
        let shift = if b % 2 == 0 { 0.0 } else { 0.5 };
        let (st, ct) = tc.sin_cos();
        for m in 0..n_phi {
            let phi = 2.0 * PI * (m as f64 + shift) / n_phi as f64;
            nodes.push(([z[0] + t * st * phi.cos(), z[1] + t * st * phi.sin(), z[2] + t * ct], w));
        }
    }
    nodes
}

/// Spherical-pulse responses: integrals of each kernel row over `|x - z_i| = t_k`.
pub fn measure_spherical_pulse(
    kernel: &KernelMatrix,
    array: &TransducerArray,
    radii: &[f64],
) -> Result<SphericalMeanData> {
    measure_spherical_pulse_with(kernel, array, radii, DEFAULT_OVERSAMPLE)
}

pub fn measure_spherical_pulse_with(
    kernel: &KernelMatrix,
    array: &TransducerArray,
    radii: &[f64],
    oversample: usize,
) -> Result<SphericalMeanData> {
    let grid = kernel.interior();
    if array.dim() != grid.dim() {
        return Err(Error::UnsupportedDimension(format!("{}D transducers with a {}D kernel", array.dim(), grid.dim())));
    }
    check_radii(radii)?;
    let t_max = array.radius() + grid.diameter();
    if let Some(r) = radii.iter().find(|&&r| r > t_max * (1.0 + 1e-12)) {
        return Err(Error::InvalidArgument(format!("radius {r} exceeds R + diameter = {t_max}")));
    }
    let kt = transpose(kernel);
    let n_el = kernel.n_electrodes();
    let dx = grid.min_spacing();
    let center = grid.center();
    let reach = grid.circumradius() + dx;
    let values: Vec<f64> = array
        .positions()
        .par_iter()
        .flat_map_iter(|z| {
            let d = dist(z, &center);
            let kt = &kt;
            radii.iter().flat_map(move |&t| {
                let mut acc = vec![0.0; n_el];
                if (t - d).abs() <= reach {
                    for (p, w) in sphere_rule(grid.dim(), z, t, dx, oversample) {
                        accumulate_interpolated(grid, kt, n_el, &p, w, &mut acc);
                    }
                }
                acc
            })
        })
        .collect();
    SphericalMeanData::new(array.clone(), radii.to_vec(), kernel.electrodes().clone(), values)
}

/// Monochromatic spherical-wave responses `Σ_x l(x, y_j) Φ_λ(x, z_i) · pixel area`.
pub fn measure_monochromatic(
    kernel: &KernelMatrix,
    array: &TransducerArray,
    frequencies: &[f64],
) -> Result<MonochromaticData> {
    let grid = kernel.interior();
    if array.dim() != grid.dim() {
        return Err(Error::UnsupportedDimension(format!("{}D transducers with a {}D kernel", array.dim(), grid.dim())));
    }
    check_frequencies(frequencies)?;
    if let Some((i, _)) = array.positions().iter().enumerate().find(|(_, z)| grid.contains_point(z)) {
        return Err(Error::SingularKernel(format!(
            "transducer {i} lies inside the kernel support; Φ_λ is singular there"
        )));
    }
    let kt = transpose(kernel);
    let n_el = kernel.n_electrodes();
    let n_f = frequencies.len();
    let lambda0 = frequencies[0];
    let d_lambda = if n_f > 1 { frequencies[1] - frequencies[0] } else { 0.0 };
    let area = grid.cell_measure();
    let active: Vec<usize> =
        (0..grid.len()).filter(|&p| kt[p * n_el..(p + 1) * n_el].iter().any(|&v| v != 0.0)).collect();

    let values: Vec<Complex64> = array
        .positions()
        .par_iter()
        .flat_map_iter(|z| {
            let mut acc = vec![Complex64::new(0.0, 0.0); n_f * n_el];
            for &p in &active {
                let x = grid.point(p);
                let r = dist(&x, z);
                let amp = area / (4.0 * PI * r);
                let step = Complex64::cis(d_lambda * r);
                let row = &kt[p * n_el..(p + 1) * n_el];
                let mut phase = Complex64::cis(lambda0 * r);
                for m in 0..n_f {
                    if m % 32 == 0 {
                        phase = Complex64::cis(frequencies[m] * r);
                    }
                    let g = phase * amp;
                    let out = &mut acc[m * n_el..(m + 1) * n_el];
                    for (o, &k) in out.iter_mut().zip(row) {
                        *o += g * k;
                    }
                    phase *= step;
                }
            }
            acc
        })
        .collect();
    MonochromaticData::new(array.clone(), frequencies.to_vec(), kernel.electrodes().clone(), values)
}

/// Plane-wave responses: `F(k) = Σ_x e^{ik·x} l(x, y_j) · pixel area` on the conjugate lattice.
pub fn measure_plane_waves(kernel: &KernelMatrix) -> Result<FourierData> {
    let grid = kernel.interior();
    let kgrid = conjugate_lattice(grid);
    let n_el = kernel.n_electrodes();
    let counts = grid.counts().to_vec();
    let cell = grid.cell_measure();
    let lookup = dft_index_map(grid);
    let phases = origin_phases(grid, &kgrid);
    let rows: Vec<Vec<Complex64>> = (0..n_el)
        .into_par_iter()
        .map(|j| {
            let mut buf: Vec<Complex64> = kernel.row(j).iter().map(|&v| Complex64::new(v, 0.0)).collect();
            fft_nd(&mut buf, &counts, FftDirection::Inverse);
            (0..kgrid.len()).map(|k| buf[lookup[k]] * phases[k] * cell).collect()
        })
        .collect();
    let mut values = vec![Complex64::new(0.0, 0.0); kgrid.len() * n_el];
    for (j, row) in rows.iter().enumerate() {
        for (k, v) in row.iter().enumerate() {
            values[k * n_el + j] = *v;
        }
    }
    FourierData::new(grid.clone(), kernel.electrodes().clone(), values)
}

/// For each lattice index `k`, the flat FFT-buffer index holding frequency `m - ⌊N/2⌋`.
pub(crate) fn dft_index_map(grid: &Grid) -> Vec<usize> {
    let n = grid.counts3();
    (0..grid.len())
        .map(|k| {
            let m = grid.unravel(k);
            let mut idx = 0;
            let mut stride = 1;
            for a in 0..grid.dim() {
                let shifted = (m[a] + n[a] - n[a] / 2) % n[a];
                idx += shifted * stride;
                stride *= n[a];
            }
            idx
        })
        .collect()
}

/// `e^{i k·origin}` for every lattice wave vector.
pub(crate) fn origin_phases(grid: &Grid, kgrid: &Grid) -> Vec<Complex64> {
    let o = grid.origin3();
    (0..kgrid.len())
        .map(|k| {
            let kv = kgrid.point(k);
            Complex64::cis(kv[0] * o[0] + kv[1] * o[1] + kv[2] * o[2])
        })
        .collect()
}

/// Pencil-beam responses: line integrals of each kernel row, sampled every half grid spacing.
pub fn measure_line_integrals(kernel: &KernelMatrix, angles: &[f64], offsets: &[f64]) -> Result<Sinogram> {
    let grid = kernel.interior();
    if grid.dim() != 2 {
        return Err(Error::UnsupportedDimension(format!("line integrals need a 2D kernel, got {}D", grid.dim())));
    }
    check_angles(angles)?;
    check_offsets(offsets)?;
    let radius = grid.circumradius();
    if offsets[offsets.len() - 1] < radius * (1.0 - 1e-9) {
        return Err(Error::InvalidArgument(format!(
            "offsets reach {} but must cover the circumscribed radius {radius}",
            offsets[offsets.len() - 1]
        )));
    }
    let kt = transpose(kernel);
    let n_el = kernel.n_electrodes();
    let step = 0.5 * grid.min_spacing();
    let half = (radius / step).ceil() as isize;
    let c = grid.center();
    let values: Vec<f64> = angles
        .par_iter()
        .flat_map_iter(|&a| {
            let (sa, ca) = a.sin_cos();
            let kt = &kt;
            offsets.iter().flat_map(move |&s| {
                let mut acc = vec![0.0; n_el];
                let foot = [c[0] + s * ca, c[1] + s * sa];
                for k in -half..=half {
                    let tau = k as f64 * step;
                    let p = [foot[0] - tau * sa, foot[1] + tau * ca, 0.0];
                    accumulate_interpolated(grid, kt, n_el, &p, step, &mut acc);
                }
                acc
            })
        })
        .collect();
    Sinogram::new(angles.to_vec(), offsets.to_vec(), [c[0], c[1]], kernel.electrodes().clone(), values)
}

/// Adds i.i.d. zero-mean Gaussian noise of standard deviation `level × RMS(data)`.
///
/// Complex samples get circular noise with `E|n|² = σ²`. Plane-wave samples
/// at `k` and `-k` come from the same pair of real (cosine and sine)
/// measurements, so their noise is drawn as conjugate pairs.
pub fn add_noise(data: &WaveData, level: f64, seed: u64) -> Result<WaveData> {
    if !(level >= 0.0 && level.is_finite()) {
        return Err(Error::InvalidArgument(format!("noise level must be non-negative, got {level}")));
    }
    if level == 0.0 {
        return Ok(data.clone());
    }
    let sigma = level * data.rms();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut normal = move || -> f64 { StandardNormal.sample(&mut rng) };
    let out = match data {
        WaveData::SphericalMeans(d) => {
            let mut d = d.clone();
            d.values.iter_mut().for_each(|v| *v += sigma * normal());
            WaveData::SphericalMeans(d)
        }
        WaveData::LineIntegrals(d) => {
            let mut d = d.clone();
            d.values.iter_mut().for_each(|v| *v += sigma * normal());
            WaveData::LineIntegrals(d)
        }
        WaveData::Monochromatic(d) => {
            let mut d = d.clone();
            let s = sigma / 2f64.sqrt();
            d.values.iter_mut().for_each(|v| {
                let re = normal();
                let im = normal();
                *v += Complex64::new(s * re, s * im);
            });
            WaveData::Monochromatic(d)
        }
        WaveData::PlaneWaves(d) => {
            let mut d = d.clone();
            let grid = &d.spatial;
            let kgrid = d.kgrid.clone();
            let phases = origin_phases(grid, &kgrid);
            let n = kgrid.counts3();
            let n_el = d.electrodes.len();
            let partner = |k: usize| -> usize {
                let m = kgrid.unravel(k);
                let mut p = [0usize; 3];
                for a in 0..kgrid.dim() {
                    let h = n[a] / 2;
                    let fft_idx = (m[a] + n[a] - h) % n[a];
                    let neg = (n[a] - fft_idx) % n[a];
                    p[a] = (neg + h) % n[a];
                }
                kgrid.index(p[0], p[1], p[2])
            };
            let s = sigma / 2f64.sqrt();
            for k in 0..kgrid.len() {
                let q = partner(k);
                if q < k {
                    continue;
                }
                for j in 0..n_el {
                    if q == k {
                        d.values[k * n_el + j] += phases[k] * (sigma * normal());
                    } else {
                        let re = normal();
                        let im = normal();
                        let c = Complex64::new(s * re, s * im);
                        d.values[k * n_el + j] += phases[k] * c;
                        d.values[q * n_el + j] += phases[q] * c.conj();
                    }
                }
            }
            WaveData::PlaneWaves(d)
        }
    };
    Ok(out)
}
