//! Property checks shared by the `invariants` test target and the acceptance
//! suite. Each returns `Err` with a diagnostic instead of panicking.

#![allow(dead_code)]

use std::sync::OnceLock;

use num_complex::Complex64;
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use synfocus::config::{parse_config, Mode};
use synfocus::focusing::{invert_fourier, invert_monochromatic_3d, invert_spherical_means_3d, invert_xray_2d};
use synfocus::grid::relative_l2;
use synfocus::io::{read_field, write_field};
use synfocus::oracles::{spherical_mean_quadrature, AnalyticPhantom};
use synfocus::phantom::default_disks;
use synfocus::pipeline::{run, stages};
use synfocus::wavegen::{default_offsets, uniform_angles};
use synfocus::{
    build_phantom_disks, gauge_fix, kernel_adjoint_with, make_transducer_array, measure_line_integrals,
    measure_monochromatic, measure_plane_waves, measure_spherical_pulse, solve_conduction, solve_conduction_with,
    BoundaryElectrodes, FourierData, Grid, KernelMatrix, MonochromaticData, Phantom, ScalarField, Sinogram,
    SolverOptions, SphericalMeanData, WaveData,
};

/// `Ok` carries a one-line summary of what was measured.
pub type Check = fn() -> Result<String, String>;

pub const ALL: &[(&str, Check)] = &[
    ("core: rasterization is idempotent", rasterization_idempotent),
    ("core: transducer weights reproduce the aperture measure", aperture_weights),
    ("core: field files round-trip bit-exactly", field_io_round_trip),
    ("forward: boundary flux is conserved", flux_conservation),
    ("forward: gauge shift changes no output", gauge_invariance),
    ("forward: kernel linearizes the trace to O(eps^2)", kernel_linearity),
    ("forward: trace converges at least first order", trace_grid_convergence),
    ("wavegen: every family is linear in the kernel", measurement_linearity),
    ("wavegen: zero kernel gives zero data", measurement_zero),
    ("wavegen: spheres short of the support give zero", short_spheres_vanish),
    ("focusing: every inversion is linear", inversion_linearity),
    ("focusing: zero data gives zero output", inversion_zero),
    ("focusing: radial phantom stays radial (3D)", radial_symmetry_3d),
    ("focusing: error falls as radii double", radii_convergence),
    ("oracles: quadrature self-converges", oracle_self_convergence),
    ("oracles: values are deterministic", oracle_determinism),
    ("cli: identical config and seed give identical files", pipeline_determinism),
    ("cli: metrics carry every stage time and the config echo", metrics_schema),
];

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn ok<T, E: std::fmt::Display>(r: Result<T, E>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

fn square(n: usize) -> Grid {
    Grid::cell_centered(2, n, -0.5, 0.5).unwrap()
}

fn random_kernel(rng: &mut ChaCha8Rng, grid: &Grid, n_el: usize) -> KernelMatrix {
    let values = (0..n_el * grid.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    KernelMatrix::new(BoundaryElectrodes::channels(n_el), grid.clone(), values).unwrap()
}

fn flatten(data: &WaveData) -> Vec<f64> {
    match data {
        WaveData::SphericalMeans(d) => d.values().to_vec(),
        WaveData::LineIntegrals(d) => d.values().to_vec(),
        WaveData::Monochromatic(d) => d.values().iter().flat_map(|c| [c.re, c.im]).collect(),
        WaveData::PlaneWaves(d) => d.values().iter().flat_map(|c| [c.re, c.im]).collect(),
    }
}

// core

pub fn rasterization_idempotent() -> Result<String, String> {
    let a = ok(build_phantom_disks(square(96), &default_disks()))?;
    let b = ok(build_phantom_disks(square(96), &default_disks()))?;
    let same = a.field().values().iter().zip(b.field().values()).all(|(x, y)| x.to_bits() == y.to_bits());
    ensure(same, || "two rasterizations differ".into())?;
    Ok(format!("{} cells bit-identical", a.field().values().len()))
}

pub fn aperture_weights() -> Result<String, String> {
    for dim in [2, 3] {
        for n in [4, 100, 10000] {
            let a = ok(make_transducer_array(dim, 1.3, n, 1.0))?;
            let sum: f64 = a.weights().iter().sum();
            let rel = (sum - a.aperture_measure()).abs() / a.aperture_measure();
            ensure(rel <= 1e-6, || format!("dim {dim}, n {n}: weight sum off by {rel:e}"))?;
        }
    }
    Ok("weight sums within 1e-6 for n = 4, 100, 10000 in 2D and 3D".into())
}

pub fn field_io_round_trip() -> Result<String, String> {
    let mut runner = TestRunner::new(Config { cases: 48, failure_persistence: None, ..Config::default() });
    let strategy = (2usize..4, prop::collection::vec(2usize..7, 3), any::<u64>());
    runner
        .run(&strategy, |(dim, counts, seed)| {
            let grid = Grid::new(&vec![-0.3; dim], &vec![0.17; dim], &counts[..dim]).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let values = (0..grid.len()).map(|_| rng.gen::<f64>() * 10f64.powi(rng.gen_range(-300..300))).collect();
            let field = ScalarField::new(grid, values).unwrap();
            let mut buf = Vec::new();
            write_field(&mut buf, &field).unwrap();
            let back = read_field(&buf[..]).unwrap();
            prop_assert!(back.values().iter().zip(field.values()).all(|(a, b)| a.to_bits() == b.to_bits()));
            prop_assert_eq!(back.grid(), field.grid());
            Ok(())
        })
        .map_err(|e| e.to_string())?;
    Ok("48 random fields round-tripped bit-exactly".into())
}

// forward_eit

fn disk_problem(n: usize) -> (Phantom, BoundaryElectrodes) {
    let g = square(n);
    let phantom = build_phantom_disks(g.clone(), &default_disks()).unwrap();
    let el = BoundaryElectrodes::left_right(&g, 1.0).unwrap();
    (phantom, el)
}

pub fn flux_conservation() -> Result<String, String> {
    let (phantom, el) = disk_problem(64);
    let sol = ok(solve_conduction(&phantom, &el, 1e-10))?;
    ensure(sol.flux_imbalance() <= 1e-10, || format!("net boundary flux {:e} of total", sol.flux_imbalance()))?;
    Ok(format!("flux imbalance {:.2e}", sol.flux_imbalance()))
}

pub fn gauge_invariance() -> Result<String, String> {
    let (phantom, el) = disk_problem(32);
    let sol = ok(solve_conduction(&phantom, &el, 1e-10))?;
    for shift in [1.0, -37.5, 1e3] {
        let mut u: Vec<f64> = sol.potential().values().iter().map(|v| v + shift).collect();
        let mut h: Vec<f64> = sol.boundary_trace().iter().map(|v| v + shift).collect();
        gauge_fix(&mut u, &mut h);
        let du = relative_l2(&u, sol.potential().values(), None);
        let dh = relative_l2(&h, sol.boundary_trace(), None);
        ensure(du <= 1e-12 && dh <= 1e-12, || format!("shift {shift}: potential {du:e}, trace {dh:e}"))?;
    }
    Ok("shifts 1, -37.5, 1e3 removed to 1e-12".into())
}

/// Piecewise-constant upsampling of an interior field onto a finer 2D grid.
fn upsample(f: &ScalarField, fine: &Grid) -> Vec<f64> {
    let coarse = f.grid();
    let r = fine.counts()[0] / coarse.counts()[0];
    (0..fine.len())
        .map(|idx| {
            let [i, j, _] = fine.unravel(idx);
            f.values()[coarse.index(i / r, j / r, 0)]
        })
        .collect()
}

pub fn kernel_linearity() -> Result<String, String> {
    let (phantom, el) = disk_problem(32);
    let interior = square(16);
    let opts = SolverOptions::with_tol(1e-13);
    let kernel = ok(kernel_adjoint_with(&phantom, &el, &interior, &opts))?;
    let f = ScalarField::from_fn(interior.clone(), |x| (3.0 * x[0]).sin() + x[1] * x[1] - 0.2);
    let predicted = ok(kernel.apply(f.values()))?;
    let base = ok(solve_conduction_with(&phantom, &el, &opts))?;
    let up = upsample(&f, phantom.grid());
    let mut errors = Vec::new();
    for eps in [0.02, 0.01, 0.005] {
        let log_sigma: Vec<f64> = phantom.field().values().iter().zip(&up).map(|(a, b)| a + eps * b).collect();
        let pert = Phantom::from_field(ScalarField::new(phantom.grid().clone(), log_sigma).unwrap());
        let sol = ok(solve_conduction_with(&pert, &el, &opts))?;
        let dh: Vec<f64> = sol.boundary_trace().iter().zip(base.boundary_trace()).map(|(p, b)| p - b).collect();
        let scaled: Vec<f64> = predicted.iter().map(|v| v * eps).collect();
        errors.push(relative_l2(&dh, &scaled, None) * eps);
    }
    for w in errors.windows(2) {
        let ratio = w[0] / w[1];
        // second-order remainder: halving eps quarters the absolute error
        ensure((3.4..=4.6).contains(&ratio), || {
            format!("halving eps reduced the linearization error by {ratio:.3} (errors {errors:?})")
        })?;
    }
    Ok(format!("errors {:.2e}, {:.2e}, {:.2e} at eps 0.02, 0.01, 0.005", errors[0], errors[1], errors[2]))
}

fn smooth_trace(n: usize, samples: usize) -> Result<Vec<f64>, String> {
    let g = square(n);
    let f = ScalarField::from_fn(g.clone(), |x| {
        0.05 * (-((x[0] + 0.15).powi(2) + (x[1] - 0.1).powi(2)) / (2.0 * 0.15f64.powi(2))).exp()
            - 0.05 * (-((x[0] - 0.2).powi(2) + (x[1] + 0.15).powi(2)) / (2.0 * 0.1f64.powi(2))).exp()
    });
    let el = ok(BoundaryElectrodes::left_right(&g, 1.0))?;
    let sol = ok(solve_conduction(&Phantom::from_field(f), &el, 1e-12))?;
    let h = sol.boundary_trace();
    // resample at the face midpoints of a `samples`-cell grid, side by side
    let mut out: Vec<f64> = (0..4 * samples)
        .map(|k| {
            let (side, kk) = (k / samples, k % samples);
            let u = (kk as f64 + 0.5) * n as f64 / samples as f64 - 0.5;
            let i = u.floor() as usize;
            let t = u - i as f64;
            if t == 0.0 {
                h[side * n + i]
            } else {
                h[side * n + i] * (1.0 - t) + h[side * n + i + 1] * t
            }
        })
        .collect();
    let mean = out.iter().sum::<f64>() / out.len() as f64;
    out.iter_mut().for_each(|v| *v -= mean);
    Ok(out)
}

pub fn trace_grid_convergence() -> Result<String, String> {
    let reference = smooth_trace(512, 64)?;
    let errors = [64, 128, 256]
        .iter()
        .map(|&n| Ok(relative_l2(&smooth_trace(n, 64)?, &reference, None)))
        .collect::<Result<Vec<f64>, String>>()?;
    for w in errors.windows(2) {
        let order = (w[0] / w[1]).log2();
        ensure(order >= 1.0, || format!("observed order {order:.2} (errors {errors:?})"))?;
    }
    Ok(format!("errors vs 512: {:.2e}, {:.2e}, {:.2e} at 64, 128, 256", errors[0], errors[1], errors[2]))
}

// wavegen

fn all_families(kernel: &KernelMatrix) -> Result<Vec<WaveData>, String> {
    let grid = kernel.interior();
    let array = ok(make_transducer_array(2, 1.0, 12, 1.0))?;
    let radii: Vec<f64> = (1..=24).map(|k| 0.1 * k as f64).collect();
    let freqs: Vec<f64> = (1..=10).map(|m| 2.0 * m as f64).collect();
    Ok(vec![
        ok(measure_spherical_pulse(kernel, &array, &radii))?.into(),
        ok(measure_monochromatic(kernel, &array, &freqs))?.into(),
        ok(measure_plane_waves(kernel))?.into(),
        ok(measure_line_integrals(kernel, &uniform_angles(9), &default_offsets(grid, 15)))?.into(),
    ])
}

pub fn measurement_linearity() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let grid = square(10);
    let k1 = random_kernel(&mut rng, &grid, 3);
    let k2 = random_kernel(&mut rng, &grid, 3);
    let (a, b) = (0.7, -2.3);
    let combo = KernelMatrix::new(
        k1.electrodes().clone(),
        grid.clone(),
        k1.values().iter().zip(k2.values()).map(|(x, y)| a * x + b * y).collect(),
    )
    .unwrap();
    let (d1, d2, dc) = (all_families(&k1)?, all_families(&k2)?, all_families(&combo)?);
    for ((x, y), z) in d1.iter().zip(&d2).zip(&dc) {
        let expected: Vec<f64> = flatten(x).iter().zip(flatten(y)).map(|(p, q)| a * p + b * q).collect();
        let err = relative_l2(&flatten(z), &expected, None);
        ensure(err <= 1e-12, || format!("{} family: superposition error {err:e}", z.family()))?;
    }
    Ok("superposition within 1e-12 for all four families".into())
}

pub fn measurement_zero() -> Result<String, String> {
    let zero = KernelMatrix::zeros(BoundaryElectrodes::channels(2), square(10));
    for d in all_families(&zero)? {
        ensure(flatten(&d).iter().all(|v| *v == 0.0), || format!("{} family is not zero", d.family()))?;
    }
    Ok("all four families exactly zero".into())
}

pub fn short_spheres_vanish() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let grid = square(16);
    let kernel = random_kernel(&mut rng, &grid, 2);
    let array = ok(make_transducer_array(2, 2.0, 16, 1.0))?;
    // the support reaches to the corners at distance sqrt(2)/2 from the center
    let radii: Vec<f64> = (1..=20).map(|k| 0.06 * k as f64).collect();
    let data = ok(measure_spherical_pulse(&kernel, &array, &radii))?;
    let near = 2.0 - std::f64::consts::FRAC_1_SQRT_2;
    for i in 0..array.len() {
        for (k, &t) in radii.iter().enumerate() {
            if t < near - grid.spacing()[0] {
                for j in 0..2 {
                    let v = data.value(i, k, j);
                    ensure(v == 0.0, || format!("transducer {i}, t = {t}: value {v:e}"))?;
                }
            }
        }
    }
    Ok("every sphere short of the support measured exactly zero".into())
}

// focusing

enum Route {
    Spherical,
    Monochromatic,
    Fourier,
    Xray,
}

fn random_data(route: &Route, rng: &mut ChaCha8Rng, scale: f64) -> (WaveData, Grid) {
    let mut real = |n: usize| -> Vec<f64> { (0..n).map(|_| scale * rng.gen_range(-1.0..1.0)).collect() };
    match route {
        Route::Spherical => {
            let array = make_transducer_array(3, 1.0, 40, 1.0).unwrap();
            let radii: Vec<f64> = (1..=16).map(|k| 0.125 * k as f64).collect();
            let n = array.len() * radii.len();
            let d = SphericalMeanData::new(array, radii, BoundaryElectrodes::channels(1), real(n)).unwrap();
            (d.into(), Grid::cell_centered(3, 6, -0.4, 0.4).unwrap())
        }
        Route::Monochromatic => {
            let array = make_transducer_array(3, 1.0, 40, 1.0).unwrap();
            let freqs: Vec<f64> = (1..=12).map(|m| 1.5 * m as f64).collect();
            let n = array.len() * freqs.len();
            let v = real(2 * n);
            let values = v.chunks(2).map(|c| Complex64::new(c[0], c[1])).collect();
            let d = MonochromaticData::new(array, freqs, BoundaryElectrodes::channels(1), values).unwrap();
            (d.into(), Grid::cell_centered(3, 6, -0.4, 0.4).unwrap())
        }
        Route::Fourier => {
            let grid = square(8);
            let v = real(2 * grid.len() * 2);
            let values = v.chunks(2).map(|c| Complex64::new(c[0], c[1])).collect();
            let d = FourierData::new(grid.clone(), BoundaryElectrodes::channels(2), values).unwrap();
            (d.into(), grid)
        }
        Route::Xray => {
            let grid = square(8);
            let angles = uniform_angles(10);
            let offsets = default_offsets(&grid, 17);
            let n = angles.len() * offsets.len() * 2;
            let d = Sinogram::new(angles, offsets, [0.0, 0.0], BoundaryElectrodes::channels(2), real(n)).unwrap();
            (d.into(), grid)
        }
    }
}

fn invert(data: &WaveData, out: &Grid) -> Result<Vec<f64>, String> {
    let rec = match data {
        WaveData::SphericalMeans(d) => invert_spherical_means_3d(d, out),
        WaveData::Monochromatic(d) => invert_monochromatic_3d(d, out),
        WaveData::PlaneWaves(d) => invert_fourier(d, out),
        WaveData::LineIntegrals(d) => invert_xray_2d(d, out),
    };
    Ok(ok(rec)?.fields.iter().flat_map(|f| f.values().to_vec()).collect())
}

fn combine(a: f64, x: &WaveData, b: f64, y: &WaveData) -> WaveData {
    let lin = |p: &[f64], q: &[f64]| -> Vec<f64> { p.iter().zip(q).map(|(u, v)| a * u + b * v).collect() };
    let clin =
        |p: &[Complex64], q: &[Complex64]| -> Vec<Complex64> { p.iter().zip(q).map(|(u, v)| a * u + b * v).collect() };
    match (x, y) {
        (WaveData::SphericalMeans(p), WaveData::SphericalMeans(q)) => SphericalMeanData::new(
            p.array().clone(),
            p.radii().to_vec(),
            p.electrodes().clone(),
            lin(p.values(), q.values()),
        )
        .unwrap()
        .into(),
        (WaveData::Monochromatic(p), WaveData::Monochromatic(q)) => MonochromaticData::new(
            p.array().clone(),
            p.frequencies().to_vec(),
            p.electrodes().clone(),
            clin(p.values(), q.values()),
        )
        .unwrap()
        .into(),
        (WaveData::PlaneWaves(p), WaveData::PlaneWaves(q)) => {
            FourierData::new(p.spatial().clone(), p.electrodes().clone(), clin(p.values(), q.values())).unwrap().into()
        }
        (WaveData::LineIntegrals(p), WaveData::LineIntegrals(q)) => Sinogram::new(
            p.angles().to_vec(),
            p.offsets().to_vec(),
            p.center(),
            p.electrodes().clone(),
            lin(p.values(), q.values()),
        )
        .unwrap()
        .into(),
        _ => unreachable!(),
    }
}

const ROUTES: [Route; 4] = [Route::Spherical, Route::Monochromatic, Route::Fourier, Route::Xray];

pub fn inversion_linearity() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for route in &ROUTES {
        let (x, out) = random_data(route, &mut rng, 1.0);
        let (y, _) = random_data(route, &mut rng, 1.0);
        let (a, b) = (1.7, -0.4);
        let fx = invert(&x, &out)?;
        let fy = invert(&y, &out)?;
        let fc = invert(&combine(a, &x, b, &y), &out)?;
        let expected: Vec<f64> = fx.iter().zip(&fy).map(|(p, q)| a * p + b * q).collect();
        let err = relative_l2(&fc, &expected, None);
        ensure(err <= 1e-10, || format!("{} route: superposition error {err:e}", x.family()))?;
    }
    Ok("superposition within 1e-10 for all four routes".into())
}

pub fn inversion_zero() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for route in &ROUTES {
        let (zero, out) = random_data(route, &mut rng, 0.0);
        let f = invert(&zero, &out)?;
        ensure(f.iter().all(|v| *v == 0.0), || format!("{} route gives non-zero output", zero.family()))?;
    }
    Ok("all four routes exactly zero".into())
}

/// Oracle pulse data of the centered Gaussian on 642 transducers, 400 radii on (0, 2].
fn gaussian_pulse_data() -> &'static SphericalMeanData {
    static DATA: OnceLock<SphericalMeanData> = OnceLock::new();
    DATA.get_or_init(|| {
        let p = AnalyticPhantom::gaussian(3, [0.0; 3], 0.2, 1.0).unwrap();
        let array = make_transducer_array(3, 1.0, 642, 1.0).unwrap();
        let radii: Vec<f64> = (1..=400).map(|k| k as f64 / 200.0).collect();
        let mut values = Vec::with_capacity(array.len() * radii.len());
        for z in array.positions() {
            for &t in &radii {
                values.push(spherical_mean_quadrature(&p, z, t, 1024).unwrap());
            }
        }
        SphericalMeanData::new(array, radii, BoundaryElectrodes::channels(1), values).unwrap()
    })
}

/// Every `stride`-th radius of the cached data.
fn thinned(data: &SphericalMeanData, stride: usize) -> SphericalMeanData {
    let picks: Vec<usize> = (0..data.radii().len()).filter(|k| (k + 1) % stride == 0).collect();
    let radii = picks.iter().map(|&k| data.radii()[k]).collect();
    let mut values = Vec::new();
    for i in 0..data.array().len() {
        values.extend(picks.iter().map(|&k| data.value(i, k, 0)));
    }
    SphericalMeanData::new(data.array().clone(), radii, data.electrodes().clone(), values).unwrap()
}

pub fn radial_symmetry_3d() -> Result<String, String> {
    let out = Grid::cell_centered(3, 24, -0.5, 0.5).unwrap();
    let rec = ok(invert_spherical_means_3d(gaussian_pulse_data(), &out))?;
    let f = rec.fields[0].values();
    let n = 24;
    let peak = f.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut worst = 0.0f64;
    for idx in 0..out.len() {
        let [i, j, k] = out.unravel(idx);
        // axis permutations and reflections of the cube map grid points to grid points
        for [a, b, c] in [[j, i, k], [k, j, i], [i, k, j], [n - 1 - i, j, k], [i, n - 1 - j, n - 1 - k]] {
            worst = worst.max((f[idx] - f[out.index(a, b, c)]).abs());
        }
    }
    let asym = worst / peak;
    ensure(asym <= 5e-3, || format!("radial asymmetry {asym:e} of the peak"))?;
    Ok(format!("max asymmetry {asym:.2e} of the peak"))
}

pub fn radii_convergence() -> Result<String, String> {
    let p = AnalyticPhantom::gaussian(3, [0.0; 3], 0.2, 1.0).unwrap();
    let out = Grid::cell_centered(3, 48, -0.5, 0.5).unwrap();
    let truth: Vec<f64> = (0..out.len()).map(|i| p.eval(&out.point(i))).collect();
    let data = gaussian_pulse_data();
    let errors = [4, 2, 1]
        .iter()
        .map(|&stride| {
            let rec = ok(invert_spherical_means_3d(&thinned(data, stride), &out))?;
            Ok(relative_l2(rec.fields[0].values(), &truth, None))
        })
        .collect::<Result<Vec<f64>, String>>()?;
    ensure(errors[0] > errors[1] && errors[1] > errors[2], || format!("errors at 100, 200, 400 radii: {errors:?}"))?;
    Ok(format!("errors {:.2e}, {:.2e}, {:.2e} at 100, 200, 400 radii", errors[0], errors[1], errors[2]))
}

// oracles

pub fn oracle_self_convergence() -> Result<String, String> {
    let cases = [
        (AnalyticPhantom::gaussian(3, [0.0; 3], 0.2, 1.0).unwrap(), [2.0, 0.0, 0.0], 2.0),
        (AnalyticPhantom::gaussian(3, [0.1, -0.2, 0.05], 0.15, 2.0).unwrap(), [0.0, 1.0, 0.0], 1.1),
        (AnalyticPhantom::ball(3, [0.2, 0.0, 0.0], 0.3, 1.0).unwrap(), [-0.6, 0.8, 0.0], 1.2),
        (AnalyticPhantom::gaussian(2, [0.0; 3], 0.2, 1.0).unwrap(), [2.0, 0.0, 0.0], 1.9),
        (AnalyticPhantom::ball(2, [0.1, 0.1, 0.0], 0.3, 1.0).unwrap(), [1.0, 0.0, 0.0], 0.95),
    ];
    let mut worst = 0.0f64;
    for (p, z, t) in cases {
        let a = ok(spherical_mean_quadrature(&p, &z, t, 2048))?;
        let b = ok(spherical_mean_quadrature(&p, &z, t, 4096))?;
        let rel = (a - b).abs() / b.abs();
        worst = worst.max(rel);
        ensure(rel <= 1e-6, || format!("{:?} at t = {t}: doubling changed the value by {rel:e}", p.kind))?;
    }
    Ok(format!("worst change on doubling nodes {worst:.2e}"))
}

pub fn oracle_determinism() -> Result<String, String> {
    let p = AnalyticPhantom::gaussian(3, [0.05, 0.0, -0.1], 0.2, 1.0).unwrap();
    let first: Vec<u64> = (1..20)
        .map(|k| spherical_mean_quadrature(&p, &[0.0, 0.0, 1.0], 0.1 * k as f64, 512).unwrap().to_bits())
        .collect();
    let again: Vec<u64> = (1..20)
        .map(|k| spherical_mean_quadrature(&p, &[0.0, 0.0, 1.0], 0.1 * k as f64, 512).unwrap().to_bits())
        .collect();
    ensure(first == again, || "repeated oracle evaluations differ".into())?;
    Ok("19 repeated evaluations bit-identical".into())
}

// cli

fn small_config(extra: &str) -> synfocus::config::ExperimentConfig {
    parse_config(&format!("grid = 16\ninterior = 8\nkernel = adjoint\nimages = 2\n{extra}")).unwrap()
}

fn csv_files(dir: &std::path::Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

pub fn pipeline_determinism() -> Result<String, String> {
    for family in ["plane", "xray"] {
        let cfg = small_config(&format!("family = {family}\nnoise = 0.01\nseed = 42\nangles = 12"));
        let a = tempfile::tempdir().map_err(|e| e.to_string())?;
        let b = tempfile::tempdir().map_err(|e| e.to_string())?;
        ok(run(&cfg, a.path()))?;
        ok(run(&cfg, b.path()))?;
        let (fa, fb) = (csv_files(a.path()), csv_files(b.path()));
        ensure(!fa.is_empty(), || "no CSV output".into())?;
        ensure(fa == fb, || format!("{family}: CSV outputs differ between identical runs"))?;
    }
    Ok("plane and xray runs with noise byte-identical".into())
}

pub fn metrics_schema() -> Result<String, String> {
    let cfg = small_config("");
    assert_eq!(cfg.mode, Mode::Endtoend);
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    ok(run(&cfg, dir.path()))?;
    let text = std::fs::read_to_string(dir.path().join("metrics.txt")).map_err(|e| e.to_string())?;
    let keys: Vec<&str> = text
        .lines()
        .map(|l| l.split_once(" = ").map(|(k, _)| k).ok_or(l))
        .collect::<Result<_, _>>()
        .map_err(|l| format!("metrics line `{l}` is not `name = value`"))?;
    let mut required: Vec<String> = stages(Mode::Endtoend).iter().map(|s| format!("time_{s}")).collect();
    required.push("time_total".into());
    required.push("kernel_error".into());
    required.extend(cfg.echo().into_iter().map(|(k, _)| format!("config.{k}")));
    for key in &required {
        ensure(keys.contains(&key.as_str()), || format!("metrics.txt lacks `{key}`"))?;
    }
    Ok(format!("{} required keys present", required.len()))
}
