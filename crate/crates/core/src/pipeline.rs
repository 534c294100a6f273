//! Stage runner behind the command-line modes.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::config::{ExperimentConfig, Family, KernelMethod, Mode};
use crate::error::Result;
use crate::focusing::{focus_kernel, invert_spherical_means_3d, invert_xray_2d, FocusMethod};
use crate::forward::{
    kernel_adjoint_with, kernel_bruteforce_with, solve_conduction_with, KernelOptions, SolverOptions,
};
use crate::grid::{relative_l2, Grid, ScalarField};
use crate::io::{write_field, write_kernel, write_pgm, write_wave_data};
use crate::kernel::{BoundaryElectrodes, KernelMatrix};
use crate::oracles::{disk_sinogram, fixture_table, spherical_mean_quadrature, write_fixture, AnalyticPhantom};
use crate::phantom::{build_phantom_disks, Phantom};
use crate::transducer::make_transducer_array;
use crate::wavegen::{
    add_noise, auto_offset_count, default_frequencies, default_offsets, default_radii, measure_line_integrals,
    measure_monochromatic, measure_plane_waves, measure_spherical_pulse_with, uniform_angles, Sinogram,
    SphericalMeanData, WaveData,
};

/// Data sets larger than this many samples are not written out as CSV.
const MAX_DATA_CSV_SAMPLES: usize = 5_000_000;

/// Ordered `name = value` report.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Metrics {
    entries: Vec<(String, String)>,
}

impl Metrics {
    pub fn push(&mut self, name: impl Into<String>, value: impl ToString) {
        self.entries.push((name.into(), value.to_string()));
    }

    pub fn get(&self, name: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == name).map(|(_, v)| v.as_str())
    }

    /// Numeric value of `name`, if present and numeric.
    pub fn number(&self, name: &str) -> Option<f64> {
        self.get(name).and_then(|v| v.parse().ok())
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        for (k, v) in &self.entries {
            writeln!(w, "{k} = {v}")?;
        }
        Ok(())
    }
}

/// The stages a mode runs, in order.
pub fn stages(mode: Mode) -> &'static [&'static str] {
    match mode {
        Mode::Phantom => &["phantom"],
        Mode::Forward => &["phantom", "forward"],
        Mode::Kernel => &["phantom", "kernel"],
        Mode::Measure => &["phantom", "kernel", "measure"],
        Mode::Focus => &["phantom", "kernel", "measure", "focus"],
        Mode::Endtoend => &["phantom", "forward", "kernel", "measure", "focus"],
        Mode::Validate => &["validate"],
    }
}

struct Run<'a> {
    cfg: &'a ExperimentConfig,
    out: PathBuf,
    metrics: Metrics,
    phantom: Option<Phantom>,
    electrodes: Option<BoundaryElectrodes>,
    kernel: Option<KernelMatrix>,
    data: Option<WaveData>,
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

impl Run<'_> {
    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn save_field(&self, stem: &str, field: &ScalarField) -> Result<()> {
        write_field(create(&self.path(&format!("{stem}.csv")))?, field)?;
        write_pgm(create(&self.path(&format!("{stem}.pgm")))?, field)
    }

    fn interior(&self) -> Result<Grid> {
        Grid::cell_centered(2, self.cfg.interior, -0.5, 0.5)
    }

    fn electrodes(&self) -> &BoundaryElectrodes {
        self.electrodes.as_ref().expect("phantom stage runs first")
    }

    fn kernel(&self) -> &KernelMatrix {
        self.kernel.as_ref().expect("kernel stage runs first")
    }

    /// Evenly spread electrode indices to render.
    fn image_rows(&self, n_el: usize) -> Vec<usize> {
        let n = self.cfg.images.min(n_el);
        (0..n).map(|k| k * n_el / n).collect()
    }

    fn save_kernel(&self, stem: &str, kernel: &KernelMatrix) -> Result<()> {
        write_kernel(create(&self.path(&format!("{stem}.csv")))?, kernel)?;
        for j in self.image_rows(kernel.n_electrodes()) {
            write_pgm(create(&self.path(&format!("{stem}_row{j}.pgm")))?, &kernel.row_field(j))?;
        }
        Ok(())
    }

    fn stage(&mut self, name: &str) -> Result<()> {
        match name {
            "phantom" => self.phantom_stage(),
            "forward" => self.forward_stage(),
            "kernel" => self.kernel_stage(),
            "measure" => self.measure_stage(),
            "focus" => self.focus_stage(),
            "validate" => self.validate_stage(),
            _ => unreachable!("unknown stage {name}"),
        }
    }

    fn phantom_stage(&mut self) -> Result<()> {
        let grid = Grid::cell_centered(2, self.cfg.grid, -0.5, 0.5)?;
        let phantom = build_phantom_disks(grid.clone(), &self.cfg.disks)?;
        self.save_field("phantom", phantom.field())?;
        self.metrics.push("phantom_disks", self.cfg.disks.len());
        self.electrodes = Some(BoundaryElectrodes::left_right(&grid, 1.0)?);
        self.phantom = Some(phantom);
        Ok(())
    }

    fn forward_stage(&mut self) -> Result<()> {
        let phantom = self.phantom.as_ref().expect("phantom stage runs first");
        let sol = solve_conduction_with(phantom, self.electrodes(), &SolverOptions::with_tol(self.cfg.tol))?;
        self.save_field("potential", sol.potential())?;
        let mut w = create(&self.path("trace.csv"))?;
        writeln!(w, "x,y,current,trace")?;
        let el = self.electrodes();
        for ((p, c), h) in el.points().iter().zip(el.current()).zip(sol.boundary_trace()) {
            writeln!(w, "{:e},{:e},{c:e},{h:e}", p[0], p[1])?;
        }
        w.flush()?;
        self.metrics.push("solver_iterations", sol.iterations());
        self.metrics.push("solver_residual", format!("{:e}", sol.residual()));
        self.metrics.push("flux_imbalance", format!("{:e}", sol.flux_imbalance()));
        Ok(())
    }

    fn kernel_stage(&mut self) -> Result<()> {
        let phantom = self.phantom.as_ref().expect("phantom stage runs first");
        let interior = self.interior()?;
        let solver = SolverOptions::with_tol(self.cfg.tol);
        let kernel = match self.cfg.kernel {
            KernelMethod::Bruteforce => kernel_bruteforce_with(
                phantom,
                self.electrodes(),
                &interior,
                &KernelOptions { eps: self.cfg.eps, solver },
            )?,
            KernelMethod::Adjoint => kernel_adjoint_with(phantom, self.electrodes(), &interior, &solver)?,
        };
        self.save_kernel("kernel", &kernel)?;
        self.metrics.push("kernel_electrodes", kernel.n_electrodes());
        self.metrics.push("kernel_pixels", kernel.n_pixels());
        self.metrics.push("kernel_frobenius", format!("{:e}", kernel.frobenius()));
        self.kernel = Some(kernel);
        Ok(())
    }

    fn measure_stage(&mut self) -> Result<()> {
        let cfg = self.cfg;
        let kernel = self.kernel();
        let grid = kernel.interior().clone();
        let clean: WaveData = match cfg.family {
            Family::Plane => measure_plane_waves(kernel)?.into(),
            Family::Xray => {
                let n_off = if cfg.offsets == 0 { auto_offset_count(&grid) } else { cfg.offsets };
                measure_line_integrals(kernel, &uniform_angles(cfg.angles), &default_offsets(&grid, n_off))?.into()
            }
            Family::Spherical => {
                let array = make_transducer_array(2, cfg.transducer_radius, cfg.transducers, 1.0)?;
                let radii = default_radii(&array, &grid, cfg.radii);
                let data = measure_spherical_pulse_with(kernel, &array, &radii, cfg.oversample)?;
                let consistency = quadrature_consistency(kernel, &data, cfg.oversample)?;
                self.metrics.push("quadrature_consistency", format!("{consistency:e}"));
                data.into()
            }
            Family::Monochromatic => {
                let array = make_transducer_array(2, cfg.transducer_radius, cfg.transducers, 1.0)?;
                let n = (cfg.frequencies > 0).then_some(cfg.frequencies);
                let freqs = default_frequencies(&array, &grid, n);
                measure_monochromatic(kernel, &array, &freqs)?.into()
            }
        };
        let data = add_noise(&clean, cfg.noise, cfg.seed)?;
        self.metrics.push("data_family", data.family());
        self.metrics.push("data_samples", data.len());
        self.metrics.push("data_rms", format!("{:e}", clean.rms()));
        if data.len() <= MAX_DATA_CSV_SAMPLES {
            write_wave_data(create(&self.path(&format!("data_{}.csv", cfg.family.name())))?, &data)?;
        } else {
            log::info!("{} samples: data CSV not written", data.len());
            self.metrics.push("data_csv", "skipped");
        }
        self.data = Some(data);
        Ok(())
    }

    fn focus_stage(&mut self) -> Result<()> {
        let data = self.data.as_ref().expect("measure stage runs first");
        let method = FocusMethod::for_data(data);
        let focused = focus_kernel(data, method, self.kernel().interior())?;
        self.save_kernel("focused", &focused)?;
        self.metrics.push("focus_method", method.name());
        self.metrics.push("kernel_error", format!("{:e}", focused.relative_error(self.kernel())));
        Ok(())
    }

    fn validate_stage(&mut self) -> Result<()> {
        let cfg = self.cfg;
        // Oracle fixture and its self-convergence.
        let g = AnalyticPhantom::gaussian(3, [0.0; 3], 0.2, 1.0)?;
        let z = [[2.0, 0.0, 0.0]];
        let radii: Vec<f64> = (0..9).map(|k| 1.8 + 0.05 * k as f64).collect();
        let rows = fixture_table(&g, &z, &radii, 4608)?;
        let fine = fixture_table(&g, &z, &radii, 4 * 4608)?;
        let drift = rows
            .iter()
            .zip(&fine)
            .map(|(a, b)| (a.value - b.value).abs() / b.value.abs().max(f64::MIN_POSITIVE))
            .fold(0.0, f64::max);
        write_fixture(create(&self.path("oracle_fixture.csv"))?, &g, &rows)?;
        self.metrics.push("oracle_self_convergence", format!("{drift:e}"));

        // Filtered backprojection of an analytic disk sinogram.
        let grid = Grid::cell_centered(2, cfg.grid, -0.5, 0.5)?;
        let disk = AnalyticPhantom::ball(2, [0.0; 3], 0.3, 1.0)?;
        let n_offsets = if cfg.offsets == 0 { 4 * cfg.grid + 1 } else { cfg.offsets };
        let (sino, mask) = analytic_disk_sinogram(&disk, &grid, cfg.angles, n_offsets)?;
        let rec = invert_xray_2d(&sino, &grid)?;
        let truth: Vec<f64> = (0..grid.len()).map(|i| disk.eval(&grid.point(i))).collect();
        let err = relative_l2(rec.fields[0].values(), &truth, Some(&mask));
        self.save_field("xray_disk", &rec.fields[0])?;
        self.metrics.push("xray_disk_error", format!("{err:e}"));

        // Spherical-mean backprojection of a 3D Gaussian.
        let out = Grid::cell_centered(3, 24, -0.5, 0.5)?;
        let array = make_transducer_array(3, 1.0, cfg.transducers, 1.0)?;
        let radii: Vec<f64> = (1..=cfg.radii).map(|k| 2.0 * k as f64 / cfg.radii as f64).collect();
        let mut values = Vec::with_capacity(array.len() * radii.len());
        for z in array.positions() {
            for &t in &radii {
                values.push(spherical_mean_quadrature(&g, z, t, 1024)?);
            }
        }
        let data = SphericalMeanData::new(array, radii, BoundaryElectrodes::channels(1), values)?;
        let rec = invert_spherical_means_3d(&data, &out)?;
        let truth: Vec<f64> = (0..out.len()).map(|i| g.eval(&out.point(i))).collect();
        let err = relative_l2(rec.fields[0].values(), &truth, None);
        self.save_field("backprojection_3d", &rec.fields[0])?;
        self.metrics.push("backprojection_3d_error", format!("{err:e}"));
        Ok(())
    }
}

/// Relative change of spherical-mean data on every tenth transducer when the
/// angular sampling is doubled.
fn quadrature_consistency(kernel: &KernelMatrix, data: &SphericalMeanData, oversample: usize) -> Result<f64> {
    let array = data.array();
    let picks: Vec<usize> = (0..array.len()).step_by(10).collect();
    let sub = array.subset(&picks)?;
    let fine = measure_spherical_pulse_with(kernel, &sub, data.radii(), 2 * oversample)?;
    let n_r = data.radii().len();
    let n_el = data.electrodes().len();
    let coarse: Vec<f64> =
        picks.iter().flat_map(|&i| data.values()[i * n_r * n_el..(i + 1) * n_r * n_el].iter().copied()).collect();
    Ok(relative_l2(&coarse, fine.values(), None))
}

/// Sinogram of an analytic disk on lines about the grid center, plus the
/// interior mask that drops a two-pixel rim at the grid edge.
pub fn analytic_disk_sinogram(
    disk: &AnalyticPhantom,
    grid: &Grid,
    n_angles: usize,
    n_offsets: usize,
) -> Result<(Sinogram, Vec<bool>)> {
    let angles = uniform_angles(n_angles);
    let offsets = default_offsets(grid, n_offsets);
    let mut values = Vec::with_capacity(angles.len() * offsets.len());
    for &a in &angles {
        for &s in &offsets {
            values.push(disk_sinogram(disk, a, s)?);
        }
    }
    let c = grid.center();
    let sino = Sinogram::new(angles, offsets, [c[0], c[1]], BoundaryElectrodes::channels(1), values)?;
    let n = grid.counts();
    let mask = (0..grid.len())
        .map(|i| {
            let [x, y, _] = grid.unravel(i);
            x >= 2 && y >= 2 && x + 2 < n[0] && y + 2 < n[1]
        })
        .collect();
    Ok((sino, mask))
}

/// Runs every stage of `cfg.mode`, writing outputs and `metrics.txt` under `out`.
pub fn run(cfg: &ExperimentConfig, out: &Path) -> Result<Metrics> {
    cfg.validate()?;
    std::fs::create_dir_all(out)?;
    let mut run = Run {
        cfg,
        out: out.to_path_buf(),
        metrics: Metrics::default(),
        phantom: None,
        electrodes: None,
        kernel: None,
        data: None,
    };
    let total = Instant::now();
    let mut times = Vec::new();
    for &stage in stages(cfg.mode) {
        log::info!("stage {stage}");
        let start = Instant::now();
        run.stage(stage).map_err(|e| e.in_stage(stage))?;
        times.push((stage, start.elapsed().as_secs_f64()));
    }
    let mut metrics = Metrics::default();
    metrics.entries.extend(run.metrics.entries);
    for (stage, t) in times {
        metrics.push(format!("time_{stage}"), format!("{t:.6}"));
    }
    metrics.push("time_total", format!("{:.6}", total.elapsed().as_secs_f64()));
    for (k, v) in cfg.echo() {
        metrics.push(format!("config.{k}"), v);
    }
    let mut w = create(&out.join("metrics.txt"))?;
    metrics.write(&mut w)?;
    w.flush()?;
    Ok(metrics)
}

/// Phantom → forward solve → kernel oracle → measurement → focusing.
pub fn run_endtoend(cfg: &ExperimentConfig, out: &Path) -> Result<Metrics> {
    if cfg.mode != Mode::Endtoend {
        let mut cfg = cfg.clone();
        cfg.mode = Mode::Endtoend;
        return run(&cfg, out);
    }
    run(cfg, out)
}
