//! Plain-text formats: CSV for fields, kernels and wave data, PGM (P2) for images.
//!
//! Numbers are written with `{:e}`, which is the shortest representation
//! that parses back to the same `f64`, so the CSV formats round-trip exactly.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::grid::{Grid, ScalarField};
use crate::kernel::{BoundaryElectrodes, KernelMatrix};
use crate::transducer::TransducerArray;
use crate::wavegen::WaveData;

const LAYOUT: &str = "row-major x-fastest";

pub fn write_field<W: Write>(mut w: W, field: &ScalarField) -> Result<()> {
    writeln!(w, "# grid: {}", field.grid().descriptor())?;
    writeln!(w, "# layout: {LAYOUT}")?;
    for v in field.values() {
        writeln!(w, "{v:e}")?;
    }
    Ok(())
}

fn header_value<'a>(line: &'a str, key: &str) -> Result<&'a str> {
    line.strip_prefix('#')
        .map(str::trim_start)
        .and_then(|l| l.strip_prefix(key))
        .and_then(|l| l.strip_prefix(':'))
        .map(str::trim)
        .ok_or_else(|| Error::Format(format!("expected `# {key}: ...`, got `{line}`")))
}

fn parse_f64(s: &str, what: &str) -> Result<f64> {
    s.trim().parse().map_err(|_| Error::Format(format!("bad {what} `{s}`")))
}

fn next_line<R: BufRead>(lines: &mut std::io::Lines<R>, what: &str) -> Result<String> {
    lines.next().ok_or_else(|| Error::Format(format!("unexpected end of file before {what}")))?.map_err(Error::from)
}

pub fn read_field<R: BufRead>(r: R) -> Result<ScalarField> {
    let mut lines = r.lines();
    let grid = Grid::from_descriptor(header_value(&next_line(&mut lines, "grid header")?, "grid")?)?;
    let layout = next_line(&mut lines, "layout header")?;
    if header_value(&layout, "layout")? != LAYOUT {
        return Err(Error::Format(format!("unsupported layout in `{layout}`")));
    }
    let mut values = Vec::with_capacity(grid.len());
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        values.push(parse_f64(&line, "value")?);
    }
    ScalarField::new(grid, values)
}

/// One CSV row per electrode, preceded by the geometry header.
pub fn write_kernel<W: Write>(mut w: W, kernel: &KernelMatrix) -> Result<()> {
    let el = kernel.electrodes();
    writeln!(w, "# electrodes: {}", el.len())?;
    writeln!(w, "# interior: {}", kernel.interior().descriptor())?;
    writeln!(w, "# units: boundary potential change per unit log-conductivity change per unit area")?;
    writeln!(w, "# layout: one row per electrode, pixels {LAYOUT}")?;
    for ((p, c), s) in el.points().iter().zip(el.current()).zip(el.segments()) {
        writeln!(w, "# electrode: {:e},{:e},{c:e},{s:e}", p[0], p[1])?;
    }
    for j in 0..kernel.n_electrodes() {
        let row: Vec<String> = kernel.row(j).iter().map(|v| format!("{v:e}")).collect();
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

pub fn read_kernel<R: BufRead>(r: R) -> Result<KernelMatrix> {
    let mut lines = r.lines();
    let n: usize = header_value(&next_line(&mut lines, "electrode count")?, "electrodes")?
        .parse()
        .map_err(|_| Error::Format("bad electrode count".into()))?;
    let interior = Grid::from_descriptor(header_value(&next_line(&mut lines, "interior grid")?, "interior")?)?;
    let (mut points, mut current, mut segments) = (Vec::new(), Vec::new(), Vec::new());
    let mut values = Vec::with_capacity(n * interior.len());
    for line in lines {
        let line = line?;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        if t.starts_with('#') {
            if let Ok(spec) = header_value(t, "electrode") {
                let parts = spec.split(',').map(|s| parse_f64(s, "electrode field")).collect::<Result<Vec<_>>>()?;
                if parts.len() != 4 {
                    return Err(Error::Format(format!("bad electrode line `{t}`")));
                }
                points.push([parts[0], parts[1]]);
                current.push(parts[2]);
                segments.push(parts[3]);
            }
            continue;
        }
        for v in t.split(',') {
            values.push(parse_f64(v, "kernel entry")?);
        }
    }
    if points.len() != n {
        return Err(Error::Format(format!("header announces {n} electrodes, found {}", points.len())));
    }
    KernelMatrix::new(BoundaryElectrodes::new(points, current, segments)?, interior, values)
}

fn write_array_header<W: Write>(w: &mut W, array: &TransducerArray) -> Result<()> {
    writeln!(
        w,
        "# transducers: {} dim={} radius={:e} sound_speed={:e}",
        array.len(),
        array.dim(),
        array.radius(),
        array.sound_speed()
    )?;
    for ((z, n), wt) in array.positions().iter().zip(array.normals()).zip(array.weights()) {
        writeln!(w, "# transducer: {:e},{:e},{:e},{:e},{:e},{:e},{wt:e}", z[0], z[1], z[2], n[0], n[1], n[2])?;
    }
    Ok(())
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:e}")).collect::<Vec<_>>().join(",")
}

/// Long-format CSV of any data family with its geometry in the header.
pub fn write_wave_data<W: Write>(mut w: W, data: &WaveData) -> Result<()> {
    writeln!(w, "# family: {}", data.family())?;
    writeln!(w, "# electrodes: {}", data.electrodes().len())?;
    match data {
        WaveData::SphericalMeans(d) => {
            write_array_header(&mut w, d.array())?;
            writeln!(w, "# radii: {}", join(d.radii()))?;
            writeln!(w, "transducer,radius,electrode,value")?;
            let n_el = d.electrodes().len();
            for i in 0..d.array().len() {
                for (k, t) in d.radii().iter().enumerate() {
                    for j in 0..n_el {
                        writeln!(w, "{i},{t:e},{j},{:e}", d.value(i, k, j))?;
                    }
                }
            }
        }
        WaveData::Monochromatic(d) => {
            write_array_header(&mut w, d.array())?;
            writeln!(w, "# frequencies: {}", join(d.frequencies()))?;
            writeln!(w, "transducer,frequency,electrode,re,im")?;
            let n_el = d.electrodes().len();
            for i in 0..d.array().len() {
                for (m, f) in d.frequencies().iter().enumerate() {
                    for j in 0..n_el {
                        let v = d.value(i, m, j);
                        writeln!(w, "{i},{f:e},{j},{:e},{:e}", v.re, v.im)?;
                    }
                }
            }
        }
        WaveData::PlaneWaves(d) => {
            writeln!(w, "# kgrid: {}", d.kgrid().descriptor())?;
            writeln!(w, "# spatial: {}", d.spatial().descriptor())?;
            let dim = d.kgrid().dim();
            let axes = ["kx", "ky", "kz"];
            writeln!(w, "k,{},electrode,re,im", axes[..dim].join(","))?;
            let n_el = d.electrodes().len();
            for k in 0..d.kgrid().len() {
                let kv = d.kgrid().point(k);
                let coords = join(&kv[..dim]);
                for j in 0..n_el {
                    let v = d.value(k, j);
                    writeln!(w, "{k},{coords},{j},{:e},{:e}", v.re, v.im)?;
                }
            }
        }
        WaveData::LineIntegrals(d) => {
            writeln!(w, "# center: {:e},{:e}", d.center()[0], d.center()[1])?;
            writeln!(w, "# angles: {}", join(d.angles()))?;
            writeln!(w, "# offsets: {}", join(d.offsets()))?;
            writeln!(w, "angle,offset,electrode,value")?;
            let n_el = d.electrodes().len();
            for (a, ang) in d.angles().iter().enumerate() {
                for (s, off) in d.offsets().iter().enumerate() {
                    for j in 0..n_el {
                        writeln!(w, "{ang:e},{off:e},{j},{:e}", d.value(a, s, j))?;
                    }
                }
            }
        }
    }
    Ok(())
}

/// 8-bit plain PGM of a 2D field (3D: the middle z slice), y axis up.
pub fn write_pgm<W: Write>(mut w: W, field: &ScalarField) -> Result<()> {
    let g = field.grid();
    let (nx, ny) = (g.counts()[0], g.counts()[1]);
    let offset = if g.dim() == 3 { nx * ny * (g.counts()[2] / 2) } else { 0 };
    let slice = &field.values()[offset..offset + nx * ny];
    let lo = slice.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = slice.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    writeln!(w, "P2")?;
    writeln!(w, "# scale: min={lo:e} max={hi:e} (0 -> min, 255 -> max)")?;
    writeln!(w, "{nx} {ny}")?;
    writeln!(w, "255")?;
    for j in (0..ny).rev() {
        let row: Vec<String> = slice[j * nx..(j + 1) * nx]
            .iter()
            .map(|v| {
                let level = if span > 0.0 { ((v - lo) / span * 255.0).round() } else { 0.0 };
                (level as u8).to_string()
            })
            .collect();
        writeln!(w, "{}", row.join(" "))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn field_round_trip_is_bit_exact() {
        let g = Grid::cell_centered(2, 7, -0.5, 0.5).unwrap();
        let f = ScalarField::from_fn(g, |x| (x[0] * 13.7).sin() / 3.0 + x[1] * 1e-300);
        let mut buf = Vec::new();
        write_field(&mut buf, &f).unwrap();
        let back = read_field(&buf[..]).unwrap();
        assert_eq!(back, f);
    }

    #[test]
    fn kernel_round_trip_is_bit_exact() {
        let g = Grid::cell_centered(2, 4, -0.5, 0.5).unwrap();
        let el = BoundaryElectrodes::left_right(&g, 1.0).unwrap();
        let values = (0..el.len() * g.len()).map(|i| (i as f64 * 0.1).cos() / 7.0).collect();
        let k = KernelMatrix::new(el, g, values).unwrap();
        let mut buf = Vec::new();
        write_kernel(&mut buf, &k).unwrap();
        assert_eq!(read_kernel(&buf[..]).unwrap(), k);
    }

    #[test]
    fn pgm_records_scale() {
        let g = Grid::cell_centered(2, 3, 0.0, 1.0).unwrap();
        let f = ScalarField::from_fn(g, |x| x[0]);
        let mut buf = Vec::new();
        write_pgm(&mut buf, &f).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "P2");
        assert!(lines[1].starts_with("# scale: min="));
        assert_eq!(lines[2], "3 3");
        assert_eq!(lines[4], "0 128 255");
    }

    #[test]
    fn truncated_field_is_rejected() {
        assert!(matches!(read_field(&b"# grid: 2,2,2,0,0,1,1\n"[..]), Err(Error::Format(_))));
    }
}
