//! Plane-wave route: the data are a sampled Fourier transform, so the kernel
//! row comes back from one inverse DFT on the matching lattice.

use num_complex::Complex64;
use rustfft::FftDirection;

use super::Reconstruction;
use crate::error::{Error, Result};
use crate::fft::fft_nd;
use crate::grid::{Grid, ScalarField};
use crate::wavegen::{dft_index_map, origin_phases, FourierData};

/// Inverts plane-wave data onto `out`, which must be the grid the lattice was built for.
pub fn invert_fourier(data: &FourierData, out: &Grid) -> Result<Reconstruction> {
    let spatial = data.spatial();
    if !out.approx_eq(spatial, 1e-9) {
        return Err(Error::LatticeMismatch(format!(
            "output grid {} is not the grid {} conjugate to the wave-vector lattice",
            out.descriptor(),
            spatial.descriptor()
        )));
    }
    let kgrid = data.kgrid();
    let n = out.len();
    let counts = out.counts().to_vec();
    let lookup = dft_index_map(out);
    let phases = origin_phases(out, kgrid);
    let scale = 1.0 / (n as f64 * out.cell_measure());
    let n_el = data.electrodes().len();
    let mut fields = Vec::with_capacity(n_el);
    let (mut re2, mut im2) = (0.0, 0.0);
    for j in 0..n_el {
        let mut buf = vec![Complex64::new(0.0, 0.0); n];
        for k in 0..kgrid.len() {
            buf[lookup[k]] = data.value(k, j) * phases[k].conj();
        }
        fft_nd(&mut buf, &counts, FftDirection::Forward);
        re2 += buf.iter().map(|c| c.re * c.re).sum::<f64>();
        im2 += buf.iter().map(|c| c.im * c.im).sum::<f64>();
        let values = buf.iter().map(|c| c.re * scale).collect();
        fields.push(ScalarField::new(out.clone(), values)?);
    }
    let residue = if re2 > 0.0 { (im2 / re2).sqrt() } else { im2.sqrt() };
    let mut warnings = Vec::new();
    if residue > 1e-6 {
        warnings.push(format!("inverse transform has relative imaginary part {residue:.3e}; data are not Hermitian"));
    }
    let mut rec = Reconstruction::new(fields, warnings);
    rec.imaginary_residue = Some(residue);
    Ok(rec)
}
