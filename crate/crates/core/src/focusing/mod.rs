//! Synthetic focusing: recover each kernel row `l(·, y_j)` from the responses
//! to unfocused waves.

mod backprojection;
mod fourier;
mod xray;

pub use backprojection::{
    filter_monochromatic, filter_spherical_means, invert_monochromatic_3d, invert_monochromatic_3d_with,
    invert_spherical_means_3d, FilteredDetectorData, MonochromaticOptions,
};
pub use fourier::invert_fourier;
pub use xray::{invert_xray_2d, ramp_filter};

use crate::error::{Error, Result};
use crate::grid::{Grid, ScalarField};
use crate::kernel::KernelMatrix;
use crate::wavegen::WaveData;

/// Output of an inversion: one field per electrode plus diagnostics.
#[derive(Debug, Clone)]
pub struct Reconstruction {
    pub fields: Vec<ScalarField>,
    pub warnings: Vec<String>,
    /// Fourier route only: `||Im|| / ||Re||` of the inverse transform.
    pub imaginary_residue: Option<f64>,
}

impl Reconstruction {
    fn new(fields: Vec<ScalarField>, warnings: Vec<String>) -> Self {
        for w in &warnings {
            log::warn!("{w}");
        }
        Reconstruction { fields, warnings, imaginary_residue: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FocusMethod {
    SphericalMeans3d,
    Monochromatic3d,
    Fourier,
    Xray2d,
}

impl FocusMethod {
    pub fn name(self) -> &'static str {
        match self {
            FocusMethod::SphericalMeans3d => "spherical-means-3d",
            FocusMethod::Monochromatic3d => "monochromatic-3d",
            FocusMethod::Fourier => "fourier",
            FocusMethod::Xray2d => "xray-2d",
        }
    }

    /// The inversion matching a data family.
    pub fn for_data(data: &WaveData) -> Self {
        match data {
            WaveData::SphericalMeans(_) => FocusMethod::SphericalMeans3d,
            WaveData::Monochromatic(_) => FocusMethod::Monochromatic3d,
            WaveData::PlaneWaves(_) => FocusMethod::Fourier,
            WaveData::LineIntegrals(_) => FocusMethod::Xray2d,
        }
    }
}

/// Runs the inversion `method` on `data` and assembles the kernel on `out`.
pub fn focus_kernel(data: &WaveData, method: FocusMethod, out: &Grid) -> Result<KernelMatrix> {
    let rec = match (data, method) {
        (WaveData::SphericalMeans(d), FocusMethod::SphericalMeans3d) => invert_spherical_means_3d(d, out)?,
        (WaveData::Monochromatic(d), FocusMethod::Monochromatic3d) => invert_monochromatic_3d(d, out)?,
        (WaveData::PlaneWaves(d), FocusMethod::Fourier) => invert_fourier(d, out)?,
        (WaveData::LineIntegrals(d), FocusMethod::Xray2d) => invert_xray_2d(d, out)?,
        _ => return Err(Error::FamilyMismatch { family: data.family(), method: method.name() }),
    };
    KernelMatrix::from_fields(data.electrodes().clone(), &rec.fields)
}
