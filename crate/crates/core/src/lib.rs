//! Synthetic focusing for ultrasound-modulated tomography.
//!
//! The crate simulates the linearized acousto-electric measurement kernel
//! `l(x, y)` of a conductivity phantom, synthesizes the responses that
//! unfocused ultrasound waves would produce, and reconstructs the kernel from
//! those responses by four routes: spherical-mean backprojection, monochromatic
//! spherical waves, plane waves (Fourier inversion) and line integrals
//! (filtered backprojection).

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
mod fft;
pub mod focusing;
pub mod forward;
pub mod grid;
pub mod io;
pub mod kernel;
pub mod oracles;
pub mod phantom;
pub mod pipeline;
pub mod transducer;
pub mod wavegen;

pub use error::{Error, Result};
pub use focusing::{focus_kernel, FocusMethod, Reconstruction};
pub use forward::{
    gauge_fix, kernel_adjoint, kernel_adjoint_with, kernel_bruteforce, kernel_bruteforce_with, solve_conduction,
    solve_conduction_with, ConductionSolution, KernelOptions, SolverOptions,
};
pub use grid::{Grid, Point, ScalarField};
pub use kernel::{BoundaryElectrodes, KernelMatrix, Side};
pub use oracles::{spherical_mean_quadrature, AnalyticPhantom, PhantomKind};
pub use phantom::{build_phantom_disks, Disk, Phantom};
pub use transducer::{make_transducer_array, TransducerArray};
pub use wavegen::{
    add_noise, measure_line_integrals, measure_monochromatic, measure_plane_waves, measure_spherical_pulse,
    FourierData, MonochromaticData, Sinogram, SphericalMeanData, WaveData,
};
