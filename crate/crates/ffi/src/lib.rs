//! C interface to the synfocus pipeline.
//!
//! Every object crosses the boundary as an opaque handle owned by the caller
//! and released with its `sf_*_free` function. Functions return an
//! [`SfStatus`]; on failure [`sf_last_error_message`] describes the cause for
//! the calling thread.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use synfocus::phantom::default_disks;
use synfocus::wavegen::{auto_offset_count, default_offsets, default_radii, uniform_angles};
use synfocus::{
    add_noise, build_phantom_disks, focus_kernel, kernel_adjoint, kernel_bruteforce, make_transducer_array,
    measure_line_integrals, measure_plane_waves, measure_spherical_pulse, BoundaryElectrodes, Error, FocusMethod, Grid,
    KernelMatrix, Phantom, ScalarField, WaveData,
};

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SfStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    /// Solver failure, singular geometry or lattice mismatch.
    Numerical = 3,
    Unsupported = 4,
    Io = 5,
    /// A Rust panic was caught at the boundary.
    Panic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SfKernelMethod {
    Bruteforce = 0,
    Adjoint = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SfFamily {
    Spherical = 0,
    Plane = 1,
    Xray = 2,
}

/// Acquisition settings for `sf_measure`; zero counts pick the defaults.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SfMeasureParams {
    pub family: SfFamily,
    pub transducers: usize,
    pub transducer_radius: f64,
    pub radii: usize,
    pub angles: usize,
    pub offsets: usize,
    /// Noise standard deviation relative to the data RMS.
    pub noise: f64,
    pub seed: u64,
}

pub struct SfGrid(Grid);
pub struct SfPhantom(Phantom);
pub struct SfKernel(KernelMatrix);
pub struct SfData(WaveData);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> SfStatus {
    match err {
        Error::Stage { source, .. } => status_of(source),
        Error::NoConvergence { .. } | Error::SingularKernel(_) | Error::LatticeMismatch(_) => SfStatus::Numerical,
        Error::UnsupportedDimension(_) | Error::FamilyMismatch { .. } => SfStatus::Unsupported,
        Error::Io(_) | Error::Format(_) => SfStatus::Io,
        _ => SfStatus::InvalidArgument,
    }
}

struct Fail(SfStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(SfStatus::NullPointer, format!("{what} is NULL"))
}

/// Runs `body`, records any failure for `sf_last_error_message` and maps it to a status.
fn guard(body: impl FnOnce() -> Result<(), Fail>) -> SfStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            SfStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(panic) => {
            let msg = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            SfStatus::Panic
        }
    }
}

unsafe fn borrow<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn emit<T>(out: *mut *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn release<T>(p: *mut T) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Message for the last failed call on this thread, or NULL after a success.
/// Valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn sf_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn sf_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Cell-centered grid with `n` cells per axis on `[lo, hi]^dim`.
#[no_mangle]
pub unsafe extern "C" fn sf_grid_new(dim: usize, n: usize, lo: f64, hi: f64, out: *mut *mut SfGrid) -> SfStatus {
    guard(|| emit(out, SfGrid(Grid::cell_centered(dim, n, lo, hi)?)))
}

/// Number of grid points, 0 for NULL.
#[no_mangle]
pub unsafe extern "C" fn sf_grid_len(grid: *const SfGrid) -> usize {
    grid.as_ref().map_or(0, |g| g.0.len())
}

#[no_mangle]
pub unsafe extern "C" fn sf_grid_free(grid: *mut SfGrid) {
    release(grid)
}

/// The default four-disk log-conductivity phantom on a 2D grid.
#[no_mangle]
pub unsafe extern "C" fn sf_phantom_default(grid: *const SfGrid, out: *mut *mut SfPhantom) -> SfStatus {
    guard(|| {
        let g = borrow(grid, "grid")?;
        emit(out, SfPhantom(build_phantom_disks(g.0.clone(), &default_disks())?))
    })
}

/// Phantom from `len` log-conductivity values in x-fastest order.
#[no_mangle]
pub unsafe extern "C" fn sf_phantom_from_values(
    grid: *const SfGrid,
    values: *const f64,
    len: usize,
    out: *mut *mut SfPhantom,
) -> SfStatus {
    guard(|| {
        let g = borrow(grid, "grid")?;
        if values.is_null() {
            return Err(null("values"));
        }
        let v = std::slice::from_raw_parts(values, len).to_vec();
        emit(out, SfPhantom(Phantom::from_field(ScalarField::new(g.0.clone(), v)?)))
    })
}

#[no_mangle]
pub unsafe extern "C" fn sf_phantom_free(phantom: *mut SfPhantom) {
    release(phantom)
}

/// Measurement kernel of `phantom` under the left/right current pattern,
/// on the `interior` grid (which must tile the phantom grid).
#[no_mangle]
pub unsafe extern "C" fn sf_kernel_compute(
    phantom: *const SfPhantom,
    interior: *const SfGrid,
    method: SfKernelMethod,
    eps: f64,
    out: *mut *mut SfKernel,
) -> SfStatus {
    guard(|| {
        let p = &borrow(phantom, "phantom")?.0;
        let interior = &borrow(interior, "interior")?.0;
        let el = BoundaryElectrodes::left_right(p.grid(), 1.0)?;
        let k = match method {
            SfKernelMethod::Bruteforce => kernel_bruteforce(p, &el, interior, eps)?,
            SfKernelMethod::Adjoint => kernel_adjoint(p, &el, interior)?,
        };
        emit(out, SfKernel(k))
    })
}

#[no_mangle]
pub unsafe extern "C" fn sf_kernel_shape(
    kernel: *const SfKernel,
    electrodes: *mut usize,
    pixels: *mut usize,
) -> SfStatus {
    guard(|| {
        let k = &borrow(kernel, "kernel")?.0;
        if electrodes.is_null() || pixels.is_null() {
            return Err(null("shape output"));
        }
        *electrodes = k.n_electrodes();
        *pixels = k.n_pixels();
        Ok(())
    })
}

/// Copies the row-major `[electrodes × pixels]` kernel into `buf`, which must hold exactly that many values.
#[no_mangle]
pub unsafe extern "C" fn sf_kernel_values(kernel: *const SfKernel, buf: *mut f64, len: usize) -> SfStatus {
    guard(|| {
        let k = &borrow(kernel, "kernel")?.0;
        if buf.is_null() {
            return Err(null("buffer"));
        }
        if len != k.values().len() {
            return Err(Fail(
                SfStatus::InvalidArgument,
                format!("buffer holds {len} values, kernel has {}", k.values().len()),
            ));
        }
        std::slice::from_raw_parts_mut(buf, len).copy_from_slice(k.values());
        Ok(())
    })
}

/// `‖a - b‖_F / ‖b‖_F`.
#[no_mangle]
pub unsafe extern "C" fn sf_kernel_relative_error(a: *const SfKernel, b: *const SfKernel, out: *mut f64) -> SfStatus {
    guard(|| {
        let (a, b) = (&borrow(a, "a")?.0, &borrow(b, "b")?.0);
        if a.values().len() != b.values().len() {
            return Err(Fail(SfStatus::InvalidArgument, "kernels differ in shape".into()));
        }
        if out.is_null() {
            return Err(null("output pointer"));
        }
        *out = a.relative_error(b);
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn sf_kernel_free(kernel: *mut SfKernel) {
    release(kernel)
}

/// Settings that select `family` with every count left to its default.
#[no_mangle]
pub extern "C" fn sf_measure_params_default(family: SfFamily) -> SfMeasureParams {
    SfMeasureParams {
        family,
        transducers: 128,
        transducer_radius: 1.0,
        radii: 256,
        angles: 180,
        offsets: 0,
        noise: 0.0,
        seed: 0,
    }
}

/// Synthetic unfocused-wave data of `kernel`.
#[no_mangle]
pub unsafe extern "C" fn sf_measure(
    kernel: *const SfKernel,
    params: *const SfMeasureParams,
    out: *mut *mut SfData,
) -> SfStatus {
    guard(|| {
        let k = &borrow(kernel, "kernel")?.0;
        let p = borrow(params, "params")?;
        let d = sf_measure_params_default(p.family);
        let or = |v: usize, default: usize| if v == 0 { default } else { v };
        let grid = k.interior();
        let data: WaveData = match p.family {
            SfFamily::Plane => measure_plane_waves(k)?.into(),
            SfFamily::Xray => {
                let n_off = if p.offsets == 0 { auto_offset_count(grid) } else { p.offsets };
                measure_line_integrals(k, &uniform_angles(or(p.angles, d.angles)), &default_offsets(grid, n_off))?
                    .into()
            }
            SfFamily::Spherical => {
                let r = if p.transducer_radius == 0.0 { d.transducer_radius } else { p.transducer_radius };
                let array = make_transducer_array(grid.dim(), r, or(p.transducers, d.transducers), 1.0)?;
                let radii = default_radii(&array, grid, or(p.radii, d.radii));
                measure_spherical_pulse(k, &array, &radii)?.into()
            }
        };
        let data = add_noise(&data, p.noise, p.seed)?;
        emit(out, SfData(data))
    })
}

/// Number of samples (complex samples count once), 0 for NULL.
#[no_mangle]
pub unsafe extern "C" fn sf_data_len(data: *const SfData) -> usize {
    data.as_ref().map_or(0, |d| d.0.len())
}

#[no_mangle]
pub unsafe extern "C" fn sf_data_free(data: *mut SfData) {
    release(data)
}

/// Reconstructs the kernel on `out_grid` with the inversion matching the data family.
#[no_mangle]
pub unsafe extern "C" fn sf_focus(data: *const SfData, out_grid: *const SfGrid, out: *mut *mut SfKernel) -> SfStatus {
    guard(|| {
        let d = &borrow(data, "data")?.0;
        let g = &borrow(out_grid, "grid")?.0;
        emit(out, SfKernel(focus_kernel(d, FocusMethod::for_data(d), g)?))
    })
}
