//! C ABI for `cassi-amp`.
//!
//! Cubes and models are opaque heap handles created by `*_new`/`*_read`
//! and released with the matching `*_free`. Every fallible call returns a
//! [`CassiStatus`]; on failure a message is available from
//! [`cassi_last_error`] on the same thread. Panics never cross the boundary.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use cassi_amp::amp::{run_amp, SolverConfig, DEFAULT_ALPHA, DEFAULT_MAX_ITERS};
use cassi_amp::io::{read_cube, write_cube};
use cassi_amp::metrics::{psnr, Psnr};
use cassi_amp::operator::DEFAULT_HIGHER_ORDER_WEIGHTS;
use cassi_amp::transform::{TransformSpec, DEFAULT_LEVELS};
use cassi_amp::{CodedAperture, Error, HyperCube, MeasurementVector, Order, WaveletFamily};

/// Result code of every fallible call. Values above 2 match the exit codes
/// of the command-line tool.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CassiStatus {
    Ok = 0,
    /// A required pointer was null or a string was not UTF-8.
    InvalidArgument = 1,
    /// A Rust panic was caught; the handle arguments should be discarded.
    Panic = 2,
    Size = 3,
    Validation = 4,
    Domain = 5,
    Refused = 6,
    Divergence = 7,
    Config = 8,
    BadMagic = 10,
    Truncated = 11,
    DimensionOverflow = 12,
    InvalidApertureByte = 13,
    Io = 14,
    Image = 15,
}

impl From<&Error> for CassiStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::Size(_) => CassiStatus::Size,
            Error::Validation(_) => CassiStatus::Validation,
            Error::Domain(_) => CassiStatus::Domain,
            Error::Refused(_) => CassiStatus::Refused,
            Error::Divergence { .. } => CassiStatus::Divergence,
            Error::Config(_) => CassiStatus::Config,
            Error::BadMagic { .. } => CassiStatus::BadMagic,
            Error::ShortFile { .. } | Error::TrailingData { .. } => CassiStatus::Truncated,
            Error::DimensionOverflow { .. } => CassiStatus::DimensionOverflow,
            Error::InvalidApertureByte { .. } => CassiStatus::InvalidApertureByte,
            Error::Io { .. } => CassiStatus::Io,
            Error::Image(_) => CassiStatus::Image,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CassiOrder {
    Standard = 0,
    HigherOrder = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CassiWavelet {
    Haar = 0,
    Daubechies4 = 1,
}

/// Reconstruction settings. Obtain defaults from `cassi_amp_options_default`.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct CassiAmpOptions {
    pub alpha: f64,
    pub max_iters: usize,
    pub wavelet: CassiWavelet,
    pub levels: usize,
}

/// Opaque spectral cube.
pub struct CassiCube(HyperCube);

/// Opaque sensing model (apertures, band count, dispersion order).
pub struct CassiModel(cassi_amp::CassiModel);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

enum Failure {
    Core(Error),
    Arg(&'static str),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> CassiStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CassiStatus::Ok,
        Ok(Err(Failure::Core(e))) => {
            let status = CassiStatus::from(&e);
            set_error(e.to_string());
            status
        }
        Ok(Err(Failure::Arg(msg))) => {
            set_error(msg.to_string());
            CassiStatus::InvalidArgument
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {msg}"));
            CassiStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or(Failure::Arg(what))
}

unsafe fn path_arg<'a>(p: *const c_char) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::Arg("path is null"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure::Arg("path is not valid UTF-8"))
}

unsafe fn slice_arg<'a, T>(
    p: *const T,
    len: usize,
    what: &'static str,
) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure::Arg(what));
    }
    Ok(slice::from_raw_parts(p, len))
}

fn out_arg<T>(out: *mut *mut T) -> Result<(), Failure> {
    if out.is_null() {
        Err(Failure::Arg("output pointer is null"))
    } else {
        Ok(())
    }
}

/// Message for the most recent failure on this thread, or null. The
/// pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn cassi_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Creates an `m x n x bands` cube. `values` holds `m*n*bands` doubles in
/// band-major order (x fastest) or is null for an all-zero cube.
#[no_mangle]
pub unsafe extern "C" fn cassi_cube_new(
    m: usize,
    n: usize,
    bands: usize,
    values: *const f64,
    out: *mut *mut CassiCube,
) -> CassiStatus {
    guard(|| {
        out_arg(out)?;
        let len = m
            .checked_mul(n)
            .and_then(|v| v.checked_mul(bands))
            .ok_or(Error::Size("cube dimensions overflow".into()))?;
        let data = if values.is_null() {
            vec![0.0; len]
        } else {
            slice::from_raw_parts(values, len).to_vec()
        };
        let cube = HyperCube::new(m, n, bands, data)?;
        *out = Box::into_raw(Box::new(CassiCube(cube)));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn cassi_cube_free(cube: *mut CassiCube) {
    if !cube.is_null() {
        drop(Box::from_raw(cube));
    }
}

/// Writes the cube dimensions; any output pointer may be null.
#[no_mangle]
pub unsafe extern "C" fn cassi_cube_dims(
    cube: *const CassiCube,
    m: *mut usize,
    n: *mut usize,
    bands: *mut usize,
) -> CassiStatus {
    guard(|| {
        let (cm, cn, cl) = deref(cube, "cube is null")?.0.dims();
        for (p, v) in [(m, cm), (n, cn), (bands, cl)] {
            if !p.is_null() {
                *p = v;
            }
        }
        Ok(())
    })
}

/// Copies the cube values into `dst`, which must hold exactly `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn cassi_cube_copy_values(
    cube: *const CassiCube,
    dst: *mut f64,
    len: usize,
) -> CassiStatus {
    guard(|| {
        let cube = &deref(cube, "cube is null")?.0;
        if len != cube.len() {
            return Err(Error::Size(format!(
                "buffer holds {len} values, cube has {}",
                cube.len()
            ))
            .into());
        }
        if dst.is_null() {
            return Err(Failure::Arg("destination is null"));
        }
        slice::from_raw_parts_mut(dst, len).copy_from_slice(cube.values());
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn cassi_cube_read(
    path: *const c_char,
    out: *mut *mut CassiCube,
) -> CassiStatus {
    guard(|| {
        out_arg(out)?;
        let cube = read_cube(path_arg(path)?)?;
        *out = Box::into_raw(Box::new(CassiCube(cube)));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn cassi_cube_write(
    cube: *const CassiCube,
    path: *const c_char,
) -> CassiStatus {
    guard(|| {
        let cube = &deref(cube, "cube is null")?.0;
        write_cube(path_arg(path)?, cube)?;
        Ok(())
    })
}

/// Builds a sensing model from `shots` binary masks of `m x n` bytes each,
/// stored consecutively in row-major order. `weights` points to three
/// higher-order tap weights or is null for the defaults; it is ignored for
/// the standard order.
#[no_mangle]
pub unsafe extern "C" fn cassi_model_new(
    masks: *const u8,
    shots: usize,
    m: usize,
    n: usize,
    bands: usize,
    order: CassiOrder,
    weights: *const f64,
    out: *mut *mut CassiModel,
) -> CassiStatus {
    guard(|| {
        out_arg(out)?;
        let plane = m
            .checked_mul(n)
            .ok_or(Error::Size("aperture dimensions overflow".into()))?;
        let total = plane
            .checked_mul(shots)
            .ok_or(Error::Size("aperture stack overflows".into()))?;
        let bytes = slice_arg(masks, total, "masks is null")?;
        let apertures = if plane == 0 {
            Vec::new()
        } else {
            bytes
                .chunks(plane)
                .map(|mask| CodedAperture::new(m, n, mask.to_vec()))
                .collect::<cassi_amp::Result<Vec<_>>>()?
        };
        let w = if weights.is_null() {
            DEFAULT_HIGHER_ORDER_WEIGHTS
        } else {
            let w = slice::from_raw_parts(weights, 3);
            [w[0], w[1], w[2]]
        };
        let order = match order {
            CassiOrder::Standard => Order::Standard,
            CassiOrder::HigherOrder => Order::HigherOrder,
        };
        let model = cassi_amp::CassiModel::with_weights(bands, apertures, order, w)?;
        *out = Box::into_raw(Box::new(CassiModel(model)));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn cassi_model_free(model: *mut CassiModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Number of detector measurements `m`, or 0 for a null model.
#[no_mangle]
pub unsafe extern "C" fn cassi_model_measurement_count(model: *const CassiModel) -> usize {
    model.as_ref().map_or(0, |m| m.0.measurement_count())
}

/// Computes `g = H f` into `g`, which must hold exactly `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn cassi_model_forward(
    model: *const CassiModel,
    cube: *const CassiCube,
    g: *mut f64,
    len: usize,
) -> CassiStatus {
    guard(|| {
        let model = &deref(model, "model is null")?.0;
        let cube = &deref(cube, "cube is null")?.0;
        if len != model.measurement_count() {
            return Err(Error::Size(format!(
                "buffer holds {len} values, model produces {}",
                model.measurement_count()
            ))
            .into());
        }
        if g.is_null() {
            return Err(Failure::Arg("measurement buffer is null"));
        }
        let out = model.forward(cube)?;
        slice::from_raw_parts_mut(g, len).copy_from_slice(out.values());
        Ok(())
    })
}

/// Computes `H^T g` as a new cube.
#[no_mangle]
pub unsafe extern "C" fn cassi_model_adjoint(
    model: *const CassiModel,
    g: *const f64,
    len: usize,
    out: *mut *mut CassiCube,
) -> CassiStatus {
    guard(|| {
        out_arg(out)?;
        let model = &deref(model, "model is null")?.0;
        let g = MeasurementVector::new(slice_arg(g, len, "measurements is null")?.to_vec());
        let cube = model.adjoint(&g)?;
        *out = Box::into_raw(Box::new(CassiCube(cube)));
        Ok(())
    })
}

#[no_mangle]
pub extern "C" fn cassi_amp_options_default() -> CassiAmpOptions {
    CassiAmpOptions {
        alpha: DEFAULT_ALPHA,
        max_iters: DEFAULT_MAX_ITERS,
        wavelet: CassiWavelet::Haar,
        levels: DEFAULT_LEVELS,
    }
}

/// Reconstructs a cube from `len` measurements. `options` may be null for
/// the defaults; `final_sigma2` may be null.
#[no_mangle]
pub unsafe extern "C" fn cassi_run_amp(
    model: *const CassiModel,
    g: *const f64,
    len: usize,
    options: *const CassiAmpOptions,
    out: *mut *mut CassiCube,
    final_sigma2: *mut f64,
) -> CassiStatus {
    guard(|| {
        out_arg(out)?;
        let model = &deref(model, "model is null")?.0;
        let g = MeasurementVector::new(slice_arg(g, len, "measurements is null")?.to_vec());
        let opts = options
            .as_ref()
            .copied()
            .unwrap_or_else(|| cassi_amp_options_default());
        let wavelet = match opts.wavelet {
            CassiWavelet::Haar => WaveletFamily::Haar,
            CassiWavelet::Daubechies4 => WaveletFamily::Daubechies4,
        };
        let (m, n, l) = model.cube_dims();
        let spec = TransformSpec::new(wavelet, opts.levels, m, n, l)?;
        let config = SolverConfig::new(spec)
            .with_alpha(opts.alpha)
            .with_max_iters(opts.max_iters);
        let (cube, report) = run_amp(model, &g, &config, None)?;
        if !final_sigma2.is_null() {
            *final_sigma2 = report.sigma2.last().copied().unwrap_or(f64::NAN);
        }
        *out = Box::into_raw(Box::new(CassiCube(cube)));
        Ok(())
    })
}

/// PSNR of `estimate` against `reference` in dB; identical cubes give
/// positive infinity.
#[no_mangle]
pub unsafe extern "C" fn cassi_psnr(
    reference: *const CassiCube,
    estimate: *const CassiCube,
    out_db: *mut f64,
) -> CassiStatus {
    guard(|| {
        if out_db.is_null() {
            return Err(Failure::Arg("output pointer is null"));
        }
        let r = &deref(reference, "reference is null")?.0;
        let e = &deref(estimate, "estimate is null")?.0;
        *out_db = match psnr(r, e)? {
            Psnr::Finite(db) => db,
            Psnr::Infinite => f64::INFINITY,
        };
        Ok(())
    })
}
