//! C ABI for the near-field DoA library.
//!
//! Handles are opaque pointers created by `*_new`/`*_load` and released with
//! the matching `*_free`. Every fallible function returns an [`NfdoaStatus`];
//! on failure a description is available from [`nfdoa_last_error`] on the
//! same thread. Complex data is exchanged as interleaved `re, im` doubles;
//! snapshot matrices are `N x K` row-major.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use nfdoa::covariance::sample_covariance_of;
use nfdoa::cvnn::{flops_count, Checkpoint, Network};
use nfdoa::geometry::{near_field_steering, ArrayConfig, SourcePlacement};
use nfdoa::pipeline::feature_from_covariance;
use nfdoa::sim::{received_snapshots, NoiseSpec};
use nfdoa::Error;
use num_complex::Complex64;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NfdoaStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Shape = 3,
    Numeric = 4,
    Io = 5,
    Parse = 6,
    Panic = 7,
}

/// Uniform linear array geometry.
pub struct NfdoaArray {
    config: ArrayConfig,
}

/// A trained (or freshly constructed) regression network.
pub struct NfdoaModel {
    net: Network,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

struct Failure(NfdoaStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::Domain(_) => NfdoaStatus::InvalidArgument,
            Error::Shape(_) => NfdoaStatus::Shape,
            Error::Numeric(_) => NfdoaStatus::Numeric,
            Error::Parse(_) | Error::Json(_) | Error::Csv(_) => NfdoaStatus::Parse,
            Error::Io(_) => NfdoaStatus::Io,
        };
        Failure(status, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(NfdoaStatus::NullPointer, format!("{what} is null"))
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure(NfdoaStatus::InvalidArgument, msg.into())
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> NfdoaStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            NfdoaStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            NfdoaStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn slice<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn slice_mut<'a>(p: *mut f64, len: usize, what: &str) -> Result<&'a mut [f64], Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

fn to_complex(v: &[f64]) -> Vec<Complex64> {
    v.chunks_exact(2).map(|c| Complex64::new(c[0], c[1])).collect()
}

fn write_complex(src: &[Complex64], dst: &mut [f64]) {
    for (z, d) in src.iter().zip(dst.chunks_exact_mut(2)) {
        d[0] = z.re;
        d[1] = z.im;
    }
}

fn expect_len(len: usize, want: usize, what: &str) -> Result<(), Failure> {
    if len == want {
        Ok(())
    } else {
        Err(Failure(
            NfdoaStatus::Shape,
            format!("{what} has {len} doubles, expected {want}"),
        ))
    }
}

/// Message describing the last failure on this thread (empty after a
/// success). The pointer stays valid until the next call on this thread.
#[no_mangle]
pub extern "C" fn nfdoa_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Creates an `n`-element array with `spacing` in wavelengths and
/// `wavelength` in meters.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn nfdoa_array_new(
    n_elements: usize,
    spacing: f64,
    wavelength: f64,
    out: *mut *mut NfdoaArray,
) -> NfdoaStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let config = ArrayConfig::new(n_elements, spacing, wavelength)?;
        *out = Box::into_raw(Box::new(NfdoaArray { config }));
        Ok(())
    })
}

/// Releases an array; null is ignored.
///
/// # Safety
/// `array` must come from [`nfdoa_array_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn nfdoa_array_free(array: *mut NfdoaArray) {
    if !array.is_null() {
        drop(Box::from_raw(array));
    }
}

/// Number of elements, or 0 for a null handle.
///
/// # Safety
/// `array` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn nfdoa_array_len(array: *const NfdoaArray) -> usize {
    array.as_ref().map_or(0, |a| a.config.n_elements())
}

/// Exact near-field steering vector for angle `theta` (radians) and range
/// (wavelengths), written as `2 N` interleaved doubles.
///
/// # Safety
/// `out` must point to `out_len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn nfdoa_steering(
    array: *const NfdoaArray,
    theta: f64,
    range: f64,
    out: *mut f64,
    out_len: usize,
) -> NfdoaStatus {
    guard(|| {
        let array = deref(array, "array")?;
        let n = array.config.n_elements();
        expect_len(out_len, 2 * n, "steering output")?;
        let out = slice_mut(out, out_len, "out")?;
        let a = near_field_steering(&SourcePlacement::new(theta, range)?, &array.config);
        write_complex(&a, out);
        Ok(())
    })
}

/// Simulates `k` snapshots of one unit-power source at `(theta, range)` with
/// the given SNR (`INFINITY` for noiseless) and seed, written as a `2 N K`
/// row-major interleaved matrix.
///
/// # Safety
/// `out` must point to `out_len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn nfdoa_simulate(
    array: *const NfdoaArray,
    theta: f64,
    range: f64,
    k: usize,
    snr_db: f64,
    seed: u64,
    out: *mut f64,
    out_len: usize,
) -> NfdoaStatus {
    guard(|| {
        let array = deref(array, "array")?;
        expect_len(out_len, 2 * array.config.n_elements() * k, "snapshot output")?;
        let out = slice_mut(out, out_len, "out")?;
        let source = SourcePlacement::new(theta, range)?;
        let set = received_snapshots(&[source], &array.config, k, NoiseSpec::new(snr_db, seed))?;
        write_complex(set.data.as_slice(), out);
        Ok(())
    })
}

unsafe fn feature_of(array: &NfdoaArray, snapshots: *const f64, k: usize, n_in: usize) -> Result<Vec<Complex64>, Failure> {
    let n = array.config.n_elements();
    if k == 0 {
        return Err(invalid("snapshot count must be positive"));
    }
    let data = slice(snapshots, 2 * n * k, "snapshots")?;
    let m = nfdoa::cmat::CMatrix::from_row_major(n, k, to_complex(data))?;
    Ok(feature_from_covariance(&sample_covariance_of(&m)?, n_in)?)
}

/// Network input for `k` snapshots (`2 N K` doubles): the canonicalized
/// principal eigenvector of the virtual covariance cropped to `n_in`,
/// written as `2 n_in` doubles.
///
/// # Safety
/// `snapshots` must point to `2 N k` readable doubles and `out` to
/// `out_len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn nfdoa_feature(
    array: *const NfdoaArray,
    snapshots: *const f64,
    k: usize,
    n_in: usize,
    out: *mut f64,
    out_len: usize,
) -> NfdoaStatus {
    guard(|| {
        let array = deref(array, "array")?;
        expect_len(out_len, 2 * n_in, "feature output")?;
        let out = slice_mut(out, out_len, "out")?;
        write_complex(&feature_of(array, snapshots, k, n_in)?, out);
        Ok(())
    })
}

/// Loads a JSON checkpoint.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn nfdoa_model_load(path: *const c_char, out: *mut *mut NfdoaModel) -> NfdoaStatus {
    guard(|| {
        if path.is_null() {
            return Err(null("path"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let path = CStr::from_ptr(path)
            .to_str()
            .map_err(|_| invalid("path is not UTF-8"))?;
        let net = Checkpoint::load(Path::new(path))?.to_network()?;
        *out = Box::into_raw(Box::new(NfdoaModel { net }));
        Ok(())
    })
}

/// Builds an untrained complex residual network for `n_in`-length features,
/// initialized from `seed`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nfdoa_model_new_cvnn(n_in: usize, seed: u64, out: *mut *mut NfdoaModel) -> NfdoaStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        if n_in == 0 {
            return Err(invalid("n_in must be positive"));
        }
        let mut net = nfdoa::cvnn::cvnn(n_in)?;
        net.init_glorot(seed);
        *out = Box::into_raw(Box::new(NfdoaModel { net }));
        Ok(())
    })
}

/// Releases a model; null is ignored.
///
/// # Safety
/// `model` must come from a model constructor and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn nfdoa_model_free(model: *mut NfdoaModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Complex feature length the model expects, or 0 for a null handle.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn nfdoa_model_input_len(model: *const NfdoaModel) -> usize {
    model.as_ref().map_or(0, |m| {
        let s = m.net.input_shape();
        if s.complex {
            s.size()
        } else {
            s.size() / 2
        }
    })
}

/// Predicted angle (radians) for a feature of `2 n_in` doubles.
///
/// # Safety
/// `feature` must point to `len` readable doubles and `theta` be writable.
#[no_mangle]
pub unsafe extern "C" fn nfdoa_model_predict(
    model: *const NfdoaModel,
    feature: *const f64,
    len: usize,
    theta: *mut f64,
) -> NfdoaStatus {
    guard(|| {
        let model = deref(model, "model")?;
        if theta.is_null() {
            return Err(null("theta"));
        }
        let data = slice(feature, len, "feature")?;
        if !len.is_multiple_of(2) {
            return Err(Failure(NfdoaStatus::Shape, "feature length must be even".into()));
        }
        *theta = model.net.forward(&to_complex(data))?;
        Ok(())
    })
}

/// End-to-end estimate: feature extraction from `k` snapshots followed by
/// the network, angle in radians.
///
/// # Safety
/// `snapshots` must point to `2 N k` readable doubles and `theta` be writable.
#[no_mangle]
pub unsafe extern "C" fn nfdoa_estimate(
    array: *const NfdoaArray,
    model: *const NfdoaModel,
    snapshots: *const f64,
    k: usize,
    theta: *mut f64,
) -> NfdoaStatus {
    guard(|| {
        let array = deref(array, "array")?;
        let model = deref(model, "model")?;
        if theta.is_null() {
            return Err(null("theta"));
        }
        let n_in = nfdoa_model_input_len(model);
        *theta = model.net.forward(&feature_of(array, snapshots, k, n_in)?)?;
        Ok(())
    })
}

/// FLOPs of one forward pass of the complex network at `n_in`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nfdoa_cvnn_flops(n_in: usize, out: *mut u64) -> NfdoaStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = flops_count(&nfdoa::cvnn::cvnn(n_in)?);
        Ok(())
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn nfdoa_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

