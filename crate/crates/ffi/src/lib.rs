//! C ABI over the `solvbound` geometry kernels.
//!
//! Every function returns an [`SbStatus`]; results go through out-pointers. On failure the
//! message is kept per thread and can be copied out with [`sb_last_error_message`].

use std::cell::RefCell;
use std::ffi::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::slice;

use solvbound::boundary::{parabolic_quasimetric, VisualParams};
use solvbound::geometry::distance;
use solvbound::{BoundaryPoint, Error, GroupPoint, Spectrum};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SbStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidSpectrum = 2,
    DimensionMismatch = 3,
    InvalidArgument = 4,
    NoConvergence = 5,
    BufferTooSmall = 6,
    Panic = 7,
}

/// Opaque spectrum handle.
pub struct SbSpectrum {
    inner: Spectrum,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(e: &Error) -> SbStatus {
    match e {
        Error::EmptySpectrum
        | Error::NonIncreasingEigenvalues { .. }
        | Error::NonPositiveEigenvalue { .. }
        | Error::ZeroDimensionBlock { .. } => SbStatus::InvalidSpectrum,
        Error::DimensionMismatch { .. } => SbStatus::DimensionMismatch,
        Error::NoConvergence { .. } | Error::StepSizeUnderflow { .. } => SbStatus::NoConvergence,
        _ => SbStatus::InvalidArgument,
    }
}

fn guard<F: FnOnce() -> Result<(), SbStatus>>(f: F) -> SbStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SbStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("panic inside solvbound".into());
            SbStatus::Panic
        }
    }
}

fn lift<T>(r: solvbound::Result<T>) -> Result<T, SbStatus> {
    r.map_err(|e| {
        set_error(e.to_string());
        status_of(&e)
    })
}

fn null() -> SbStatus {
    set_error("null pointer argument".into());
    SbStatus::NullPointer
}

unsafe fn spec_ref<'a>(h: *const SbSpectrum) -> Result<&'a Spectrum, SbStatus> {
    h.as_ref().map(|s| &s.inner).ok_or_else(null)
}

unsafe fn coords<'a>(spec: &Spectrum, p: *const f64, len: usize) -> Result<&'a [f64], SbStatus> {
    if p.is_null() {
        return Err(null());
    }
    if len != spec.n() {
        set_error(format!("dimension mismatch: expected {}, got {len}", spec.n()));
        return Err(SbStatus::DimensionMismatch);
    }
    Ok(slice::from_raw_parts(p, len))
}

unsafe fn write<T>(out: *mut T, v: T) -> Result<(), SbStatus> {
    if out.is_null() {
        return Err(null());
    }
    *out = v;
    Ok(())
}

/// Builds a spectrum from `len` blocks `(dims[i], alphas[i])`; free with [`sb_spectrum_free`].
///
/// # Safety
/// `dims` and `alphas` must point to `len` readable values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sb_spectrum_new(
    dims: *const usize,
    alphas: *const f64,
    len: usize,
    out: *mut *mut SbSpectrum,
) -> SbStatus {
    guard(|| {
        if dims.is_null() || alphas.is_null() || out.is_null() {
            return Err(null());
        }
        let pairs: Vec<(usize, f64)> =
            slice::from_raw_parts(dims, len).iter().copied().zip(slice::from_raw_parts(alphas, len).iter().copied()).collect();
        let inner = lift(Spectrum::new(&pairs))?;
        *out = Box::into_raw(Box::new(SbSpectrum { inner }));
        Ok(())
    })
}

/// # Safety
/// `spec` must come from [`sb_spectrum_new`] and not be used afterwards. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn sb_spectrum_free(spec: *mut SbSpectrum) {
    if !spec.is_null() {
        drop(Box::from_raw(spec));
    }
}

/// Ambient dimension `n` and homogeneous dimension `Q`.
///
/// # Safety
/// `spec` must be a live handle; `n` and `q` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sb_spectrum_dims(spec: *const SbSpectrum, n: *mut usize, q: *mut f64) -> SbStatus {
    guard(|| {
        let s = spec_ref(spec)?;
        write(n, s.n())?;
        write(q, s.q())
    })
}

#[derive(Clone, Copy)]
enum Quasi {
    D,
    Ds,
    De,
}

unsafe fn boundary_distance(
    which: Quasi,
    spec: *const SbSpectrum,
    x: *const f64,
    y: *const f64,
    len: usize,
    out: *mut f64,
) -> SbStatus {
    guard(|| {
        let s = spec_ref(spec)?;
        let (a, b) = (coords(s, x, len)?, coords(s, y, len)?);
        let v = match which {
            Quasi::D => s.dist_d(a, b),
            Quasi::Ds => s.dist_ds(a, b),
            Quasi::De => s.dist_de(a, b),
        };
        write(out, lift(v)?)
    })
}

/// Boundary metric `D(x, y)`.
///
/// # Safety
/// `x` and `y` must point to `len` values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sb_dist_d(spec: *const SbSpectrum, x: *const f64, y: *const f64, len: usize, out: *mut f64) -> SbStatus {
    boundary_distance(Quasi::D, spec, x, y, len, out)
}

/// # Safety
/// As for [`sb_dist_d`].
#[no_mangle]
pub unsafe extern "C" fn sb_dist_ds(spec: *const SbSpectrum, x: *const f64, y: *const f64, len: usize, out: *mut f64) -> SbStatus {
    boundary_distance(Quasi::Ds, spec, x, y, len, out)
}

/// # Safety
/// As for [`sb_dist_d`].
#[no_mangle]
pub unsafe extern "C" fn sb_dist_de(spec: *const SbSpectrum, x: *const f64, y: *const f64, len: usize, out: *mut f64) -> SbStatus {
    boundary_distance(Quasi::De, spec, x, y, len, out)
}

/// Lebesgue measure of a `D`-ball of the given radius.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sb_ball_measure(spec: *const SbSpectrum, radius: f64, out: *mut f64) -> SbStatus {
    guard(|| {
        let s = spec_ref(spec)?;
        write(out, lift(s.ball_measure(radius))?)
    })
}

/// Riemannian distance between `(px, pt)` and `(qx, qt)`.
///
/// # Safety
/// `px` and `qx` must point to `len` values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sb_distance(
    spec: *const SbSpectrum,
    px: *const f64,
    pt: f64,
    qx: *const f64,
    qt: f64,
    len: usize,
    out: *mut f64,
) -> SbStatus {
    guard(|| {
        let s = spec_ref(spec)?;
        let p = GroupPoint::new(coords(s, px, len)?.to_vec(), pt);
        let q = GroupPoint::new(coords(s, qx, len)?.to_vec(), qt);
        write(out, lift(distance(s, &p, &q))?.distance)
    })
}

/// Parabolic visual quasimetric at `xi_0` seen from `(base_x, base_t)`.
///
/// # Safety
/// `base_x`, `a` and `b` must point to `len` values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sb_parabolic(
    spec: *const SbSpectrum,
    base_x: *const f64,
    base_t: f64,
    epsilon: f64,
    a: *const f64,
    b: *const f64,
    len: usize,
    out: *mut f64,
) -> SbStatus {
    guard(|| {
        let s = spec_ref(spec)?;
        let base = GroupPoint::new(coords(s, base_x, len)?.to_vec(), base_t);
        let params = VisualParams { xi: BoundaryPoint::Xi0, base, epsilon };
        write(out, lift(parabolic_quasimetric(s, &params, coords(s, a, len)?, coords(s, b, len)?))?)
    })
}

/// Copies the calling thread's last error message, NUL-terminated, into `buf`.
/// `needed` receives the buffer size required, terminator included.
///
/// # Safety
/// `buf` must hold `cap` writable bytes (may be null when `cap` is 0); `needed` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sb_last_error_message(buf: *mut c_char, cap: usize, needed: *mut usize) -> SbStatus {
    let msg = LAST_ERROR.with(|e| e.borrow().clone());
    let bytes = msg.as_bytes();
    if needed.is_null() {
        return SbStatus::NullPointer;
    }
    *needed = bytes.len() + 1;
    if cap < bytes.len() + 1 {
        return SbStatus::BufferTooSmall;
    }
    if buf.is_null() {
        return SbStatus::NullPointer;
    }
    std::ptr::copy_nonoverlapping(bytes.as_ptr() as *const c_char, buf, bytes.len());
    *buf.add(bytes.len()) = 0;
    SbStatus::Ok
}
