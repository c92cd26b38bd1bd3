//! C ABI for `decolab`.
//!
//! Every function returns a [`DecolabStatus`]; results are written through
//! out-pointers. After a non-OK status, [`decolab_last_error`] copies a
//! message describing the failure on the calling thread.

// `!(x >= 0.0)` is used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use decolab::continuous::{de_plane_wave_erf_z, de_plane_wave_reduction_z, gaussian_position_de, GaussianPositionParams};
use decolab::mach_zehnder::TwoPathDensity;
use decolab::spin_boson::{de_analytic, SpinBosonParams};
use decolab::{decoherence_finite, purity, validate_density, DensityMatrix, Error, Tolerances};
use num_complex::Complex64;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecolabStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidDensity = 3,
    NumericalFailure = 4,
    Unsupported = 5,
    Panic = 6,
}

/// Opaque handle to a validated density matrix.
pub struct DecolabDensity {
    inner: DensityMatrix,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn status_of(err: &Error) -> DecolabStatus {
    match err {
        Error::InvalidDensity(_) | Error::InvalidState(_) | Error::Unphysical(_) => DecolabStatus::InvalidDensity,
        Error::DimensionMismatch { .. } | Error::DimensionTooSmall(_) | Error::InvalidParameter(_) => DecolabStatus::InvalidArgument,
        Error::Unsupported(_) | Error::SizeCapExceeded { .. } => DecolabStatus::Unsupported,
        _ => DecolabStatus::NumericalFailure,
    }
}

fn guard<F>(f: F) -> DecolabStatus
where
    F: FnOnce() -> Result<(), (DecolabStatus, String)>,
{
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => DecolabStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            DecolabStatus::Panic
        }
    }
}

fn lift(err: Error) -> (DecolabStatus, String) {
    (status_of(&err), err.to_string())
}

fn null(name: &str) -> (DecolabStatus, String) {
    (DecolabStatus::NullPointer, format!("{name} is null"))
}

fn write_out(out: *mut f64, value: f64) -> Result<(), (DecolabStatus, String)> {
    if out.is_null() {
        return Err(null("out"));
    }
    // SAFETY: checked non-null; the caller guarantees it points to a writable f64.
    unsafe { *out = value };
    Ok(())
}

/// Copies the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len` bytes). Returns the full message length excluding the
/// terminator, or 0 if there is none.
///
/// # Safety
/// `buf` must be null or point to at least `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn decolab_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let borrowed = e.borrow();
        let Some(msg) = borrowed.as_ref() else {
            return 0;
        };
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            // SAFETY: caller guarantees `len` writable bytes at `buf`.
            unsafe {
                ptr::copy_nonoverlapping(bytes.as_ptr() as *const c_char, buf, n);
                *buf.add(n) = 0;
            }
        }
        bytes.len()
    })
}

/// Creates a density matrix from `2·n·n` doubles holding interleaved real and
/// imaginary parts in row-major order. The matrix must be Hermitian, unit
/// trace and positive semidefinite within default tolerances.
///
/// # Safety
/// `data` must point to `2·n·n` readable doubles and `out` to a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn decolab_density_new(n: usize, data: *const f64, out: *mut *mut DecolabDensity) -> DecolabStatus {
    guard(|| {
        if data.is_null() {
            return Err(null("data"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let len = n.checked_mul(n).and_then(|m| m.checked_mul(2)).ok_or((DecolabStatus::InvalidArgument, "n too large".into()))?;
        // SAFETY: caller guarantees `len` readable doubles.
        let raw = unsafe { std::slice::from_raw_parts(data, len) };
        let entries: Vec<Complex64> = raw.chunks_exact(2).map(|c| Complex64::new(c[0], c[1])).collect();
        let rho = DensityMatrix::from_row_major(n, &entries).map_err(lift)?;
        let report = validate_density(&rho, &Tolerances::default());
        if !report.is_valid() {
            return Err((DecolabStatus::InvalidDensity, report.to_string()));
        }
        let handle = Box::into_raw(Box::new(DecolabDensity { inner: rho }));
        // SAFETY: checked non-null.
        unsafe { *out = handle };
        Ok(())
    })
}

/// Releases a handle from [`decolab_density_new`]. Null is ignored.
///
/// # Safety
/// `handle` must be null or a live handle not freed before.
#[no_mangle]
pub unsafe extern "C" fn decolab_density_free(handle: *mut DecolabDensity) {
    if !handle.is_null() {
        // SAFETY: caller passes a pointer obtained from Box::into_raw.
        drop(unsafe { Box::from_raw(handle) });
    }
}

fn with_density<F>(handle: *const DecolabDensity, f: F) -> DecolabStatus
where
    F: FnOnce(&DensityMatrix) -> Result<(), (DecolabStatus, String)>,
{
    guard(|| {
        if handle.is_null() {
            return Err(null("handle"));
        }
        // SAFETY: caller guarantees a live handle.
        f(unsafe { &(*handle).inner })
    })
}

/// # Safety
/// `handle` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn decolab_density_dim(handle: *const DecolabDensity, out: *mut usize) -> DecolabStatus {
    with_density(handle, |rho| {
        if out.is_null() {
            return Err(null("out"));
        }
        // SAFETY: checked non-null.
        unsafe { *out = rho.dim() };
        Ok(())
    })
}

/// `tr ρ²`.
///
/// # Safety
/// `handle` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn decolab_density_purity(handle: *const DecolabDensity, out: *mut f64) -> DecolabStatus {
    with_density(handle, |rho| write_out(out, purity(rho).map_err(lift)?))
}

/// `n/(n−1) (1 − tr ρ²)`; fails for `n = 1`.
///
/// # Safety
/// `handle` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn decolab_density_decoherence(handle: *const DecolabDensity, out: *mut f64) -> DecolabStatus {
    with_density(handle, |rho| write_out(out, decoherence_finite(rho).map_err(lift)?))
}

/// `1 − e^{−4γt}` for the dephasing qubit.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn decolab_spin_boson_de(gamma: f64, t: f64, out: *mut f64) -> DecolabStatus {
    guard(|| {
        let p = SpinBosonParams::equal_superposition(0.0, gamma).map_err(lift)?;
        if !(t >= 0.0) {
            return Err((DecolabStatus::InvalidArgument, format!("t must be non-negative, got {t}")));
        }
        write_out(out, de_analytic(&p, t))
    })
}

/// `1 − 1/sqrt(1 + t/τ_D)` with `τ_D = 1/(8 m γ T σ²)`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn decolab_gaussian_position_de(sigma: f64, mass: f64, temperature: f64, gamma: f64, t: f64, out: *mut f64) -> DecolabStatus {
    guard(|| {
        let p = GaussianPositionParams::new(sigma, mass, temperature, gamma).map_err(lift)?;
        write_out(out, gaussian_position_de(&p, t).map_err(lift)?)
    })
}

/// Plane-wave erf closed form at `z = sqrt(2σ) L`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn decolab_plane_wave_de_erf(z: f64, out: *mut f64) -> DecolabStatus {
    guard(|| {
        if !(z >= 0.0) {
            return Err((DecolabStatus::InvalidArgument, format!("z must be non-negative, got {z}")));
        }
        write_out(out, de_plane_wave_erf_z(z))
    })
}

/// Exact plane-wave measure at `z = sqrt(2σ) L`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn decolab_plane_wave_de_exact(z: f64, out: *mut f64) -> DecolabStatus {
    guard(|| {
        if !(z >= 0.0) {
            return Err((DecolabStatus::InvalidArgument, format!("z must be non-negative, got {z}")));
        }
        write_out(out, de_plane_wave_reduction_z(z))
    })
}

/// `2(1 − ρ11² − ρ22² − 2c²)` of a physical two-path state.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn decolab_two_path_de(rho11: f64, rho22: f64, coherence: f64, out: *mut f64) -> DecolabStatus {
    guard(|| {
        let rho = TwoPathDensity::new(rho11, rho22, coherence, 0.0).map_err(lift)?;
        write_out(out, rho.de())
    })
}
