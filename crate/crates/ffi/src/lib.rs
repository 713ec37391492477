//! C interface to `ncpnorm`.
//!
//! Every function returns an [`NcpStatus`]; results go through out-pointers.
//! On failure the message of the last error on the calling thread is
//! available from [`ncp_last_error`]. Matrices and families are opaque
//! handles owned by the caller and released with the matching `_free`.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use ncpnorm::algebra::{schatten_p_norm, word_trace, ComplexMatrix, StarWord};
use ncpnorm::gadget::{self, GadgetFamily, GadgetKind, VerifyMode};
use ncpnorm::reconstruct::{estimate_word_moment, PlanTemplate};
use ncpnorm::Error;
use num_complex::Complex64;

/// Result codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NcpStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    NonFinite = 4,
    NotHermitian = 5,
    GuardExceeded = 6,
    NonConvergence = 7,
    ZeroCoefficient = 8,
    PreconditionFailed = 9,
    Parse = 10,
    Panic = 11,
    Other = 12,
}

impl From<&Error> for NcpStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::NonSquare { .. }
            | Error::DimensionMismatch { .. }
            | Error::ShapeMismatch(_)
            | Error::IndexOutOfRange { .. } => Self::DimensionMismatch,
            Error::NonFinite => Self::NonFinite,
            Error::NotHermitian { .. } => Self::NotHermitian,
            Error::GuardExceeded { .. } | Error::ExhaustiveCap { .. } => Self::GuardExceeded,
            Error::NonConvergence { .. } => Self::NonConvergence,
            Error::ZeroCoefficient { .. } | Error::LambdaZero { .. } => Self::ZeroCoefficient,
            Error::PreconditionFailed { .. } => Self::PreconditionFailed,
            Error::Parse(_) => Self::Parse,
            Error::InvalidExponent(_)
            | Error::InvalidArgument(_)
            | Error::EmptyPattern
            | Error::RadiusTooLarge { .. } => Self::InvalidArgument,
            _ => Self::Other,
        }
    }
}

/// Opaque square complex matrix.
pub struct NcpMatrix(ComplexMatrix);

/// Opaque ordered list of matrices of a common size.
pub struct NcpFamily(Vec<ComplexMatrix>);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

struct Fail(NcpStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(NcpStatus::from(&e), e.to_string())
    }
}

fn null() -> Fail {
    Fail(NcpStatus::NullPointer, "null pointer argument".into())
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> NcpStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            NcpStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(&format!("internal panic: {msg}"));
            NcpStatus::Panic
        }
    }
}

unsafe fn out<'a, T>(p: *mut T) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(null)
}

unsafe fn word_arg(word: *const c_char) -> Result<StarWord, Fail> {
    if word.is_null() {
        return Err(null());
    }
    let s = CStr::from_ptr(word)
        .to_str()
        .map_err(|_| Fail(NcpStatus::Parse, "word is not UTF-8".into()))?;
    Ok(s.parse()?)
}

/// Message of the last failed call on this thread ("" after a success).
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn ncp_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ncp_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Builds a `dim × dim` matrix from row-major real and imaginary parts;
/// `im` may be null for a real matrix.
#[no_mangle]
pub unsafe extern "C" fn ncp_matrix_new(dim: usize, re: *const f64, im: *const f64, result: *mut *mut NcpMatrix) -> NcpStatus {
    guard(|| {
        let slot = out(result)?;
        if re.is_null() {
            return Err(null());
        }
        let len = dim.checked_mul(dim).ok_or_else(|| Fail(NcpStatus::InvalidArgument, "dimension overflow".into()))?;
        let re = std::slice::from_raw_parts(re, len);
        let data: Vec<Complex64> = if im.is_null() {
            re.iter().map(|&r| Complex64::new(r, 0.0)).collect()
        } else {
            let im = std::slice::from_raw_parts(im, len);
            re.iter().zip(im).map(|(&r, &i)| Complex64::new(r, i)).collect()
        };
        let m = ComplexMatrix::from_vec(dim, data)?;
        if !m.is_finite() {
            return Err(Error::NonFinite.into());
        }
        *slot = Box::into_raw(Box::new(NcpMatrix(m)));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn ncp_matrix_free(m: *mut NcpMatrix) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

#[no_mangle]
pub unsafe extern "C" fn ncp_matrix_dim(m: *const NcpMatrix, result: *mut usize) -> NcpStatus {
    guard(|| {
        let m = m.as_ref().ok_or_else(null)?;
        *out(result)? = m.0.dim();
        Ok(())
    })
}

/// Entry `(i, j)`, 0-based.
#[no_mangle]
pub unsafe extern "C" fn ncp_matrix_get(m: *const NcpMatrix, i: usize, j: usize, re: *mut f64, im: *mut f64) -> NcpStatus {
    guard(|| {
        let m = m.as_ref().ok_or_else(null)?;
        let d = m.0.dim();
        if i >= d || j >= d {
            return Err(Error::IndexOutOfRange { index: i.max(j), len: d }.into());
        }
        let z = m.0[(i, j)];
        *out(re)? = z.re;
        *out(im)? = z.im;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn ncp_normalized_trace(m: *const NcpMatrix, re: *mut f64, im: *mut f64) -> NcpStatus {
    guard(|| {
        let m = m.as_ref().ok_or_else(null)?;
        let z = m.0.normalized_trace();
        *out(re)? = z.re;
        *out(im)? = z.im;
        Ok(())
    })
}

/// Normalized Schatten p-norm, `p > 0`.
#[no_mangle]
pub unsafe extern "C" fn ncp_schatten_norm(m: *const NcpMatrix, p: f64, result: *mut f64) -> NcpStatus {
    guard(|| {
        let m = m.as_ref().ok_or_else(null)?;
        *out(result)? = schatten_p_norm(&m.0, p)?;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn ncp_family_new(result: *mut *mut NcpFamily) -> NcpStatus {
    guard(|| {
        *out(result)? = Box::into_raw(Box::new(NcpFamily(Vec::new())));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn ncp_family_free(f: *mut NcpFamily) {
    if !f.is_null() {
        drop(Box::from_raw(f));
    }
}

/// Appends a copy of `m`; all members must share one dimension.
#[no_mangle]
pub unsafe extern "C" fn ncp_family_push(f: *mut NcpFamily, m: *const NcpMatrix) -> NcpStatus {
    guard(|| {
        let f = f.as_mut().ok_or_else(null)?;
        let m = m.as_ref().ok_or_else(null)?;
        if let Some(first) = f.0.first() {
            if first.dim() != m.0.dim() {
                return Err(Error::DimensionMismatch {
                    expected: first.dim(),
                    found: m.0.dim(),
                }
                .into());
            }
        }
        f.0.push(m.0.clone());
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn ncp_family_len(f: *const NcpFamily, result: *mut usize) -> NcpStatus {
    guard(|| {
        let f = f.as_ref().ok_or_else(null)?;
        *out(result)? = f.0.len();
        Ok(())
    })
}

/// `τ(word)` for a word such as `"1*,2"` (1-based indices).
#[no_mangle]
pub unsafe extern "C" fn ncp_word_trace(f: *const NcpFamily, word: *const c_char, re: *mut f64, im: *mut f64) -> NcpStatus {
    guard(|| {
        let f = f.as_ref().ok_or_else(null)?;
        let w = word_arg(word)?;
        let z = word_trace(&f.0, &w)?;
        *out(re)? = z.re;
        *out(im)? = z.im;
        Ok(())
    })
}

/// Recovers `τ(word)` from Schatten p-norms only; `residual` (nullable)
/// receives the extrapolation residual.
#[no_mangle]
pub unsafe extern "C" fn ncp_estimate_moment(
    f: *const NcpFamily,
    word: *const c_char,
    p: f64,
    re: *mut f64,
    im: *mut f64,
    residual: *mut f64,
) -> NcpStatus {
    guard(|| {
        let f = f.as_ref().ok_or_else(null)?;
        let w = word_arg(word)?;
        let est = estimate_word_moment(&f.0, &w, p, &PlanTemplate::default())?;
        *out(re)? = est.value.re;
        *out(im)? = est.value.im;
        if let Some(r) = residual.as_mut() {
            *r = est.residual;
        }
        Ok(())
    })
}

/// Weight of a moment with `n` letters and statistic `alpha` in the p-norm
/// expansion.
#[no_mangle]
pub unsafe extern "C" fn ncp_moment_coefficient(p: f64, n: usize, alpha: usize, result: *mut f64) -> NcpStatus {
    guard(|| {
        *out(result)? = ncpnorm::binomial::moment_coefficient(p, n, alpha)?;
        Ok(())
    })
}

/// Exhaustive cyclic-trace check; `kind` 0 is the full cycle, 1 the compact
/// family.
#[no_mangle]
pub unsafe extern "C" fn ncp_gadget_verify(kind: u32, n: usize, max_deviation: *mut f64, pass: *mut bool) -> NcpStatus {
    guard(|| {
        let kind = match kind {
            0 => GadgetKind::Full,
            1 => GadgetKind::Compact,
            k => return Err(Fail(NcpStatus::InvalidArgument, format!("unknown gadget kind {k}"))),
        };
        let fam = GadgetFamily::build(kind, n)?;
        let r = gadget::verify_cyclic_trace(&fam, VerifyMode::Exhaustive, gadget::DEFAULT_TOLERANCE)?;
        *out(max_deviation)? = r.max_deviation;
        *out(pass)? = r.pass;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn ncp_psi(t: f64, p: f64, result: *mut f64) -> NcpStatus {
    guard(|| {
        *out(result)? = ncpnorm::corner::psi_eval(t, p)?;
        Ok(())
    })
}

/// `‖1 + Σ a_j ⊗ x_j‖_{2m}^{2m}` through its finite word expansion.
#[no_mangle]
pub unsafe extern "C" fn ncp_expand_even_norm(
    coeffs: *const NcpFamily,
    elements: *const NcpFamily,
    m: usize,
    result: *mut f64,
) -> NcpStatus {
    guard(|| {
        let a = coeffs.as_ref().ok_or_else(null)?;
        let x = elements.as_ref().ok_or_else(null)?;
        *out(result)? = ncpnorm::evenp::expand_even_norm(&a.0, &x.0, m)?;
        Ok(())
    })
}
