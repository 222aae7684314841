//! C ABI over `klchernoff`.
//!
//! Handles are opaque pointers created by a `*_new` function and released
//! with the matching `*_free`. Every fallible call returns a [`KlcStatus`];
//! results are written through out-pointers only on success. The message of
//! the most recent failure on the calling thread is available from
//! [`klc_last_error_message`]. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use klchernoff::inversion::{coord_upper_bound, critical_value_with, unseen_upper_bound};
use klchernoff::{Error, ExperimentShape, FrequencyTable, Method, ProbVector, TailBounds};

/// Status codes returned by every fallible function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KlcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidShape = 2,
    /// `lambda`, `t`, `alpha` or a coordinate outside its domain
    OutOfDomain = 3,
    /// an argument is not a valid method, probability vector or table
    InvalidArgument = 4,
    /// plug-in method requested with `t <= k - 1`
    BelowCorrectionDomain = 5,
    SearchFailed = 6,
    Panic = 255,
}

/// Bound methods, passed as `int32_t`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KlcMethod {
    Exact = 0,
    Corrected = 1,
    Uncorrected = 2,
    LambdaOne = 3,
    Types = 4,
    Mardia = 5,
    AgrawalLimit = 6,
    /// reference curve, not a guaranteed bound
    AsympGamma = 7,
}

impl KlcMethod {
    fn from_raw(raw: i32) -> Option<Method> {
        Some(match raw {
            0 => Method::Exact,
            1 => Method::Corrected,
            2 => Method::Uncorrected,
            3 => Method::LambdaOne,
            4 => Method::Types,
            5 => Method::Mardia,
            6 => Method::AgrawalLimit,
            7 => Method::AsympGamma,
            _ => return None,
        })
    }
}

/// One bound value. `lambda_used` is NaN for methods without a λ.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KlcBound {
    pub value: f64,
    pub log_value: f64,
    pub lambda_used: f64,
    pub meaningful: bool,
}

/// Opaque handle: the polynomial and every bound for one `(k, n)`.
pub struct KlcBounds {
    inner: TailBounds,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> KlcStatus {
    match err {
        Error::InvalidShape { .. } => KlcStatus::InvalidShape,
        Error::LambdaOutOfRange(..)
        | Error::InvalidThreshold(_)
        | Error::InvalidAlpha(_)
        | Error::CoordOutOfRange { .. } => KlcStatus::OutOfDomain,
        Error::BelowCorrectionDomain { .. } => KlcStatus::BelowCorrectionDomain,
        Error::SearchFailed(_) => KlcStatus::SearchFailed,
        Error::NotABound(_)
        | Error::InvalidProbVector(_)
        | Error::LengthMismatch { .. }
        | Error::EnumerationTooLarge { .. }
        | Error::NoSamples
        | Error::Data(_) => KlcStatus::InvalidArgument,
    }
}

struct Fail(KlcStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null_pointer(what: &str) -> Fail {
    Fail(KlcStatus::NullPointer, format!("`{what}` is null"))
}

/// Runs `f`, recording any error or panic and mapping it to a status.
fn guard<F: FnOnce() -> Result<(), Fail>>(f: F) -> KlcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => KlcStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_last_error(&msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "internal panic".into());
            set_last_error(&msg);
            KlcStatus::Panic
        }
    }
}

/// # Safety
/// `ptr` must be null or valid for a write of `T`.
unsafe fn write_out<T>(ptr: *mut T, value: T, what: &str) -> Result<(), Fail> {
    if ptr.is_null() {
        return Err(null_pointer(what));
    }
    ptr.write(value);
    Ok(())
}

/// # Safety
/// `ptr` must be null or point to a live handle from [`klc_bounds_new`].
unsafe fn handle<'a>(ptr: *const KlcBounds) -> Result<&'a TailBounds, Fail> {
    ptr.as_ref()
        .map(|h| &h.inner)
        .ok_or_else(|| null_pointer("bounds"))
}

/// # Safety
/// `ptr` must be null (only when `len == 0`) or valid for `len` reads.
unsafe fn slice<'a, T>(ptr: *const T, len: usize, what: &str) -> Result<&'a [T], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if ptr.is_null() {
        return Err(null_pointer(what));
    }
    Ok(std::slice::from_raw_parts(ptr, len))
}

fn method(raw: i32) -> Result<Method, Fail> {
    KlcMethod::from_raw(raw).ok_or_else(|| {
        Fail(
            KlcStatus::InvalidArgument,
            format!("unknown method code {raw}"),
        )
    })
}

/// Builds the handle for alphabet size `k >= 2` and sample size `n >= 1`.
///
/// # Safety
/// `out` must be valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn klc_bounds_new(k: usize, n: usize, out: *mut *mut KlcBounds) -> KlcStatus {
    guard(|| {
        if out.is_null() {
            return Err(null_pointer("out"));
        }
        let inner = TailBounds::new(ExperimentShape::for_bounds(k, n)?)?;
        out.write(Box::into_raw(Box::new(KlcBounds { inner })));
        Ok(())
    })
}

/// Releases a handle. Null is a no-op.
///
/// # Safety
/// `bounds` must be null or a handle from [`klc_bounds_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn klc_bounds_free(bounds: *mut KlcBounds) {
    if !bounds.is_null() {
        drop(Box::from_raw(bounds));
    }
}

/// # Safety
/// `bounds` must be a live handle; `k` and `n` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn klc_bounds_shape(
    bounds: *const KlcBounds,
    k: *mut usize,
    n: *mut usize,
) -> KlcStatus {
    guard(|| {
        let s = handle(bounds)?.shape();
        write_out(k, s.k(), "k")?;
        write_out(n, s.n(), "n")
    })
}

/// `G_{k,n}(λ)` for `λ ∈ [0, 1]`.
///
/// # Safety
/// `bounds` must be a live handle; `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn klc_gkn_eval(
    bounds: *const KlcBounds,
    lambda: f64,
    out: *mut f64,
) -> KlcStatus {
    guard(|| {
        let v = handle(bounds)?.evaluator().eval(lambda)?;
        write_out(out, v, "out")
    })
}

/// `ln G_{k,n}(λ)`.
///
/// # Safety
/// `bounds` must be a live handle; `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn klc_gkn_ln_eval(
    bounds: *const KlcBounds,
    lambda: f64,
    out: *mut f64,
) -> KlcStatus {
    guard(|| {
        let v = handle(bounds)?.evaluator().ln_eval(lambda)?;
        write_out(out, v, "out")
    })
}

/// `G'_{k,n}(λ)`.
///
/// # Safety
/// `bounds` must be a live handle; `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn klc_gkn_eval_deriv(
    bounds: *const KlcBounds,
    lambda: f64,
    out: *mut f64,
) -> KlcStatus {
    guard(|| {
        let v = handle(bounds)?.evaluator().eval_deriv(lambda)?;
        write_out(out, v, "out")
    })
}

/// `min(ln G_{k,n}(1), k - 1)`; the exact bound is below 1 beyond it.
///
/// # Safety
/// `bounds` must be a live handle; `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn klc_meaningful_threshold(
    bounds: *const KlcBounds,
    out: *mut f64,
) -> KlcStatus {
    guard(|| write_out(out, handle(bounds)?.meaningful_threshold(), "out"))
}

/// Upper bound on `P(n·D(p̂‖p) > t)` by `method` (a [`KlcMethod`] code).
///
/// # Safety
/// `bounds` must be a live handle; `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn klc_bound(
    bounds: *const KlcBounds,
    method_code: i32,
    t: f64,
    out: *mut KlcBound,
) -> KlcStatus {
    guard(|| {
        let r = handle(bounds)?.evaluate(method(method_code)?, t)?;
        let b = KlcBound {
            value: r.value,
            log_value: r.log_value,
            lambda_used: r.lambda_used.unwrap_or(f64::NAN),
            meaningful: r.meaningful,
        };
        write_out(out, b, "out")
    })
}

/// Deviation level `t` at which `method` equals `alpha ∈ (0, 1)`.
///
/// # Safety
/// `bounds` must be a live handle; `out_t` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn klc_critical_value(
    bounds: *const KlcBounds,
    alpha: f64,
    method_code: i32,
    out_t: *mut f64,
) -> KlcStatus {
    guard(|| {
        let t = critical_value_with(handle(bounds)?, alpha, method(method_code)?)?;
        write_out(out_t, t, "out_t")
    })
}

/// Largest probability of category `coord` (1-based) on the KL ball of
/// radius `t / n` around the empirical distribution of `counts`.
///
/// # Safety
/// `counts` must be valid for `k` reads; `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn klc_coord_upper_bound(
    counts: *const u64,
    k: usize,
    coord: usize,
    t: f64,
    out: *mut f64,
) -> KlcStatus {
    guard(|| {
        let counts = slice(counts, k, "counts")?;
        let n: u64 = counts.iter().sum();
        let shape = ExperimentShape::for_bounds(k, n as usize)?;
        let phat = ProbVector::from_counts(counts)?;
        let ci = coord_upper_bound(&phat, shape, coord, t)?;
        write_out(out, ci.upper, "out")
    })
}

/// Upper confidence bound at level `1 - alpha` on the total mass of unseen
/// categories, from `len` `(frequency, species)` pairs. Writes the critical
/// value to `out_t` when it is non-null.
///
/// # Safety
/// `frequency` and `species` must be valid for `len` reads; `out_upper`
/// valid for a write; `out_t` null or valid for a write.
#[no_mangle]
pub unsafe extern "C" fn klc_unseen_upper_bound(
    frequency: *const u64,
    species: *const u64,
    len: usize,
    alpha: f64,
    out_t: *mut f64,
    out_upper: *mut f64,
) -> KlcStatus {
    guard(|| {
        let f = slice(frequency, len, "frequency")?;
        let s = slice(species, len, "species")?;
        if out_upper.is_null() {
            return Err(null_pointer("out_upper"));
        }
        let table = FrequencyTable::from_pairs(f.iter().copied().zip(s.iter().copied()))?;
        let ci = unseen_upper_bound(&table, alpha)?;
        if !out_t.is_null() {
            out_t.write(ci.t_used);
        }
        out_upper.write(ci.upper);
        Ok(())
    })
}

/// Static description of a [`KlcStatus`] code, passed as `int32_t`.
#[no_mangle]
pub extern "C" fn klc_status_string(status: i32) -> *const c_char {
    let s: &'static [u8] = match status {
        0 => b"ok\0",
        1 => b"null pointer argument\0",
        2 => b"invalid (k, n)\0",
        3 => b"argument outside its domain\0",
        4 => b"invalid argument\0",
        5 => b"plug-in bound needs t > k - 1\0",
        6 => b"numerical search failed\0",
        255 => b"internal error\0",
        _ => b"unknown status\0",
    };
    s.as_ptr().cast()
}

/// Copies the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len` bytes) and returns the full message length without
/// the terminator; 0 when there is no message. Pass a null `buf` to query
/// the length.
///
/// # Safety
/// `buf` must be null or valid for `len` byte writes.
#[no_mangle]
pub unsafe extern "C" fn klc_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let Some(msg) = e.as_ref() else {
            if !buf.is_null() && len > 0 {
                buf.write(0);
            }
            return 0;
        };
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let copy = bytes.len().min(len - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr().cast::<c_char>(), buf, copy);
            buf.add(copy).write(0);
        }
        bytes.len()
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn method_codes_cover_every_method() {
        for (i, m) in Method::ALL.iter().enumerate() {
            assert_eq!(KlcMethod::from_raw(i as i32), Some(*m));
        }
        assert_eq!(KlcMethod::from_raw(8), None);
        assert_eq!(KlcMethod::from_raw(-1), None);
    }

    #[test]
    fn panics_become_status() {
        let s = guard(|| panic!("boom"));
        assert_eq!(s, KlcStatus::Panic);
        let mut buf = [0 as c_char; 16];
        let len = unsafe { klc_last_error_message(buf.as_mut_ptr(), buf.len()) };
        assert_eq!(len, 4);
    }
}
