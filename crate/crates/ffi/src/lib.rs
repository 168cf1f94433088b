//! C interface to `privtopk`.
//!
//! Objects cross the boundary as opaque handles created by `*_new`
//! functions and released with the matching `*_free`. Every fallible call
//! returns a [`PtkStatus`]; on failure, [`ptk_last_error`] describes the
//! problem for the calling thread. Item ids are 1-based, as in the Rust
//! API. A call given seed `s` uses the same random stream as trial 0 of
//! `privtopk run --seed s`, so results can be cross-checked.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use privtopk::rng::{trial_stream, TrialRng};
use privtopk::{
    exponential_mechanism, gumbel_privacy_params, laplace_privacy_params, oneshot_private_topk,
    private_threshold_topk, Error, Histogram, ItemId, LazyNoiseArray, Mode, NoiseKind, NoiseSpec, TopKOutcome,
};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PtkStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    OutOfRange = 3,
    Exhausted = 4,
    Io = 5,
    Parse = 6,
    /// A Rust panic was caught at the boundary.
    Internal = 7,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PtkNoiseKind {
    Laplace = 0,
    Gumbel = 1,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PtkMode {
    Eager = 0,
    Lazy = 1,
}

/// Accesses performed by one query.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct PtkCost {
    /// Accesses to the histogram.
    pub histogram: u64,
    /// Accesses to every list, including noise.
    pub total: u64,
}

/// Opaque histogram handle.
pub struct PtkHistogram {
    inner: Histogram,
}

/// Opaque lazily sampled sorted noise array.
pub struct PtkNoiseOracle {
    inner: LazyNoiseArray<TrialRng>,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let text = CString::new(msg.into().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = text);
}

fn status_of(e: &Error) -> PtkStatus {
    match e {
        Error::Exhausted(_) => PtkStatus::Exhausted,
        Error::OutOfRange { .. } | Error::BadIndex { .. } => PtkStatus::OutOfRange,
        Error::Io(_) => PtkStatus::Io,
        Error::Json(_) => PtkStatus::Parse,
        _ => PtkStatus::InvalidArgument,
    }
}

fn fail(status: PtkStatus, msg: impl Into<String>) -> PtkStatus {
    set_error(msg);
    status
}

/// Runs `body`, translating errors and panics into status codes.
fn guard(body: impl FnOnce() -> Result<(), PtkStatus>) -> PtkStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => PtkStatus::Ok,
        Ok(Err(status)) => status,
        Err(_) => fail(PtkStatus::Internal, "internal error"),
    }
}

fn lift<T>(r: privtopk::Result<T>) -> Result<T, PtkStatus> {
    r.map_err(|e| fail(status_of(&e), e.to_string()))
}

fn non_null<T>(p: *const T, what: &str) -> Result<(), PtkStatus> {
    if p.is_null() {
        Err(fail(PtkStatus::NullPointer, format!("{what} is null")))
    } else {
        Ok(())
    }
}

fn noise_kind(kind: PtkNoiseKind) -> NoiseKind {
    match kind {
        PtkNoiseKind::Laplace => NoiseKind::Laplace,
        PtkNoiseKind::Gumbel => NoiseKind::Gumbel,
    }
}

/// Message for the most recent failure on this thread. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn ptk_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ptk_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Builds a histogram from `m` scores, each at most `n`.
///
/// # Safety
/// `scores` must point to `m` readable values and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ptk_histogram_new(
    scores: *const u64,
    m: usize,
    n: u64,
    out: *mut *mut PtkHistogram,
) -> PtkStatus {
    guard(|| {
        non_null(scores, "scores")?;
        non_null(out, "out")?;
        let values = std::slice::from_raw_parts(scores, m).to_vec();
        let inner = lift(Histogram::new(values, n))?;
        *out = Box::into_raw(Box::new(PtkHistogram { inner }));
        Ok(())
    })
}

/// Parses histogram JSON (`{"n": ..., "scores": [...]}`).
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ptk_histogram_from_json(json: *const c_char, out: *mut *mut PtkHistogram) -> PtkStatus {
    guard(|| {
        non_null(json, "json")?;
        non_null(out, "out")?;
        let text = CStr::from_ptr(json)
            .to_str()
            .map_err(|_| fail(PtkStatus::Parse, "json is not valid UTF-8"))?;
        let (inner, _) = lift(Histogram::from_json_str(text))?;
        *out = Box::into_raw(Box::new(PtkHistogram { inner }));
        Ok(())
    })
}

/// Number of items, or 0 for a null handle.
///
/// # Safety
/// `h` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ptk_histogram_len(h: *const PtkHistogram) -> usize {
    h.as_ref().map_or(0, |h| h.inner.m())
}

/// # Safety
/// `h` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ptk_histogram_free(h: *mut PtkHistogram) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

unsafe fn write_outcome(out: TopKOutcome, items: *mut usize, cost: *mut PtkCost) {
    let dst = std::slice::from_raw_parts_mut(items, out.items.len());
    for (d, i) in dst.iter_mut().zip(&out.items) {
        *d = i.get();
    }
    if let Some(c) = cost.as_mut() {
        *c = PtkCost { histogram: out.access_cost, total: out.access_cost_total };
    }
}

/// Private top-k through the threshold algorithm with noise of scale
/// `1/epsilon`. Writes `k` item ids, best first, into `out_items`.
///
/// # Safety
/// `h` must be a live handle, `out_items` must have room for `k` values,
/// and `out_cost` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn ptk_private_topk(
    h: *const PtkHistogram,
    k: usize,
    kind: PtkNoiseKind,
    epsilon: f64,
    mode: PtkMode,
    seed: u64,
    out_items: *mut usize,
    out_cost: *mut PtkCost,
) -> PtkStatus {
    guard(|| {
        non_null(h, "histogram")?;
        non_null(out_items, "out_items")?;
        let spec = lift(NoiseSpec::for_epsilon(noise_kind(kind), epsilon))?;
        let mode = match mode {
            PtkMode::Eager => Mode::Eager,
            PtkMode::Lazy => Mode::Lazy,
        };
        let mut rng = trial_stream(seed, 0);
        let out = lift(private_threshold_topk(&mut (*h).inner.view(), k, &spec, &mut rng, mode))?;
        write_outcome(out, out_items, out_cost);
        Ok(())
    })
}

/// One-shot noisy top-k (reads every score).
///
/// # Safety
/// As for [`ptk_private_topk`].
#[no_mangle]
pub unsafe extern "C" fn ptk_oneshot_topk(
    h: *const PtkHistogram,
    k: usize,
    kind: PtkNoiseKind,
    epsilon: f64,
    seed: u64,
    out_items: *mut usize,
    out_cost: *mut PtkCost,
) -> PtkStatus {
    guard(|| {
        non_null(h, "histogram")?;
        non_null(out_items, "out_items")?;
        let spec = lift(NoiseSpec::for_epsilon(noise_kind(kind), epsilon))?;
        let mut rng = trial_stream(seed, 0);
        let out = lift(oneshot_private_topk(&(*h).inner, k, &spec, &mut rng))?;
        write_outcome(out, out_items, out_cost);
        Ok(())
    })
}

/// Exponential mechanism: one item with probability proportional to
/// `exp(epsilon * score)`.
///
/// # Safety
/// `h` must be a live handle, `out_item` writable, `out_cost` null or writable.
#[no_mangle]
pub unsafe extern "C" fn ptk_exponential_mechanism(
    h: *const PtkHistogram,
    epsilon: f64,
    seed: u64,
    out_item: *mut usize,
    out_cost: *mut PtkCost,
) -> PtkStatus {
    guard(|| {
        non_null(h, "histogram")?;
        non_null(out_item, "out_item")?;
        let mut rng = trial_stream(seed, 0);
        let out = lift(exponential_mechanism(&mut (*h).inner.view(), epsilon, &mut rng))?;
        write_outcome(out, out_item, out_cost);
        Ok(())
    })
}

/// Privacy levels of one-shot Laplace noise. `*out_has_approx` is false
/// when no approximate level is reported for these parameters.
///
/// # Safety
/// All output pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn ptk_laplace_privacy(
    k: usize,
    epsilon: f64,
    delta: f64,
    m: usize,
    out_pure: *mut f64,
    out_approx: *mut f64,
    out_has_approx: *mut bool,
) -> PtkStatus {
    guard(|| {
        non_null(out_pure, "out_pure")?;
        non_null(out_approx, "out_approx")?;
        non_null(out_has_approx, "out_has_approx")?;
        let (pure, approx) = lift(laplace_privacy_params(k, epsilon, delta, m))?;
        *out_pure = pure;
        *out_approx = approx.unwrap_or(f64::NAN);
        *out_has_approx = approx.is_some();
        Ok(())
    })
}

/// Privacy level of one-shot Gumbel noise at the given `delta`.
///
/// # Safety
/// `out_eps` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ptk_gumbel_privacy(k: usize, epsilon: f64, delta: f64, out_eps: *mut f64) -> PtkStatus {
    guard(|| {
        non_null(out_eps, "out_eps")?;
        *out_eps = lift(gumbel_privacy_params(k, epsilon, delta))?;
        Ok(())
    })
}

/// Sorted array of `m` i.i.d. noise values with the given scale, sampled
/// on demand.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ptk_noise_oracle_new(
    m: usize,
    kind: PtkNoiseKind,
    scale: f64,
    seed: u64,
    out: *mut *mut PtkNoiseOracle,
) -> PtkStatus {
    guard(|| {
        non_null(out, "out")?;
        let spec = lift(NoiseSpec::new(noise_kind(kind), scale))?;
        let inner = lift(LazyNoiseArray::new(m, spec, trial_stream(seed, 0)))?;
        *out = Box::into_raw(Box::new(PtkNoiseOracle { inner }));
        Ok(())
    })
}

/// Next `(item, value)` in descending value order.
///
/// # Safety
/// `o` must be a live handle; the output pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn ptk_noise_oracle_sorted_access(
    o: *mut PtkNoiseOracle,
    out_item: *mut usize,
    out_value: *mut f64,
) -> PtkStatus {
    guard(|| {
        non_null(o, "oracle")?;
        non_null(out_item, "out_item")?;
        non_null(out_value, "out_value")?;
        let (item, z) = lift((*o).inner.sorted_access())?;
        *out_item = item.get();
        *out_value = z;
        Ok(())
    })
}

/// Noise value of `item`.
///
/// # Safety
/// `o` must be a live handle; `out_value` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ptk_noise_oracle_random_access(
    o: *mut PtkNoiseOracle,
    item: usize,
    out_value: *mut f64,
) -> PtkStatus {
    guard(|| {
        non_null(o, "oracle")?;
        non_null(out_value, "out_value")?;
        let (_, z) = lift((*o).inner.random_access(ItemId(item)))?;
        *out_value = z;
        Ok(())
    })
}

/// Accesses answered so far, or 0 for a null handle.
///
/// # Safety
/// `o` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ptk_noise_oracle_access_count(o: *const PtkNoiseOracle) -> u64 {
    o.as_ref().map_or(0, |o| o.inner.access_count())
}

/// # Safety
/// `o` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ptk_noise_oracle_free(o: *mut PtkNoiseOracle) {
    if !o.is_null() {
        drop(Box::from_raw(o));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn status_mapping() {
        assert_eq!(status_of(&Error::Exhausted(3)), PtkStatus::Exhausted);
        assert_eq!(status_of(&Error::OutOfRange { item: 9, m: 3 }), PtkStatus::OutOfRange);
        assert_eq!(status_of(&Error::BadK { k: 0, m: 3 }), PtkStatus::InvalidArgument);
    }

    #[test]
    fn guard_catches_panics() {
        assert_eq!(guard(|| panic!("boom")), PtkStatus::Internal);
        let msg = unsafe { CStr::from_ptr(ptk_last_error()) };
        assert_eq!(msg.to_str().unwrap(), "internal error");
    }
}
