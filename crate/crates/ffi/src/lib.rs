//! C ABI over `jeffreys-core`.
//!
//! Objects cross the boundary as opaque handles created by `*_new` or a
//! computing function and released by the matching `*_free`. Every fallible
//! function returns a [`JeffreysStatus`]; on failure a message is available
//! from [`jeffreys_last_error_message`] on the same thread. Panics never unwind
//! into the caller.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use jeffreys_core::centroid::{centroid, CentroidMode, CentroidResult};
use jeffreys_core::clustering::{kmeans, ClusterCentroidMode, ClusteringConfig, ClusteringResult};
use jeffreys_core::divergence::jeffreys;
use jeffreys_core::special::lambert_w0;
use jeffreys_core::{Error, Histogram, WeightedHistogramSet};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JeffreysStatus {
    Ok = 0,
    Validation = 1,
    Numeric = 2,
    Domain = 3,
    DimensionMismatch = 4,
    NullPointer = 5,
    BufferTooSmall = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JeffreysCentroidMode {
    Positive = 0,
    NormalizedApprox = 1,
    Veldhuis = 2,
    FrequencyBisection = 3,
    FrequencyFixedpoint = 4,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JeffreysClusterMode {
    Positive = 0,
    NormalizedApprox = 1,
    FrequencyFixedpointOneStep = 2,
    FrequencyExact = 3,
}

/// Weighted set of positive histograms.
pub struct JeffreysSet(WeightedHistogramSet<Histogram>);

/// Result of a centroid computation.
pub struct JeffreysCentroid(CentroidResult);

/// Result of a k-means run.
pub struct JeffreysClustering(ClusteringResult);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn fail(status: JeffreysStatus, msg: impl Into<String>) -> JeffreysStatus {
    set_last_error(msg.into());
    status
}

fn status_of(e: Error) -> JeffreysStatus {
    let status = match e {
        Error::Numeric(_) => JeffreysStatus::Numeric,
        Error::Domain(_) => JeffreysStatus::Domain,
        Error::DimensionMismatch { .. } => JeffreysStatus::DimensionMismatch,
        _ => JeffreysStatus::Validation,
    };
    fail(status, e.to_string())
}

/// Runs `f`, converting errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), JeffreysStatus>) -> JeffreysStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => JeffreysStatus::Ok,
        Ok(Err(status)) => status,
        Err(_) => fail(JeffreysStatus::Panic, "internal panic"),
    }
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], JeffreysStatus> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(fail(JeffreysStatus::NullPointer, format!("{what} is null")));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn copy_out(src: &[f64], out: *mut f64, len: usize) -> Result<(), JeffreysStatus> {
    if len < src.len() {
        return Err(fail(
            JeffreysStatus::BufferTooSmall,
            format!("buffer holds {len} values, {} needed", src.len()),
        ));
    }
    if !src.is_empty() {
        if out.is_null() {
            return Err(fail(JeffreysStatus::NullPointer, "output buffer is null"));
        }
        ptr::copy_nonoverlapping(src.as_ptr(), out, src.len());
    }
    Ok(())
}

fn write<T>(out: *mut T, value: T) -> Result<(), JeffreysStatus> {
    if out.is_null() {
        return Err(fail(JeffreysStatus::NullPointer, "output pointer is null"));
    }
    unsafe { out.write(value) };
    Ok(())
}

fn handle<'a, T>(p: *const T) -> Result<&'a T, JeffreysStatus> {
    unsafe { p.as_ref() }.ok_or_else(|| fail(JeffreysStatus::NullPointer, "handle is null"))
}

/// Message for the most recent failure on this thread, or null. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn jeffreys_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Builds a set from `n` row-major histograms of `d` bins each.
/// `weights` may be null for uniform weights; otherwise `n` positive values
/// that are rescaled to sum to one.
///
/// # Safety
/// `bins` must point to `n * d` doubles, `weights` to `n` doubles or be null,
/// and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn jeffreys_set_new(
    bins: *const f64,
    n: usize,
    d: usize,
    weights: *const f64,
    out: *mut *mut JeffreysSet,
) -> JeffreysStatus {
    guard(|| {
        if n == 0 || d == 0 {
            return Err(fail(JeffreysStatus::Validation, "n and d must be positive"));
        }
        let total = n
            .checked_mul(d)
            .ok_or_else(|| fail(JeffreysStatus::Validation, "n * d overflows"))?;
        let flat = slice(bins, total, "bins")?;
        let hs = flat
            .chunks_exact(d)
            .map(|row| Histogram::new(row.to_vec()))
            .collect::<Result<Vec<_>, _>>()
            .map_err(status_of)?;
        let set = if weights.is_null() {
            WeightedHistogramSet::uniform(hs)
        } else {
            WeightedHistogramSet::with_relative_weights(hs, slice(weights, n, "weights")?.to_vec())
        }
        .map_err(status_of)?;
        write(out, Box::into_raw(Box::new(JeffreysSet(set))))
    })
}

/// # Safety
/// `set` must be null or a handle from [`jeffreys_set_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn jeffreys_set_free(set: *mut JeffreysSet) {
    if !set.is_null() {
        drop(Box::from_raw(set));
    }
}

/// Number of histograms, or 0 for a null handle.
///
/// # Safety
/// `set` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn jeffreys_set_len(set: *const JeffreysSet) -> usize {
    set.as_ref().map_or(0, |s| s.0.len())
}

/// Number of bins, or 0 for a null handle.
///
/// # Safety
/// `set` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn jeffreys_set_dim(set: *const JeffreysSet) -> usize {
    set.as_ref().map_or(0, |s| s.0.dim())
}

/// Computes a centroid. `tol <= 0` selects the solver default. Frequency
/// modes require every member to sum to one.
///
/// # Safety
/// `set` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn jeffreys_centroid(
    set: *const JeffreysSet,
    mode: JeffreysCentroidMode,
    tol: f64,
    out: *mut *mut JeffreysCentroid,
) -> JeffreysStatus {
    guard(|| {
        let set = handle(set)?;
        let mode = match mode {
            JeffreysCentroidMode::Positive => CentroidMode::Positive,
            JeffreysCentroidMode::NormalizedApprox => CentroidMode::NormalizedApprox,
            JeffreysCentroidMode::Veldhuis => CentroidMode::Veldhuis,
            JeffreysCentroidMode::FrequencyBisection => CentroidMode::FrequencyBisection,
            JeffreysCentroidMode::FrequencyFixedpoint => CentroidMode::FrequencyFixedpoint,
        };
        let tol = (tol > 0.0).then_some(tol);
        let res = centroid(&set.0, mode, tol).map_err(status_of)?;
        write(out, Box::into_raw(Box::new(JeffreysCentroid(res))))
    })
}

/// # Safety
/// `c` must be null or a handle from [`jeffreys_centroid`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn jeffreys_centroid_free(c: *mut JeffreysCentroid) {
    if !c.is_null() {
        drop(Box::from_raw(c));
    }
}

/// # Safety
/// `c` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn jeffreys_centroid_dim(c: *const JeffreysCentroid) -> usize {
    c.as_ref().map_or(0, |c| c.0.centroid.dim())
}

/// Copies the centroid bins into `out`, which holds `len` doubles.
///
/// # Safety
/// `c` must be a live handle and `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn jeffreys_centroid_bins(c: *const JeffreysCentroid, out: *mut f64, len: usize) -> JeffreysStatus {
    guard(|| copy_out(handle(c)?.0.centroid.bins(), out, len))
}

/// `sum_j pi_j J(h_j, c)`, or NaN for a null handle.
///
/// # Safety
/// `c` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn jeffreys_centroid_objective(c: *const JeffreysCentroid) -> f64 {
    c.as_ref().map_or(f64::NAN, |c| c.0.objective)
}

/// Solver iterations (0 for closed forms).
///
/// # Safety
/// `c` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn jeffreys_centroid_iterations(c: *const JeffreysCentroid) -> u32 {
    c.as_ref().map_or(0, |c| c.0.iterations)
}

/// Mass of the positive centroid; NaN when the mode does not define it.
///
/// # Safety
/// `c` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn jeffreys_centroid_w_c(c: *const JeffreysCentroid) -> f64 {
    c.as_ref().and_then(|c| c.0.w_c).unwrap_or(f64::NAN)
}

/// Optimal multiplier; NaN when the mode does not define it.
///
/// # Safety
/// `c` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn jeffreys_centroid_lambda(c: *const JeffreysCentroid) -> f64 {
    c.as_ref().and_then(|c| c.0.lambda_star).unwrap_or(f64::NAN)
}

/// Principal branch of Lambert W for finite `x >= 0`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn jeffreys_lambert_w0(x: f64, out: *mut f64) -> JeffreysStatus {
    guard(|| write(out, lambert_w0(x).map_err(status_of)?.value))
}

/// Jeffreys divergence between two `d`-bin positive histograms.
///
/// # Safety
/// `p` and `q` must each point to `d` doubles and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn jeffreys_divergence(p: *const f64, q: *const f64, d: usize, out: *mut f64) -> JeffreysStatus {
    guard(|| {
        let p = Histogram::new(slice(p, d, "p")?.to_vec()).map_err(status_of)?;
        let q = Histogram::new(slice(q, d, "q")?.to_vec()).map_err(status_of)?;
        write(out, jeffreys(&p, &q).map_err(status_of)?)
    })
}

/// Jeffreys k-means. `max_iterations == 0` selects the default budget.
///
/// # Safety
/// `set` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn jeffreys_kmeans(
    set: *const JeffreysSet,
    k: usize,
    mode: JeffreysClusterMode,
    seed: u64,
    max_iterations: u32,
    out: *mut *mut JeffreysClustering,
) -> JeffreysStatus {
    guard(|| {
        let set = handle(set)?;
        let mode = match mode {
            JeffreysClusterMode::Positive => ClusterCentroidMode::Positive,
            JeffreysClusterMode::NormalizedApprox => ClusterCentroidMode::NormalizedApprox,
            JeffreysClusterMode::FrequencyFixedpointOneStep => ClusterCentroidMode::FrequencyFixedpoint1Step,
            JeffreysClusterMode::FrequencyExact => ClusterCentroidMode::FrequencyExact,
        };
        let mut cfg = ClusteringConfig::new(k, mode);
        cfg.seed = seed;
        if max_iterations > 0 {
            cfg.max_iterations = max_iterations;
        }
        let res = kmeans(&set.0, &cfg).map_err(status_of)?;
        write(out, Box::into_raw(Box::new(JeffreysClustering(res))))
    })
}

/// # Safety
/// `c` must be null or a handle from [`jeffreys_kmeans`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn jeffreys_clustering_free(c: *mut JeffreysClustering) {
    if !c.is_null() {
        drop(Box::from_raw(c));
    }
}

/// # Safety
/// `c` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn jeffreys_clustering_k(c: *const JeffreysClustering) -> usize {
    c.as_ref().map_or(0, |c| c.0.centroids.len())
}

/// # Safety
/// `c` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn jeffreys_clustering_iterations(c: *const JeffreysClustering) -> u32 {
    c.as_ref().map_or(0, |c| c.0.iterations)
}

/// Copies the cluster index of every input histogram into `out`.
///
/// # Safety
/// `c` must be a live handle and `out` must hold `len` values.
#[no_mangle]
pub unsafe extern "C" fn jeffreys_clustering_assignments(
    c: *const JeffreysClustering,
    out: *mut usize,
    len: usize,
) -> JeffreysStatus {
    guard(|| {
        let a = &handle(c)?.0.assignments;
        if len < a.len() {
            return Err(fail(
                JeffreysStatus::BufferTooSmall,
                format!("buffer holds {len} values, {} needed", a.len()),
            ));
        }
        if out.is_null() {
            return Err(fail(JeffreysStatus::NullPointer, "output buffer is null"));
        }
        ptr::copy_nonoverlapping(a.as_ptr(), out, a.len());
        Ok(())
    })
}

/// Copies centroid `index` into `out`.
///
/// # Safety
/// `c` must be a live handle and `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn jeffreys_clustering_centroid(
    c: *const JeffreysClustering,
    index: usize,
    out: *mut f64,
    len: usize,
) -> JeffreysStatus {
    guard(|| {
        let cs = &handle(c)?.0.centroids;
        let centroid = cs
            .get(index)
            .ok_or_else(|| fail(JeffreysStatus::Validation, format!("centroid {index} of {}", cs.len())))?;
        copy_out(centroid.bins(), out, len)
    })
}

/// Length of the objective trace.
///
/// # Safety
/// `c` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn jeffreys_clustering_trace_len(c: *const JeffreysClustering) -> usize {
    c.as_ref().map_or(0, |c| c.0.objective_trace.len())
}

/// Copies the objective after each round into `out`.
///
/// # Safety
/// `c` must be a live handle and `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn jeffreys_clustering_trace(c: *const JeffreysClustering, out: *mut f64, len: usize) -> JeffreysStatus {
    guard(|| copy_out(&handle(c)?.0.objective_trace, out, len))
}
