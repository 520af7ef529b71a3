//! Jeffreys centroids of weighted histogram sets.
//!
//! * [`positive_centroid`]: exact minimizer over the positive orthant,
//!   `c^i = a^i / W(e a^i / g^i)` with `a`, `g` the weighted arithmetic and
//!   geometric means.
//! * [`normalized_positive_centroid`]: `c / w_c`, whose Jeffreys objective is
//!   within a factor `1 / w_c` of the optimum on the simplex.
//! * [`veldhuis_centroid`]: `(a~ + g~) / 2`.
//! * [`frequency_centroid_bisection`] and [`frequency_centroid_fixedpoint`]:
//!   the exact minimizer on the simplex, through the Lagrange multiplier
//!   `lambda` of the normalization constraint. For fixed `lambda` the
//!   stationary point is `c^i(lambda) = a~^i / W(a~^i e^(lambda + 1) / g~^i)`,
//!   and the multiplier is pinned by `sum_i c^i(lambda) = 1`, equivalently
//!   `lambda = -KL(c~ : g~)`.

use serde::{Deserialize, Serialize};

use crate::divergence::{jeffreys_to_set, kl_sum, sum_terms};
use crate::error::{Error, Result};
use crate::histogram::{FrequencyHistogram, FrequencySet, Histogram, WeightedHistogramSet};
use crate::special::lambert_w0_of_exp;

pub const DEFAULT_BISECTION_TOL: f64 = 1e-12;
pub const DEFAULT_FIXEDPOINT_TOL: f64 = 1e-14;

/// Halvings needed to shrink the multiplier bracket to double-precision
/// relative resolution (`2^-52`).
pub const BISECTION_HALVINGS: u32 = f64::MANTISSA_DIGITS - 1;

/// Beyond the mandatory halvings the bracket is split at most this many
/// times before giving up; a double collapses long before that.
const BISECTION_MAX_HALVINGS: u32 = 1100;

pub const FIXEDPOINT_MAX_ITERATIONS: u32 = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CentroidMode {
    Positive,
    NormalizedApprox,
    Veldhuis,
    FrequencyBisection,
    FrequencyFixedpoint,
}

impl CentroidMode {
    /// Modes whose result lies on the probability simplex and which require
    /// frequency input.
    pub fn requires_frequency(self) -> bool {
        !matches!(self, CentroidMode::Positive)
    }

    pub fn name(self) -> &'static str {
        match self {
            CentroidMode::Positive => "positive",
            CentroidMode::NormalizedApprox => "normalized_approx",
            CentroidMode::Veldhuis => "veldhuis",
            CentroidMode::FrequencyBisection => "frequency_bisection",
            CentroidMode::FrequencyFixedpoint => "frequency_fixedpoint",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CentroidResult {
    pub centroid: Histogram,
    pub mode: CentroidMode,
    /// Total mass of the positive centroid.
    pub w_c: Option<f64>,
    pub lambda_star: Option<f64>,
    pub iterations: u32,
    /// `sum_j pi_j J(centroid, h_j)`.
    pub objective: f64,
    /// Guaranteed approximation factor `1 / w_c` of the normalized centroid.
    pub bound_factor: Option<f64>,
    /// `|sum_i c^i(lambda*) - 1|` before the final renormalization.
    pub sum_defect: Option<f64>,
}

fn check_tol(tol: f64) -> Result<()> {
    if !(tol.is_finite() && tol > 0.0) {
        return Err(Error::validation(format!("tolerance must be positive, got {tol}")));
    }
    Ok(())
}

/// `a / W(exp(ln a - ln g + shift))`, the stationary point of
/// `x log(x/g) - a log x + shift x` shifted by the multiplier.
#[inline]
fn lambert_coordinate(a: f64, g: f64, shift: f64) -> Result<f64> {
    let w = lambert_w0_of_exp(a.ln() - g.ln() + shift)?.value;
    Ok(a / w)
}

fn lambda_coordinates(a: &[f64], g: &[f64], lambda: f64) -> Result<Vec<f64>> {
    a.iter()
        .zip(g)
        .map(|(&a, &g)| lambert_coordinate(a, g, lambda + 1.0))
        .collect()
}

fn lambda_sum(a: &[f64], g: &[f64], lambda: f64) -> Result<f64> {
    let c = lambda_coordinates(a, g, lambda)?;
    Ok(sum_terms(c.len(), c.into_iter()))
}

fn lone_member<H: AsRef<[f64]>>(set: &WeightedHistogramSet<H>, mode: CentroidMode) -> CentroidResult {
    let member = Histogram::from_positive(set.histograms()[0].as_ref().to_vec());
    let w = member.cumulative_sum();
    let frequency = mode.requires_frequency();
    CentroidResult {
        centroid: member,
        mode,
        w_c: (!matches!(mode, CentroidMode::Veldhuis)).then_some(w),
        lambda_star: frequency.then_some(0.0),
        iterations: 0,
        objective: 0.0,
        bound_factor: matches!(mode, CentroidMode::NormalizedApprox).then_some(1.0 / w),
        sum_defect: None,
    }
}

/// Exact Jeffreys centroid over the positive orthant.
pub fn positive_centroid<H: AsRef<[f64]>>(set: &WeightedHistogramSet<H>) -> Result<CentroidResult> {
    if set.len() == 1 {
        return Ok(lone_member(set, CentroidMode::Positive));
    }
    let centroid = positive_centroid_bins(set)?;
    let w_c = centroid.cumulative_sum();
    let objective = jeffreys_to_set(&centroid, set)?;
    Ok(CentroidResult {
        centroid,
        mode: CentroidMode::Positive,
        w_c: Some(w_c),
        lambda_star: None,
        iterations: 0,
        objective,
        bound_factor: None,
        sum_defect: None,
    })
}

fn positive_centroid_bins<H: AsRef<[f64]>>(set: &WeightedHistogramSet<H>) -> Result<Histogram> {
    let (a, g) = set.means();
    let bins = a
        .bins()
        .iter()
        .zip(g.bins())
        .map(|(&a, &g)| lambert_coordinate(a, g, 1.0))
        .collect::<Result<Vec<_>>>()?;
    Ok(Histogram::from_positive(bins))
}

/// The positive centroid rescaled onto the simplex.
pub fn normalized_positive_centroid(set: &FrequencySet) -> Result<CentroidResult> {
    if set.len() == 1 {
        return Ok(lone_member(set, CentroidMode::NormalizedApprox));
    }
    let c = positive_centroid_bins(set)?;
    let w_c = c.cumulative_sum();
    let centroid: Histogram = c.normalize().into();
    let objective = jeffreys_to_set(&centroid, set)?;
    Ok(CentroidResult {
        centroid,
        mode: CentroidMode::NormalizedApprox,
        w_c: Some(w_c),
        lambda_star: None,
        iterations: 0,
        objective,
        bound_factor: Some(1.0 / w_c),
        sum_defect: None,
    })
}

/// Average of the normalized arithmetic and geometric means.
pub fn veldhuis_centroid(set: &FrequencySet) -> Result<CentroidResult> {
    if set.len() == 1 {
        return Ok(lone_member(set, CentroidMode::Veldhuis));
    }
    let (a, g) = set.normalized_means();
    let bins = a.bins().iter().zip(g.bins()).map(|(x, y)| 0.5 * (x + y)).collect();
    let centroid = Histogram::from_positive(bins);
    let objective = jeffreys_to_set(&centroid, set)?;
    Ok(CentroidResult {
        centroid,
        mode: CentroidMode::Veldhuis,
        w_c: None,
        lambda_star: None,
        iterations: 0,
        objective,
        bound_factor: None,
        sum_defect: None,
    })
}

/// Bracket `[max_i (a~^i + ln g~^i) - 1, 0]` for the multiplier. At the lower
/// end the largest coordinate of `c(lambda)` reaches one.
pub fn lambda_bracket(a: &FrequencyHistogram, g: &FrequencyHistogram) -> (f64, f64) {
    let lo = a
        .bins()
        .iter()
        .zip(g.bins())
        .map(|(a, g)| a + g.ln())
        .fold(f64::NEG_INFINITY, f64::max)
        - 1.0;
    (lo, 0.0)
}

/// Cumulative sum `s(lambda)` of the multiplier-parameterized coordinates.
pub fn lambda_cumulative_sum(a: &FrequencyHistogram, g: &FrequencyHistogram, lambda: f64) -> Result<f64> {
    lambda_sum(a.bins(), g.bins(), lambda)
}

fn finish_frequency(
    set: &FrequencySet,
    raw: Vec<f64>,
    lambda: f64,
    iterations: u32,
    mode: CentroidMode,
) -> Result<CentroidResult> {
    let s = sum_terms(raw.len(), raw.iter().copied());
    let centroid: Histogram = FrequencyHistogram::normalizing(raw).into();
    let objective = jeffreys_to_set(&centroid, set)?;
    Ok(CentroidResult {
        centroid,
        mode,
        w_c: None,
        lambda_star: Some(lambda),
        iterations,
        objective,
        bound_factor: None,
        sum_defect: Some((s - 1.0).abs()),
    })
}

fn trivial_dimension(mode: CentroidMode) -> CentroidResult {
    CentroidResult {
        centroid: Histogram::from_positive(vec![1.0]),
        mode,
        w_c: None,
        lambda_star: Some(0.0),
        iterations: 0,
        objective: 0.0,
        bound_factor: None,
        sum_defect: Some(0.0),
    }
}

/// Exact frequency centroid by bisection on the multiplier.
///
/// The bracket is always halved [`BISECTION_HALVINGS`] times, which resolves
/// `lambda` to double precision; halving continues past that only while
/// `|s(lambda) - 1| > tol`.
pub fn frequency_centroid_bisection(set: &FrequencySet, tol: f64) -> Result<CentroidResult> {
    check_tol(tol)?;
    if set.len() == 1 {
        return Ok(lone_member(set, CentroidMode::FrequencyBisection));
    }
    if set.dim() == 1 {
        return Ok(trivial_dimension(CentroidMode::FrequencyBisection));
    }
    let (a, g) = set.normalized_means();
    let (ab, gb) = (a.bins(), g.bins());
    let (mut lo, mut hi) = lambda_bracket(&a, &g);

    let slack = 64.0 * f64::EPSILON * set.dim() as f64;
    let s_lo = lambda_sum(ab, gb, lo)?;
    let s_hi = lambda_sum(ab, gb, hi)?;
    if s_lo < 1.0 - slack || s_hi > 1.0 + slack {
        return Err(Error::numeric(format!(
            "multiplier bracket [{lo}, {hi}] does not enclose s = 1 (s(lo) = {s_lo}, s(hi) = {s_hi})"
        )));
    }

    let mut halvings = 0;
    let lambda = loop {
        let mid = 0.5 * (lo + hi);
        let s_mid = lambda_sum(ab, gb, mid)?;
        halvings += 1;
        if s_mid > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        let settled = (s_mid - 1.0).abs() <= tol;
        if halvings >= BISECTION_HALVINGS && settled {
            break mid;
        }
        let next = 0.5 * (lo + hi);
        let collapsed = next == lo || next == hi;
        if halvings >= BISECTION_MAX_HALVINGS || (halvings >= BISECTION_HALVINGS && collapsed) {
            return Err(Error::numeric(format!(
                "bisection stalled at lambda = {mid} with |s - 1| = {:e} > tol = {tol:e}",
                (s_mid - 1.0).abs()
            )));
        }
    };

    let raw = lambda_coordinates(ab, gb, lambda)?;
    finish_frequency(set, raw, lambda, halvings, CentroidMode::FrequencyBisection)
}

/// Exact frequency centroid by the fixed-point iteration
/// `lambda_l = -KL(c~(lambda_{l-1}) : g~)` started from `c~_0 = a~`.
///
/// Each iterate is renormalized onto the simplex before its KL divergence is
/// taken. Fails with [`Error::Numeric`] if [`FIXEDPOINT_MAX_ITERATIONS`] is
/// reached.
pub fn frequency_centroid_fixedpoint(set: &FrequencySet, tol: f64) -> Result<CentroidResult> {
    check_tol(tol)?;
    if set.len() == 1 {
        return Ok(lone_member(set, CentroidMode::FrequencyFixedpoint));
    }
    if set.dim() == 1 {
        return Ok(trivial_dimension(CentroidMode::FrequencyFixedpoint));
    }
    let (a, g) = set.normalized_means();
    let (ab, gb) = (a.bins(), g.bins());
    let mut lambda = -kl_sum(ab, gb)?;
    for l in 1..=FIXEDPOINT_MAX_ITERATIONS {
        let raw = lambda_coordinates(ab, gb, lambda)?;
        let next = multiplier_of(&raw, gb)?;
        if (next - lambda).abs() <= tol {
            let raw = lambda_coordinates(ab, gb, next)?;
            return finish_frequency(set, raw, next, l, CentroidMode::FrequencyFixedpoint);
        }
        lambda = next;
    }
    Err(Error::numeric(format!(
        "fixed-point iteration did not settle within {FIXEDPOINT_MAX_ITERATIONS} iterations (last lambda = {lambda})"
    )))
}

/// `-KL(normalize(raw) : g~)`.
fn multiplier_of(raw: &[f64], g: &[f64]) -> Result<f64> {
    let s = sum_terms(raw.len(), raw.iter().copied());
    let normalized: Vec<f64> = raw.iter().map(|c| c / s).collect();
    Ok(-kl_sum(&normalized, g)?.max(0.0))
}

/// One fixed-point relocation warm-started at `previous`: the multiplier is
/// taken as `-KL(previous : g~)` and the resulting coordinates are rescaled
/// onto the simplex.
pub fn fixedpoint_step(set: &FrequencySet, previous: &[f64]) -> Result<FrequencyHistogram> {
    if set.len() == 1 {
        return FrequencyHistogram::new(set.histograms()[0].bins().to_vec());
    }
    let (a, g) = set.normalized_means();
    let lambda = -kl_sum(previous, g.bins())?.max(0.0);
    let raw = lambda_coordinates(a.bins(), g.bins(), lambda)?;
    Ok(FrequencyHistogram::normalizing(raw))
}

/// Dispatches on `mode`. Frequency modes require members on the simplex.
///
/// `tol` defaults per solver. If the fixed-point iteration exhausts its
/// budget the bisection result is returned instead, labelled as such.
pub fn centroid<H: AsRef<[f64]>>(
    set: &WeightedHistogramSet<H>,
    mode: CentroidMode,
    tol: Option<f64>,
) -> Result<CentroidResult> {
    if mode == CentroidMode::Positive {
        return positive_centroid(set);
    }
    let fset = set.to_frequency()?;
    match mode {
        CentroidMode::Positive => unreachable!(),
        CentroidMode::NormalizedApprox => normalized_positive_centroid(&fset),
        CentroidMode::Veldhuis => veldhuis_centroid(&fset),
        CentroidMode::FrequencyBisection => {
            frequency_centroid_bisection(&fset, tol.unwrap_or(DEFAULT_BISECTION_TOL))
        }
        CentroidMode::FrequencyFixedpoint => {
            match frequency_centroid_fixedpoint(&fset, tol.unwrap_or(DEFAULT_FIXEDPOINT_TOL)) {
                Err(Error::Numeric(_)) => frequency_centroid_bisection(&fset, DEFAULT_BISECTION_TOL),
                other => other,
            }
        }
    }
}
