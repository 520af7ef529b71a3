//! Kullback-Leibler family of divergences between histograms, in nats.

use crate::error::{check_dims, Result};
use crate::histogram::{FrequencyHistogram, WeightedHistogramSet};

/// Sums up to this length are accumulated naively; longer ones are compensated.
const NAIVE_SUM_MAX_LEN: usize = 1024;

/// Neumaier-compensated sum for long inputs, plain left-to-right otherwise.
/// Either way the reduction order is fixed.
pub(crate) fn sum_terms(len: usize, terms: impl Iterator<Item = f64>) -> f64 {
    if len <= NAIVE_SUM_MAX_LEN {
        return terms.sum();
    }
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for t in terms {
        let s = sum + t;
        if sum.abs() >= t.abs() {
            comp += (sum - s) + t;
        } else {
            comp += (t - s) + sum;
        }
        sum = s;
    }
    sum + comp
}

/// `p log(p/q)` with the `0 log 0 = 0` convention.
#[inline]
fn plogpq(p: f64, q: f64) -> f64 {
    if p == 0.0 {
        0.0
    } else {
        p * (p / q).ln()
    }
}

fn paired<'a>(p: &'a [f64], q: &'a [f64]) -> Result<impl Iterator<Item = (f64, f64)> + 'a> {
    check_dims(p.len(), q.len())?;
    Ok(p.iter().copied().zip(q.iter().copied()))
}

/// Extended KL divergence `sum p log(p/q) + q - p` between positive histograms.
pub fn extended_kl(p: impl AsRef<[f64]>, q: impl AsRef<[f64]>) -> Result<f64> {
    let (p, q) = (p.as_ref(), q.as_ref());
    let v = sum_terms(p.len(), paired(p, q)?.map(|(a, b)| plogpq(a, b) + b - a));
    Ok(v.max(0.0))
}

/// Uncorrected relative entropy sum `sum p log(p/q)`. Coincides with the KL
/// divergence on the simplex; for unnormalized `p` it may be negative.
pub fn kl_sum(p: impl AsRef<[f64]>, q: impl AsRef<[f64]>) -> Result<f64> {
    let (p, q) = (p.as_ref(), q.as_ref());
    Ok(sum_terms(p.len(), paired(p, q)?.map(|(a, b)| plogpq(a, b))))
}

/// KL divergence between frequency histograms.
pub fn kl(p: &FrequencyHistogram, q: &FrequencyHistogram) -> Result<f64> {
    Ok(kl_sum(p, q)?.max(0.0))
}

/// Shannon entropy `sum p log(1/p)`.
pub fn entropy(p: &FrequencyHistogram) -> f64 {
    let p = p.bins();
    sum_terms(p.len(), p.iter().map(|&a| -plogpq(a, 1.0)))
}

/// Cross-entropy `sum p log(1/q)`.
pub fn cross_entropy(p: &FrequencyHistogram, q: &FrequencyHistogram) -> Result<f64> {
    let (p, q) = (p.bins(), q.bins());
    Ok(sum_terms(
        p.len(),
        paired(p, q)?.map(|(a, b)| if a == 0.0 { 0.0 } else { -a * b.ln() }),
    ))
}

/// Jeffreys divergence `sum (p - q) log(p/q)`.
///
/// Each term is evaluated as `|p - q| log1p(|p - q| / min)`, which is bitwise
/// symmetric in its arguments and keeps full relative accuracy when `p` and
/// `q` are close (the difference of nearby doubles is exact, the ratio is not).
pub fn jeffreys(p: impl AsRef<[f64]>, q: impl AsRef<[f64]>) -> Result<f64> {
    let (p, q) = (p.as_ref(), q.as_ref());
    Ok(sum_terms(p.len(), paired(p, q)?.map(|(a, b)| jeffreys_term(a, b))))
}

#[inline]
fn jeffreys_term(a: f64, b: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let (lo, hi) = if a < b { (a, b) } else { (b, a) };
    let diff = hi - lo;
    diff * (diff / lo).ln_1p()
}

/// `sum_j pi_j J(x, h_j)`.
pub fn jeffreys_to_set<H: AsRef<[f64]>>(x: impl AsRef<[f64]>, set: &WeightedHistogramSet<H>) -> Result<f64> {
    let x = x.as_ref();
    let mut acc = 0.0;
    for (w, h) in set.iter() {
        acc += w * jeffreys(x, h)?;
    }
    Ok(acc)
}

/// `sum_j pi_j KL(x : h_j)` using the uncorrected sum [`kl_sum`].
pub fn kl_to_set<H: AsRef<[f64]>>(x: impl AsRef<[f64]>, set: &WeightedHistogramSet<H>) -> Result<f64> {
    let x = x.as_ref();
    let mut acc = 0.0;
    for (w, h) in set.iter() {
        acc += w * kl_sum(x, h)?;
    }
    Ok(acc)
}
