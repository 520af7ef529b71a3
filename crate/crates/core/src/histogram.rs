//! Histogram data model: positive histograms, frequency histograms on the
//! probability simplex, and weighted sets of either.

use serde::Serialize;

use crate::error::{check_dims, Error, Result};

/// Absolute tolerance on `sum == 1` for frequency histograms and weights.
pub const SIMPLEX_TOLERANCE: f64 = 1e-12;

/// Inputs this close to the simplex are renormalized without complaint.
pub const RENORMALIZE_TOLERANCE: f64 = 1e-6;

/// Default base quantity added to every bin of a histogram with empty bins.
pub const DEFAULT_EPSILON: f64 = 1e-10;

/// Environment variable overriding [`DEFAULT_EPSILON`].
pub const EPSILON_ENV: &str = "JEFFREYS_EPSILON";

/// A histogram with `d >= 1` strictly positive, finite bins.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Histogram {
    bins: Vec<f64>,
}

impl Histogram {
    pub fn new(bins: Vec<f64>) -> Result<Self> {
        if bins.is_empty() {
            return Err(Error::validation("histogram must have at least one bin"));
        }
        if let Some((i, v)) = bins.iter().enumerate().find(|(_, v)| !(v.is_finite() && **v > 0.0)) {
            return Err(Error::validation(format!(
                "bin {i} must be finite and strictly positive, got {v}"
            )));
        }
        Ok(Self { bins })
    }

    pub fn bins(&self) -> &[f64] {
        &self.bins
    }

    pub fn dim(&self) -> usize {
        self.bins.len()
    }

    pub fn into_bins(self) -> Vec<f64> {
        self.bins
    }

    /// Total mass `w_h`.
    pub fn cumulative_sum(&self) -> f64 {
        self.bins.iter().sum()
    }

    pub fn normalize(&self) -> FrequencyHistogram {
        let w = self.cumulative_sum();
        FrequencyHistogram(Histogram {
            bins: self.bins.iter().map(|b| b / w).collect(),
        })
    }

    /// Constructor for values the caller has already proven positive.
    pub(crate) fn from_positive(bins: Vec<f64>) -> Self {
        debug_assert!(bins.iter().all(|b| *b > 0.0), "non-positive bin in {bins:?}");
        Self { bins }
    }
}

impl AsRef<[f64]> for Histogram {
    fn as_ref(&self) -> &[f64] {
        &self.bins
    }
}

/// A histogram on the probability simplex.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct FrequencyHistogram(Histogram);

impl FrequencyHistogram {
    /// Accepts bins summing to one within [`SIMPLEX_TOLERANCE`]; bins within
    /// [`RENORMALIZE_TOLERANCE`] are rescaled, anything further is rejected.
    pub fn new(bins: Vec<f64>) -> Result<Self> {
        let h = Histogram::new(bins)?;
        let sum = h.cumulative_sum();
        let defect = (sum - 1.0).abs();
        if defect <= SIMPLEX_TOLERANCE {
            Ok(Self(h))
        } else if defect <= RENORMALIZE_TOLERANCE {
            Ok(h.normalize())
        } else {
            Err(Error::validation(format!(
                "frequency histogram bins sum to {sum}, not 1"
            )))
        }
    }

    pub fn bins(&self) -> &[f64] {
        self.0.bins()
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn as_histogram(&self) -> &Histogram {
        &self.0
    }

    pub fn into_histogram(self) -> Histogram {
        self.0
    }

    /// Rescales positive bins onto the simplex.
    pub(crate) fn normalizing(bins: Vec<f64>) -> Self {
        Histogram::from_positive(bins).normalize()
    }
}

impl AsRef<[f64]> for FrequencyHistogram {
    fn as_ref(&self) -> &[f64] {
        self.0.bins()
    }
}

impl From<FrequencyHistogram> for Histogram {
    fn from(h: FrequencyHistogram) -> Self {
        h.0
    }
}

impl TryFrom<Histogram> for FrequencyHistogram {
    type Error = Error;

    fn try_from(h: Histogram) -> Result<Self> {
        FrequencyHistogram::new(h.into_bins())
    }
}

/// Zero-bin smoothing policy: when any bin is empty, every bin receives
/// `epsilon = base * max(1, w_h / d)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Smoothing {
    pub base: f64,
}

impl Default for Smoothing {
    fn default() -> Self {
        Self { base: DEFAULT_EPSILON }
    }
}

impl Smoothing {
    /// Reads the base from `JEFFREYS_EPSILON`, falling back to the default.
    pub fn from_env() -> Result<Self> {
        match std::env::var(EPSILON_ENV) {
            Ok(s) => {
                let base: f64 = s.trim().parse().map_err(|_| {
                    Error::validation(format!("{EPSILON_ENV}={s:?} is not a number"))
                })?;
                if !(base.is_finite() && base > 0.0) {
                    return Err(Error::validation(format!("{EPSILON_ENV} must be positive, got {base}")));
                }
                Ok(Self { base })
            }
            Err(_) => Ok(Self::default()),
        }
    }

    /// Applies the policy to raw non-negative counts. Returns the smoothed
    /// bins and the epsilon that was added, if any.
    pub fn apply(&self, mut bins: Vec<f64>) -> Result<(Vec<f64>, Option<f64>)> {
        if bins.is_empty() {
            return Err(Error::validation("histogram must have at least one bin"));
        }
        if let Some((i, v)) = bins.iter().enumerate().find(|(_, v)| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::validation(format!("bin {i} must be finite and non-negative, got {v}")));
        }
        if bins.iter().all(|b| *b > 0.0) {
            return Ok((bins, None));
        }
        let mass: f64 = bins.iter().sum();
        let eps = self.base * (mass / bins.len() as f64).max(1.0);
        bins.iter_mut().for_each(|b| *b += eps);
        Ok((bins, Some(eps)))
    }

    pub fn histogram(&self, bins: Vec<f64>) -> Result<(Histogram, Option<f64>)> {
        let (bins, eps) = self.apply(bins)?;
        Ok((Histogram::new(bins)?, eps))
    }

    /// Smooths, then renormalizes when smoothing changed the bins.
    pub fn frequency(&self, bins: Vec<f64>) -> Result<(FrequencyHistogram, Option<f64>)> {
        let (bins, eps) = self.apply(bins)?;
        let h = match eps {
            Some(_) => Histogram::new(bins)?.normalize(),
            None => FrequencyHistogram::new(bins)?,
        };
        Ok((h, eps))
    }
}

/// `n >= 1` histograms of a common dimension with positive weights summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedHistogramSet<H> {
    histograms: Vec<H>,
    weights: Vec<f64>,
}

pub type FrequencySet = WeightedHistogramSet<FrequencyHistogram>;

impl<H: AsRef<[f64]>> WeightedHistogramSet<H> {
    /// Weights must sum to one within [`SIMPLEX_TOLERANCE`]; sums within
    /// [`RENORMALIZE_TOLERANCE`] are rescaled.
    pub fn new(histograms: Vec<H>, weights: Vec<f64>) -> Result<Self> {
        let set = Self::unchecked_weights(histograms, weights)?;
        let sum: f64 = set.weights.iter().sum();
        let defect = (sum - 1.0).abs();
        if defect > RENORMALIZE_TOLERANCE {
            return Err(Error::validation(format!("weights sum to {sum}, not 1")));
        }
        if defect > SIMPLEX_TOLERANCE {
            return Ok(set.rescaled());
        }
        Ok(set)
    }

    /// Uniform weights `1/n`.
    pub fn uniform(histograms: Vec<H>) -> Result<Self> {
        let n = histograms.len();
        Self::unchecked_weights(histograms, vec![1.0 / n.max(1) as f64; n])
    }

    /// Accepts any positive weights and divides them by their sum.
    pub fn with_relative_weights(histograms: Vec<H>, weights: Vec<f64>) -> Result<Self> {
        Ok(Self::unchecked_weights(histograms, weights)?.rescaled())
    }

    fn unchecked_weights(histograms: Vec<H>, weights: Vec<f64>) -> Result<Self> {
        if histograms.is_empty() {
            return Err(Error::validation("histogram set is empty"));
        }
        if histograms.len() != weights.len() {
            return Err(Error::validation(format!(
                "{} histograms but {} weights",
                histograms.len(),
                weights.len()
            )));
        }
        let d = histograms[0].as_ref().len();
        for h in &histograms[1..] {
            check_dims(d, h.as_ref().len())?;
        }
        if let Some((j, w)) = weights.iter().enumerate().find(|(_, w)| !(w.is_finite() && **w > 0.0)) {
            return Err(Error::validation(format!("weight {j} must be positive, got {w}")));
        }
        Ok(Self { histograms, weights })
    }

    fn rescaled(mut self) -> Self {
        let sum: f64 = self.weights.iter().sum();
        self.weights.iter_mut().for_each(|w| *w /= sum);
        self
    }

    pub fn len(&self) -> usize {
        self.histograms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.histograms.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.histograms[0].as_ref().len()
    }

    pub fn histograms(&self) -> &[H] {
        &self.histograms
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `(weight, histogram)` pairs.
    pub fn iter(&self) -> impl Iterator<Item = (f64, &H)> + '_ {
        self.weights.iter().copied().zip(self.histograms.iter())
    }

    /// The members at `indices`, with weights renormalized to sum to one.
    pub fn subset(&self, indices: &[usize]) -> Result<Self>
    where
        H: Clone,
    {
        let hs = indices.iter().map(|&j| self.histograms[j].clone()).collect();
        let ws = indices.iter().map(|&j| self.weights[j]).collect();
        Self::with_relative_weights(hs, ws)
    }

    /// Coordinate-wise `a^i = sum_j pi_j h_j^i`.
    pub fn weighted_arithmetic_mean(&self) -> Histogram {
        let mut acc = vec![0.0; self.dim()];
        for (w, h) in self.iter() {
            for (a, b) in acc.iter_mut().zip(h.as_ref()) {
                *a += w * b;
            }
        }
        Histogram::from_positive(acc)
    }

    /// Coordinate-wise `g^i = prod_j (h_j^i)^pi_j`, accumulated in the log domain.
    pub fn weighted_geometric_mean(&self) -> Histogram {
        let mut acc = vec![0.0; self.dim()];
        for (w, h) in self.iter() {
            for (a, b) in acc.iter_mut().zip(h.as_ref()) {
                *a += w * b.ln();
            }
        }
        acc.iter_mut().for_each(|a| *a = a.exp());
        Histogram::from_positive(acc)
    }

    /// Both means at once.
    pub fn means(&self) -> (Histogram, Histogram) {
        (self.weighted_arithmetic_mean(), self.weighted_geometric_mean())
    }

    /// Copies the members as plain positive histograms.
    pub fn to_positive(&self) -> WeightedHistogramSet<Histogram> {
        WeightedHistogramSet {
            histograms: self
                .histograms
                .iter()
                .map(|h| Histogram::from_positive(h.as_ref().to_vec()))
                .collect(),
            weights: self.weights.clone(),
        }
    }

    /// Interprets every member as a frequency histogram, failing if any is
    /// off the simplex.
    pub fn to_frequency(&self) -> Result<FrequencySet> {
        let hs = self
            .histograms
            .iter()
            .enumerate()
            .map(|(j, h)| {
                FrequencyHistogram::new(h.as_ref().to_vec())
                    .map_err(|e| Error::validation(format!("member {j}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(WeightedHistogramSet { histograms: hs, weights: self.weights.clone() })
    }

    /// True when every member lies on the simplex within [`SIMPLEX_TOLERANCE`].
    pub fn is_frequency(&self) -> bool {
        self.histograms
            .iter()
            .all(|h| (h.as_ref().iter().sum::<f64>() - 1.0).abs() <= SIMPLEX_TOLERANCE)
    }
}

impl FrequencySet {
    /// Normalized arithmetic and geometric means `(a~, g~)`.
    pub fn normalized_means(&self) -> (FrequencyHistogram, FrequencyHistogram) {
        let (a, g) = self.means();
        (
            FrequencyHistogram::normalizing(a.into_bins()),
            FrequencyHistogram::normalizing(g.into_bins()),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn h(v: &[f64]) -> Histogram {
        Histogram::new(v.to_vec()).unwrap()
    }

    fn f(v: &[f64]) -> FrequencyHistogram {
        FrequencyHistogram::new(v.to_vec()).unwrap()
    }

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn cumulative_sums() {
        assert_eq!(h(&[1.0, 2.0, 3.0]).cumulative_sum(), 6.0);
        assert_eq!(h(&[0.2, 0.3]).cumulative_sum(), 0.5);
        assert!((f(&[0.1, 0.2, 0.7]).as_histogram().cumulative_sum() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn normalization() {
        assert_eq!(h(&[1.0, 1.0]).normalize().bins(), &[0.5, 0.5]);
        assert_eq!(h(&[2.0, 6.0]).normalize().bins(), &[0.25, 0.75]);
        let once = h(&[0.25, 0.75]).normalize();
        assert_eq!(once.as_histogram().normalize(), once);
    }

    #[test]
    fn rejects_invalid_bins() {
        assert!(Histogram::new(vec![]).is_err());
        assert!(Histogram::new(vec![1.0, 0.0]).is_err());
        assert!(Histogram::new(vec![1.0, -2.0]).is_err());
        assert!(Histogram::new(vec![f64::NAN]).is_err());
    }

    #[test]
    fn simplex_tolerance_policy() {
        let exact = f(&[0.5, 0.5 + 5e-13]);
        assert_eq!(exact.bins()[1], 0.5 + 5e-13);
        let nudged = f(&[0.5, 0.5 + 1e-8]);
        assert!((nudged.bins().iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!(FrequencyHistogram::new(vec![0.5, 0.6]).is_err());
    }

    #[test]
    fn arithmetic_means() {
        let s = WeightedHistogramSet::uniform(vec![h(&[1.0, 3.0]), h(&[3.0, 1.0])]).unwrap();
        assert!(close(s.weighted_arithmetic_mean().bins(), &[2.0, 2.0], 0.0));
        let s = WeightedHistogramSet::new(vec![h(&[1.0, 0.5]), h(&[2.0, 1.0])], vec![0.25, 0.75]).unwrap();
        assert!(close(s.weighted_arithmetic_mean().bins(), &[1.75, 0.875], 1e-15));
        let s = WeightedHistogramSet::uniform(vec![h(&[0.3, 7.0])]).unwrap();
        assert_eq!(s.weighted_arithmetic_mean().bins(), &[0.3, 7.0]);
    }

    #[test]
    fn geometric_means() {
        let s = WeightedHistogramSet::uniform(vec![h(&[1.0, 3.0]), h(&[3.0, 1.0])]).unwrap();
        let r3 = 3f64.sqrt();
        assert!(close(s.weighted_geometric_mean().bins(), &[r3, r3], 1e-15));
        let s = WeightedHistogramSet::uniform(vec![h(&[4.0, 1.0]), h(&[1.0, 1.0])]).unwrap();
        assert!(close(s.weighted_geometric_mean().bins(), &[2.0, 1.0], 1e-15));
        let s = WeightedHistogramSet::uniform(vec![h(&[0.3, 7.0])]).unwrap();
        assert!(close(s.weighted_geometric_mean().bins(), &[0.3, 7.0], 1e-15));
    }

    #[test]
    fn normalized_means_example() {
        let s = WeightedHistogramSet::uniform(vec![f(&[0.5, 0.5]), f(&[0.9, 0.1])]).unwrap();
        let (a, g) = s.normalized_means();
        assert!(close(a.bins(), &[0.7, 0.3], 1e-15));
        // sqrt(0.45) = 3 sqrt(0.05), so g~ is exactly (3/4, 1/4)
        assert!(close(g.bins(), &[0.75, 0.25], 1e-15));

        let m = f(&[0.2, 0.3, 0.5]);
        let s = WeightedHistogramSet::uniform(vec![m.clone(), m.clone(), m.clone()]).unwrap();
        let (a, g) = s.normalized_means();
        assert!(close(a.bins(), m.bins(), 1e-15));
        assert!(close(g.bins(), m.bins(), 1e-15));
    }

    #[test]
    fn set_validation() {
        assert!(WeightedHistogramSet::<Histogram>::uniform(vec![]).is_err());
        assert!(matches!(
            WeightedHistogramSet::uniform(vec![h(&[1.0]), h(&[1.0, 2.0])]),
            Err(Error::DimensionMismatch { expected: 1, found: 2 })
        ));
        assert!(WeightedHistogramSet::new(vec![h(&[1.0]), h(&[2.0])], vec![0.5, 0.6]).is_err());
        assert!(WeightedHistogramSet::new(vec![h(&[1.0]), h(&[2.0])], vec![1.0, 0.0]).is_err());
        let s = WeightedHistogramSet::with_relative_weights(vec![h(&[1.0]), h(&[2.0])], vec![1.0, 3.0]).unwrap();
        assert_eq!(s.weights(), &[0.25, 0.75]);
    }

    #[test]
    fn subset_renormalizes_weights() {
        let s = WeightedHistogramSet::new(
            vec![h(&[1.0]), h(&[2.0]), h(&[3.0])],
            vec![0.5, 0.25, 0.25],
        )
        .unwrap();
        let sub = s.subset(&[1, 2]).unwrap();
        assert_eq!(sub.weights(), &[0.5, 0.5]);
        assert_eq!(sub.histograms()[1].bins(), &[3.0]);
    }

    #[test]
    fn smoothing_policy() {
        let sm = Smoothing::default();
        let (bins, eps) = sm.apply(vec![1.0, 2.0]).unwrap();
        assert_eq!(bins, vec![1.0, 2.0]);
        assert!(eps.is_none());

        let (bins, eps) = sm.apply(vec![0.0, 4.0]).unwrap();
        assert_eq!(eps, Some(2e-10));
        assert_eq!(bins, vec![2e-10, 4.0 + 2e-10]);

        let (bins, eps) = sm.apply(vec![0.0, 0.5, 0.5]).unwrap();
        assert_eq!(eps, Some(1e-10));
        assert!(bins.iter().all(|b| *b > 0.0));

        let (fh, _) = sm.frequency(vec![0.0, 0.5, 0.5]).unwrap();
        assert!((fh.bins().iter().sum::<f64>() - 1.0).abs() < 1e-15);

        assert!(sm.apply(vec![-1.0, 1.0]).is_err());
        assert!(sm.apply(vec![]).is_err());
    }

    #[test]
    fn frequency_conversion() {
        let s = WeightedHistogramSet::uniform(vec![h(&[0.5, 0.5]), h(&[0.1, 0.9])]).unwrap();
        assert!(s.is_frequency());
        assert!(s.to_frequency().is_ok());
        let s = WeightedHistogramSet::uniform(vec![h(&[1.0, 0.5])]).unwrap();
        assert!(!s.is_frequency());
        assert!(s.to_frequency().is_err());
    }
}
