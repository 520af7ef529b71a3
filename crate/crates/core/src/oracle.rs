//! Brute-force reference optimizers and randomized trial harnesses.
//!
//! The optimizers here share no code with the closed forms and solvers in
//! [`crate::centroid`]: means, objectives and searches are recomputed from
//! scratch so they can serve as independent checks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::centroid::{
    frequency_centroid_bisection, frequency_centroid_fixedpoint, normalized_positive_centroid, positive_centroid,
    veldhuis_centroid, DEFAULT_BISECTION_TOL, DEFAULT_FIXEDPOINT_TOL,
};
use crate::divergence::jeffreys_to_set;
use crate::error::{Error, Result};
use crate::histogram::{FrequencyHistogram, FrequencySet, Smoothing, WeightedHistogramSet};

pub const DEFAULT_GOLDEN_RESOLUTION: f64 = 1e-8;
pub const DEFAULT_GRID_STEP: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleMethod {
    Grid,
    GoldenSection,
    CoordinateDescent,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleSolution {
    pub argmin: Vec<f64>,
    pub objective: f64,
    pub method: OracleMethod,
    pub resolution: f64,
}

fn check_resolution(r: f64) -> Result<()> {
    if !(r.is_finite() && r > 0.0) {
        return Err(Error::validation(format!("resolution must be positive, got {r}")));
    }
    Ok(())
}

/// Golden-section search for the minimum of a unimodal `f` on `[lo, hi]`,
/// stopping once the bracket is narrower than `resolution`.
pub fn golden_section(mut lo: f64, mut hi: f64, resolution: f64, f: impl Fn(f64) -> f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > resolution {
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        }
        if !(x1 > lo && x2 < hi) {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Weighted arithmetic and geometric means by direct products.
fn plain_means<H: AsRef<[f64]>>(set: &WeightedHistogramSet<H>) -> (Vec<f64>, Vec<f64>) {
    let d = set.dim();
    let mut a = vec![0.0; d];
    let mut g = vec![1.0; d];
    for (w, h) in set.iter() {
        for i in 0..d {
            a[i] += w * h.as_ref()[i];
            g[i] *= h.as_ref()[i].powf(w);
        }
    }
    (a, g)
}

fn plain_jeffreys_to_set<H: AsRef<[f64]>>(x: &[f64], set: &WeightedHistogramSet<H>) -> f64 {
    set.iter()
        .map(|(w, h)| {
            w * x
                .iter()
                .zip(h.as_ref())
                .map(|(p, q)| (p - q) * (p / q).ln())
                .sum::<f64>()
        })
        .sum()
}

/// Coordinate-wise golden-section minimization of
/// `x log(x/g^i) - a^i log x` over `(0, a^i]`.
pub fn oracle_positive_centroid<H: AsRef<[f64]>>(
    set: &WeightedHistogramSet<H>,
    resolution: f64,
) -> Result<OracleSolution> {
    check_resolution(resolution)?;
    let (a, g) = plain_means(set);
    let argmin: Vec<f64> = a
        .iter()
        .zip(&g)
        .map(|(&a, &g)| golden_section(a * 1e-12, a, resolution, |x| x * (x / g).ln() - a * x.ln()))
        .collect();
    let objective = plain_jeffreys_to_set(&argmin, set);
    Ok(OracleSolution { argmin, objective, method: OracleMethod::GoldenSection, resolution })
}

/// `KL(a~ : x) + KL(x : g~)` for `x` on the simplex.
fn frequency_objective(a: &[f64], g: &[f64], x: &[f64]) -> f64 {
    a.iter()
        .zip(g)
        .zip(x)
        .map(|((a, g), x)| a * (a / x).ln() + x * (x / g).ln())
        .sum()
}

fn normalized_plain_means(set: &FrequencySet) -> (Vec<f64>, Vec<f64>) {
    let (a, mut g) = plain_means(set);
    let s: f64 = g.iter().sum();
    g.iter_mut().for_each(|v| *v /= s);
    (a, g)
}

/// Frequency centroid for `d` in `{2, 3}` by (nested) golden-section search
/// over the simplex on the equivalent objective `KL(a~ : x) + KL(x : g~)`.
pub fn oracle_frequency_centroid(set: &FrequencySet, resolution: f64) -> Result<OracleSolution> {
    check_resolution(resolution)?;
    let (a, g) = normalized_plain_means(set);
    let argmin = match set.dim() {
        2 => {
            let t = golden_section(0.0, 1.0, resolution, |t| frequency_objective(&a, &g, &[t, 1.0 - t]));
            vec![t, 1.0 - t]
        }
        3 => {
            let inner = |x0: f64| {
                let rest = 1.0 - x0;
                let x1 = golden_section(0.0, rest, resolution, |x1| {
                    frequency_objective(&a, &g, &[x0, x1, rest - x1])
                });
                (x1, frequency_objective(&a, &g, &[x0, x1, rest - x1]))
            };
            let x0 = golden_section(0.0, 1.0, resolution, |x0| inner(x0).1);
            let x1 = inner(x0).0;
            vec![x0, x1, 1.0 - x0 - x1]
        }
        d => return Err(Error::validation(format!("frequency oracle supports d = 2 or 3, got {d}"))),
    };
    let objective = plain_jeffreys_to_set(&argmin, set);
    Ok(OracleSolution { argmin, objective, method: OracleMethod::GoldenSection, resolution })
}

/// Exhaustive grid over the simplex at spacing `step` for `d` in `{2, 3}`.
pub fn oracle_frequency_grid(set: &FrequencySet, step: f64) -> Result<OracleSolution> {
    check_resolution(step)?;
    let (a, g) = normalized_plain_means(set);
    let m = (1.0 / step).round() as usize;
    let mut best = (f64::INFINITY, Vec::new());
    let mut consider = |x: Vec<f64>| {
        let v = frequency_objective(&a, &g, &x);
        if v < best.0 {
            best = (v, x);
        }
    };
    match set.dim() {
        2 => (1..m).for_each(|i| {
            let t = i as f64 / m as f64;
            consider(vec![t, 1.0 - t]);
        }),
        3 => {
            for i in 1..m {
                for j in 1..m - i {
                    let (x0, x1) = (i as f64 / m as f64, j as f64 / m as f64);
                    consider(vec![x0, x1, 1.0 - x0 - x1]);
                }
            }
        }
        d => return Err(Error::validation(format!("grid oracle supports d = 2 or 3, got {d}"))),
    }
    let argmin = best.1;
    let objective = plain_jeffreys_to_set(&argmin, set);
    Ok(OracleSolution { argmin, objective, method: OracleMethod::Grid, resolution: step })
}

/// Frequency histogram with bins drawn i.i.d. uniform on `[0.01, 1)` then
/// normalized.
pub fn random_frequency_histogram(rng: &mut impl Rng, d: usize) -> FrequencyHistogram {
    let bins: Vec<f64> = (0..d).map(|_| rng.random_range(0.01..1.0)).collect();
    let s: f64 = bins.iter().sum();
    FrequencyHistogram::new(bins.into_iter().map(|b| b / s).collect()).expect("positive normalized bins")
}

/// `n` random frequency histograms with random positive weights.
pub fn random_frequency_set(rng: &mut impl Rng, n: usize, d: usize) -> FrequencySet {
    let hs = (0..n).map(|_| random_frequency_histogram(rng, d)).collect();
    let ws = (0..n).map(|_| rng.random_range(0.1..1.0)).collect();
    WeightedHistogramSet::with_relative_weights(hs, ws).expect("valid random set")
}

/// Pixels drawn per synthetic intensity histogram (a 128x128 thumbnail).
pub const INTENSITY_PIXELS: usize = 16_384;

/// Share of pixels spread uniformly over all levels (sensor noise, texture).
const INTENSITY_BACKGROUND: f64 = 0.1;

/// Synthetic grey-level histogram over `d` levels: `INTENSITY_PIXELS` pixels
/// drawn from a mixture of one to four broad Gaussian modes plus a uniform
/// background, rounded and clamped to `[0, d)`, then smoothed and normalized.
pub fn random_intensity_histogram(rng: &mut impl Rng, d: usize) -> FrequencyHistogram {
    let span = d as f64;
    let modes: Vec<Normal<f64>> = (0..rng.random_range(1..=4))
        .map(|_| {
            let mean = rng.random_range(0.0..span);
            let sd = rng.random_range(0.06 * span..0.27 * span);
            Normal::new(mean, sd).expect("positive standard deviation")
        })
        .collect();
    let mut counts = vec![0.0; d];
    for _ in 0..INTENSITY_PIXELS {
        let level = if rng.random::<f64>() < INTENSITY_BACKGROUND {
            rng.random_range(0..d)
        } else {
            let mode = &modes[rng.random_range(0..modes.len())];
            mode.sample(rng).round().clamp(0.0, span - 1.0) as usize
        };
        counts[level] += 1.0;
    }
    let (h, _) = Smoothing::default().histogram(counts).expect("non-negative counts");
    h.normalize()
}

/// Histogram distribution used by [`ratio_table`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Generator {
    /// Bins i.i.d. uniform on `[0.01, 1)`, random member weights.
    Uniform,
    /// [`random_intensity_histogram`] members with equal weights, like the
    /// images of one category.
    Intensity,
}

impl Generator {
    pub fn name(self) -> &'static str {
        match self {
            Generator::Uniform => "uniform",
            Generator::Intensity => "intensity",
        }
    }

    pub fn set(self, rng: &mut impl Rng, n: usize, d: usize) -> FrequencySet {
        match self {
            Generator::Uniform => random_frequency_set(rng, n, d),
            Generator::Intensity => {
                let hs = (0..n).map(|_| random_intensity_histogram(rng, d)).collect();
                WeightedHistogramSet::uniform(hs).expect("valid random set")
            }
        }
    }
}

/// Dirichlet draw with parameters `concentration * mean`, via normalized
/// Gamma variates.
pub fn dirichlet_histogram(rng: &mut impl Rng, mean: &[f64], concentration: f64) -> FrequencyHistogram {
    let draws: Vec<f64> = mean
        .iter()
        .map(|m| {
            let g = Gamma::new(concentration * m, 1.0).expect("positive shape");
            g.sample(rng).max(f64::MIN_POSITIVE)
        })
        .collect();
    let s: f64 = draws.iter().sum();
    let (h, _) = Smoothing::default().histogram(draws.into_iter().map(|v| v / s).collect()).expect("finite draws");
    h.normalize()
}

/// Two well separated groups of `per_blob` frequency histograms each: the
/// first concentrates 90% of its mass on the lower half of the bins, the
/// second on the upper half. Returns the histograms and their group labels,
/// interleaved so that labels are not sorted.
pub fn planted_two_blobs(
    rng: &mut impl Rng,
    per_blob: usize,
    d: usize,
    concentration: f64,
) -> (Vec<FrequencyHistogram>, Vec<usize>) {
    assert!(d >= 2, "two blobs need at least two bins");
    let half = d / 2;
    let center = |low_heavy: bool| -> Vec<f64> {
        let (lo, hi) = if low_heavy { (0.9, 0.1) } else { (0.1, 0.9) };
        (0..d)
            .map(|i| if i < half { lo / half as f64 } else { hi / (d - half) as f64 })
            .collect()
    };
    let (a, b) = (center(true), center(false));
    let mut hs = Vec::with_capacity(2 * per_blob);
    let mut labels = Vec::with_capacity(2 * per_blob);
    for _ in 0..per_blob {
        hs.push(dirichlet_histogram(rng, &a, concentration));
        labels.push(0);
        hs.push(dirichlet_histogram(rng, &b, concentration));
        labels.push(1);
    }
    (hs, labels)
}

/// Independent, reproducible stream for trial `index` of a run seeded by `seed`.
pub fn trial_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaStats {
    pub trials: usize,
    pub mean_alpha: f64,
    pub max_alpha: f64,
    pub min_alpha: f64,
    pub mean_w_c: f64,
    pub min_w_c: f64,
}

/// Approximation factor of the normalized positive centroid against the
/// exact frequency centroid, over random equally weighted pairs of
/// `d`-bin frequency histograms.
pub fn alpha_trial_harness(num_trials: usize, d: usize, seed: u64) -> Result<AlphaStats> {
    if num_trials == 0 {
        return Err(Error::validation("at least one trial is required"));
    }
    let per_trial: Vec<(f64, f64)> = (0..num_trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(seed, t as u64);
            let hs = vec![random_frequency_histogram(&mut rng, d), random_frequency_histogram(&mut rng, d)];
            let set = WeightedHistogramSet::uniform(hs)?;
            let approx = normalized_positive_centroid(&set)?;
            let exact = frequency_centroid_bisection(&set, DEFAULT_BISECTION_TOL)?;
            Ok((ratio(approx.objective, exact.objective), approx.w_c.unwrap_or(1.0)))
        })
        .collect::<Result<_>>()?;

    let n = per_trial.len() as f64;
    let mut stats = AlphaStats {
        trials: per_trial.len(),
        mean_alpha: 0.0,
        max_alpha: f64::NEG_INFINITY,
        min_alpha: f64::INFINITY,
        mean_w_c: 0.0,
        min_w_c: f64::INFINITY,
    };
    for &(alpha, w_c) in &per_trial {
        stats.mean_alpha += alpha / n;
        stats.max_alpha = stats.max_alpha.max(alpha);
        stats.min_alpha = stats.min_alpha.min(alpha);
        stats.mean_w_c += w_c / n;
        stats.min_w_c = stats.min_w_c.min(w_c);
    }
    Ok(stats)
}

/// `num / den`, taking `0 / 0` as 1.
pub fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 && num == 0.0 {
        1.0
    } else {
        num / den
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

impl Summary {
    fn of(values: impl Iterator<Item = f64>) -> Self {
        let (mut sum, mut n) = (0.0, 0usize);
        let (mut min, mut max) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in values {
            sum += v;
            n += 1;
            min = min.min(v);
            max = max.max(v);
        }
        Self { mean: sum / n as f64, min, max }
    }
}

/// Per-trial ratios of every approximation against the exact centroid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialRatios {
    pub alpha_positive: f64,
    pub alpha_normalized: f64,
    pub w_c: f64,
    pub alpha_veldhuis: f64,
    pub bisection_iterations: u32,
    pub fixedpoint_iterations: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioTable {
    pub trials: usize,
    pub dims: usize,
    pub members: usize,
    pub generator: Generator,
    pub alpha_positive: Summary,
    pub alpha_normalized: Summary,
    pub w_c: Summary,
    pub alpha_veldhuis: Summary,
    pub mean_bisection_iterations: f64,
    pub mean_fixedpoint_iterations: f64,
}

/// Ratio statistics `J(H, x) / J(H, c~)` for the positive centroid, its
/// normalization and the Veldhuis average over random frequency sets.
pub fn ratio_table(
    trials: usize,
    dims: usize,
    members: usize,
    generator: Generator,
    seed: u64,
) -> Result<RatioTable> {
    if trials == 0 {
        return Err(Error::validation("at least one trial is required"));
    }
    if dims == 0 || members == 0 {
        return Err(Error::validation("dims and members must be positive"));
    }
    let rows: Vec<TrialRatios> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(seed, t as u64);
            let set = generator.set(&mut rng, members, dims);
            let exact = frequency_centroid_bisection(&set, DEFAULT_BISECTION_TOL)?;
            let fixed = frequency_centroid_fixedpoint(&set, DEFAULT_FIXEDPOINT_TOL)?;
            let pos = positive_centroid(&set)?;
            let norm = normalized_positive_centroid(&set)?;
            let veld = veldhuis_centroid(&set)?;
            let opt = exact.objective;
            Ok(TrialRatios {
                alpha_positive: ratio(jeffreys_to_set(&pos.centroid, &set)?, opt),
                alpha_normalized: ratio(norm.objective, opt),
                w_c: norm.w_c.unwrap_or(1.0),
                alpha_veldhuis: ratio(veld.objective, opt),
                bisection_iterations: exact.iterations,
                fixedpoint_iterations: fixed.iterations,
            })
        })
        .collect::<Result<_>>()?;
    let n = rows.len() as f64;
    Ok(RatioTable {
        trials,
        dims,
        members,
        generator,
        alpha_positive: Summary::of(rows.iter().map(|r| r.alpha_positive)),
        alpha_normalized: Summary::of(rows.iter().map(|r| r.alpha_normalized)),
        w_c: Summary::of(rows.iter().map(|r| r.w_c)),
        alpha_veldhuis: Summary::of(rows.iter().map(|r| r.alpha_veldhuis)),
        mean_bisection_iterations: rows.iter().map(|r| r.bisection_iterations as f64).sum::<f64>() / n,
        mean_fixedpoint_iterations: rows.iter().map(|r| r.fixedpoint_iterations as f64).sum::<f64>() / n,
    })
}
