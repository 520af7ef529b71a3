//! Lloyd-style k-means under the Jeffreys divergence.
//!
//! Relocation uses one of several centroid constructions. A relocated
//! centroid is only accepted when it does not increase the within-cluster
//! objective, so the objective trace is non-increasing for every mode,
//! including the variational single fixed-point step.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::centroid::{
    fixedpoint_step, frequency_centroid_bisection, normalized_positive_centroid, positive_centroid,
    DEFAULT_BISECTION_TOL,
};
use crate::divergence::{jeffreys, jeffreys_to_set};
use crate::error::{Error, Result};
use crate::histogram::{FrequencySet, Histogram, WeightedHistogramSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClusterCentroidMode {
    /// Exact positive centroid.
    Positive,
    /// Normalized positive centroid.
    NormalizedApprox,
    /// One warm-started fixed-point step per relocation.
    FrequencyFixedpoint1Step,
    /// Exact frequency centroid.
    FrequencyExact,
}

impl ClusterCentroidMode {
    pub const ALL: [ClusterCentroidMode; 4] = [
        ClusterCentroidMode::Positive,
        ClusterCentroidMode::NormalizedApprox,
        ClusterCentroidMode::FrequencyFixedpoint1Step,
        ClusterCentroidMode::FrequencyExact,
    ];

    fn is_variational(self) -> bool {
        matches!(self, ClusterCentroidMode::FrequencyFixedpoint1Step)
    }

    fn requires_frequency(self) -> bool {
        !matches!(self, ClusterCentroidMode::Positive)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusteringConfig {
    pub k: usize,
    pub max_iterations: u32,
    pub centroid_mode: ClusterCentroidMode,
    pub seed: u64,
    pub objective_tolerance: f64,
    /// Worker threads for the assignment step; results do not depend on it.
    pub threads: usize,
}

impl ClusteringConfig {
    pub fn new(k: usize, centroid_mode: ClusterCentroidMode) -> Self {
        Self {
            k,
            max_iterations: 100,
            centroid_mode,
            seed: 0,
            objective_tolerance: 1e-12,
            threads: 1,
        }
    }

    fn validate(&self, n: usize) -> Result<()> {
        if self.k == 0 {
            return Err(Error::validation("k must be at least 1"));
        }
        if self.k > n {
            return Err(Error::validation(format!("k = {} exceeds the {n} input histograms", self.k)));
        }
        if self.max_iterations == 0 {
            return Err(Error::validation("max_iterations must be at least 1"));
        }
        if self.objective_tolerance.is_nan() || self.objective_tolerance < 0.0 {
            return Err(Error::validation("objective_tolerance must be non-negative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusteringResult {
    pub assignments: Vec<usize>,
    pub centroids: Vec<Histogram>,
    /// `sum_j pi_j J(h_j, c_assign(j))` after each Lloyd round.
    pub objective_trace: Vec<f64>,
    pub iterations: u32,
}

/// Indices of `k` distinct members: the first uniformly, each next one with
/// probability proportional to its Jeffreys divergence to the nearest chosen
/// member.
pub fn seed_indices<H: AsRef<[f64]>>(set: &WeightedHistogramSet<H>, k: usize, seed: u64) -> Result<Vec<usize>> {
    let n = set.len();
    if k == 0 || k > n {
        return Err(Error::validation(format!("cannot seed {k} centroids from {n} histograms")));
    }
    let hs = set.histograms();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chosen = vec![rng.random_range(0..n)];
    let mut nearest: Vec<f64> = hs
        .iter()
        .map(|h| jeffreys(h, &hs[chosen[0]]))
        .collect::<Result<_>>()?;
    nearest[chosen[0]] = 0.0;

    while chosen.len() < k {
        let total: f64 = nearest.iter().sum();
        let next = if total > 0.0 && total.is_finite() {
            let dist = WeightedIndex::new(&nearest)
                .map_err(|e| Error::numeric(format!("seeding weights: {e}")))?;
            dist.sample(&mut rng)
        } else {
            // every remaining member coincides with a chosen one
            let free: Vec<usize> = (0..n).filter(|j| !chosen.contains(j)).collect();
            free[rng.random_range(0..free.len())]
        };
        chosen.push(next);
        for (j, h) in hs.iter().enumerate() {
            let d = if chosen.contains(&j) { 0.0 } else { jeffreys(h, &hs[next])? };
            nearest[j] = nearest[j].min(d);
        }
    }
    Ok(chosen)
}

pub fn seed_centroids<H: AsRef<[f64]>>(set: &WeightedHistogramSet<H>, k: usize, seed: u64) -> Result<Vec<Histogram>> {
    seed_indices(set, k, seed)?
        .into_iter()
        .map(|j| Histogram::new(set.histograms()[j].as_ref().to_vec()))
        .collect()
}

/// Nearest centroid of every member; ties go to the lowest index.
fn assign(hs: &[Histogram], centroids: &[Histogram], pool: Option<&rayon::ThreadPool>) -> Result<Vec<usize>> {
    let nearest = |h: &Histogram| -> Result<usize> {
        let mut best = (f64::INFINITY, 0);
        for (m, c) in centroids.iter().enumerate() {
            let d = jeffreys(h, c)?;
            if d < best.0 {
                best = (d, m);
            }
        }
        Ok(best.1)
    };
    match pool {
        Some(pool) => pool.install(|| hs.par_iter().map(nearest).collect()),
        None => hs.iter().map(nearest).collect(),
    }
}

/// Gives every empty cluster the member farthest from its own centroid,
/// taken from a cluster that keeps at least one member.
fn repair_empty(hs: &[Histogram], assignments: &mut [usize], centroids: &mut [Histogram]) -> Result<()> {
    let k = centroids.len();
    loop {
        let mut sizes = vec![0usize; k];
        assignments.iter().for_each(|&m| sizes[m] += 1);
        let Some(empty) = sizes.iter().position(|&s| s == 0) else {
            return Ok(());
        };
        let mut far = (f64::NEG_INFINITY, usize::MAX);
        for (j, &m) in assignments.iter().enumerate() {
            if sizes[m] < 2 {
                continue;
            }
            let d = jeffreys(&hs[j], &centroids[m])?;
            if d > far.0 {
                far = (d, j);
            }
        }
        let j = far.1;
        assignments[j] = empty;
        centroids[empty] = hs[j].clone();
    }
}

fn objective(set: &WeightedHistogramSet<Histogram>, assignments: &[usize], centroids: &[Histogram]) -> Result<f64> {
    let mut acc = 0.0;
    for ((w, h), &m) in set.iter().zip(assignments) {
        acc += w * jeffreys(h, &centroids[m])?;
    }
    Ok(acc)
}

enum Members<'a> {
    Positive(&'a WeightedHistogramSet<Histogram>),
    Frequency(&'a FrequencySet),
}

impl Members<'_> {
    fn candidate(&self, mode: ClusterCentroidMode, idx: &[usize], old: &Histogram) -> Result<(Histogram, f64, f64)> {
        match self {
            Members::Positive(set) => {
                let sub = set.subset(idx)?;
                let c = positive_centroid(&sub)?.centroid;
                let (n, o) = (jeffreys_to_set(&c, &sub)?, jeffreys_to_set(old, &sub)?);
                Ok((c, n, o))
            }
            Members::Frequency(set) => {
                let sub = set.subset(idx)?;
                let c = match mode {
                    ClusterCentroidMode::NormalizedApprox => normalized_positive_centroid(&sub)?.centroid,
                    ClusterCentroidMode::FrequencyFixedpoint1Step => fixedpoint_step(&sub, old.bins())?.into(),
                    ClusterCentroidMode::FrequencyExact => {
                        frequency_centroid_bisection(&sub, DEFAULT_BISECTION_TOL)?.centroid
                    }
                    ClusterCentroidMode::Positive => positive_centroid(&sub)?.centroid,
                };
                let (n, o) = (jeffreys_to_set(&c, &sub)?, jeffreys_to_set(old, &sub)?);
                Ok((c, n, o))
            }
        }
    }
}

/// Replaces each centroid by its mode's candidate when that does not raise
/// the cluster's objective.
fn relocate(
    members: &Members<'_>,
    mode: ClusterCentroidMode,
    assignments: &[usize],
    centroids: &mut [Histogram],
) -> Result<()> {
    for (m, centroid) in centroids.iter_mut().enumerate() {
        let idx: Vec<usize> = (0..assignments.len()).filter(|&j| assignments[j] == m).collect();
        if idx.is_empty() {
            continue;
        }
        let (candidate, new_obj, old_obj) = members.candidate(mode, &idx, centroid)?;
        if new_obj <= old_obj {
            *centroid = candidate;
        }
    }
    Ok(())
}

/// Jeffreys k-means.
///
/// Each round assigns every member to its nearest centroid, repairs empty
/// clusters and relocates the centroids. Iteration stops once a round lowers
/// the objective by at most `objective_tolerance`, when the assignments stop
/// changing under a non-variational mode, or after `max_iterations` rounds.
pub fn kmeans(set: &WeightedHistogramSet<Histogram>, cfg: &ClusteringConfig) -> Result<ClusteringResult> {
    cfg.validate(set.len())?;
    let mode = cfg.centroid_mode;
    let fset;
    let members = if mode.requires_frequency() {
        fset = set.to_frequency()?;
        Members::Frequency(&fset)
    } else {
        Members::Positive(set)
    };
    let pool = if cfg.threads > 1 {
        Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(cfg.threads)
                .build()
                .map_err(|e| Error::validation(format!("thread pool: {e}")))?,
        )
    } else {
        None
    };

    let hs = set.histograms();
    let mut centroids = seed_centroids(set, cfg.k, cfg.seed)?;
    let mut assignments = assign(hs, &centroids, pool.as_ref())?;
    repair_empty(hs, &mut assignments, &mut centroids)?;
    relocate(&members, mode, &assignments, &mut centroids)?;
    let mut trace = vec![objective(set, &assignments, &centroids)?];

    while (trace.len() as u32) < cfg.max_iterations {
        let mut next = assign(hs, &centroids, pool.as_ref())?;
        repair_empty(hs, &mut next, &mut centroids)?;
        let unchanged = next == assignments;
        assignments = next;
        relocate(&members, mode, &assignments, &mut centroids)?;
        let obj = objective(set, &assignments, &centroids)?;
        let prev = *trace.last().expect("trace starts non-empty");
        trace.push(obj);
        if prev - obj <= cfg.objective_tolerance || (unchanged && !mode.is_variational()) {
            break;
        }
    }

    Ok(ClusteringResult {
        assignments,
        centroids,
        iterations: trace.len() as u32,
        objective_trace: trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::centroid::{centroid, CentroidMode};

    fn sample_set() -> WeightedHistogramSet<Histogram> {
        let rows = [
            [0.70, 0.20, 0.10],
            [0.68, 0.22, 0.10],
            [0.10, 0.20, 0.70],
            [0.12, 0.18, 0.70],
            [0.30, 0.40, 0.30],
            [0.33, 0.34, 0.33],
        ];
        let hs = rows.iter().map(|r| Histogram::new(r.to_vec()).unwrap()).collect();
        WeightedHistogramSet::uniform(hs).unwrap()
    }

    #[test]
    fn k_equals_n_gives_zero_objective() {
        let s = sample_set();
        for mode in ClusterCentroidMode::ALL {
            let r = kmeans(&s, &ClusteringConfig::new(s.len(), mode)).unwrap();
            assert!(r.objective_trace.last().unwrap().abs() < 1e-15);
            let mut sorted = r.assignments.clone();
            sorted.sort();
            sorted.dedup();
            assert_eq!(sorted.len(), s.len());
        }
    }

    #[test]
    fn k_one_matches_whole_set_centroid() {
        let s = sample_set();
        let pairs = [
            (ClusterCentroidMode::Positive, CentroidMode::Positive),
            (ClusterCentroidMode::NormalizedApprox, CentroidMode::NormalizedApprox),
            (ClusterCentroidMode::FrequencyExact, CentroidMode::FrequencyBisection),
        ];
        for (cm, m) in pairs {
            let r = kmeans(&s, &ClusteringConfig::new(1, cm)).unwrap();
            let expect = centroid(&s, m, None).unwrap().centroid;
            for (x, y) in r.centroids[0].bins().iter().zip(expect.bins()) {
                assert!((x - y).abs() < 1e-12, "{cm:?}");
            }
        }
    }

    #[test]
    fn invalid_configs() {
        let s = sample_set();
        assert!(kmeans(&s, &ClusteringConfig::new(0, ClusterCentroidMode::Positive)).is_err());
        assert!(kmeans(&s, &ClusteringConfig::new(7, ClusterCentroidMode::Positive)).is_err());
        let mut cfg = ClusteringConfig::new(2, ClusterCentroidMode::Positive);
        cfg.max_iterations = 0;
        assert!(kmeans(&s, &cfg).is_err());
    }

    #[test]
    fn frequency_modes_need_frequency_input() {
        let hs = vec![
            Histogram::new(vec![1.0, 2.0]).unwrap(),
            Histogram::new(vec![3.0, 1.0]).unwrap(),
        ];
        let s = WeightedHistogramSet::uniform(hs).unwrap();
        assert!(kmeans(&s, &ClusteringConfig::new(1, ClusterCentroidMode::FrequencyExact)).is_err());
        assert!(kmeans(&s, &ClusteringConfig::new(1, ClusterCentroidMode::Positive)).is_ok());
    }

    #[test]
    fn seeding_edge_cases() {
        let s = sample_set();
        let mut all = seed_indices(&s, s.len(), 3).unwrap();
        all.sort();
        assert_eq!(all, (0..s.len()).collect::<Vec<_>>());
        assert_eq!(seed_indices(&s, 1, 9).unwrap().len(), 1);
        assert_eq!(seed_indices(&s, 3, 42).unwrap(), seed_indices(&s, 3, 42).unwrap());
        assert!(seed_indices(&s, 7, 0).is_err());
    }

    #[test]
    fn seeding_with_duplicates_stays_distinct() {
        let h = Histogram::new(vec![0.5, 0.5]).unwrap();
        let s = WeightedHistogramSet::uniform(vec![h.clone(), h.clone(), h]).unwrap();
        let mut idx = seed_indices(&s, 3, 1).unwrap();
        idx.sort();
        assert_eq!(idx, vec![0, 1, 2]);
        let r = kmeans(&s, &ClusteringConfig::new(3, ClusterCentroidMode::FrequencyExact)).unwrap();
        assert_eq!(r.objective_trace.last().copied(), Some(0.0));
    }

    #[test]
    fn thread_count_does_not_change_result() {
        let s = sample_set();
        let mut cfg = ClusteringConfig::new(2, ClusterCentroidMode::NormalizedApprox);
        let one = kmeans(&s, &cfg).unwrap();
        cfg.threads = 4;
        assert_eq!(kmeans(&s, &cfg).unwrap(), one);
    }

    #[test]
    fn repair_fills_empty_clusters() {
        let hs: Vec<Histogram> = [[0.5, 0.5], [0.1, 0.9], [0.2, 0.8]]
            .iter()
            .map(|r| Histogram::new(r.to_vec()).unwrap())
            .collect();
        let mut centroids = vec![hs[0].clone(), Histogram::new(vec![0.99, 0.01]).unwrap()];
        let mut assignments = vec![0, 0, 0];
        repair_empty(&hs, &mut assignments, &mut centroids).unwrap();
        assert_eq!(assignments, vec![0, 1, 0]);
        assert_eq!(centroids[1], hs[1]);
    }
}
