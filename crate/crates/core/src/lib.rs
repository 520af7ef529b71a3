//! Jeffreys divergence centroids of histogram sets.
//!
//! The Jeffreys divergence `J(p, q) = sum_i (p^i - q^i) log(p^i / q^i)` is the
//! symmetrized Kullback-Leibler divergence. This crate computes centroids
//! minimizing the weighted average `sum_j pi_j J(h_j, x)`:
//!
//! * over positive histograms, exactly, via the Lambert W function
//!   ([`centroid::positive_centroid`]);
//! * over the probability simplex, either approximately with a guaranteed
//!   factor ([`centroid::normalized_positive_centroid`]) or to machine
//!   precision ([`centroid::frequency_centroid_bisection`],
//!   [`centroid::frequency_centroid_fixedpoint`]);
//!
//! and uses them in a Jeffreys k-means clusterer ([`clustering::kmeans`]).

pub mod centroid;
pub mod clustering;
pub mod divergence;
pub mod error;
pub mod histogram;
pub mod io;
pub mod oracle;
pub mod special;

pub use centroid::{centroid, CentroidMode, CentroidResult};
pub use clustering::{kmeans, ClusterCentroidMode, ClusteringConfig, ClusteringResult};
pub use error::{Error, Result};
pub use histogram::{FrequencyHistogram, FrequencySet, Histogram, Smoothing, WeightedHistogramSet};
