//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails. Runs without the libtest harness so the
//! lines are always shown.

use std::process::{Command, ExitCode};
use std::time::Instant;

use rand::Rng;

use jeffreys_core::centroid::{
    frequency_centroid_bisection, frequency_centroid_fixedpoint, normalized_positive_centroid, positive_centroid,
    BISECTION_HALVINGS,
};
use jeffreys_core::clustering::{kmeans, ClusterCentroidMode, ClusteringConfig};
use jeffreys_core::divergence::{jeffreys_to_set, kl, kl_to_set};
use jeffreys_core::oracle::{
    alpha_trial_harness, oracle_positive_centroid, planted_two_blobs, random_frequency_histogram, random_frequency_set,
    ratio, trial_rng, RatioTable,
};
use jeffreys_core::special::lambert_w0;
use jeffreys_core::{FrequencySet, Histogram, WeightedHistogramSet};

const EPS: f64 = f64::EPSILON;

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn random_positive_histogram(rng: &mut impl Rng, d: usize) -> Histogram {
    Histogram::new((0..d).map(|_| rng.random_range(0.1..10.0)).collect()).unwrap()
}

fn random_set(rng: &mut impl Rng, max_n: usize, min_d: usize, max_d: usize) -> FrequencySet {
    let n = rng.random_range(2..=max_n);
    let d = rng.random_range(min_d..=max_d);
    random_frequency_set(rng, n, d)
}

fn within(lhs: f64, rhs: f64, slack: f64) -> bool {
    lhs <= rhs + slack * rhs.abs().max(1.0)
}

/// Lambert W round trip and iteration budget on a log-spaced grid.
fn lambert_round_trip() -> Outcome {
    let start = Instant::now();
    let points = 10_000;
    let (lo, hi) = (1e-300f64.ln(), 1e300f64.ln());
    let (mut worst, mut worst_x, mut over, mut max_iter) = (0.0f64, 0.0, 0usize, 0u32);
    // condition-scaled residual: |w e^w - x| / x / (1 + w)
    let mut worst_scaled = 0.0f64;
    for k in 0..points {
        let x = (lo + (hi - lo) * k as f64 / (points - 1) as f64).exp();
        let r = lambert_w0(x).unwrap();
        let res = ((r.value * r.value.exp() - x) / x).abs();
        max_iter = max_iter.max(r.iterations);
        worst_scaled = worst_scaled.max(res / (1.0 + r.value));
        if res > 4.0 * EPS {
            over += 1;
        }
        if res > worst {
            worst = res;
            worst_x = x;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        over == 0 && max_iter <= 5 && secs < 1.0,
        format!(
            "{over}/{points} points exceed 4 eps (worst {:.1} eps at x = {worst_x:.3e}), \
             worst residual/(1+W) {:.2} eps, max iterations {max_iter}, {secs:.3} s",
            worst / EPS,
            worst_scaled / EPS
        ),
    )
}

/// Closed-form positive centroid against a golden-section oracle, plus the
/// stationarity residual.
fn positive_centroid_optimality() -> Outcome {
    let start = Instant::now();
    let (mut max_gap, mut max_stat) = (0.0f64, 0.0f64);
    for t in 0..100u64 {
        let mut rng = trial_rng(101, t);
        let n = rng.random_range(1..=8);
        let d = rng.random_range(1..=4);
        let hs = (0..n).map(|_| random_positive_histogram(&mut rng, d)).collect();
        let ws = (0..n).map(|_| rng.random_range(0.1..1.0)).collect();
        let set = WeightedHistogramSet::with_relative_weights(hs, ws).unwrap();
        let c = positive_centroid(&set).unwrap();
        let oracle = oracle_positive_centroid(&set, 1e-10).unwrap();
        let (a, g) = set.means();
        for i in 0..d {
            let ci = c.centroid.bins()[i];
            max_gap = max_gap.max((ci - oracle.argmin[i]).abs());
            let stat = (ci / g.bins()[i]).ln() + 1.0 - a.bins()[i] / ci;
            max_stat = max_stat.max(stat.abs());
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        max_gap <= 1e-6 && max_stat <= 1e-10 && secs < 10.0,
        format!("max |c - oracle| {max_gap:.2e}, max stationarity residual {max_stat:.2e}, {secs:.2} s"),
    )
}

/// Positive-centroid mass of frequency inputs lies in (0, 1].
fn mass_at_most_one() -> Outcome {
    let (mut min_w, mut max_w, mut bad) = (f64::INFINITY, 0.0f64, 0usize);
    for t in 0..10_000u64 {
        let mut rng = trial_rng(103, t);
        let set = random_set(&mut rng, 8, 1, 32);
        let w = normalized_positive_centroid(&set).unwrap().w_c.unwrap();
        if !(w > 0.0 && w <= 1.0) {
            bad += 1;
        }
        min_w = min_w.min(w);
        max_w = max_w.max(w);
    }
    outcome(bad == 0, format!("{bad} violations, w_c in [{min_w:.6}, {max_w:.17}]"))
}

/// `J(x, H) - J(x~, H) = (w_x - 1)(KL(x~ : H) + log w_x)`.
fn mass_decomposition_identity() -> Outcome {
    let mut worst = 0.0f64;
    for t in 0..10_000u64 {
        let mut rng = trial_rng(104, t);
        let set = random_set(&mut rng, 8, 1, 32);
        let w_x = rng.random_range(0.05..20.0);
        let shape = random_frequency_histogram(&mut rng, set.dim());
        let x = Histogram::new(shape.bins().iter().map(|v| v * w_x).collect()).unwrap();
        let x_tilde = x.normalize();
        let lhs = jeffreys_to_set(&x, &set).unwrap() - jeffreys_to_set(&x_tilde, &set).unwrap();
        let rhs = (x.cumulative_sum() - 1.0) * (kl_to_set(&x_tilde, &set).unwrap() + x.cumulative_sum().ln());
        let scale = jeffreys_to_set(&x, &set).unwrap().abs().max(1.0);
        worst = worst.max((lhs - rhs).abs() / scale);
    }
    outcome(worst <= 1e-10, format!("worst relative gap {worst:.2e}"))
}

/// `J(c) <= J(c~) <= J(c~')` and `1 <= alpha <= 1/w_c`.
fn sandwich() -> Outcome {
    let (mut bad, mut max_alpha_over_bound) = (0usize, 0.0f64);
    for t in 0..10_000u64 {
        let mut rng = trial_rng(105, t);
        let set = random_set(&mut rng, 8, 1, 32);
        let pos = positive_centroid(&set).unwrap();
        let exact = frequency_centroid_bisection(&set, 1e-12).unwrap();
        let approx = normalized_positive_centroid(&set).unwrap();
        let w_c = approx.w_c.unwrap();
        let (jc, jt, ja) = (pos.objective, exact.objective, approx.objective);
        // d = 1 gives 0 / 0
        let alpha = ratio(ja, jt);
        let ok = within(jc, jt, 1e-10)
            && within(jt, ja, 1e-10)
            && within(1.0, alpha, 1e-10)
            && within(alpha, 1.0 / w_c, 1e-10);
        if !ok {
            bad += 1;
        }
        max_alpha_over_bound = max_alpha_over_bound.max(alpha * w_c);
    }
    outcome(bad == 0, format!("{bad} violations, max alpha * w_c {max_alpha_over_bound:.6}"))
}

/// Synthetic d = 2 approximation-factor statistics.
fn synthetic_alpha_statistics() -> Outcome {
    let start = Instant::now();
    let s = alpha_trial_harness(100_000, 2, 2024).unwrap();
    let secs = start.elapsed().as_secs_f64();
    outcome(
        s.mean_alpha <= 1.0001 && s.max_alpha <= 1.01 && s.min_alpha >= 1.0 - 1e-12 && secs < 60.0,
        format!(
            "mean {:.9}, max {:.8}, min {:.16}, mean w_c {:.4}, {secs:.1} s",
            s.mean_alpha, s.max_alpha, s.min_alpha, s.mean_w_c
        ),
    )
}

/// Bisection and fixed-point agree; iteration counts.
fn solver_agreement() -> Outcome {
    let (mut max_diff, mut not_52, mut fp_total) = (0.0f64, 0usize, 0u64);
    let trials = 1_000u64;
    for t in 0..trials {
        let mut rng = trial_rng(107, t);
        let set = random_set(&mut rng, 8, 2, 64);
        let b = frequency_centroid_bisection(&set, 1e-12).unwrap();
        let f = frequency_centroid_fixedpoint(&set, 1e-14).unwrap();
        for (x, y) in b.centroid.bins().iter().zip(f.centroid.bins()) {
            max_diff = max_diff.max((x - y).abs());
        }
        if b.iterations != BISECTION_HALVINGS {
            not_52 += 1;
        }
        fp_total += f.iterations as u64;
    }
    let fp_mean = fp_total as f64 / trials as f64;
    outcome(
        max_diff <= 1e-10 && not_52 == 0 && (4.0..=10.0).contains(&fp_mean),
        format!("max coordinate gap {max_diff:.2e}, {not_52} bisection runs not at 52 halvings, mean fixed-point iterations {fp_mean:.2}"),
    )
}

/// `lambda* = -KL(c~ : g~)` at both solvers' solutions.
fn lambda_consistency() -> Outcome {
    let (mut worst, mut max_lambda) = (0.0f64, f64::NEG_INFINITY);
    for t in 0..1_000u64 {
        let mut rng = trial_rng(108, t);
        let set = random_set(&mut rng, 8, 2, 64);
        let (_, g) = set.normalized_means();
        for res in [
            frequency_centroid_bisection(&set, 1e-12).unwrap(),
            frequency_centroid_fixedpoint(&set, 1e-14).unwrap(),
        ] {
            let lambda = res.lambda_star.unwrap();
            let c = res.centroid.normalize();
            worst = worst.max((lambda + kl(&c, &g).unwrap()).abs());
            max_lambda = max_lambda.max(lambda);
        }
    }
    outcome(
        worst <= 1e-8 && max_lambda <= 0.0,
        format!("max |lambda + KL(c:g)| {worst:.2e}, max lambda {max_lambda:.3e}"),
    )
}

/// Monotone k-means traces in every mode and exact planted recovery.
fn kmeans_monotone() -> Outcome {
    let mut worst_rise = f64::NEG_INFINITY;
    for t in 0..50u64 {
        let mut rng = trial_rng(109, t);
        let hs: Vec<Histogram> = (0..200).map(|_| random_frequency_histogram(&mut rng, 16).into()).collect();
        let set = WeightedHistogramSet::uniform(hs).unwrap();
        for mode in ClusterCentroidMode::ALL {
            let mut cfg = ClusteringConfig::new(5, mode);
            cfg.seed = t;
            let res = kmeans(&set, &cfg).unwrap();
            for w in res.objective_trace.windows(2) {
                worst_rise = worst_rise.max(w[1] - w[0]);
            }
        }
    }

    let mut recovered = 0;
    for mode in ClusterCentroidMode::ALL {
        let mut rng = trial_rng(110, 0);
        let (hs, labels) = planted_two_blobs(&mut rng, 50, 16, 200.0);
        let set = WeightedHistogramSet::uniform(hs.into_iter().map(Histogram::from).collect()).unwrap();
        let res = kmeans(&set, &ClusteringConfig::new(2, mode)).unwrap();
        let flip = res.assignments[0] != labels[0];
        if res.assignments.iter().zip(&labels).all(|(a, l)| (*a != *l) == flip) {
            recovered += 1;
        }
    }
    outcome(
        worst_rise <= 1e-12 && recovered == ClusterCentroidMode::ALL.len(),
        format!(
            "largest round-to-round change {worst_rise:.2e}, planted blobs recovered in {recovered}/{} modes",
            ClusterCentroidMode::ALL.len()
        ),
    )
}

/// Bench emits the four ratio columns with the expected ordering.
fn bench_table() -> Outcome {
    let exe = env!("CARGO_BIN_EXE_jeffreys");
    let text = Command::new(exe).args(["bench", "--seed", "0"]).output().unwrap();
    let json = Command::new(exe).args(["bench", "--seed", "0", "--output", "json"]).output().unwrap();
    if !text.status.success() || !json.status.success() {
        return outcome(false, "bench exited with an error".into());
    }
    let text = String::from_utf8_lossy(&text.stdout);
    let columns = ["alpha_c (positive)", "alpha_c' (normalized)", "w_c (normalizer)", "alpha_c'' (veldhuis)"];
    let header_ok = text.lines().any(|l| columns.iter().all(|c| l.contains(c)));
    let rows_ok = ["avg", "min", "max"]
        .iter()
        .all(|r| text.lines().any(|l| l.starts_with(r) && l.split_whitespace().count() == 5));
    let t: RatioTable = serde_json::from_slice(&json.stdout).unwrap();
    let ordering = t.alpha_positive.max <= 1.0 && t.alpha_veldhuis.mean >= t.alpha_normalized.mean;
    outcome(
        header_ok && rows_ok && ordering,
        format!(
            "columns {}, max alpha_c {:.6}, mean alpha_c' {:.7}, mean alpha_c'' {:.7}",
            if header_ok && rows_ok { "present" } else { "missing" },
            t.alpha_positive.max,
            t.alpha_normalized.mean,
            t.alpha_veldhuis.mean
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("Lambert W round trip", lambert_round_trip),
        ("positive centroid optimality", positive_centroid_optimality),
        ("w_c in (0, 1]", mass_at_most_one),
        ("mass decomposition identity", mass_decomposition_identity),
        ("approximation sandwich", sandwich),
        ("synthetic alpha statistics", synthetic_alpha_statistics),
        ("solver agreement", solver_agreement),
        ("lambda consistency", lambda_consistency),
        ("k-means monotonicity", kmeans_monotone),
        ("bench table", bench_table),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let o = run();
        println!("criterion {:>2} {} {name}: {}", i + 1, if o.pass { "PASS" } else { "FAIL" }, o.detail);
        if !o.pass {
            failed += 1;
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
