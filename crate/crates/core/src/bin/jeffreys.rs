//! Command-line front end: centroids, k-means and the ratio benchmark.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use jeffreys_core::centroid::{centroid, frequency_centroid_bisection, CentroidMode, DEFAULT_BISECTION_TOL};
use jeffreys_core::clustering::{kmeans, ClusterCentroidMode, ClusteringConfig};
use jeffreys_core::divergence::jeffreys_to_set;
use jeffreys_core::io::{parse_dataset, Dataset, DatasetFormat, HistogramKind, RunReport};
use jeffreys_core::oracle::{ratio, ratio_table, Generator, RatioTable};
use jeffreys_core::{Error, Result, Smoothing};

const EXIT_VALIDATION: u8 = 1;
const EXIT_NUMERIC: u8 = 2;
const EXIT_USAGE: u8 = 64;

#[derive(Parser)]
#[command(name = "jeffreys", version, about = "Jeffreys centroids and k-means for histograms")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute the centroid of a histogram set.
    Centroid(CentroidArgs),
    /// Cluster histograms with Jeffreys k-means.
    Kmeans(KmeansArgs),
    /// Ratio statistics of the approximations on synthetic data.
    Bench(BenchArgs),
}

#[derive(Args)]
struct InputArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[arg(long, value_enum, default_value_t = Kind::Frequency)]
    kind: Kind,
}

#[derive(Args)]
struct CentroidArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, value_enum, default_value_t = Mode::Bisection)]
    mode: Mode,
    /// Solver tolerance (bisection and fixed-point modes).
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long, value_enum, default_value_t = Output::Json)]
    output: Output,
    /// Also solve exactly by bisection and report the objective ratio.
    #[arg(long)]
    compare_exact: bool,
}

#[derive(Args)]
struct KmeansArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long)]
    k: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = ClusterMode::Exact)]
    centroid_mode: ClusterMode,
    #[arg(long, default_value_t = 100)]
    max_iters: u32,
    #[arg(long, default_value_t = 1)]
    threads: usize,
    #[arg(long, value_enum, default_value_t = Output::Json)]
    output: Output,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, default_value_t = 200)]
    trials: usize,
    #[arg(long, default_value_t = 256)]
    dims: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Histograms per set.
    #[arg(long, default_value_t = 20)]
    members: usize,
    #[arg(long, value_enum, default_value_t = GeneratorArg::Intensity)]
    generator: GeneratorArg,
    /// Worker threads; 0 uses all cores.
    #[arg(long, default_value_t = 0)]
    threads: usize,
    #[arg(long, value_enum, default_value_t = BenchOutput::Text)]
    output: BenchOutput,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
    /// A directory of binary PGM images, or a single image.
    PgmDir,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Positive,
    Frequency,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Positive,
    Normalized,
    Veldhuis,
    Bisection,
    Fixedpoint,
}

#[derive(Clone, Copy, ValueEnum)]
enum ClusterMode {
    Positive,
    Normalized,
    #[value(name = "fixedpoint-1step")]
    Fixedpoint1Step,
    Exact,
}

#[derive(Clone, Copy, ValueEnum)]
enum GeneratorArg {
    Intensity,
    Uniform,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Output {
    Json,
    Csv,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum BenchOutput {
    Text,
    Json,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    let outcome = match cli.command {
        Command::Centroid(args) => run_centroid(args),
        Command::Kmeans(args) => run_kmeans(args),
        Command::Bench(args) => run_bench(args),
    };
    match outcome {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("jeffreys: {e}");
            ExitCode::from(if e.is_numeric() { EXIT_NUMERIC } else { EXIT_VALIDATION })
        }
    }
}

fn load(args: &InputArgs) -> Result<Dataset> {
    let format = match args.format {
        Format::Csv => DatasetFormat::Csv,
        Format::Json => DatasetFormat::Json,
        Format::PgmDir => DatasetFormat::Pgm,
    };
    let kind = match args.kind {
        Kind::Positive => HistogramKind::Positive,
        Kind::Frequency => HistogramKind::Frequency,
    };
    let data = parse_dataset(&args.input, format, kind, &Smoothing::from_env()?)?;
    if let Some(eps) = data.epsilon {
        eprintln!("jeffreys: smoothed {} histogram(s) with empty bins (epsilon up to {eps:e})", data.smoothed);
    }
    Ok(data)
}

fn run_centroid(args: CentroidArgs) -> Result<String> {
    if let Some(tol) = args.tol {
        if !(tol.is_finite() && tol > 0.0) {
            return Err(Error::Validation(format!("--tol must be positive, got {tol}")));
        }
    }
    let data = load(&args.input)?;
    let mode = match args.mode {
        Mode::Positive => CentroidMode::Positive,
        Mode::Normalized => CentroidMode::NormalizedApprox,
        Mode::Veldhuis => CentroidMode::Veldhuis,
        Mode::Bisection => CentroidMode::FrequencyBisection,
        Mode::Fixedpoint => CentroidMode::FrequencyFixedpoint,
    };
    let start = Instant::now();
    let result = centroid(&data.set, mode, args.tol)?;
    let elapsed = start.elapsed().as_secs_f64();
    let mut report = RunReport::new(&result, data.set.len(), data.epsilon, elapsed);

    if args.compare_exact {
        let fset = data.set.to_frequency()?;
        let exact = frequency_centroid_bisection(&fset, DEFAULT_BISECTION_TOL)?;
        // the positive centroid's own objective is already J(set, c)
        let objective = jeffreys_to_set(&result.centroid, &fset)?;
        report.alpha = Some(ratio(objective, exact.objective));
        report.exact_objective = Some(exact.objective);
    }
    Ok(match args.output {
        Output::Json => format!("{}\n", report.to_json()),
        Output::Csv => report.to_csv(),
    })
}

#[derive(Serialize)]
struct KmeansReport<'a> {
    k: usize,
    seed: u64,
    centroid_mode: ClusterCentroidMode,
    iterations: u32,
    assignments: &'a [usize],
    centroids: Vec<&'a [f64]>,
    objective_trace: &'a [f64],
}

fn run_kmeans(args: KmeansArgs) -> Result<String> {
    let data = load(&args.input)?;
    let mode = match args.centroid_mode {
        ClusterMode::Positive => ClusterCentroidMode::Positive,
        ClusterMode::Normalized => ClusterCentroidMode::NormalizedApprox,
        ClusterMode::Fixedpoint1Step => ClusterCentroidMode::FrequencyFixedpoint1Step,
        ClusterMode::Exact => ClusterCentroidMode::FrequencyExact,
    };
    let mut cfg = ClusteringConfig::new(args.k, mode);
    cfg.seed = args.seed;
    cfg.max_iterations = args.max_iters;
    cfg.threads = args.threads.max(1);
    let res = kmeans(&data.set, &cfg)?;

    Ok(match args.output {
        Output::Json => {
            let report = KmeansReport {
                k: args.k,
                seed: args.seed,
                centroid_mode: mode,
                iterations: res.iterations,
                assignments: &res.assignments,
                centroids: res.centroids.iter().map(|c| c.bins()).collect(),
                objective_trace: &res.objective_trace,
            };
            format!("{}\n", serde_json::to_string_pretty(&report).expect("serializable report"))
        }
        Output::Csv => {
            let mut out = String::from("index,cluster\n");
            for (i, c) in res.assignments.iter().enumerate() {
                out.push_str(&format!("{i},{c}\n"));
            }
            out
        }
    })
}

fn run_bench(args: BenchArgs) -> Result<String> {
    let generator = match args.generator {
        GeneratorArg::Intensity => Generator::Intensity,
        GeneratorArg::Uniform => Generator::Uniform,
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.threads)
        .build()
        .map_err(|e| Error::Validation(format!("cannot start {} worker threads: {e}", args.threads)))?;
    let start = Instant::now();
    let table = pool.install(|| ratio_table(args.trials, args.dims, args.members, generator, args.seed))?;
    eprintln!("jeffreys: bench finished in {:.2} s", start.elapsed().as_secs_f64());
    Ok(match args.output {
        BenchOutput::Text => render_table(&table, args.seed),
        BenchOutput::Json => format!("{}\n", serde_json::to_string_pretty(&table).expect("serializable table")),
    })
}

fn render_table(t: &RatioTable, seed: u64) -> String {
    let mut out = format!(
        "{} histograms: {} trials, {} bins, {} members, seed {}\n",
        t.generator.name(),
        t.trials,
        t.dims,
        t.members,
        seed
    );
    out.push_str(&format!(
        "{:<5} {:>22} {:>22} {:>22} {:>22}\n",
        "", "alpha_c (positive)", "alpha_c' (normalized)", "w_c (normalizer)", "alpha_c'' (veldhuis)"
    ));
    let cols = [&t.alpha_positive, &t.alpha_normalized, &t.w_c, &t.alpha_veldhuis];
    for (label, pick) in [("avg", 0), ("min", 1), ("max", 2)] {
        out.push_str(&format!("{label:<5}"));
        for s in cols {
            let v = [s.mean, s.min, s.max][pick];
            out.push_str(&format!(" {v:>22.16}"));
        }
        out.push('\n');
    }
    out.push_str(&format!(
        "mean iterations: bisection {:.2}, fixed-point {:.2}\n",
        t.mean_bisection_iterations, t.mean_fixedpoint_iterations
    ));
    out
}
