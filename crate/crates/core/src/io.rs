//! Dataset ingestion (CSV, JSON, binary PGM) and report serialization.
//!
//! CSV: one histogram per row, optionally led by a `weight:<value>` column.
//! JSON: `{"weights": [...], "histograms": [[...], ...]}` with `weights`
//! optional. PGM: 8-bit binary (`P5`) grayscale images, each turned into a
//! 256-bin intensity histogram; a directory yields one histogram per `.pgm`
//! file in name order. Missing weights default to uniform; explicit weights
//! are rescaled to sum to one.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::centroid::CentroidResult;
use crate::error::{Error, Result};
use crate::histogram::{Histogram, Smoothing, WeightedHistogramSet};

pub const PGM_BINS: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetFormat {
    Csv,
    Json,
    /// A single `.pgm` file or a directory of them.
    Pgm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HistogramKind {
    Positive,
    Frequency,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub format: DatasetFormat,
    pub kind: HistogramKind,
    pub set: WeightedHistogramSet<Histogram>,
    /// Largest smoothing epsilon applied to any member.
    pub epsilon: Option<f64>,
    /// Number of members that had empty bins.
    pub smoothed: usize,
}

pub fn parse_dataset(path: &Path, format: DatasetFormat, kind: HistogramKind, smoothing: &Smoothing) -> Result<Dataset> {
    let (rows, weights) = match format {
        DatasetFormat::Csv => parse_csv(&fs::read_to_string(path)?)?,
        DatasetFormat::Json => parse_json(&fs::read_to_string(path)?)?,
        DatasetFormat::Pgm => (read_pgm_path(path)?, None),
    };
    build_dataset(rows, weights, format, kind, smoothing)
}

/// Applies smoothing and the kind policy to raw rows.
pub fn build_dataset(
    rows: Vec<Vec<f64>>,
    weights: Option<Vec<f64>>,
    format: DatasetFormat,
    kind: HistogramKind,
    smoothing: &Smoothing,
) -> Result<Dataset> {
    let mut epsilon: Option<f64> = None;
    let mut smoothed = 0;
    let mut hs = Vec::with_capacity(rows.len());
    for (j, row) in rows.into_iter().enumerate() {
        let tag = |e: Error| Error::validation(format!("histogram {j}: {e}"));
        let (h, eps) = match (kind, format) {
            (HistogramKind::Positive, _) => smoothing.histogram(row).map_err(tag)?,
            // image counts are normalized rather than checked
            (HistogramKind::Frequency, DatasetFormat::Pgm) => {
                let (h, eps) = smoothing.histogram(row).map_err(tag)?;
                (h.normalize().into(), eps)
            }
            (HistogramKind::Frequency, _) => {
                let (h, eps) = smoothing.frequency(row).map_err(tag)?;
                (h.into(), eps)
            }
        };
        if let Some(e) = eps {
            smoothed += 1;
            epsilon = Some(epsilon.map_or(e, |cur| cur.max(e)));
        }
        hs.push(h);
    }
    let set = match weights {
        Some(w) => WeightedHistogramSet::with_relative_weights(hs, w)?,
        None => WeightedHistogramSet::uniform(hs)?,
    };
    Ok(Dataset { format, kind, set, epsilon, smoothed })
}

type Rows = (Vec<Vec<f64>>, Option<Vec<f64>>);

pub fn parse_csv(text: &str) -> Result<Rows> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut weights: Vec<f64> = Vec::new();
    let mut weighted: Option<bool> = None;
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            Error::Parse { line, column: 0, message: e.to_string() }
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.iter().all(str::is_empty) {
            continue;
        }
        let mut fields = record.iter().enumerate().peekable();
        let has_weight = fields.peek().is_some_and(|(_, f)| f.starts_with("weight:"));
        match weighted {
            None => weighted = Some(has_weight),
            Some(w) if w != has_weight => {
                return Err(Error::Parse {
                    line,
                    column: 1,
                    message: "either every row or no row must carry a weight: column".into(),
                })
            }
            _ => {}
        }
        if has_weight {
            let (_, f) = fields.next().expect("peeked");
            let w = parse_number(&f["weight:".len()..], line, 1)?;
            if !(w > 0.0 && w.is_finite()) {
                return Err(Error::Parse { line, column: 1, message: format!("weight must be positive, got {w}") });
            }
            weights.push(w);
        }
        let row = fields
            .map(|(c, f)| parse_number(f, line, c as u64 + 1))
            .collect::<Result<Vec<_>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(Error::Parse {
                    line,
                    column: 0,
                    message: format!("dimension mismatch: expected {} bins, found {}", first.len(), row.len()),
                });
            }
        }
        if row.is_empty() {
            return Err(Error::Parse { line, column: 0, message: "row has no bins".into() });
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::validation("dataset contains no histograms"));
    }
    Ok((rows, weighted.unwrap_or(false).then_some(weights)))
}

fn parse_number(field: &str, line: u64, column: u64) -> Result<f64> {
    field.trim().parse::<f64>().map_err(|_| Error::Parse {
        line,
        column,
        message: format!("not a number: {field:?}"),
    })
}

#[derive(Debug, Serialize, Deserialize)]
struct JsonDataset {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    weights: Option<Vec<f64>>,
    histograms: Vec<Vec<f64>>,
}

pub fn parse_json(text: &str) -> Result<Rows> {
    let data: JsonDataset = serde_json::from_str(text).map_err(|e| Error::Parse {
        line: e.line() as u64,
        column: e.column() as u64,
        message: e.to_string(),
    })?;
    if data.histograms.is_empty() {
        return Err(Error::validation("dataset contains no histograms"));
    }
    let d = data.histograms[0].len();
    if let Some(j) = data.histograms.iter().position(|h| h.len() != d) {
        return Err(Error::validation(format!(
            "dimension mismatch: histogram {j} has {} bins, expected {d}",
            data.histograms[j].len()
        )));
    }
    if let Some(w) = &data.weights {
        if w.len() != data.histograms.len() {
            return Err(Error::validation(format!("{} weights for {} histograms", w.len(), data.histograms.len())));
        }
    }
    Ok((data.histograms, data.weights))
}

/// Intensity counts of an 8-bit binary PGM image.
pub fn pgm_histogram(bytes: &[u8]) -> Result<Vec<f64>> {
    let mut pos = 0;
    let magic = pgm_token(bytes, &mut pos)?;
    if magic != "P5" {
        return Err(Error::validation(format!("unsupported image magic {magic:?}; only binary PGM (P5) is accepted")));
    }
    let width = pgm_int(bytes, &mut pos, "width")?;
    let height = pgm_int(bytes, &mut pos, "height")?;
    let maxval = pgm_int(bytes, &mut pos, "maxval")?;
    if maxval == 0 || maxval > 255 {
        return Err(Error::validation(format!("maxval {maxval} unsupported; only 8-bit PGM is accepted")));
    }
    // exactly one whitespace byte separates the header from the raster
    pos += 1;
    let n = width * height;
    let raster = bytes
        .get(pos..pos + n)
        .ok_or_else(|| Error::validation(format!("PGM raster truncated: expected {n} bytes")))?;
    let mut counts = vec![0.0; PGM_BINS];
    for &p in raster {
        if p as usize > maxval {
            return Err(Error::validation(format!("pixel value {p} exceeds maxval {maxval}")));
        }
        counts[p as usize] += 1.0;
    }
    Ok(counts)
}

fn pgm_token(bytes: &[u8], pos: &mut usize) -> Result<String> {
    loop {
        while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if *pos < bytes.len() && bytes[*pos] == b'#' {
            while *pos < bytes.len() && bytes[*pos] != b'\n' {
                *pos += 1;
            }
            continue;
        }
        break;
    }
    let start = *pos;
    while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() && bytes[*pos] != b'#' {
        *pos += 1;
    }
    if start == *pos {
        return Err(Error::validation("PGM header truncated"));
    }
    Ok(String::from_utf8_lossy(&bytes[start..*pos]).into_owned())
}

fn pgm_int(bytes: &[u8], pos: &mut usize, what: &str) -> Result<usize> {
    let tok = pgm_token(bytes, pos)?;
    tok.parse()
        .map_err(|_| Error::validation(format!("PGM {what} is not an integer: {tok:?}")))
}

fn read_pgm_path(path: &Path) -> Result<Vec<Vec<f64>>> {
    if path.is_dir() {
        let mut files: Vec<PathBuf> = fs::read_dir(path)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_file() && p.extension().is_some_and(|x| x.eq_ignore_ascii_case("pgm")))
            .collect();
        files.sort();
        if files.is_empty() {
            return Err(Error::validation(format!("no .pgm files in {}", path.display())));
        }
        files
            .iter()
            .map(|f| {
                pgm_histogram(&fs::read(f)?).map_err(|e| Error::validation(format!("{}: {e}", f.display())))
            })
            .collect()
    } else {
        Ok(vec![pgm_histogram(&fs::read(path)?)?])
    }
}

/// CSV with a leading `weight:` column; bins use shortest round-trip decimals.
pub fn write_csv<H: AsRef<[f64]>>(set: &WeightedHistogramSet<H>) -> String {
    let mut out = String::new();
    for (w, h) in set.iter() {
        out.push_str(&format!("weight:{w}"));
        for b in h.as_ref() {
            out.push_str(&format!(",{b}"));
        }
        out.push('\n');
    }
    out
}

pub fn write_json<H: AsRef<[f64]>>(set: &WeightedHistogramSet<H>) -> String {
    let data = JsonDataset {
        weights: Some(set.weights().to_vec()),
        histograms: set.histograms().iter().map(|h| h.as_ref().to_vec()).collect(),
    };
    serde_json::to_string(&data).expect("finite floats serialize")
}

/// Machine-readable summary of one centroid computation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub mode: String,
    pub n: usize,
    pub d: usize,
    pub centroid: Vec<f64>,
    pub w_c: Option<f64>,
    pub lambda_star: Option<f64>,
    pub iterations: u32,
    pub objective: f64,
    pub bound_factor: Option<f64>,
    /// Objective ratio against the exact frequency centroid.
    pub alpha: Option<f64>,
    pub exact_objective: Option<f64>,
    pub epsilon: Option<f64>,
    pub wall_clock_seconds: f64,
}

impl RunReport {
    pub fn new(result: &CentroidResult, n: usize, epsilon: Option<f64>, wall_clock_seconds: f64) -> Self {
        Self {
            mode: result.mode.name().to_string(),
            n,
            d: result.centroid.dim(),
            centroid: result.centroid.bins().to_vec(),
            w_c: result.w_c,
            lambda_star: result.lambda_star,
            iterations: result.iterations,
            objective: result.objective,
            bound_factor: result.bound_factor,
            alpha: None,
            exact_objective: None,
            epsilon,
            wall_clock_seconds,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse {
            line: e.line() as u64,
            column: e.column() as u64,
            message: e.to_string(),
        })
    }

    /// Header line and one data row; centroid bins become `bin_<i>` columns.
    pub fn to_csv(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        let mut header = vec![
            "mode", "n", "d", "w_c", "lambda_star", "iterations", "objective", "bound_factor", "alpha",
            "exact_objective", "epsilon", "wall_clock_seconds",
        ]
        .into_iter()
        .map(String::from)
        .collect::<Vec<_>>();
        header.extend((0..self.centroid.len()).map(|i| format!("bin_{i}")));
        let mut row = vec![
            self.mode.clone(),
            self.n.to_string(),
            self.d.to_string(),
            opt(self.w_c),
            opt(self.lambda_star),
            self.iterations.to_string(),
            self.objective.to_string(),
            opt(self.bound_factor),
            opt(self.alpha),
            opt(self.exact_objective),
            opt(self.epsilon),
            self.wall_clock_seconds.to_string(),
        ];
        row.extend(self.centroid.iter().map(f64::to_string));
        format!("{}\n{}\n", header.join(","), row.join(","))
    }
}
