//! Dataset and graph files.
//!
//! Datasets are comma-separated numbers, one sample per row, target in the
//! last column, with an optional header row. Graph files start with a
//! `d=<int>` line followed by one `i<TAB>j[<TAB>sign]` edge per line
//! (0-based indices, sign `1` or `-1`, default `1`).

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use ndarray::{Array1, Array2, ArrayRef1, ArrayRef2, Axis};
use serde::{Deserialize, Serialize};

use super::rng::SampleRng;
use crate::constraints::{Edge, EdgeSign, FeatureGraph};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TargetKind {
    /// Class labels in `{-1, +1}`.
    Labels,
    /// Real-valued responses.
    Responses,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CsvOptions {
    pub has_header: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub x: Array2<f64>,
    pub y: Array1<f64>,
    pub kind: TargetKind,
    pub graph: Option<FeatureGraph>,
}

impl Dataset {
    pub fn new(x: Array2<f64>, y: Array1<f64>, kind: TargetKind) -> Result<Self> {
        if x.nrows() != y.len() {
            return Err(Error::InvalidData(format!(
                "{} samples but {} targets",
                x.nrows(),
                y.len()
            )));
        }
        if kind == TargetKind::Labels {
            if let Some(bad) = y.iter().find(|&&v| v != 1.0 && v != -1.0) {
                return Err(Error::InvalidData(format!("label {bad} is not -1 or +1")));
            }
        }
        Ok(Self { x, y, kind, graph: None })
    }

    pub fn with_graph(mut self, graph: FeatureGraph) -> Result<Self> {
        if graph.dim() != self.x.ncols() {
            return Err(Error::DimensionMismatch { expected: self.x.ncols(), found: graph.dim() });
        }
        self.graph = Some(graph);
        Ok(self)
    }

    pub fn samples(&self) -> usize {
        self.x.nrows()
    }

    pub fn features(&self) -> usize {
        self.x.ncols()
    }

    /// Rows at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            x: self.x.select(Axis(0), indices),
            y: self.y.select(Axis(0), indices),
            kind: self.kind,
            graph: self.graph.clone(),
        }
    }
}

fn parse_error(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse { path: path.display().to_string(), line, message: message.into() }
}

fn read_rows(path: &Path, opts: CsvOptions) -> Result<Vec<Vec<f64>>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(opts.has_header)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let mut rows = Vec::new();
    let mut width = None;
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(0);
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        let row = record
            .iter()
            .map(|field| {
                field
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| parse_error(path, line, format!("'{field}' is not a finite number")))
            })
            .collect::<Result<Vec<f64>>>()?;
        match width {
            None => width = Some(row.len()),
            Some(w) if w != row.len() => {
                return Err(parse_error(path, line, format!("expected {w} fields, found {}", row.len())))
            }
            _ => {}
        }
        rows.push(row);
    }
    Ok(rows)
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => parse_error(path, line, format!("{other:?}")),
    }
}

fn rows_to_matrix(path: &Path, rows: Vec<Vec<f64>>) -> Result<Array2<f64>> {
    let ncols = rows.first().map(Vec::len).unwrap_or(0);
    if rows.is_empty() || ncols == 0 {
        return Err(parse_error(path, 0, "no data rows"));
    }
    let nrows = rows.len();
    let flat: Vec<f64> = rows.into_iter().flatten().collect();
    Array2::from_shape_vec((nrows, ncols), flat).map_err(|e| parse_error(path, 0, e.to_string()))
}

/// Reads a dataset with the target in the last column.
pub fn load_csv(path: impl AsRef<Path>, opts: CsvOptions, kind: TargetKind) -> Result<Dataset> {
    let path = path.as_ref();
    let all = rows_to_matrix(path, read_rows(path, opts)?)?;
    let d = all.ncols();
    if d < 2 {
        return Err(parse_error(path, 0, "need at least one feature and a target column"));
    }
    let x = all.slice(ndarray::s![.., ..d - 1]).to_owned();
    let y = all.column(d - 1).to_owned();
    Dataset::new(x, y, kind)
}

pub fn load_matrix_csv(path: impl AsRef<Path>, opts: CsvOptions) -> Result<Array2<f64>> {
    let path = path.as_ref();
    rows_to_matrix(path, read_rows(path, opts)?)
}

/// Reads a vector stored one value per line (or as a single row).
pub fn load_vector_csv(path: impl AsRef<Path>) -> Result<Array1<f64>> {
    let path = path.as_ref();
    let m = rows_to_matrix(path, read_rows(path, CsvOptions::default())?)?;
    if m.ncols() == 1 || m.nrows() == 1 {
        Ok(Array1::from_iter(m.iter().cloned()))
    } else {
        Err(parse_error(path, 0, format!("expected a vector, found a {}x{} table", m.nrows(), m.ncols())))
    }
}

/// Writes rows with shortest round-trip formatting of every value.
pub fn write_matrix_csv(path: impl AsRef<Path>, x: &ArrayRef2<f64>) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    for row in x.rows() {
        let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        writeln!(out, "{}", line.join(","))?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_vector_csv(path: impl AsRef<Path>, v: &ArrayRef1<f64>) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    for value in v.iter() {
        writeln!(out, "{value}")?;
    }
    out.flush()?;
    Ok(())
}

/// Reads a graph file and checks its header against `d`.
pub fn load_graph(path: impl AsRef<Path>, d: usize) -> Result<FeatureGraph> {
    let path = path.as_ref();
    let reader = BufReader::new(File::open(path)?);
    let mut header = None;
    let mut edges = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        let text = line.trim();
        if text.is_empty() || text.starts_with('#') {
            continue;
        }
        if header.is_none() {
            let value = text
                .strip_prefix("d=")
                .ok_or_else(|| parse_error(path, lineno, "expected header 'd=<int>'"))?;
            let declared: usize = value
                .trim()
                .parse()
                .map_err(|_| parse_error(path, lineno, format!("bad dimension '{value}'")))?;
            if declared != d {
                return Err(parse_error(path, lineno, format!("graph declares d={declared}, data has d={d}")));
            }
            header = Some(declared);
            continue;
        }
        let fields: Vec<&str> = text.split('\t').map(str::trim).collect();
        if !(2..=3).contains(&fields.len()) {
            return Err(parse_error(path, lineno, "expected 'i<TAB>j[<TAB>sign]'"));
        }
        let index = |s: &str| -> Result<usize> {
            let i: usize = s.parse().map_err(|_| parse_error(path, lineno, format!("bad index '{s}'")))?;
            if i >= d {
                return Err(parse_error(path, lineno, format!("index {i} out of range for d={d}")));
            }
            Ok(i)
        };
        let i = index(fields[0])?;
        let j = index(fields[1])?;
        let sign = match fields.get(2).copied() {
            None | Some("1") | Some("+1") => EdgeSign::Positive,
            Some("-1") => EdgeSign::Negative,
            Some(other) => return Err(parse_error(path, lineno, format!("bad sign '{other}'"))),
        };
        edges.push(Edge { i, j, sign });
    }
    if header.is_none() {
        return Err(parse_error(path, 0, "missing 'd=<int>' header"));
    }
    FeatureGraph::new(d, edges).map_err(|e| parse_error(path, 0, e.to_string()))
}

pub fn write_graph(path: impl AsRef<Path>, graph: &FeatureGraph) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "d={}", graph.dim())?;
    for e in graph.edges() {
        match e.sign {
            EdgeSign::Positive => writeln!(out, "{}\t{}\t1", e.i, e.j)?,
            EdgeSign::Negative => writeln!(out, "{}\t{}\t-1", e.i, e.j)?,
        }
    }
    out.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// `n_splits` independent random train/test partitions of `0..m`; split
/// `k` shuffles with a generator seeded by `seed + k`.
pub fn random_splits(m: usize, train_fraction: f64, n_splits: usize, seed: u64) -> Result<Vec<Split>> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::InvalidConfig(format!("train fraction {train_fraction} outside ]0, 1[")));
    }
    let n_train = (train_fraction * m as f64).round() as usize;
    if n_train == 0 || n_train == m {
        return Err(Error::InvalidConfig(format!("cannot split {m} samples at {train_fraction}")));
    }
    Ok((0..n_splits as u64)
        .map(|k| {
            let mut rng = SampleRng::new(seed.wrapping_add(k));
            let mut idx: Vec<usize> = (0..m).collect();
            rng.shuffle(&mut idx);
            let test = idx.split_off(n_train);
            Split { train: idx, test }
        })
        .collect())
}
