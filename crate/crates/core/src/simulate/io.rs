//! CSV formats for outcomes (`y,x1,…,xk`), adjacency (dense 0/1 or 1-based
//! `i,j` edge list), and hidden truth (`agent,w,lambda`).

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::str::FromStr;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::adjacency::AdjacencyMatrix;
use super::Sample;
use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdjacencyFormat {
    #[default]
    Dense,
    EdgeList,
}

impl FromStr for AdjacencyFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dense" => Ok(Self::Dense),
            "edges" | "edge-list" | "edge_list" => Ok(Self::EdgeList),
            other => Err(Error::Config(format!("unknown adjacency format {other:?}"))),
        }
    }
}

fn parse_err(path: &Path, line: u64, message: impl Into<String>) -> Error {
    Error::Parse { path: path.to_path_buf(), line, message: message.into() }
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| Error::io(path, e))
}

fn create(path: &Path) -> Result<File> {
    File::create(path).map_err(|e| Error::io(path, e))
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line()).unwrap_or(0);
    parse_err(path, line, e.to_string())
}

/// Reads `y,x1,…,xk`; returns `y` and the `n × k` covariate matrix.
pub fn read_outcomes<T: Real>(path: &Path) -> Result<(Array1<T>, Array2<T>)> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(open(path)?);
    let header = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    let k = header.len().saturating_sub(1);
    if header.get(0) != Some("y") || k == 0 {
        return Err(parse_err(path, 1, "header must be y,x1,...,xk with k >= 1"));
    }
    for (c, name) in header.iter().skip(1).enumerate() {
        if name != format!("x{}", c + 1) {
            return Err(parse_err(path, 1, format!("column {} must be named x{}, found {name:?}", c + 2, c + 1)));
        }
    }
    let mut y = Vec::new();
    let mut x = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        for (c, field) in record.iter().enumerate() {
            let value: f64 = field
                .parse()
                .map_err(|_| parse_err(path, line, format!("field {} = {field:?} is not a number", c + 1)))?;
            if !value.is_finite() {
                return Err(parse_err(path, line, format!("field {} is not finite", c + 1)));
            }
            if c == 0 {
                y.push(T::lit(value));
            } else {
                x.push(T::lit(value));
            }
        }
    }
    let n = y.len();
    let x = Array2::from_shape_vec((n, k), x).expect("row lengths checked by csv");
    Ok((Array1::from(y), x))
}

/// Reads an adjacency file, detecting the edge-list format by its `i,j` header.
///
/// An edge list needs the agent count `n`; when `None` it is the largest index seen.
pub fn read_adjacency(path: &Path, n: Option<usize>) -> Result<AdjacencyMatrix> {
    let mut first = String::new();
    BufReader::new(open(path)?).read_line(&mut first).map_err(|e| Error::io(path, e))?;
    let is_edge_list = first.trim().replace(' ', "") == "i,j";
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(is_edge_list)
        .trim(csv::Trim::All)
        .from_reader(open(path)?);

    if is_edge_list {
        let mut edges = Vec::new();
        for record in reader.records() {
            let record = record.map_err(|e| csv_error(path, e))?;
            let line = record.position().map(|p| p.line()).unwrap_or(0);
            if record.len() != 2 {
                return Err(parse_err(path, line, "edge rows need exactly two fields"));
            }
            let idx = |c: usize| -> Result<usize> {
                let v: usize = record[c]
                    .parse()
                    .map_err(|_| parse_err(path, line, format!("{:?} is not a positive integer", &record[c])))?;
                if v == 0 {
                    return Err(parse_err(path, line, "node indices are 1-based"));
                }
                Ok(v)
            };
            edges.push((idx(0)?, idx(1)?));
        }
        let n = n.unwrap_or_else(|| edges.iter().map(|&(i, j)| i.max(j)).max().unwrap_or(0));
        AdjacencyMatrix::from_edges(n, edges.into_iter().map(|(i, j)| (i - 1, j - 1)))
    } else {
        let mut rows = Vec::new();
        for record in reader.records() {
            let record = record.map_err(|e| csv_error(path, e))?;
            let r = rows.len();
            let row = record
                .iter()
                .enumerate()
                .map(|(c, field)| match field {
                    "0" => Ok(0u8),
                    "1" => Ok(1u8),
                    other => Err(Error::NonBinary { row: r + 1, col: c + 1, value: other.to_string() }),
                })
                .collect::<Result<Vec<u8>>>()?;
            rows.push(row);
        }
        let adj = AdjacencyMatrix::from_dense(&rows)?;
        if let Some(n) = n {
            if adj.n() != n {
                return Err(Error::DimensionMismatch { what: "adjacency size vs outcome rows", expected: n, found: adj.n() });
            }
        }
        Ok(adj)
    }
}

/// Reads observed data. The result carries no hidden truth.
pub fn ingest_sample<T: Real>(outcome_csv: &Path, adjacency: &Path) -> Result<Sample<T>> {
    let (y, x) = read_outcomes(outcome_csv)?;
    let d = read_adjacency(adjacency, Some(y.len()))?;
    Sample::new(y, x, d)
}

pub fn write_outcomes<T: Real>(sample: &Sample<T>, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    let mut header = vec!["y".to_string()];
    header.extend((1..=sample.k()).map(|c| format!("x{c}")));
    w.write_record(&header)?;
    for i in 0..sample.n() {
        let mut row = vec![sample.y[i].to_string()];
        row.extend(sample.x.row(i).iter().map(|v| v.to_string()));
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_adjacency_dense(adj: &AdjacencyMatrix, path: &Path) -> Result<()> {
    let mut out = std::io::BufWriter::new(create(path)?);
    let mut line = String::with_capacity(2 * adj.n());
    for i in 0..adj.n() {
        line.clear();
        for j in 0..adj.n() {
            if j > 0 {
                line.push(',');
            }
            line.push(if adj.get(i, j) { '1' } else { '0' });
        }
        line.push('\n');
        out.write_all(line.as_bytes()).map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

pub fn write_edge_list(adj: &AdjacencyMatrix, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(["i", "j"])?;
    for (i, j) in adj.edges() {
        w.write_record([(i + 1).to_string(), (j + 1).to_string()])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Writes `agent,w,lambda`; fails if the sample has no hidden truth.
pub fn write_truth<T: Real>(sample: &Sample<T>, path: &Path) -> Result<()> {
    let (Some(w), Some(lam)) = (&sample.hidden_w, &sample.hidden_lambda) else {
        return Err(Error::Config("sample has no hidden truth to write".into()));
    };
    let mut out = csv::Writer::from_writer(create(path)?);
    out.write_record(["agent", "w", "lambda"])?;
    for i in 0..sample.n() {
        out.write_record([(i + 1).to_string(), w[i].to_string(), lam[i].to_string()])?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}
