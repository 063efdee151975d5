//! Tabular feature data and k-nearest-neighbour graph construction.

use std::fmt::Write as _;
use std::io::Read;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Error, Result};
use crate::graph::Graph;
use crate::par::*;

/// Dense row-major table of reals with named columns.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    columns: Vec<String>,
    data: Vec<f64>,
}

impl FeatureTable {
    pub fn new(columns: Vec<String>, data: Vec<f64>) -> Result<Self> {
        if columns.is_empty() {
            return Err(invalid("feature table needs at least one column"));
        }
        if !data.len().is_multiple_of(columns.len()) {
            return Err(invalid(format!(
                "{} values do not fill rows of {} columns",
                data.len(),
                columns.len()
            )));
        }
        Ok(FeatureTable { columns, data })
    }

    pub fn rows(&self) -> usize {
        self.data.len() / self.dims()
    }

    pub fn dims(&self) -> usize {
        self.columns.len()
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let d = self.dims();
        &self.data[i * d..(i + 1) * d]
    }

    pub fn get(&self, i: usize, col: usize) -> f64 {
        self.data[i * self.dims() + col]
    }

    /// Keeps the listed rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Self {
        let data = rows.iter().flat_map(|&i| self.row(i).iter().copied()).collect();
        FeatureTable {
            columns: self.columns.clone(),
            data,
        }
    }

    /// CSV with the column names as header.
    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for i in 0..self.rows() {
            for (c, x) in self.row(i).iter().enumerate() {
                if c > 0 {
                    out.push(',');
                }
                let _ = write!(out, "{x}");
            }
            out.push('\n');
        }
        out
    }
}

/// Numeric features plus an optional categorical column read alongside
/// them (typically the protected attribute).
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub features: FeatureTable,
    pub labels: Option<Vec<String>>,
}

/// Reads a headed CSV, keeping `columns` (all columns when `None`) in the
/// order given, plus `label_column` as raw strings.
pub fn read_dataset<R: Read>(
    reader: R,
    columns: Option<&[String]>,
    label_column: Option<&str>,
) -> Result<Dataset> {
    let mut csv = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = csv.headers()?.clone();
    let position = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    let selected: Vec<String> = match columns {
        Some(names) => names.to_vec(),
        None => headers
            .iter()
            .filter(|h| Some(*h) != label_column)
            .map(str::to_string)
            .collect(),
    };
    let indices = selected
        .iter()
        .map(|name| position(name))
        .collect::<Result<Vec<_>>>()?;
    let label_index = label_column.map(position).transpose()?;

    let mut data = Vec::new();
    let mut labels = label_index.map(|_| Vec::new());
    for (row, record) in csv.records().enumerate() {
        let record = record?;
        for (&idx, name) in indices.iter().zip(&selected) {
            let cell = record.get(idx).unwrap_or("");
            let value = cell.parse::<f64>().ok().filter(|v| v.is_finite());
            data.push(value.ok_or_else(|| Error::NonNumeric {
                row: row + 1,
                column: name.clone(),
                value: cell.to_string(),
            })?);
        }
        if let (Some(idx), Some(out)) = (label_index, labels.as_mut()) {
            out.push(record.get(idx).unwrap_or("").to_string());
        }
    }
    Ok(Dataset {
        features: FeatureTable::new(selected, data)?,
        labels,
    })
}

/// Loads the selected numeric columns of a CSV file.
pub fn load_features(path: impl AsRef<Path>, columns: Option<&[String]>) -> Result<FeatureTable> {
    let file = std::fs::File::open(path)?;
    Ok(read_dataset(file, columns, None)?.features)
}

/// Z-scores every column with the population standard deviation; constant
/// columns become zeros.
pub fn standardize(table: &FeatureTable) -> FeatureTable {
    let rows = table.rows();
    let dims = table.dims();
    let mut data = table.data.clone();
    for c in 0..dims {
        let column = || (0..rows).map(|i| table.get(i, c));
        let mean = crate::sum::sum(column()) / rows as f64;
        let var = crate::sum::sum(column().map(|x| (x - mean) * (x - mean))) / rows as f64;
        let sd = var.sqrt();
        for i in 0..rows {
            let x = &mut data[i * dims + c];
            *x = if sd > 0.0 { (*x - mean) / sd } else { 0.0 };
        }
    }
    FeatureTable {
        columns: table.columns.clone(),
        data,
    }
}

/// Uniform sample of `count` distinct row indices, returned sorted.
pub fn sample_rows(total: usize, count: usize, seed: u64) -> Result<Vec<usize>> {
    if count > total {
        return Err(invalid(format!("cannot sample {count} of {total} rows")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = rand::seq::index::sample(&mut rng, total, count).into_vec();
    picked.sort_unstable();
    Ok(picked)
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// The `k` nearest rows to row `i` by Euclidean distance, nearest first;
/// equal distances go to the lower index.
pub fn nearest_neighbors(table: &FeatureTable, i: usize, k: usize) -> Vec<usize> {
    let here = table.row(i);
    let mut cand: Vec<(f64, usize)> = (0..table.rows())
        .filter(|&j| j != i)
        .map(|j| (squared_distance(here, table.row(j)), j))
        .collect();
    let order = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    if k < cand.len() {
        cand.select_nth_unstable_by(k, order);
        cand.truncate(k);
    }
    cand.sort_unstable_by(order);
    cand.into_iter().map(|(_, j)| j).collect()
}

/// Unweighted k-NN graph: every row links to its `k` nearest rows, and the
/// directed choices are merged into undirected edges (union).
pub fn knn_graph(table: &FeatureTable, k: usize) -> Result<Graph> {
    let n = table.rows();
    if k == 0 || k >= n {
        return Err(invalid(format!("need 1 <= k < n, got k={k} n={n}")));
    }
    let choices: Vec<Vec<usize>> = (0..n)
        .into_par_iter()
        .map(|i| nearest_neighbors(table, i, k))
        .collect();
    let mut pairs: Vec<(usize, usize)> = choices
        .iter()
        .enumerate()
        .flat_map(|(i, js)| js.iter().map(move |&j| (i.min(j), i.max(j))))
        .collect();
    pairs.sort_unstable();
    pairs.dedup();
    Graph::from_edges(n, pairs.into_iter().map(|(i, j)| (i, j, 1.0)))
}
