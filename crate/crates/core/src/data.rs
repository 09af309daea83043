//! Dataset model, CSV ingestion and standardization.

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Result, VimError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Regression,
    Classification,
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Task::Regression => write!(f, "regression"),
            Task::Classification => write!(f, "classification"),
        }
    }
}

impl std::str::FromStr for Task {
    type Err = VimError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "reg" | "regression" => Ok(Task::Regression),
            "class" | "classification" => Ok(Task::Classification),
            other => Err(VimError::Parameter(format!("unknown task {other:?}"))),
        }
    }
}

/// Feature matrix (row-major, one row per observation), response and names.
///
/// Classification responses are stored as `0.0, 1.0, …, K-1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    x: Vec<f64>,
    n: usize,
    p: usize,
    y: Vec<f64>,
    names: Vec<String>,
    task: Task,
}

impl Dataset {
    pub fn new(rows: Vec<Vec<f64>>, y: Vec<f64>, names: Vec<String>, task: Task) -> Result<Self> {
        let n = rows.len();
        let p = names.len();
        let mut x = Vec::with_capacity(n * p);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != p {
                return Err(VimError::InvalidDataset(format!("row {i} has {} entries, expected {p}", row.len())));
            }
            x.extend(row);
        }
        Self::from_flat(x, n, y, names, task)
    }

    /// Builds a dataset from a row-major buffer of `n * names.len()` values.
    pub fn from_flat(x: Vec<f64>, n: usize, y: Vec<f64>, names: Vec<String>, task: Task) -> Result<Self> {
        let p = names.len();
        if n < 2 {
            return Err(VimError::InvalidDataset(format!("need at least 2 rows, got {n}")));
        }
        if p < 1 {
            return Err(VimError::InvalidDataset("need at least one feature".into()));
        }
        if x.len() != n * p {
            return Err(VimError::InvalidDataset(format!("matrix has {} entries, expected {n}x{p}", x.len())));
        }
        if y.len() != n {
            return Err(VimError::InvalidDataset(format!("response has {} entries, expected {n}", y.len())));
        }
        if let Some(k) = x.iter().position(|v| !v.is_finite()) {
            return Err(VimError::InvalidDataset(format!("non-finite entry at row {}, feature {}", k / p, k % p)));
        }
        if let Some(i) = y.iter().position(|v| !v.is_finite()) {
            return Err(VimError::InvalidDataset(format!("non-finite response at row {i}")));
        }
        let mut seen = HashSet::new();
        for name in &names {
            if !seen.insert(name.as_str()) {
                return Err(VimError::InvalidDataset(format!("duplicate feature name {name:?}")));
            }
        }
        if task == Task::Classification {
            check_contiguous_labels(&y)?;
        }
        Ok(Dataset { x, n, p, y, names, task })
    }

    pub fn n_rows(&self) -> usize {
        self.n
    }

    pub fn n_features(&self) -> usize {
        self.p
    }

    #[inline]
    pub fn x(&self, row: usize, feature: usize) -> f64 {
        self.x[row * self.p + feature]
    }

    #[inline]
    pub fn row(&self, row: usize) -> &[f64] {
        &self.x[row * self.p..(row + 1) * self.p]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.x.chunks_exact(self.p)
    }

    pub fn column(&self, feature: usize) -> Vec<f64> {
        (0..self.n).map(|i| self.x(i, feature)).collect()
    }

    /// Row-major view of the feature matrix.
    pub fn matrix(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn task(&self) -> Task {
        self.task
    }

    /// Number of classes (`max label + 1`); 0 for regression.
    pub fn n_classes(&self) -> usize {
        match self.task {
            Task::Regression => 0,
            Task::Classification => self.y.iter().fold(0.0f64, |m, &v| m.max(v)) as usize + 1,
        }
    }

    /// Keeps the listed feature columns, in the given order.
    pub fn select_features(&self, features: &[usize]) -> Dataset {
        let mut x = Vec::with_capacity(self.n * features.len());
        for i in 0..self.n {
            let row = self.row(i);
            x.extend(features.iter().map(|&j| row[j]));
        }
        Dataset {
            x,
            n: self.n,
            p: features.len(),
            y: self.y.clone(),
            names: features.iter().map(|&j| self.names[j].clone()).collect(),
            task: self.task,
        }
    }

    /// Drops the listed feature columns.
    pub fn drop_features(&self, drop: &[usize]) -> Dataset {
        let keep: Vec<usize> = (0..self.p).filter(|j| !drop.contains(j)).collect();
        self.select_features(&keep)
    }

    /// Row subset (indices may repeat, as for a bootstrap sample).
    ///
    /// The subset keeps the parent's label space, so a classification subset
    /// may not contain every class.
    pub fn select_rows(&self, rows: &[usize]) -> Dataset {
        let mut x = Vec::with_capacity(rows.len() * self.p);
        for &i in rows {
            x.extend_from_slice(self.row(i));
        }
        Dataset {
            x,
            n: rows.len(),
            p: self.p,
            y: rows.iter().map(|&i| self.y[i]).collect(),
            names: self.names.clone(),
            task: self.task,
        }
    }

    /// Same features with a different response.
    pub fn with_response(&self, y: Vec<f64>, task: Task) -> Result<Dataset> {
        Dataset::from_flat(self.x.clone(), self.n, y, self.names.clone(), task)
    }

    /// Replaces feature column `feature` in place.
    pub fn set_column(&mut self, feature: usize, values: &[f64]) {
        for (i, &v) in values.iter().enumerate() {
            self.x[i * self.p + feature] = v;
        }
    }
}

fn check_contiguous_labels(y: &[f64]) -> Result<()> {
    let mut labels = BTreeSet::new();
    for &v in y {
        if v < 0.0 || v.fract() != 0.0 {
            return Err(VimError::InvalidDataset(format!("class label {v} is not a non-negative integer")));
        }
        labels.insert(v as u64);
    }
    for (expected, label) in labels.iter().enumerate() {
        if *label != expected as u64 {
            return Err(VimError::InvalidDataset(format!(
                "class labels are not contiguous from 0 (missing {expected})"
            )));
        }
    }
    Ok(())
}

/// Maps arbitrary numeric class values to `0..K` preserving numeric order.
pub fn remap_labels(y: &[f64]) -> Vec<f64> {
    let mut distinct: Vec<f64> = y.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    y.iter().map(|v| distinct.binary_search_by(|d| d.total_cmp(v)).unwrap() as f64).collect()
}

/// Reads a CSV with a mandatory header; the last column is the response.
pub fn read_csv<R: Read>(reader: R, task: Task) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).flexible(true).from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
    if header.len() < 2 {
        return Err(VimError::InvalidDataset(format!("header needs at least two columns, found {}", header.len())));
    }
    let width = header.len();
    let mut x = Vec::new();
    let mut y = Vec::new();
    let mut n = 0usize;
    for (k, record) in rdr.records().enumerate() {
        let record = record?;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(k + 2);
        if record.len() == 1 && record[0].trim().is_empty() {
            continue;
        }
        if record.len() != width {
            return Err(VimError::RaggedRow { row: line, expected: width, found: record.len() });
        }
        for (c, cell) in record.iter().enumerate() {
            let value: f64 = cell
                .trim()
                .parse()
                .ok()
                .filter(|v: &f64| v.is_finite())
                .ok_or_else(|| VimError::MalformedCell { row: line, column: c + 1, value: cell.to_string() })?;
            if c + 1 == width {
                y.push(value);
            } else {
                x.push(value);
            }
        }
        n += 1;
    }
    if task == Task::Classification {
        y = remap_labels(&y);
    }
    let names = header[..width - 1].to_vec();
    Dataset::from_flat(x, n, y, names, task)
}

pub fn load_csv(path: impl AsRef<Path>, task: Task) -> Result<Dataset> {
    let file = std::fs::File::open(path)?;
    read_csv(std::io::BufReader::new(file), task)
}

/// Writes features then the response (header `y`). Values use the shortest
/// representation that parses back to the same `f64`.
pub fn write_csv<W: Write>(d: &Dataset, writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let mut header: Vec<&str> = d.names.iter().map(String::as_str).collect();
    header.push("y");
    wtr.write_record(&header)?;
    let mut record = Vec::with_capacity(d.p + 1);
    for i in 0..d.n {
        record.clear();
        record.extend(d.row(i).iter().map(|v| v.to_string()));
        record.push(d.y[i].to_string());
        wtr.write_record(&record)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn csv_string(d: &Dataset) -> String {
    let mut buf = Vec::new();
    write_csv(d, &mut buf).expect("writing to memory cannot fail");
    String::from_utf8(buf).expect("csv output is utf-8")
}

/// Per-feature centering and scaling parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub means: Vec<f64>,
    pub sds: Vec<f64>,
    /// Features with zero sample variance, passed through unscaled.
    pub zero_variance: Vec<bool>,
}

impl Standardization {
    pub fn fit(d: &Dataset) -> Self {
        let n = d.n as f64;
        let mut means = vec![0.0; d.p];
        for row in d.rows() {
            for (m, v) in means.iter_mut().zip(row) {
                *m += v;
            }
        }
        means.iter_mut().for_each(|m| *m /= n);
        let mut ss = vec![0.0; d.p];
        for row in d.rows() {
            for ((s, v), m) in ss.iter_mut().zip(row).zip(&means) {
                *s += (v - m) * (v - m);
            }
        }
        let sds: Vec<f64> = ss.iter().map(|s| (s / (n - 1.0)).sqrt()).collect();
        let zero_variance = sds.iter().zip(&means).map(|(&sd, &m)| sd == 0.0 || sd <= 1e-13 * m.abs()).collect();
        Standardization { means, sds, zero_variance }
    }

    #[inline]
    pub fn transform_value(&self, feature: usize, value: f64) -> f64 {
        if self.zero_variance[feature] {
            value
        } else {
            (value - self.means[feature]) / self.sds[feature]
        }
    }

    pub fn transform_row(&self, row: &[f64]) -> Vec<f64> {
        row.iter().enumerate().map(|(j, &v)| self.transform_value(j, v)).collect()
    }

    pub fn transform(&self, d: &Dataset) -> Dataset {
        let mut out = d.clone();
        for i in 0..d.n {
            for j in 0..d.p {
                out.x[i * d.p + j] = self.transform_value(j, d.x(i, j));
            }
        }
        out
    }
}

/// Centers and scales every feature to sample mean 0 and sample sd 1 (divisor
/// `n - 1`). Zero-variance features are left unchanged and flagged.
pub fn standardize(d: &Dataset) -> (Dataset, Standardization) {
    let params = Standardization::fit(d);
    (params.transform(d), params)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy(col: Vec<f64>) -> Dataset {
        let n = col.len();
        Dataset::from_flat(col, n, (0..n).map(|i| i as f64).collect(), vec!["a".into()], Task::Regression).unwrap()
    }

    #[test]
    fn parses_small_classification_file() {
        let d = read_csv("a,b,y\n1,2,0\n3,4,1\n5,6,0".as_bytes(), Task::Classification).unwrap();
        assert_eq!(d.n_rows(), 3);
        assert_eq!(d.n_features(), 2);
        assert_eq!(d.y(), &[0.0, 1.0, 0.0]);
        assert_eq!(d.names(), &["a".to_string(), "b".to_string()]);
        assert_eq!(d.row(1), &[3.0, 4.0]);
        assert_eq!(d.n_classes(), 2);
    }

    #[test]
    fn ragged_row_is_structural_error() {
        let err = read_csv("a,b,y\n1,2,0\n1,2".as_bytes(), Task::Regression).unwrap_err();
        assert!(matches!(err, VimError::RaggedRow { row: 3, expected: 3, found: 2 }), "{err}");
    }

    #[test]
    fn malformed_cell_reports_position() {
        let err = read_csv("a,b,y\n1,2,0\n1,x,4".as_bytes(), Task::Regression).unwrap_err();
        match err {
            VimError::MalformedCell { row, column, value } => {
                assert_eq!((row, column, value.as_str()), (3, 2, "x"));
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn non_contiguous_labels_are_remapped() {
        let d = read_csv("a,y\n1,5\n2,-1\n3,5\n4,2".as_bytes(), Task::Classification).unwrap();
        assert_eq!(d.y(), &[2.0, 0.0, 2.0, 1.0]);
    }

    #[test]
    fn constructor_rejects_duplicate_names_and_gaps() {
        let dup = Dataset::new(
            vec![vec![1.0, 2.0], vec![3.0, 4.0]],
            vec![0.0, 1.0],
            vec!["a".into(), "a".into()],
            Task::Regression,
        );
        assert!(dup.is_err());
        let gap = Dataset::new(vec![vec![1.0], vec![3.0]], vec![0.0, 2.0], vec!["a".into()], Task::Classification);
        assert!(gap.is_err());
    }

    #[test]
    fn standardize_symmetric_column() {
        let (s, params) = standardize(&toy(vec![1.0, 2.0, 3.0]));
        assert_eq!(s.column(0), vec![-1.0, 0.0, 1.0]);
        assert_eq!(params.means, vec![2.0]);
        assert_eq!(params.sds, vec![1.0]);
        assert!(!params.zero_variance[0]);
    }

    #[test]
    fn standardize_constant_column_passes_through() {
        let (s, params) = standardize(&toy(vec![5.0, 5.0, 5.0]));
        assert_eq!(s.column(0), vec![5.0, 5.0, 5.0]);
        assert!(params.zero_variance[0]);
    }

    #[test]
    fn standardize_two_points_uses_sample_sd() {
        // mean 5, sample sd sqrt(50) => ±5/sqrt(50) = ±1/sqrt(2)
        let (s, _) = standardize(&toy(vec![0.0, 10.0]));
        let c = s.column(0);
        assert!((c[0] + std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        assert!((c[1] - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
    }
}
