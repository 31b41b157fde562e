//! Functional samples observed on a common time grid.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// Observation times together with the discrete measure used for time
/// averages.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    points: Vec<f64>,
    weights: Vec<f64>,
}

impl TimeGrid {
    /// Grid with normalized composite-trapezoid weights.
    pub fn new(points: Vec<f64>) -> Result<Self> {
        validate_points(&points)?;
        let p = points.len();
        let mut weights = Vec::with_capacity(p);
        for k in 0..p {
            let left = if k == 0 { points[0] } else { points[k - 1] };
            let right = if k + 1 == p { points[p - 1] } else { points[k + 1] };
            weights.push((right - left) / 2.0);
        }
        let total = points[p - 1] - points[0];
        weights.iter_mut().for_each(|w| *w /= total);
        Ok(Self { points, weights })
    }

    /// `p` equidistant points on `[start, end]`.
    pub fn equidistant(start: f64, end: f64, p: usize) -> Result<Self> {
        if p < 2 {
            return Err(Error::GridTooShort(p));
        }
        let step = (end - start) / (p - 1) as f64;
        let points = (0..p)
            .map(|k| if k + 1 == p { end } else { start + step * k as f64 })
            .collect();
        Self::new(points)
    }

    /// `p` equidistant points on `[0, 1]`.
    pub fn unit(p: usize) -> Result<Self> {
        Self::equidistant(0.0, 1.0, p)
    }

    /// Grid with caller-supplied weights; they must be positive and are
    /// rescaled to sum to one.
    pub fn with_weights(points: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        validate_points(&points)?;
        if weights.len() != points.len() {
            return Err(Error::DimensionMismatch {
                expected: points.len(),
                actual: weights.len(),
            });
        }
        if weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::InvalidWeights(
                "weights must be finite and positive".into(),
            ));
        }
        let total: f64 = weights.iter().sum();
        let weights = weights.into_iter().map(|w| w / total).collect();
        Ok(Self { points, weights })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

fn validate_points(points: &[f64]) -> Result<()> {
    if points.len() < 2 {
        return Err(Error::GridTooShort(points.len()));
    }
    if let Some(k) = points.iter().position(|t| !t.is_finite()) {
        return Err(Error::GridNotIncreasing(k));
    }
    if let Some(k) = points.windows(2).position(|w| w[1] <= w[0]) {
        return Err(Error::GridNotIncreasing(k + 1));
    }
    Ok(())
}

/// `n` curves evaluated on a shared [`TimeGrid`], stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionalSample {
    grid: TimeGrid,
    values: Vec<f64>,
    n: usize,
    labels: Vec<Option<String>>,
}

impl FunctionalSample {
    /// Smallest sample on which the pairwise band structure is meaningful.
    pub const MIN_CURVES: usize = 3;

    pub fn from_rows(grid: TimeGrid, rows: Vec<Vec<f64>>) -> Result<Self> {
        let labels = vec![None; rows.len()];
        Self::with_labels(grid, rows, labels)
    }

    pub fn with_labels(
        grid: TimeGrid,
        rows: Vec<Vec<f64>>,
        labels: Vec<Option<String>>,
    ) -> Result<Self> {
        let p = grid.len();
        if labels.len() != rows.len() {
            return Err(Error::DimensionMismatch {
                expected: rows.len(),
                actual: labels.len(),
            });
        }
        let mut values = Vec::with_capacity(rows.len() * p);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != p {
                return Err(Error::RaggedRow {
                    row: i,
                    expected: p,
                    actual: row.len(),
                });
            }
            values.extend_from_slice(row);
        }
        Self::from_flat(grid, values, labels)
    }

    /// Row-major `values` of length `n * p`.
    pub fn from_flat(grid: TimeGrid, values: Vec<f64>, labels: Vec<Option<String>>) -> Result<Self> {
        let p = grid.len();
        let n = labels.len();
        if values.len() != n * p {
            return Err(Error::DimensionMismatch {
                expected: n * p,
                actual: values.len(),
            });
        }
        if n < Self::MIN_CURVES {
            return Err(Error::TooFewCurves {
                required: Self::MIN_CURVES,
                actual: n,
            });
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                curve: k / p,
                position: k % p,
            });
        }
        Ok(Self {
            grid,
            values,
            n,
            labels,
        })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    /// Number of curves.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of grid points.
    pub fn p(&self) -> usize {
        self.grid.len()
    }

    pub fn curve(&self, i: usize) -> &[f64] {
        let p = self.p();
        &self.values[i * p..(i + 1) * p]
    }

    pub fn curves(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.p())
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn labels(&self) -> &[Option<String>] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> Option<&str> {
        self.labels[i].as_deref()
    }

    /// Copy of the sample with curve `i` replaced.
    pub fn replace_curve(&self, i: usize, curve: &[f64]) -> Result<Self> {
        if i >= self.n {
            return Err(Error::IndexOutOfRange { index: i, n: self.n });
        }
        if curve.len() != self.p() {
            return Err(Error::DimensionMismatch {
                expected: self.p(),
                actual: curve.len(),
            });
        }
        let mut values = self.values.clone();
        let p = self.p();
        values[i * p..(i + 1) * p].copy_from_slice(curve);
        Self::from_flat(self.grid.clone(), values, self.labels.clone())
    }

    /// Applies `f(t_index, value)` to every entry.
    pub fn map_values(&self, mut f: impl FnMut(usize, f64) -> f64) -> Result<Self> {
        let p = self.p();
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(k, &v)| f(k % p, v))
            .collect();
        Self::from_flat(self.grid.clone(), values, self.labels.clone())
    }

    /// Reorders curves so that new curve `k` is old curve `order[k]`.
    pub fn permute(&self, order: &[usize]) -> Result<Self> {
        if order.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                actual: order.len(),
            });
        }
        let mut values = Vec::with_capacity(self.values.len());
        let mut labels = Vec::with_capacity(self.n);
        for &i in order {
            if i >= self.n {
                return Err(Error::IndexOutOfRange { index: i, n: self.n });
            }
            values.extend_from_slice(self.curve(i));
            labels.push(self.labels[i].clone());
        }
        Self::from_flat(self.grid.clone(), values, labels)
    }
}

/// How to read a curves file.
#[derive(Debug, Clone)]
pub struct CsvOptions {
    /// First column of every data row holds the curve label.
    pub has_labels: bool,
}

impl Default for CsvOptions {
    fn default() -> Self {
        Self { has_labels: true }
    }
}

/// Reads a curves file.
///
/// An optional first row `t,<t_1>,...,<t_p>` gives the grid; without it the
/// grid is `p` equidistant points on `[0, 1]`. Every other row is
/// `<label>,<v_1>,...,<v_p>`.
pub fn load_csv(path: impl AsRef<Path>, options: &CsvOptions) -> Result<FunctionalSample> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_csv(&text, options)
}

pub fn parse_csv(text: &str, options: &CsvOptions) -> Result<FunctionalSample> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());

    let mut grid_points: Option<Vec<f64>> = None;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut labels = Vec::new();
    let skip = usize::from(options.has_labels);

    for (k, record) in reader.records().enumerate() {
        let record = record?;
        let line = record.position().map_or(k + 1, |pos| pos.line() as usize);
        if record.iter().all(str::is_empty) {
            continue;
        }
        if k == 0 && record.get(0) == Some("t") {
            grid_points = Some(parse_cells(&record, 1, line)?);
            continue;
        }
        rows.push(parse_cells(&record, skip, line)?);
        labels.push(if options.has_labels {
            record.get(0).filter(|s| !s.is_empty()).map(str::to_owned)
        } else {
            None
        });
    }

    let p = match (&grid_points, rows.first()) {
        (Some(points), _) => points.len(),
        (None, Some(row)) => row.len(),
        (None, None) => 0,
    };
    if let Some(row) = rows.iter().position(|r| r.len() != p) {
        return Err(Error::RaggedRow {
            row,
            expected: p,
            actual: rows[row].len(),
        });
    }
    if rows.len() < FunctionalSample::MIN_CURVES {
        return Err(Error::TooFewCurves {
            required: FunctionalSample::MIN_CURVES,
            actual: rows.len(),
        });
    }
    let grid = match grid_points {
        Some(points) => TimeGrid::new(points)?,
        None => TimeGrid::unit(p)?,
    };
    FunctionalSample::with_labels(grid, rows, labels)
}

fn parse_cells(record: &csv::StringRecord, skip: usize, line: usize) -> Result<Vec<f64>> {
    record
        .iter()
        .enumerate()
        .skip(skip)
        .map(|(column, cell)| {
            cell.parse::<f64>().map_err(|_| Error::Parse {
                line,
                column: column + 1,
                cell: cell.to_owned(),
            })
        })
        .collect()
}

/// Serializes a sample in the format read by [`load_csv`]. Values use the
/// shortest representation that parses back to the same double.
pub fn to_csv_string(sample: &FunctionalSample) -> String {
    let mut out = String::from("t");
    for t in sample.grid().points() {
        write!(out, ",{t:?}").unwrap();
    }
    out.push('\n');
    for (i, curve) in sample.curves().enumerate() {
        match sample.label(i) {
            Some(label) => out.push_str(label),
            None => write!(out, "{}", i + 1).unwrap(),
        }
        for v in curve {
            write!(out, ",{v:?}").unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn write_csv(sample: &FunctionalSample, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, to_csv_string(sample)).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}
