//! Dataset representation, CSV ingestion, and synthetic Gaussian generation.

use std::fs;
use std::path::Path;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// An n-by-m matrix of real-valued features with stable per-row identifiers.
///
/// All entries are finite; rows are samples, columns are features.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    values: Vec<f64>,
    n: usize,
    m: usize,
    feature_names: Option<Vec<String>>,
    sample_ids: Vec<usize>,
}

impl Dataset {
    /// Builds a dataset from row-major values. Sample ids default to row
    /// indices.
    pub fn from_values(values: Vec<f64>, n: usize, m: usize) -> Result<Self> {
        if n == 0 || m == 0 {
            return Err(Error::EmptyInput(format!("dataset shape {n}x{m}")));
        }
        if values.len() != n * m {
            return Err(Error::DimensionMismatch {
                expected: n * m,
                got: values.len(),
            });
        }
        for (idx, v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFiniteValue {
                    row: idx / m,
                    col: idx % m,
                });
            }
        }
        Ok(Self {
            values,
            n,
            m,
            feature_names: None,
            sample_ids: (0..n).collect(),
        })
    }

    /// Builds a dataset from a list of equal-length rows.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::EmptyInput("no rows".into()));
        }
        let m = rows[0].len();
        for (i, r) in rows.iter().enumerate() {
            if r.len() != m {
                return Err(Error::RaggedRow {
                    row: i,
                    expected: m,
                    got: r.len(),
                });
            }
        }
        let values = rows.iter().flatten().copied().collect();
        Self::from_values(values, rows.len(), m)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.m..(i + 1) * self.m]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn sample_ids(&self) -> &[usize] {
        &self.sample_ids
    }

    pub fn feature_names(&self) -> Option<&[String]> {
        self.feature_names.as_deref()
    }

    pub fn set_feature_names(&mut self, names: Vec<String>) -> Result<()> {
        if names.len() != self.m {
            return Err(Error::DimensionMismatch {
                expected: self.m,
                got: names.len(),
            });
        }
        self.feature_names = Some(names);
        Ok(())
    }

    /// Returns a copy with row `index` replaced by `row`.
    pub fn with_row_replaced(&self, index: usize, row: &[f64]) -> Result<Self> {
        if row.len() != self.m {
            return Err(Error::DimensionMismatch {
                expected: self.m,
                got: row.len(),
            });
        }
        for (j, v) in row.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFiniteValue { row: index, col: j });
            }
        }
        let mut out = self.clone();
        out.values[index * self.m..(index + 1) * self.m].copy_from_slice(row);
        Ok(out)
    }

    /// Returns the subset of rows at `indices`, keeping their sample ids.
    pub fn select_rows(&self, indices: &[usize]) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::EmptyInput("row selection".into()));
        }
        let mut values = Vec::with_capacity(indices.len() * self.m);
        let mut ids = Vec::with_capacity(indices.len());
        for &i in indices {
            values.extend_from_slice(self.row(i));
            ids.push(self.sample_ids[i]);
        }
        Ok(Self {
            values,
            n: indices.len(),
            m: self.m,
            feature_names: self.feature_names.clone(),
            sample_ids: ids,
        })
    }

    /// Per-column means.
    pub fn column_means(&self) -> Vec<f64> {
        let mut means = vec![0.0; self.m];
        for i in 0..self.n {
            for (j, v) in self.row(i).iter().enumerate() {
                means[j] += v;
            }
        }
        for v in &mut means {
            *v /= self.n as f64;
        }
        means
    }

    /// Per-column standard deviations with the unbiased (n-1) estimator.
    /// Zero when n == 1 or the column is constant.
    pub fn column_stds(&self) -> Vec<f64> {
        let means = self.column_means();
        let mut acc = vec![0.0; self.m];
        for i in 0..self.n {
            for (j, v) in self.row(i).iter().enumerate() {
                let d = v - means[j];
                acc[j] += d * d;
            }
        }
        if self.n < 2 {
            return vec![0.0; self.m];
        }
        acc.iter().map(|s| (s / (self.n - 1) as f64).sqrt()).collect()
    }
}

/// An isotropic Gaussian cluster specification.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianSpec {
    pub center: Vec<f64>,
    pub std: f64,
    pub count: usize,
}

impl GaussianSpec {
    pub fn new(center: Vec<f64>, std: f64, count: usize) -> Result<Self> {
        if std <= 0.0 || !std.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "gaussian std must be positive, got {std}"
            )));
        }
        if count == 0 {
            return Err(Error::InvalidParameter("gaussian count must be >= 1".into()));
        }
        if center.is_empty() {
            return Err(Error::InvalidParameter("gaussian center must be non-empty".into()));
        }
        Ok(Self { center, std, count })
    }
}

/// Loads a comma-separated numeric matrix. No quoting; decimal-point reals;
/// an optional single header row supplies feature names.
pub fn load_csv(path: impl AsRef<Path>, has_header: bool) -> Result<Dataset> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_csv(&text, has_header)
}

/// Parses CSV text; split out from [`load_csv`] so tests can run on strings.
pub fn parse_csv(text: &str, has_header: bool) -> Result<Dataset> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());

    let header = if has_header {
        match lines.next() {
            Some((_, line)) => Some(line.split(',').map(|s| s.trim().to_string()).collect::<Vec<_>>()),
            None => return Err(Error::EmptyInput("csv has no rows".into())),
        }
    } else {
        None
    };

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width: Option<usize> = None;
    for (row_idx, (_, line)) in lines.enumerate() {
        let mut row = Vec::new();
        for (col_idx, cell) in line.split(',').enumerate() {
            let v: f64 = cell.trim().parse().map_err(|_| Error::CsvParse {
                row: row_idx,
                col: col_idx,
                message: format!("cannot parse '{}' as a real number", cell.trim()),
            })?;
            if !v.is_finite() {
                return Err(Error::NonFiniteValue {
                    row: row_idx,
                    col: col_idx,
                });
            }
            row.push(v);
        }
        match width {
            None => width = Some(row.len()),
            Some(w) if w != row.len() => {
                return Err(Error::RaggedRow {
                    row: row_idx,
                    expected: w,
                    got: row.len(),
                })
            }
            _ => {}
        }
        rows.push(row);
    }

    if rows.is_empty() {
        return Err(Error::EmptyInput("csv has no data rows".into()));
    }
    let mut ds = Dataset::from_rows(&rows)?;
    if let Some(names) = header {
        ds.set_feature_names(names)?;
    }
    Ok(ds)
}

/// Draws i.i.d. samples from each isotropic Gaussian spec, in spec order.
/// Deterministic for a fixed seed.
pub fn synth_gaussians(specs: &[GaussianSpec], seed: u64) -> Result<Dataset> {
    if specs.is_empty() {
        return Err(Error::EmptyInput("no gaussian specs".into()));
    }
    let m = specs[0].center.len();
    for s in specs {
        if s.center.len() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                got: s.center.len(),
            });
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let total: usize = specs.iter().map(|s| s.count).sum();
    let mut values = Vec::with_capacity(total * m);
    for spec in specs {
        for _ in 0..spec.count {
            for &c in &spec.center {
                let z: f64 = rng.sample(StandardNormal);
                values.push(c + spec.std * z);
            }
        }
    }
    Dataset::from_values(values, total, m)
}

/// Per-sample generating labels for [`synth_gaussians`] output: sample i gets
/// the index of the spec that produced it.
pub fn generating_labels(specs: &[GaussianSpec]) -> Vec<usize> {
    let mut labels = Vec::new();
    for (k, spec) in specs.iter().enumerate() {
        labels.extend(std::iter::repeat(k).take(spec.count));
    }
    labels
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn csv_direct_readback() {
        let ds = parse_csv("1,2\n3,4\n5,6", false).unwrap();
        assert_eq!(ds.n(), 3);
        assert_eq!(ds.m(), 2);
        assert_eq!(ds.row(1), &[3.0, 4.0]);
        assert_eq!(ds.sample_ids(), &[0, 1, 2]);
    }

    #[test]
    fn csv_parse_error_reports_position() {
        let err = parse_csv("a,2\n3,4", false).unwrap_err();
        match err {
            Error::CsvParse { row, col, .. } => {
                assert_eq!(row, 0);
                assert_eq!(col, 0);
            }
            other => panic!("unexpected error: {other}"),
        }
    }

    #[test]
    fn csv_ragged_row_rejected() {
        let err = parse_csv("1,2\n3", false).unwrap_err();
        assert!(matches!(err, Error::RaggedRow { row: 1, expected: 2, got: 1 }));
    }

    #[test]
    fn csv_empty_rejected() {
        assert!(matches!(parse_csv("", false), Err(Error::EmptyInput(_))));
        assert!(matches!(parse_csv("a,b\n", true), Err(Error::EmptyInput(_))));
    }

    #[test]
    fn csv_header_row_becomes_feature_names() {
        let ds = parse_csv("x,y\n1,2\n3,4", true).unwrap();
        assert_eq!(ds.n(), 2);
        assert_eq!(ds.feature_names().unwrap(), &["x".to_string(), "y".to_string()]);
    }

    #[test]
    fn csv_non_finite_rejected() {
        let err = parse_csv("1,2\n3,inf", false).unwrap_err();
        assert!(matches!(err, Error::NonFiniteValue { row: 1, col: 1 }));
    }

    #[test]
    fn synth_matches_toy_shape() {
        let specs = vec![
            GaussianSpec::new(vec![1.0, 0.0], 1.45, 100).unwrap(),
            GaussianSpec::new(vec![5.0, 0.0], 0.75, 100).unwrap(),
        ];
        let ds = synth_gaussians(&specs, 7).unwrap();
        assert_eq!(ds.n(), 200);
        assert_eq!(ds.m(), 2);
    }

    #[test]
    fn synth_degenerate_variance_stays_at_center() {
        let specs = vec![GaussianSpec::new(vec![2.0, -3.0], 1e-12, 1).unwrap()];
        let ds = synth_gaussians(&specs, 3).unwrap();
        assert_abs_diff_eq!(ds.row(0)[0], 2.0, epsilon = 1e-6);
        assert_abs_diff_eq!(ds.row(0)[1], -3.0, epsilon = 1e-6);
    }

    #[test]
    fn synth_is_deterministic() {
        let specs = vec![
            GaussianSpec::new(vec![0.0, 0.0, 0.0], 2.0, 50).unwrap(),
            GaussianSpec::new(vec![4.0, 4.0, 4.0], 1.0, 30).unwrap(),
        ];
        let a = synth_gaussians(&specs, 99).unwrap();
        let b = synth_gaussians(&specs, 99).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn synth_dimension_mismatch_rejected() {
        let specs = vec![
            GaussianSpec::new(vec![0.0, 0.0], 1.0, 2).unwrap(),
            GaussianSpec::new(vec![1.0], 1.0, 2).unwrap(),
        ];
        assert!(matches!(
            synth_gaussians(&specs, 0),
            Err(Error::DimensionMismatch { expected: 2, got: 1 })
        ));
    }

    #[test]
    fn synth_sample_mean_near_center() {
        // 5 sigma of the mean estimator: 5 * std / sqrt(n).
        let n = 10_000;
        let std = 1.7;
        let specs = vec![GaussianSpec::new(vec![3.0, -1.0], std, n).unwrap()];
        let ds = synth_gaussians(&specs, 1234).unwrap();
        let means = ds.column_means();
        let tol = 5.0 * std / (n as f64).sqrt();
        assert!((means[0] - 3.0).abs() < tol, "mean[0]={}", means[0]);
        assert!((means[1] + 1.0).abs() < tol, "mean[1]={}", means[1]);
    }

    #[test]
    fn generating_labels_follow_spec_order() {
        let specs = vec![
            GaussianSpec::new(vec![0.0], 1.0, 2).unwrap(),
            GaussianSpec::new(vec![1.0], 1.0, 3).unwrap(),
        ];
        assert_eq!(generating_labels(&specs), vec![0, 0, 1, 1, 1]);
    }
}
