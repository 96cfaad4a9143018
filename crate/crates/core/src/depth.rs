//! Outlier-depth measures and the depth-constrained perturbation budget.
//!
//! Three depths are provided: Mahalanobis depth (MD) of a point against a
//! dataset, its per-cluster sum (MDC), and the coordinate-wise minimum of
//! per-coordinate MDC values (COMD), which stays well-defined when the full
//! covariance is singular. [`select_delta`] turns a COMD quantile floor into
//! a per-feature noise box.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::clustering::ClusterAssignment;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::parallel;

/// Mahalanobis depth machinery for one reference set: sample mean plus a
/// Cholesky factor of the unbiased covariance.
pub struct MahalanobisModel {
    mean: DVector<f64>,
    chol: Cholesky<f64, Dyn>,
}

impl MahalanobisModel {
    pub fn fit(data: &Dataset) -> Result<Self> {
        let (n, m) = (data.n(), data.m());
        if n < 2 {
            return Err(Error::TooFewSamples { needed: 2, got: n });
        }
        let mean = DVector::from_vec(data.column_means());
        let mut cov = DMatrix::zeros(m, m);
        for i in 0..n {
            let row = data.row(i);
            for a in 0..m {
                let da = row[a] - mean[a];
                for b in a..m {
                    cov[(a, b)] += da * (row[b] - mean[b]);
                }
            }
        }
        for a in 0..m {
            for b in a..m {
                cov[(a, b)] /= (n - 1) as f64;
                cov[(b, a)] = cov[(a, b)];
            }
        }
        let chol = cov
            .cholesky()
            .ok_or(Error::SingularCovariance { n, m })?;
        Ok(Self { mean, chol })
    }

    /// Depth (1 + squared Mahalanobis distance to the mean)^-1, in (0, 1].
    pub fn depth(&self, x: &[f64]) -> f64 {
        let diff = DVector::from_row_slice(x) - &self.mean;
        let solved = self.chol.solve(&diff);
        let q = diff.dot(&solved);
        1.0 / (1.0 + q)
    }
}

/// Mahalanobis depth of `x` with respect to `data`.
///
/// Errors with a pointer to COMD when the sample covariance is singular,
/// which is the expected failure mode for high-dimensional data.
pub fn mahalanobis_depth(x: &[f64], data: &Dataset) -> Result<f64> {
    if x.len() != data.m() {
        return Err(Error::DimensionMismatch {
            expected: data.m(),
            got: x.len(),
        });
    }
    Ok(MahalanobisModel::fit(data)?.depth(x))
}

/// Mahalanobis depth for clusters: the sum of per-cluster depths. Low only
/// when the point is far from every cluster.
pub fn mdc(x: &[f64], clusters: &[Dataset]) -> Result<f64> {
    if clusters.is_empty() {
        return Err(Error::EmptyInput("no clusters".into()));
    }
    let mut total = 0.0;
    for c in clusters {
        total += mahalanobis_depth(x, c)?;
    }
    Ok(total)
}

/// Precomputed per-cluster, per-coordinate statistics for COMD evaluation.
///
/// Coordinates with zero variance in any cluster carry no outlyingness
/// signal; they are skipped (depth treated as infinite for the min).
pub struct ComdModel {
    m: usize,
    // Per cluster: per-coordinate mean and variance.
    means: [Vec<f64>; 2],
    vars: [Vec<f64>; 2],
    usable: Vec<usize>,
}

impl ComdModel {
    pub fn fit(data: &Dataset, clusters: &ClusterAssignment) -> Result<Self> {
        if clusters.n() != data.n() {
            return Err(Error::DimensionMismatch {
                expected: data.n(),
                got: clusters.n(),
            });
        }
        let m = data.m();
        let mut means = [vec![0.0; m], vec![0.0; m]];
        let mut vars = [vec![0.0; m], vec![0.0; m]];
        let sizes = clusters.cluster_sizes();
        for (i, &l) in clusters.labels().iter().enumerate() {
            for (j, v) in data.row(i).iter().enumerate() {
                means[l as usize][j] += v;
            }
        }
        for c in 0..2 {
            for v in &mut means[c] {
                *v /= sizes[c] as f64;
            }
        }
        for (i, &l) in clusters.labels().iter().enumerate() {
            let c = l as usize;
            for (j, v) in data.row(i).iter().enumerate() {
                let d = v - means[c][j];
                vars[c][j] += d * d;
            }
        }
        for c in 0..2 {
            if sizes[c] < 2 {
                vars[c].iter_mut().for_each(|v| *v = 0.0);
            } else {
                vars[c].iter_mut().for_each(|v| *v /= (sizes[c] - 1) as f64);
            }
        }
        let usable: Vec<usize> = (0..m)
            .filter(|&j| vars[0][j] > 0.0 && vars[1][j] > 0.0)
            .collect();
        if usable.len() < m {
            log::warn!(
                "comd: skipping {} of {} coordinates with zero within-cluster variance",
                m - usable.len(),
                m
            );
        }
        if usable.is_empty() {
            return Err(Error::AllCoordinatesDegenerate);
        }
        Ok(Self {
            m,
            means,
            vars,
            usable,
        })
    }

    /// COMD of a point: min over usable coordinates of the per-coordinate
    /// MDC, where the 1-D depth is (1 + (x_i - mu)^2 / var)^-1.
    pub fn eval(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.m);
        let mut best = f64::INFINITY;
        for &j in &self.usable {
            let mut coord_mdc = 0.0;
            for c in 0..2 {
                let d = x[j] - self.means[c][j];
                coord_mdc += 1.0 / (1.0 + d * d / self.vars[c][j]);
            }
            if coord_mdc < best {
                best = coord_mdc;
            }
        }
        best
    }
}

/// Coordinate-wise Min-Mahalanobis-Depth of `x` against a clustered dataset.
pub fn comd(x: &[f64], data: &Dataset, clusters: &ClusterAssignment) -> Result<f64> {
    if x.len() != data.m() {
        return Err(Error::DimensionMismatch {
            expected: data.m(),
            got: x.len(),
        });
    }
    Ok(ComdModel::fit(data, clusters)?.eval(x))
}

/// Per-sample COMD values over a dataset with empirical quantile lookups.
///
/// Quantile convention: `quantile_of(v)` is the fraction of samples whose
/// COMD is `<= v`.
pub struct DepthReport {
    per_sample: Vec<f64>,
    sorted: Vec<f64>,
}

impl DepthReport {
    pub fn compute(data: &Dataset, clusters: &ClusterAssignment) -> Result<Self> {
        let model = ComdModel::fit(data, clusters)?;
        let per_sample = parallel::map_range(data.n(), |i| model.eval(data.row(i)));
        let mut sorted = per_sample.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        Ok(Self { per_sample, sorted })
    }

    pub fn per_sample_comd(&self) -> &[f64] {
        &self.per_sample
    }

    /// Empirical quantile of a depth value in [0, 1].
    pub fn quantile_of(&self, value: f64) -> f64 {
        let count = self.sorted.partition_point(|&v| v <= value);
        count as f64 / self.sorted.len() as f64
    }

    /// Smallest observed COMD whose quantile is at least `q`, for q in (0, 1].
    pub fn floor_value(&self, q: f64) -> f64 {
        let n = self.sorted.len();
        let idx = ((q * n as f64).ceil() as usize).clamp(1, n) - 1;
        self.sorted[idx]
    }
}

/// An axis-aligned perturbation budget: the feasible region is the box
/// `prod_j [-delta_j, delta_j]`.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PerturbationBox {
    delta: Vec<f64>,
}

impl PerturbationBox {
    pub fn new(delta: Vec<f64>) -> Result<Self> {
        if delta.is_empty() {
            return Err(Error::EmptyInput("perturbation box".into()));
        }
        for (j, d) in delta.iter().enumerate() {
            if !d.is_finite() || *d < 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "delta[{j}] = {d} must be finite and >= 0"
                )));
            }
        }
        Ok(Self { delta })
    }

    /// A box with the same half-width on every feature.
    pub fn uniform(dim: usize, half_width: f64) -> Result<Self> {
        Self::new(vec![half_width; dim])
    }

    pub fn dim(&self) -> usize {
        self.delta.len()
    }

    pub fn delta(&self) -> &[f64] {
        &self.delta
    }

    pub fn is_zero(&self) -> bool {
        self.delta.iter().all(|&d| d == 0.0)
    }

    /// Exact feasibility: |eps_j| <= delta_j for every j.
    pub fn contains(&self, eps: &[f64]) -> bool {
        eps.len() == self.delta.len()
            && eps.iter().zip(&self.delta).all(|(e, d)| e.abs() <= *d)
    }

    /// Clips a point into the box, coordinate by coordinate.
    pub fn clamp(&self, eps: &mut [f64]) {
        for (e, d) in eps.iter_mut().zip(&self.delta) {
            *e = e.clamp(-*d, *d);
        }
    }

    /// Euclidean length of the box diagonal.
    pub fn diagonal(&self) -> f64 {
        self.delta.iter().map(|d| (2.0 * d) * (2.0 * d)).sum::<f64>().sqrt()
    }
}

const DELTA_SCALE_MAX: f64 = 10.0;
const DELTA_BISECT_ITERS: usize = 20;

/// Derives the largest tested noise box that keeps the target non-outlying.
///
/// The box direction is the per-feature standard deviation of the dataset; a
/// global multiplier is bisected so that every axis-extreme probe of the box
/// keeps COMD at or above the `floor_quantile` empirical quantile of the
/// dataset's COMD values. An optional elementwise cap is applied last.
pub fn select_delta(
    data: &Dataset,
    clusters: &ClusterAssignment,
    target: usize,
    floor_quantile: f64,
    budget_cap: Option<&[f64]>,
) -> Result<PerturbationBox> {
    if target >= data.n() {
        return Err(Error::InvalidParameter(format!(
            "target index {target} out of range (n={})",
            data.n()
        )));
    }
    if !(floor_quantile > 0.0 && floor_quantile <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "floor quantile {floor_quantile} must be in (0, 1]"
        )));
    }
    if let Some(cap) = budget_cap {
        if cap.len() != data.m() {
            return Err(Error::DimensionMismatch {
                expected: data.m(),
                got: cap.len(),
            });
        }
    }

    let report = DepthReport::compute(data, clusters)?;
    let floor = report.floor_value(floor_quantile);
    let model = ComdModel::fit(data, clusters)?;
    let x_t = data.row(target);
    let target_depth = model.eval(x_t);
    if target_depth < floor {
        return Err(Error::TargetBelowDepthFloor {
            index: target,
            depth: target_depth,
            floor,
        });
    }

    let scale = data.column_stds();
    let mut probe = x_t.to_vec();
    let mut feasible = |s: f64| -> bool {
        for (j, &sc) in scale.iter().enumerate() {
            if sc == 0.0 {
                continue;
            }
            for sign in [1.0, -1.0] {
                probe.copy_from_slice(x_t);
                probe[j] += sign * s * sc;
                if model.eval(&probe) < floor {
                    return false;
                }
            }
        }
        true
    };

    let mut lo = 0.0;
    let mut hi = DELTA_SCALE_MAX;
    if feasible(hi) {
        lo = hi;
    } else {
        for _ in 0..DELTA_BISECT_ITERS {
            let mid = 0.5 * (lo + hi);
            if feasible(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
    }

    let mut delta: Vec<f64> = scale.iter().map(|sc| lo * sc).collect();
    if let Some(cap) = budget_cap {
        for (d, c) in delta.iter_mut().zip(cap) {
            *d = d.min(c.abs());
        }
    }
    PerturbationBox::new(delta)
}
