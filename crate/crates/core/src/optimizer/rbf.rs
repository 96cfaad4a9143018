//! Cubic radial-basis-function interpolation with a linear polynomial tail.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// A fitted cubic-RBF interpolant: s(x) = sum_i w_i ||x - p_i||^3 + c_0 +
/// c^T x. Exact at its centers.
#[derive(Debug, Clone, PartialEq)]
pub struct SurrogateModel {
    centers: Vec<Vec<f64>>,
    weights: Vec<f64>,
    tail: Vec<f64>, // [constant, per-coordinate linear coefficients]
}

impl SurrogateModel {
    pub fn centers(&self) -> &[Vec<f64>] {
        &self.centers
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn tail(&self) -> &[f64] {
        &self.tail
    }

    pub fn dim(&self) -> usize {
        self.tail.len() - 1
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let mut s = self.tail[0];
        for (j, v) in x.iter().enumerate() {
            s += self.tail[j + 1] * v;
        }
        for (center, w) in self.centers.iter().zip(&self.weights) {
            let r2: f64 = center
                .iter()
                .zip(x)
                .map(|(c, v)| (c - v) * (c - v))
                .sum();
            s += w * r2.sqrt().powi(3);
        }
        s
    }
}

/// Fits the augmented interpolation system
///
/// ```text
/// | Phi  P | |w|   |f|
/// | P^T  0 | |c| = |0|
/// ```
///
/// with kernel phi(r) = r^3 and P = [1 | x]. Requires at least dim+1
/// affinely independent points.
pub fn fit_cubic_rbf(points: &[Vec<f64>], values: &[f64]) -> Result<SurrogateModel> {
    if points.is_empty() {
        return Err(Error::EmptyInput("no interpolation points".into()));
    }
    if points.len() != values.len() {
        return Err(Error::DimensionMismatch {
            expected: points.len(),
            got: values.len(),
        });
    }
    let dim = points[0].len();
    for p in points {
        if p.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: p.len(),
            });
        }
    }
    let n = points.len();
    if n < dim + 1 {
        return Err(Error::InvalidParameter(format!(
            "cubic RBF with linear tail needs at least {} points, got {n}",
            dim + 1
        )));
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let d2: f64 = points[i]
                .iter()
                .zip(&points[j])
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            if d2.sqrt() < 1e-12 {
                return Err(Error::DuplicateCenters { first: i, second: j });
            }
        }
    }

    let size = n + dim + 1;
    let mut a = DMatrix::zeros(size, size);
    for i in 0..n {
        for j in 0..n {
            let d2: f64 = points[i]
                .iter()
                .zip(&points[j])
                .map(|(x, y)| (x - y) * (x - y))
                .sum();
            a[(i, j)] = d2.sqrt().powi(3);
        }
        a[(i, n)] = 1.0;
        a[(n, i)] = 1.0;
        for k in 0..dim {
            a[(i, n + 1 + k)] = points[i][k];
            a[(n + 1 + k, i)] = points[i][k];
        }
    }
    let mut rhs = DVector::zeros(size);
    for i in 0..n {
        rhs[i] = values[i];
    }

    let solution = a
        .full_piv_lu()
        .solve(&rhs)
        .ok_or(Error::SingularSystem { size })?;
    if solution.iter().any(|v| !v.is_finite()) {
        return Err(Error::SingularSystem { size });
    }

    Ok(SurrogateModel {
        centers: points.to_vec(),
        weights: solution.as_slice()[..n].to_vec(),
        tail: solution.as_slice()[n..].to_vec(),
    })
}
