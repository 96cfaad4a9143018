//! Derivative-free box-constrained minimization.
//!
//! The main entry point is [`cors_minimize`]: Latin hypercube initialization,
//! a cubic radial-basis-function surrogate refit after every evaluation, and
//! candidate selection that keeps a cycling minimum distance from all prior
//! evaluations. [`anneal_minimize`] is a simulated-annealing baseline for
//! comparison runs.

mod anneal;
mod cors;
mod rbf;

pub use anneal::anneal_minimize;
pub use cors::cors_minimize;
pub use rbf::{fit_cubic_rbf, SurrogateModel};

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::depth::PerturbationBox;
use crate::error::{Error, Result};

/// Evaluation budget for a derivative-free run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct OptimBudget {
    pub total_evals: usize,
    pub init_evals: usize,
    pub seed: u64,
}

impl OptimBudget {
    pub fn new(total_evals: usize, init_evals: usize, seed: u64) -> Self {
        Self {
            total_evals,
            init_evals,
            seed,
        }
    }

    /// Defaults scaled to the search dimension: `max(2(m+1), 20)` initial
    /// samples and `30 m` total evaluations capped at 3000.
    pub fn default_for_dim(dim: usize, seed: u64) -> Self {
        let init_evals = (2 * (dim + 1)).max(20);
        let total_evals = (30 * dim).clamp(init_evals + 1, 3000.max(init_evals + 1));
        Self {
            total_evals,
            init_evals,
            seed,
        }
    }

    /// Keeps the initialization size but replaces the total, preserving the
    /// `total > init` invariant.
    pub fn with_total(mut self, total: usize) -> Self {
        self.total_evals = total.max(self.init_evals + 1);
        self
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        if self.init_evals < dim + 1 {
            return Err(Error::InvalidParameter(format!(
                "init_evals {} must be at least dim+1 = {}",
                self.init_evals,
                dim + 1
            )));
        }
        if self.total_evals <= self.init_evals {
            return Err(Error::InvalidParameter(format!(
                "total_evals {} must exceed init_evals {}",
                self.total_evals, self.init_evals
            )));
        }
        Ok(())
    }
}

/// One objective evaluation in a trace.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct EvalRecord {
    pub point: Vec<f64>,
    pub value: f64,
}

/// Outcome of a derivative-free minimization run.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct OptimResult {
    pub best_point: Vec<f64>,
    pub best_value: f64,
    pub trace: Vec<EvalRecord>,
}

impl OptimResult {
    pub(crate) fn from_trace(trace: Vec<EvalRecord>) -> Self {
        let best = trace
            .iter()
            .enumerate()
            .min_by(|(ia, a), (ib, b)| a.value.partial_cmp(&b.value).unwrap().then(ia.cmp(ib)))
            .expect("non-empty trace");
        Self {
            best_point: best.1.point.clone(),
            best_value: best.1.value,
            trace,
        }
    }
}

/// Latin hypercube sample of `count` points in the box: per coordinate, each
/// of the `count` equal strata holds exactly one point. Deterministic per
/// seed. Zero-width coordinates collapse to 0.
pub fn latin_hypercube(count: usize, bounds: &PerturbationBox, seed: u64) -> Vec<Vec<f64>> {
    assert!(count >= 1, "latin_hypercube needs count >= 1");
    let dim = bounds.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = vec![vec![0.0; dim]; count];
    for (j, &d) in bounds.delta().iter().enumerate() {
        if d == 0.0 {
            continue;
        }
        let mut strata: Vec<usize> = (0..count).collect();
        strata.shuffle(&mut rng);
        let width = 2.0 * d / count as f64;
        for (i, point) in points.iter_mut().enumerate() {
            let u: f64 = rng.random();
            point[j] = -d + (strata[i] as f64 + u) * width;
        }
    }
    points
}
