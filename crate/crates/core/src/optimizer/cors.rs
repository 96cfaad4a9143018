//! CORS-style surrogate-guided minimization.
//!
//! After an initial Latin hypercube sample, each iteration refits the cubic
//! RBF surrogate to every evaluation so far, then picks the next point by
//! minimizing the surrogate subject to a minimum distance from all evaluated
//! points. The distance fraction beta cycles from exploratory to greedy.

use crate::depth::PerturbationBox;
use crate::error::Result;
use crate::optimizer::rbf::{fit_cubic_rbf, SurrogateModel};
use crate::optimizer::{latin_hypercube, EvalRecord, OptimBudget, OptimResult};
use crate::parallel;

const BETA_CYCLE: [f64; 6] = [0.9, 0.75, 0.25, 0.05, 0.03, 0.0];
const INNER_STARTS: usize = 32;
const INNER_MAX_ITERS: usize = 200;
const INNER_INITIAL_STEP: f64 = 0.25;
const INNER_MIN_STEP: f64 = 1e-4;
const DUPLICATE_EPS: f64 = 1e-12;

/// Coordinates with a zero noise threshold are frozen at 0 and excluded from
/// the search space; the surrogate lives in the remaining free coordinates.
struct ReducedSpace {
    free: Vec<usize>,
    full_dim: usize,
    bounds: PerturbationBox,
}

impl ReducedSpace {
    fn from_box(full: &PerturbationBox) -> Option<Self> {
        let free: Vec<usize> = full
            .delta()
            .iter()
            .enumerate()
            .filter(|(_, &d)| d > 0.0)
            .map(|(j, _)| j)
            .collect();
        if free.is_empty() {
            return None;
        }
        let delta: Vec<f64> = free.iter().map(|&j| full.delta()[j]).collect();
        Some(Self {
            free,
            full_dim: full.dim(),
            bounds: PerturbationBox::new(delta).expect("positive deltas"),
        })
    }

    fn embed(&self, reduced: &[f64]) -> Vec<f64> {
        let mut full = vec![0.0; self.full_dim];
        for (&j, &v) in self.free.iter().zip(reduced) {
            full[j] = v;
        }
        full
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn min_dist_to(points: &[Vec<f64>], x: &[f64]) -> f64 {
    points
        .iter()
        .map(|p| sq_dist(p, x).sqrt())
        .fold(f64::INFINITY, f64::min)
}

/// Incremental surrogate/constraint state for pattern search: squared
/// distances from the current point to every surrogate center and every
/// evaluated point. A single-coordinate probe updates each distance in O(1),
/// which keeps high-dimensional polling affordable.
struct SearchState<'a> {
    surrogate: &'a SurrogateModel,
    evaluated: &'a [Vec<f64>],
    x: Vec<f64>,
    center_d2: Vec<f64>,
    eval_d2: Vec<f64>,
    tail_value: f64,
}

impl<'a> SearchState<'a> {
    fn new(surrogate: &'a SurrogateModel, evaluated: &'a [Vec<f64>], start: &[f64]) -> Self {
        let mut state = Self {
            surrogate,
            evaluated,
            x: start.to_vec(),
            center_d2: Vec::new(),
            eval_d2: Vec::new(),
            tail_value: 0.0,
        };
        state.refresh();
        state
    }

    /// Recomputes all cached quantities exactly; called after accepted moves
    /// to keep incremental rounding from accumulating.
    fn refresh(&mut self) {
        self.center_d2 = self
            .surrogate
            .centers()
            .iter()
            .map(|c| sq_dist(c, &self.x))
            .collect();
        self.eval_d2 = self.evaluated.iter().map(|p| sq_dist(p, &self.x)).collect();
        let tail = self.surrogate.tail();
        self.tail_value = tail[0]
            + self
                .x
                .iter()
                .enumerate()
                .map(|(j, v)| tail[j + 1] * v)
                .sum::<f64>();
    }

    fn value(&self) -> f64 {
        let mut s = self.tail_value;
        for (d2, w) in self.center_d2.iter().zip(self.surrogate.weights()) {
            s += w * (d2 * d2.sqrt());
        }
        s
    }

    fn min_eval_dist(&self) -> f64 {
        self.eval_d2
            .iter()
            .fold(f64::INFINITY, |acc, &d2| acc.min(d2))
            .sqrt()
    }

    /// Surrogate value and minimum evaluated-point distance for the probe
    /// that moves coordinate `j` to `moved`, without committing the move.
    fn probe(&self, j: usize, moved: f64) -> (f64, f64) {
        let delta = moved - self.x[j];
        let dd = delta * delta;
        let mut s = self.tail_value + self.surrogate.tail()[j + 1] * delta;
        for (i, c) in self.surrogate.centers().iter().enumerate() {
            let d2 = (self.center_d2[i] + dd - 2.0 * delta * (c[j] - self.x[j])).max(0.0);
            s += self.surrogate.weights()[i] * (d2 * d2.sqrt());
        }
        let mut min_d2 = f64::INFINITY;
        for (i, p) in self.evaluated.iter().enumerate() {
            let d2 = (self.eval_d2[i] + dd - 2.0 * delta * (p[j] - self.x[j])).max(0.0);
            if d2 < min_d2 {
                min_d2 = d2;
            }
        }
        (s, min_d2.sqrt())
    }

    fn commit(&mut self, j: usize, moved: f64) {
        self.x[j] = moved;
        self.refresh();
    }
}

/// Pattern search on the surrogate from one start, respecting the box and a
/// minimum distance from evaluated points. Returns the reached point and its
/// surrogate value, or None when the start itself violates the constraint.
fn pattern_search(
    surrogate: &SurrogateModel,
    bounds: &PerturbationBox,
    evaluated: &[Vec<f64>],
    min_dist: f64,
    start: &[f64],
) -> Option<(Vec<f64>, f64)> {
    let mut state = SearchState::new(surrogate, evaluated, start);
    if state.min_eval_dist() < min_dist {
        return None;
    }
    let delta = bounds.delta();
    let mut fx = state.value();
    let mut step = INNER_INITIAL_STEP;
    for _ in 0..INNER_MAX_ITERS {
        if step < INNER_MIN_STEP {
            break;
        }
        let mut best: Option<(usize, f64, f64)> = None; // (coord, new coord value, f)
        for (j, &d) in delta.iter().enumerate() {
            for sign in [1.0, -1.0] {
                let moved = (state.x[j] + sign * step * d).clamp(-d, d);
                if moved == state.x[j] {
                    continue;
                }
                let (fp, probe_dist) = state.probe(j, moved);
                if probe_dist < min_dist {
                    continue;
                }
                // Sufficient decrease keeps the poll from crawling forever
                // on micro-improvements.
                let threshold = best.map_or(fx - 1e-12 * (1.0 + fx.abs()), |(_, _, f)| f);
                if fp < threshold {
                    best = Some((j, moved, fp));
                }
            }
        }
        match best {
            Some((j, v, f)) => {
                state.commit(j, v);
                fx = f;
            }
            None => step *= 0.5,
        }
    }
    Some((state.x, fx))
}

/// Minimizes the surrogate over the box with a minimum-distance constraint,
/// using multi-start pattern search from Latin hypercube starts.
fn inner_minimize(
    surrogate: &SurrogateModel,
    bounds: &PerturbationBox,
    evaluated: &[Vec<f64>],
    min_dist: f64,
    seed: u64,
) -> Option<Vec<f64>> {
    let starts = latin_hypercube(INNER_STARTS, bounds, seed);
    let results = parallel::map_slice(&starts, |start| {
        pattern_search(surrogate, bounds, evaluated, min_dist, start)
    });
    results
        .into_iter()
        .enumerate()
        .filter_map(|(i, r)| r.map(|(p, f)| (i, p, f)))
        .min_by(|(ia, _, fa), (ib, _, fb)| fa.partial_cmp(fb).unwrap().then(ia.cmp(ib)))
        .map(|(_, p, _)| p)
}

/// Fallback exploration: the Latin hypercube candidate farthest from all
/// evaluated points. Used when the surrogate cannot be fit.
fn max_min_distance_candidate(
    bounds: &PerturbationBox,
    evaluated: &[Vec<f64>],
    seed: u64,
) -> Vec<f64> {
    latin_hypercube(INNER_STARTS, bounds, seed)
        .into_iter()
        .enumerate()
        .map(|(i, p)| {
            let d = min_dist_to(evaluated, &p);
            (i, p, d)
        })
        .max_by(|(ia, _, da), (ib, _, db)| da.partial_cmp(db).unwrap().then(ib.cmp(ia)))
        .map(|(_, p, _)| p)
        .expect("non-empty candidate set")
}

/// Snaps a candidate that collides with an evaluated point to the nearest
/// stratum midpoint of the Latin hypercube grid.
fn snap_to_stratum_midpoint(candidate: &mut [f64], bounds: &PerturbationBox, strata: usize) {
    for (v, &d) in candidate.iter_mut().zip(bounds.delta()) {
        if d == 0.0 {
            continue;
        }
        let width = 2.0 * d / strata as f64;
        let idx = (((*v + d) / width).floor() as isize).clamp(0, strata as isize - 1);
        *v = -d + (idx as f64 + 0.5) * width;
    }
}

fn iteration_seed(seed: u64, k: usize) -> u64 {
    seed ^ (k as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Derivative-free global minimization of `f` over the box.
///
/// Evaluates `f` exactly `budget.total_evals` times (once for a zero-volume
/// box) and never outside the box. Deterministic for a fixed budget seed.
pub fn cors_minimize<F>(f: F, bounds: &PerturbationBox, budget: &OptimBudget) -> Result<OptimResult>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let space = match ReducedSpace::from_box(bounds) {
        Some(space) => space,
        None => {
            // Zero-volume box: the only feasible point is the origin.
            let origin = vec![0.0; bounds.dim()];
            let value = f(&origin);
            return Ok(OptimResult::from_trace(vec![EvalRecord {
                point: origin,
                value,
            }]));
        }
    };
    budget.validate(space.bounds.dim())?;

    let init_points = latin_hypercube(budget.init_evals, &space.bounds, budget.seed);
    let init_values = parallel::map_slice(&init_points, |p| f(&space.embed(p)));

    let mut reduced_points = init_points;
    let mut values = init_values;

    while values.len() < budget.total_evals {
        let k = values.len();
        let seed_k = iteration_seed(budget.seed, k);
        let candidate = match fit_cubic_rbf(&reduced_points, &values) {
            Ok(surrogate) => {
                let diag = space.bounds.diagonal();
                let mut found = None;
                for offset in 0..BETA_CYCLE.len() {
                    let beta = BETA_CYCLE[(k - budget.init_evals + offset) % BETA_CYCLE.len()];
                    if let Some(point) = inner_minimize(
                        &surrogate,
                        &space.bounds,
                        &reduced_points,
                        beta * diag,
                        seed_k.wrapping_add(offset as u64),
                    ) {
                        found = Some(point);
                        break;
                    }
                }
                found.unwrap_or_else(|| {
                    max_min_distance_candidate(&space.bounds, &reduced_points, seed_k)
                })
            }
            Err(_) => max_min_distance_candidate(&space.bounds, &reduced_points, seed_k),
        };

        let mut candidate = candidate;
        if min_dist_to(&reduced_points, &candidate) < DUPLICATE_EPS {
            snap_to_stratum_midpoint(&mut candidate, &space.bounds, budget.total_evals);
        }

        let value = f(&space.embed(&candidate));
        reduced_points.push(candidate);
        values.push(value);
    }

    let trace: Vec<EvalRecord> = reduced_points
        .iter()
        .zip(&values)
        .map(|(p, &value)| EvalRecord {
            point: space.embed(p),
            value,
        })
        .collect();
    Ok(OptimResult::from_trace(trace))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sphere(x: &[f64]) -> f64 {
        x.iter().map(|v| v * v).sum()
    }

    fn rosenbrock(x: &[f64]) -> f64 {
        (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2)
    }

    #[test]
    fn sphere_reaches_tolerance_in_60_evals() {
        let bounds = PerturbationBox::new(vec![1.0, 1.0]).unwrap();
        let budget = OptimBudget::new(60, 20, 7);
        let result = cors_minimize(sphere, &bounds, &budget).unwrap();
        assert!(result.best_value <= 1e-3, "best {}", result.best_value);
    }

    #[test]
    fn rosenbrock_reaches_tolerance_in_200_evals() {
        let bounds = PerturbationBox::new(vec![2.0, 2.0]).unwrap();
        let budget = OptimBudget::new(200, 20, 7);
        // The minimizer (1, 1) sits inside the box; published optimum is 0.
        let result = cors_minimize(rosenbrock, &bounds, &budget).unwrap();
        assert!(result.best_value <= 1.0, "best {}", result.best_value);
    }

    #[test]
    fn constant_objective_returns_constant() {
        let bounds = PerturbationBox::new(vec![1.0, 1.0]).unwrap();
        let budget = OptimBudget::new(30, 20, 0);
        let result = cors_minimize(|_| 3.5, &bounds, &budget).unwrap();
        assert_eq!(result.best_value, 3.5);
        assert_eq!(result.trace.len(), 30);
    }

    #[test]
    fn every_evaluation_is_feasible_and_budget_exact() {
        let bounds = PerturbationBox::new(vec![0.5, 2.0, 0.0]).unwrap();
        let budget = OptimBudget::new(45, 12, 3);
        let result = cors_minimize(sphere, &bounds, &budget).unwrap();
        assert_eq!(result.trace.len(), 45);
        for rec in &result.trace {
            assert!(bounds.contains(&rec.point), "outside box: {:?}", rec.point);
            assert_eq!(rec.point[2], 0.0);
        }
    }

    #[test]
    fn incumbent_is_monotone_non_increasing() {
        let bounds = PerturbationBox::new(vec![1.0, 1.0]).unwrap();
        let budget = OptimBudget::new(40, 20, 5);
        let result = cors_minimize(sphere, &bounds, &budget).unwrap();
        let mut best = f64::INFINITY;
        let mut incumbents = Vec::new();
        for rec in &result.trace {
            best = best.min(rec.value);
            incumbents.push(best);
        }
        for w in incumbents.windows(2) {
            assert!(w[1] <= w[0]);
        }
        assert_eq!(*incumbents.last().unwrap(), result.best_value);
    }

    #[test]
    fn deterministic_per_seed() {
        let bounds = PerturbationBox::new(vec![1.0, 1.0]).unwrap();
        let budget = OptimBudget::new(35, 20, 99);
        let a = cors_minimize(sphere, &bounds, &budget).unwrap();
        let b = cors_minimize(sphere, &bounds, &budget).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn zero_volume_box_evaluates_origin_once() {
        let bounds = PerturbationBox::new(vec![0.0, 0.0]).unwrap();
        let budget = OptimBudget::new(50, 20, 0);
        let result = cors_minimize(|x| sphere(x) + 1.0, &bounds, &budget).unwrap();
        assert_eq!(result.trace.len(), 1);
        assert_eq!(result.best_point, vec![0.0, 0.0]);
        assert_eq!(result.best_value, 1.0);
    }

    #[test]
    fn surrogate_interpolates_after_each_refit() {
        // Spot-check the interpolation invariant on a short run's trace.
        let bounds = PerturbationBox::new(vec![1.0, 1.0]).unwrap();
        let budget = OptimBudget::new(26, 20, 13);
        let result = cors_minimize(sphere, &bounds, &budget).unwrap();
        let points: Vec<Vec<f64>> = result.trace.iter().map(|r| r.point.clone()).collect();
        let values: Vec<f64> = result.trace.iter().map(|r| r.value).collect();
        let s = fit_cubic_rbf(&points, &values).unwrap();
        for (p, v) in points.iter().zip(&values) {
            let rel = (s.eval(p) - v).abs() / v.abs().max(1e-6);
            assert!(rel < 1e-6);
        }
    }
}
