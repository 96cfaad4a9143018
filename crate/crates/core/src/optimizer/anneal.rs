//! Simulated annealing baseline with geometric cooling.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::depth::PerturbationBox;
use crate::error::Result;
use crate::optimizer::{EvalRecord, OptimBudget, OptimResult};

const T_INITIAL: f64 = 1.0;
const T_FINAL: f64 = 1e-6;
const PROPOSAL_SCALE: f64 = 0.5;
const PROPOSAL_FLOOR: f64 = 0.02;

/// Box-constrained simulated annealing: Gaussian proposals clipped to the
/// box, geometric cooling. Comparison baseline for [`super::cors_minimize`];
/// deterministic per seed.
pub fn anneal_minimize<F>(
    f: F,
    bounds: &PerturbationBox,
    budget: &OptimBudget,
) -> Result<OptimResult>
where
    F: Fn(&[f64]) -> f64,
{
    let dim = bounds.dim();
    let origin = vec![0.0; dim];
    if bounds.is_zero() || budget.total_evals <= 1 {
        let value = f(&origin);
        return Ok(OptimResult::from_trace(vec![EvalRecord {
            point: origin,
            value,
        }]));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(budget.seed);
    let mut current = origin;
    let mut f_current = f(&current);
    let mut trace = vec![EvalRecord {
        point: current.clone(),
        value: f_current,
    }];

    let steps = budget.total_evals - 1;
    let cooling = (T_FINAL / T_INITIAL).powf(1.0 / steps as f64);
    let mut temperature = T_INITIAL;

    for _ in 0..steps {
        let sigma = PROPOSAL_SCALE * (temperature / T_INITIAL).sqrt().max(PROPOSAL_FLOOR);
        let mut proposal = current.clone();
        for (v, &d) in proposal.iter_mut().zip(bounds.delta()) {
            if d > 0.0 {
                let z: f64 = rng.sample(StandardNormal);
                *v = (*v + sigma * d * z).clamp(-d, d);
            }
        }
        let f_proposal = f(&proposal);
        trace.push(EvalRecord {
            point: proposal.clone(),
            value: f_proposal,
        });

        let accept = f_proposal < f_current
            || rng.random::<f64>() < ((f_current - f_proposal) / temperature).exp();
        if accept {
            current = proposal;
            f_current = f_proposal;
        }
        temperature *= cooling;
    }

    Ok(OptimResult::from_trace(trace))
}
