//! The spill-over attack pipeline: target selection, misclustering metric,
//! black-box objective, and report assembly.
//!
//! The attack perturbs a single target sample inside a per-feature noise box
//! and measures how many *unperturbed* samples change cluster membership as
//! a side effect. The clustering backend is only ever invoked through an
//! opaque dataset-to-partition function.

use serde::{Deserialize, Serialize};

use crate::clustering::{cluster_fn, Backend, ClusterAssignment, ClusterModel};
use crate::data::Dataset;
use crate::depth::{comd, select_delta, DepthReport, PerturbationBox};
use crate::error::{Error, Result};
use crate::optimizer::{cors_minimize, EvalRecord, OptimBudget};

/// Attack parameters: which backend to attack, which cluster spills into
/// which, the noise box (derived from the depth floor when absent), and the
/// optimizer budget.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AttackConfig {
    pub backend: Backend,
    pub source_cluster: u8,
    pub target_cluster: u8,
    pub noise_box: Option<PerturbationBox>,
    pub budget: Option<OptimBudget>,
    pub depth_floor: f64,
    pub seed: u64,
}

impl AttackConfig {
    pub fn new(backend: Backend, seed: u64) -> Self {
        Self {
            backend,
            source_cluster: 0,
            target_cluster: 1,
            noise_box: None,
            budget: None,
            depth_floor: 0.1,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.source_cluster > 1 || self.target_cluster > 1 {
            return Err(Error::InvalidParameter(
                "cluster roles must be 0 or 1".into(),
            ));
        }
        if self.source_cluster == self.target_cluster {
            return Err(Error::InvalidParameter(
                "source and target clusters must differ".into(),
            ));
        }
        if !(self.depth_floor > 0.0 && self.depth_floor <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "depth floor {} must be in (0, 1]",
                self.depth_floor
            )));
        }
        Ok(())
    }
}

/// Everything the attack produced: the optimal perturbation, the misclustering
/// value, the spill-over set, and the depth audit of the perturbed target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackReport {
    pub target_index: usize,
    pub epsilon_star: Vec<f64>,
    pub perturbed_target: Vec<f64>,
    pub delta_value: f64,
    pub spillover: Vec<usize>,
    pub reverse_spillover: Vec<usize>,
    pub target_moved: bool,
    pub noise_threshold: Vec<f64>,
    pub depth_of_perturbed: f64,
    pub depth_quantile: f64,
    pub outlier_risk: bool,
    pub cluster_sizes_before: [usize; 2],
    pub cluster_sizes_after: [usize; 2],
    pub assignment_before: Vec<u8>,
    pub assignment_after: Vec<u8>,
    pub eval_trace: Vec<EvalRecord>,
}

/// Index of the source-cluster sample nearest (in Euclidean distance) to the
/// opposing centroid; ties broken by lowest index.
pub fn select_target(data: &Dataset, model: &ClusterModel, source: u8) -> usize {
    let opposing = &model.centroids[1 - source as usize];
    let mut best = (f64::INFINITY, usize::MAX);
    for i in 0..data.n() {
        if model.assignment.label(i) != source {
            continue;
        }
        let d: f64 = data
            .row(i)
            .iter()
            .zip(opposing)
            .map(|(x, c)| (x - c) * (x - c))
            .sum();
        if d < best.0 {
            best = (d, i);
        }
    }
    best.1
}

/// The misclustering metric: minus the Frobenius norm of the co-membership
/// difference YY^T - Y'Y'^T. Zero iff the partitions coincide; invariant to
/// swapping cluster labels in either argument.
pub fn delta_metric(before: &ClusterAssignment, after: &ClusterAssignment) -> Result<f64> {
    if before.n() != after.n() {
        return Err(Error::DimensionMismatch {
            expected: before.n(),
            got: after.n(),
        });
    }
    let n = before.n();
    let mut changed = 0u64;
    for i in 0..n {
        for j in 0..n {
            let co_before = before.label(i) == before.label(j);
            let co_after = after.label(i) == after.label(j);
            if co_before != co_after {
                changed += 1;
            }
        }
    }
    Ok(-((changed as f64).sqrt()))
}

/// The black-box objective f(eps): recluster the dataset with the target row
/// replaced by x_t + eps and return the misclustering metric against the
/// baseline partition. Each call is a full reclustering.
pub struct AttackObjective<'a, C>
where
    C: Fn(&Dataset) -> Result<ClusterModel> + Sync,
{
    data: &'a Dataset,
    clusterer: C,
    baseline: &'a ClusterAssignment,
    target: usize,
}

impl<'a, C> AttackObjective<'a, C>
where
    C: Fn(&Dataset) -> Result<ClusterModel> + Sync,
{
    pub fn new(
        data: &'a Dataset,
        clusterer: C,
        baseline: &'a ClusterAssignment,
        target: usize,
    ) -> Self {
        Self {
            data,
            clusterer,
            baseline,
            target,
        }
    }

    pub fn eval(&self, eps: &[f64]) -> Result<f64> {
        if eps.len() != self.data.m() {
            return Err(Error::DimensionMismatch {
                expected: self.data.m(),
                got: eps.len(),
            });
        }
        if let Some(index) = eps.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinitePerturbation { index });
        }
        let perturbed: Vec<f64> = self
            .data
            .row(self.target)
            .iter()
            .zip(eps)
            .map(|(x, e)| x + e)
            .collect();
        let replaced = self.data.with_row_replaced(self.target, &perturbed)?;
        let model = (self.clusterer)(&replaced)?;
        delta_metric(self.baseline, &model.assignment)
    }
}

/// Builds the closure of Algorithm 1 lines 3-10 over a frozen baseline.
pub fn objective<'a, C>(
    data: &'a Dataset,
    clusterer: C,
    baseline: &'a ClusterAssignment,
    target: usize,
) -> AttackObjective<'a, C>
where
    C: Fn(&Dataset) -> Result<ClusterModel> + Sync,
{
    AttackObjective::new(data, clusterer, baseline, target)
}

/// Matches the labels of `after` to `before` by maximal agreement on the
/// 2x2 contingency table, so spill direction is well defined even when the
/// backend swaps labels between runs.
fn align_roles(before: &ClusterAssignment, after: &ClusterAssignment) -> ClusterAssignment {
    let agree = before
        .labels()
        .iter()
        .zip(after.labels())
        .filter(|(a, b)| a == b)
        .count();
    if before.n() - agree > agree {
        after.swapped()
    } else {
        after.clone()
    }
}

/// Runs the full attack: cluster, select the target, derive the noise box,
/// minimize the misclustering objective, recluster, and audit depth.
pub fn run_attack(data: &Dataset, config: &AttackConfig) -> Result<AttackReport> {
    config.validate()?;
    let clusterer = cluster_fn(config.backend, config.seed);

    let model = clusterer(data)?;
    let baseline = model.assignment.clone();
    let target = select_target(data, &model, config.source_cluster);

    let noise_box = match &config.noise_box {
        Some(b) => {
            if b.dim() != data.m() {
                return Err(Error::DimensionMismatch {
                    expected: data.m(),
                    got: b.dim(),
                });
            }
            b.clone()
        }
        None => select_delta(data, &baseline, target, config.depth_floor, None)?,
    };

    let budget = config
        .budget
        .unwrap_or_else(|| OptimBudget::default_for_dim(data.m(), config.seed));

    let obj = objective(data, &clusterer, &baseline, target);
    let result = cors_minimize(
        |eps| {
            obj.eval(eps)
                .expect("objective evaluation failed on a feasible perturbation")
        },
        &noise_box,
        &budget,
    )?;

    let epsilon_star = result.best_point.clone();
    let perturbed_target: Vec<f64> = data
        .row(target)
        .iter()
        .zip(&epsilon_star)
        .map(|(x, e)| x + e)
        .collect();
    let replaced = data.with_row_replaced(target, &perturbed_target)?;
    let after_model = clusterer(&replaced)?;
    let after = align_roles(&baseline, &after_model.assignment);

    let mut spillover = Vec::new();
    let mut reverse_spillover = Vec::new();
    for i in 0..data.n() {
        if i == target {
            continue;
        }
        let was = baseline.label(i);
        let now = after.label(i);
        if was == config.source_cluster && now == config.target_cluster {
            spillover.push(data.sample_ids()[i]);
        } else if was == config.target_cluster && now == config.source_cluster {
            reverse_spillover.push(data.sample_ids()[i]);
        }
    }
    let target_moved = after.label(target) == config.target_cluster;

    let report = DepthReport::compute(data, &baseline)?;
    let depth_of_perturbed = comd(&perturbed_target, data, &baseline)?;
    let depth_quantile = report.quantile_of(depth_of_perturbed);
    let outlier_risk = depth_of_perturbed < report.floor_value(config.depth_floor);
    if outlier_risk {
        log::warn!(
            "perturbed target depth {depth_of_perturbed:.6} fell below the {:.2}-quantile floor; an adversary would reject this run",
            config.depth_floor
        );
    }

    Ok(AttackReport {
        target_index: data.sample_ids()[target],
        epsilon_star,
        perturbed_target,
        delta_value: result.best_value,
        spillover,
        reverse_spillover,
        target_moved,
        noise_threshold: noise_box.delta().to_vec(),
        depth_of_perturbed,
        depth_quantile,
        outlier_risk,
        cluster_sizes_before: baseline.cluster_sizes(),
        cluster_sizes_after: after.cluster_sizes(),
        assignment_before: baseline.labels().to_vec(),
        assignment_after: after.labels().to_vec(),
        eval_trace: result.trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clustering::{cluster, kmeans};
    use crate::data::{synth_gaussians, GaussianSpec};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn toy_dataset() -> Dataset {
        let specs = vec![
            GaussianSpec::new(vec![1.0, 0.0], 1.45, 100).unwrap(),
            GaussianSpec::new(vec![5.0, 0.0], 0.75, 100).unwrap(),
        ];
        synth_gaussians(&specs, 7).unwrap()
    }

    #[test]
    fn select_target_prefers_nearer_point() {
        let data =
            Dataset::from_rows(&[vec![0.0, 0.0], vec![1.0, 0.0], vec![5.0, 0.0]]).unwrap();
        let assignment = ClusterAssignment::from_labels(vec![0, 0, 1]).unwrap();
        let model = ClusterModel::from_assignment(&data, assignment);
        assert_eq!(select_target(&data, &model, 0), 1);
    }

    #[test]
    fn select_target_tie_breaks_by_lowest_index() {
        let data = Dataset::from_rows(&[
            vec![0.0, 1.0],
            vec![0.0, -1.0],
            vec![5.0, 0.0],
        ])
        .unwrap();
        let assignment = ClusterAssignment::from_labels(vec![0, 0, 1]).unwrap();
        let model = ClusterModel::from_assignment(&data, assignment);
        assert_eq!(select_target(&data, &model, 0), 0);
    }

    #[test]
    fn toy_target_satisfies_acute_angle_condition() {
        let data = toy_dataset();
        let model = cluster(&data, Backend::KMeans, 7).unwrap();
        for source in [0u8, 1u8] {
            let t = select_target(&data, &model, source);
            let c1 = &model.centroids[source as usize];
            let c2 = &model.centroids[1 - source as usize];
            let inner: f64 = (0..2)
                .map(|j| (data.row(t)[j] - c1[j]) * (c2[j] - c1[j]))
                .sum();
            assert!(inner >= 0.0, "inner product {inner}");
        }
    }

    #[test]
    fn delta_metric_zero_for_identical_partitions() {
        let y = ClusterAssignment::from_labels(vec![0, 0, 1, 1]).unwrap();
        assert_eq!(delta_metric(&y, &y).unwrap(), 0.0);
    }

    #[test]
    fn delta_metric_ignores_label_swap() {
        let y = ClusterAssignment::from_labels(vec![0, 0, 1, 1]).unwrap();
        assert_eq!(delta_metric(&y, &y.swapped()).unwrap(), 0.0);
    }

    #[test]
    fn delta_metric_hand_computed_case() {
        // Point 1 moves from {0,1} to {2,3}: 2(n1-1) + 2 n2 = 2 + 4 = 6
        // co-membership entries change.
        let y = ClusterAssignment::from_labels(vec![0, 0, 1, 1]).unwrap();
        let yp = ClusterAssignment::from_labels(vec![0, 1, 1, 1]).unwrap();
        assert_abs_diff_eq!(
            delta_metric(&y, &yp).unwrap(),
            -(6.0f64).sqrt(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn delta_metric_dimension_mismatch() {
        let y = ClusterAssignment::from_labels(vec![0, 1]).unwrap();
        let yp = ClusterAssignment::from_labels(vec![0, 1, 1]).unwrap();
        assert!(delta_metric(&y, &yp).is_err());
    }

    /// Brute-force oracle: materialize both co-membership matrices and take
    /// the Frobenius norm of their difference.
    fn delta_brute_force(a: &ClusterAssignment, b: &ClusterAssignment) -> f64 {
        let n = a.n();
        let mat = |y: &ClusterAssignment| -> Vec<i8> {
            let mut m = vec![0i8; n * n];
            for i in 0..n {
                for j in 0..n {
                    m[i * n + j] = i8::from(y.label(i) == y.label(j));
                }
            }
            m
        };
        let (ma, mb) = (mat(a), mat(b));
        let sum: f64 = ma
            .iter()
            .zip(&mb)
            .map(|(x, y)| {
                let d = (x - y) as f64;
                d * d
            })
            .sum();
        -sum.sqrt()
    }

    proptest! {
        #[test]
        fn delta_matches_brute_force_and_is_root_integer(
            seed in 0u64..300,
            n in 2usize..50,
        ) {
            use rand::prelude::*;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mk = |rng: &mut rand_chacha::ChaCha8Rng| {
                let mut labels: Vec<u8> = (0..n).map(|_| rng.random_range(0..2u8)).collect();
                // Force both clusters non-empty.
                labels[0] = 0;
                labels[n - 1] = 1;
                ClusterAssignment::from_labels(labels).unwrap()
            };
            let a = mk(&mut rng);
            let b = mk(&mut rng);
            let fast = delta_metric(&a, &b).unwrap();
            let brute = delta_brute_force(&a, &b);
            prop_assert!((fast - brute).abs() < 1e-9, "fast {fast} brute {brute}");
            let squared = fast * fast;
            prop_assert!((squared - squared.round()).abs() < 1e-9);
        }
    }

    #[test]
    fn objective_zero_at_zero_perturbation() {
        let data = toy_dataset();
        let clusterer = cluster_fn(Backend::KMeans, 7);
        let model = clusterer(&data).unwrap();
        let target = select_target(&data, &model, 0);
        let obj = objective(&data, &clusterer, &model.assignment, target);
        assert_eq!(obj.eval(&[0.0, 0.0]).unwrap(), 0.0);
    }

    #[test]
    fn objective_negative_at_theorem_construction() {
        let data = toy_dataset();
        let clusterer = cluster_fn(Backend::KMeans, 7);
        let model = clusterer(&data).unwrap();
        let target = select_target(&data, &model, 0);
        let c2 = &model.centroids[1];
        let eps: Vec<f64> = c2
            .iter()
            .zip(data.row(target))
            .map(|(c, x)| c - x)
            .collect();
        let obj = objective(&data, &clusterer, &model.assignment, target);
        assert!(obj.eval(&eps).unwrap() < 0.0);
    }

    #[test]
    fn objective_is_deterministic() {
        let data = toy_dataset();
        let clusterer = cluster_fn(Backend::KMeans, 7);
        let model = clusterer(&data).unwrap();
        let target = select_target(&data, &model, 0);
        let obj = objective(&data, &clusterer, &model.assignment, target);
        let eps = [0.8, -0.3];
        assert_eq!(obj.eval(&eps).unwrap(), obj.eval(&eps).unwrap());
    }

    #[test]
    fn objective_rejects_non_finite_perturbations() {
        let data = toy_dataset();
        let clusterer = cluster_fn(Backend::KMeans, 7);
        let model = clusterer(&data).unwrap();
        let obj = objective(&data, &clusterer, &model.assignment, 0);
        let err = obj.eval(&[f64::NAN, 0.0]).unwrap_err();
        assert!(matches!(err, Error::NonFinitePerturbation { index: 0 }));
    }

    #[test]
    fn zero_budget_attack_is_a_no_op() {
        let data = toy_dataset();
        let mut config = AttackConfig::new(Backend::KMeans, 7);
        config.noise_box = Some(PerturbationBox::uniform(2, 0.0).unwrap());
        let report = run_attack(&data, &config).unwrap();
        assert_eq!(report.epsilon_star, vec![0.0, 0.0]);
        assert_eq!(report.delta_value, 0.0);
        assert!(report.spillover.is_empty());
        assert!(!report.target_moved);
    }

    /// Reference toy draw: a dataset seed whose noise box provably contains a
    /// spill-over region (verified by dense grid scan of the objective).
    fn toy_reference() -> Dataset {
        let specs = vec![
            GaussianSpec::new(vec![1.0, 0.0], 1.45, 100).unwrap(),
            GaussianSpec::new(vec![5.0, 0.0], 0.75, 100).unwrap(),
        ];
        synth_gaussians(&specs, 18).unwrap()
    }

    fn toy_config(data: &Dataset, seed: u64) -> AttackConfig {
        let model = cluster(data, Backend::KMeans, seed).unwrap();
        let source = model.assignment.label(0);
        let mut config = AttackConfig::new(Backend::KMeans, seed);
        config.source_cluster = source;
        config.target_cluster = 1 - source;
        config
    }

    #[test]
    fn attack_report_invariants_hold_on_toy_run() {
        let data = toy_reference();
        let config = toy_config(&data, 18);
        let report = run_attack(&data, &config).unwrap();

        // Feasibility of the optimum.
        for (e, d) in report.epsilon_star.iter().zip(&report.noise_threshold) {
            assert!(e.abs() <= *d + 1e-15);
        }
        // delta is minus the square root of an integer.
        let squared = report.delta_value * report.delta_value;
        assert!((squared - squared.round()).abs() < 1e-9);
        // Spill-over soundness.
        assert!(!report.spillover.contains(&report.target_index));
        for &id in &report.spillover {
            assert_eq!(report.assignment_before[id], config.source_cluster);
            assert_eq!(report.assignment_after[id], config.target_cluster);
        }
        for (i, (&was, &now)) in report
            .assignment_before
            .iter()
            .zip(&report.assignment_after)
            .enumerate()
        {
            if i == report.target_index || was == now {
                continue;
            }
            if was == config.source_cluster {
                assert!(report.spillover.contains(&i));
            } else {
                assert!(report.reverse_spillover.contains(&i));
            }
        }
    }

    #[test]
    fn attack_is_bit_reproducible() {
        let data = toy_dataset();
        let mut config = toy_config(&data, 3);
        config.budget = Some(OptimBudget::new(30, 20, 3));
        let a = run_attack(&data, &config).unwrap();
        let b = run_attack(&data, &config).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn toy_attack_produces_spillover_on_reference_seed() {
        let data = toy_reference();
        let config = toy_config(&data, 18);
        let report = run_attack(&data, &config).unwrap();
        assert!(
            !report.spillover.is_empty(),
            "expected spill-over on the reference seed, delta {}",
            report.delta_value
        );
        assert!(!report.outlier_risk);

        // Every spill-over point satisfies the acute-angle relation with the
        // target, the observable reported for the toy run.
        let model = cluster(&data, Backend::KMeans, 18).unwrap();
        let c1 = &model.centroids[config.source_cluster as usize];
        let x_t = data.row(report.target_index);
        for &id in &report.spillover {
            let y = data.row(id);
            let ip: f64 = (0..data.m())
                .map(|j| (x_t[j] - c1[j]) * (y[j] - c1[j]))
                .sum();
            assert!(ip >= 0.0, "spill-over {id} has inner product {ip}");
        }
    }

    #[test]
    fn kmeans_seed_is_frozen_between_runs() {
        // The same clusterer applied to the unmodified dataset must return
        // the baseline partition, so f(0) = 0 holds for kmeans too.
        let data = toy_dataset();
        let a = kmeans(&data, 11, 200).unwrap();
        let b = kmeans(&data, 11, 200).unwrap();
        assert_eq!(a.assignment, b.assignment);
    }
}
