//! Spill-over adversarial attacks on 2-way clustering.
//!
//! Perturbing a single boundary sample inside a depth-constrained noise box
//! can flip the cluster membership of *other*, unperturbed samples. This
//! crate provides the full pipeline: dataset handling, K-Means and Ward
//! backends behind an opaque clustering function, Mahalanobis-style depth
//! measures that keep the perturbed sample non-outlying, a CORS-style
//! surrogate optimizer for the black-box misclustering objective, and
//! executable verifiers for the two supporting theorems.
//!
//! Data-parallel inner loops (K-Means restarts, per-sample depth scans, the
//! optimizer's multi-start inner search) run on rayon when the default
//! `parallel` feature is enabled and fall back to sequential iterators
//! otherwise; results are identical in both modes.

pub mod attack;
pub mod clustering;
pub mod data;
pub mod depth;
pub mod error;
pub mod optimizer;
pub mod parallel;
pub mod theory;

pub use attack::{delta_metric, objective, run_attack, select_target, AttackConfig, AttackReport};
pub use clustering::{cluster, cluster_fn, kmeans, ward, Backend, ClusterAssignment, ClusterModel};
pub use data::{load_csv, parse_csv, synth_gaussians, Dataset, GaussianSpec};
pub use depth::{
    comd, mahalanobis_depth, mdc, select_delta, ComdModel, DepthReport, MahalanobisModel,
    PerturbationBox,
};
pub use error::{Error, Result};
pub use optimizer::{
    anneal_minimize, cors_minimize, fit_cubic_rbf, latin_hypercube, EvalRecord, OptimBudget,
    OptimResult, SurrogateModel,
};
pub use theory::{
    euclidean_table, noisy_metric, theorem1_certify, theorem1_validate, theorem2_experiment,
    MetricTable, NoisyMetricConfig, SpillCandidate, SpillPersistence, Theorem1Certificate,
    Theorem1Validation, Theorem2Report, TrueMetric,
};
