//! Executable verifiers for the two spill-over theorems.
//!
//! The first covers the constructive K-Means argument: moving a judiciously
//! chosen point onto the opposing centroid shifts its old cluster mean enough
//! that provably identified neighbors flip. The second covers persistence of
//! a spill-over found under a noisy metric when the defender clusters with
//! the true metric; since cluster means are undefined for a general metric
//! table, the metric-aware backend is 2-medoid clustering.

use serde::{Deserialize, Serialize};

use crate::clustering::{kmeans, ClusterModel};
use crate::data::Dataset;
use crate::error::{Error, Result};

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn inner(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Per-candidate quantities from the constructive proof.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpillCandidate {
    pub index: usize,
    /// ||y - c2||^2 - ||y - c1||^2; non-negative at a K-Means fixed point.
    pub alpha: f64,
    /// ||c1 - c1'||^2 + 2 <y - c1, c1 - c1'>.
    pub bound: f64,
    /// <x - c1, y - c1>; the acute-angle condition requires this >= 0.
    pub acute: f64,
}

/// A constructive spill-over certificate: the chosen target, the shifted
/// source-cluster mean after the target moves onto the opposing centroid,
/// and every source-cluster point with its proof quantities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Theorem1Certificate {
    pub target_index: usize,
    pub target: Vec<f64>,
    /// c1, the source-cluster centroid before the perturbation.
    pub source_centroid: Vec<f64>,
    /// c2, the opposing centroid; also the perturbed target's position.
    pub opposing_centroid: Vec<f64>,
    /// (x - c1) / (n1 - 1) = c1 - c1'.
    pub center_shift: Vec<f64>,
    /// c1' = c1 - center_shift, the source mean after the target leaves.
    pub shifted_center: Vec<f64>,
    pub candidates: Vec<SpillCandidate>,
    /// Candidates with alpha <= bound and acute >= 0: provably closer to c2
    /// than to c1' after the perturbation.
    pub predicted_spill: Vec<usize>,
}

/// Builds the Theorem-1 certificate for cluster 0 as the source.
///
/// The target x maximizes <x - c1, c2 - c1> over the source cluster; the
/// maximum is non-negative at any K-Means fixed point because the projections
/// sum to zero over the cluster.
pub fn theorem1_certify(data: &Dataset, model: &ClusterModel) -> Result<Theorem1Certificate> {
    let source: u8 = 0;
    let members = model.assignment.members(source);
    let n1 = members.len();
    if n1 < 2 {
        return Err(Error::DegenerateClusters(format!(
            "source cluster has {n1} members; the certificate needs at least 2"
        )));
    }
    let c1 = &model.centroids[source as usize];
    let c2 = &model.centroids[1 - source as usize];
    let direction = sub(c2, c1);

    let mut best: Option<(f64, usize)> = None;
    for &i in &members {
        let proj = inner(&sub(data.row(i), c1), &direction);
        let better = match best {
            None => true,
            Some((b, _)) => proj > b,
        };
        if better {
            best = Some((proj, i));
        }
    }
    let (max_proj, target_index) = best.expect("non-empty cluster");
    if max_proj < 0.0 {
        return Err(Error::DegenerateClusters(
            "no source point forms an acute angle with the centroid direction".into(),
        ));
    }

    let target = data.row(target_index).to_vec();
    let center_shift: Vec<f64> = sub(&target, c1)
        .iter()
        .map(|v| v / (n1 - 1) as f64)
        .collect();
    let shifted_center: Vec<f64> = c1.iter().zip(&center_shift).map(|(c, s)| c - s).collect();
    let shift_norm_sq = inner(&center_shift, &center_shift);
    let x_minus_c1 = sub(&target, c1);

    let mut candidates = Vec::new();
    let mut predicted_spill = Vec::new();
    for &i in &members {
        if i == target_index {
            continue;
        }
        let y = data.row(i);
        let y_minus_c1 = sub(y, c1);
        let alpha = sq_dist(y, c2) - sq_dist(y, c1);
        let bound = shift_norm_sq + 2.0 * inner(&y_minus_c1, &center_shift);
        let acute = inner(&x_minus_c1, &y_minus_c1);
        if alpha <= bound && acute >= 0.0 {
            predicted_spill.push(i);
        }
        candidates.push(SpillCandidate {
            index: i,
            alpha,
            bound,
            acute,
        });
    }

    Ok(Theorem1Certificate {
        target_index,
        target,
        source_centroid: c1.clone(),
        opposing_centroid: c2.clone(),
        center_shift,
        shifted_center,
        candidates,
        predicted_spill,
    })
}

/// Outcome of replaying the certificate's perturbation on the real data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Theorem1Validation {
    /// Source-cluster points (target excluded) that land in the opposing
    /// cluster after one nearest-centroid pass over {c1', c2}.
    pub one_pass_spill: Vec<usize>,
    /// True when every predicted-spill point is in `one_pass_spill`.
    pub predicted_all_realized: bool,
    pub predicted_not_realized: Vec<usize>,
    /// One-pass movers the certificate did not predict (failed acute test).
    pub unpredicted_realized: Vec<usize>,
    /// Source-cluster points that end in the opposing cluster after a full
    /// K-Means re-run on the perturbed dataset (labels role-matched).
    pub converged_spill: Vec<usize>,
}

/// Replaces the target with c2 and checks who actually flips.
///
/// The one-pass reassignment over {c1', c2} is exactly the inequality family
/// the certificate asserts; the converged K-Means re-run (seeded) records how
/// far the proof's frozen-cluster assumption carries on real data.
pub fn theorem1_validate(
    data: &Dataset,
    cert: &Theorem1Certificate,
    seed: u64,
) -> Result<Theorem1Validation> {
    let perturbed = data.with_row_replaced(cert.target_index, &cert.opposing_centroid)?;
    let source_members: Vec<usize> = cert.candidates.iter().map(|c| c.index).collect();

    // One pass: nearest of {c1', c2}, ties resolved toward the opposing
    // cluster to mirror the certificate's non-strict inequality.
    let mut one_pass_spill = Vec::new();
    for &i in &source_members {
        let y = perturbed.row(i);
        if sq_dist(y, &cert.opposing_centroid) <= sq_dist(y, &cert.shifted_center) {
            one_pass_spill.push(i);
        }
    }

    let predicted_not_realized: Vec<usize> = cert
        .predicted_spill
        .iter()
        .copied()
        .filter(|i| !one_pass_spill.contains(i))
        .collect();
    let unpredicted_realized: Vec<usize> = one_pass_spill
        .iter()
        .copied()
        .filter(|i| !cert.predicted_spill.contains(i))
        .collect();

    let rerun = kmeans(&perturbed, seed, 200)?;
    // Align the re-run's labels with the original source/opposing roles.
    let source_label_votes = source_members
        .iter()
        .filter(|&&i| rerun.assignment.label(i) == 0)
        .count();
    let source_label: u8 = u8::from(source_label_votes * 2 < source_members.len());
    let converged_spill: Vec<usize> = source_members
        .iter()
        .copied()
        .filter(|&i| rerun.assignment.label(i) != source_label)
        .collect();

    Ok(Theorem1Validation {
        predicted_all_realized: predicted_not_realized.is_empty(),
        one_pass_spill,
        predicted_not_realized,
        unpredicted_realized,
        converged_spill,
    })
}

/// The attacker's metric knowledge model: only Euclidean is supported as the
/// underlying true metric.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrueMetric {
    #[default]
    Euclidean,
}

/// Noise envelope for the attacker's metric: every entry of the noisy table
/// stays within [max(0, d - zeta), d + zeta] of the true distance d.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoisyMetricConfig {
    pub zeta: f64,
    pub noise_seed: u64,
    pub true_metric: TrueMetric,
}

impl NoisyMetricConfig {
    pub fn new(zeta: f64, noise_seed: u64) -> Result<Self> {
        if !(zeta >= 0.0 && zeta.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "zeta {zeta} must be finite and >= 0"
            )));
        }
        Ok(Self {
            zeta,
            noise_seed,
            true_metric: TrueMetric::Euclidean,
        })
    }
}

/// A symmetric pairwise distance table with zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricTable {
    n: usize,
    values: Vec<f64>,
}

impl MetricTable {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    fn set_symmetric(&mut self, i: usize, j: usize, v: f64) {
        self.values[i * self.n + j] = v;
        self.values[j * self.n + i] = v;
    }

    /// Replaces the row and column of `index` with those of `source`,
    /// modelling a point whose value now coincides with `source`'s.
    pub fn with_point_replaced(&self, index: usize, source: usize) -> Self {
        let mut out = self.clone();
        for v in 0..self.n {
            let d = if v == index { 0.0 } else { self.get(source, v) };
            out.set_symmetric(index, v, d);
        }
        out.values[index * self.n + index] = 0.0;
        out
    }
}

/// Pairwise Euclidean distances of a dataset.
pub fn euclidean_table(data: &Dataset) -> MetricTable {
    let n = data.n();
    let mut table = MetricTable {
        n,
        values: vec![0.0; n * n],
    };
    for i in 0..n {
        for j in (i + 1)..n {
            let d = sq_dist(data.row(i), data.row(j)).sqrt();
            table.set_symmetric(i, j, d);
        }
    }
    table
}

/// Generates a noisy metric table: uniform symmetric noise on [-zeta, zeta]
/// added to the Euclidean distance, clamped into the envelope
/// [max(0, d - zeta), d + zeta]. Deterministic per noise seed.
pub fn noisy_metric(data: &Dataset, config: &NoisyMetricConfig) -> Result<MetricTable> {
    if !(config.zeta >= 0.0 && config.zeta.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "zeta {} must be finite and >= 0",
            config.zeta
        )));
    }
    let mut table = euclidean_table(data);
    if config.zeta == 0.0 {
        return Ok(table);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.noise_seed);
    let n = table.n();
    for i in 0..n {
        for j in (i + 1)..n {
            let d = table.get(i, j);
            let eta = rng.random_range(-config.zeta..=config.zeta);
            let noisy = (d + eta).clamp((d - config.zeta).max(0.0), d + config.zeta);
            table.set_symmetric(i, j, noisy);
        }
    }
    Ok(table)
}

/// 2-medoid clustering over a metric table: centers are data points
/// minimizing within-cluster distance sums; assignment is nearest center.
/// Seeded initialization, deterministic tie-breaks.
fn two_medoids(table: &MetricTable, seed: u64) -> Result<(Vec<u8>, [usize; 2])> {
    let n = table.n();
    if n < 2 {
        return Err(Error::TooFewSamples { needed: 2, got: n });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m0 = rng.random_range(0..n);
    let m1 = (0..n)
        .max_by(|&a, &b| {
            table
                .get(a, m0)
                .partial_cmp(&table.get(b, m0))
                .unwrap()
                .then(b.cmp(&a))
        })
        .expect("non-empty table");
    if table.get(m0, m1) == 0.0 {
        return Err(Error::DegenerateClusters(
            "all pairwise distances are zero".into(),
        ));
    }

    let mut medoids = [m0, m1];
    let mut labels = vec![0u8; n];
    for _ in 0..100 {
        for (v, label) in labels.iter_mut().enumerate() {
            *label = u8::from(table.get(v, medoids[1]) < table.get(v, medoids[0]));
        }
        let mut changed = false;
        for c in 0..2u8 {
            let members: Vec<usize> = (0..n).filter(|&v| labels[v] == c).collect();
            if members.is_empty() {
                return Err(Error::DegenerateClusters(format!(
                    "medoid cluster {c} emptied during iteration"
                )));
            }
            let new_medoid = *members
                .iter()
                .min_by(|&&a, &&b| {
                    let cost_a: f64 = members.iter().map(|&u| table.get(a, u)).sum();
                    let cost_b: f64 = members.iter().map(|&u| table.get(b, u)).sum();
                    cost_a.partial_cmp(&cost_b).unwrap().then(a.cmp(&b))
                })
                .expect("non-empty members");
            if new_medoid != medoids[c as usize] {
                medoids[c as usize] = new_medoid;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    for (v, label) in labels.iter_mut().enumerate() {
        *label = u8::from(table.get(v, medoids[1]) < table.get(v, medoids[0]));
    }
    Ok((labels, medoids))
}

/// Per-point outcome of the noisy-metric spill experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpillPersistence {
    pub index: usize,
    /// Did the point also flip under the true metric's one-pass update?
    pub persisted: bool,
    /// d(y, c2-after) - d(y, c1-after) under the true metric; negative means
    /// the point sits on the spilled side.
    pub true_margin: f64,
    /// The theorem's lower bound -gamma - 2 zeta.
    pub lower_bound: f64,
    /// true_margin > lower_bound, the derivation-chain consequence.
    pub inequality_holds: bool,
}

/// Results of one noisy-metric attack replay.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Theorem2Report {
    pub zeta: f64,
    /// d'(c1-after', c1') + d'(c1-after', c1-after) + d'(c2-after, c2').
    pub gamma: f64,
    pub target_index: usize,
    /// Points that spilled under the noisy metric.
    pub spilled_noisy: Vec<usize>,
    /// Points that spilled under the true metric.
    pub spilled_true: Vec<usize>,
    pub persistence: Vec<SpillPersistence>,
}

/// One-pass medoid update after the attack: recompute both medoids from the
/// post-attack compositions, then reassign by nearest medoid. Returns the
/// post-attack medoids and the set of pre-attack source members (target
/// excluded) that flipped.
fn one_pass_after_attack(
    table: &MetricTable,
    labels: &[u8],
    target: usize,
) -> Result<([usize; 2], Vec<usize>)> {
    let n = table.n();
    let k1_rest: Vec<usize> = (0..n)
        .filter(|&v| labels[v] == 0 && v != target)
        .collect();
    let mut k2_plus: Vec<usize> = (0..n).filter(|&v| labels[v] == 1).collect();
    k2_plus.push(target);
    k2_plus.sort_unstable();
    if k1_rest.is_empty() {
        return Err(Error::DegenerateClusters(
            "source cluster is empty after removing the target".into(),
        ));
    }

    let medoid_of = |members: &[usize]| -> usize {
        *members
            .iter()
            .min_by(|&&a, &&b| {
                let cost_a: f64 = members.iter().map(|&u| table.get(a, u)).sum();
                let cost_b: f64 = members.iter().map(|&u| table.get(b, u)).sum();
                cost_a.partial_cmp(&cost_b).unwrap().then(a.cmp(&b))
            })
            .expect("non-empty members")
    };
    let new_medoids = [medoid_of(&k1_rest), medoid_of(&k2_plus)];

    let spilled: Vec<usize> = k1_rest
        .iter()
        .copied()
        .filter(|&y| table.get(y, new_medoids[1]) < table.get(y, new_medoids[0]))
        .collect();
    Ok((new_medoids, spilled))
}

/// Replays the constructive attack under a noisy metric and checks whether
/// the spill persists under the true metric.
///
/// Both metric sides run the same procedure: 2-medoid clustering, target =
/// the source point nearest the opposing medoid under the noisy metric,
/// target replaced by the opposing medoid's value, then a one-pass medoid
/// update. With zeta = 0 the two sides coincide exactly.
pub fn theorem2_experiment(
    data: &Dataset,
    config: &NoisyMetricConfig,
    seed: u64,
) -> Result<Theorem2Report> {
    let true_table = euclidean_table(data);
    let noisy_table = noisy_metric(data, config)?;

    let (noisy_labels, noisy_medoids) = two_medoids(&noisy_table, seed)?;
    let (true_labels_raw, _) = two_medoids(&true_table, seed)?;

    // Align the true clustering's labels with the noisy clustering's roles.
    let agree = noisy_labels
        .iter()
        .zip(&true_labels_raw)
        .filter(|(a, b)| a == b)
        .count();
    let true_labels: Vec<u8> = if data.n() - agree > agree {
        true_labels_raw.iter().map(|&l| 1 - l).collect()
    } else {
        true_labels_raw
    };

    // Attacker picks the source point nearest the opposing medoid under the
    // noisy metric and moves it onto that medoid's value.
    let c1_noisy = noisy_medoids[0];
    let c2_noisy = noisy_medoids[1];
    let target = (0..data.n())
        .filter(|&v| noisy_labels[v] == 0)
        .min_by(|&a, &b| {
            noisy_table
                .get(a, c2_noisy)
                .partial_cmp(&noisy_table.get(b, c2_noisy))
                .unwrap()
                .then(a.cmp(&b))
        })
        .ok_or_else(|| Error::DegenerateClusters("noisy source cluster is empty".into()))?;

    let noisy_after = noisy_table.with_point_replaced(target, c2_noisy);
    let true_after = true_table.with_point_replaced(target, c2_noisy);

    let (noisy_new_medoids, spilled_noisy) = one_pass_after_attack(&noisy_after, &noisy_labels, target)?;
    let (true_new_medoids, spilled_true) = one_pass_after_attack(&true_after, &true_labels, target)?;

    // gamma sums noisy distances between pre/post-attack centers:
    // d'(c1_after', c1') + d'(c1_after', c1_after) + d'(c2_after, c2').
    let gamma = noisy_after.get(noisy_new_medoids[0], c1_noisy)
        + noisy_after.get(noisy_new_medoids[0], true_new_medoids[0])
        + noisy_after.get(true_new_medoids[1], c2_noisy);

    let lower_bound = -gamma - 2.0 * config.zeta;
    let persistence: Vec<SpillPersistence> = spilled_noisy
        .iter()
        .map(|&y| {
            let true_margin =
                true_after.get(y, true_new_medoids[1]) - true_after.get(y, true_new_medoids[0]);
            SpillPersistence {
                index: y,
                persisted: spilled_true.contains(&y),
                true_margin,
                lower_bound,
                inequality_holds: true_margin > lower_bound,
            }
        })
        .collect();

    Ok(Theorem2Report {
        zeta: config.zeta,
        gamma,
        target_index: target,
        spilled_noisy,
        spilled_true,
        persistence,
    })
}
