//! From-scratch 2-way clustering backends behind a single opaque
//! clustering-function abstraction.
//!
//! Lloyd's K-Means (k-means++ seeding, 10 restarts, deterministic per seed)
//! and Ward's agglomerative clustering (Lance-Williams recurrence, cut at 2).

use std::fmt;
use std::str::FromStr;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::parallel;

const KMEANS_RESTARTS: u64 = 10;

/// Hard 2-way cluster membership: each sample belongs to exactly one of two
/// non-empty clusters.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterAssignment {
    labels: Vec<u8>,
    sizes: [usize; 2],
}

impl ClusterAssignment {
    pub fn from_labels(labels: Vec<u8>) -> Result<Self> {
        let mut sizes = [0usize; 2];
        for (i, &l) in labels.iter().enumerate() {
            if l > 1 {
                return Err(Error::InvalidParameter(format!(
                    "label {l} at sample {i} is not in {{0, 1}}"
                )));
            }
            sizes[l as usize] += 1;
        }
        if sizes[0] == 0 || sizes[1] == 0 {
            return Err(Error::DegenerateClusters(format!(
                "cluster sizes {}/{}; both must be non-empty",
                sizes[0], sizes[1]
            )));
        }
        Ok(Self { labels, sizes })
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn label(&self, sample: usize) -> u8 {
        self.labels[sample]
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn cluster_sizes(&self) -> [usize; 2] {
        self.sizes
    }

    /// Indices of samples in `cluster`.
    pub fn members(&self, cluster: u8) -> Vec<usize> {
        self.labels
            .iter()
            .enumerate()
            .filter(|(_, &l)| l == cluster)
            .map(|(i, _)| i)
            .collect()
    }

    /// The n-by-2 one-hot membership matrix, row-major.
    pub fn membership_matrix(&self) -> Vec<[u8; 2]> {
        self.labels
            .iter()
            .map(|&l| if l == 0 { [1, 0] } else { [0, 1] })
            .collect()
    }

    /// Returns a copy with cluster labels swapped.
    pub fn swapped(&self) -> Self {
        Self {
            labels: self.labels.iter().map(|&l| 1 - l).collect(),
            sizes: [self.sizes[1], self.sizes[0]],
        }
    }

    /// True when both assignments induce the same partition, up to a swap of
    /// cluster labels.
    pub fn same_partition(&self, other: &Self) -> bool {
        self.labels == other.labels || self.labels == other.swapped().labels
    }
}

/// A fitted 2-way clustering: assignment, per-cluster centroids, and the
/// within-cluster sum of squares.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterModel {
    pub assignment: ClusterAssignment,
    pub centroids: [Vec<f64>; 2],
    pub objective: f64,
}

impl ClusterModel {
    /// Rebuilds centroids and objective from an assignment.
    pub fn from_assignment(data: &Dataset, assignment: ClusterAssignment) -> Self {
        let centroids = centroids_of(data, assignment.labels());
        let objective = wcss(data, assignment.labels(), &centroids);
        Self {
            assignment,
            centroids,
            objective,
        }
    }
}

/// Clustering backend selector; the dispatch target of [`cluster`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    KMeans,
    Ward,
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Backend::KMeans => write!(f, "kmeans"),
            Backend::Ward => write!(f, "ward"),
        }
    }
}

impl FromStr for Backend {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "kmeans" => Ok(Backend::KMeans),
            "ward" => Ok(Backend::Ward),
            other => Err(Error::UnknownBackend(other.to_string())),
        }
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn centroids_of(data: &Dataset, labels: &[u8]) -> [Vec<f64>; 2] {
    let m = data.m();
    let mut sums = [vec![0.0; m], vec![0.0; m]];
    let mut counts = [0usize; 2];
    for (i, &l) in labels.iter().enumerate() {
        counts[l as usize] += 1;
        for (j, v) in data.row(i).iter().enumerate() {
            sums[l as usize][j] += v;
        }
    }
    for c in 0..2 {
        if counts[c] > 0 {
            for v in &mut sums[c] {
                *v /= counts[c] as f64;
            }
        }
    }
    sums
}

fn wcss(data: &Dataset, labels: &[u8], centroids: &[Vec<f64>; 2]) -> f64 {
    labels
        .iter()
        .enumerate()
        .map(|(i, &l)| sq_dist(data.row(i), &centroids[l as usize]))
        .sum()
}

/// Assigns each sample to the nearest centroid; ties go to cluster 0.
fn assign(data: &Dataset, centroids: &[Vec<f64>; 2]) -> Vec<u8> {
    (0..data.n())
        .map(|i| {
            let row = data.row(i);
            let d0 = sq_dist(row, &centroids[0]);
            let d1 = sq_dist(row, &centroids[1]);
            u8::from(d1 < d0)
        })
        .collect()
}

/// Moves the point farthest from its own centroid into the empty cluster.
fn repair_empty(data: &Dataset, labels: &mut [u8], empty: u8) {
    let centroids = centroids_of(data, labels);
    let mut best = (f64::NEG_INFINITY, 0usize);
    for (i, &l) in labels.iter().enumerate() {
        let d = sq_dist(data.row(i), &centroids[l as usize]);
        if d > best.0 {
            best = (d, i);
        }
    }
    labels[best.1] = empty;
}

struct LloydOutcome {
    labels: Vec<u8>,
    objective: f64,
    // Per-iteration WCSS; consumed by the monotonicity test.
    #[cfg_attr(not(test), allow(dead_code))]
    objective_history: Vec<f64>,
}

/// One Lloyd run from a k-means++ seeding.
fn lloyd_run(data: &Dataset, seed: u64, max_iter: usize) -> LloydOutcome {
    let n = data.n();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // k-means++ for k=2: uniform first center, D^2-weighted second.
    let first = rng.random_range(0..n);
    let d2: Vec<f64> = (0..n).map(|i| sq_dist(data.row(i), data.row(first))).collect();
    let total: f64 = d2.iter().sum();
    let second = if total > 0.0 {
        let mut r = rng.random::<f64>() * total;
        let mut pick = n - 1;
        for (i, &d) in d2.iter().enumerate() {
            r -= d;
            if r <= 0.0 {
                pick = i;
                break;
            }
        }
        pick
    } else {
        // All points identical; any distinct index works.
        (first + 1) % n
    };

    let mut centroids = [data.row(first).to_vec(), data.row(second).to_vec()];
    let mut labels: Vec<u8> = Vec::new();
    let mut history = Vec::new();

    for _ in 0..max_iter {
        let mut new_labels = assign(data, &centroids);
        let sizes = new_labels.iter().fold([0usize; 2], |mut acc, &l| {
            acc[l as usize] += 1;
            acc
        });
        if sizes[0] == 0 {
            repair_empty(data, &mut new_labels, 0);
        } else if sizes[1] == 0 {
            repair_empty(data, &mut new_labels, 1);
        }
        if new_labels == labels {
            break;
        }
        labels = new_labels;
        centroids = centroids_of(data, &labels);
        history.push(wcss(data, &labels, &centroids));
    }

    let objective = wcss(data, &labels, &centroids);
    LloydOutcome {
        labels,
        objective,
        objective_history: history,
    }
}

fn restart_seed(seed: u64, restart: u64) -> u64 {
    seed.wrapping_add(restart.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Lloyd's K-Means with k-means++ seeding, 10 restarts keeping the lowest
/// objective (ties broken by lowest restart index). Deterministic per seed.
pub fn kmeans(data: &Dataset, seed: u64, max_iter: usize) -> Result<ClusterModel> {
    if data.n() < 2 {
        return Err(Error::TooFewSamples {
            needed: 2,
            got: data.n(),
        });
    }
    let runs = parallel::map_range(KMEANS_RESTARTS as usize, |r| {
        lloyd_run(data, restart_seed(seed, r as u64), max_iter)
    });
    let best = runs
        .into_iter()
        .enumerate()
        .min_by(|(ia, a), (ib, b)| {
            a.objective
                .partial_cmp(&b.objective)
                .unwrap()
                .then(ia.cmp(ib))
        })
        .map(|(_, run)| run)
        .expect("at least one restart");
    let assignment = ClusterAssignment::from_labels(best.labels)?;
    Ok(ClusterModel::from_assignment(data, assignment))
}

/// A recorded agglomerative merge: representative (smallest original index)
/// of each merged cluster, and the Ward cost of the merge.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Merge {
    pub rep_a: usize,
    pub rep_b: usize,
    pub cost: f64,
}

/// Runs the full Ward agglomeration, returning the merge sequence and the
/// 2-cluster member lists at the cut.
pub(crate) fn ward_merges(data: &Dataset) -> (Vec<Merge>, Vec<Vec<usize>>) {
    let n = data.n();
    // cost[i][j]: Ward variance increase of merging clusters i and j.
    // Singleton initial cost is ||xi - xj||^2 / 2.
    let mut cost = vec![vec![0.0f64; n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let c = sq_dist(data.row(i), data.row(j)) / 2.0;
            cost[i][j] = c;
            cost[j][i] = c;
        }
    }
    let mut active: Vec<bool> = vec![true; n];
    let mut size: Vec<usize> = vec![1; n];
    let mut rep: Vec<usize> = (0..n).collect();
    let mut members: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    let mut merges = Vec::with_capacity(n.saturating_sub(2));

    for _ in 0..n.saturating_sub(2) {
        // Lowest cost; ties by lexicographically smallest original-index pair.
        let mut best: Option<(f64, (usize, usize), (usize, usize))> = None;
        for i in 0..n {
            if !active[i] {
                continue;
            }
            for j in (i + 1)..n {
                if !active[j] {
                    continue;
                }
                let key = (rep[i].min(rep[j]), rep[i].max(rep[j]));
                let better = match &best {
                    None => true,
                    Some((c, k, _)) => cost[i][j] < *c || (cost[i][j] == *c && key < *k),
                };
                if better {
                    best = Some((cost[i][j], key, (i, j)));
                }
            }
        }
        let (merge_cost, key, (i, j)) = best.expect("at least two active clusters");
        merges.push(Merge {
            rep_a: key.0,
            rep_b: key.1,
            cost: merge_cost,
        });

        // Lance-Williams update for the Ward criterion.
        let (si, sj) = (size[i] as f64, size[j] as f64);
        for k in 0..n {
            if !active[k] || k == i || k == j {
                continue;
            }
            let sk = size[k] as f64;
            let updated =
                ((si + sk) * cost[i][k] + (sj + sk) * cost[j][k] - sk * merge_cost) / (si + sj + sk);
            cost[i][k] = updated;
            cost[k][i] = updated;
        }
        active[j] = false;
        size[i] += size[j];
        rep[i] = rep[i].min(rep[j]);
        let moved = std::mem::take(&mut members[j]);
        members[i].extend(moved);
    }

    let clusters: Vec<Vec<usize>> = (0..n).filter(|&i| active[i]).map(|i| members[i].clone()).collect();
    (merges, clusters)
}

/// Ward's agglomerative clustering cut at 2 clusters. Fully deterministic;
/// equal-cost merges are resolved by the smallest original-index pair.
pub fn ward(data: &Dataset) -> Result<ClusterModel> {
    if data.n() < 2 {
        return Err(Error::TooFewSamples {
            needed: 2,
            got: data.n(),
        });
    }
    let (_, clusters) = ward_merges(data);
    debug_assert_eq!(clusters.len(), 2);
    // Cluster containing sample 0 gets label 0.
    let zero_first = clusters[0].contains(&0);
    let mut labels = vec![0u8; data.n()];
    for (c, cluster) in clusters.iter().enumerate() {
        let label = if zero_first { c as u8 } else { 1 - c as u8 };
        for &i in cluster {
            labels[i] = label;
        }
    }
    let assignment = ClusterAssignment::from_labels(labels)?;
    Ok(ClusterModel::from_assignment(data, assignment))
}

/// Dispatches to a backend. This is the opaque clustering function handed to
/// the attack: callers may only invoke it and read the result.
pub fn cluster(data: &Dataset, backend: Backend, seed: u64) -> Result<ClusterModel> {
    match backend {
        Backend::KMeans => kmeans(data, seed, 200),
        Backend::Ward => ward(data),
    }
}

/// Packages a backend with a frozen seed as a reusable clustering function,
/// so repeated calls measure data changes rather than initialization noise.
pub fn cluster_fn(backend: Backend, seed: u64) -> impl Fn(&Dataset) -> Result<ClusterModel> + Sync {
    move |data: &Dataset| cluster(data, backend, seed)
}
