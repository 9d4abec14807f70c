//! Grouping parties by the similarity of their label distributions.
//!
//! k-means (with k-means++ seeding) is run for a range of k; the Davies–Bouldin
//! index curve picks the cluster count; [`dunn_oracle`] brute-forces the exact
//! subset objective for tiny inputs so the heuristic can be checked against it.

mod ari;
mod dbi;
mod elbow;
mod kmeans;
mod oracle;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use ari::adjusted_rand_index;
pub use dbi::davies_bouldin;
pub use elbow::{elbow_select, ElbowCurve, ElbowMode, ElbowParams};
pub use kmeans::{kmeans, kmeans_pp_init, lloyd, KMeansModel, KMeansParams};
pub use oracle::{
    dunn_objective, dunn_oracle, partition_from_assignment, DunnOracleScore, ORACLE_MAX_POINTS,
};

/// Per-party label counts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelDistribution {
    pub party_id: usize,
    pub counts: Vec<u64>,
}

impl LabelDistribution {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// L1-normalised counts. All-zero counts map to the zero vector.
    pub fn frequencies(&self) -> Vec<f64> {
        let total = self.total();
        if total == 0 {
            return vec![0.0; self.counts.len()];
        }
        self.counts
            .iter()
            .map(|&c| c as f64 / total as f64)
            .collect()
    }
}

/// Coordinates in which label distributions are compared.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistanceSpace {
    /// Label frequencies (counts divided by the party's sample count).
    #[default]
    Frequency,
    /// Raw label counts.
    RawCounts,
}

/// Turns label distributions into clustering points.
pub fn prepare_points(lds: &[LabelDistribution], space: DistanceSpace) -> Result<Vec<Vec<f64>>> {
    let Some(first) = lds.first() else {
        return Err(Error::arg("no label distributions to cluster"));
    };
    let g = first.counts.len();
    if let Some(bad) = lds.iter().find(|ld| ld.counts.len() != g) {
        return Err(Error::arg(format!(
            "party {} has {} labels, expected {g}",
            bad.party_id,
            bad.counts.len()
        )));
    }
    if let Some(bad) = lds.iter().find(|ld| ld.total() == 0) {
        return Err(Error::arg(format!(
            "party {} holds no examples and cannot be clustered",
            bad.party_id
        )));
    }
    Ok(lds
        .iter()
        .map(|ld| match space {
            DistanceSpace::Frequency => ld.frequencies(),
            DistanceSpace::RawCounts => ld.counts.iter().map(|&c| c as f64).collect(),
        })
        .collect())
}

pub(crate) fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub(crate) fn distance(a: &[f64], b: &[f64]) -> f64 {
    squared_distance(a, b).sqrt()
}

/// Number of bitwise-distinct points.
pub(crate) fn distinct_count(points: &[Vec<f64>]) -> usize {
    let mut keys: Vec<Vec<u64>> = points
        .iter()
        .map(|p| p.iter().map(|v| v.to_bits()).collect())
        .collect();
    keys.sort_unstable();
    keys.dedup();
    keys.len()
}

/// Settings for the full "choose k, then cluster" pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterConfig {
    pub space: DistanceSpace,
    pub elbow: ElbowParams,
}

impl Default for ClusterConfig {
    fn default() -> Self {
        Self {
            space: DistanceSpace::Frequency,
            elbow: ElbowParams::default(),
        }
    }
}

/// Outcome of clustering a cohort: the elbow curve, the final model at the
/// chosen k, and the member parties of every cluster.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartyClusters {
    pub curve: ElbowCurve,
    pub model: KMeansModel,
    /// `(cluster_id, member party ids)`, members ascending.
    pub clusters: Vec<(usize, Vec<usize>)>,
}

/// Chooses k with the elbow rule, then keeps the lowest-inertia k-means run
/// among `restarts` seeded attempts at that k.
pub fn optimized_clusters(
    lds: &[LabelDistribution],
    cfg: &ClusterConfig,
    seed: u64,
) -> Result<PartyClusters> {
    let points = prepare_points(lds, cfg.space)?;
    let curve = elbow_select(&points, &cfg.elbow, seed)?;
    let model = elbow::best_of_restarts(&points, curve.chosen_k, &cfg.elbow, seed)?;
    let mut clusters: Vec<(usize, Vec<usize>)> = (0..model.k).map(|c| (c, Vec::new())).collect();
    for (ld, &c) in lds.iter().zip(&model.assignment) {
        clusters[c].1.push(ld.party_id);
    }
    for (_, members) in &mut clusters {
        members.sort_unstable();
    }
    Ok(PartyClusters {
        curve,
        model,
        clusters,
    })
}
