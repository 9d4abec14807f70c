//! Labelled datasets and their non-IID split across parties.

mod idx;
mod partition;
mod synthetic;
mod tabular;

use serde::{Deserialize, Serialize};

use crate::clustering::LabelDistribution;
use crate::error::{Error, Result};

pub use idx::load_idx;
pub use partition::{
    dirichlet_partition, dirichlet_partition_rows, stratified_split, Cohort, CohortSpec,
};
pub use synthetic::{generate_synthetic, SyntheticSpec};
pub use tabular::load_csv;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Synthetic,
    IdxFile,
    CsvFile,
}

/// Dense row-major feature matrix with one label per row.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Vec<f64>,
    labels: Vec<usize>,
    dim: usize,
    num_labels: usize,
    provenance: Provenance,
}

impl Dataset {
    pub fn new(
        features: Vec<f64>,
        labels: Vec<usize>,
        dim: usize,
        num_labels: usize,
        provenance: Provenance,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::arg("feature dimension must be at least 1"));
        }
        if num_labels < 2 {
            return Err(Error::arg(format!(
                "label count must be at least 2, got {num_labels}"
            )));
        }
        if features.len() != labels.len() * dim {
            return Err(Error::arg(format!(
                "{} feature values do not form {} rows of width {dim}",
                features.len(),
                labels.len()
            )));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= num_labels) {
            return Err(Error::arg(format!(
                "label {bad} out of range for {num_labels} labels"
            )));
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(Error::arg("feature values must be finite"));
        }
        Ok(Self {
            features,
            labels,
            dim,
            num_labels,
            provenance,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_labels(&self) -> usize {
        self.num_labels
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn label(&self, row: usize) -> usize {
        self.labels[row]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.features[row * self.dim..(row + 1) * self.dim]
    }

    /// Global label histogram over the given rows.
    pub fn label_histogram(&self, rows: &[usize]) -> Vec<u64> {
        let mut counts = vec![0u64; self.num_labels];
        for &r in rows {
            counts[self.labels[r]] += 1;
        }
        counts
    }

    /// Row indices grouped by label, each group in ascending order.
    pub fn rows_by_label(&self, rows: &[usize]) -> Vec<Vec<usize>> {
        let mut groups = vec![Vec::new(); self.num_labels];
        for &r in rows {
            groups[self.labels[r]].push(r);
        }
        for g in &mut groups {
            g.sort_unstable();
        }
        groups
    }
}

/// Rows owned by one party.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartyShard {
    pub party_id: usize,
    pub example_indices: Vec<usize>,
}

impl PartyShard {
    pub fn num_samples(&self) -> usize {
        self.example_indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.example_indices.is_empty()
    }
}

/// Per-label Dirichlet proportions used to split the training rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionPlan {
    pub alpha: f64,
    pub num_parties: usize,
    /// `proportions[label][party]`; each row sums to one.
    pub proportions: Vec<Vec<f64>>,
    pub seed: u64,
}

/// Counts each label among the shard's rows.
pub fn label_distribution(shard: &PartyShard, ds: &Dataset) -> Result<LabelDistribution> {
    if let Some(&bad) = shard.example_indices.iter().find(|&&r| r >= ds.len()) {
        return Err(Error::arg(format!(
            "party {} references row {bad} but the dataset has {} rows",
            shard.party_id,
            ds.len()
        )));
    }
    Ok(LabelDistribution {
        party_id: shard.party_id,
        counts: ds.label_histogram(&shard.example_indices),
    })
}
