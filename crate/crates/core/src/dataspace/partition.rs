use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use super::{label_distribution, Dataset, PartitionPlan, PartyShard};
use crate::clustering::LabelDistribution;
use crate::error::{Error, Result};
use crate::rng::{self, tag, SimRng};

/// Holds out `test_fraction` of every label (rounded, at least one row when the
/// label has two or more rows) and returns `(train_rows, test_rows)`, both sorted.
pub fn stratified_split(
    ds: &Dataset,
    test_fraction: f64,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(0.0..1.0).contains(&test_fraction) {
        return Err(Error::arg(format!(
            "test fraction must lie in [0, 1), got {test_fraction}"
        )));
    }
    let all: Vec<usize> = (0..ds.len()).collect();
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (label, mut rows) in ds.rows_by_label(&all).into_iter().enumerate() {
        let mut rng = rng::stream(seed, &[tag::SPLIT, label as u64]);
        rows.shuffle(&mut rng);
        let mut n_test = (test_fraction * rows.len() as f64).round() as usize;
        if test_fraction > 0.0 && n_test == 0 && rows.len() >= 2 {
            n_test = 1;
        }
        test.extend_from_slice(&rows[..n_test]);
        train.extend_from_slice(&rows[n_test..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

fn sample_dirichlet(alpha: f64, n: usize, rng: &mut SimRng) -> Result<Vec<f64>> {
    if n == 1 {
        return Ok(vec![1.0]);
    }
    let gamma = Gamma::new(alpha, 1.0).map_err(|e| Error::arg(format!("alpha {alpha}: {e}")))?;
    let mut p: Vec<f64> = (0..n).map(|_| gamma.sample(rng)).collect();
    let total: f64 = p.iter().sum();
    if total > 0.0 && total.is_finite() {
        p.iter_mut().for_each(|v| *v /= total);
    } else {
        // every draw underflowed; the alpha -> 0 limit is a vertex of the simplex
        p.iter_mut().for_each(|v| *v = 0.0);
        p[rng.random_range(0..n)] = 1.0;
    }
    Ok(p)
}

/// Largest-remainder rounding of `total * proportions` to integers summing to
/// `total`. Ties on the fractional part go to the lower index.
pub(crate) fn largest_remainder(proportions: &[f64], total: usize) -> Vec<usize> {
    let quotas: Vec<f64> = proportions.iter().map(|p| p * total as f64).collect();
    let mut counts: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..proportions.len()).collect();
    order.sort_by(|&a, &b| {
        let fa = quotas[a] - quotas[a].floor();
        let fb = quotas[b] - quotas[b].floor();
        fb.total_cmp(&fa).then(a.cmp(&b))
    });
    let mut remaining = total.saturating_sub(assigned);
    for &i in order.iter().cycle() {
        if remaining == 0 {
            break;
        }
        counts[i] += 1;
        remaining -= 1;
    }
    counts
}

/// Splits `rows` of `ds` across `num_parties` parties. For each label a
/// Dirichlet(alpha) vector over parties is drawn and realised by
/// largest-remainder rounding; the label's rows are shuffled and dealt out in
/// contiguous runs.
pub fn dirichlet_partition_rows(
    ds: &Dataset,
    rows: &[usize],
    alpha: f64,
    num_parties: usize,
    seed: u64,
) -> Result<(PartitionPlan, Vec<PartyShard>)> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::arg(format!("alpha must be positive, got {alpha}")));
    }
    if num_parties == 0 {
        return Err(Error::arg("num_parties must be at least 1"));
    }
    if let Some(&bad) = rows.iter().find(|&&r| r >= ds.len()) {
        return Err(Error::arg(format!("row {bad} out of range")));
    }

    let groups = ds.rows_by_label(rows);
    let mut shards: Vec<PartyShard> = (0..num_parties)
        .map(|party_id| PartyShard {
            party_id,
            example_indices: Vec::new(),
        })
        .collect();
    let mut proportions = Vec::with_capacity(groups.len());

    for (label, mut label_rows) in groups.into_iter().enumerate() {
        let mut rng = rng::stream(seed, &[tag::PARTITION, label as u64]);
        let p = sample_dirichlet(alpha, num_parties, &mut rng)?;
        let counts = largest_remainder(&p, label_rows.len());
        label_rows.shuffle(&mut rng);
        let mut cursor = 0;
        for (shard, &c) in shards.iter_mut().zip(&counts) {
            shard
                .example_indices
                .extend_from_slice(&label_rows[cursor..cursor + c]);
            cursor += c;
        }
        proportions.push(p);
    }
    for shard in &mut shards {
        shard.example_indices.sort_unstable();
    }

    let plan = PartitionPlan {
        alpha,
        num_parties,
        proportions,
        seed,
    };
    Ok((plan, shards))
}

/// Splits every row of `ds` across parties. See [`dirichlet_partition_rows`].
pub fn dirichlet_partition(
    ds: &Dataset,
    alpha: f64,
    num_parties: usize,
    seed: u64,
) -> Result<(PartitionPlan, Vec<PartyShard>)> {
    let rows: Vec<usize> = (0..ds.len()).collect();
    dirichlet_partition_rows(ds, &rows, alpha, num_parties, seed)
}

/// Cohort construction parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortSpec {
    pub alpha: f64,
    pub num_parties: usize,
    #[serde(default = "default_test_fraction")]
    pub test_fraction: f64,
}

fn default_test_fraction() -> f64 {
    0.1
}

/// A dataset split into a global test set held by the aggregator and one
/// training shard per party.
#[derive(Debug, Clone)]
pub struct Cohort {
    pub dataset: Dataset,
    pub plan: PartitionPlan,
    pub shards: Vec<PartyShard>,
    pub test_rows: Vec<usize>,
}

impl Cohort {
    pub fn build(dataset: Dataset, spec: &CohortSpec, seed: u64) -> Result<Self> {
        let (train, test_rows) = stratified_split(&dataset, spec.test_fraction, seed)?;
        let (plan, shards) =
            dirichlet_partition_rows(&dataset, &train, spec.alpha, spec.num_parties, seed)?;
        Ok(Self {
            dataset,
            plan,
            shards,
            test_rows,
        })
    }

    /// Parties holding at least one training row, ascending.
    pub fn eligible_parties(&self) -> Vec<usize> {
        self.shards
            .iter()
            .filter(|s| !s.is_empty())
            .map(|s| s.party_id)
            .collect()
    }

    pub fn shard(&self, party_id: usize) -> &PartyShard {
        &self.shards[party_id]
    }

    /// Label distributions of the eligible parties, in party order.
    pub fn label_distributions(&self) -> Vec<LabelDistribution> {
        self.shards
            .iter()
            .filter(|s| !s.is_empty())
            .map(|s| {
                label_distribution(s, &self.dataset).expect("shard rows come from the dataset")
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataspace::Provenance;
    use proptest::prelude::*;

    fn one_label(n: usize) -> Dataset {
        let mut labels = vec![0; n];
        labels[0] = 1;
        Dataset::new(vec![0.0; n], labels, 1, 2, Provenance::Synthetic).unwrap()
    }

    fn multi_label(g: usize, per_label: usize) -> Dataset {
        let labels: Vec<usize> = (0..g).flat_map(|l| vec![l; per_label]).collect();
        let n = labels.len();
        Dataset::new(vec![0.0; n], labels, 1, g, Provenance::Synthetic).unwrap()
    }

    #[test]
    fn largest_remainder_conserves_totals() {
        assert_eq!(largest_remainder(&[0.5, 0.5], 3), vec![2, 1]);
        assert_eq!(largest_remainder(&[0.25; 4], 400), vec![100; 4]);
        assert_eq!(
            largest_remainder(&[0.1, 0.3, 0.6], 7).iter().sum::<usize>(),
            7
        );
        assert_eq!(largest_remainder(&[1.0], 5), vec![5]);
    }

    #[test]
    fn huge_alpha_is_nearly_uniform() {
        // 400 rows of label 0 (plus one of label 1), 20 seeds
        let ds = one_label(401);
        for seed in 0..20 {
            let (_, shards) = dirichlet_partition(&ds, 1e6, 4, seed).unwrap();
            for s in &shards {
                let zeros = s
                    .example_indices
                    .iter()
                    .filter(|&&r| ds.label(r) == 0)
                    .count();
                assert!((98..=102).contains(&zeros), "seed {seed}: {zeros}");
            }
        }
    }

    #[test]
    fn single_party_gets_everything() {
        let ds = multi_label(3, 10);
        for alpha in [0.01, 1.0, 100.0] {
            let (plan, shards) = dirichlet_partition(&ds, alpha, 1, 3).unwrap();
            assert_eq!(shards.len(), 1);
            assert_eq!(shards[0].example_indices, (0..30).collect::<Vec<_>>());
            assert!(plan.proportions.iter().all(|p| p == &vec![1.0]));
        }
    }

    #[test]
    fn small_alpha_concentrates_mass() {
        let ds = multi_label(10, 200);
        let mut concentrated = 0;
        let mut total = 0;
        for seed in 0..10 {
            let (_, shards) = dirichlet_partition(&ds, 0.3, 100, seed).unwrap();
            for s in shards.iter().filter(|s| !s.is_empty()) {
                let mut h = ds.label_histogram(&s.example_indices);
                h.sort_unstable_by(|a, b| b.cmp(a));
                let top3: u64 = h[..3].iter().sum();
                if top3 as f64 >= 0.8 * s.num_samples() as f64 {
                    concentrated += 1;
                }
                total += 1;
            }
        }
        assert!(concentrated * 2 > total, "{concentrated}/{total}");
    }

    #[test]
    fn rejects_bad_alpha() {
        let ds = multi_label(2, 5);
        assert!(dirichlet_partition(&ds, 0.0, 2, 0).is_err());
        assert!(dirichlet_partition(&ds, -1.0, 2, 0).is_err());
        assert!(dirichlet_partition(&ds, 1.0, 0, 0).is_err());
    }

    #[test]
    fn plan_rows_sum_to_one() {
        let ds = multi_label(5, 20);
        let (plan, _) = dirichlet_partition(&ds, 0.5, 7, 11).unwrap();
        for row in &plan.proportions {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            assert!(row.iter().all(|&p| p >= 0.0));
        }
    }

    #[test]
    fn split_is_stratified() {
        let ds = multi_label(4, 50);
        let (train, test) = stratified_split(&ds, 0.1, 5).unwrap();
        assert_eq!(ds.label_histogram(&test), vec![5; 4]);
        assert_eq!(train.len() + test.len(), 200);
    }

    proptest! {
        #[test]
        fn partition_is_complete_and_conserves_labels(
            g in 2usize..6,
            per_label in 1usize..40,
            alpha in 0.05f64..50.0,
            parties in 1usize..15,
            seed in any::<u64>(),
        ) {
            let ds = multi_label(g, per_label);
            let (_, shards) = dirichlet_partition(&ds, alpha, parties, seed).unwrap();
            let mut all: Vec<usize> = shards.iter().flat_map(|s| s.example_indices.clone()).collect();
            all.sort_unstable();
            prop_assert_eq!(all, (0..ds.len()).collect::<Vec<_>>());

            let mut summed = vec![0u64; g];
            for s in &shards {
                for (acc, c) in summed.iter_mut().zip(label_distribution(s, &ds).unwrap().counts) {
                    *acc += c;
                }
            }
            prop_assert_eq!(summed, vec![per_label as u64; g]);

            let (_, again) = dirichlet_partition(&ds, alpha, parties, seed).unwrap();
            prop_assert_eq!(shards, again);
        }
    }
}
