use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{Dataset, Provenance};
use crate::error::{Error, Result};
use crate::rng::{self, tag};

/// Gaussian-blob dataset parameters.
///
/// Each label owns a mean drawn from a standard normal in `dim` dimensions; its
/// examples are isotropic Gaussians around that mean with standard deviation
/// `spread`.
///
/// `imbalance` is the head-to-tail ratio of a geometric long tail: label `l`
/// gets `round(per_label * imbalance^(-l / (g - 1)))` examples, at least one.
/// 1.0 gives balanced labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub num_labels: usize,
    pub dim: usize,
    pub per_label: usize,
    pub spread: f64,
    #[serde(default = "one")]
    pub imbalance: f64,
}

fn one() -> f64 {
    1.0
}

impl SyntheticSpec {
    pub fn balanced(num_labels: usize, dim: usize, per_label: usize, spread: f64) -> Self {
        SyntheticSpec {
            num_labels,
            dim,
            per_label,
            spread,
            imbalance: 1.0,
        }
    }

    /// Example count of each label.
    pub fn label_counts(&self) -> Vec<usize> {
        let g = self.num_labels;
        (0..g)
            .map(|l| {
                let t = if g > 1 {
                    l as f64 / (g - 1) as f64
                } else {
                    0.0
                };
                ((self.per_label as f64 * self.imbalance.powf(-t)).round() as usize).max(1)
            })
            .collect()
    }
}

pub fn generate_synthetic(spec: &SyntheticSpec, seed: u64) -> Result<Dataset> {
    let SyntheticSpec {
        num_labels,
        dim,
        per_label,
        spread,
        imbalance,
    } = *spec;
    if num_labels < 2 || dim == 0 || per_label == 0 {
        return Err(Error::arg(format!(
            "synthetic dataset needs g >= 2, d >= 1, per_label >= 1 (got g={num_labels}, d={dim}, per_label={per_label})"
        )));
    }
    if !(spread > 0.0 && spread.is_finite()) {
        return Err(Error::arg(format!("spread must be positive, got {spread}")));
    }
    if !(imbalance >= 1.0 && imbalance.is_finite()) {
        return Err(Error::arg(format!(
            "imbalance must be >= 1, got {imbalance}"
        )));
    }
    let counts = spec.label_counts();

    let mut rng = rng::stream(seed, &[tag::SYNTHETIC]);
    let means: Vec<Vec<f64>> = (0..num_labels)
        .map(|_| (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect())
        .collect();

    let n: usize = counts.iter().sum();
    let mut features = Vec::with_capacity(n * dim);
    let mut labels = Vec::with_capacity(n);
    for (label, (mean, &count)) in means.iter().zip(&counts).enumerate() {
        for _ in 0..count {
            for &m in mean {
                let z: f64 = StandardNormal.sample(&mut rng);
                features.push(m + spread * z);
            }
            labels.push(label);
        }
    }
    Dataset::new(features, labels, dim, num_labels, Provenance::Synthetic)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(g: usize, d: usize, per_label: usize, spread: f64) -> SyntheticSpec {
        SyntheticSpec::balanced(g, d, per_label, spread)
    }

    #[test]
    fn counts_follow_construction() {
        let ds = generate_synthetic(&spec(2, 2, 5, 0.1), 7).unwrap();
        assert_eq!(ds.len(), 10);
        assert_eq!(ds.label_histogram(&(0..10).collect::<Vec<_>>()), vec![5, 5]);
        assert_eq!(ds.provenance(), Provenance::Synthetic);
    }

    #[test]
    fn same_seed_same_bits() {
        let a = generate_synthetic(&spec(3, 4, 100, 0.2), 1).unwrap();
        let b = generate_synthetic(&spec(3, 4, 100, 0.2), 1).unwrap();
        assert_eq!(a, b);
        let c = generate_synthetic(&spec(3, 4, 100, 0.2), 2).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn rejects_invalid_dimensions() {
        assert!(generate_synthetic(&spec(1, 2, 5, 0.1), 0).is_err());
        assert!(generate_synthetic(&spec(2, 0, 5, 0.1), 0).is_err());
        assert!(generate_synthetic(&spec(2, 2, 0, 0.1), 0).is_err());
        assert!(generate_synthetic(&spec(2, 2, 5, 0.0), 0).is_err());
        let tilted = SyntheticSpec {
            imbalance: 0.5,
            ..spec(2, 2, 5, 0.1)
        };
        assert!(generate_synthetic(&tilted, 0).is_err());
    }

    #[test]
    fn long_tail_counts() {
        let s = SyntheticSpec {
            imbalance: 100.0,
            ..spec(3, 2, 1000, 0.1)
        };
        assert_eq!(s.label_counts(), vec![1000, 100, 10]);
        let ds = generate_synthetic(&s, 3).unwrap();
        assert_eq!(
            ds.label_histogram(&(0..ds.len()).collect::<Vec<_>>()),
            vec![1000, 100, 10]
        );
        let tiny = SyntheticSpec {
            imbalance: 1e9,
            ..spec(2, 2, 3, 0.1)
        };
        assert_eq!(tiny.label_counts(), vec![3, 1]);
    }
}
