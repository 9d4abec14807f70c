use super::{distance, KMeansModel};
use crate::error::{Error, Result};

/// Davies–Bouldin index: mean over clusters of the worst `(s_i + s_j) / d_ij`,
/// where `s_i` is the mean point-to-centroid distance in cluster `i` and `d_ij`
/// the distance between centroids. Lower is better.
pub fn davies_bouldin(model: &KMeansModel, points: &[Vec<f64>]) -> Result<f64> {
    let k = model.k;
    if k < 2 {
        return Err(Error::arg(format!("Davies-Bouldin needs k >= 2, got {k}")));
    }
    if model.assignment.len() != points.len() {
        return Err(Error::arg("assignment length does not match point count"));
    }
    let mut spread = vec![0.0; k];
    let mut sizes = vec![0usize; k];
    for (p, &c) in points.iter().zip(&model.assignment) {
        spread[c] += distance(p, &model.centroids[c]);
        sizes[c] += 1;
    }
    if let Some(empty) = sizes.iter().position(|&n| n == 0) {
        return Err(Error::arg(format!("cluster {empty} is empty")));
    }
    for (s, &n) in spread.iter_mut().zip(&sizes) {
        *s /= n as f64;
    }

    let mut total = 0.0;
    for i in 0..k {
        let mut worst = 0.0f64;
        for j in (0..k).filter(|&j| j != i) {
            let d = distance(&model.centroids[i], &model.centroids[j]);
            let num = spread[i] + spread[j];
            let ratio = if d > 0.0 {
                num / d
            } else if num == 0.0 {
                0.0
            } else {
                return Err(Error::Degenerate(format!(
                    "clusters {i} and {j} share a centroid"
                )));
            };
            worst = worst.max(ratio);
        }
        total += worst;
    }
    Ok(total / k as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SimRng;
    use rand::{Rng, SeedableRng};

    fn model(centroids: Vec<Vec<f64>>, assignment: Vec<usize>) -> KMeansModel {
        KMeansModel {
            k: centroids.len(),
            centroids,
            assignment,
            inertia: 0.0,
            iterations_run: 0,
            inertia_trace: vec![],
        }
    }

    #[test]
    fn singletons_score_zero() {
        let pts = vec![vec![0.0], vec![1.0]];
        let m = model(pts.clone(), vec![0, 1]);
        assert_eq!(davies_bouldin(&m, &pts).unwrap(), 0.0);
    }

    #[test]
    fn hand_computed_two_clusters() {
        let pts = vec![
            vec![0.0, 0.0],
            vec![0.0, 2.0],
            vec![10.0, 0.0],
            vec![10.0, 2.0],
        ];
        let m = model(vec![vec![0.0, 1.0], vec![10.0, 1.0]], vec![0, 0, 1, 1]);
        assert!((davies_bouldin(&m, &pts).unwrap() - 0.2).abs() < 1e-15);
    }

    #[test]
    fn rejects_k1_and_empty_clusters() {
        let pts = vec![vec![0.0], vec![1.0]];
        assert!(davies_bouldin(&model(vec![vec![0.5]], vec![0, 0]), &pts).is_err());
        assert!(davies_bouldin(&model(vec![vec![0.5], vec![3.0]], vec![0, 0]), &pts).is_err());
    }

    // Independent reference: centroids recomputed from the assignment, every
    // pairwise ratio listed explicitly.
    fn reference_dbi(points: &[Vec<f64>], assignment: &[usize], k: usize) -> f64 {
        let members: Vec<Vec<&Vec<f64>>> = (0..k)
            .map(|c| {
                points
                    .iter()
                    .zip(assignment)
                    .filter(|(_, &a)| a == c)
                    .map(|(p, _)| p)
                    .collect()
            })
            .collect();
        let dim = points[0].len();
        let centroid = |c: usize| -> Vec<f64> {
            (0..dim)
                .map(|d| members[c].iter().map(|p| p[d]).sum::<f64>() / members[c].len() as f64)
                .collect()
        };
        let euclid = |a: &[f64], b: &[f64]| -> f64 {
            a.iter()
                .zip(b)
                .map(|(x, y)| (x - y).powi(2))
                .sum::<f64>()
                .sqrt()
        };
        let cents: Vec<Vec<f64>> = (0..k).map(centroid).collect();
        let s: Vec<f64> = (0..k)
            .map(|c| {
                members[c].iter().map(|p| euclid(p, &cents[c])).sum::<f64>()
                    / members[c].len() as f64
            })
            .collect();
        let mut acc = 0.0;
        for i in 0..k {
            let ratios: Vec<f64> = (0..k)
                .filter(|&j| j != i)
                .map(|j| (s[i] + s[j]) / euclid(&cents[i], &cents[j]))
                .collect();
            acc += ratios.into_iter().fold(f64::MIN, f64::max);
        }
        acc / k as f64
    }

    #[test]
    fn matches_reference_on_random_sets() {
        let mut rng = SimRng::seed_from_u64(40);
        for _ in 0..20 {
            let k = rng.random_range(2..6);
            let pts: Vec<Vec<f64>> = (0..40)
                .map(|_| (0..3).map(|_| rng.random_range(-5.0..5.0)).collect())
                .collect();
            let assignment: Vec<usize> = (0..40).map(|i| i % k).collect();
            let dim = 3;
            let cents: Vec<Vec<f64>> = (0..k)
                .map(|c| {
                    let rows: Vec<&Vec<f64>> = pts
                        .iter()
                        .zip(&assignment)
                        .filter(|(_, &a)| a == c)
                        .map(|(p, _)| p)
                        .collect();
                    (0..dim)
                        .map(|d| rows.iter().map(|p| p[d]).sum::<f64>() / rows.len() as f64)
                        .collect()
                })
                .collect();
            let got = davies_bouldin(&model(cents, assignment.clone()), &pts).unwrap();
            let want = reference_dbi(&pts, &assignment, k);
            assert!((got - want).abs() <= 1e-9, "{got} vs {want}");
        }
    }

    #[test]
    fn invariant_under_uniform_scaling() {
        let pts = vec![
            vec![0.0, 0.0],
            vec![1.0, 2.0],
            vec![7.0, 1.0],
            vec![8.0, 3.0],
            vec![3.0, 9.0],
        ];
        let m = model(
            vec![vec![0.5, 1.0], vec![7.5, 2.0], vec![3.0, 9.0]],
            vec![0, 0, 1, 1, 2],
        );
        let base = davies_bouldin(&m, &pts).unwrap();
        for c in [0.01, 3.0, 1e4] {
            let scaled: Vec<Vec<f64>> = pts
                .iter()
                .map(|p| p.iter().map(|v| v * c).collect())
                .collect();
            let mut sm = m.clone();
            sm.centroids
                .iter_mut()
                .for_each(|q| q.iter_mut().for_each(|v| *v *= c));
            let got = davies_bouldin(&sm, &scaled).unwrap();
            assert!((got - base).abs() <= 1e-12 * base.max(1.0));
        }
    }
}
