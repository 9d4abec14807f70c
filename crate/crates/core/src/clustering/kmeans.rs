use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{distinct_count, squared_distance};
use crate::error::{Error, Result};
use crate::rng::{self, tag, SimRng};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KMeansParams {
    pub k: usize,
    pub max_iter: usize,
    /// Stop once no centroid moves farther than this (Euclidean).
    pub tol: f64,
}

impl KMeansParams {
    pub fn with_k(k: usize) -> Self {
        Self {
            k,
            max_iter: 300,
            tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KMeansModel {
    pub k: usize,
    pub centroids: Vec<Vec<f64>>,
    pub assignment: Vec<usize>,
    /// Sum of squared distances from each point to its assigned centroid.
    pub inertia: f64,
    pub iterations_run: usize,
    /// Inertia after every assignment step, starting with the seeded centroids.
    pub inertia_trace: Vec<f64>,
}

impl KMeansModel {
    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &c in &self.assignment {
            sizes[c] += 1;
        }
        sizes
    }
}

fn check_points(points: &[Vec<f64>], k: usize) -> Result<()> {
    if points.is_empty() {
        return Err(Error::arg("no points to cluster"));
    }
    if k == 0 {
        return Err(Error::arg("k must be at least 1"));
    }
    let dim = points[0].len();
    if points.iter().any(|p| p.len() != dim) {
        return Err(Error::arg("points have inconsistent dimensions"));
    }
    let distinct = distinct_count(points);
    if k > distinct {
        return Err(Error::arg(format!(
            "k = {k} exceeds the {distinct} distinct points"
        )));
    }
    Ok(())
}

pub(crate) fn kmeans_pp_with(
    points: &[Vec<f64>],
    k: usize,
    rng: &mut SimRng,
) -> Result<Vec<Vec<f64>>> {
    check_points(points, k)?;
    let mut centroids = Vec::with_capacity(k);
    centroids.push(points[rng.random_range(0..points.len())].clone());
    let mut nearest: Vec<f64> = points
        .iter()
        .map(|p| squared_distance(p, &centroids[0]))
        .collect();
    while centroids.len() < k {
        // k <= distinct points, so some unchosen point has positive weight
        let dist = WeightedIndex::new(&nearest)
            .map_err(|e| Error::Degenerate(format!("k-means++ weights: {e}")))?;
        let next = points[dist.sample(rng)].clone();
        for (w, p) in nearest.iter_mut().zip(points) {
            *w = w.min(squared_distance(p, &next));
        }
        centroids.push(next);
    }
    Ok(centroids)
}

/// k-means++ seeding: the first centroid is uniform over the points, each later
/// one is drawn with probability proportional to its squared distance to the
/// nearest centroid chosen so far.
pub fn kmeans_pp_init(points: &[Vec<f64>], k: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    let mut rng = rng::stream(seed, &[tag::KMEANS]);
    kmeans_pp_with(points, k, &mut rng)
}

/// Nearest centroid for every point; ties go to the lower cluster index.
fn assign(points: &[Vec<f64>], centroids: &[Vec<f64>]) -> (Vec<usize>, Vec<f64>) {
    points
        .iter()
        .map(|p| {
            let mut best = (0, squared_distance(p, &centroids[0]));
            for (c, centroid) in centroids.iter().enumerate().skip(1) {
                let d = squared_distance(p, centroid);
                if d < best.1 {
                    best = (c, d);
                }
            }
            best
        })
        .unzip()
}

fn update(
    points: &[Vec<f64>],
    assignment: &[usize],
    dists: &[f64],
    previous: &[Vec<f64>],
) -> Vec<Vec<f64>> {
    let k = previous.len();
    let dim = points[0].len();
    let mut sums = vec![vec![0.0; dim]; k];
    let mut counts = vec![0usize; k];
    for (p, &c) in points.iter().zip(assignment) {
        counts[c] += 1;
        for (s, v) in sums[c].iter_mut().zip(p) {
            *s += v;
        }
    }
    for ((sum, &n), prev) in sums.iter_mut().zip(&counts).zip(previous) {
        if n > 0 {
            sum.iter_mut().for_each(|s| *s /= n as f64);
        } else {
            sum.clone_from(prev);
        }
    }

    // Reseed empty clusters at the points farthest from their centroids, taking
    // only from clusters that keep at least one member.
    let empties: Vec<usize> = (0..k).filter(|&c| counts[c] == 0).collect();
    if !empties.is_empty() {
        let mut order: Vec<usize> = (0..points.len()).collect();
        order.sort_by(|&a, &b| dists[b].total_cmp(&dists[a]).then(a.cmp(&b)));
        let mut donors = order.into_iter();
        for c in empties {
            for i in donors.by_ref() {
                let owner = assignment[i];
                if counts[owner] > 1 {
                    counts[owner] -= 1;
                    counts[c] = 1;
                    sums[c] = points[i].clone();
                    break;
                }
            }
        }
    }
    sums
}

/// Lloyd's algorithm from a k-means++ seed.
pub fn kmeans(points: &[Vec<f64>], params: &KMeansParams, seed: u64) -> Result<KMeansModel> {
    let mut rng = rng::stream(seed, &[tag::KMEANS]);
    kmeans_with(points, params, &mut rng)
}

pub(crate) fn kmeans_with(
    points: &[Vec<f64>],
    params: &KMeansParams,
    rng: &mut SimRng,
) -> Result<KMeansModel> {
    let centroids = kmeans_pp_with(points, params.k, rng)?;
    lloyd(points, centroids, params)
}

/// Lloyd iterations from explicit starting centroids.
pub fn lloyd(
    points: &[Vec<f64>],
    mut centroids: Vec<Vec<f64>>,
    params: &KMeansParams,
) -> Result<KMeansModel> {
    if centroids.len() != params.k || centroids.is_empty() {
        return Err(Error::arg(format!(
            "{} starting centroids for k = {}",
            centroids.len(),
            params.k
        )));
    }
    check_points(points, 1)?;
    let (mut assignment, mut dists) = assign(points, &centroids);
    let mut inertia_trace = vec![dists.iter().sum::<f64>()];
    let mut iterations_run = 0;

    while iterations_run < params.max_iter {
        let next = update(points, &assignment, &dists, &centroids);
        let shift = next
            .iter()
            .zip(&centroids)
            .map(|(a, b)| squared_distance(a, b))
            .fold(0.0f64, f64::max)
            .sqrt();
        centroids = next;
        (assignment, dists) = assign(points, &centroids);
        inertia_trace.push(dists.iter().sum());
        iterations_run += 1;
        if shift < params.tol {
            break;
        }
    }

    Ok(KMeansModel {
        k: params.k,
        inertia: *inertia_trace.last().expect("trace starts non-empty"),
        centroids,
        assignment,
        iterations_run,
        inertia_trace,
    })
}
