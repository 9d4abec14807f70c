use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::kmeans::kmeans_with;
use super::{davies_bouldin, distinct_count, KMeansModel, KMeansParams};
use crate::error::{Error, Result};
use crate::rng::{self, tag};

/// How the elbow is read off the mean-DBI curve.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ElbowMode {
    /// `argmin_k |dbi(k) - dbi(k-1)| / dbi(k-1)`.
    MinRelchange,
    /// First k maximising `|dbi(k) - dbi(k-1)| / dbi(k-1)`: the sharpest slope change.
    #[default]
    MaxRelchange,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ElbowParams {
    pub k_min: usize,
    /// Upper end of the search, clamped to the number of distinct points.
    pub k_max: usize,
    pub restarts: usize,
    pub mode: ElbowMode,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for ElbowParams {
    fn default() -> Self {
        Self {
            k_min: 2,
            k_max: 30,
            restarts: 20,
            mode: ElbowMode::MaxRelchange,
            max_iter: 300,
            tol: 1e-8,
        }
    }
}

impl ElbowParams {
    fn kmeans_params(&self, k: usize) -> KMeansParams {
        KMeansParams {
            k,
            max_iter: self.max_iter,
            tol: self.tol,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElbowCurve {
    pub k_values: Vec<usize>,
    pub mean_dbi: Vec<f64>,
    pub restarts: usize,
    pub mode: ElbowMode,
    pub chosen_k: usize,
}

/// Relative DBI change at each k after the first: `|dbi[i] - dbi[i-1]| / dbi[i-1]`.
pub fn relative_changes(mean_dbi: &[f64]) -> Vec<f64> {
    mean_dbi
        .windows(2)
        .map(|w| {
            let step = (w[1] - w[0]).abs();
            if w[0] > 0.0 {
                step / w[0]
            } else if step == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        })
        .collect()
}

/// Picks k from a scripted or measured curve. Ties go to the smallest k.
pub fn choose_k(k_values: &[usize], mean_dbi: &[f64], mode: ElbowMode) -> Result<usize> {
    if k_values.len() != mean_dbi.len() || k_values.len() < 2 {
        return Err(Error::arg("elbow curve needs at least two matching points"));
    }
    let rel = relative_changes(mean_dbi);
    let mut best = 0;
    for (i, &r) in rel.iter().enumerate().skip(1) {
        let better = match mode {
            ElbowMode::MaxRelchange => r > rel[best],
            ElbowMode::MinRelchange => r < rel[best],
        };
        if better {
            best = i;
        }
    }
    Ok(k_values[best + 1])
}

fn restart_seed(seed: u64, k: usize, restart: usize) -> u64 {
    rng::derive_seed(seed, &[tag::ELBOW, k as u64, restart as u64])
}

fn run_restart(
    points: &[Vec<f64>],
    params: &ElbowParams,
    k: usize,
    restart: usize,
    seed: u64,
) -> Result<KMeansModel> {
    let mut rng = rng::stream(restart_seed(seed, k, restart), &[]);
    kmeans_with(points, &params.kmeans_params(k), &mut rng)
}

/// Mean DBI over `restarts` seeded k-means runs for every k in range, and the
/// elbow k chosen according to `params.mode`.
///
/// Restarts run in parallel; each owns a generator derived from
/// `(seed, k, restart)` so the curve does not depend on scheduling.
pub fn elbow_select(points: &[Vec<f64>], params: &ElbowParams, seed: u64) -> Result<ElbowCurve> {
    if params.restarts == 0 {
        return Err(Error::arg("restarts must be at least 1"));
    }
    if params.k_min < 2 || params.k_min >= params.k_max {
        return Err(Error::arg(format!(
            "need 2 <= k_min < k_max, got {}..{}",
            params.k_min, params.k_max
        )));
    }
    if points.len() < params.k_min + 1 {
        return Err(Error::arg(format!(
            "{} points cannot be searched over k = {}..{}",
            points.len(),
            params.k_min,
            params.k_max
        )));
    }
    let distinct = distinct_count(points);
    if distinct == 1 {
        return Err(Error::Degenerate(
            "all label distributions are identical".into(),
        ));
    }
    let k_max = params.k_max.min(distinct);
    if k_max <= params.k_min {
        return Err(Error::Degenerate(format!(
            "only {distinct} distinct points; cannot search beyond k = {}",
            params.k_min
        )));
    }

    let k_values: Vec<usize> = (params.k_min..=k_max).collect();
    let jobs: Vec<(usize, usize)> = k_values
        .iter()
        .flat_map(|&k| (0..params.restarts).map(move |t| (k, t)))
        .collect();
    let scores: Vec<f64> = jobs
        .par_iter()
        .map(|&(k, t)| {
            let model = run_restart(points, params, k, t, seed)?;
            davies_bouldin(&model, points)
        })
        .collect::<Result<_>>()?;

    let mean_dbi: Vec<f64> = scores
        .chunks(params.restarts)
        .map(|c| c.iter().sum::<f64>() / params.restarts as f64)
        .collect();
    let chosen_k = choose_k(&k_values, &mean_dbi, params.mode)?;
    Ok(ElbowCurve {
        k_values,
        mean_dbi,
        restarts: params.restarts,
        mode: params.mode,
        chosen_k,
    })
}

/// The lowest-inertia model among the restarts at `k` (ties: first restart).
pub(crate) fn best_of_restarts(
    points: &[Vec<f64>],
    k: usize,
    params: &ElbowParams,
    seed: u64,
) -> Result<KMeansModel> {
    let models: Vec<KMeansModel> = (0..params.restarts.max(1))
        .into_par_iter()
        .map(|t| run_restart(points, params, k, t, seed))
        .collect::<Result<_>>()?;
    Ok(models
        .into_iter()
        .reduce(|best, m| if m.inertia < best.inertia { m } else { best })
        .expect("at least one restart"))
}
