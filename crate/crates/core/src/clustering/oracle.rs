//! Exhaustive minimiser of the subset-similarity objective
//!
//! ```text
//! (1/k) * sum_{i != j} (Δ(L_i) + Δ(L_j)) / δ(L_i, L_j)
//! ```
//!
//! where `Δ` is the mean pairwise distance inside a subset and `δ` the mean
//! distance across two subsets. The search is exponential and exists only to
//! check k-means on tiny inputs.

use serde::{Deserialize, Serialize};

use super::distance;
use crate::error::{Error, Result};

pub const ORACLE_MAX_POINTS: usize = 12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DunnOracleScore {
    /// Disjoint, non-empty subsets covering every point index.
    pub partition: Vec<Vec<usize>>,
    pub score: f64,
}

fn within(points: &[Vec<f64>], set: &[usize]) -> f64 {
    if set.len() < 2 {
        return 0.0;
    }
    let mut total = 0.0;
    let mut pairs = 0usize;
    for (a, &i) in set.iter().enumerate() {
        for &j in &set[a + 1..] {
            total += distance(&points[i], &points[j]);
            pairs += 1;
        }
    }
    total / pairs as f64
}

fn between(points: &[Vec<f64>], a: &[usize], b: &[usize]) -> f64 {
    let mut total = 0.0;
    for &i in a {
        for &j in b {
            total += distance(&points[i], &points[j]);
        }
    }
    total / (a.len() * b.len()) as f64
}

/// Objective value of an explicit partition. Subsets at zero mutual distance
/// score infinity unless both are also internally degenerate.
pub fn dunn_objective(points: &[Vec<f64>], partition: &[Vec<usize>]) -> f64 {
    let k = partition.len();
    let spread: Vec<f64> = partition.iter().map(|s| within(points, s)).collect();
    let mut total = 0.0;
    for i in 0..k {
        for j in (0..k).filter(|&j| j != i) {
            let num = spread[i] + spread[j];
            let den = between(points, &partition[i], &partition[j]);
            total += if den > 0.0 {
                num / den
            } else if num == 0.0 {
                0.0
            } else {
                f64::INFINITY
            };
        }
    }
    total / k as f64
}

/// Groups per-point cluster labels into index subsets (labels compacted to
/// `0..k` in order of first appearance).
pub fn partition_from_assignment(assignment: &[usize]) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = Vec::new();
    let mut parts: Vec<Vec<usize>> = Vec::new();
    for (i, &c) in assignment.iter().enumerate() {
        match order.iter().position(|&x| x == c) {
            Some(p) => parts[p].push(i),
            None => {
                order.push(c);
                parts.push(vec![i]);
            }
        }
    }
    parts
}

/// Visits every partition of `n` items into exactly `k` blocks, encoded as a
/// restricted growth string.
fn for_each_partition(n: usize, k: usize, visit: &mut impl FnMut(&[usize])) {
    fn rec(
        pos: usize,
        used: usize,
        n: usize,
        k: usize,
        labels: &mut Vec<usize>,
        visit: &mut impl FnMut(&[usize]),
    ) {
        if pos == n {
            if used == k {
                visit(labels);
            }
            return;
        }
        // not enough items left to open the remaining blocks
        if k - used > n - pos {
            return;
        }
        for b in 0..used.min(k) {
            labels[pos] = b;
            rec(pos + 1, used, n, k, labels, visit);
        }
        if used < k {
            labels[pos] = used;
            rec(pos + 1, used + 1, n, k, labels, visit);
        }
    }
    let mut labels = vec![0; n];
    rec(0, 0, n, k, &mut labels, visit);
}

/// Best k-partition of `points` under [`dunn_objective`], by exhaustive search.
pub fn dunn_oracle(points: &[Vec<f64>], k: usize) -> Result<DunnOracleScore> {
    let n = points.len();
    if n > ORACLE_MAX_POINTS {
        return Err(Error::TooLarge(format!(
            "{n} points (limit {ORACLE_MAX_POINTS})"
        )));
    }
    if k == 0 || k > n {
        return Err(Error::arg(format!("k = {k} invalid for {n} points")));
    }
    let mut best: Option<(f64, Vec<usize>)> = None;
    for_each_partition(n, k, &mut |labels| {
        let score = dunn_objective(points, &partition_from_assignment(labels));
        if best.as_ref().is_none_or(|(s, _)| score < *s) {
            best = Some((score, labels.to_vec()));
        }
    });
    let (score, labels) = best.expect("k <= n admits at least one partition");
    Ok(DunnOracleScore {
        partition: partition_from_assignment(&labels),
        score,
    })
}
