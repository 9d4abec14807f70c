//! Balanced accuracy, convergence and communication accounting, round logs.

mod log;

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub use log::{read_round_csv, round_csv_header, write_round_csv, write_round_json, CsvRound};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundReport {
    pub round: usize,
    pub balanced_accuracy: f64,
    /// Per-label accuracy; `None` where the test set has no rows of that label.
    pub per_label_accuracy: Vec<Option<f64>>,
    /// Slate members, ascending.
    pub selected: Vec<usize>,
    /// Slate members that did not return an update, ascending.
    pub stragglers: Vec<usize>,
    pub bytes_up: u64,
    pub bytes_down: u64,
    /// Wall-clock time of the round. Not serialized, so logs stay reproducible.
    #[serde(skip)]
    pub wall_ms: u64,
}

impl RoundReport {
    pub fn responders(&self) -> usize {
        self.selected.len() - self.stragglers.len()
    }
}

/// Mean of the per-label accuracies of labels present in `truth`.
pub fn balanced_accuracy(
    predictions: &[usize],
    truth: &[usize],
    num_labels: usize,
) -> Result<(f64, Vec<Option<f64>>)> {
    if truth.is_empty() {
        return Err(Error::arg("balanced accuracy needs at least one example"));
    }
    if predictions.len() != truth.len() {
        return Err(Error::arg(format!(
            "{} predictions for {} labels",
            predictions.len(),
            truth.len()
        )));
    }
    let mut correct = vec![0u64; num_labels];
    let mut count = vec![0u64; num_labels];
    for (&p, &t) in predictions.iter().zip(truth) {
        if t >= num_labels || p >= num_labels {
            return Err(Error::arg(format!(
                "label out of range for {num_labels} labels"
            )));
        }
        count[t] += 1;
        if p == t {
            correct[t] += 1;
        }
    }
    let per_label: Vec<Option<f64>> = correct
        .iter()
        .zip(&count)
        .map(|(&c, &n)| (n > 0).then(|| c as f64 / n as f64))
        .collect();
    let present: Vec<f64> = per_label.iter().flatten().copied().collect();
    let acc = present.iter().sum::<f64>() / present.len() as f64;
    Ok((acc, per_label))
}

/// First round reaching a target accuracy, or the number of rounds run when it
/// never does (rendered `>R`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RoundsToTarget {
    Reached(usize),
    NotReached { rounds_run: usize },
}

impl RoundsToTarget {
    pub fn reached(self) -> Option<usize> {
        match self {
            RoundsToTarget::Reached(r) => Some(r),
            RoundsToTarget::NotReached { .. } => None,
        }
    }
}

impl fmt::Display for RoundsToTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RoundsToTarget::Reached(r) => write!(f, "{r}"),
            RoundsToTarget::NotReached { rounds_run } => write!(f, ">{rounds_run}"),
        }
    }
}

impl Serialize for RoundsToTarget {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            RoundsToTarget::Reached(r) => s.serialize_u64(*r as u64),
            other => s.serialize_str(&other.to_string()),
        }
    }
}

impl<'de> Deserialize<'de> for RoundsToTarget {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(usize),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(r) => Ok(RoundsToTarget::Reached(r)),
            Raw::Text(t) => t
                .strip_prefix('>')
                .and_then(|n| n.parse().ok())
                .map(|rounds_run| RoundsToTarget::NotReached { rounds_run })
                .ok_or_else(|| serde::de::Error::custom(format!("bad rounds-to-target {t:?}"))),
        }
    }
}

/// First report with `balanced_accuracy >= target`.
pub fn rounds_to_target(reports: &[RoundReport], target: f64) -> RoundsToTarget {
    reports
        .iter()
        .find(|r| r.balanced_accuracy >= target)
        .map(|r| RoundsToTarget::Reached(r.round))
        .unwrap_or(RoundsToTarget::NotReached {
            rounds_run: reports.len(),
        })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommunicationCost {
    /// `(bytes_up, bytes_down)` per round.
    pub per_round: Vec<(u64, u64)>,
    pub total_up: u64,
    pub total_down: u64,
}

impl CommunicationCost {
    pub fn total(&self) -> u64 {
        self.total_up + self.total_down
    }
}

/// Downlink is one model per slate member, uplink one per responder.
pub fn communication_cost(reports: &[RoundReport], model_bytes: u64) -> Result<CommunicationCost> {
    if model_bytes == 0 {
        return Err(Error::arg("model_bytes must be positive"));
    }
    let per_round: Vec<(u64, u64)> = reports
        .iter()
        .map(|r| {
            (
                r.responders() as u64 * model_bytes,
                r.selected.len() as u64 * model_bytes,
            )
        })
        .collect();
    Ok(CommunicationCost {
        total_up: per_round.iter().map(|&(u, _)| u).sum(),
        total_down: per_round.iter().map(|&(_, d)| d).sum(),
        per_round,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobSummary {
    pub strategy: String,
    pub seed: u64,
    pub target_accuracy: f64,
    pub rounds_to_target: RoundsToTarget,
    pub peak_accuracy: f64,
    pub total_bytes: u64,
    /// Bytes exchanged up to and including the target round.
    pub bytes_to_target: Option<u64>,
    pub config: serde_json::Value,
}

impl JobSummary {
    pub fn from_reports(
        strategy: &str,
        seed: u64,
        target: f64,
        reports: &[RoundReport],
        config: serde_json::Value,
    ) -> Self {
        let rounds_to_target = rounds_to_target(reports, target);
        let bytes = |r: &RoundReport| r.bytes_up + r.bytes_down;
        let bytes_to_target = rounds_to_target.reached().map(|hit| {
            reports
                .iter()
                .take_while(|r| r.round <= hit)
                .map(bytes)
                .sum()
        });
        Self {
            strategy: strategy.to_string(),
            seed,
            target_accuracy: target,
            rounds_to_target,
            peak_accuracy: reports
                .iter()
                .map(|r| r.balanced_accuracy)
                .fold(0.0, f64::max),
            total_bytes: reports.iter().map(bytes).sum(),
            bytes_to_target,
            config,
        }
    }
}

#[cfg(test)]
pub(crate) fn report(round: usize, acc: f64) -> RoundReport {
    RoundReport {
        round,
        balanced_accuracy: acc,
        per_label_accuracy: vec![Some(acc)],
        selected: vec![0, 1],
        stragglers: vec![],
        bytes_up: 16,
        bytes_down: 16,
        wall_ms: 0,
    }
}
