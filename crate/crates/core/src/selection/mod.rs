//! Participant selection.
//!
//! Strategies sit behind [`SelectionStrategy`] so the round loop never needs to
//! know how a slate was built. Cluster membership stays inside the strategy:
//! a [`RoundSlate`] carries party ids only.

mod flips;
mod random;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use flips::{audit_fairness, FairnessReport, FlipsSelector, SelectionState};
pub use random::{random_select, RandomSelector};

/// Parties asked to train in one round.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundSlate {
    pub round: usize,
    pub base_parties: Vec<usize>,
    pub overprovisioned_parties: Vec<usize>,
}

impl RoundSlate {
    pub fn members(&self) -> impl Iterator<Item = usize> + '_ {
        self.base_parties
            .iter()
            .chain(&self.overprovisioned_parties)
            .copied()
    }

    pub fn len(&self) -> usize {
        self.base_parties.len() + self.overprovisioned_parties.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains(&self, party: usize) -> bool {
        self.members().any(|p| p == party)
    }

    /// Slate members in ascending id order.
    pub fn sorted_members(&self) -> Vec<usize> {
        let set: BTreeSet<usize> = self.members().collect();
        set.into_iter().collect()
    }
}

pub trait SelectionStrategy: Send {
    fn name(&self) -> &'static str;

    /// Builds the slate for `round` with `n_r` base parties.
    fn select(&mut self, round: usize, n_r: usize) -> Result<RoundSlate>;

    /// Feeds back which slate members returned an update.
    fn report(&mut self, slate: &RoundSlate, responded: &BTreeSet<usize>) -> Result<()>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StrategyKind {
    Random,
    Flips,
}

impl StrategyKind {
    pub fn as_str(self) -> &'static str {
        match self {
            StrategyKind::Random => "random",
            StrategyKind::Flips => "flips",
        }
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StrategyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random" => Ok(StrategyKind::Random),
            "flips" => Ok(StrategyKind::Flips),
            other => Err(Error::arg(format!(
                "unknown strategy {other:?} (expected \"random\" or \"flips\")"
            ))),
        }
    }
}
