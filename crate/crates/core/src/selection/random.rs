use std::collections::BTreeSet;

use rand::seq::index;
use rand::Rng;

use super::{RoundSlate, SelectionStrategy};
use crate::error::{Error, Result};
use crate::rng::{self, tag};

/// Uniform sample of `n_r` distinct parties, returned in ascending id order.
pub fn random_select(
    eligible: &[usize],
    n_r: usize,
    round: usize,
    rng: &mut impl Rng,
) -> Result<RoundSlate> {
    if n_r == 0 || n_r > eligible.len() {
        return Err(Error::arg(format!(
            "cannot select {n_r} of {} eligible parties",
            eligible.len()
        )));
    }
    let mut base: Vec<usize> = index::sample(rng, eligible.len(), n_r)
        .into_iter()
        .map(|i| eligible[i])
        .collect();
    base.sort_unstable();
    Ok(RoundSlate {
        round,
        base_parties: base,
        overprovisioned_parties: Vec::new(),
    })
}

/// Baseline strategy: a fresh uniform sample every round, stragglers ignored.
#[derive(Debug, Clone)]
pub struct RandomSelector {
    eligible: Vec<usize>,
    seed: u64,
}

impl RandomSelector {
    pub fn new(eligible: Vec<usize>, seed: u64) -> Self {
        Self { eligible, seed }
    }
}

impl SelectionStrategy for RandomSelector {
    fn name(&self) -> &'static str {
        "random"
    }

    fn select(&mut self, round: usize, n_r: usize) -> Result<RoundSlate> {
        let mut rng = rng::stream(self.seed, &[tag::SELECT, round as u64]);
        random_select(&self.eligible, n_r, round, &mut rng)
    }

    fn report(&mut self, slate: &RoundSlate, responded: &BTreeSet<usize>) -> Result<()> {
        match responded.iter().find(|p| !slate.contains(**p)) {
            Some(p) => Err(Error::arg(format!(
                "party {p} responded but was not selected"
            ))),
            None => Ok(()),
        }
    }
}
