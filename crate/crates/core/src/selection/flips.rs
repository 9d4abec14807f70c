//! Cluster round-robin selection with pick-count heaps and straggler
//! over-provisioning.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};

use serde::{Deserialize, Serialize};

use super::{RoundSlate, SelectionStrategy};
use crate::error::{Error, Result};

/// Min-heap keyed by `(picks, id)`.
type PickHeap = BinaryHeap<Reverse<(u64, usize)>>;

#[derive(Debug, Clone)]
pub struct SelectionState {
    /// Clusters keyed by how often they have been offered a slot.
    cluster_heap: PickHeap,
    cluster_picks: BTreeMap<usize, u64>,
    /// Members of each cluster keyed by how often they were returned.
    party_heaps: BTreeMap<usize, PickHeap>,
    party_picks: BTreeMap<usize, u64>,
    party_cluster: BTreeMap<usize, usize>,
    /// Non-responders of the most recent round.
    straggler_parties: BTreeSet<usize>,
    /// Straggler count per cluster for the most recent round.
    straggler_clusters: BTreeMap<usize, usize>,
    strg: f64,
    stragglers_flag: bool,
}

impl SelectionState {
    /// All pick counts start at zero; clusters without members are left out.
    pub fn new(clusters: &[(usize, Vec<usize>)]) -> Result<Self> {
        let mut party_cluster = BTreeMap::new();
        let mut cluster_heap = PickHeap::new();
        let mut cluster_picks = BTreeMap::new();
        let mut party_heaps = BTreeMap::new();
        let mut party_picks = BTreeMap::new();
        for (cluster_id, members) in clusters {
            if cluster_picks.contains_key(cluster_id) {
                return Err(Error::arg(format!("cluster {cluster_id} listed twice")));
            }
            if members.is_empty() {
                continue;
            }
            let mut heap = PickHeap::new();
            for &p in members {
                if party_cluster.insert(p, *cluster_id).is_some() {
                    return Err(Error::arg(format!(
                        "party {p} belongs to more than one cluster"
                    )));
                }
                party_picks.insert(p, 0);
                heap.push(Reverse((0, p)));
            }
            party_heaps.insert(*cluster_id, heap);
            cluster_picks.insert(*cluster_id, 0);
            cluster_heap.push(Reverse((0, *cluster_id)));
        }
        if party_cluster.is_empty() {
            return Err(Error::arg("no selectable parties"));
        }
        Ok(Self {
            cluster_heap,
            cluster_picks,
            party_heaps,
            party_picks,
            party_cluster,
            straggler_parties: BTreeSet::new(),
            straggler_clusters: BTreeMap::new(),
            strg: 0.0,
            stragglers_flag: false,
        })
    }

    pub fn num_parties(&self) -> usize {
        self.party_cluster.len()
    }

    pub fn num_clusters(&self) -> usize {
        self.cluster_picks.len()
    }

    pub fn strg(&self) -> f64 {
        self.strg
    }

    pub fn stragglers_flag(&self) -> bool {
        self.stragglers_flag
    }

    pub fn straggler_parties(&self) -> &BTreeSet<usize> {
        &self.straggler_parties
    }

    pub fn party_picks(&self, party: usize) -> Option<u64> {
        self.party_picks.get(&party).copied()
    }

    pub fn cluster_picks(&self) -> &BTreeMap<usize, u64> {
        &self.cluster_picks
    }

    pub fn cluster_of(&self, party: usize) -> Option<usize> {
        self.party_cluster.get(&party).copied()
    }

    /// Number of over-provisioned parties the next slate asks for.
    pub fn overprovision_demand(&self, n_r: usize) -> usize {
        if self.stragglers_flag {
            (self.strg * n_r as f64).floor() as usize
        } else {
            0
        }
    }

    /// Pops the least-picked member of `cluster` that passes `allowed`, bumps its
    /// pick count and puts it back.
    fn take_from_cluster(
        &mut self,
        cluster: usize,
        allowed: impl Fn(usize) -> bool,
    ) -> Option<usize> {
        let heap = self.party_heaps.get_mut(&cluster)?;
        let mut skipped = Vec::new();
        let mut found = None;
        while let Some(Reverse((picks, p))) = heap.pop() {
            if allowed(p) {
                found = Some((picks, p));
                break;
            }
            skipped.push(Reverse((picks, p)));
        }
        heap.extend(skipped);
        let (picks, p) = found?;
        heap.push(Reverse((picks + 1, p)));
        self.party_picks.insert(p, picks + 1);
        Some(p)
    }

    /// Round-robin over clusters: each step offers a slot to the least-picked
    /// cluster, which contributes its least-picked member not already on the
    /// slate. A cluster whose members are all on the slate still spends its turn.
    fn select_base(&mut self, n_r: usize) -> Vec<usize> {
        let mut chosen = BTreeSet::new();
        let mut base = Vec::with_capacity(n_r);
        while base.len() < n_r {
            let Reverse((picks, cluster)) = self
                .cluster_heap
                .pop()
                .expect("cluster heap is never empty");
            if let Some(p) = self.take_from_cluster(cluster, |p| !chosen.contains(&p)) {
                chosen.insert(p);
                base.push(p);
            }
            self.cluster_heap.push(Reverse((picks + 1, cluster)));
            self.cluster_picks.insert(cluster, picks + 1);
        }
        base
    }

    /// Extra parties drawn from the clusters that straggled most last round,
    /// falling back to the globally least-picked non-stragglers.
    fn select_overprovision(
        &mut self,
        demand: usize,
        on_slate: &mut BTreeSet<usize>,
    ) -> Vec<usize> {
        let mut straggler_heap: BinaryHeap<(usize, Reverse<usize>)> = self
            .straggler_clusters
            .iter()
            .filter(|(_, &n)| n > 0)
            .map(|(&c, &n)| (n, Reverse(c)))
            .collect();
        let stragglers = self.straggler_parties.clone();
        let mut extra = Vec::with_capacity(demand);
        while extra.len() < demand {
            let picked = match straggler_heap.pop() {
                Some((count, Reverse(cluster))) => {
                    let slate = &*on_slate;
                    let p = self.take_from_cluster(cluster, |p| {
                        !slate.contains(&p) && !stragglers.contains(&p)
                    });
                    if p.is_some() && count > 1 {
                        straggler_heap.push((count - 1, Reverse(cluster)));
                    }
                    match p {
                        Some(p) => p,
                        None => continue,
                    }
                }
                None => {
                    let candidate = self
                        .party_picks
                        .iter()
                        .filter(|(p, _)| !on_slate.contains(p) && !stragglers.contains(p))
                        .map(|(&p, &picks)| (picks, p))
                        .min();
                    let Some((_, p)) = candidate else { break };
                    let cluster = self.party_cluster[&p];
                    self.take_from_cluster(cluster, |q| q == p)
                        .expect("candidate is a member of its cluster")
                }
            };
            on_slate.insert(picked);
            extra.push(picked);
        }
        extra
    }

    /// Builds the slate for `round`.
    pub fn select(&mut self, round: usize, n_r: usize) -> Result<RoundSlate> {
        if n_r == 0 {
            return Err(Error::arg("parties per round must be at least 1"));
        }
        if n_r > self.num_parties() {
            return Err(Error::arg(format!(
                "cannot select {n_r} of {} eligible parties",
                self.num_parties()
            )));
        }
        let base = self.select_base(n_r);
        let demand = self.overprovision_demand(n_r);
        let mut on_slate: BTreeSet<usize> = base.iter().copied().collect();
        let overprovisioned = self.select_overprovision(demand, &mut on_slate);
        Ok(RoundSlate {
            round,
            base_parties: base,
            overprovisioned_parties: overprovisioned,
        })
    }

    /// Records which slate members returned an update and advances the
    /// straggler rate by `strg = (strg * N_r + count_strg) / N_r`, with `N_r`
    /// the base slate size and `count_strg` this round's non-responders.
    pub fn report(&mut self, slate: &RoundSlate, responded: &BTreeSet<usize>) -> Result<()> {
        if let Some(p) = slate
            .members()
            .find(|p| !self.party_cluster.contains_key(p))
        {
            return Err(Error::arg(format!("unknown party {p} on slate")));
        }
        if let Some(p) = responded.iter().find(|p| !slate.contains(**p)) {
            return Err(Error::arg(format!(
                "party {p} responded but was not on the slate"
            )));
        }
        self.straggler_parties = slate.members().filter(|p| !responded.contains(p)).collect();
        self.straggler_clusters.clear();
        for p in &self.straggler_parties {
            *self
                .straggler_clusters
                .entry(self.party_cluster[p])
                .or_default() += 1;
        }
        self.stragglers_flag = !self.straggler_parties.is_empty();

        let n_r = slate.base_parties.len() as f64;
        let count_strg = self.straggler_parties.len() as f64;
        self.strg = (self.strg * n_r + count_strg) / n_r;
        Ok(())
    }
}

/// Pick-count spreads: `max - min` within each cluster and across clusters.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FairnessReport {
    /// `(cluster_id, max - min member picks)`.
    pub within_cluster_spread: Vec<(usize, u64)>,
    pub max_within_cluster_spread: u64,
    pub cross_cluster_spread: u64,
}

pub fn audit_fairness(state: &SelectionState) -> FairnessReport {
    let mut members: BTreeMap<usize, Vec<u64>> = BTreeMap::new();
    for (p, &c) in &state.party_cluster {
        members.entry(c).or_default().push(state.party_picks[p]);
    }
    let spread = |v: &mut dyn Iterator<Item = u64>| {
        let (lo, hi) = v.fold((u64::MAX, 0), |(lo, hi), x| (lo.min(x), hi.max(x)));
        hi.saturating_sub(lo)
    };
    let within: Vec<(usize, u64)> = members
        .iter()
        .map(|(&c, picks)| (c, spread(&mut picks.iter().copied())))
        .collect();
    FairnessReport {
        max_within_cluster_spread: within.iter().map(|&(_, s)| s).max().unwrap_or(0),
        within_cluster_spread: within,
        cross_cluster_spread: spread(&mut state.cluster_picks.values().copied()),
    }
}

/// Cluster-aware strategy. Cluster ids never leave this type.
#[derive(Debug, Clone)]
pub struct FlipsSelector {
    state: SelectionState,
}

impl FlipsSelector {
    pub fn new(clusters: &[(usize, Vec<usize>)]) -> Result<Self> {
        Ok(Self {
            state: SelectionState::new(clusters)?,
        })
    }

    pub fn state(&self) -> &SelectionState {
        &self.state
    }
}

impl SelectionStrategy for FlipsSelector {
    fn name(&self) -> &'static str {
        "flips"
    }

    fn select(&mut self, round: usize, n_r: usize) -> Result<RoundSlate> {
        self.state.select(round, n_r)
    }

    fn report(&mut self, slate: &RoundSlate, responded: &BTreeSet<usize>) -> Result<()> {
        self.state.report(slate, responded)
    }
}
