use std::collections::BTreeSet;
use std::time::Instant;

use log::{debug, warn};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::model::{predict, ModelKind, ParamVector, ShapeTag};
use super::server::{fedavg_aggregate, ServerOptimizer, ServerState};
use super::train::{local_train, LocalTrainConfig};
use crate::clustering::{optimized_clusters, ClusterConfig, PartyClusters};
use crate::dataspace::Cohort;
use crate::error::{Error, Result};
use crate::metrics::{balanced_accuracy, RoundReport};
use crate::rng::{self, tag};
use crate::selection::{FlipsSelector, RandomSelector, SelectionStrategy, StrategyKind};

/// Multiplies the local learning rate by `factor` after every `every` rounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LrDecay {
    pub factor: f64,
    pub every: usize,
}

impl Default for LrDecay {
    fn default() -> Self {
        Self {
            factor: 0.9,
            every: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobConfig {
    pub rounds: usize,
    pub parties_per_round_fraction: f64,
    #[serde(default)]
    pub straggler_rate: f64,
    pub target_accuracy: f64,
    #[serde(default)]
    pub server_optimizer: ServerOptimizer,
    pub strategy: StrategyKind,
    pub seed: u64,
    #[serde(default)]
    pub lr_decay: LrDecay,
    #[serde(default)]
    pub local: LocalTrainConfig,
    #[serde(default)]
    pub model: ModelKind,
    /// End the job at the first round that reaches `target_accuracy`.
    #[serde(default)]
    pub stop_at_target: bool,
}

impl JobConfig {
    pub fn validate(&self) -> Result<()> {
        if self.rounds == 0 {
            return Err(Error::arg("rounds must be at least 1"));
        }
        if !(self.parties_per_round_fraction > 0.0 && self.parties_per_round_fraction <= 1.0) {
            return Err(Error::arg(format!(
                "parties_per_round_fraction must lie in (0, 1], got {}",
                self.parties_per_round_fraction
            )));
        }
        if !(0.0..1.0).contains(&self.straggler_rate) {
            return Err(Error::arg(format!(
                "straggler_rate must lie in [0, 1), got {}",
                self.straggler_rate
            )));
        }
        if !(self.target_accuracy > 0.0 && self.target_accuracy <= 1.0) {
            return Err(Error::arg(format!(
                "target_accuracy must lie in (0, 1], got {}",
                self.target_accuracy
            )));
        }
        if self.lr_decay.factor.is_nan() || self.lr_decay.factor <= 0.0 || self.lr_decay.every == 0
        {
            return Err(Error::arg("lr_decay needs factor > 0 and every >= 1"));
        }
        self.local.validate()
    }
}

/// What a party receives each round. It carries no selection metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartyMessage {
    pub round: usize,
    pub global_model: ParamVector,
    pub train: LocalTrainConfig,
}

/// What a party sends back.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartyUpdate {
    pub round: usize,
    pub party_id: usize,
    pub num_samples: usize,
    pub model: ParamVector,
}

#[derive(Debug, Clone)]
pub struct JobRun {
    pub reports: Vec<RoundReport>,
    pub final_model: ParamVector,
    /// Rounds in which every selected party straggled; the model was carried forward.
    pub skipped_rounds: Vec<usize>,
}

/// `round(fraction * eligible)`, at least one.
pub fn slate_size(fraction: f64, eligible: usize) -> usize {
    ((fraction * eligible as f64).round() as usize).clamp(1, eligible.max(1))
}

/// Instantiates the configured strategy. The cluster-aware strategy clusters the
/// cohort's label distributions first and also returns the clustering.
pub fn build_strategy(
    kind: StrategyKind,
    cohort: &Cohort,
    clustering: &ClusterConfig,
    seed: u64,
) -> Result<(Box<dyn SelectionStrategy>, Option<PartyClusters>)> {
    match kind {
        StrategyKind::Random => Ok((
            Box::new(RandomSelector::new(cohort.eligible_parties(), seed)),
            None,
        )),
        StrategyKind::Flips => {
            let clusters = optimized_clusters(&cohort.label_distributions(), clustering, seed)?;
            let selector = FlipsSelector::new(&clusters.clusters)?;
            Ok((Box::new(selector), Some(clusters)))
        }
    }
}

fn evaluate(model: &ParamVector, cohort: &Cohort) -> Result<(f64, Vec<Option<f64>>)> {
    let ds = &cohort.dataset;
    let predictions: Vec<usize> = cohort
        .test_rows
        .par_iter()
        .map(|&r| predict(model, ds.row(r)))
        .collect();
    let truth: Vec<usize> = cohort.test_rows.iter().map(|&r| ds.label(r)).collect();
    balanced_accuracy(&predictions, &truth, ds.num_labels())
}

/// Runs the federated job round by round.
///
/// Each round: size the slate, select, drop every slate member independently
/// with probability `straggler_rate`, train responders in parallel, aggregate
/// them in ascending party order, apply the server optimizer, decay the local
/// learning rate on schedule, evaluate on the global test set and report back to
/// the strategy. All draws come from streams keyed by `(seed, round, party)`.
pub fn run_job(
    cfg: &JobConfig,
    cohort: &Cohort,
    strategy: &mut dyn SelectionStrategy,
) -> Result<JobRun> {
    cfg.validate()?;
    let ds = &cohort.dataset;
    let eligible = cohort.eligible_parties();
    if eligible.is_empty() {
        return Err(Error::arg("cohort has no party with training data"));
    }
    if cohort.test_rows.is_empty() {
        return Err(Error::arg("cohort has no global test rows"));
    }
    let shape = ShapeTag::new(cfg.model, ds.dim(), ds.num_labels());
    let mut global = ParamVector::init(shape, cfg.seed);
    let model_bytes = global.byte_size();
    let mut server = ServerState::new(&cfg.server_optimizer, global.len());
    let mut local = cfg.local;
    let n_r = slate_size(cfg.parties_per_round_fraction, eligible.len());

    let mut reports = Vec::with_capacity(cfg.rounds);
    let mut skipped_rounds = Vec::new();
    for round in 1..=cfg.rounds {
        let started = Instant::now();
        let slate = strategy.select(round, n_r)?;
        let members = slate.sorted_members();

        let (responders, stragglers): (Vec<usize>, Vec<usize>) = members.iter().partition(|&&p| {
            let mut rng = rng::stream(cfg.seed, &[tag::STRAGGLE, round as u64, p as u64]);
            rng.random::<f64>() >= cfg.straggler_rate
        });

        let message = PartyMessage {
            round,
            global_model: global.clone(),
            train: local,
        };
        let updates: Vec<PartyUpdate> = responders
            .par_iter()
            .map(|&party| {
                let rows = &cohort.shard(party).example_indices;
                let mut rng = rng::stream(cfg.seed, &[tag::TRAIN, round as u64, party as u64]);
                let model = local_train(
                    party,
                    &message.global_model,
                    ds,
                    rows,
                    &message.train,
                    &mut rng,
                )?;
                Ok(PartyUpdate {
                    round,
                    party_id: party,
                    num_samples: rows.len(),
                    model,
                })
            })
            .collect::<Result<_>>()?;

        if updates.is_empty() {
            warn!(
                "round {round}: all {} selected parties straggled; model carried forward",
                members.len()
            );
            skipped_rounds.push(round);
        } else {
            let weighted: Vec<(usize, usize, &ParamVector)> = updates
                .iter()
                .map(|u| (u.party_id, u.num_samples, &u.model))
                .collect();
            let aggregated = fedavg_aggregate(&weighted)?;
            global = server.step(&global, aggregated)?;
        }

        if round % cfg.lr_decay.every == 0 {
            local.eta *= cfg.lr_decay.factor;
        }

        let (acc, per_label) = evaluate(&global, cohort)?;
        let responded: BTreeSet<usize> = responders.iter().copied().collect();
        strategy.report(&slate, &responded)?;
        debug!(
            "round {round}: acc {acc:.4}, {} selected, {} straggled",
            members.len(),
            stragglers.len()
        );

        reports.push(RoundReport {
            round,
            balanced_accuracy: acc,
            per_label_accuracy: per_label,
            bytes_up: responders.len() as u64 * model_bytes,
            bytes_down: members.len() as u64 * model_bytes,
            selected: members,
            stragglers,
            wall_ms: started.elapsed().as_millis() as u64,
        });
        if cfg.stop_at_target && acc >= cfg.target_accuracy {
            break;
        }
    }

    Ok(JobRun {
        reports,
        final_model: global,
        skipped_rounds,
    })
}
