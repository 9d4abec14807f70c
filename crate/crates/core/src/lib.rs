//! Deterministic federated-learning round simulator.
//!
//! The pipeline is: [`dataspace`] builds a labelled dataset and splits it across
//! parties, [`clustering`] groups parties by label distribution, [`selection`]
//! picks the participants of each round, [`flcore`] trains and aggregates, and
//! [`metrics`] scores every round against the held-out global test set.
//!
//! All randomness flows from explicit seeds (see [`rng`]), so identical inputs
//! produce identical outputs regardless of the rayon thread count.

pub mod clustering;
pub mod dataspace;
pub mod error;
pub mod flcore;
pub mod metrics;
pub mod rng;
pub mod selection;

pub use clustering::{
    adjusted_rand_index, davies_bouldin, dunn_oracle, elbow_select, kmeans, kmeans_pp_init,
    prepare_points, DistanceSpace, DunnOracleScore, ElbowCurve, ElbowMode, ElbowParams,
    KMeansModel, KMeansParams, LabelDistribution,
};
pub use dataspace::{
    dirichlet_partition, generate_synthetic, label_distribution, load_csv, load_idx, Cohort,
    Dataset, PartitionPlan, PartyShard, Provenance, SyntheticSpec,
};
pub use error::{Error, Result};
pub use flcore::{
    analytic_gradient, fedavg_aggregate, local_train, run_job, yogi_step, JobConfig,
    LocalTrainConfig, ModelKind, ParamVector, ServerOptimizer, ShapeTag, YogiState,
};
pub use metrics::{
    balanced_accuracy, communication_cost, rounds_to_target, JobSummary, RoundReport,
    RoundsToTarget,
};
pub use selection::{
    audit_fairness, random_select, FairnessReport, FlipsSelector, RandomSelector, RoundSlate,
    SelectionState, SelectionStrategy, StrategyKind,
};
