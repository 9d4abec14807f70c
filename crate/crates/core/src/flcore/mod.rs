//! Local training, server-side aggregation and the federated round loop.

mod job;
mod model;
mod server;
mod train;

pub use job::{
    build_strategy, run_job, slate_size, JobConfig, JobRun, LrDecay, PartyMessage, PartyUpdate,
};
pub use model::{
    analytic_gradient, loss, loss_and_gradient, predict, predict_proba, Batch, ModelKind,
    ParamVector, ShapeTag,
};
pub use server::{
    fedavg_aggregate, yogi_step, PseudoGradient, ServerOptimizer, YogiConfig, YogiState,
};
pub use train::{local_train, LocalTrainConfig};
