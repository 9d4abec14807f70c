use serde::{Deserialize, Serialize};

use super::model::ParamVector;
use crate::error::{Error, Result};

/// `sum(n_i * x_i) / sum(n_i)`, accumulated in the order given.
pub fn fedavg_aggregate(updates: &[(usize, usize, &ParamVector)]) -> Result<ParamVector> {
    let Some(&(_, _, first)) = updates.first() else {
        return Err(Error::arg("no updates to aggregate"));
    };
    let total: usize = updates.iter().map(|&(_, n, _)| n).sum();
    if total == 0 {
        return Err(Error::arg("updates carry zero samples in total"));
    }
    if let Some(&(party, _, _)) = updates
        .iter()
        .find(|(_, _, x)| x.shape != first.shape || x.len() != first.len())
    {
        return Err(Error::arg(format!(
            "update from party {party} has a different shape"
        )));
    }
    let mut acc = vec![0.0; first.len()];
    for &(_, n, x) in updates {
        let w = n as f64;
        for (a, v) in acc.iter_mut().zip(&x.values) {
            *a += w * v;
        }
    }
    let total = total as f64;
    acc.iter_mut().for_each(|a| *a /= total);
    Ok(ParamVector {
        values: acc,
        shape: first.shape,
    })
}

/// Which difference feeds the adaptive server optimizer.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PseudoGradient {
    /// `gr = m - x`: stepping `m - lr * m_t / (sqrt(v_t) + eps)` moves toward the parties.
    #[default]
    GlobalMinusAggregate,
    /// `gr = x - m`, the literal sign. Kept for audit runs; moves away from the parties.
    AggregateMinusGlobal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct YogiConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub lr: f64,
    pub eps: f64,
    pub pseudo_gradient: PseudoGradient,
}

impl Default for YogiConfig {
    fn default() -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.99,
            lr: 0.05,
            eps: 1e-3,
            pseudo_gradient: PseudoGradient::GlobalMinusAggregate,
        }
    }
}

/// Moment estimates owned by one job's server optimizer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct YogiState {
    pub m_t: Vec<f64>,
    pub v_t: Vec<f64>,
    pub config: YogiConfig,
}

impl YogiState {
    pub fn new(len: usize, config: YogiConfig) -> Self {
        Self {
            m_t: vec![0.0; len],
            v_t: vec![0.0; len],
            config,
        }
    }
}

/// One adaptive server step:
///
/// ```text
/// m_t = beta1 * m_t + (1 - beta1) * gr
/// v_t = beta2 * v_t + (1 - beta2) * gr^2
/// m   = m - lr * m_t / (sqrt(v_t) + eps)
/// ```
pub fn yogi_step(
    state: &YogiState,
    global: &ParamVector,
    aggregated: &ParamVector,
) -> Result<(ParamVector, YogiState)> {
    if global.len() != aggregated.len() || state.m_t.len() != global.len() {
        return Err(Error::arg("optimizer state and model lengths differ"));
    }
    let YogiConfig {
        beta1,
        beta2,
        lr,
        eps,
        pseudo_gradient,
    } = state.config;
    let mut next = state.clone();
    let mut model = global.clone();
    for i in 0..global.len() {
        let gr = match pseudo_gradient {
            PseudoGradient::GlobalMinusAggregate => global.values[i] - aggregated.values[i],
            PseudoGradient::AggregateMinusGlobal => aggregated.values[i] - global.values[i],
        };
        next.m_t[i] = beta1 * state.m_t[i] + (1.0 - beta1) * gr;
        next.v_t[i] = beta2 * state.v_t[i] + (1.0 - beta2) * (gr * gr);
        model.values[i] -= lr * next.m_t[i] / (next.v_t[i].sqrt() + eps);
    }
    Ok((model, next))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ServerOptimizer {
    /// The weighted average becomes the next global model.
    #[default]
    Fedavg,
    Fedyogi(YogiConfig),
}

impl ServerOptimizer {
    pub fn name(&self) -> &'static str {
        match self {
            ServerOptimizer::Fedavg => "fedavg",
            ServerOptimizer::Fedyogi(_) => "fedyogi",
        }
    }
}

/// Per-job server optimizer state.
#[derive(Debug, Clone)]
pub(crate) enum ServerState {
    Fedavg,
    Fedyogi(YogiState),
}

impl ServerState {
    pub(crate) fn new(opt: &ServerOptimizer, len: usize) -> Self {
        match opt {
            ServerOptimizer::Fedavg => ServerState::Fedavg,
            ServerOptimizer::Fedyogi(cfg) => ServerState::Fedyogi(YogiState::new(len, *cfg)),
        }
    }

    pub(crate) fn step(
        &mut self,
        global: &ParamVector,
        aggregated: ParamVector,
    ) -> Result<ParamVector> {
        match self {
            ServerState::Fedavg => Ok(aggregated),
            ServerState::Fedyogi(state) => {
                let (model, next) = yogi_step(state, global, &aggregated)?;
                *state = next;
                Ok(model)
            }
        }
    }
}
