use rand::seq::index;
use serde::{Deserialize, Serialize};

use super::model::{loss_and_gradient, Batch, ParamVector};
use crate::dataspace::Dataset;
use crate::error::{Error, Result};
use crate::rng::SimRng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalTrainConfig {
    /// Local SGD steps per round.
    pub tau: usize,
    pub eta: f64,
    /// Proximal coefficient; zero disables the proximal term.
    #[serde(default)]
    pub mu: f64,
    /// Rows per step. Values at or above the shard size use the whole shard.
    pub batch_size: usize,
}

impl Default for LocalTrainConfig {
    fn default() -> Self {
        Self {
            tau: 5,
            eta: 0.1,
            mu: 0.0,
            batch_size: 32,
        }
    }
}

impl LocalTrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.tau == 0 {
            return Err(Error::arg("tau must be at least 1"));
        }
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(Error::arg(format!(
                "eta must be positive, got {}",
                self.eta
            )));
        }
        if !(self.mu >= 0.0 && self.mu.is_finite()) {
            return Err(Error::arg(format!(
                "mu must be non-negative, got {}",
                self.mu
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::arg("batch_size must be at least 1"));
        }
        Ok(())
    }
}

/// Runs `tau` mini-batch SGD steps from the round's global model.
///
/// With `mu > 0` each step also pulls toward the global model through the
/// proximal term `(mu/2) ||global - x||^2`. That term is applied in closed form,
/// `x <- (x - eta * grad + eta * mu * global) / (1 + eta * mu)`, which stays
/// stable for any `eta * mu`.
pub fn local_train(
    party: usize,
    global: &ParamVector,
    data: &Dataset,
    rows: &[usize],
    cfg: &LocalTrainConfig,
    rng: &mut SimRng,
) -> Result<ParamVector> {
    cfg.validate()?;
    if rows.is_empty() {
        return Err(Error::arg(format!("party {party} has no training rows")));
    }
    let mut x = global.clone();
    let mut batch_rows = Vec::with_capacity(cfg.batch_size.min(rows.len()));
    let shrink = 1.0 / (1.0 + cfg.eta * cfg.mu);
    for step in 0..cfg.tau {
        let batch = if cfg.batch_size >= rows.len() {
            rows
        } else {
            batch_rows.clear();
            batch_rows.extend(
                index::sample(rng, rows.len(), cfg.batch_size)
                    .into_iter()
                    .map(|i| rows[i]),
            );
            &batch_rows[..]
        };
        let (loss, grad) = loss_and_gradient(&x, &Batch::new(data, batch))?;
        if !loss.is_finite() {
            return Err(Error::Divergence { party, step });
        }
        if cfg.mu == 0.0 {
            for (v, g) in x.values.iter_mut().zip(&grad.values) {
                *v -= cfg.eta * g;
            }
        } else {
            let pull = cfg.eta * cfg.mu;
            for ((v, g), m) in x.values.iter_mut().zip(&grad.values).zip(&global.values) {
                *v = (*v - cfg.eta * g + pull * m) * shrink;
            }
        }
        if !x.is_finite() {
            return Err(Error::Divergence { party, step });
        }
    }
    Ok(x)
}
