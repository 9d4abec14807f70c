//! Softmax classifiers over flat parameter vectors.
//!
//! Logistic layout: `W (classes x inputs)` row-major, then `b (classes)`.
//! MLP layout: `W1 (hidden x inputs)`, `b1`, `W2 (classes x hidden)`, `b2`,
//! with a tanh hidden layer.

use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::dataspace::Dataset;
use crate::error::{Error, Result};
use crate::rng::{self, tag};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ModelKind {
    #[default]
    Logistic,
    Mlp {
        hidden: usize,
    },
}

/// Layer dimensions of a model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShapeTag {
    pub kind: ModelKind,
    pub inputs: usize,
    pub classes: usize,
}

impl ShapeTag {
    pub fn new(kind: ModelKind, inputs: usize, classes: usize) -> Self {
        Self {
            kind,
            inputs,
            classes,
        }
    }

    pub fn num_params(&self) -> usize {
        match self.kind {
            ModelKind::Logistic => self.classes * self.inputs + self.classes,
            ModelKind::Mlp { hidden } => {
                hidden * self.inputs + hidden + self.classes * hidden + self.classes
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamVector {
    pub values: Vec<f64>,
    pub shape: ShapeTag,
}

impl ParamVector {
    pub fn zeros(shape: ShapeTag) -> Self {
        Self {
            values: vec![0.0; shape.num_params()],
            shape,
        }
    }

    /// Logistic models start at zero; MLP weights are drawn from
    /// `N(0, 1/fan_in)` with zero biases.
    pub fn init(shape: ShapeTag, seed: u64) -> Self {
        let mut p = Self::zeros(shape);
        if let ModelKind::Mlp { hidden } = shape.kind {
            let mut rng = rng::stream(seed, &[tag::MODEL_INIT]);
            let w1 = Normal::new(0.0, (1.0 / shape.inputs as f64).sqrt()).expect("finite sd");
            let w2 = Normal::new(0.0, (1.0 / hidden as f64).sqrt()).expect("finite sd");
            let (l1, rest) = p.values.split_at_mut(hidden * shape.inputs);
            l1.iter_mut().for_each(|v| *v = w1.sample(&mut rng));
            let l2 = &mut rest[hidden..hidden + shape.classes * hidden];
            l2.iter_mut().for_each(|v| *v = w2.sample(&mut rng));
        }
        p
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn distance(&self, other: &ParamVector) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    /// Bytes on the wire at double precision.
    pub fn byte_size(&self) -> u64 {
        self.values.len() as u64 * 8
    }
}

/// Rows of a dataset used for one gradient evaluation.
#[derive(Debug, Clone, Copy)]
pub struct Batch<'a> {
    pub data: &'a Dataset,
    pub rows: &'a [usize],
}

impl<'a> Batch<'a> {
    pub fn new(data: &'a Dataset, rows: &'a [usize]) -> Self {
        Self { data, rows }
    }
}

fn softmax_in_place(z: &mut [f64]) {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in z.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    z.iter_mut().for_each(|v| *v /= sum);
}

fn affine(w: &[f64], b: &[f64], x: &[f64], out: &mut [f64]) {
    let n_in = x.len();
    for (o, (row, bias)) in out.iter_mut().zip(w.chunks_exact(n_in).zip(b)) {
        *o = bias + row.iter().zip(x).map(|(a, v)| a * v).sum::<f64>();
    }
}

struct Mlp<'a> {
    w1: &'a [f64],
    b1: &'a [f64],
    w2: &'a [f64],
    b2: &'a [f64],
}

fn split_mlp<'a>(values: &'a [f64], shape: &ShapeTag, hidden: usize) -> Mlp<'a> {
    let (w1, rest) = values.split_at(hidden * shape.inputs);
    let (b1, rest) = rest.split_at(hidden);
    let (w2, b2) = rest.split_at(shape.classes * hidden);
    Mlp { w1, b1, w2, b2 }
}

fn check_batch(params: &ParamVector, batch: &Batch<'_>) -> Result<()> {
    if batch.rows.is_empty() {
        return Err(Error::arg("empty batch"));
    }
    if params.shape.inputs != batch.data.dim() || params.shape.classes != batch.data.num_labels() {
        return Err(Error::arg(format!(
            "model expects {} inputs / {} classes, data has {} / {}",
            params.shape.inputs,
            params.shape.classes,
            batch.data.dim(),
            batch.data.num_labels()
        )));
    }
    if params.values.len() != params.shape.num_params() {
        return Err(Error::arg("parameter vector does not match its shape"));
    }
    Ok(())
}

/// Class probabilities for one input.
pub fn predict_proba(params: &ParamVector, x: &[f64]) -> Vec<f64> {
    let shape = &params.shape;
    let mut z = vec![0.0; shape.classes];
    match shape.kind {
        ModelKind::Logistic => {
            let (w, b) = params.values.split_at(shape.classes * shape.inputs);
            affine(w, b, x, &mut z);
        }
        ModelKind::Mlp { hidden } => {
            let m = split_mlp(&params.values, shape, hidden);
            let mut h = vec![0.0; hidden];
            affine(m.w1, m.b1, x, &mut h);
            h.iter_mut().for_each(|v| *v = v.tanh());
            affine(m.w2, m.b2, &h, &mut z);
        }
    }
    softmax_in_place(&mut z);
    z
}

/// Most probable class; ties go to the lowest index.
pub fn predict(params: &ParamVector, x: &[f64]) -> usize {
    let p = predict_proba(params, x);
    let mut best = 0;
    for (i, &v) in p.iter().enumerate() {
        if v > p[best] {
            best = i;
        }
    }
    best
}

/// Mean softmax cross-entropy over the batch.
pub fn loss(params: &ParamVector, batch: &Batch<'_>) -> Result<f64> {
    check_batch(params, batch)?;
    let total: f64 = batch
        .rows
        .iter()
        .map(|&r| {
            let p = predict_proba(params, batch.data.row(r));
            -p[batch.data.label(r)].max(f64::MIN_POSITIVE).ln()
        })
        .sum();
    Ok(total / batch.rows.len() as f64)
}

/// Mean loss and its exact gradient over the batch.
pub fn loss_and_gradient(params: &ParamVector, batch: &Batch<'_>) -> Result<(f64, ParamVector)> {
    check_batch(params, batch)?;
    let shape = params.shape;
    let mut grad = ParamVector::zeros(shape);
    let mut total = 0.0;
    let c = shape.classes;
    let d = shape.inputs;

    match shape.kind {
        ModelKind::Logistic => {
            let (gw, gb) = grad.values.split_at_mut(c * d);
            for &r in batch.rows {
                let x = batch.data.row(r);
                let y = batch.data.label(r);
                let mut p = predict_proba(params, x);
                total -= p[y].max(f64::MIN_POSITIVE).ln();
                p[y] -= 1.0;
                for (k, &dz) in p.iter().enumerate() {
                    gb[k] += dz;
                    for (g, &v) in gw[k * d..(k + 1) * d].iter_mut().zip(x) {
                        *g += dz * v;
                    }
                }
            }
        }
        ModelKind::Mlp { hidden } => {
            let m = split_mlp(&params.values, &shape, hidden);
            let (gw1, rest) = grad.values.split_at_mut(hidden * d);
            let (gb1, rest) = rest.split_at_mut(hidden);
            let (gw2, gb2) = rest.split_at_mut(c * hidden);
            let mut h = vec![0.0; hidden];
            let mut z = vec![0.0; c];
            let mut dh = vec![0.0; hidden];
            for &r in batch.rows {
                let x = batch.data.row(r);
                let y = batch.data.label(r);
                affine(m.w1, m.b1, x, &mut h);
                h.iter_mut().for_each(|v| *v = v.tanh());
                affine(m.w2, m.b2, &h, &mut z);
                softmax_in_place(&mut z);
                total -= z[y].max(f64::MIN_POSITIVE).ln();
                z[y] -= 1.0;

                dh.iter_mut().for_each(|v| *v = 0.0);
                for (k, &dz) in z.iter().enumerate() {
                    gb2[k] += dz;
                    let w_row = &m.w2[k * hidden..(k + 1) * hidden];
                    for j in 0..hidden {
                        gw2[k * hidden + j] += dz * h[j];
                        dh[j] += dz * w_row[j];
                    }
                }
                for j in 0..hidden {
                    let da = dh[j] * (1.0 - h[j] * h[j]);
                    gb1[j] += da;
                    for (g, &v) in gw1[j * d..(j + 1) * d].iter_mut().zip(x) {
                        *g += da * v;
                    }
                }
            }
        }
    }

    let n = batch.rows.len() as f64;
    grad.values.iter_mut().for_each(|g| *g /= n);
    Ok((total / n, grad))
}

/// Exact gradient of the mean cross-entropy over the batch.
pub fn analytic_gradient(params: &ParamVector, batch: &Batch<'_>) -> Result<ParamVector> {
    loss_and_gradient(params, batch).map(|(_, g)| g)
}
