use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::model::{Normalization, SurrogateModel};
use super::network::OUTPUT_DIM;
use crate::datagen::DatasetSample;
use crate::error::{Error, Result};
use crate::parallel::{map_range, Execution};

/// Samples per gradient work item. Fixed so that the summation order, and
/// hence the trained weights, do not depend on the thread count.
const GRAD_CHUNK: usize = 32;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub learning_rate: f64,
    pub train_loss: f64,
    pub val_loss: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainOutcome {
    pub initial_loss: f64,
    pub history: Vec<EpochRecord>,
}

/// RMSprop state: running mean of squared gradients.
struct RmsProp {
    sq: Vec<f64>,
    alpha: f64,
    eps: f64,
}

impl RmsProp {
    fn step(&mut self, params: &mut [f64], grad: &[f64], lr: f64) {
        for ((p, g), s) in params.iter_mut().zip(grad).zip(&mut self.sq) {
            *s = self.alpha * *s + (1.0 - self.alpha) * g * g;
            *p -= lr * g / (s.sqrt() + self.eps);
        }
    }
}

/// Mean L1 loss over the normalized targets.
pub fn evaluate_loss(model: &SurrogateModel, samples: &[DatasetSample], exec: Execution) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::DatasetEmpty);
    }
    let chunks: Vec<&[DatasetSample]> = samples.chunks(256).collect();
    let sums = map_range(exec, chunks.len(), |i| {
        let refs: Vec<&DatasetSample> = chunks[i].iter().collect();
        model.abs_error_sum(&refs)
    });
    Ok(sums.iter().sum::<f64>() / (samples.len() * OUTPUT_DIM) as f64)
}

fn batch_gradient(model: &SurrogateModel, batch: &[&DatasetSample], exec: Execution) -> (f64, Vec<f64>) {
    let denom = batch.len() * OUTPUT_DIM;
    let n_chunks = batch.len().div_ceil(GRAD_CHUNK);
    let parts = map_range(exec, n_chunks, |c| {
        let chunk = &batch[c * GRAD_CHUNK..((c + 1) * GRAD_CHUNK).min(batch.len())];
        let mut g = vec![0.0; model.num_params()];
        let s = model.accumulate_grad(chunk, denom, &mut g);
        (s, g)
    });
    let mut iter = parts.into_iter();
    let (mut sum, mut grad) = iter.next().expect("non-empty batch");
    for (s, g) in iter {
        sum += s;
        for (a, b) in grad.iter_mut().zip(&g) {
            *a += b;
        }
    }
    (sum, grad)
}

/// Fits the scaling constants on `train_set` and runs mini-batch RMSprop on
/// the L1 loss with a step learning-rate schedule. Shuffling is seeded by
/// the config seed and the epoch index.
pub fn train(
    model: &mut SurrogateModel,
    train_set: &[DatasetSample],
    val_set: Option<&[DatasetSample]>,
    exec: Execution,
) -> Result<TrainOutcome> {
    if train_set.is_empty() {
        return Err(Error::DatasetEmpty);
    }
    let cfg = model.config.clone();
    model.set_normalization(Normalization::fit(train_set));
    let initial_loss = evaluate_loss(model, train_set, exec)?;
    let mut opt = RmsProp {
        sq: vec![0.0; model.num_params()],
        alpha: cfg.rms_alpha,
        eps: cfg.rms_eps,
    };
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut history = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        let lr = cfg.learning_rate_at(epoch);
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(epoch as u64);
        order.sort_unstable();
        order.shuffle(&mut rng);
        let mut sum = 0.0;
        for (b, idx) in order.chunks(cfg.batch_size).enumerate() {
            let batch: Vec<&DatasetSample> = idx.iter().map(|&i| &train_set[i]).collect();
            let (s, grad) = batch_gradient(model, &batch, exec);
            if !s.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                return Err(Error::NonFiniteLoss {
                    epoch,
                    batch: b,
                    detail: format!("batch loss sum {s}, learning rate {lr}"),
                });
            }
            sum += s;
            opt.step(&mut model.params, &grad, lr);
        }
        let train_loss = sum / (train_set.len() * OUTPUT_DIM) as f64;
        let val_loss = match val_set {
            Some(v) if !v.is_empty() => Some(evaluate_loss(model, v, exec)?),
            _ => None,
        };
        log::info!(
            "epoch {epoch}: lr {lr:.3e}, train loss {train_loss:.6}{}",
            val_loss.map(|v| format!(", validation loss {v:.6}")).unwrap_or_default()
        );
        history.push(EpochRecord {
            epoch,
            learning_rate: lr,
            train_loss,
            val_loss,
        });
    }
    model.meta.epochs_trained += cfg.epochs as u32;
    model.meta.samples = train_set.len() as u64;
    model.meta.final_loss = history.last().map_or(initial_loss, |r| r.train_loss);
    Ok(TrainOutcome { initial_loss, history })
}
