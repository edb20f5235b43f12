use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Architecture and training hyperparameters of the surrogate operator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OperatorConfig {
    pub token_dim: usize,
    pub num_blocks: usize,
    pub num_heads: usize,
    pub ff_dim: usize,
    /// Width of the first decoder layer.
    pub decoder_dim: usize,
    pub learning_rate: f64,
    /// Factor applied to the learning rate every `lr_step` epochs.
    pub lr_decay: f64,
    pub lr_step: usize,
    pub epochs: usize,
    pub batch_size: usize,
    /// RMSprop smoothing constant and denominator offset.
    pub rms_alpha: f64,
    pub rms_eps: f64,
    /// Initialization and shuffling seed. Set from the run seed by the
    /// training command, so it is not read from configuration files.
    #[serde(skip)]
    pub seed: u64,
}

impl Default for OperatorConfig {
    fn default() -> Self {
        Self {
            token_dim: 32,
            num_blocks: 8,
            num_heads: 4,
            ff_dim: 64,
            decoder_dim: 128,
            learning_rate: 3e-4,
            lr_decay: 0.5,
            lr_step: 150,
            epochs: 200,
            batch_size: 256,
            rms_alpha: 0.99,
            rms_eps: 1e-8,
            seed: 0,
        }
    }
}

impl OperatorConfig {
    /// Tiny network for tests and gradient checks.
    pub fn tiny() -> Self {
        Self {
            token_dim: 8,
            num_blocks: 1,
            num_heads: 2,
            ff_dim: 16,
            decoder_dim: 16,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::ConfigInvalid(format!("surrogate: {msg}")));
        if self.num_blocks < 1 {
            return bad("num_blocks must be at least 1".into());
        }
        if self.token_dim == 0 || self.num_heads == 0 || self.ff_dim == 0 || self.decoder_dim == 0 {
            return bad("layer widths and head count must be positive".into());
        }
        if !self.token_dim.is_multiple_of(self.num_heads) {
            return bad(format!(
                "token_dim {} is not divisible by num_heads {}",
                self.token_dim, self.num_heads
            ));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning_rate {} must be positive", self.learning_rate));
        }
        if !(self.lr_decay > 0.0 && self.lr_decay <= 1.0) {
            return bad(format!("lr_decay {} must lie in (0, 1]", self.lr_decay));
        }
        if self.lr_step == 0 || self.batch_size == 0 {
            return bad("lr_step and batch_size must be positive".into());
        }
        if !(0.0..1.0).contains(&self.rms_alpha) || !(self.rms_eps > 0.0) {
            return bad("rms_alpha must lie in [0, 1) and rms_eps must be positive".into());
        }
        Ok(())
    }

    /// Step schedule: `learning_rate * lr_decay^floor(epoch / lr_step)`.
    pub fn learning_rate_at(&self, epoch: usize) -> f64 {
        self.learning_rate * self.lr_decay.powi((epoch / self.lr_step) as i32)
    }
}
