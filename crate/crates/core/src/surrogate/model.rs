use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::OperatorConfig;
use super::network::{Layout, INPUT_DIM, OUTPUT_DIM, TOKENS};
use crate::datagen::DatasetSample;
use crate::error::{Error, Result};
use crate::reach::{StepDeducer, StepInput};
use crate::sets::IntervalBox;

/// `[state centers (6), control centers (2), state radii (6), control radii (2)]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScopeVectorIn(pub [f64; INPUT_DIM]);

/// `[state centers (6), state radii (6)]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScopeVectorOut(pub [f64; OUTPUT_DIM]);

impl ScopeVectorIn {
    pub fn from_boxes(state: &IntervalBox, control: &IntervalBox) -> Result<Self> {
        if state.dim() != 6 || control.dim() != 2 {
            return Err(Error::DimensionMismatch {
                expected: INPUT_DIM,
                got: 2 * (state.dim() + control.dim()),
            });
        }
        let mut v = [0.0; INPUT_DIM];
        v[..6].copy_from_slice(state.centers());
        v[6..8].copy_from_slice(control.centers());
        v[8..14].copy_from_slice(state.radii());
        v[14..].copy_from_slice(control.radii());
        Ok(Self(v))
    }

    pub fn from_step(input: &StepInput) -> Result<Self> {
        Self::from_boxes(&input.state, &input.control)
    }

    fn check_finite(&self) -> Result<()> {
        match self.0.iter().position(|x| !x.is_finite()) {
            Some(index) => Err(Error::NonFiniteInput { index }),
            None => Ok(()),
        }
    }
}

impl ScopeVectorOut {
    pub fn to_box(&self) -> Result<IntervalBox> {
        IntervalBox::new(self.0[..6].to_vec(), self.0[6..].to_vec())
    }
}

/// Fixed affine scaling of inputs and of the predicted increments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub in_shift: [f64; INPUT_DIM],
    pub in_scale: [f64; INPUT_DIM],
    pub out_shift: [f64; OUTPUT_DIM],
    pub out_scale: [f64; OUTPUT_DIM],
}

impl Default for Normalization {
    fn default() -> Self {
        Self {
            in_shift: [0.0; INPUT_DIM],
            in_scale: [1.0; INPUT_DIM],
            out_shift: [0.0; OUTPUT_DIM],
            out_scale: [1.0; OUTPUT_DIM],
        }
    }
}

/// Input entry that carries the same quantity as output `k`: the network
/// predicts the change relative to it.
fn base_index(k: usize) -> usize {
    if k < 6 {
        k
    } else {
        k + 2
    }
}

fn mean_std(xs: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = xs.clone().count().max(1) as f64;
    let mean = xs.clone().sum::<f64>() / n;
    let var = xs.map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    let std = var.sqrt();
    (mean, if std > 1e-12 { std } else { 1.0 })
}

impl Normalization {
    /// Per-column mean and standard deviation of the inputs and of the
    /// label increments.
    pub fn fit(samples: &[DatasetSample]) -> Self {
        let mut n = Self::default();
        for k in 0..INPUT_DIM {
            (n.in_shift[k], n.in_scale[k]) = mean_std(samples.iter().map(|s| s.input[k]));
        }
        for k in 0..OUTPUT_DIM {
            (n.out_shift[k], n.out_scale[k]) =
                mean_std(samples.iter().map(|s| s.label[k] - s.input[base_index(k)]));
        }
        n
    }

    fn tokens(&self, input: &[f64; INPUT_DIM], out: &mut Vec<f64>) {
        for t in 0..TOKENS {
            out.push((input[t] - self.in_shift[t]) / self.in_scale[t]);
            out.push((input[t + 8] - self.in_shift[t + 8]) / self.in_scale[t + 8]);
        }
    }

    /// Normalized regression target for a labelled sample.
    pub(crate) fn target(&self, input: &[f64; INPUT_DIM], label: &[f64; OUTPUT_DIM]) -> [f64; OUTPUT_DIM] {
        std::array::from_fn(|k| (label[k] - input[base_index(k)] - self.out_shift[k]) / self.out_scale[k])
    }

    fn decode(&self, input: &[f64; INPUT_DIM], y: &[f64]) -> [f64; OUTPUT_DIM] {
        std::array::from_fn(|k| input[base_index(k)] + self.out_shift[k] + self.out_scale[k] * y[k])
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingMeta {
    pub epochs_trained: u32,
    pub samples: u64,
    pub final_loss: f64,
}

/// The learned one-step operator: configuration, scaling constants, and
/// the flat parameter vector.
#[derive(Debug, Clone)]
pub struct SurrogateModel {
    pub(crate) config: OperatorConfig,
    pub(crate) norm: Normalization,
    pub(crate) meta: TrainingMeta,
    pub(crate) layout: Layout,
    pub(crate) params: Vec<f64>,
}

/// Samples per forward pass during batched inference.
const INFER_CHUNK: usize = 256;

pub fn build_model(cfg: &OperatorConfig, seed: u64) -> Result<SurrogateModel> {
    cfg.validate()?;
    let layout = Layout::new(cfg);
    let params = layout.init(&mut ChaCha8Rng::seed_from_u64(seed));
    Ok(SurrogateModel {
        config: OperatorConfig { seed, ..cfg.clone() },
        norm: Normalization::default(),
        meta: TrainingMeta::default(),
        layout,
        params,
    })
}

impl SurrogateModel {
    pub(crate) fn from_parts(
        config: OperatorConfig,
        norm: Normalization,
        meta: TrainingMeta,
        params: Vec<f64>,
    ) -> Result<Self> {
        config.validate()?;
        let layout = Layout::new(&config);
        if params.len() != layout.num_params() {
            return Err(Error::CorruptFile(format!(
                "expected {} parameters for the stored configuration, found {}",
                layout.num_params(),
                params.len()
            )));
        }
        if let Some(i) = params.iter().position(|x| !x.is_finite()) {
            return Err(Error::CorruptFile(format!("parameter {i} is not finite")));
        }
        Ok(Self {
            config,
            norm,
            meta,
            layout,
            params,
        })
    }

    pub fn config(&self) -> &OperatorConfig {
        &self.config
    }

    pub fn normalization(&self) -> &Normalization {
        &self.norm
    }

    pub fn set_normalization(&mut self, norm: Normalization) {
        self.norm = norm;
    }

    pub fn meta(&self) -> &TrainingMeta {
        &self.meta
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    /// Raw head outputs (normalized increments) for a batch of inputs.
    pub(crate) fn raw_forward(&self, inputs: &[[f64; INPUT_DIM]]) -> (Vec<f64>, super::network::Cache) {
        let mut tokens = Vec::with_capacity(inputs.len() * 2 * TOKENS);
        for x in inputs {
            self.norm.tokens(x, &mut tokens);
        }
        self.layout.forward(&self.params, tokens)
    }

    /// Prediction before the radius clamp.
    pub fn predict_unclamped(&self, inputs: &[ScopeVectorIn]) -> Result<Vec<[f64; OUTPUT_DIM]>> {
        for x in inputs {
            x.check_finite()?;
        }
        let mut out = Vec::with_capacity(inputs.len());
        for chunk in inputs.chunks(INFER_CHUNK) {
            let raw: Vec<[f64; INPUT_DIM]> = chunk.iter().map(|x| x.0).collect();
            let (y, _) = self.raw_forward(&raw);
            for (x, yk) in raw.iter().zip(y.chunks_exact(OUTPUT_DIM)) {
                out.push(self.norm.decode(x, yk));
            }
        }
        Ok(out)
    }

    pub fn forward_batch(&self, inputs: &[ScopeVectorIn]) -> Result<Vec<ScopeVectorOut>> {
        Ok(self
            .predict_unclamped(inputs)?
            .into_iter()
            .map(|mut v| {
                for r in &mut v[6..] {
                    *r = r.max(0.0);
                }
                if v.iter().any(|x| !x.is_finite()) {
                    // saturate rather than emit non-finite sets
                    for x in &mut v {
                        *x = x.clamp(-f64::MAX, f64::MAX);
                        if x.is_nan() {
                            *x = 0.0;
                        }
                    }
                }
                ScopeVectorOut(v)
            })
            .collect())
    }

    pub fn forward(&self, input: &ScopeVectorIn) -> Result<ScopeVectorOut> {
        Ok(self.forward_batch(std::slice::from_ref(input))?[0])
    }

    /// Mean L1 loss over the normalized targets and its gradient with
    /// respect to every parameter.
    pub fn loss_and_grad(&self, samples: &[&DatasetSample]) -> (f64, Vec<f64>) {
        let mut grad = vec![0.0; self.params.len()];
        let sum = self.accumulate_grad(samples, samples.len() * OUTPUT_DIM, &mut grad);
        (sum / (samples.len() * OUTPUT_DIM) as f64, grad)
    }

    /// Adds the gradient of `sum |err| / denom` to `grad`; returns the sum
    /// of absolute errors.
    pub(crate) fn accumulate_grad(&self, samples: &[&DatasetSample], denom: usize, grad: &mut [f64]) -> f64 {
        let inputs: Vec<[f64; INPUT_DIM]> = samples.iter().map(|s| s.input).collect();
        let (y, cache) = self.raw_forward(&inputs);
        let mut dy = vec![0.0; y.len()];
        let mut sum = 0.0;
        let scale = 1.0 / denom as f64;
        for (i, s) in samples.iter().enumerate() {
            let t = self.norm.target(&s.input, &s.label);
            for k in 0..OUTPUT_DIM {
                let e = y[i * OUTPUT_DIM + k] - t[k];
                sum += e.abs();
                dy[i * OUTPUT_DIM + k] = if e > 0.0 {
                    scale
                } else if e < 0.0 {
                    -scale
                } else {
                    0.0
                };
            }
        }
        self.layout.backward(&self.params, &cache, &dy, grad);
        sum
    }

    /// Sum of absolute normalized errors, without gradients.
    pub(crate) fn abs_error_sum(&self, samples: &[&DatasetSample]) -> f64 {
        let inputs: Vec<[f64; INPUT_DIM]> = samples.iter().map(|s| s.input).collect();
        let (y, _) = self.raw_forward(&inputs);
        samples
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let t = self.norm.target(&s.input, &s.label);
                (0..OUTPUT_DIM).map(|k| (y[i * OUTPUT_DIM + k] - t[k]).abs()).sum::<f64>()
            })
            .sum()
    }
}

impl StepDeducer for SurrogateModel {
    fn name(&self) -> &str {
        "surrogate"
    }

    fn deduce_step(&self, input: &StepInput) -> Result<IntervalBox> {
        self.forward(&ScopeVectorIn::from_step(input)?)?.to_box()
    }

    fn deduce_batch(&self, inputs: &[StepInput]) -> Result<Vec<IntervalBox>> {
        let xs = inputs.iter().map(ScopeVectorIn::from_step).collect::<Result<Vec<_>>>()?;
        self.forward_batch(&xs)?.iter().map(ScopeVectorOut::to_box).collect()
    }
}
