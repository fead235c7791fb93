//! Residual MLP score network.
//!
//! Input is the sparse one-hot state encoding concatenated with a sinusoidal
//! embedding of the diffusion time. An input affine layer lifts it to the
//! hidden width, `n_blocks` residual blocks of the form
//! `h + W2 silu(W1 norm(h) + b1) + b2` follow, and a final normalization and
//! affine head produce one logit per generator. Scores are `exp(logit)`.
//!
//! Parameters live in one flat buffer; [`Layout`] names the tensor ranges in
//! declaration order, which is also the checkpoint order.

mod adam;
mod checkpoint;
mod loss;
mod network;
pub mod scalar;

use std::collections::HashMap;
use std::ops::Range;

use rand::SeedableRng;
use rayon::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Uniform};

use crate::error::{Error, Result};
use crate::group::{GraphSpec, State};
use crate::score::ScoreSource;

pub use adam::{optimizer_step, AdamState};
pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use loss::{loss_and_grad, loss_and_grad_sharded, loss_value, rows_loss, rows_loss_and_grad, LossRows};
pub use scalar::Scalar;

pub const DEFAULT_HIDDEN: usize = 256;
pub const DEFAULT_BLOCKS: usize = 4;
pub const DEFAULT_TIME_EMBED: usize = 16;
pub const DEFAULT_MAX_PERIOD: f32 = 1000.0;

/// Rows per forward/backward chunk; bounds activation memory.
pub(crate) const CHUNK_ROWS: usize = 256;

#[derive(Clone, Debug, PartialEq)]
pub struct ModelConfig {
    pub input_dim: usize,
    pub output_dim: usize,
    pub hidden_dim: usize,
    pub n_blocks: usize,
    pub time_embed_dim: usize,
    pub max_period: f32,
}

impl ModelConfig {
    pub fn new(input_dim: usize, output_dim: usize) -> Self {
        ModelConfig {
            input_dim,
            output_dim,
            hidden_dim: DEFAULT_HIDDEN,
            n_blocks: DEFAULT_BLOCKS,
            time_embed_dim: DEFAULT_TIME_EMBED,
            max_period: DEFAULT_MAX_PERIOD,
        }
    }

    pub fn for_spec(spec: &GraphSpec) -> Self {
        Self::new(spec.feature_dim(), spec.num_generators())
    }

    pub fn hidden(mut self, hidden_dim: usize) -> Self {
        self.hidden_dim = hidden_dim;
        self
    }

    pub fn blocks(mut self, n_blocks: usize) -> Self {
        self.n_blocks = n_blocks;
        self
    }

    pub fn time_embed(mut self, dim: usize) -> Self {
        self.time_embed_dim = dim;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.output_dim == 0 || self.hidden_dim == 0 {
            return Err(Error::Domain("model dimensions must be positive".into()));
        }
        if !(self.max_period.is_finite() && self.max_period > 0.0) {
            return Err(Error::Domain("max_period must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub(crate) struct BlockLayout {
    pub ln_gain: Range<usize>,
    pub ln_bias: Range<usize>,
    pub w1: Range<usize>,
    pub b1: Range<usize>,
    pub w2: Range<usize>,
    pub b2: Range<usize>,
}

/// Offsets of every tensor in the flat parameter buffer.
#[derive(Clone, Debug, PartialEq)]
pub struct Layout {
    pub(crate) w_in: Range<usize>,
    pub(crate) b_in: Range<usize>,
    pub(crate) blocks: Vec<BlockLayout>,
    pub(crate) ln_gain: Range<usize>,
    pub(crate) ln_bias: Range<usize>,
    pub(crate) w_out: Range<usize>,
    pub(crate) b_out: Range<usize>,
    total: usize,
}

impl Layout {
    pub fn new(cfg: &ModelConfig) -> Self {
        let mut next = 0usize;
        let mut take = |len: usize| {
            let r = next..next + len;
            next += len;
            r
        };
        let h = cfg.hidden_dim;
        let w_in = take((cfg.input_dim + cfg.time_embed_dim) * h);
        let b_in = take(h);
        let blocks = (0..cfg.n_blocks)
            .map(|_| BlockLayout {
                ln_gain: take(h),
                ln_bias: take(h),
                w1: take(h * h),
                b1: take(h),
                w2: take(h * h),
                b2: take(h),
            })
            .collect();
        let ln_gain = take(h);
        let ln_bias = take(h);
        let w_out = take(h * cfg.output_dim);
        let b_out = take(cfg.output_dim);
        Layout { w_in, b_in, blocks, ln_gain, ln_bias, w_out, b_out, total: next }
    }

    pub fn total(&self) -> usize {
        self.total
    }

    /// `(name, range)` for every tensor in declaration order.
    pub fn tensors(&self) -> Vec<(String, Range<usize>)> {
        let mut v = vec![("input.weight".to_string(), self.w_in.clone()), ("input.bias".into(), self.b_in.clone())];
        for (i, b) in self.blocks.iter().enumerate() {
            v.push((format!("block{i}.norm.gain"), b.ln_gain.clone()));
            v.push((format!("block{i}.norm.bias"), b.ln_bias.clone()));
            v.push((format!("block{i}.fc1.weight"), b.w1.clone()));
            v.push((format!("block{i}.fc1.bias"), b.b1.clone()));
            v.push((format!("block{i}.fc2.weight"), b.w2.clone()));
            v.push((format!("block{i}.fc2.bias"), b.b2.clone()));
        }
        v.push(("final.norm.gain".into(), self.ln_gain.clone()));
        v.push(("final.norm.bias".into(), self.ln_bias.clone()));
        v.push(("head.weight".into(), self.w_out.clone()));
        v.push(("head.bias".into(), self.b_out.clone()));
        v
    }
}

/// Parameters of the score network.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoreModel<F: Scalar = f32> {
    config: ModelConfig,
    layout: Layout,
    params: Vec<F>,
}

/// One gradient entry per parameter, in the model's layout.
#[derive(Clone, Debug, PartialEq)]
pub struct GradientSet<F: Scalar = f32> {
    pub values: Vec<F>,
}

impl<F: Scalar> GradientSet<F> {
    pub fn zeros(n: usize) -> Self {
        GradientSet { values: vec![F::zero(); n] }
    }

    pub fn is_congruent(&self, model: &ScoreModel<F>) -> bool {
        self.values.len() == model.num_params()
    }
}

impl<F: Scalar> ScoreModel<F> {
    /// Seeded initialization: LeCun-uniform affine weights (the head scaled
    /// down by 10), normalization gains 1, all biases 0.
    pub fn init(config: ModelConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let layout = Layout::new(&config);
        let mut params = vec![F::zero(); layout.total()];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut fill = |range: &Range<usize>, fan_in: usize, scale: f64, params: &mut [F]| {
            let bound = scale * (3.0 / fan_in as f64).sqrt();
            let dist = Uniform::new_inclusive(-bound, bound).expect("finite bound");
            for p in &mut params[range.clone()] {
                *p = F::of(dist.sample(&mut rng));
            }
        };
        let h = config.hidden_dim;
        fill(&layout.w_in, config.input_dim + config.time_embed_dim, 1.0, &mut params);
        for b in &layout.blocks {
            fill(&b.w1, h, 1.0, &mut params);
            fill(&b.w2, h, 1.0, &mut params);
            params[b.ln_gain.clone()].iter_mut().for_each(|g| *g = F::one());
        }
        params[layout.ln_gain.clone()].iter_mut().for_each(|g| *g = F::one());
        fill(&layout.w_out, h, 0.1, &mut params);
        Ok(ScoreModel { config, layout, params })
    }

    pub fn from_params(config: ModelConfig, params: Vec<F>) -> Result<Self> {
        config.validate()?;
        let layout = Layout::new(&config);
        if params.len() != layout.total() {
            return Err(Error::Format(format!(
                "parameter count {} does not match the {} required by the dimensions",
                params.len(),
                layout.total()
            )));
        }
        Ok(ScoreModel { config, layout, params })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn params(&self) -> &[F] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [F] {
        &mut self.params
    }

    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    pub fn all_finite(&self) -> bool {
        self.params.iter().all(|p| p.is_finite())
    }

    /// Converts the parameters to another precision.
    pub fn cast<G: Scalar>(&self) -> ScoreModel<G> {
        ScoreModel {
            config: self.config.clone(),
            layout: self.layout.clone(),
            params: self.params.iter().map(|p| G::of(p.as_f64())).collect(),
        }
    }

    /// Zeroes the head weights and sets every output bias to `ln c`, so the
    /// network scores `c` on every input.
    pub fn with_constant_score(mut self, c: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::Domain(format!("constant score must be positive, got {c}")));
        }
        self.params[self.layout.w_out.clone()].iter_mut().for_each(|w| *w = F::zero());
        self.params[self.layout.b_out.clone()].iter_mut().for_each(|b| *b = F::of(c.ln()));
        Ok(self)
    }

    /// Sinusoidal embedding of `t`: `sin(t w_i)` then `cos(t w_i)` with
    /// `w_i = max_period^(-i / half)`.
    pub fn time_embedding(&self, t: u32) -> Vec<F> {
        time_embedding(t, self.config.time_embed_dim, self.config.max_period as f64)
    }

    /// Logits for every row of the batch, row-major `rows x output_dim`.
    pub fn logits(&self, batch: &InputBatch<F>) -> Result<Vec<F>> {
        let starts: Vec<usize> = (0..batch.len()).step_by(CHUNK_ROWS).collect();
        let parts: Vec<Vec<F>> = starts
            .par_iter()
            .map(|&start| network::forward(self, batch, start..(start + CHUNK_ROWS).min(batch.len()), None))
            .collect::<Result<_>>()?;
        Ok(parts.concat())
    }

    /// Positive scores `exp(logit)` in `f64`, row-major.
    pub fn scores(&self, batch: &InputBatch<F>) -> Result<Vec<f64>> {
        let logits = self.logits(batch)?;
        let scores: Vec<f64> = logits.iter().map(|l| l.as_f64().exp()).collect();
        if let Some(i) = scores.iter().position(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(Error::Numeric(format!(
                "score overflow at row {}, generator {}",
                i / self.config.output_dim,
                i % self.config.output_dim
            )));
        }
        Ok(scores)
    }

    /// Scores for one dense feature vector at time `t`.
    pub fn score_forward(&self, features: &[f32], t: u32) -> Result<Vec<f64>> {
        if features.len() != self.config.input_dim {
            return Err(Error::Domain(format!(
                "feature vector has length {}, model expects {}",
                features.len(),
                self.config.input_dim
            )));
        }
        let mut batch = InputBatch::new();
        batch.push_dense(features, t);
        self.scores(&batch)
    }
}

pub(crate) fn time_embedding<F: Scalar>(t: u32, dim: usize, max_period: f64) -> Vec<F> {
    let half = dim / 2;
    let mut emb = vec![F::zero(); dim];
    for i in 0..half {
        let freq = max_period.powf(-(i as f64) / half as f64);
        let arg = t as f64 * freq;
        emb[i] = F::of(arg.sin());
        emb[half + i] = F::of(arg.cos());
    }
    emb
}

/// Sparse network input: per row, the non-zero feature entries and the
/// diffusion time.
#[derive(Clone, Debug, Default)]
pub struct InputBatch<F: Scalar = f32> {
    pub(crate) indices: Vec<u32>,
    pub(crate) values: Vec<F>,
    pub(crate) offsets: Vec<usize>,
    pub(crate) times: Vec<u32>,
}

impl<F: Scalar> InputBatch<F> {
    pub fn new() -> Self {
        InputBatch { indices: Vec::new(), values: Vec::new(), offsets: vec![0], times: Vec::new() }
    }

    pub fn with_capacity(rows: usize, nnz_per_row: usize) -> Self {
        let mut b = InputBatch {
            indices: Vec::with_capacity(rows * nnz_per_row),
            values: Vec::with_capacity(rows * nnz_per_row),
            offsets: Vec::with_capacity(rows + 1),
            times: Vec::with_capacity(rows),
        };
        b.offsets.push(0);
        b
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Appends the one-hot encoding of a (valid) state.
    pub fn push_state(&mut self, spec: &GraphSpec, x: &State, t: u32) {
        let before = self.indices.len();
        spec.feature_indices(x, &mut self.indices);
        self.values.resize(self.indices.len(), F::one());
        debug_assert!(self.indices.len() > before);
        self.offsets.push(self.indices.len());
        self.times.push(t);
    }

    pub fn push_dense(&mut self, features: &[f32], t: u32) {
        for (i, &v) in features.iter().enumerate() {
            if v != 0.0 {
                self.indices.push(i as u32);
                self.values.push(F::of(v as f64));
            }
        }
        self.offsets.push(self.indices.len());
        self.times.push(t);
    }

    pub(crate) fn row(&self, r: usize) -> (&[u32], &[F]) {
        let range = self.offsets[r]..self.offsets[r + 1];
        (&self.indices[range.clone()], &self.values[range])
    }
}

/// Time-embedding rows of the input weight folded into per-time bias
/// vectors: `b_in + sum_j emb_j(t) W_in[feature_dim + j]`.
pub(crate) fn time_bias_table<F: Scalar>(
    model: &ScoreModel<F>,
    times: &[u32],
) -> HashMap<u32, Vec<F>> {
    let cfg = &model.config;
    let h = cfg.hidden_dim;
    let w_in = &model.params[model.layout.w_in.clone()];
    let b_in = &model.params[model.layout.b_in.clone()];
    let mut table = HashMap::new();
    for &t in times {
        table.entry(t).or_insert_with(|| {
            let emb = model.time_embedding(t);
            let mut v = b_in.to_vec();
            for (j, &e) in emb.iter().enumerate() {
                let row = &w_in[(cfg.input_dim + j) * h..(cfg.input_dim + j + 1) * h];
                for (acc, &w) in v.iter_mut().zip(row) {
                    *acc += e * w;
                }
            }
            v
        });
    }
    table
}

impl<F: Scalar> ScoreSource for ScoreModel<F> {
    fn score_batch(&self, spec: &GraphSpec, states: &[State], t: usize) -> Result<Vec<f64>> {
        if spec.feature_dim() != self.config.input_dim || spec.num_generators() != self.config.output_dim {
            return Err(Error::Format(format!(
                "model dimensions ({} features, {} outputs) do not match {} ({} features, {} generators)",
                self.config.input_dim,
                self.config.output_dim,
                spec.label(),
                spec.feature_dim(),
                spec.num_generators()
            )));
        }
        let mut batch = InputBatch::with_capacity(states.len(), 8);
        for x in states {
            batch.push_state(spec, x, t as u32);
        }
        self.scores(&batch)
    }
}
