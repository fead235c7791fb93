//! Score-entropy loss for Cayley graphs in its calculable two-term form:
//!
//! `L = sum_t [ E_{x~p_t} sum_a s_t(x)_a - E_{x~p_{t-1}} sum_a log s_t(x a)_{a^-1} ]`
//!
//! with expectations replaced by means over the trajectories of a batch.
//! Every term is a function of one network evaluation, so the loss is a sum
//! over independent rows: `sum_coef * sum_a exp(logit_a) - log_coef * logit_slot`.

use rayon::prelude::*;

use super::network::{backward, forward, Cache};
use super::{GradientSet, InputBatch, Scalar, ScoreModel, CHUNK_ROWS};
use crate::diffusion::Trajectory;
use crate::error::{Error, Result};
use crate::group::GraphSpec;

/// Network inputs together with each row's loss coefficients.
#[derive(Clone, Debug)]
pub struct LossRows<F: Scalar = f32> {
    pub(crate) inputs: InputBatch<F>,
    sum_coef: Vec<f64>,
    log_term: Vec<Option<(u32, f64)>>,
}

impl<F: Scalar> LossRows<F> {
    pub fn new() -> Self {
        LossRows { inputs: InputBatch::new(), sum_coef: Vec::new(), log_term: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    /// Builds the rows for a batch of trajectories sharing one horizon T.
    ///
    /// For each `t` in `1..=T` and trajectory `i`: one row at `x_t` carrying
    /// the `sum_a s_t` term, and rows at the neighbors `x_{t-1} a` carrying
    /// `-log s_t(x_{t-1} a)_{a^-1}`. All are weighted `1/B`. The neighbor
    /// along the taken move is `x_t` itself and shares its row.
    pub fn from_trajectories(spec: &GraphSpec, batch: &[Trajectory]) -> Result<Self> {
        let first = batch.first().ok_or_else(|| Error::Domain("loss batch is empty".into()))?;
        let horizon = first.horizon();
        if horizon == 0 {
            return Err(Error::Domain("trajectories must have at least one move".into()));
        }
        if batch.iter().any(|tr| tr.horizon() != horizon) {
            return Err(Error::Domain("all trajectories in a batch must share one horizon".into()));
        }
        let n_gen = spec.num_generators();
        let w = 1.0 / batch.len() as f64;
        let rows = batch.len() * horizon * n_gen;
        let mut out = LossRows {
            inputs: InputBatch::with_capacity(rows, 8),
            sum_coef: Vec::with_capacity(rows),
            log_term: Vec::with_capacity(rows),
        };
        for t in 1..=horizon {
            for tr in batch {
                // x_{t-1} a_t = x_t, so that neighbor row merges with the x_t row
                let taken = tr.moves[t - 1];
                out.inputs.push_state(spec, &tr.states[t], t as u32);
                out.sum_coef.push(w);
                out.log_term.push(Some((spec.inverse(taken) as u32, w)));
                let prev = &tr.states[t - 1];
                for a in (0..n_gen).filter(|&a| a != taken) {
                    out.inputs.push_state(spec, &spec.step(prev, a), t as u32);
                    out.sum_coef.push(0.0);
                    out.log_term.push(Some((spec.inverse(a) as u32, w)));
                }
            }
        }
        Ok(out)
    }

    fn row_loss(&self, r: usize, logits: &[F]) -> f64 {
        let mut l = 0.0;
        if self.sum_coef[r] != 0.0 {
            l += self.sum_coef[r] * logits.iter().map(|v| v.as_f64().exp()).sum::<f64>();
        }
        if let Some((slot, c)) = self.log_term[r] {
            l -= c * logits[slot as usize].as_f64();
        }
        l
    }

    fn row_grad(&self, r: usize, logits: &[F], out: &mut [F]) {
        let c = self.sum_coef[r];
        for (o, &v) in out.iter_mut().zip(logits) {
            *o = F::of(c * v.as_f64().exp());
        }
        if let Some((slot, c)) = self.log_term[r] {
            out[slot as usize] -= F::of(c);
        }
    }
}

impl<F: Scalar> Default for LossRows<F> {
    fn default() -> Self {
        Self::new()
    }
}

fn check_dims<F: Scalar>(model: &ScoreModel<F>, spec: &GraphSpec) -> Result<()> {
    let cfg = model.config();
    if cfg.input_dim != spec.feature_dim() || cfg.output_dim != spec.num_generators() {
        return Err(Error::Domain(format!(
            "model ({}→{}) does not fit {} ({}→{})",
            cfg.input_dim,
            cfg.output_dim,
            spec.label(),
            spec.feature_dim(),
            spec.num_generators()
        )));
    }
    Ok(())
}

fn chunk_loss_grad<F: Scalar>(
    model: &ScoreModel<F>,
    rows: &LossRows<F>,
    range: std::ops::Range<usize>,
    grads: &mut [F],
) -> Result<f64> {
    let s = model.config().output_dim;
    let mut cache = Cache::default();
    let logits = forward(model, &rows.inputs, range.clone(), Some(&mut cache))?;
    let mut dlogits = vec![F::zero(); logits.len()];
    let mut loss = 0.0;
    for (local, r) in range.clone().enumerate() {
        let lg = &logits[local * s..(local + 1) * s];
        loss += rows.row_loss(r, lg);
        rows.row_grad(r, lg, &mut dlogits[local * s..(local + 1) * s]);
    }
    backward(model, &rows.inputs, range, &cache, &dlogits, grads);
    Ok(loss)
}

/// Loss and exact gradient over prepared rows, split into `shards`
/// contiguous shards evaluated in parallel and reduced in shard order.
/// Results depend only on the shard count, not on scheduling.
pub fn rows_loss_and_grad<F: Scalar>(
    model: &ScoreModel<F>,
    rows: &LossRows<F>,
    shards: usize,
) -> Result<(f64, GradientSet<F>)> {
    let n = rows.len();
    let shards = shards.clamp(1, n.div_ceil(CHUNK_ROWS).max(1));
    let per_shard = n.div_ceil(shards).div_ceil(CHUNK_ROWS) * CHUNK_ROWS;
    let bounds: Vec<(usize, usize)> = (0..shards)
        .map(|k| ((k * per_shard).min(n), ((k + 1) * per_shard).min(n)))
        .filter(|(a, b)| a < b)
        .collect();
    let partials: Vec<Result<(f64, Vec<F>)>> = bounds
        .par_iter()
        .map(|&(lo, hi)| {
            let mut g = vec![F::zero(); model.num_params()];
            let mut loss = 0.0;
            let mut start = lo;
            while start < hi {
                let end = (start + CHUNK_ROWS).min(hi);
                loss += chunk_loss_grad(model, rows, start..end, &mut g)?;
                start = end;
            }
            Ok((loss, g))
        })
        .collect();
    let mut total = 0.0;
    let mut grads = GradientSet::zeros(model.num_params());
    for part in partials {
        let (l, g) = part?;
        total += l;
        for (a, b) in grads.values.iter_mut().zip(g) {
            *a += b;
        }
    }
    if !total.is_finite() {
        return Err(Error::Numeric(format!("loss is not finite ({total})")));
    }
    Ok((total, grads))
}

/// Loss over prepared rows without gradients.
pub fn rows_loss<F: Scalar>(model: &ScoreModel<F>, rows: &LossRows<F>) -> Result<f64> {
    let s = model.config().output_dim;
    let logits = model.logits(&rows.inputs)?;
    let total: f64 = (0..rows.len()).map(|r| rows.row_loss(r, &logits[r * s..(r + 1) * s])).sum();
    if !total.is_finite() {
        return Err(Error::Numeric(format!("loss is not finite ({total})")));
    }
    Ok(total)
}

/// Score-entropy loss of a trajectory batch and its exact gradient.
pub fn loss_and_grad<F: Scalar>(
    model: &ScoreModel<F>,
    batch: &[Trajectory],
    spec: &GraphSpec,
) -> Result<(f64, GradientSet<F>)> {
    loss_and_grad_sharded(model, batch, spec, 1)
}

pub fn loss_and_grad_sharded<F: Scalar>(
    model: &ScoreModel<F>,
    batch: &[Trajectory],
    spec: &GraphSpec,
    shards: usize,
) -> Result<(f64, GradientSet<F>)> {
    check_dims(model, spec)?;
    let rows = LossRows::from_trajectories(spec, batch)?;
    rows_loss_and_grad(model, &rows, shards)
}

/// Loss only.
pub fn loss_value<F: Scalar>(model: &ScoreModel<F>, batch: &[Trajectory], spec: &GraphSpec) -> Result<f64> {
    check_dims(model, spec)?;
    let rows = LossRows::from_trajectories(spec, batch)?;
    rows_loss(model, &rows)
}
