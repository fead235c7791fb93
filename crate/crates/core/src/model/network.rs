//! Forward pass with activation caching and the matching reverse pass.

use std::collections::HashMap;
use std::ops::Range;

use super::scalar::{gemm, Scalar};
use super::{time_bias_table, InputBatch, ScoreModel};
use crate::error::{Error, Result};

const LN_EPS: f64 = 1e-5;

pub(crate) struct BlockCache<F> {
    xhat: Vec<F>,
    rstd: Vec<F>,
    y: Vec<F>,
    z1: Vec<F>,
    act: Vec<F>,
}

/// Activations saved by [`forward`] for [`backward`].
pub(crate) struct Cache<F> {
    blocks: Vec<BlockCache<F>>,
    final_xhat: Vec<F>,
    final_rstd: Vec<F>,
    final_y: Vec<F>,
}

impl<F> Default for Cache<F> {
    fn default() -> Self {
        Cache { blocks: Vec::new(), final_xhat: Vec::new(), final_rstd: Vec::new(), final_y: Vec::new() }
    }
}

fn sigmoid<F: Scalar>(z: F) -> F {
    F::one() / (F::one() + (-z).exp())
}

fn layer_norm<F: Scalar>(x: &[F], n: usize, h: usize, gain: &[F], bias: &[F]) -> (Vec<F>, Vec<F>, Vec<F>) {
    let mut xhat = vec![F::zero(); n * h];
    let mut rstd = vec![F::zero(); n];
    let mut y = vec![F::zero(); n * h];
    let hf = F::of(h as f64);
    let eps = F::of(LN_EPS);
    for r in 0..n {
        let row = &x[r * h..(r + 1) * h];
        let mean = row.iter().copied().sum::<F>() / hf;
        let var = row.iter().map(|&v| (v - mean) * (v - mean)).sum::<F>() / hf;
        let rs = F::one() / (var + eps).sqrt();
        rstd[r] = rs;
        for i in 0..h {
            let xh = (row[i] - mean) * rs;
            xhat[r * h + i] = xh;
            y[r * h + i] = xh * gain[i] + bias[i];
        }
    }
    (xhat, rstd, y)
}

fn layer_norm_backward<F: Scalar>(
    dy: &[F],
    xhat: &[F],
    rstd: &[F],
    gain: &[F],
    dgain: &mut [F],
    dbias: &mut [F],
    n: usize,
    h: usize,
) -> Vec<F> {
    let mut dx = vec![F::zero(); n * h];
    let hf = F::of(h as f64);
    let mut dxhat = vec![F::zero(); h];
    for r in 0..n {
        let (dyr, xr) = (&dy[r * h..(r + 1) * h], &xhat[r * h..(r + 1) * h]);
        let mut m1 = F::zero();
        let mut m2 = F::zero();
        for i in 0..h {
            dgain[i] += dyr[i] * xr[i];
            dbias[i] += dyr[i];
            dxhat[i] = dyr[i] * gain[i];
            m1 += dxhat[i];
            m2 += dxhat[i] * xr[i];
        }
        m1 = m1 / hf;
        m2 = m2 / hf;
        for i in 0..h {
            dx[r * h + i] = rstd[r] * (dxhat[i] - m1 - xr[i] * m2);
        }
    }
    dx
}

fn broadcast_rows<F: Scalar>(bias: &[F], n: usize) -> Vec<F> {
    let mut out = Vec::with_capacity(n * bias.len());
    for _ in 0..n {
        out.extend_from_slice(bias);
    }
    out
}

fn add_column_sums<F: Scalar>(m: &[F], n: usize, cols: usize, acc: &mut [F]) {
    for r in 0..n {
        for (a, &v) in acc.iter_mut().zip(&m[r * cols..(r + 1) * cols]) {
            *a += v;
        }
    }
}

fn check_finite<F: Scalar>(v: &[F], what: impl FnOnce() -> String) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::Numeric(format!("non-finite activation in {}", what())))
    }
}

/// Logits for `rows` of the batch. Fills `cache` when given.
pub(crate) fn forward<F: Scalar>(
    model: &ScoreModel<F>,
    batch: &InputBatch<F>,
    rows: Range<usize>,
    mut cache: Option<&mut Cache<F>>,
) -> Result<Vec<F>> {
    let cfg = &model.config;
    let lay = &model.layout;
    let p = &model.params;
    let (n, h, s) = (rows.len(), cfg.hidden_dim, cfg.output_dim);

    let tbias = time_bias_table(model, &batch.times[rows.clone()]);
    let w_in = &p[lay.w_in.clone()];
    let mut hid = vec![F::zero(); n * h];
    for (local, r) in rows.clone().enumerate() {
        let out = &mut hid[local * h..(local + 1) * h];
        out.copy_from_slice(&tbias[&batch.times[r]]);
        let (idx, val) = batch.row(r);
        for (&i, &v) in idx.iter().zip(val) {
            let i = i as usize;
            if i >= cfg.input_dim {
                return Err(Error::Domain(format!(
                    "feature index {i} out of range for input dimension {}",
                    cfg.input_dim
                )));
            }
            for (o, &w) in out.iter_mut().zip(&w_in[i * h..(i + 1) * h]) {
                *o += v * w;
            }
        }
    }
    check_finite(&hid, || "input layer".into())?;

    for (bi, bl) in lay.blocks.iter().enumerate() {
        let (xhat, rstd, y) = layer_norm(&hid, n, h, &p[bl.ln_gain.clone()], &p[bl.ln_bias.clone()]);
        let mut z1 = broadcast_rows(&p[bl.b1.clone()], n);
        gemm(n, h, h, &y, false, &p[bl.w1.clone()], false, F::one(), &mut z1);
        let act: Vec<F> = z1.iter().map(|&z| z * sigmoid(z)).collect();
        let mut z2 = broadcast_rows(&p[bl.b2.clone()], n);
        gemm(n, h, h, &act, false, &p[bl.w2.clone()], false, F::one(), &mut z2);
        for (a, &d) in hid.iter_mut().zip(&z2) {
            *a += d;
        }
        check_finite(&hid, || format!("residual block {bi}"))?;
        if let Some(c) = cache.as_deref_mut() {
            c.blocks.push(BlockCache { xhat, rstd, y, z1, act });
        }
    }

    let (xhat, rstd, y) = layer_norm(&hid, n, h, &p[lay.ln_gain.clone()], &p[lay.ln_bias.clone()]);
    let mut logits = broadcast_rows(&p[lay.b_out.clone()], n);
    gemm(n, h, s, &y, false, &p[lay.w_out.clone()], false, F::one(), &mut logits);
    check_finite(&logits, || "output head".into())?;
    if let Some(c) = cache {
        c.final_xhat = xhat;
        c.final_rstd = rstd;
        c.final_y = y;
    }
    Ok(logits)
}

/// Accumulates `d loss / d params` into `grads` given `d loss / d logits`.
pub(crate) fn backward<F: Scalar>(
    model: &ScoreModel<F>,
    batch: &InputBatch<F>,
    rows: Range<usize>,
    cache: &Cache<F>,
    dlogits: &[F],
    grads: &mut [F],
) {
    let cfg = &model.config;
    let lay = &model.layout;
    let p = &model.params;
    let (n, h, s) = (rows.len(), cfg.hidden_dim, cfg.output_dim);

    gemm(h, n, s, &cache.final_y, true, dlogits, false, F::one(), &mut grads[lay.w_out.clone()]);
    add_column_sums(dlogits, n, s, &mut grads[lay.b_out.clone()]);
    let mut dy = vec![F::zero(); n * h];
    gemm(n, s, h, dlogits, false, &p[lay.w_out.clone()], true, F::zero(), &mut dy);
    let (dg, db) = split_two(grads, &lay.ln_gain, &lay.ln_bias);
    let mut dh = layer_norm_backward(&dy, &cache.final_xhat, &cache.final_rstd, &p[lay.ln_gain.clone()], dg, db, n, h);

    for (bl, bc) in lay.blocks.iter().zip(&cache.blocks).rev() {
        // dz2 is dh itself: the residual branch adds z2 unchanged
        gemm(h, n, h, &bc.act, true, &dh, false, F::one(), &mut grads[bl.w2.clone()]);
        add_column_sums(&dh, n, h, &mut grads[bl.b2.clone()]);
        let mut dz1 = vec![F::zero(); n * h];
        gemm(n, h, h, &dh, false, &p[bl.w2.clone()], true, F::zero(), &mut dz1);
        for (d, &z) in dz1.iter_mut().zip(&bc.z1) {
            let sg = sigmoid(z);
            *d *= sg + z * sg * (F::one() - sg);
        }
        gemm(h, n, h, &bc.y, true, &dz1, false, F::one(), &mut grads[bl.w1.clone()]);
        add_column_sums(&dz1, n, h, &mut grads[bl.b1.clone()]);
        let mut dyb = vec![F::zero(); n * h];
        gemm(n, h, h, &dz1, false, &p[bl.w1.clone()], true, F::zero(), &mut dyb);
        let (dg, db) = split_two(grads, &bl.ln_gain, &bl.ln_bias);
        let dx = layer_norm_backward(&dyb, &bc.xhat, &bc.rstd, &p[bl.ln_gain.clone()], dg, db, n, h);
        for (a, &d) in dh.iter_mut().zip(&dx) {
            *a += d;
        }
    }

    add_column_sums(&dh, n, h, &mut grads[lay.b_in.clone()]);
    let w_in = &mut grads[lay.w_in.clone()];
    let mut per_time: HashMap<u32, Vec<F>> = HashMap::new();
    for (local, r) in rows.enumerate() {
        let drow = &dh[local * h..(local + 1) * h];
        let (idx, val) = batch.row(r);
        for (&i, &v) in idx.iter().zip(val) {
            let i = i as usize;
            for (g, &d) in w_in[i * h..(i + 1) * h].iter_mut().zip(drow) {
                *g += v * d;
            }
        }
        let acc = per_time.entry(batch.times[r]).or_insert_with(|| vec![F::zero(); h]);
        for (a, &d) in acc.iter_mut().zip(drow) {
            *a += d;
        }
    }
    let mut times: Vec<_> = per_time.into_iter().collect();
    times.sort_by_key(|(t, _)| *t);
    for (t, dsum) in times {
        let emb = model.time_embedding(t);
        for (j, &e) in emb.iter().enumerate() {
            let row = cfg.input_dim + j;
            for (g, &d) in w_in[row * h..(row + 1) * h].iter_mut().zip(&dsum) {
                *g += e * d;
            }
        }
    }
}

fn split_two<'a, F>(v: &'a mut [F], a: &Range<usize>, b: &Range<usize>) -> (&'a mut [F], &'a mut [F]) {
    debug_assert_eq!(a.end, b.start);
    let (left, right) = v.split_at_mut(b.start);
    (&mut left[a.clone()], &mut right[..b.len()])
}
