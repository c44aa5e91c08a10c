use rayon::prelude::*;

use super::mlp::{gather_columns, Mlp, Real, CHUNK};
use crate::error::{Error, Result};

fn clamp<T: Real>(v: T, delta: T) -> T {
    v.max(-delta).min(delta)
}

/// Mean of `|clamp(pred, ±δ) − clamp(target, ±δ)|`.
pub fn clamped_l1_loss<T: Real>(pred: &[T], target: &[T], delta: T) -> T {
    if pred.is_empty() {
        return T::zero();
    }
    let total = pred
        .iter()
        .zip(target)
        .fold(T::zero(), |acc, (&p, &t)| acc + (clamp(p, delta) - clamp(t, delta)).abs());
    total / T::from_f64(pred.len() as f64)
}

/// Per-sample subgradient of the summed loss scaled by `scale`: the sign of
/// the clamped difference, zero only where both sides clamp to the same
/// value. A prediction beyond `±δ` whose target is not still receives the
/// sign, which keeps saturated outputs from getting stuck.
pub(crate) fn loss_subgradient<T: Real>(pred: &[T], target: &[T], delta: T, scale: T) -> (T, Vec<T>) {
    let mut total = T::zero();
    let g = pred
        .iter()
        .zip(target)
        .map(|(&p, &t)| {
            let diff = clamp(p, delta) - clamp(t, delta);
            total = total + diff.abs();
            if diff != T::zero() {
                scale * diff.signum()
            } else {
                T::zero()
            }
        })
        .collect();
    (total, g)
}

/// Loss and parameter gradient for one chunk of columns.
pub(crate) fn chunk_gradient<T: Real>(net: &Mlp<T>, x: Vec<T>, targets: &[T], delta: T, scale: T) -> (T, Vec<T>) {
    let n = targets.len();
    let tape = net.forward_tape(x, n);
    let pred = net.tape_output(&tape).to_vec();
    let (loss, d_out) = loss_subgradient(&pred, targets, delta, scale);
    let mut grad = vec![T::zero(); net.param_count()];
    net.backward_tape(&tape, d_out, Some(&mut grad), false);
    (loss, grad)
}

/// Sums per-chunk results in chunk order.
pub(crate) fn reduce_chunks<T: Real>(parts: Vec<(T, Vec<T>)>, len: usize) -> (T, Vec<T>) {
    let mut grad = vec![T::zero(); len];
    let mut loss = T::zero();
    for (l, g) in parts {
        loss = loss + l;
        grad.iter_mut().zip(&g).for_each(|(a, &b)| *a = *a + b);
    }
    (loss, grad)
}

/// Mean clamped-L1 loss over `n` columns and its gradient with respect to
/// every parameter. Chunks run in parallel and are summed in index order.
pub fn backward_params<T: Real>(net: &Mlp<T>, x: &[T], n: usize, targets: &[T], delta: T) -> Result<(T, Vec<T>)> {
    if x.len() != net.input_dim() * n || targets.len() != n {
        return Err(Error::DimensionMismatch {
            what: "training batch",
            expected: n,
            found: targets.len(),
        });
    }
    if n == 0 {
        return Ok((T::zero(), vec![T::zero(); net.param_count()]));
    }
    let scale = T::one() / T::from_f64(n as f64);
    let parts: Vec<(T, Vec<T>)> = (0..n.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let (lo, hi) = (c * CHUNK, ((c + 1) * CHUNK).min(n));
            chunk_gradient(net, gather_columns(x, n, lo, hi), &targets[lo..hi], delta, scale)
        })
        .collect();
    let (loss, grad) = reduce_chunks(parts, net.param_count());
    Ok((loss * scale, grad))
}
