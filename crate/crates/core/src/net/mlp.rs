use std::fmt::Debug;

use num_traits::Float;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Columns per work unit in batched evaluation and training.
pub const CHUNK: usize = 256;

pub trait Real: Float + Debug + Default + Send + Sync + 'static {
    fn from_f64(v: f64) -> Self;
    fn as_f64(self) -> f64;
}

impl Real for f32 {
    fn from_f64(v: f64) -> Self {
        v as f32
    }
    fn as_f64(self) -> f64 {
        self as f64
    }
}

impl Real for f64 {
    fn from_f64(v: f64) -> Self {
        v
    }
    fn as_f64(self) -> f64 {
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct LayerShape {
    rows: usize,
    cols: usize,
    w: usize,
    b: usize,
}

/// ReLU hidden layers and a tanh output over one flat parameter vector
/// (per layer: row-major weights, then biases).
#[derive(Clone, Debug, PartialEq)]
pub struct Mlp<T> {
    dims: Vec<usize>,
    shapes: Vec<LayerShape>,
    params: Vec<T>,
}

fn shapes_for(dims: &[usize]) -> Vec<LayerShape> {
    let mut off = 0;
    dims.windows(2)
        .map(|d| {
            let s = LayerShape {
                rows: d[1],
                cols: d[0],
                w: off,
                b: off + d[0] * d[1],
            };
            off += d[0] * d[1] + d[1];
            s
        })
        .collect()
}

/// `[input_dim, width × layers, 1]` with He-initialized hidden layers and
/// a Xavier-initialized output layer, zero biases.
pub fn mlp_init<T: Real>(input_dim: usize, width: usize, layers: usize, seed: u64) -> Result<Mlp<T>> {
    if input_dim == 0 || width == 0 || layers == 0 {
        return Err(Error::InvalidArgument("network dimensions must be at least 1".into()));
    }
    let mut dims = vec![input_dim];
    dims.extend(std::iter::repeat_n(width, layers));
    dims.push(1);
    let shapes = shapes_for(&dims);
    let total = shapes.last().map_or(0, |s| s.b + s.rows);
    let mut params = vec![T::zero(); total];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let last = shapes.len() - 1;
    for (l, s) in shapes.iter().enumerate() {
        let std = if l == last {
            (2.0 / (s.cols + s.rows) as f64).sqrt()
        } else {
            (2.0 / s.cols as f64).sqrt()
        };
        let dist = Normal::new(0.0, std).expect("positive std");
        for p in &mut params[s.w..s.b] {
            *p = T::from_f64(dist.sample(&mut rng));
        }
    }
    Ok(Mlp { dims, shapes, params })
}

/// Activations of one chunk, kept for the backward pass.
pub(crate) struct Tape<T> {
    n: usize,
    /// `acts[0]` is the input, `acts[l + 1]` the output of layer `l`.
    acts: Vec<Vec<T>>,
}

impl<T: Real> Mlp<T> {
    /// Rebuilds from dims and a parameter vector.
    pub fn from_parts(dims: Vec<usize>, params: Vec<T>) -> Result<Self> {
        if dims.len() < 2 || dims.iter().any(|&d| d == 0) || dims.last() != Some(&1) {
            return Err(Error::Format(format!("invalid layer dims {dims:?}")));
        }
        let shapes = shapes_for(&dims);
        let total = shapes.last().map_or(0, |s| s.b + s.rows);
        if params.len() != total {
            return Err(Error::DimensionMismatch {
                what: "parameter count",
                expected: total,
                found: params.len(),
            });
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::Numeric("non-finite network parameter".into()));
        }
        Ok(Self { dims, shapes, params })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn input_dim(&self) -> usize {
        self.dims[0]
    }

    pub fn params(&self) -> &[T] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [T] {
        &mut self.params
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    pub fn cast<U: Real>(&self) -> Mlp<U> {
        Mlp {
            dims: self.dims.clone(),
            shapes: self.shapes.clone(),
            params: self.params.iter().map(|p| U::from_f64(p.as_f64())).collect(),
        }
    }

    fn check_batch(&self, x: &[T], n: usize) -> Result<()> {
        if x.len() != self.input_dim() * n {
            return Err(Error::DimensionMismatch {
                what: "batch matrix size",
                expected: self.input_dim() * n,
                found: x.len(),
            });
        }
        Ok(())
    }

    /// Evaluates `n` columns of the `input_dim × n` row-major matrix `x`.
    /// Each output depends only on its own column, with the same summation
    /// order for any `n`.
    pub fn forward_batch(&self, x: &[T], n: usize) -> Result<Vec<T>> {
        self.check_batch(x, n)?;
        if n <= CHUNK {
            return Ok(self.forward_tape(x.to_vec(), n).acts.pop().expect("output"));
        }
        let parts: Vec<Vec<T>> = (0..n.div_ceil(CHUNK))
            .into_par_iter()
            .map(|c| {
                let (lo, hi) = (c * CHUNK, ((c + 1) * CHUNK).min(n));
                self.forward_tape(gather_columns(x, n, lo, hi), hi - lo).acts.pop().expect("output")
            })
            .collect();
        Ok(parts.concat())
    }

    /// Multiplies the first-layer weights reading inputs `3..` (the code) by
    /// `gain`.
    pub fn scale_code_inputs(&mut self, gain: T) {
        let s = self.shapes[0];
        for r in 0..s.rows {
            for w in &mut self.params[s.w + r * s.cols + 3..s.w + (r + 1) * s.cols] {
                *w = *w * gain;
            }
        }
    }

    pub fn forward_point(&self, input: &[T]) -> Result<T> {
        Ok(self.forward_batch(input, 1)?[0])
    }

    pub(crate) fn tape_output<'a>(&self, tape: &'a Tape<T>) -> &'a [T] {
        tape.acts.last().expect("output")
    }

    pub(crate) fn forward_tape(&self, x: Vec<T>, n: usize) -> Tape<T> {
        let mut acts = Vec::with_capacity(self.shapes.len() + 1);
        acts.push(x);
        let last = self.shapes.len() - 1;
        for (l, s) in self.shapes.iter().enumerate() {
            let mut y = vec![T::zero(); s.rows * n];
            affine(&self.params[s.w..s.b], &self.params[s.b..s.b + s.rows], s.cols, &acts[l], n, &mut y);
            if l == last {
                y.iter_mut().for_each(|v| *v = v.tanh());
            } else {
                y.iter_mut().for_each(|v| *v = v.max(T::zero()));
            }
            acts.push(y);
        }
        Tape { n, acts }
    }

    /// Back-propagates `d_out` (one value per column) through a recorded
    /// chunk. Parameter gradients are added into `grad` when given; the
    /// input gradient is returned when `want_input` is set.
    pub(crate) fn backward_tape(&self, tape: &Tape<T>, d_out: Vec<T>, mut grad: Option<&mut [T]>, want_input: bool) -> Option<Vec<T>> {
        let n = tape.n;
        let last = self.shapes.len() - 1;
        let mut delta = d_out;
        for l in (0..self.shapes.len()).rev() {
            let s = self.shapes[l];
            let y = &tape.acts[l + 1];
            if l == last {
                delta.iter_mut().zip(y).for_each(|(d, &v)| *d = *d * (T::one() - v * v));
            } else {
                delta.iter_mut().zip(y).for_each(|(d, &v)| {
                    if v <= T::zero() {
                        *d = T::zero();
                    }
                });
            }
            let x = &tape.acts[l];
            if let Some(g) = grad.as_deref_mut() {
                let (gw, gb) = g[s.w..s.b + s.rows].split_at_mut(s.b - s.w);
                for o in 0..s.rows {
                    let d = &delta[o * n..(o + 1) * n];
                    gb[o] = gb[o] + sum(d);
                    for k in 0..s.cols {
                        let i = o * s.cols + k;
                        gw[i] = gw[i] + dot(d, &x[k * n..(k + 1) * n]);
                    }
                }
            }
            if l > 0 || want_input {
                let mut dx = vec![T::zero(); s.cols * n];
                let w = &self.params[s.w..s.b];
                for o in 0..s.rows {
                    let d = &delta[o * n..(o + 1) * n];
                    for k in 0..s.cols {
                        axpy(w[o * s.cols + k], d, &mut dx[k * n..(k + 1) * n]);
                    }
                }
                delta = dx;
            }
        }
        want_input.then_some(delta)
    }

    /// Outputs and `∂f/∂input` for `n` columns; the gradient is returned
    /// row-major `input_dim × n`.
    pub fn input_gradient_batch(&self, x: &[T], n: usize) -> Result<(Vec<T>, Vec<T>)> {
        self.check_batch(x, n)?;
        let run = |cols: Vec<T>, m: usize| {
            let tape = self.forward_tape(cols, m);
            let out = tape.acts.last().expect("output").clone();
            let g = self.backward_tape(&tape, vec![T::one(); m], None, true).expect("input gradient");
            (out, g)
        };
        if n <= CHUNK {
            return Ok(run(x.to_vec(), n));
        }
        let parts: Vec<(Vec<T>, Vec<T>)> = (0..n.div_ceil(CHUNK))
            .into_par_iter()
            .map(|c| {
                let (lo, hi) = (c * CHUNK, ((c + 1) * CHUNK).min(n));
                run(gather_columns(x, n, lo, hi), hi - lo)
            })
            .collect();
        let dim = self.input_dim();
        let mut out = Vec::with_capacity(n);
        let mut grad = vec![T::zero(); dim * n];
        for (c, (o, g)) in parts.into_iter().enumerate() {
            let (lo, m) = (c * CHUNK, o.len());
            out.extend(o);
            for k in 0..dim {
                grad[k * n + lo..k * n + lo + m].copy_from_slice(&g[k * m..(k + 1) * m]);
            }
        }
        Ok((out, grad))
    }

    /// `∂f/∂q` at one point, where the input is `(q, z)`.
    pub fn input_gradient(&self, q: [T; 3], z: &[T]) -> Result<[T; 3]> {
        let mut x = q.to_vec();
        x.extend_from_slice(z);
        let (_, g) = self.input_gradient_batch(&x, 1)?;
        Ok([g[0], g[1], g[2]])
    }
}

/// Columns `lo..hi` of a row-major `rows × n` matrix.
pub(crate) fn gather_columns<T: Copy>(x: &[T], n: usize, lo: usize, hi: usize) -> Vec<T> {
    x.chunks_exact(n).flat_map(|row| row[lo..hi].iter().copied()).collect()
}

/// `y = W x + b` over `n` columns; each entry is `b + Σ_k w_k x_k` in `k` order.
fn affine<T: Real>(w: &[T], b: &[T], cols: usize, x: &[T], n: usize, y: &mut [T]) {
    let rows = b.len();
    let mut o = 0;
    while o + 4 <= rows {
        let (y0, rest) = y[o * n..(o + 4) * n].split_at_mut(n);
        let (y1, rest) = rest.split_at_mut(n);
        let (y2, y3) = rest.split_at_mut(n);
        y0.fill(b[o]);
        y1.fill(b[o + 1]);
        y2.fill(b[o + 2]);
        y3.fill(b[o + 3]);
        for k in 0..cols {
            let (w0, w1, w2, w3) = (w[o * cols + k], w[(o + 1) * cols + k], w[(o + 2) * cols + k], w[(o + 3) * cols + k]);
            let xr = &x[k * n..(k + 1) * n];
            for ((((a0, a1), a2), a3), &v) in y0.iter_mut().zip(y1.iter_mut()).zip(y2.iter_mut()).zip(y3.iter_mut()).zip(xr) {
                *a0 = *a0 + w0 * v;
                *a1 = *a1 + w1 * v;
                *a2 = *a2 + w2 * v;
                *a3 = *a3 + w3 * v;
            }
        }
        o += 4;
    }
    while o < rows {
        let yr = &mut y[o * n..(o + 1) * n];
        yr.fill(b[o]);
        for k in 0..cols {
            axpy(w[o * cols + k], &x[k * n..(k + 1) * n], yr);
        }
        o += 1;
    }
}

fn axpy<T: Real>(a: T, x: &[T], y: &mut [T]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi = *yi + a * xi;
    }
}

/// Eight interleaved partial sums, combined in a fixed order.
fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    let mut acc = [T::zero(); 8];
    let mut ca = a.chunks_exact(8);
    let mut cb = b.chunks_exact(8);
    for (x, y) in (&mut ca).zip(&mut cb) {
        for i in 0..8 {
            acc[i] = acc[i] + x[i] * y[i];
        }
    }
    for (i, (x, y)) in ca.remainder().iter().zip(cb.remainder()).enumerate() {
        acc[i] = acc[i] + *x * *y;
    }
    ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7]))
}

fn sum<T: Real>(a: &[T]) -> T {
    let mut acc = [T::zero(); 8];
    let mut c = a.chunks_exact(8);
    for x in &mut c {
        for i in 0..8 {
            acc[i] = acc[i] + x[i];
        }
    }
    for (i, x) in c.remainder().iter().enumerate() {
        acc[i] = acc[i] + *x;
    }
    ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7]))
}
