use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::adam::AdamState;
use super::loss::{chunk_gradient, reduce_chunks};
use super::mlp::{mlp_init, Mlp, CHUNK};
use crate::dataset::Dataset;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    /// Clamp distance in normalized units.
    pub delta: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub validation_fraction: f64,
    pub hidden_layers: usize,
    pub hidden_width: usize,
    /// Learning rate multiplier reached linearly by the last epoch; 1 keeps it constant.
    pub final_lr_fraction: f64,
    /// Multiplier on the initial first-layer weights that read the code.
    pub code_init_gain: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-4,
            delta: 0.1,
            epochs: 200,
            batch_size: 1024,
            seed: 0,
            validation_fraction: 0.1,
            hidden_layers: 8,
            hidden_width: 128,
            final_lr_fraction: 1.0,
            code_init_gain: 0.1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) || !(self.delta > 0.0) {
            return Err(Error::InvalidArgument("learning rate and delta must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.validation_fraction) {
            return Err(Error::InvalidArgument("validation fraction must be in [0, 1)".into()));
        }
        if self.batch_size == 0 || self.hidden_layers == 0 || self.hidden_width == 0 {
            return Err(Error::InvalidArgument("batch size and layer sizes must be positive".into()));
        }
        if !(self.final_lr_fraction > 0.0) {
            return Err(Error::InvalidArgument("final learning-rate fraction must be positive".into()));
        }
        if !(self.code_init_gain > 0.0) {
            return Err(Error::InvalidArgument("code init gain must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainReport {
    pub train_loss: Vec<f64>,
    pub val_loss: Vec<f64>,
    pub train_indices: Vec<usize>,
    pub val_indices: Vec<usize>,
}

/// Disjoint train and validation index sets from a seeded permutation.
pub fn split_indices(len: usize, fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..len).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    idx.shuffle(&mut rng);
    let n_val = (fraction * len as f64).floor() as usize;
    let val = idx[..n_val].to_vec();
    let train = idx[n_val..].to_vec();
    (train, val)
}

/// Input matrix (row-major, one column per index) and targets.
pub(crate) fn gather_rows(ds: &Dataset, idx: &[usize]) -> (Vec<f32>, Vec<f32>) {
    let dim = ds.meta.code_dim + 3;
    let n = idx.len();
    let mut x = vec![0.0f32; dim * n];
    let mut t = Vec::with_capacity(n);
    for (j, &i) in idx.iter().enumerate() {
        let row = &ds.raw()[i * (dim + 1)..(i + 1) * (dim + 1)];
        for k in 0..dim {
            x[k * n + j] = row[k];
        }
        t.push(row[dim]);
    }
    (x, t)
}

/// Mean clamped-L1 loss of `net` over the given rows.
pub fn evaluate_loss(net: &Mlp<f32>, ds: &Dataset, idx: &[usize], delta: f64) -> Result<f64> {
    if idx.is_empty() {
        return Ok(0.0);
    }
    let (x, t) = gather_rows(ds, idx);
    let pred = net.forward_batch(&x, idx.len())?;
    let d = delta as f32;
    let total: f64 = pred
        .iter()
        .zip(&t)
        .map(|(&p, &y)| (p.clamp(-d, d) - y.clamp(-d, d)).abs() as f64)
        .sum();
    Ok(total / idx.len() as f64)
}

pub fn train(dataset: &Dataset, cfg: &TrainConfig) -> Result<(Mlp<f32>, TrainReport)> {
    cfg.validate()?;
    let mut net = mlp_init(dataset.meta.code_dim + 3, cfg.hidden_width, cfg.hidden_layers, cfg.seed)?;
    net.scale_code_inputs(cfg.code_init_gain as f32);
    train_from(net, dataset, cfg, |_, _, _| {})
}

/// Minibatch Adam from a given network. `on_epoch(epoch, train, val)` runs
/// after each epoch.
pub fn train_from(
    mut net: Mlp<f32>,
    dataset: &Dataset,
    cfg: &TrainConfig,
    mut on_epoch: impl FnMut(usize, f64, f64),
) -> Result<(Mlp<f32>, TrainReport)> {
    cfg.validate()?;
    if dataset.is_empty() {
        return Err(Error::Empty("dataset"));
    }
    if net.input_dim() != dataset.meta.code_dim + 3 {
        return Err(Error::DimensionMismatch {
            what: "network input dimension",
            expected: dataset.meta.code_dim + 3,
            found: net.input_dim(),
        });
    }
    let (mut train_idx, val_idx) = split_indices(dataset.len(), cfg.validation_fraction, cfg.seed);
    if train_idx.is_empty() {
        return Err(Error::Empty("training split"));
    }
    let mut report = TrainReport {
        train_indices: train_idx.clone(),
        val_indices: val_idx.clone(),
        ..TrainReport::default()
    };
    let mut adam = AdamState::new(net.param_count());
    let delta = cfg.delta as f32;
    for epoch in 0..cfg.epochs {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(epoch as u64 + 1);
        train_idx.shuffle(&mut rng);
        let progress = if cfg.epochs > 1 { epoch as f64 / (cfg.epochs - 1) as f64 } else { 0.0 };
        let lr = cfg.learning_rate * (1.0 + (cfg.final_lr_fraction - 1.0) * progress);
        let mut epoch_loss = 0.0f64;
        for (b, batch) in train_idx.chunks(cfg.batch_size).enumerate() {
            let scale = 1.0 / batch.len() as f32;
            let parts: Vec<(f32, Vec<f32>)> = batch
                .par_chunks(CHUNK)
                .map(|chunk| {
                    let (x, t) = gather_rows(dataset, chunk);
                    chunk_gradient(&net, x, &t, delta, scale)
                })
                .collect();
            let (loss, grad) = reduce_chunks(parts, net.param_count());
            if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                return Err(Error::Numeric(format!("non-finite loss at epoch {epoch}, batch {b}")));
            }
            epoch_loss += loss as f64;
            adam.update(net.params_mut(), &grad, lr);
        }
        let train_loss = epoch_loss / train_idx.len() as f64;
        let val_loss = evaluate_loss(&net, dataset, &val_idx, cfg.delta)?;
        log::info!("epoch {epoch}: train {train_loss:.6} val {val_loss:.6}");
        on_epoch(epoch, train_loss, val_loss);
        report.train_loss.push(train_loss);
        report.val_loss.push(val_loss);
    }
    Ok((net, report))
}
