use ndarray::{ArrayView2, Axis};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::surrogate::adam::{adam_step, AdamConfig, AdamState};
use crate::surrogate::dataset::{make_windows, WindowDataset};
use crate::surrogate::lstm::{lstm_backward, mse, LstmModel};
use crate::surrogate::seeded_rng;

pub const INIT_STREAM: u64 = 1;
pub const SHUFFLE_STREAM: u64 = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub window: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub val_fraction: f64,
    pub hidden_dim: usize,
    pub seed: u64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_epsilon: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            window: 10,
            batch_size: 32,
            learning_rate: 1e-3,
            epochs: 60,
            val_fraction: 0.2,
            hidden_dim: 30,
            seed: 0,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_epsilon: 1e-8,
        }
    }
}

impl TrainConfig {
    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            learning_rate: self.learning_rate,
            beta1: self.adam_beta1,
            beta2: self.adam_beta2,
            epsilon: self.adam_epsilon,
        }
    }

    /// Returns the name of the first offending field.
    pub fn validate(&self) -> std::result::Result<(), (&'static str, String)> {
        if self.window == 0 {
            return Err(("window", "must be at least 1".into()));
        }
        if self.batch_size == 0 {
            return Err(("batch_size", "must be at least 1".into()));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(("learning_rate", "must be positive".into()));
        }
        if self.epochs == 0 {
            return Err(("epochs", "must be at least 1".into()));
        }
        if !(self.val_fraction > 0.0 && self.val_fraction < 1.0) {
            return Err(("val_fraction", "must lie in (0, 1)".into()));
        }
        if self.hidden_dim == 0 {
            return Err(("hidden_dim", "must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&self.adam_beta1) {
            return Err(("adam_beta1", "must lie in [0, 1)".into()));
        }
        if !(0.0..1.0).contains(&self.adam_beta2) {
            return Err(("adam_beta2", "must lie in [0, 1)".into()));
        }
        if !(self.adam_epsilon > 0.0) {
            return Err(("adam_epsilon", "must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochLoss {
    pub epoch: usize,
    pub train_mse: f64,
    pub val_mse: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainHistory {
    pub epochs: Vec<EpochLoss>,
    /// Epoch whose parameters were returned.
    pub best_epoch: usize,
}

impl TrainHistory {
    pub fn best_val_mse(&self) -> f64 {
        self.epochs[self.best_epoch].val_mse
    }
}

/// Trains on an already smoothed and scaled `d × N_s` series and returns
/// the parameters with the lowest validation loss over all epochs.
pub fn train(series: ArrayView2<f64>, config: &TrainConfig) -> Result<(LstmModel, TrainHistory)> {
    config
        .validate()
        .map_err(|(key, msg)| Error::invalid(format!("{key} {msg}")))?;
    let data = make_windows(series, config.window, config.val_fraction, config.seed)?;
    let mut model = LstmModel::init(data.dim(), config.hidden_dim, &mut seeded_rng(config.seed, INIT_STREAM));
    train_from(&mut model, &data, config)
}

/// Trains `model` in place on a prepared dataset.
pub fn train_from(model: &mut LstmModel, data: &WindowDataset, config: &TrainConfig) -> Result<(LstmModel, TrainHistory)> {
    let adam = config.adam();
    let mut state = AdamState::new(model.parameter_slices().iter().map(|s| s.len()));
    let mut shuffle_rng = seeded_rng(config.seed, SHUFFLE_STREAM);
    let mut order = data.train_indices.clone();
    let mut history = TrainHistory::default();
    let mut best: Option<(f64, LstmModel)> = None;
    let mut t = 0u64;

    for epoch in 0..config.epochs {
        order.shuffle(&mut shuffle_rng);
        for batch in order.chunks(config.batch_size) {
            let inputs = data.inputs.select(Axis(0), batch);
            let targets = data.targets.select(Axis(0), batch);
            let (grads, _) = lstm_backward(model, inputs.view(), targets.view())?;
            t += 1;
            adam_step(&mut model.parameter_slices_mut(), &grads.parameter_slices(), &mut state, t, &adam)?;
        }
        let train_mse = mse(model, data.inputs.view(), data.targets.view(), &data.train_indices)?;
        let val_mse = mse(model, data.inputs.view(), data.targets.view(), &data.val_indices)?;
        if val_mse.is_nan() {
            return Err(Error::TrainingDiverged { epoch });
        }
        history.epochs.push(EpochLoss {
            epoch,
            train_mse,
            val_mse,
        });
        if best.as_ref().is_none_or(|(b, _)| val_mse < *b) {
            best = Some((val_mse, model.clone()));
            history.best_epoch = epoch;
        }
    }
    let (_, best_model) = best.expect("at least one epoch");
    Ok((best_model, history))
}
