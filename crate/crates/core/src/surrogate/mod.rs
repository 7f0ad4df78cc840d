//! LSTM surrogate for the reduced nonlinear term.
//!
//! The surrogate is trained on the smoothed, scaled DEIM coefficient
//! series and then deployed recursively: every prediction is appended to
//! the input window of the next one.

pub mod adam;
pub mod dataset;
pub mod lstm;
pub mod savgol;
pub mod scaling;
pub mod train;

use std::collections::VecDeque;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub use adam::{adam_step, AdamConfig, AdamState};
pub use dataset::{make_windows, WindowDataset};
pub use lstm::{lstm_backward, LstmModel};
pub use savgol::savgol_smooth;
pub use scaling::{fit_scaler, fit_scaler_on, Scaler};
pub use train::{train, EpochLoss, TrainConfig, TrainHistory};

/// Independent, reproducible random stream `stream` derived from `seed`.
pub fn seeded_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// A trained model together with the scaling it was trained under.
#[derive(Debug, Clone, PartialEq)]
pub struct Surrogate {
    pub model: LstmModel,
    pub scaler: Scaler,
    pub window: usize,
}

/// Rolling-window recursive forecaster working in physical units.
#[derive(Debug, Clone)]
pub struct RecursivePredictor<'a> {
    model: &'a LstmModel,
    scaler: &'a Scaler,
    window: usize,
    /// Scaled history, oldest first.
    buffer: VecDeque<Array1<f64>>,
}

impl<'a> RecursivePredictor<'a> {
    pub fn new(model: &'a LstmModel, scaler: &'a Scaler, window: usize) -> Result<Self> {
        if scaler.dim() != model.input_dim() {
            return Err(Error::DimensionMismatch {
                context: "scaler vs model width",
                expected: model.input_dim(),
                found: scaler.dim(),
            });
        }
        Ok(RecursivePredictor {
            model,
            scaler,
            window,
            buffer: VecDeque::with_capacity(window + 1),
        })
    }

    pub fn is_ready(&self) -> bool {
        self.buffer.len() == self.window
    }

    /// Appends an observed (unscaled) vector, dropping the oldest once full.
    pub fn push(&mut self, value: ArrayView1<f64>) -> Result<()> {
        let scaled = self.scaler.apply_vec(value)?;
        self.push_scaled(scaled);
        Ok(())
    }

    fn push_scaled(&mut self, scaled: Array1<f64>) {
        if self.buffer.len() == self.window {
            self.buffer.pop_front();
        }
        self.buffer.push_back(scaled);
    }

    /// Predicts the next vector, feeds it back into the window, and returns
    /// it unscaled.
    pub fn step(&mut self) -> Result<Array1<f64>> {
        if !self.is_ready() {
            return Err(Error::invalid(format!(
                "window holds {} of {} vectors",
                self.buffer.len(),
                self.window
            )));
        }
        let d = self.model.input_dim();
        let seq = Array2::from_shape_fn((self.window, d), |(t, c)| self.buffer[t][c]);
        let next = self.model.forward(seq.view())?;
        let out = self.scaler.invert_vec(next.view())?;
        self.push_scaled(next);
        Ok(out)
    }
}

/// Forecasts `n_steps` vectors from an unscaled `window × d` seed; returns
/// them as the columns of a `d × n_steps` matrix.
pub fn predict_recursive(
    model: &LstmModel,
    scaler: &Scaler,
    seed_window: ArrayView2<f64>,
    n_steps: usize,
) -> Result<Array2<f64>> {
    if n_steps == 0 {
        return Err(Error::invalid("n_steps must be at least 1"));
    }
    let window = seed_window.nrows();
    let mut predictor = RecursivePredictor::new(model, scaler, window)?;
    for row in seed_window.rows() {
        predictor.push(row)?;
    }
    let mut out = Array2::zeros((model.input_dim(), n_steps));
    for k in 0..n_steps {
        out.column_mut(k).assign(&predictor.step()?);
    }
    Ok(out)
}

/// Savitzky-Golay settings applied to the training series.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SmoothingConfig {
    pub window_length: usize,
    pub poly_order: usize,
}

impl Default for SmoothingConfig {
    fn default() -> Self {
        SmoothingConfig {
            window_length: 11,
            poly_order: 3,
        }
    }
}

#[derive(Debug, Clone)]
pub struct FittedSurrogate {
    pub surrogate: Surrogate,
    pub history: TrainHistory,
    /// The smoothed series in physical units.
    pub smoothed: Array2<f64>,
}

/// Full preprocessing and training: smooth the raw `d × N_s` series in time,
/// fit the scaler on the columns read by training samples, scale, train.
pub fn fit_surrogate(series: ArrayView2<f64>, smoothing: &SmoothingConfig, config: &TrainConfig) -> Result<FittedSurrogate> {
    let smoothed = savgol_smooth(series, smoothing.window_length, smoothing.poly_order)?;
    let split = make_windows(smoothed.view(), config.window, config.val_fraction, config.seed)?;
    let scaler = fit_scaler_on(smoothed.view(), &split.training_columns())?;
    let scaled = scaler.apply(smoothed.view())?;
    let (model, history) = train(scaled.view(), config)?;
    Ok(FittedSurrogate {
        surrogate: Surrogate {
            model,
            scaler,
            window: config.window,
        },
        history,
        smoothed,
    })
}
