use ndarray::{Array2, Array3, ArrayView2};
use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::surrogate::seeded_rng;

/// RNG stream used for the train/validation split.
pub const SPLIT_STREAM: u64 = 0;

/// Many-to-one samples cut from a `d × N_s` series.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowDataset {
    /// `n_samples × window × d`, time-major within each sample.
    pub inputs: Array3<f64>,
    /// `n_samples × d`.
    pub targets: Array2<f64>,
    pub train_indices: Vec<usize>,
    pub val_indices: Vec<usize>,
}

impl WindowDataset {
    pub fn n_samples(&self) -> usize {
        self.targets.nrows()
    }

    pub fn window(&self) -> usize {
        self.inputs.dim().1
    }

    pub fn dim(&self) -> usize {
        self.targets.ncols()
    }

    /// Series columns read by the training samples (inputs and targets).
    pub fn training_columns(&self) -> Vec<usize> {
        let w = self.window();
        let mut cols: Vec<usize> = self
            .train_indices
            .iter()
            .flat_map(|&j| j..=j + w)
            .collect();
        cols.sort_unstable();
        cols.dedup();
        cols
    }
}

pub fn validation_count(n_samples: usize, val_fraction: f64) -> usize {
    (val_fraction * n_samples as f64).round() as usize
}

/// Sample `j` has inputs `series[:, j..j+window]` and target
/// `series[:, j+window]`; a seeded shuffle picks the validation samples.
pub fn make_windows(series: ArrayView2<f64>, window: usize, val_fraction: f64, seed: u64) -> Result<WindowDataset> {
    let (d, ns) = series.dim();
    if window == 0 {
        return Err(Error::invalid("window must be at least 1"));
    }
    if ns <= window {
        return Err(Error::invalid(format!(
            "series of length {ns} is too short for window {window}"
        )));
    }
    if !(val_fraction > 0.0 && val_fraction < 1.0) {
        return Err(Error::invalid(format!(
            "validation fraction must lie in (0, 1), got {val_fraction}"
        )));
    }
    let n = ns - window;
    let inputs = Array3::from_shape_fn((n, window, d), |(j, t, c)| series[[c, j + t]]);
    let targets = Array2::from_shape_fn((n, d), |(j, c)| series[[c, j + window]]);

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut seeded_rng(seed, SPLIT_STREAM));
    let n_val = validation_count(n, val_fraction);
    if n_val == 0 || n_val == n {
        return Err(Error::invalid(format!(
            "validation fraction {val_fraction} leaves an empty split for {n} samples"
        )));
    }
    let val_indices = order[..n_val].to_vec();
    let train_indices = order[n_val..].to_vec();
    Ok(WindowDataset {
        inputs,
        targets,
        train_indices,
        val_indices,
    })
}
