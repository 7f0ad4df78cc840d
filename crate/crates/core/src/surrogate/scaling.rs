use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-channel min-max scaling onto `[-1, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub channel_min: Vec<f64>,
    pub channel_max: Vec<f64>,
}

/// Fits a scaler to all columns of a `d × N` series.
pub fn fit_scaler(series: ArrayView2<f64>) -> Result<Scaler> {
    let cols: Vec<usize> = (0..series.ncols()).collect();
    fit_scaler_on(series, &cols)
}

/// Fits a scaler using only the listed columns.
pub fn fit_scaler_on(series: ArrayView2<f64>, columns: &[usize]) -> Result<Scaler> {
    if columns.len() < 2 {
        return Err(Error::invalid("scaler needs at least two samples"));
    }
    let d = series.nrows();
    let mut channel_min = vec![f64::INFINITY; d];
    let mut channel_max = vec![f64::NEG_INFINITY; d];
    for &c in columns {
        if c >= series.ncols() {
            return Err(Error::invalid(format!("column {c} out of range")));
        }
        for i in 0..d {
            let v = series[[i, c]];
            channel_min[i] = channel_min[i].min(v);
            channel_max[i] = channel_max[i].max(v);
        }
    }
    Ok(Scaler {
        channel_min,
        channel_max,
    })
}

impl Scaler {
    pub fn dim(&self) -> usize {
        self.channel_min.len()
    }

    fn check(&self, len: usize) -> Result<()> {
        if len != self.dim() {
            return Err(Error::DimensionMismatch {
                context: "scaler channels",
                expected: self.dim(),
                found: len,
            });
        }
        Ok(())
    }

    pub fn apply_vec(&self, v: ArrayView1<f64>) -> Result<Array1<f64>> {
        self.check(v.len())?;
        Ok(Array1::from_shape_fn(v.len(), |i| {
            let (lo, hi) = (self.channel_min[i], self.channel_max[i]);
            if hi > lo {
                2.0 * (v[i] - lo) / (hi - lo) - 1.0
            } else {
                0.0
            }
        }))
    }

    pub fn invert_vec(&self, v: ArrayView1<f64>) -> Result<Array1<f64>> {
        self.check(v.len())?;
        Ok(Array1::from_shape_fn(v.len(), |i| {
            let (lo, hi) = (self.channel_min[i], self.channel_max[i]);
            if hi > lo {
                (v[i] + 1.0) * 0.5 * (hi - lo) + lo
            } else {
                lo
            }
        }))
    }

    /// Scales each column of a `d × N` series.
    pub fn apply(&self, series: ArrayView2<f64>) -> Result<Array2<f64>> {
        let mut out = Array2::zeros(series.raw_dim());
        for (j, col) in series.columns().into_iter().enumerate() {
            out.column_mut(j).assign(&self.apply_vec(col)?);
        }
        Ok(out)
    }

    pub fn invert(&self, series: ArrayView2<f64>) -> Result<Array2<f64>> {
        let mut out = Array2::zeros(series.raw_dim());
        for (j, col) in series.columns().into_iter().enumerate() {
            out.column_mut(j).assign(&self.invert_vec(col)?);
        }
        Ok(out)
    }
}
