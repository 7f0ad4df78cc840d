//! Savitzky-Golay smoothing along the time axis.

use ndarray::{Array2, ArrayView1, ArrayView2};

use crate::error::{Error, Result};
use crate::linalg::Lu;

/// Weights that evaluate, at `offset` from the window centre, the
/// least-squares polynomial of degree `poly_order` through a window of
/// `window_length` equally spaced samples.
pub fn savgol_weights(window_length: usize, poly_order: usize, offset: f64) -> Result<Vec<f64>> {
    let half = (window_length / 2) as f64;
    // Offsets are scaled to [-1, 1] to keep the normal equations well conditioned.
    let scale = if half > 0.0 { half } else { 1.0 };
    let n_coef = poly_order + 1;
    let abscissae: Vec<f64> = (0..window_length)
        .map(|i| (i as f64 - half) / scale)
        .collect();
    let mut normal = Array2::<f64>::zeros((n_coef, n_coef));
    for &t in &abscissae {
        for a in 0..n_coef {
            for b in 0..n_coef {
                normal[[a, b]] += t.powi((a + b) as i32);
            }
        }
    }
    let s = offset / scale;
    let basis: Vec<f64> = (0..n_coef).map(|j| s.powi(j as i32)).collect();
    let h = Lu::factor(normal.view())?.solve(&basis)?;
    Ok(abscissae
        .iter()
        .map(|&t| (0..n_coef).map(|j| h[j] * t.powi(j as i32)).sum())
        .collect())
}

fn check_args(len: usize, window_length: usize, poly_order: usize) -> Result<()> {
    if window_length.is_multiple_of(2) {
        return Err(Error::invalid(format!(
            "Savitzky-Golay window must be odd, got {window_length}"
        )));
    }
    if poly_order >= window_length {
        return Err(Error::invalid(format!(
            "polynomial order {poly_order} must be below the window length {window_length}"
        )));
    }
    if window_length > len {
        return Err(Error::invalid(format!(
            "window length {window_length} exceeds series length {len}"
        )));
    }
    Ok(())
}

fn smooth_row(row: ArrayView1<f64>, interior: &[f64], edges: &[Vec<f64>], out: &mut [f64]) {
    let n = row.len();
    let w = interior.len();
    let half = w / 2;
    let dot = |start: usize, weights: &[f64]| -> f64 {
        weights.iter().enumerate().map(|(i, c)| c * row[start + i]).sum()
    };
    for (k, slot) in out.iter_mut().enumerate() {
        *slot = if k < half {
            dot(0, &edges[k])
        } else if k + half >= n {
            // Offset from the centre of the last full window, mirrored into `edges`.
            let from_end = n - 1 - k;
            let weights = &edges[w - 1 - from_end];
            dot(n - w, weights)
        } else {
            dot(k - half, interior)
        };
    }
}

/// Filters each row of `series` independently. Boundary samples take the
/// value of the polynomial fitted to the nearest full window.
pub fn savgol_smooth(series: ArrayView2<f64>, window_length: usize, poly_order: usize) -> Result<Array2<f64>> {
    check_args(series.ncols(), window_length, poly_order)?;
    let half = (window_length / 2) as f64;
    let interior = savgol_weights(window_length, poly_order, 0.0)?;
    let edges = (0..window_length)
        .map(|i| savgol_weights(window_length, poly_order, i as f64 - half))
        .collect::<Result<Vec<_>>>()?;
    let mut out = Array2::zeros(series.raw_dim());
    let mut buf = vec![0.0; series.ncols()];
    for (r, row) in series.rows().into_iter().enumerate() {
        smooth_row(row, &interior, &edges, &mut buf);
        for (dst, v) in out.row_mut(r).iter_mut().zip(buf.iter()) {
            *dst = *v;
        }
    }
    Ok(out)
}
