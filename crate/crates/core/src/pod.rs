//! Proper orthogonal decomposition by the method of snapshots.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};

use crate::error::{Error, Result};
use crate::linalg::{gram_schmidt, symmetric_eigen};
use crate::pde::Field;

/// Reduced coordinates `a = ψᵀ(u - ū)`.
pub type ReducedCoeffs = Array1<f64>;

/// Singular values below this fraction of the largest are treated as zero.
pub const RANK_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct PodBasis {
    /// `N_f × N_r`, orthonormal columns.
    pub modes: Array2<f64>,
    /// All `N_s` singular values, nonincreasing.
    pub singular_values: Array1<f64>,
    /// Temporal mean of the snapshots, or zero when no mean was removed.
    pub mean_field: Array1<f64>,
    pub n_retained: usize,
}

impl PodBasis {
    pub fn n_points(&self) -> usize {
        self.modes.nrows()
    }

    pub fn project(&self, field: ArrayView1<f64>) -> Result<ReducedCoeffs> {
        if field.len() != self.n_points() {
            return Err(Error::DimensionMismatch {
                context: "project field",
                expected: self.n_points(),
                found: field.len(),
            });
        }
        let fluct = &field - &self.mean_field;
        Ok(self.modes.t().dot(&fluct))
    }

    pub fn reconstruct(&self, coeffs: ArrayView1<f64>) -> Result<Field> {
        if coeffs.len() != self.n_retained {
            return Err(Error::DimensionMismatch {
                context: "reconstruct coefficients",
                expected: self.n_retained,
                found: coeffs.len(),
            });
        }
        Ok(&self.mean_field + &self.modes.dot(&coeffs))
    }

    /// Projects every column of `fields`.
    pub fn project_columns(&self, fields: ArrayView2<f64>) -> Result<Array2<f64>> {
        if fields.nrows() != self.n_points() {
            return Err(Error::DimensionMismatch {
                context: "project snapshot rows",
                expected: self.n_points(),
                found: fields.nrows(),
            });
        }
        // column by column so results agree bitwise with `project`
        let mut out = Array2::zeros((self.n_retained, fields.ncols()));
        for (mut col, field) in out.columns_mut().into_iter().zip(fields.columns()) {
            col.assign(&self.project(field)?);
        }
        Ok(out)
    }
}

/// Computes the leading `n_retain` POD modes of the columns of `snapshots`.
///
/// The `N_s × N_s` correlation matrix `X'ᵀX'` is diagonalized by Jacobi
/// rotations; modes are lifted back with `X' v_k / σ_k`, re-orthonormalized
/// and sign-canonicalized so the largest-magnitude entry is positive.
pub fn compute_pod(snapshots: ArrayView2<f64>, n_retain: usize, subtract_mean: bool) -> Result<PodBasis> {
    let (nf, ns) = snapshots.dim();
    if n_retain == 0 || n_retain > nf.min(ns) {
        return Err(Error::invalid(format!(
            "n_retain must lie in 1..={}, got {n_retain}",
            nf.min(ns)
        )));
    }
    let mean_field = if subtract_mean {
        snapshots.mean_axis(Axis(1)).expect("nonempty snapshot matrix")
    } else {
        Array1::zeros(nf)
    };
    let fluct = &snapshots - &mean_field.view().insert_axis(Axis(1));
    let correlation = fluct.t().dot(&fluct);
    let eig = symmetric_eigen(correlation.view())?;
    let singular_values = eig.values.mapv(|l| l.max(0.0).sqrt());

    let threshold = RANK_TOLERANCE * singular_values[0];
    let achievable = singular_values
        .iter()
        .take_while(|&&s| s > threshold && s > 0.0)
        .count();
    if achievable < n_retain {
        return Err(Error::RankDeficient {
            requested: n_retain,
            achievable,
        });
    }

    let mut modes = Array2::zeros((nf, n_retain));
    for k in 0..n_retain {
        let lifted = fluct.dot(&eig.vectors.column(k)) / singular_values[k];
        modes.column_mut(k).assign(&lifted);
    }
    gram_schmidt(&mut modes)?;
    canonicalize_signs(&mut modes);

    Ok(PodBasis {
        modes,
        singular_values,
        mean_field,
        n_retained: n_retain,
    })
}

/// Flips each column so its largest-magnitude entry (lowest index on ties)
/// is positive.
pub fn canonicalize_signs(modes: &mut Array2<f64>) {
    for mut col in modes.columns_mut() {
        let mut best = 0usize;
        for (i, v) in col.iter().enumerate() {
            if v.abs() > col[best].abs() {
                best = i;
            }
        }
        if col[best] < 0.0 {
            col.mapv_inplace(|v| -v);
        }
    }
}

/// Fraction of snapshot energy `Σ_{k<n} σ_k² / Σ_k σ_k²` captured by the
/// first `n` modes.
pub fn truncation_energy(singular_values: ArrayView1<f64>, n: usize) -> Result<f64> {
    if n == 0 || n > singular_values.len() {
        return Err(Error::invalid(format!(
            "n must lie in 1..={}, got {n}",
            singular_values.len()
        )));
    }
    let total: f64 = singular_values.iter().map(|s| s * s).sum();
    if total == 0.0 {
        return Err(Error::invalid("all singular values are zero"));
    }
    let kept: f64 = singular_values.iter().take(n).map(|s| s * s).sum();
    Ok(kept / total)
}
