//! Accuracy metrics against the projected analytical solution, and the
//! per-step operation-count model of the four solvers.

use ndarray::{Array1, Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pde::SnapshotSet;
use crate::pod::PodBasis;
use crate::rom::{Method, Trajectory};

/// Reference coefficients: every snapshot projected onto the basis.
pub fn true_coefficients(snapshots: &SnapshotSet, basis: &PodBasis) -> Result<Array2<f64>> {
    basis.project_columns(snapshots.states.view())
}

fn check_same_shape(a: ArrayView2<f64>, b: ArrayView2<f64>) -> Result<()> {
    if a.dim() != b.dim() {
        let (ra, ca) = a.dim();
        let (rb, cb) = b.dim();
        return Err(Error::invalid(format!(
            "shape mismatch: {ra}×{ca} versus {rb}×{cb}"
        )));
    }
    Ok(())
}

fn frobenius(a: ArrayView2<f64>) -> f64 {
    a.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// `‖A - A_truth‖_F / ‖A_truth‖_F` over all modes and samples.
pub fn relative_frobenius_error(approx: ArrayView2<f64>, truth: ArrayView2<f64>) -> Result<f64> {
    check_same_shape(approx, truth)?;
    let norm = frobenius(truth);
    if norm == 0.0 {
        return Err(Error::invalid("reference has zero norm"));
    }
    Ok(frobenius((&approx - &truth).view()) / norm)
}

pub fn l2_modal_error(traj: &Trajectory, truth: ArrayView2<f64>) -> Result<f64> {
    relative_frobenius_error(traj.coeffs.view(), truth)
}

/// Root-mean-square error over time, one entry per mode.
pub fn per_mode_rms(traj: &Trajectory, truth: ArrayView2<f64>) -> Result<Array1<f64>> {
    check_same_shape(traj.coeffs.view(), truth)?;
    let n = truth.ncols() as f64;
    Ok(Array1::from_iter(
        traj.coeffs
            .rows()
            .into_iter()
            .zip(truth.rows())
            .map(|(a, b)| (a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / n).sqrt()),
    ))
}

/// `ū + ψ A` for every column of a coefficient history.
pub fn reconstruct_fields(basis: &PodBasis, coeffs: ArrayView2<f64>) -> Result<Array2<f64>> {
    if coeffs.nrows() != basis.n_retained {
        return Err(Error::DimensionMismatch {
            context: "coefficient rows",
            expected: basis.n_retained,
            found: coeffs.nrows(),
        });
    }
    let mut fields = basis.modes.dot(&coeffs);
    for mut col in fields.columns_mut() {
        col += &basis.mean_field;
    }
    Ok(fields)
}

/// Relative space-time L2 error of reconstructed coefficients against the
/// analytical snapshots.
pub fn field_error_of(coeffs: ArrayView2<f64>, basis: &PodBasis, snapshots: &SnapshotSet) -> Result<f64> {
    let fields = reconstruct_fields(basis, coeffs)?;
    relative_frobenius_error(fields.view(), snapshots.states.view())
}

pub fn field_error(traj: &Trajectory, basis: &PodBasis, snapshots: &SnapshotSet) -> Result<f64> {
    field_error_of(traj.coeffs.view(), basis, snapshots)
}

/// Relative L2 error of the reconstructed field at the final time.
pub fn field_error_final(traj: &Trajectory, basis: &PodBasis, snapshots: &SnapshotSet) -> Result<f64> {
    let last = traj.coeffs.ncols() - 1;
    let field = basis.reconstruct(traj.coeffs.column(last))?;
    let reference = snapshots.states.column(snapshots.n_snapshots() - 1);
    if field.len() != reference.len() || traj.coeffs.ncols() != snapshots.n_snapshots() {
        return Err(Error::invalid("trajectory and snapshots are sampled differently"));
    }
    let norm = reference.dot(&reference).sqrt();
    if norm == 0.0 {
        return Err(Error::invalid("final snapshot has zero norm"));
    }
    let diff = &field - &reference;
    Ok(diff.dot(&diff).sqrt() / norm)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub method: Method,
    pub l2_modal_error: f64,
    pub per_mode_errors: Vec<f64>,
    pub field_error: f64,
    pub field_error_final: f64,
}

pub fn error_report(traj: &Trajectory, truth: ArrayView2<f64>, basis: &PodBasis, snapshots: &SnapshotSet) -> Result<ErrorReport> {
    Ok(ErrorReport {
        method: traj.method,
        l2_modal_error: l2_modal_error(traj, truth)?,
        per_mode_errors: per_mode_rms(traj, truth)?.to_vec(),
        field_error: field_error(traj, basis, snapshots)?,
        field_error_final: field_error_final(traj, basis, snapshots)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dims {
    pub n_full: usize,
    pub n_retained: usize,
    pub n_deim: usize,
    pub n_hidden: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostReport {
    pub method: Method,
    /// Order-of-magnitude estimate with unit constants.
    pub flops_per_step: u64,
    pub nonlinear_evals_per_step: u64,
    /// Multiply-adds actually performed by this crate's kernels per step.
    pub kernel_flops_per_step: u64,
    pub dims: Dims,
}

/// Per-step cost with every big-O constant set to one:
///
/// | method | flops | nonlinear evaluations |
/// |--------|-------|-----------------------|
/// | FOM  | `N_f²` | `N_f` |
/// | GP   | `N_r² + N_f N_r` | `N_f` |
/// | DEIM | `N_r² + N_f N_r + N_f N_m` | `N_m` |
/// | ML   | `N_h N_r + N_h² + N_r² + N_f N_r` | 0 |
pub fn cost_model(dims: Dims, method: Method, window: usize) -> CostReport {
    let Dims {
        n_full: nf,
        n_retained: nr,
        n_deim: nm,
        n_hidden: nh,
    } = dims;
    let (nf, nr, nm, nh) = (nf as u64, nr as u64, nm as u64, nh as u64);
    let (flops, evals) = match method {
        Method::Fom => (nf * nf, nf),
        Method::Gp => (nr * nr + nf * nr, nf),
        Method::Deim => (nr * nr + nf * nr + nf * nm, nm),
        Method::Ml => (nh * nr + nh * nh + nr * nr + nf * nr, 0),
    };
    CostReport {
        method,
        flops_per_step: flops,
        nonlinear_evals_per_step: evals,
        kernel_flops_per_step: kernel_flops(dims, method, window as u64),
        dims,
    }
}

/// Multiply-add count of one step of the implemented kernels.
fn kernel_flops(dims: Dims, method: Method, window: u64) -> u64 {
    let (nf, nr, nm, nh) = (
        dims.n_full as u64,
        dims.n_retained as u64,
        dims.n_deim as u64,
        dims.n_hidden as u64,
    );
    let linear = nr * nr;
    // interior stencil: one multiply for the product, one for 1/(2Δx)
    let stencil = |n: u64| 2 * n;
    match method {
        // tridiagonal operator plus stencil
        Method::Fom => 3 * nf + stencil(nf),
        // reconstruct, stencil, project
        Method::Gp => linear + nf * nr + stencil(nf) + nf * nr,
        // reconstruct at ≤ 3 N_m stencil nodes, stencil, E·n
        Method::Deim => linear + 3 * nm * nr + stencil(nm) + nr * nm,
        // the whole window is replayed from a zero state each step
        Method::Ml => linear + window * 4 * nh * (nr + nh) + nr * nh,
    }
}

/// Relative Frobenius error of the coefficient history frozen at `a(0)`.
pub fn constant_baseline_error(truth: ArrayView2<f64>) -> Result<f64> {
    let mut frozen = Array2::zeros(truth.raw_dim());
    for mut col in frozen.columns_mut() {
        col.assign(&truth.column(0));
    }
    relative_frobenius_error(frozen.view(), truth)
}

/// Fixed-width comparison table.
pub fn format_table(errors: &[ErrorReport], costs: &[CostReport]) -> String {
    let mut s = String::new();
    s.push_str("method  l2_modal_error  field_error  field_error_final\n");
    for e in errors {
        s.push_str(&format!(
            "{:<6}  {:>14.6}  {:>11.6}  {:>17.6}\n",
            e.method.tag(),
            e.l2_modal_error,
            e.field_error,
            e.field_error_final
        ));
    }
    s.push('\n');
    s.push_str("method  flops/step (model)  kernel flops/step  nonlinear evals/step\n");
    for c in costs {
        s.push_str(&format!(
            "{:<6}  {:>18}  {:>17}  {:>20}\n",
            c.method.tag(),
            c.flops_per_step,
            c.kernel_flops_per_step,
            c.nonlinear_evals_per_step
        ));
    }
    s
}
