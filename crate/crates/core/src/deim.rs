//! Discrete empirical interpolation of the nonlinear term.
//!
//! The nonlinear vector `f` is approximated by the oblique projection
//! `φ (Pᵀφ)⁻¹ Pᵀ f`, which only needs `f` at the `N_m` interpolation
//! indices selected by [`select_points`]. Composed with the Galerkin
//! projection this gives the `N_r × N_m` operator `E = ψᵀφ (Pᵀφ)⁻¹`.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};

use crate::error::{Error, Result};
use crate::linalg::Lu;
use crate::pde::{Grid, SnapshotSet};
use crate::pod::{compute_pod, PodBasis};

/// Condition numbers of `Pᵀφ` above this are reported as a warning.
pub const CONDITION_WARNING: f64 = 1e12;

/// Where the stencil values of one interpolation point live in the cache.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StencilSlot {
    /// Dirichlet node; the nonlinear term is identically zero there.
    Boundary,
    Interior { left: usize, center: usize, right: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeimOperator {
    /// `N_f × N_m` nonlinear-term POD basis `φ`.
    pub nonlinear_modes: Array2<f64>,
    pub indices: Vec<usize>,
    /// `N_r × N_m`.
    pub reduced_projector: Array2<f64>,
    pub n_points: usize,
    /// 1-norm condition number of `Pᵀφ`.
    pub condition_number: f64,
    /// Grid nodes needed to evaluate the stencils at `indices` (sorted).
    pub stencil_nodes: Vec<usize>,
    /// Rows of `ψ` at `stencil_nodes`.
    pub stencil_modes: Array2<f64>,
    /// Entries of the mean field at `stencil_nodes`.
    pub stencil_mean: Array1<f64>,
    pub slots: Vec<StencilSlot>,
}

/// Greedy residual-argmax point selection.
///
/// Returns one grid index per column of `phi`; ties in magnitude go to the
/// lowest index.
pub fn select_points(phi: ArrayView2<f64>) -> Result<Vec<usize>> {
    let (nf, nm) = phi.dim();
    if nm == 0 || nm > nf {
        return Err(Error::invalid(format!(
            "need 1..={nf} basis columns, got {nm}"
        )));
    }
    let mut points = vec![argmax_abs(phi.column(0))];
    if phi[[points[0], 0]] == 0.0 {
        return Err(Error::DegenerateBasis { step: 1 });
    }
    for m in 1..nm {
        let sub = phi
            .select(Axis(0), &points)
            .slice_move(ndarray::s![.., 0..m]);
        let lu = Lu::factor(sub.view()).map_err(|_| Error::DegenerateBasis { step: m + 1 })?;
        let rhs: Vec<f64> = points.iter().map(|&p| phi[[p, m]]).collect();
        let c = lu.solve(&rhs)?;
        let residual = &phi.column(m) - &phi.slice(ndarray::s![.., 0..m]).dot(&c);
        let p = argmax_abs(residual.view());
        let scale = phi.column(m).iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if !(residual[p].abs() > 1e-14 * scale) {
            return Err(Error::DegenerateBasis { step: m + 1 });
        }
        points.push(p);
    }
    Ok(points)
}

fn argmax_abs(v: ArrayView1<f64>) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    best
}

/// Sorted grid nodes touched by the interior stencils at `indices`, and the
/// slot of each index within them.
fn stencil_layout(indices: &[usize], nf: usize) -> (Vec<usize>, Vec<StencilSlot>) {
    let mut nodes: Vec<usize> = indices
        .iter()
        .filter(|&&p| p > 0 && p + 1 < nf)
        .flat_map(|&p| [p - 1, p, p + 1])
        .collect();
    nodes.sort_unstable();
    nodes.dedup();
    let position = |node: usize| nodes.binary_search(&node).expect("node cached");
    let slots = indices
        .iter()
        .map(|&p| {
            if p == 0 || p + 1 >= nf {
                StencilSlot::Boundary
            } else {
                StencilSlot::Interior {
                    left: position(p - 1),
                    center: position(p),
                    right: position(p + 1),
                }
            }
        })
        .collect();
    (nodes, slots)
}

impl DeimOperator {
    /// Builds the operator from an explicit nonlinear basis `φ`.
    pub fn from_modes(state_basis: &PodBasis, nonlinear_modes: Array2<f64>) -> Result<Self> {
        let nf = state_basis.n_points();
        if nonlinear_modes.nrows() != nf {
            return Err(Error::DimensionMismatch {
                context: "nonlinear basis rows",
                expected: nf,
                found: nonlinear_modes.nrows(),
            });
        }
        let n_points = nonlinear_modes.ncols();
        let indices = select_points(nonlinear_modes.view())?;

        let sampled = nonlinear_modes.select(Axis(0), &indices);
        let psi_t_phi = state_basis.modes.t().dot(&nonlinear_modes);
        // E (Pᵀφ) = ψᵀφ  <=>  (Pᵀφ)ᵀ Eᵀ = (ψᵀφ)ᵀ
        let sampled_t = sampled.t().to_owned();
        let lu = Lu::factor(sampled_t.view())?;
        let projector_t = lu.solve_matrix(psi_t_phi.t())?;
        let reduced_projector = projector_t.t().to_owned();
        let condition_number = Lu::factor(sampled.view())?.condition_number(sampled.view())?;

        let (stencil_nodes, slots) = stencil_layout(&indices, nf);
        let stencil_modes = state_basis.modes.select(Axis(0), &stencil_nodes);
        let stencil_mean = state_basis.mean_field.select(Axis(0), &stencil_nodes);

        Ok(DeimOperator {
            nonlinear_modes,
            indices,
            reduced_projector,
            n_points,
            condition_number,
            stencil_nodes,
            stencil_modes,
            stencil_mean,
            slots,
        })
    }

    /// Reassembles a stored operator, recomputing the stencil slots.
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        nonlinear_modes: Array2<f64>,
        indices: Vec<usize>,
        reduced_projector: Array2<f64>,
        condition_number: f64,
        stencil_nodes: Vec<usize>,
        stencil_modes: Array2<f64>,
        stencil_mean: Array1<f64>,
    ) -> Result<Self> {
        let nf = nonlinear_modes.nrows();
        let n_points = indices.len();
        if nonlinear_modes.ncols() != n_points {
            return Err(Error::DimensionMismatch {
                context: "nonlinear basis columns vs indices",
                expected: n_points,
                found: nonlinear_modes.ncols(),
            });
        }
        if let Some(&bad) = indices.iter().find(|&&p| p >= nf) {
            return Err(Error::InvariantViolation(format!(
                "DEIM index {bad} outside grid of {nf} nodes"
            )));
        }
        let (expected_nodes, slots) = stencil_layout(&indices, nf);
        if expected_nodes != stencil_nodes {
            return Err(Error::InvariantViolation(
                "stencil nodes do not match the interpolation indices".into(),
            ));
        }
        if stencil_modes.nrows() != stencil_nodes.len()
            || stencil_mean.len() != stencil_nodes.len()
            || reduced_projector.ncols() != n_points
            || stencil_modes.ncols() != reduced_projector.nrows()
        {
            return Err(Error::InvariantViolation(
                "DEIM operator cache sizes are inconsistent".into(),
            ));
        }
        Ok(DeimOperator {
            nonlinear_modes,
            indices,
            reduced_projector,
            n_points,
            condition_number,
            stencil_nodes,
            stencil_modes,
            stencil_mean,
            slots,
        })
    }

    pub fn n_retained(&self) -> usize {
        self.reduced_projector.nrows()
    }

    /// Human-readable diagnostics; empty when the operator is well posed.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.n_points < self.n_retained() {
            out.push(format!(
                "DEIM uses {} points for {} retained modes; at least as many points as modes is recommended",
                self.n_points,
                self.n_retained()
            ));
        }
        if !(self.condition_number <= CONDITION_WARNING) {
            out.push(format!(
                "interpolation matrix is ill-conditioned (condition number {:e})",
                self.condition_number
            ));
        }
        out
    }

    /// `E · f[indices]` for a full-space nonlinear vector `f`.
    pub fn project_sampled(&self, full: ArrayView1<f64>) -> Result<Array1<f64>> {
        let sampled = Array1::from_iter(self.indices.iter().map(|&p| full[p]));
        Ok(self.reduced_projector.dot(&sampled))
    }

    fn check(&self, basis: &PodBasis, grid: &Grid) -> Result<()> {
        let nf = grid.n_points();
        if basis.n_points() != nf {
            return Err(Error::DimensionMismatch {
                context: "DEIM basis rows vs grid",
                expected: nf,
                found: basis.n_points(),
            });
        }
        if self.indices.len() != self.n_points
            || self.slots.len() != self.n_points
            || self.reduced_projector.ncols() != self.n_points
            || self.stencil_modes.nrows() != self.stencil_nodes.len()
            || self.stencil_mean.len() != self.stencil_nodes.len()
        {
            return Err(Error::InvariantViolation(
                "DEIM operator cache sizes are inconsistent".into(),
            ));
        }
        if let Some(&bad) = self.indices.iter().chain(self.stencil_nodes.iter()).find(|&&p| p >= nf) {
            return Err(Error::InvariantViolation(format!(
                "DEIM index {bad} outside grid of {nf} nodes"
            )));
        }
        if self.reduced_projector.nrows() != basis.n_retained
            || self.stencil_modes.ncols() != basis.n_retained
        {
            return Err(Error::InvariantViolation(format!(
                "DEIM operator built for {} modes, basis has {}",
                self.reduced_projector.nrows(),
                basis.n_retained
            )));
        }
        Ok(())
    }
}

/// Builds `φ` from the nonlinear snapshots (no mean removal), selects the
/// interpolation points and assembles `E`.
pub fn build_deim(
    state_basis: &PodBasis,
    nonlinear_snapshots: ArrayView2<f64>,
    n_points: usize,
) -> Result<DeimOperator> {
    let phi = compute_pod(nonlinear_snapshots, n_points, false)?.modes;
    DeimOperator::from_modes(state_basis, phi)
}

/// Reduced nonlinear term `ψᵀ φ (Pᵀφ)⁻¹ Pᵀ N[ū + ψ a]`, touching only
/// the stencil nodes of the interpolation points.
pub fn deim_nonlinear(
    op: &DeimOperator,
    basis: &PodBasis,
    coeffs: ArrayView1<f64>,
    grid: &Grid,
) -> Result<Array1<f64>> {
    op.check(basis, grid)?;
    if coeffs.len() != basis.n_retained {
        return Err(Error::DimensionMismatch {
            context: "DEIM coefficients",
            expected: basis.n_retained,
            found: coeffs.len(),
        });
    }
    let local = &op.stencil_mean + &op.stencil_modes.dot(&coeffs);
    let inv_2dx = 1.0 / (2.0 * grid.spacing());
    let sampled = Array1::from_iter(op.slots.iter().map(|slot| match *slot {
        StencilSlot::Boundary => 0.0,
        StencilSlot::Interior { left, center, right } => {
            local[center] * (local[right] - local[left]) * inv_2dx
        }
    }));
    Ok(op.reduced_projector.dot(&sampled))
}

/// `E · N[u_k][indices]` for every snapshot: the reduced nonlinear-term
/// series used as the surrogate's training data.
pub fn deim_coefficient_series(
    op: &DeimOperator,
    basis: &PodBasis,
    snapshots: &SnapshotSet,
) -> Result<Array2<f64>> {
    let nl = &snapshots.nonlinear_terms;
    if nl.nrows() != basis.n_points() {
        return Err(Error::DimensionMismatch {
            context: "nonlinear snapshot rows",
            expected: basis.n_points(),
            found: nl.nrows(),
        });
    }
    let sampled = nl.select(Axis(0), &op.indices);
    Ok(op.reduced_projector.dot(&sampled))
}
