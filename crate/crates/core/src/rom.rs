//! Reduced-order time integration.
//!
//! The reduced state obeys `ȧ = -L_r a - b_r - n(a)` where `n` is the
//! reduced nonlinear term. Three closures supply `n`: full-space Galerkin
//! projection, DEIM interpolation, and the recursive LSTM surrogate.

use std::fmt;

use ndarray::{Array1, Array2, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::deim::{deim_nonlinear, DeimOperator};
use crate::error::{Error, Result};
use crate::pde::{initial_condition, linear_operator, nonlinear_term, BurgersParams, Grid};
use crate::pod::PodBasis;
use crate::surrogate::{RecursivePredictor, Surrogate};

/// Integration aborts once any coefficient exceeds this magnitude.
pub const DIVERGENCE_BOUND: f64 = 1e3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Fom,
    Gp,
    Deim,
    Ml,
}

impl Method {
    pub fn tag(self) -> &'static str {
        match self {
            Method::Fom => "FOM",
            Method::Gp => "GP",
            Method::Deim => "DEIM",
            Method::Ml => "ML",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReducedSystem {
    /// `L_r = ψᵀ L ψ`.
    pub linear_reduced: Array2<f64>,
    /// `b_r = ψᵀ L ū`.
    pub mean_forcing: Array1<f64>,
    pub initial_coeffs: Array1<f64>,
    pub dt: f64,
    pub n_steps: usize,
}

impl ReducedSystem {
    pub fn dim(&self) -> usize {
        self.initial_coeffs.len()
    }

    /// `-L_r a - b_r`.
    pub fn linear_rhs(&self, a: ArrayView1<f64>) -> Array1<f64> {
        -(self.linear_reduced.dot(&a)) - &self.mean_forcing
    }

    pub fn times(&self) -> Array1<f64> {
        Array1::from_shape_fn(self.n_steps + 1, |k| k as f64 * self.dt)
    }
}

pub fn build_reduced_system(basis: &PodBasis, grid: &Grid, params: &BurgersParams, dt: f64) -> Result<ReducedSystem> {
    if basis.n_points() != grid.n_points() {
        return Err(Error::DimensionMismatch {
            context: "basis rows vs grid",
            expected: grid.n_points(),
            found: basis.n_points(),
        });
    }
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::invalid(format!("dt must be positive, got {dt}")));
    }
    let ratio = params.t_final / dt;
    let n_steps = ratio.round();
    if n_steps < 1.0 || (n_steps * dt - params.t_final).abs() > 1e-8 * params.t_final {
        return Err(Error::invalid(format!(
            "t_final {} is not an integer multiple of dt {dt}",
            params.t_final
        )));
    }
    let op = linear_operator(grid, params.viscosity)?;
    let r = basis.n_retained;
    let mut l_psi = Array2::zeros((grid.n_points(), r));
    for k in 0..r {
        l_psi.column_mut(k).assign(&op.apply(basis.modes.column(k))?);
    }
    let linear_reduced = basis.modes.t().dot(&l_psi);
    let mean_forcing = basis.modes.t().dot(&op.apply(basis.mean_field.view())?);
    let u0 = initial_condition(grid, params)?;
    let initial_coeffs = basis.project(u0.view())?;
    Ok(ReducedSystem {
        linear_reduced,
        mean_forcing,
        initial_coeffs,
        dt,
        n_steps: n_steps as usize,
    })
}

/// Galerkin reduced nonlinear term `ψᵀ N[ū + ψ a]`, evaluated in full space.
pub fn galerkin_nonlinear(basis: &PodBasis, grid: &Grid, a: ArrayView1<f64>) -> Result<Array1<f64>> {
    let u = basis.reconstruct(a)?;
    let n = nonlinear_term(u.view(), grid)?;
    Ok(basis.modes.t().dot(&n))
}

pub fn rhs_gp(sys: &ReducedSystem, basis: &PodBasis, grid: &Grid, a: ArrayView1<f64>) -> Result<Array1<f64>> {
    Ok(sys.linear_rhs(a) - galerkin_nonlinear(basis, grid, a)?)
}

pub fn rhs_deim(
    sys: &ReducedSystem,
    op: &DeimOperator,
    basis: &PodBasis,
    grid: &Grid,
    a: ArrayView1<f64>,
) -> Result<Array1<f64>> {
    Ok(sys.linear_rhs(a) - deim_nonlinear(op, basis, a, grid)?)
}

/// Count of nonlinear-term evaluations by kind.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct NonlinearCalls {
    pub full_space: usize,
    pub deim: usize,
    pub surrogate: usize,
}

/// Supplies the reduced nonlinear term at each step.
pub trait NonlinearClosure {
    fn evaluate(&mut self, step: usize, a: ArrayView1<f64>) -> Result<Array1<f64>>;

    fn calls(&self) -> NonlinearCalls;

    /// Number of leading steps served by equation-based warm start.
    fn warm_start_steps(&self) -> usize {
        0
    }
}

pub struct GalerkinClosure<'a> {
    pub basis: &'a PodBasis,
    pub grid: &'a Grid,
    calls: NonlinearCalls,
}

impl<'a> GalerkinClosure<'a> {
    pub fn new(basis: &'a PodBasis, grid: &'a Grid) -> Self {
        GalerkinClosure {
            basis,
            grid,
            calls: NonlinearCalls::default(),
        }
    }
}

impl NonlinearClosure for GalerkinClosure<'_> {
    fn evaluate(&mut self, _step: usize, a: ArrayView1<f64>) -> Result<Array1<f64>> {
        self.calls.full_space += 1;
        galerkin_nonlinear(self.basis, self.grid, a)
    }

    fn calls(&self) -> NonlinearCalls {
        self.calls
    }
}

pub struct DeimClosure<'a> {
    pub op: &'a DeimOperator,
    pub basis: &'a PodBasis,
    pub grid: &'a Grid,
    calls: NonlinearCalls,
}

impl<'a> DeimClosure<'a> {
    pub fn new(op: &'a DeimOperator, basis: &'a PodBasis, grid: &'a Grid) -> Self {
        DeimClosure {
            op,
            basis,
            grid,
            calls: NonlinearCalls::default(),
        }
    }
}

impl NonlinearClosure for DeimClosure<'_> {
    fn evaluate(&mut self, _step: usize, a: ArrayView1<f64>) -> Result<Array1<f64>> {
        self.calls.deim += 1;
        deim_nonlinear(self.op, self.basis, a, self.grid)
    }

    fn calls(&self) -> NonlinearCalls {
        self.calls
    }
}

/// How the surrogate's first input window is filled.
#[derive(Debug, Clone, PartialEq)]
pub enum WarmStart {
    /// DEIM evaluations of the evolving reduced state.
    Deim,
    /// Columns of a precomputed `N_r × ≥window` series (e.g. the training data).
    Series(Array2<f64>),
}

pub struct SurrogateClosure<'a> {
    deim: DeimClosure<'a>,
    predictor: RecursivePredictor<'a>,
    window: usize,
    warm_start: WarmStart,
    surrogate_calls: usize,
}

impl<'a> SurrogateClosure<'a> {
    pub fn new(
        surrogate: &'a Surrogate,
        op: &'a DeimOperator,
        basis: &'a PodBasis,
        grid: &'a Grid,
        warm_start: WarmStart,
    ) -> Result<Self> {
        if surrogate.model.input_dim() != basis.n_retained {
            return Err(Error::DimensionMismatch {
                context: "surrogate width vs retained modes",
                expected: basis.n_retained,
                found: surrogate.model.input_dim(),
            });
        }
        if let WarmStart::Series(s) = &warm_start {
            if s.nrows() != basis.n_retained || s.ncols() < surrogate.window {
                return Err(Error::invalid(format!(
                    "warm-start series must be {} × ≥{}, got {} × {}",
                    basis.n_retained,
                    surrogate.window,
                    s.nrows(),
                    s.ncols()
                )));
            }
        }
        Ok(SurrogateClosure {
            deim: DeimClosure::new(op, basis, grid),
            predictor: RecursivePredictor::new(&surrogate.model, &surrogate.scaler, surrogate.window)?,
            window: surrogate.window,
            warm_start,
            surrogate_calls: 0,
        })
    }
}

impl NonlinearClosure for SurrogateClosure<'_> {
    fn evaluate(&mut self, step: usize, a: ArrayView1<f64>) -> Result<Array1<f64>> {
        if step < self.window {
            let n = match &self.warm_start {
                WarmStart::Deim => self.deim.evaluate(step, a)?,
                WarmStart::Series(s) => s.column(step).to_owned(),
            };
            self.predictor.push(n.view())?;
            Ok(n)
        } else {
            self.surrogate_calls += 1;
            self.predictor.step()
        }
    }

    fn calls(&self) -> NonlinearCalls {
        NonlinearCalls {
            surrogate: self.surrogate_calls,
            ..self.deim.calls()
        }
    }

    fn warm_start_steps(&self) -> usize {
        self.window
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Array1<f64>,
    /// `N_r × (n_steps + 1)`.
    pub coeffs: Array2<f64>,
    /// Nonlinear term used at each step; the last column is evaluated at
    /// the final state.
    pub nonlinear_history: Array2<f64>,
    pub method: Method,
    pub calls: NonlinearCalls,
    /// Calls made after the closure's warm-start phase.
    pub calls_after_warm_start: NonlinearCalls,
}

fn diverged(method: Method, step: usize) -> Error {
    Error::Diverged {
        method: method.tag().into(),
        step,
    }
}

/// Forward Euler `a_{k+1} = a_k + dt (-L_r a_k - b_r - n_k)`.
pub fn integrate_with<C: NonlinearClosure>(sys: &ReducedSystem, closure: &mut C, method: Method) -> Result<Trajectory> {
    let r = sys.dim();
    let steps = sys.n_steps;
    let mut coeffs = Array2::zeros((r, steps + 1));
    let mut history = Array2::zeros((r, steps + 1));
    let mut a = sys.initial_coeffs.clone();
    coeffs.column_mut(0).assign(&a);
    let mut warm_calls = NonlinearCalls::default();

    for k in 0..=steps {
        if k == closure.warm_start_steps() {
            warm_calls = closure.calls();
        }
        let n = closure.evaluate(k, a.view())?;
        if n.len() != r {
            return Err(Error::DimensionMismatch {
                context: "nonlinear closure output",
                expected: r,
                found: n.len(),
            });
        }
        if n.iter().any(|v| !v.is_finite()) {
            return Err(diverged(method, k));
        }
        history.column_mut(k).assign(&n);
        if k == steps {
            break;
        }
        let rhs = sys.linear_rhs(a.view()) - &n;
        a.scaled_add(sys.dt, &rhs);
        if a.iter().any(|v| !(v.abs() <= DIVERGENCE_BOUND)) {
            return Err(diverged(method, k + 1));
        }
        coeffs.column_mut(k + 1).assign(&a);
    }
    let calls = closure.calls();
    let calls_after_warm_start = NonlinearCalls {
        full_space: calls.full_space - warm_calls.full_space,
        deim: calls.deim - warm_calls.deim,
        surrogate: calls.surrogate - warm_calls.surrogate,
    };
    Ok(Trajectory {
        times: sys.times(),
        coeffs,
        nonlinear_history: history,
        method,
        calls,
        calls_after_warm_start,
    })
}

/// Nonlinear-term strategy for [`integrate`].
pub enum Strategy<'a> {
    Galerkin {
        basis: &'a PodBasis,
        grid: &'a Grid,
    },
    Deim {
        op: &'a DeimOperator,
        basis: &'a PodBasis,
        grid: &'a Grid,
    },
    Surrogate {
        surrogate: &'a Surrogate,
        op: &'a DeimOperator,
        basis: &'a PodBasis,
        grid: &'a Grid,
        warm_start: WarmStart,
    },
}

pub fn integrate(sys: &ReducedSystem, strategy: Strategy<'_>) -> Result<Trajectory> {
    match strategy {
        Strategy::Galerkin { basis, grid } => integrate_with(sys, &mut GalerkinClosure::new(basis, grid), Method::Gp),
        Strategy::Deim { op, basis, grid } => integrate_with(sys, &mut DeimClosure::new(op, basis, grid), Method::Deim),
        Strategy::Surrogate {
            surrogate,
            op,
            basis,
            grid,
            warm_start,
        } => {
            let mut closure = SurrogateClosure::new(surrogate, op, basis, grid, warm_start)?;
            integrate_with(sys, &mut closure, Method::Ml)
        }
    }
}
