//! Uniform-grid discretization of the 1D viscous Burgers problem
//! `u_t + u u_x - ν u_xx = 0` on `[0, L]` with homogeneous Dirichlet ends,
//! together with its closed-form moving-shock solution.

use ndarray::{Array1, Array2, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Nodal values on a [`Grid`].
pub type Field = Array1<f64>;

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    n_points: usize,
    domain_length: f64,
    spacing: f64,
    coordinates: Array1<f64>,
}

impl Grid {
    pub fn new(n_points: usize, domain_length: f64) -> Result<Self> {
        if n_points < 3 {
            return Err(Error::invalid(format!(
                "grid needs at least 3 points, got {n_points}"
            )));
        }
        if !(domain_length.is_finite() && domain_length > 0.0) {
            return Err(Error::invalid(format!(
                "domain length must be positive and finite, got {domain_length}"
            )));
        }
        let last = (n_points - 1) as f64;
        let spacing = domain_length / last;
        let mut coordinates = Array1::from_shape_fn(n_points, |i| domain_length * (i as f64) / last);
        coordinates[n_points - 1] = domain_length;
        Ok(Grid {
            n_points,
            domain_length,
            spacing,
            coordinates,
        })
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn domain_length(&self) -> f64 {
        self.domain_length
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn coordinates(&self) -> &Array1<f64> {
        &self.coordinates
    }

    fn check_len(&self, len: usize, context: &'static str) -> Result<()> {
        if len != self.n_points {
            return Err(Error::DimensionMismatch {
                context,
                expected: self.n_points,
                found: len,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BurgersParams {
    pub reynolds: f64,
    pub viscosity: f64,
    pub t_zero: f64,
    pub t_final: f64,
    pub n_snapshots: usize,
}

impl BurgersParams {
    /// Parameters with the customary `t₀ = exp(Re/8)`, which puts the
    /// initial shock at `x = 0.5`.
    pub fn new(reynolds: f64, t_final: f64, n_snapshots: usize) -> Result<Self> {
        Self::with_t_zero(reynolds, (reynolds / 8.0).exp(), t_final, n_snapshots)
    }

    pub fn with_t_zero(reynolds: f64, t_zero: f64, t_final: f64, n_snapshots: usize) -> Result<Self> {
        let p = BurgersParams {
            reynolds,
            viscosity: 1.0 / reynolds,
            t_zero,
            t_final,
            n_snapshots,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.reynolds.is_finite() && self.reynolds > 0.0) {
            return Err(Error::invalid(format!("reynolds must be positive, got {}", self.reynolds)));
        }
        if ((self.viscosity * self.reynolds) - 1.0).abs() > 1e-12 {
            return Err(Error::invalid("viscosity must equal 1/reynolds"));
        }
        if !(self.t_zero.is_finite() && self.t_zero > 0.0) {
            return Err(Error::invalid(format!("t_zero must be positive and finite, got {}", self.t_zero)));
        }
        if !(self.t_final.is_finite() && self.t_final > 0.0) {
            return Err(Error::invalid(format!("t_final must be positive, got {}", self.t_final)));
        }
        if self.n_snapshots < 2 {
            return Err(Error::invalid(format!("n_snapshots must be at least 2, got {}", self.n_snapshots)));
        }
        Ok(())
    }

    /// Uniform sample times `k t_f / (N_s - 1)`, with the last one pinned to `t_f`.
    pub fn snapshot_times(&self) -> Array1<f64> {
        let last = (self.n_snapshots - 1) as f64;
        let mut t = Array1::from_shape_fn(self.n_snapshots, |k| (k as f64) * self.t_final / last);
        t[self.n_snapshots - 1] = self.t_final;
        t
    }

    pub fn snapshot_spacing(&self) -> f64 {
        self.t_final / (self.n_snapshots - 1) as f64
    }
}

/// Closed-form solution
/// `u = (x/(t+1)) / (1 + sqrt((t+1)/t₀) exp(Re x² / (4t+4)))`.
///
/// The exponential is combined with the square root in log space, so no
/// intermediate overflows for any finite input.
pub fn exact_solution(x: f64, t: f64, params: &BurgersParams) -> Result<f64> {
    if !x.is_finite() || !t.is_finite() {
        return Err(Error::invalid(format!("non-finite input x={x}, t={t}")));
    }
    if t < 0.0 {
        return Err(Error::invalid(format!("time must be nonnegative, got {t}")));
    }
    let numerator = x / (t + 1.0);
    let log_term =
        0.5 * ((t + 1.0).ln() - params.t_zero.ln()) + params.reynolds * x * x / (4.0 * t + 4.0);
    let value = if log_term > 0.0 {
        let decay = (-log_term).exp();
        numerator * decay / (1.0 + decay)
    } else {
        numerator / (1.0 + log_term.exp())
    };
    Ok(value)
}

pub fn sample_exact(grid: &Grid, t: f64, params: &BurgersParams) -> Result<Field> {
    let mut out = Array1::zeros(grid.n_points());
    for (o, &x) in out.iter_mut().zip(grid.coordinates().iter()) {
        *o = exact_solution(x, t, params)?;
    }
    Ok(out)
}

pub fn initial_condition(grid: &Grid, params: &BurgersParams) -> Result<Field> {
    sample_exact(grid, 0.0, params)
}

/// Tridiagonal matrix stored by diagonals.
#[derive(Debug, Clone, PartialEq)]
pub struct Tridiagonal {
    /// `lower[i]` is entry `(i+1, i)`.
    pub lower: Vec<f64>,
    pub diag: Vec<f64>,
    /// `upper[i]` is entry `(i, i+1)`.
    pub upper: Vec<f64>,
}

impl Tridiagonal {
    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn apply(&self, u: ArrayView1<f64>) -> Result<Array1<f64>> {
        let n = self.dim();
        if u.len() != n {
            return Err(Error::DimensionMismatch {
                context: "tridiagonal apply",
                expected: n,
                found: u.len(),
            });
        }
        let mut out = Array1::zeros(n);
        for i in 0..n {
            let mut s = self.diag[i] * u[i];
            if i > 0 {
                s += self.lower[i - 1] * u[i - 1];
            }
            if i + 1 < n {
                s += self.upper[i] * u[i + 1];
            }
            out[i] = s;
        }
        Ok(out)
    }

    pub fn to_dense(&self) -> Array2<f64> {
        let n = self.dim();
        let mut m = Array2::zeros((n, n));
        for i in 0..n {
            m[[i, i]] = self.diag[i];
            if i + 1 < n {
                m[[i, i + 1]] = self.upper[i];
                m[[i + 1, i]] = self.lower[i];
            }
        }
        m
    }
}

/// The linear operator `-ν D₂` with zero rows at both Dirichlet ends, so
/// that the evolution reads `u̇ + N[u] + L u = 0`.
pub fn linear_operator(grid: &Grid, viscosity: f64) -> Result<Tridiagonal> {
    if !(viscosity.is_finite() && viscosity > 0.0) {
        return Err(Error::invalid(format!("viscosity must be positive, got {viscosity}")));
    }
    let n = grid.n_points();
    let c = viscosity / (grid.spacing() * grid.spacing());
    let mut lower = vec![0.0; n - 1];
    let mut diag = vec![0.0; n];
    let mut upper = vec![0.0; n - 1];
    for i in 1..n - 1 {
        lower[i - 1] = -c;
        diag[i] = 2.0 * c;
        upper[i] = -c;
    }
    Ok(Tridiagonal { lower, diag, upper })
}

/// Advective nonlinearity `u u_x` by central differences; zero at the ends.
pub fn nonlinear_term(field: ArrayView1<f64>, grid: &Grid) -> Result<Field> {
    grid.check_len(field.len(), "nonlinear_term field")?;
    let n = field.len();
    let inv_2dx = 1.0 / (2.0 * grid.spacing());
    let mut out = Array1::zeros(n);
    for i in 1..n - 1 {
        out[i] = field[i] * (field[i + 1] - field[i - 1]) * inv_2dx;
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotSet {
    /// `N_f × N_s`, column `k` is `u(·, t_k)`.
    pub states: Array2<f64>,
    /// `N_f × N_s`, column `k` is `N[u(·, t_k)]`.
    pub nonlinear_terms: Array2<f64>,
    pub times: Array1<f64>,
}

impl SnapshotSet {
    pub fn n_snapshots(&self) -> usize {
        self.times.len()
    }
}

pub fn generate_snapshots(grid: &Grid, params: &BurgersParams) -> Result<SnapshotSet> {
    params.validate()?;
    let times = params.snapshot_times();
    let n = grid.n_points();
    let ns = times.len();
    let mut states = Array2::zeros((n, ns));
    let mut nonlinear_terms = Array2::zeros((n, ns));
    for (k, &t) in times.iter().enumerate() {
        let u = sample_exact(grid, t, params)?;
        let nl = nonlinear_term(u.view(), grid)?;
        states.column_mut(k).assign(&u);
        nonlinear_terms.column_mut(k).assign(&nl);
    }
    Ok(SnapshotSet {
        states,
        nonlinear_terms,
        times,
    })
}

#[derive(Debug, Clone)]
pub struct FomStep {
    pub field: Field,
    /// Set when `dt` exceeds the explicit diffusive bound `Δx²/(2ν)`.
    pub stability_warning: bool,
}

pub fn diffusive_step_limit(grid: &Grid, viscosity: f64) -> f64 {
    grid.spacing() * grid.spacing() / (2.0 * viscosity)
}

/// One explicit Euler step of the full-order model.
pub fn fom_step(field: ArrayView1<f64>, grid: &Grid, viscosity: f64, dt: f64) -> Result<FomStep> {
    if !(dt.is_finite() && dt >= 0.0) {
        return Err(Error::invalid(format!("dt must be nonnegative, got {dt}")));
    }
    let op = linear_operator(grid, viscosity)?;
    let nl = nonlinear_term(field, grid)?;
    let lin = op.apply(field)?;
    let mut next = field.to_owned();
    let n = next.len();
    for i in 1..n - 1 {
        next[i] -= dt * (nl[i] + lin[i]);
    }
    next[0] = 0.0;
    next[n - 1] = 0.0;
    Ok(FomStep {
        field: next,
        stability_warning: dt > diffusive_step_limit(grid, viscosity),
    })
}

/// Integrates the full-order model from the exact initial condition and
/// returns the states at the snapshot times. Each snapshot interval is
/// split into equal substeps of at most half the diffusive limit.
pub fn fom_solve(grid: &Grid, params: &BurgersParams) -> Result<Array2<f64>> {
    let times = params.snapshot_times();
    let interval = params.snapshot_spacing();
    let limit = 0.5 * diffusive_step_limit(grid, params.viscosity);
    let substeps = (interval / limit).ceil().max(1.0) as usize;
    let dt = interval / substeps as f64;

    let mut u = initial_condition(grid, params)?;
    let mut out = Array2::zeros((grid.n_points(), times.len()));
    out.column_mut(0).assign(&u);
    for k in 1..times.len() {
        for _ in 0..substeps {
            u = fom_step(u.view(), grid, params.viscosity, dt)?.field;
        }
        if u.iter().any(|v| !v.is_finite()) {
            return Err(Error::Diverged {
                method: "FOM".into(),
                step: k,
            });
        }
        out.column_mut(k).assign(&u);
    }
    Ok(out)
}
