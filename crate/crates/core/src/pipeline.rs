//! Configuration and the staged command pipeline behind the binary.
//!
//! Each stage reads the artifacts of the stages before it from the output
//! directory and writes its own next to them.

use std::path::{Path, PathBuf};

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analysis::{constant_baseline_error, cost_model, error_report, format_table, true_coefficients, CostReport, Dims, ErrorReport};
use crate::deim::{build_deim, deim_coefficient_series, DeimOperator};
use crate::error::{Error, Result};
use crate::io;
use crate::pde::{fom_solve, generate_snapshots, nonlinear_term, BurgersParams, Grid, SnapshotSet};
use crate::pod::{compute_pod, PodBasis};
use crate::rom::{build_reduced_system, integrate, Method, ReducedSystem, Strategy, Trajectory, WarmStart};
use crate::surrogate::{fit_surrogate, FittedSurrogate, SmoothingConfig, Surrogate, TrainConfig};

pub const STATES_FILE: &str = "states.csv";
pub const NONLINEAR_FILE: &str = "nonlinear.csv";
pub const POD_FILE: &str = "pod_basis.json";
pub const SINGULAR_VALUES_FILE: &str = "singular_values.csv";
pub const DEIM_FILE: &str = "deim_operator.json";
pub const DEIM_SERIES_FILE: &str = "deim_coefficients.csv";
pub const SURROGATE_FILE: &str = "surrogate.json";
pub const HISTORY_FILE: &str = "training_history.csv";
pub const SMOOTHED_FILE: &str = "smoothed_coefficients.csv";
pub const ERRORS_FILE: &str = "errors.csv";
pub const COSTS_FILE: &str = "costs.csv";
pub const SUMMARY_FILE: &str = "summary.txt";

/// Surrogate training settings; the seed lives at the top level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainSettings {
    pub window: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub val_fraction: f64,
    pub hidden_dim: usize,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_epsilon: f64,
}

impl Default for TrainSettings {
    fn default() -> Self {
        let t = TrainConfig::default();
        TrainSettings {
            window: t.window,
            batch_size: t.batch_size,
            learning_rate: t.learning_rate,
            epochs: t.epochs,
            val_fraction: t.val_fraction,
            hidden_dim: t.hidden_dim,
            adam_beta1: t.adam_beta1,
            adam_beta2: t.adam_beta2,
            adam_epsilon: t.adam_epsilon,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DtPolicy {
    /// One reduced step per snapshot interval.
    SnapshotSpacing,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WarmStartPolicy {
    /// Fill the first window with DEIM evaluations of the evolving state.
    Deim,
    /// Fill it with the stored DEIM coefficient series.
    TrainingSeries,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    pub reynolds: f64,
    /// `null` selects `exp(Re/8)`.
    pub t_zero: Option<f64>,
    pub t_final: f64,
    pub n_snapshots: usize,
    pub domain_length: f64,
    pub n_grid: usize,
    pub n_retained: usize,
    pub n_deim: usize,
    pub subtract_mean: bool,
    pub dt: DtPolicy,
    pub warm_start: WarmStartPolicy,
    pub smoothing: SmoothingConfig,
    pub train: TrainSettings,
    pub seed: u64,
    pub output_dir: PathBuf,
}

/// Seed used when none is configured.
pub const DEFAULT_SEED: u64 = 0;

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            reynolds: 1000.0,
            t_zero: None,
            t_final: 2.0,
            n_snapshots: 300,
            domain_length: 1.0,
            n_grid: 1024,
            n_retained: 12,
            n_deim: 24,
            subtract_mean: false,
            dt: DtPolicy::SnapshotSpacing,
            warm_start: WarmStartPolicy::Deim,
            smoothing: SmoothingConfig::default(),
            train: TrainSettings::default(),
            seed: DEFAULT_SEED,
            output_dir: PathBuf::from("out"),
        }
    }
}

fn config_error(key: &str, message: impl Into<String>) -> Error {
    Error::Config {
        key: key.to_string(),
        message: message.into(),
    }
}

/// Pulls the field name out of serde messages such as "unknown field `x`".
fn serde_key(message: &str) -> String {
    message
        .split('`')
        .nth(1)
        .map_or_else(|| "<config>".to_string(), str::to_string)
}

impl PipelineConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: PipelineConfig = serde_json::from_str(text).map_err(|e| {
            let msg = e.to_string();
            config_error(&serde_key(&msg), msg)
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_error("<config>", format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn params(&self) -> Result<BurgersParams> {
        match self.t_zero {
            Some(t0) => BurgersParams::with_t_zero(self.reynolds, t0, self.t_final, self.n_snapshots),
            None => BurgersParams::new(self.reynolds, self.t_final, self.n_snapshots),
        }
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.n_grid, self.domain_length)
    }

    pub fn train_config(&self) -> TrainConfig {
        let t = &self.train;
        TrainConfig {
            window: t.window,
            batch_size: t.batch_size,
            learning_rate: t.learning_rate,
            epochs: t.epochs,
            val_fraction: t.val_fraction,
            hidden_dim: t.hidden_dim,
            seed: self.seed,
            adam_beta1: t.adam_beta1,
            adam_beta2: t.adam_beta2,
            adam_epsilon: t.adam_epsilon,
        }
    }

    pub fn time_step(&self) -> f64 {
        match self.dt {
            DtPolicy::SnapshotSpacing => self.t_final / (self.n_snapshots.max(2) - 1) as f64,
            DtPolicy::Fixed(dt) => dt,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |key: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(config_error(key, format!("must be positive and finite, got {v}")))
            }
        };
        positive("reynolds", self.reynolds)?;
        positive("t_final", self.t_final)?;
        positive("domain_length", self.domain_length)?;
        if let Some(t0) = self.t_zero {
            positive("t_zero", t0)?;
        }
        if self.n_snapshots < 2 {
            return Err(config_error("n_snapshots", "need at least 2 snapshots"));
        }
        if self.n_grid < 3 {
            return Err(config_error("n_grid", "need at least 3 grid points"));
        }
        if self.n_retained == 0 || self.n_retained > self.n_snapshots.min(self.n_grid) {
            return Err(config_error(
                "n_retained",
                format!("must be in 1..={}", self.n_snapshots.min(self.n_grid)),
            ));
        }
        if self.n_deim == 0 || self.n_deim > self.n_snapshots.min(self.n_grid) {
            return Err(config_error(
                "n_deim",
                format!("must be in 1..={}", self.n_snapshots.min(self.n_grid)),
            ));
        }
        if let DtPolicy::Fixed(dt) = self.dt {
            positive("dt", dt)?;
        }
        let w = self.smoothing.window_length;
        if w.is_multiple_of(2) || w > self.n_snapshots {
            return Err(config_error(
                "smoothing.window_length",
                format!("must be odd and at most n_snapshots, got {w}"),
            ));
        }
        if self.smoothing.poly_order >= w {
            return Err(config_error("smoothing.poly_order", "must be below window_length"));
        }
        let train = self.train_config();
        train
            .validate()
            .map_err(|(key, msg)| config_error(&format!("train.{key}"), msg))?;
        if train.hidden_dim == 0 {
            return Err(config_error("train.hidden_dim", "must be positive"));
        }
        if train.window >= self.n_snapshots {
            return Err(config_error("train.window", "must be below n_snapshots"));
        }
        self.params().map_err(|e| config_error("reynolds", e.to_string()))?;
        Ok(())
    }

    /// SHA-256 of the canonical JSON of every setting that affects results.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.output_dir = PathBuf::new();
        let json = serde_json::to_string(&canonical).expect("config serializes");
        Sha256::digest(json.as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    pub fn dims(&self) -> Dims {
        Dims {
            n_full: self.n_grid,
            n_retained: self.n_retained,
            n_deim: self.n_deim,
            n_hidden: self.train.hidden_dim,
        }
    }
}

/// Output directory plus the config it was written under.
pub struct Workspace {
    pub config: PipelineConfig,
    pub hash: String,
    pub dir: PathBuf,
}

impl Workspace {
    pub fn new(config: PipelineConfig) -> Result<Self> {
        config.validate()?;
        std::fs::create_dir_all(&config.output_dir)?;
        Ok(Workspace {
            hash: config.hash(),
            dir: config.output_dir.clone(),
            config,
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    fn load_snapshots(&self) -> Result<SnapshotSet> {
        let s = io::read_snapshots(&self.dir)?;
        if s.states.nrows() != self.config.n_grid || s.n_snapshots() != self.config.n_snapshots {
            return Err(Error::MalformedArtifact {
                path: self.path(STATES_FILE),
                message: format!(
                    "holds {}×{} but the config asks for {}×{}",
                    s.states.nrows(),
                    s.n_snapshots(),
                    self.config.n_grid,
                    self.config.n_snapshots
                ),
            });
        }
        Ok(s)
    }

    fn load_basis(&self) -> Result<PodBasis> {
        let b = io::read_pod_basis(&self.path(POD_FILE))?;
        if b.n_points() != self.config.n_grid {
            return Err(Error::MalformedArtifact {
                path: self.path(POD_FILE),
                message: format!("basis has {} rows, grid has {}", b.n_points(), self.config.n_grid),
            });
        }
        Ok(b)
    }

    fn load_deim(&self) -> Result<DeimOperator> {
        io::read_deim_operator(&self.path(DEIM_FILE))
    }

    fn load_surrogate(&self) -> Result<Surrogate> {
        io::read_surrogate(&self.path(SURROGATE_FILE))
    }

    fn reduced_system(&self, basis: &PodBasis) -> Result<ReducedSystem> {
        let grid = self.config.grid()?;
        let params = self.config.params()?;
        build_reduced_system(basis, &grid, &params, self.config.time_step())
    }
}

pub fn cmd_defaults() -> String {
    PipelineConfig::default().to_json_pretty()
}

pub fn cmd_snapshots(ws: &Workspace) -> Result<SnapshotSet> {
    let snaps = generate_snapshots(&ws.config.grid()?, &ws.config.params()?)?;
    io::write_snapshots(&ws.dir, &ws.hash, &snaps)?;
    Ok(snaps)
}

pub fn cmd_pod(ws: &Workspace) -> Result<PodBasis> {
    let snaps = ws.load_snapshots()?;
    let basis = compute_pod(snaps.states.view(), ws.config.n_retained, ws.config.subtract_mean)?;
    io::write_pod_basis(&ws.path(POD_FILE), &ws.hash, &basis)?;
    io::write_singular_values(&ws.path(SINGULAR_VALUES_FILE), &ws.hash, &basis)?;
    Ok(basis)
}

pub struct DeimStage {
    pub operator: DeimOperator,
    /// `N_r × N_s` reduced nonlinear series from the stored snapshots.
    pub series: Array2<f64>,
    pub warnings: Vec<String>,
}

pub fn cmd_deim(ws: &Workspace) -> Result<DeimStage> {
    let snaps = ws.load_snapshots()?;
    let basis = ws.load_basis()?;
    let operator = build_deim(&basis, snaps.nonlinear_terms.view(), ws.config.n_deim)?;
    let series = deim_coefficient_series(&operator, &basis, &snaps)?;
    io::write_deim_operator(&ws.path(DEIM_FILE), &ws.hash, &operator)?;
    io::write_series(&ws.path(DEIM_SERIES_FILE), &ws.hash, "n", snaps.times.view(), series.view())?;
    let warnings = operator.warnings();
    Ok(DeimStage {
        operator,
        series,
        warnings,
    })
}

pub fn cmd_train(ws: &Workspace) -> Result<FittedSurrogate> {
    let (times, series) = io::read_series(&ws.path(DEIM_SERIES_FILE))?;
    let fitted = fit_surrogate(series.view(), &ws.config.smoothing, &ws.config.train_config())?;
    io::write_surrogate(&ws.path(SURROGATE_FILE), &ws.hash, &fitted.surrogate)?;
    io::write_history(&ws.path(HISTORY_FILE), &ws.hash, &fitted.history)?;
    io::write_series(&ws.path(SMOOTHED_FILE), &ws.hash, "n", times.view(), fitted.smoothed.view())?;
    Ok(fitted)
}

/// Full-order solution projected onto the basis, on the snapshot times.
fn fom_trajectory(ws: &Workspace, basis: &PodBasis) -> Result<Trajectory> {
    let grid = ws.config.grid()?;
    let params = ws.config.params()?;
    let fields = fom_solve(&grid, &params)?;
    let coeffs = basis.project_columns(fields.view())?;
    let mut history = Array2::zeros(coeffs.raw_dim());
    for (k, col) in fields.columns().into_iter().enumerate() {
        let n = nonlinear_term(col, &grid)?;
        history.column_mut(k).assign(&basis.modes.t().dot(&n));
    }
    Ok(Trajectory {
        times: params.snapshot_times(),
        coeffs,
        nonlinear_history: history,
        method: Method::Fom,
        calls: Default::default(),
        calls_after_warm_start: Default::default(),
    })
}

pub fn cmd_run(ws: &Workspace, method: Method) -> Result<Trajectory> {
    let basis = ws.load_basis()?;
    let grid = ws.config.grid()?;
    let traj = match method {
        Method::Fom => fom_trajectory(ws, &basis)?,
        Method::Gp => {
            let sys = ws.reduced_system(&basis)?;
            integrate(&sys, Strategy::Galerkin { basis: &basis, grid: &grid })?
        }
        Method::Deim => {
            let sys = ws.reduced_system(&basis)?;
            let op = ws.load_deim()?;
            integrate(&sys, Strategy::Deim { op: &op, basis: &basis, grid: &grid })?
        }
        Method::Ml => {
            let sys = ws.reduced_system(&basis)?;
            let op = ws.load_deim()?;
            let surrogate = ws.load_surrogate()?;
            let warm_start = match ws.config.warm_start {
                WarmStartPolicy::Deim => WarmStart::Deim,
                WarmStartPolicy::TrainingSeries => WarmStart::Series(io::read_series(&ws.path(DEIM_SERIES_FILE))?.1),
            };
            integrate(
                &sys,
                Strategy::Surrogate {
                    surrogate: &surrogate,
                    op: &op,
                    basis: &basis,
                    grid: &grid,
                    warm_start,
                },
            )?
        }
    };
    io::write_trajectory(&ws.dir, &ws.hash, &traj)?;
    Ok(traj)
}

pub fn cost_reports(config: &PipelineConfig) -> Vec<CostReport> {
    [Method::Fom, Method::Gp, Method::Deim, Method::Ml]
        .into_iter()
        .map(|m| cost_model(config.dims(), m, config.train.window))
        .collect()
}

pub fn cmd_cost(ws: &Workspace) -> Result<Vec<CostReport>> {
    let costs = cost_reports(&ws.config);
    io::write_cost_reports(&ws.path(COSTS_FILE), &ws.hash, &costs)?;
    Ok(costs)
}

pub struct Comparison {
    pub errors: Vec<ErrorReport>,
    pub costs: Vec<CostReport>,
    pub trajectories: Vec<Trajectory>,
    pub constant_baseline: f64,
    pub table: String,
}

impl Comparison {
    pub fn error_of(&self, method: Method) -> Option<&ErrorReport> {
        self.errors.iter().find(|e| e.method == method)
    }
}

/// Runs GP, DEIM and ML and scores them against the projected snapshots.
pub fn cmd_compare(ws: &Workspace) -> Result<Comparison> {
    let snaps = ws.load_snapshots()?;
    let basis = ws.load_basis()?;
    let truth = true_coefficients(&snaps, &basis)?;
    let mut trajectories = Vec::new();
    let mut errors = Vec::new();
    for method in [Method::Gp, Method::Deim, Method::Ml] {
        let traj = cmd_run(ws, method)?;
        errors.push(error_report(&traj, truth.view(), &basis, &snaps)?);
        trajectories.push(traj);
    }
    io::write_error_reports(&ws.path(ERRORS_FILE), &ws.hash, &errors)?;
    let costs = cmd_cost(ws)?;
    let constant_baseline = constant_baseline_error(truth.view())?;
    let mut table = format_table(&errors, &costs);
    table.push_str(&format!("\nconstant-coefficient baseline l2_modal_error: {constant_baseline:.6}\n"));
    std::fs::write(ws.path(SUMMARY_FILE), format!("# config_hash={}\n{table}", ws.hash))?;
    Ok(Comparison {
        errors,
        costs,
        trajectories,
        constant_baseline,
        table,
    })
}

/// Every stage in order.
pub fn cmd_all(ws: &Workspace) -> Result<Comparison> {
    cmd_snapshots(ws)?;
    cmd_pod(ws)?;
    cmd_deim(ws)?;
    cmd_train(ws)?;
    cmd_compare(ws)
}
