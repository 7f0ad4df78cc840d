//! On-disk artifact formats.
//!
//! Every number is written with 17 significant digits (`{:.16e}`), which
//! round-trips `f64` exactly. CSV files start with a `# config_hash=...`
//! comment line; JSON documents carry a `config_hash` field.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::analysis::{CostReport, ErrorReport};
use crate::deim::DeimOperator;
use crate::error::{Error, Result};
use crate::pde::SnapshotSet;
use crate::pod::{truncation_energy, PodBasis};
use crate::rom::Trajectory;
use crate::surrogate::lstm::LstmModel;
use crate::surrogate::{Scaler, Surrogate, TrainHistory};

pub const SURROGATE_FORMAT_VERSION: u32 = 1;

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Compact JSON whose floats use 17 significant digits.
struct Sig17Formatter;

impl serde_json::ser::Formatter for Sig17Formatter {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> std::io::Result<()> {
        writer.write_all(fmt_f64(value).as_bytes())
    }
}

pub fn to_json_string<T: Serialize>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Sig17Formatter);
    value.serialize(&mut ser)?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json emits UTF-8"))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    std::fs::write(path, to_json_string(value)?)?;
    Ok(())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = read_artifact(path)?;
    serde_json::from_str(&text).map_err(|e| Error::MalformedArtifact {
        path: path.to_owned(),
        message: e.to_string(),
    })
}

fn read_artifact(path: &Path) -> Result<String> {
    if !path.exists() {
        return Err(Error::MissingArtifact(path.to_owned()));
    }
    Ok(std::fs::read_to_string(path)?)
}

fn rows_of(m: ArrayView2<f64>) -> Vec<Vec<f64>> {
    m.rows().into_iter().map(|r| r.to_vec()).collect()
}

fn matrix_from_rows(rows: &[Vec<f64>], what: &str) -> Result<Array2<f64>> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::invalid(format!("{what}: ragged rows")));
    }
    Ok(Array2::from_shape_fn((nrows, ncols), |(i, j)| rows[i][j]))
}

/// Writes a CSV file whose first line is the config-hash comment.
pub fn write_csv(path: &Path, config_hash: &str, header: Option<&[String]>, rows: &[Vec<String>]) -> Result<()> {
    let mut file = BufWriter::new(File::create(path)?);
    writeln!(file, "# config_hash={config_hash}")?;
    let mut w = csv::Writer::from_writer(file);
    if let Some(h) = header {
        w.write_record(h)?;
    }
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a numeric CSV, skipping comment lines and (optionally) a header.
pub fn read_csv_numbers(path: &Path, has_header: bool) -> Result<Vec<Vec<f64>>> {
    let text = read_artifact(path)?;
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .has_headers(has_header)
        .from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for rec in reader.records() {
        let rec = rec?;
        let row = rec
            .iter()
            .map(|f| {
                f.trim().parse::<f64>().map_err(|e| Error::MalformedArtifact {
                    path: path.to_owned(),
                    message: format!("bad number {f:?}: {e}"),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok(rows)
}

fn number_row(v: impl IntoIterator<Item = f64>) -> Vec<String> {
    v.into_iter().map(fmt_f64).collect()
}

/// Snapshot layout: first row holds the times, row `i + 1` holds node `i`.
pub fn write_snapshot_matrix(path: &Path, hash: &str, times: ArrayView1<f64>, m: ArrayView2<f64>) -> Result<()> {
    let mut rows = vec![number_row(times.iter().copied())];
    rows.extend(m.rows().into_iter().map(|r| number_row(r.iter().copied())));
    write_csv(path, hash, None, &rows)
}

pub fn read_snapshot_matrix(path: &Path) -> Result<(Array1<f64>, Array2<f64>)> {
    let rows = read_csv_numbers(path, false)?;
    if rows.len() < 2 {
        return Err(Error::MalformedArtifact {
            path: path.to_owned(),
            message: "expected a times row and at least one node row".into(),
        });
    }
    let times = Array1::from(rows[0].clone());
    let m = matrix_from_rows(&rows[1..], "snapshot matrix").map_err(|e| Error::MalformedArtifact {
        path: path.to_owned(),
        message: e.to_string(),
    })?;
    if m.ncols() != times.len() {
        return Err(Error::MalformedArtifact {
            path: path.to_owned(),
            message: format!("{} times but {} columns", times.len(), m.ncols()),
        });
    }
    Ok((times, m))
}

pub fn write_snapshots(dir: &Path, hash: &str, s: &SnapshotSet) -> Result<()> {
    write_snapshot_matrix(&dir.join("states.csv"), hash, s.times.view(), s.states.view())?;
    write_snapshot_matrix(&dir.join("nonlinear.csv"), hash, s.times.view(), s.nonlinear_terms.view())
}

pub fn read_snapshots(dir: &Path) -> Result<SnapshotSet> {
    let (times, states) = read_snapshot_matrix(&dir.join("states.csv"))?;
    let (times_nl, nonlinear_terms) = read_snapshot_matrix(&dir.join("nonlinear.csv"))?;
    if times != times_nl || states.dim() != nonlinear_terms.dim() {
        return Err(Error::MalformedArtifact {
            path: dir.join("nonlinear.csv"),
            message: "does not match states.csv".into(),
        });
    }
    Ok(SnapshotSet {
        states,
        nonlinear_terms,
        times,
    })
}

/// Time-major series: header `time,<prefix>_0,...`, one row per sample.
pub fn write_series(path: &Path, hash: &str, prefix: &str, times: ArrayView1<f64>, series: ArrayView2<f64>) -> Result<()> {
    let mut header = vec!["time".to_string()];
    header.extend((0..series.nrows()).map(|i| format!("{prefix}_{i}")));
    let rows: Vec<Vec<String>> = series
        .columns()
        .into_iter()
        .zip(times.iter())
        .map(|(col, &t)| number_row(std::iter::once(t).chain(col.iter().copied())))
        .collect();
    write_csv(path, hash, Some(&header), &rows)
}

/// Inverse of [`write_series`]: returns `(times, d × N)`.
pub fn read_series(path: &Path) -> Result<(Array1<f64>, Array2<f64>)> {
    let rows = read_csv_numbers(path, true)?;
    let m = matrix_from_rows(&rows, "series").map_err(|e| Error::MalformedArtifact {
        path: path.to_owned(),
        message: e.to_string(),
    })?;
    if m.ncols() < 2 {
        return Err(Error::MalformedArtifact {
            path: path.to_owned(),
            message: "expected a time column and at least one channel".into(),
        });
    }
    let times = m.column(0).to_owned();
    let series = m.slice(ndarray::s![.., 1..]).t().to_owned();
    Ok((times, series))
}

pub fn write_trajectory(dir: &Path, hash: &str, traj: &Trajectory) -> Result<()> {
    let name = traj.method.tag().to_lowercase();
    write_series(&dir.join(format!("trajectory_{name}.csv")), hash, "a", traj.times.view(), traj.coeffs.view())?;
    write_series(
        &dir.join(format!("nonlinear_{name}.csv")),
        hash,
        "n",
        traj.times.view(),
        traj.nonlinear_history.view(),
    )
}

#[derive(Debug, Serialize, Deserialize)]
struct PodBasisDoc {
    config_hash: String,
    n_retained: usize,
    singular_values: Vec<f64>,
    mean_field: Vec<f64>,
    modes: Vec<Vec<f64>>,
}

pub fn write_pod_basis(path: &Path, hash: &str, b: &PodBasis) -> Result<()> {
    write_json(
        path,
        &PodBasisDoc {
            config_hash: hash.to_string(),
            n_retained: b.n_retained,
            singular_values: b.singular_values.to_vec(),
            mean_field: b.mean_field.to_vec(),
            modes: rows_of(b.modes.view()),
        },
    )
}

pub fn read_pod_basis(path: &Path) -> Result<PodBasis> {
    let doc: PodBasisDoc = read_json(path)?;
    let modes = matrix_from_rows(&doc.modes, "modes")?;
    if modes.ncols() != doc.n_retained || modes.nrows() != doc.mean_field.len() {
        return Err(Error::MalformedArtifact {
            path: path.to_owned(),
            message: "mode matrix shape disagrees with n_retained / mean_field".into(),
        });
    }
    Ok(PodBasis {
        modes,
        singular_values: Array1::from(doc.singular_values),
        mean_field: Array1::from(doc.mean_field),
        n_retained: doc.n_retained,
    })
}

pub fn write_singular_values(path: &Path, hash: &str, b: &PodBasis) -> Result<()> {
    let header = ["index", "singular_value", "cumulative_energy"].map(String::from);
    let total_nonzero = b.singular_values.iter().any(|s| *s > 0.0);
    let rows = b
        .singular_values
        .iter()
        .enumerate()
        .map(|(k, &s)| {
            let energy = if total_nonzero {
                truncation_energy(b.singular_values.view(), k + 1)?
            } else {
                0.0
            };
            Ok(vec![k.to_string(), fmt_f64(s), fmt_f64(energy)])
        })
        .collect::<Result<Vec<_>>>()?;
    write_csv(path, hash, Some(&header), &rows)
}

#[derive(Debug, Serialize, Deserialize)]
struct DeimDoc {
    config_hash: String,
    n_points: usize,
    indices: Vec<usize>,
    reduced_projector: Vec<Vec<f64>>,
    condition_number: f64,
    stencil_nodes: Vec<usize>,
    stencil_modes: Vec<Vec<f64>>,
    stencil_mean: Vec<f64>,
    nonlinear_modes: Vec<Vec<f64>>,
}

pub fn write_deim_operator(path: &Path, hash: &str, op: &DeimOperator) -> Result<()> {
    write_json(
        path,
        &DeimDoc {
            config_hash: hash.to_string(),
            n_points: op.n_points,
            indices: op.indices.clone(),
            reduced_projector: rows_of(op.reduced_projector.view()),
            condition_number: op.condition_number,
            stencil_nodes: op.stencil_nodes.clone(),
            stencil_modes: rows_of(op.stencil_modes.view()),
            stencil_mean: op.stencil_mean.to_vec(),
            nonlinear_modes: rows_of(op.nonlinear_modes.view()),
        },
    )
}

pub fn read_deim_operator(path: &Path) -> Result<DeimOperator> {
    let doc: DeimDoc = read_json(path)?;
    let malformed = |e: Error| Error::MalformedArtifact {
        path: path.to_owned(),
        message: e.to_string(),
    };
    DeimOperator::from_parts(
        matrix_from_rows(&doc.nonlinear_modes, "nonlinear_modes").map_err(malformed)?,
        doc.indices,
        matrix_from_rows(&doc.reduced_projector, "reduced_projector").map_err(malformed)?,
        doc.condition_number,
        doc.stencil_nodes,
        matrix_from_rows(&doc.stencil_modes, "stencil_modes").map_err(malformed)?,
        Array1::from(doc.stencil_mean),
    )
    .map_err(malformed)
}

#[derive(Debug, Serialize, Deserialize)]
struct GateDoc {
    input: Vec<Vec<f64>>,
    forget: Vec<Vec<f64>>,
    cell: Vec<Vec<f64>>,
    output: Vec<Vec<f64>>,
}

impl GateDoc {
    fn from_matrices(m: &[Array2<f64>; 4]) -> Self {
        GateDoc {
            input: rows_of(m[0].view()),
            forget: rows_of(m[1].view()),
            cell: rows_of(m[2].view()),
            output: rows_of(m[3].view()),
        }
    }

    fn into_matrices(self) -> Result<[Array2<f64>; 4]> {
        Ok([
            matrix_from_rows(&self.input, "input gate")?,
            matrix_from_rows(&self.forget, "forget gate")?,
            matrix_from_rows(&self.cell, "cell gate")?,
            matrix_from_rows(&self.output, "output gate")?,
        ])
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct BiasDoc {
    input: Vec<f64>,
    forget: Vec<f64>,
    cell: Vec<f64>,
    output: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct SurrogateDoc {
    format_version: u32,
    config_hash: String,
    window: usize,
    input_dim: usize,
    hidden_dim: usize,
    gate_input_weights: GateDoc,
    gate_recurrent_weights: GateDoc,
    gate_biases: BiasDoc,
    head_weights: Vec<Vec<f64>>,
    head_bias: Vec<f64>,
    scaler: Scaler,
}

pub fn surrogate_json(hash: &str, s: &Surrogate) -> Result<String> {
    let m = &s.model;
    let b = &m.gate_biases;
    to_json_string(&SurrogateDoc {
        format_version: SURROGATE_FORMAT_VERSION,
        config_hash: hash.to_string(),
        window: s.window,
        input_dim: m.input_dim(),
        hidden_dim: m.hidden_dim(),
        gate_input_weights: GateDoc::from_matrices(&m.gate_input_weights),
        gate_recurrent_weights: GateDoc::from_matrices(&m.gate_recurrent_weights),
        gate_biases: BiasDoc {
            input: b[0].to_vec(),
            forget: b[1].to_vec(),
            cell: b[2].to_vec(),
            output: b[3].to_vec(),
        },
        head_weights: rows_of(m.head_weights.view()),
        head_bias: m.head_bias.to_vec(),
        scaler: s.scaler.clone(),
    })
}

pub fn write_surrogate(path: &Path, hash: &str, s: &Surrogate) -> Result<()> {
    std::fs::write(path, surrogate_json(hash, s)?)?;
    Ok(())
}

pub fn read_surrogate(path: &Path) -> Result<Surrogate> {
    let doc: SurrogateDoc = read_json(path)?;
    let malformed = |msg: String| Error::MalformedArtifact {
        path: path.to_owned(),
        message: msg,
    };
    if doc.format_version != SURROGATE_FORMAT_VERSION {
        return Err(malformed(format!("unsupported format_version {}", doc.format_version)));
    }
    let model = LstmModel {
        gate_input_weights: doc.gate_input_weights.into_matrices().map_err(|e| malformed(e.to_string()))?,
        gate_recurrent_weights: doc.gate_recurrent_weights.into_matrices().map_err(|e| malformed(e.to_string()))?,
        gate_biases: [
            Array1::from(doc.gate_biases.input),
            Array1::from(doc.gate_biases.forget),
            Array1::from(doc.gate_biases.cell),
            Array1::from(doc.gate_biases.output),
        ],
        head_weights: matrix_from_rows(&doc.head_weights, "head_weights").map_err(|e| malformed(e.to_string()))?,
        head_bias: Array1::from(doc.head_bias),
    };
    model.validate().map_err(|e| malformed(e.to_string()))?;
    if model.input_dim() != doc.input_dim || model.hidden_dim() != doc.hidden_dim || doc.scaler.dim() != doc.input_dim {
        return Err(malformed("declared dimensions disagree with weight shapes".into()));
    }
    Ok(Surrogate {
        model,
        scaler: doc.scaler,
        window: doc.window,
    })
}

pub fn write_history(path: &Path, hash: &str, h: &TrainHistory) -> Result<()> {
    let header = ["epoch", "train_mse", "val_mse"].map(String::from);
    let rows: Vec<Vec<String>> = h
        .epochs
        .iter()
        .map(|e| vec![e.epoch.to_string(), fmt_f64(e.train_mse), fmt_f64(e.val_mse)])
        .collect();
    write_csv(path, hash, Some(&header), &rows)
}

pub fn write_error_reports(path: &Path, hash: &str, reports: &[ErrorReport]) -> Result<()> {
    let n_modes = reports.first().map_or(0, |r| r.per_mode_errors.len());
    let mut header: Vec<String> = ["method", "l2_modal_error", "field_error", "field_error_final"]
        .map(String::from)
        .to_vec();
    header.extend((0..n_modes).map(|k| format!("rms_mode_{k}")));
    let rows: Vec<Vec<String>> = reports
        .iter()
        .map(|r| {
            let mut row = vec![
                r.method.tag().to_string(),
                fmt_f64(r.l2_modal_error),
                fmt_f64(r.field_error),
                fmt_f64(r.field_error_final),
            ];
            row.extend(r.per_mode_errors.iter().map(|&v| fmt_f64(v)));
            row
        })
        .collect();
    write_csv(path, hash, Some(&header), &rows)
}

pub fn write_cost_reports(path: &Path, hash: &str, reports: &[CostReport]) -> Result<()> {
    let header = [
        "method",
        "flops_per_step",
        "kernel_flops_per_step",
        "nonlinear_evals_per_step",
        "n_full",
        "n_retained",
        "n_deim",
        "n_hidden",
    ]
    .map(String::from);
    let rows: Vec<Vec<String>> = reports
        .iter()
        .map(|c| {
            vec![
                c.method.tag().to_string(),
                c.flops_per_step.to_string(),
                c.kernel_flops_per_step.to_string(),
                c.nonlinear_evals_per_step.to_string(),
                c.dims.n_full.to_string(),
                c.dims.n_retained.to_string(),
                c.dims.n_deim.to_string(),
                c.dims.n_hidden.to_string(),
            ]
        })
        .collect();
    write_csv(path, hash, Some(&header), &rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn seventeen_significant_digits() {
        assert_eq!(fmt_f64(0.25), "2.5000000000000000e-1");
        assert_eq!(fmt_f64(-3.0), "-3.0000000000000000e0");
    }

    #[test]
    fn json_floats_use_fixed_precision() {
        let s = to_json_string(&vec![0.1, 2.0]).unwrap();
        assert_eq!(s, "[1.0000000000000001e-1,2.0000000000000000e0]\n");
    }

    proptest! {
        #[test]
        fn decimal_form_round_trips(x in proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL | proptest::num::f64::ZERO) {
            let back: f64 = fmt_f64(x).parse().unwrap();
            prop_assert_eq!(back.to_bits(), x.to_bits());
        }
    }
}
