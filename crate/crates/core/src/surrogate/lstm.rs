//! Single-cell LSTM with a linear read-out, trained many-to-one.
//!
//! Gate order everywhere is input, forget, cell candidate, output.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, ArrayView3, Axis};
use rand::Rng;

use crate::error::{Error, Result};

pub const GATE_INPUT: usize = 0;
pub const GATE_FORGET: usize = 1;
pub const GATE_CELL: usize = 2;
pub const GATE_OUTPUT: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct LstmModel {
    /// `N_h × d` per gate.
    pub gate_input_weights: [Array2<f64>; 4],
    /// `N_h × N_h` per gate.
    pub gate_recurrent_weights: [Array2<f64>; 4],
    pub gate_biases: [Array1<f64>; 4],
    /// `d × N_h`.
    pub head_weights: Array2<f64>,
    pub head_bias: Array1<f64>,
}

/// Parameter gradients share the model's layout.
pub type Gradients = LstmModel;

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl LstmModel {
    pub fn zeros(input_dim: usize, hidden_dim: usize) -> Self {
        LstmModel {
            gate_input_weights: std::array::from_fn(|_| Array2::zeros((hidden_dim, input_dim))),
            gate_recurrent_weights: std::array::from_fn(|_| Array2::zeros((hidden_dim, hidden_dim))),
            gate_biases: std::array::from_fn(|_| Array1::zeros(hidden_dim)),
            head_weights: Array2::zeros((input_dim, hidden_dim)),
            head_bias: Array1::zeros(input_dim),
        }
    }

    /// Uniform `(-1/√N_h, 1/√N_h)` weights, zero biases and a forget-gate
    /// bias of one. Matrices are drawn in field order.
    pub fn init<R: Rng>(input_dim: usize, hidden_dim: usize, rng: &mut R) -> Self {
        let mut m = Self::zeros(input_dim, hidden_dim);
        let s = 1.0 / (hidden_dim as f64).sqrt();
        let mut fill = |a: &mut Array2<f64>| a.iter_mut().for_each(|v| *v = rng.random_range(-s..s));
        m.gate_input_weights.iter_mut().for_each(&mut fill);
        m.gate_recurrent_weights.iter_mut().for_each(&mut fill);
        fill(&mut m.head_weights);
        m.gate_biases[GATE_FORGET].fill(1.0);
        m
    }

    pub fn input_dim(&self) -> usize {
        self.head_weights.nrows()
    }

    pub fn hidden_dim(&self) -> usize {
        self.head_weights.ncols()
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(self.input_dim(), self.hidden_dim())
    }

    /// Checks mutual consistency of all shapes and finiteness of every entry.
    pub fn validate(&self) -> Result<()> {
        let (d, h) = (self.input_dim(), self.hidden_dim());
        let bad = |what: &str| Err(Error::InvariantViolation(format!("LSTM {what} has inconsistent shape")));
        for g in 0..4 {
            if self.gate_input_weights[g].dim() != (h, d) {
                return bad("input weights");
            }
            if self.gate_recurrent_weights[g].dim() != (h, h) {
                return bad("recurrent weights");
            }
            if self.gate_biases[g].len() != h {
                return bad("gate biases");
            }
        }
        if self.head_bias.len() != d {
            return bad("head bias");
        }
        if self.parameter_slices().iter().any(|s| s.iter().any(|v| !v.is_finite())) {
            return Err(Error::InvariantViolation("LSTM parameters contain non-finite values".into()));
        }
        Ok(())
    }

    /// Parameter groups in a fixed order: the four input-weight matrices,
    /// the four recurrent matrices, the four biases, head weights, head bias.
    pub fn parameter_slices(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = Vec::with_capacity(14);
        out.extend(self.gate_input_weights.iter().map(|a| a.as_slice().expect("standard layout")));
        out.extend(self.gate_recurrent_weights.iter().map(|a| a.as_slice().expect("standard layout")));
        out.extend(self.gate_biases.iter().map(|a| a.as_slice().expect("standard layout")));
        out.push(self.head_weights.as_slice().expect("standard layout"));
        out.push(self.head_bias.as_slice().expect("standard layout"));
        out
    }

    pub fn parameter_slices_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = Vec::with_capacity(14);
        out.extend(self.gate_input_weights.iter_mut().map(|a| a.as_slice_mut().expect("standard layout")));
        out.extend(self.gate_recurrent_weights.iter_mut().map(|a| a.as_slice_mut().expect("standard layout")));
        out.extend(self.gate_biases.iter_mut().map(|a| a.as_slice_mut().expect("standard layout")));
        out.push(self.head_weights.as_slice_mut().expect("standard layout"));
        out.push(self.head_bias.as_slice_mut().expect("standard layout"));
        out
    }

    pub fn n_parameters(&self) -> usize {
        self.parameter_slices().iter().map(|s| s.len()).sum()
    }

    /// `self += alpha * other`, group by group.
    pub fn add_scaled(&mut self, alpha: f64, other: &LstmModel) {
        for (dst, src) in self.parameter_slices_mut().into_iter().zip(other.parameter_slices()) {
            for (d, s) in dst.iter_mut().zip(src) {
                *d += alpha * s;
            }
        }
    }

    pub fn forward(&self, sequence: ArrayView2<f64>) -> Result<Array1<f64>> {
        Ok(self.forward_cached(sequence)?.output)
    }

    /// Hidden and cell states after each input, as `(h, c)`, each
    /// `window × N_h`.
    pub fn state_trace(&self, sequence: ArrayView2<f64>) -> Result<(Array2<f64>, Array2<f64>)> {
        let cache = self.forward_cached(sequence)?;
        let n = cache.steps.len();
        let h_dim = self.hidden_dim();
        let mut hs = Array2::zeros((n, h_dim));
        let mut cs = Array2::zeros((n, h_dim));
        // step t stores the state entering it; the state leaving it is the
        // next step's entry, or the final state for the last step
        for t in 1..n {
            hs.row_mut(t - 1).assign(&cache.steps[t].h_prev);
            cs.row_mut(t - 1).assign(&cache.steps[t].c_prev);
        }
        if n > 0 {
            hs.row_mut(n - 1).assign(&cache.h_final);
            cs.row_mut(n - 1).assign(&cache.c_final);
        }
        Ok((hs, cs))
    }

    fn forward_cached(&self, sequence: ArrayView2<f64>) -> Result<ForwardCache> {
        let d = self.input_dim();
        if sequence.ncols() != d {
            return Err(Error::DimensionMismatch {
                context: "LSTM input width",
                expected: d,
                found: sequence.ncols(),
            });
        }
        let h_dim = self.hidden_dim();
        let mut h = Array1::zeros(h_dim);
        let mut c = Array1::zeros(h_dim);
        let mut steps = Vec::with_capacity(sequence.nrows());
        for (t, x) in sequence.axis_iter(Axis(0)).enumerate() {
            let pre = |g: usize| -> Array1<f64> {
                let mut z = self.gate_input_weights[g].dot(&x);
                z += &self.gate_recurrent_weights[g].dot(&h);
                z += &self.gate_biases[g];
                z
            };
            let i = pre(GATE_INPUT).mapv(sigmoid);
            let f = pre(GATE_FORGET).mapv(sigmoid);
            let g = pre(GATE_CELL).mapv(f64::tanh);
            let o = pre(GATE_OUTPUT).mapv(sigmoid);
            let c_next = &f * &c + &i * &g;
            let tanh_c = c_next.mapv(f64::tanh);
            let h_next = &o * &tanh_c;
            if c_next.iter().chain(h_next.iter()).any(|v| !v.is_finite()) {
                return Err(Error::NumericOverflow { timestep: t });
            }
            steps.push(StepCache {
                x: x.to_owned(),
                h_prev: std::mem::replace(&mut h, h_next),
                c_prev: std::mem::replace(&mut c, c_next),
                gates: [i, f, g, o],
                tanh_c,
            });
        }
        let output = self.head_weights.dot(&h) + &self.head_bias;
        if output.iter().any(|v| !v.is_finite()) {
            return Err(Error::NumericOverflow {
                timestep: sequence.nrows(),
            });
        }
        Ok(ForwardCache {
            steps,
            h_final: h,
            c_final: c,
            output,
        })
    }

    /// Adds the gradient of `Σ_j weight · (y_j - target_j)²` for one sample
    /// into `grads` and returns the unweighted squared error sum.
    fn accumulate_sample(
        &self,
        sequence: ArrayView2<f64>,
        target: ArrayView1<f64>,
        weight: f64,
        grads: &mut Gradients,
    ) -> Result<f64> {
        let cache = self.forward_cached(sequence)?;
        let residual = &cache.output - &target;
        let sq: f64 = residual.iter().map(|r| r * r).sum();
        let dy = residual.mapv(|r| 2.0 * weight * r);

        grads.head_bias += &dy;
        grads.head_weights += &outer(dy.view(), cache.h_final.view());
        let mut dh = self.head_weights.t().dot(&dy);
        let mut dc = Array1::<f64>::zeros(self.hidden_dim());

        for step in cache.steps.iter().rev() {
            let [i, f, g, o] = &step.gates;
            let d_o = &dh * &step.tanh_c;
            dc += &(&dh * o * &step.tanh_c.mapv(|t| 1.0 - t * t));
            let d_i = &dc * g;
            let d_g = &dc * i;
            let d_f = &dc * &step.c_prev;
            let dz = [
                d_i * &i.mapv(|v| v * (1.0 - v)),
                d_f * &f.mapv(|v| v * (1.0 - v)),
                d_g * &g.mapv(|v| 1.0 - v * v),
                d_o * &o.mapv(|v| v * (1.0 - v)),
            ];
            dc = &dc * f;
            dh = Array1::zeros(self.hidden_dim());
            for (k, dzk) in dz.iter().enumerate() {
                grads.gate_input_weights[k] += &outer(dzk.view(), step.x.view());
                grads.gate_recurrent_weights[k] += &outer(dzk.view(), step.h_prev.view());
                grads.gate_biases[k] += dzk;
                dh += &self.gate_recurrent_weights[k].t().dot(dzk);
            }
        }
        Ok(sq)
    }
}

fn outer(a: ArrayView1<f64>, b: ArrayView1<f64>) -> Array2<f64> {
    a.insert_axis(Axis(1)).dot(&b.insert_axis(Axis(0)))
}

struct StepCache {
    x: Array1<f64>,
    h_prev: Array1<f64>,
    c_prev: Array1<f64>,
    gates: [Array1<f64>; 4],
    tanh_c: Array1<f64>,
}

struct ForwardCache {
    steps: Vec<StepCache>,
    h_final: Array1<f64>,
    c_final: Array1<f64>,
    output: Array1<f64>,
}

/// Mean-squared error over `batch × d` and its gradient by backpropagation
/// through time. Per-sample contributions are accumulated in batch order.
///
/// `inputs` is `batch × window × d`, `targets` is `batch × d`.
pub fn lstm_backward(
    model: &LstmModel,
    inputs: ArrayView3<f64>,
    targets: ArrayView2<f64>,
) -> Result<(Gradients, f64)> {
    let batch = inputs.dim().0;
    if batch == 0 {
        return Err(Error::invalid("empty batch"));
    }
    if targets.nrows() != batch {
        return Err(Error::DimensionMismatch {
            context: "batch targets",
            expected: batch,
            found: targets.nrows(),
        });
    }
    let denom = (batch * model.input_dim()) as f64;
    let mut grads = model.zeros_like();
    let mut total = 0.0;
    for b in 0..batch {
        total += model.accumulate_sample(
            inputs.index_axis(Axis(0), b),
            targets.row(b),
            1.0 / denom,
            &mut grads,
        )?;
    }
    Ok((grads, total / denom))
}

/// Mean-squared error of the model over the given samples.
pub fn mse(model: &LstmModel, inputs: ArrayView3<f64>, targets: ArrayView2<f64>, samples: &[usize]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::invalid("no samples to evaluate"));
    }
    let mut total = 0.0;
    for &j in samples {
        let y = model.forward(inputs.index_axis(Axis(0), j))?;
        total += y
            .iter()
            .zip(targets.row(j).iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>();
    }
    Ok(total / (samples.len() * model.input_dim()) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array3};

    #[test]
    fn zero_model_outputs_head_bias() {
        let mut m = LstmModel::zeros(3, 5);
        m.head_bias = array![0.1, -0.2, 0.3];
        let seq = Array2::from_elem((4, 3), 0.7);
        assert_eq!(m.forward(seq.view()).unwrap(), m.head_bias);
    }

    #[test]
    fn hand_evaluated_unit_cell() {
        let mut m = LstmModel::zeros(1, 1);
        m.head_weights[[0, 0]] = 1.0;
        let y = m.forward(array![[0.3]].view()).unwrap();
        assert_eq!(y[0], 0.0);
    }

    #[test]
    fn zero_target_zero_model_has_zero_gradient() {
        let m = LstmModel::zeros(2, 3);
        let inputs = Array3::from_elem((2, 4, 2), 0.5);
        let targets = Array2::zeros((2, 2));
        let (g, loss) = lstm_backward(&m, inputs.view(), targets.view()).unwrap();
        assert_eq!(loss, 0.0);
        assert!(g.parameter_slices().iter().all(|s| s.iter().all(|v| *v == 0.0)));
    }

    #[test]
    fn overflow_is_reported() {
        let mut m = LstmModel::zeros(1, 1);
        m.head_weights[[0, 0]] = f64::MAX;
        m.head_bias[0] = f64::MAX;
        m.gate_biases[GATE_OUTPUT][0] = 50.0;
        m.gate_biases[GATE_INPUT][0] = 50.0;
        m.gate_biases[GATE_CELL][0] = 50.0;
        let r = m.forward(array![[0.0], [0.0]].view());
        assert!(matches!(r, Err(Error::NumericOverflow { timestep: 2 })));
    }

    #[test]
    fn parameter_count() {
        let m = LstmModel::zeros(12, 30);
        assert_eq!(m.n_parameters(), 4 * (30 * 12 + 30 * 30 + 30) + 12 * 30 + 12);
    }
}
