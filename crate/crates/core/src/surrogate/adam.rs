use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// First and second moment estimates, one buffer per parameter group.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
}

impl AdamState {
    pub fn new(group_sizes: impl IntoIterator<Item = usize>) -> Self {
        let (m, v) = group_sizes
            .into_iter()
            .map(|n| (vec![0.0; n], vec![0.0; n]))
            .unzip();
        AdamState { m, v }
    }
}

/// One bias-corrected Adam update at step `t` (1-based), applied in place.
pub fn adam_step(
    params: &mut [&mut [f64]],
    grads: &[&[f64]],
    state: &mut AdamState,
    t: u64,
    config: &AdamConfig,
) -> Result<()> {
    if t == 0 {
        return Err(Error::invalid("Adam step index starts at 1"));
    }
    if params.len() != grads.len() || params.len() != state.m.len() {
        return Err(Error::DimensionMismatch {
            context: "Adam parameter groups",
            expected: params.len(),
            found: grads.len().min(state.m.len()),
        });
    }
    let b1 = config.beta1;
    let b2 = config.beta2;
    let correction1 = 1.0 - b1.powf(t as f64);
    let correction2 = 1.0 - b2.powf(t as f64);
    for (((p, g), m), v) in params
        .iter_mut()
        .zip(grads)
        .zip(state.m.iter_mut())
        .zip(state.v.iter_mut())
    {
        if p.len() != g.len() || p.len() != m.len() {
            return Err(Error::DimensionMismatch {
                context: "Adam parameter group length",
                expected: p.len(),
                found: g.len(),
            });
        }
        for i in 0..p.len() {
            m[i] = b1 * m[i] + (1.0 - b1) * g[i];
            v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
            let m_hat = m[i] / correction1;
            let v_hat = v[i] / correction2;
            p[i] -= config.learning_rate * m_hat / (v_hat.sqrt() + config.epsilon);
        }
    }
    Ok(())
}
