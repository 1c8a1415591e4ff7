use serde::{Deserialize, Serialize};

use super::network::{FusionNetwork, Gradients};
use super::{shape_err, NnError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamConfig {
    pub fn with_learning_rate(learning_rate: f64) -> Self {
        Self {
            learning_rate,
            ..Self::default()
        }
    }
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Adam moments for every parameter tensor of a network.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    pub config: AdamConfig,
    pub step: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl OptimizerState {
    pub fn new(net: &FusionNetwork, config: AdamConfig) -> Self {
        let zeros: Vec<Vec<f64>> = net.tensors().iter().map(|t| vec![0.0; t.len()]).collect();
        Self {
            config,
            step: 0,
            m: zeros.clone(),
            v: zeros,
        }
    }

    /// One bias-corrected Adam update of `net` along `grads`.
    pub fn step(&mut self, net: &mut FusionNetwork, grads: &Gradients) -> Result<(), NnError> {
        let g_tensors = grads.tensors();
        let p_tensors = net.tensors_mut();
        if g_tensors.len() != self.m.len() || p_tensors.len() != self.m.len() {
            return Err(shape_err("optimizer tensors", self.m.len(), g_tensors.len()));
        }
        for ((p, g), m) in p_tensors.iter().zip(&g_tensors).zip(&self.m) {
            if p.len() != m.len() || g.len() != m.len() {
                return Err(shape_err("optimizer tensor", m.len(), g.len()));
            }
        }

        self.step += 1;
        let AdamConfig {
            learning_rate,
            beta1,
            beta2,
            epsilon,
        } = self.config;
        let c1 = 1.0 - beta1.powi(self.step as i32);
        let c2 = 1.0 - beta2.powi(self.step as i32);
        for (((p, g), m), v) in p_tensors
            .into_iter()
            .zip(g_tensors)
            .zip(&mut self.m)
            .zip(&mut self.v)
        {
            for k in 0..p.len() {
                m[k] = beta1 * m[k] + (1.0 - beta1) * g[k];
                v[k] = beta2 * v[k] + (1.0 - beta2) * g[k] * g[k];
                let m_hat = m[k] / c1;
                let v_hat = v[k] / c2;
                p[k] -= learning_rate * m_hat / (v_hat.sqrt() + epsilon);
            }
        }
        Ok(())
    }
}
