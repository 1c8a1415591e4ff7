use serde::{Deserialize, Serialize};

use super::{shape_err, Activation, NnError};
use crate::linalg::Matrix;

/// `K` filters, each `(2k+1) × F`, applied as a valid cross-correlation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvParams {
    pub kernels: Vec<Matrix>,
    pub biases: Vec<f64>,
    pub half_width: usize,
    pub features: usize,
    pub activation: Activation,
}

impl ConvParams {
    pub fn zeros(filters: usize, half_width: usize, features: usize, activation: Activation) -> Self {
        Self {
            kernels: (0..filters)
                .map(|_| Matrix::zeros(2 * half_width + 1, features))
                .collect(),
            biases: vec![0.0; filters],
            half_width,
            features,
            activation,
        }
    }

    pub fn width(&self) -> usize {
        2 * self.half_width + 1
    }

    pub fn filters(&self) -> usize {
        self.kernels.len()
    }

    pub fn check(&self) -> Result<(), NnError> {
        if self.biases.len() != self.kernels.len() {
            return Err(shape_err("conv biases", self.kernels.len(), self.biases.len()));
        }
        for k in &self.kernels {
            if k.rows() != self.width() || k.cols() != self.features {
                return Err(shape_err(
                    "conv kernel",
                    format!("{}x{}", self.width(), self.features),
                    format!("{}x{}", k.rows(), k.cols()),
                ));
            }
            if !k.is_finite() {
                return Err(NnError::NonFinite("conv kernel"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvCache {
    /// Pre-activation outputs, `L' × K`.
    pub pre: Matrix,
}

/// Output row `t` (for `t` in `0..L−2k`) and filter `j` is
/// `act(Σ W_j ⊙ window[t..t+2k+1] + b_j)`.
pub fn conv1d_forward(params: &ConvParams, window: &Matrix) -> Result<(Matrix, ConvCache), NnError> {
    if window.cols() != params.features {
        return Err(shape_err("conv window columns", params.features, window.cols()));
    }
    let width = params.width();
    if window.rows() < width {
        return Err(NnError::WindowTooShort {
            rows: window.rows(),
            kernel: width,
        });
    }
    let out_len = window.rows() - 2 * params.half_width;
    let k = params.filters();
    let mut pre = Matrix::zeros(out_len, k);
    let mut out = Matrix::zeros(out_len, k);
    let patch_len = width * params.features;
    for t in 0..out_len {
        let patch = &window.as_slice()[t * params.features..t * params.features + patch_len];
        for (j, (kernel, b)) in params.kernels.iter().zip(&params.biases).enumerate() {
            let z = crate::linalg::dot(kernel.as_slice(), patch) + b;
            pre.set(t, j, z);
            out.set(t, j, params.activation.apply(z));
        }
    }
    Ok((out, ConvCache { pre }))
}

/// Mean over the time axis, one value per filter.
pub fn temporal_pool(features: &Matrix) -> Result<Vec<f64>, NnError> {
    if features.rows() == 0 {
        return Err(NnError::EmptySequence);
    }
    let n = features.rows() as f64;
    let mut pooled = vec![0.0; features.cols()];
    for t in 0..features.rows() {
        for (p, v) in pooled.iter_mut().zip(features.row(t)) {
            *p += v;
        }
    }
    pooled.iter_mut().for_each(|p| *p /= n);
    Ok(pooled)
}

/// Accumulates kernel and bias gradients given `∂L/∂pooled`.
pub(crate) fn conv_backward(
    params: &ConvParams,
    window: &Matrix,
    cache: &ConvCache,
    dpooled: &[f64],
    grads: &mut ConvParams,
) {
    let out_len = cache.pre.rows();
    let scale = 1.0 / out_len as f64;
    let patch_len = params.width() * params.features;
    for t in 0..out_len {
        let patch = &window.as_slice()[t * params.features..t * params.features + patch_len];
        for (j, &dp) in dpooled.iter().enumerate() {
            let dz = dp * scale * params.activation.derivative(cache.pre.get(t, j));
            if dz == 0.0 {
                continue;
            }
            grads.biases[j] += dz;
            for (g, x) in grads.kernels[j].as_mut_slice().iter_mut().zip(patch) {
                *g += dz * x;
            }
        }
    }
}
