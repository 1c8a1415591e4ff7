use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::conv::{conv_backward, conv1d_forward, temporal_pool, ConvCache, ConvParams};
use super::lstm::{lstm_backward, lstm_forward, LstmCache, LstmParams};
use super::{shape_err, Activation, NnError};
use crate::data::FEATURES;
use crate::linalg::{dot, Matrix};

/// Linear head `y = act(w_cnn · x_conv + w_lstm · h + b)`; `act` is the
/// identity unless configured otherwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FusionParams {
    pub w_cnn: Vec<f64>,
    pub w_lstm: Vec<f64>,
    pub bias: f64,
    pub activation: Activation,
}

impl FusionParams {
    pub fn zeros(filters: usize, hidden: usize, activation: Activation) -> Self {
        Self {
            w_cnn: vec![0.0; filters],
            w_lstm: vec![0.0; hidden],
            bias: 0.0,
            activation,
        }
    }

    fn preactivation(&self, x_conv: &[f64], h: &[f64]) -> Result<f64, NnError> {
        if x_conv.len() != self.w_cnn.len() {
            return Err(shape_err("fusion conv input", self.w_cnn.len(), x_conv.len()));
        }
        if h.len() != self.w_lstm.len() {
            return Err(shape_err("fusion lstm input", self.w_lstm.len(), h.len()));
        }
        Ok(dot(&self.w_cnn, x_conv) + dot(&self.w_lstm, h) + self.bias)
    }
}

pub fn fusion_forward(params: &FusionParams, x_conv: &[f64], h: &[f64]) -> Result<f64, NnError> {
    Ok(params.activation.apply(params.preactivation(x_conv, h)?))
}

/// `(pred − target)²`
#[inline]
pub fn loss_mse(pred: f64, target: f64) -> f64 {
    let d = pred - target;
    d * d
}

/// `∂/∂pred (pred − target)² = 2(pred − target)`
#[inline]
pub fn loss_mse_grad(pred: f64, target: f64) -> f64 {
    2.0 * (pred - target)
}

/// Architecture hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkShape {
    pub hidden: usize,
    pub filters: usize,
    pub half_width: usize,
    pub window: usize,
    #[serde(default = "default_conv_activation")]
    pub conv_activation: Activation,
    #[serde(default)]
    pub head_activation: Activation,
}

fn default_conv_activation() -> Activation {
    Activation::Relu
}

impl Default for NetworkShape {
    fn default() -> Self {
        Self {
            hidden: 32,
            filters: 16,
            half_width: 2,
            window: 10,
            conv_activation: Activation::Relu,
            head_activation: Activation::Linear,
        }
    }
}

impl NetworkShape {
    pub fn validate(&self) -> Result<(), NnError> {
        if self.hidden == 0 || self.filters == 0 || self.window == 0 {
            return Err(NnError::InvalidConfig(
                "hidden, filters and window must be positive".into(),
            ));
        }
        if self.window < 2 * self.half_width + 1 {
            return Err(NnError::InvalidConfig(format!(
                "window {} shorter than kernel width {}",
                self.window,
                2 * self.half_width + 1
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FusionNetwork {
    pub lstm: LstmParams,
    pub conv: ConvParams,
    pub fusion: FusionParams,
    pub window: usize,
}

/// Gradients share the network's layout.
pub type Gradients = FusionNetwork;

#[derive(Debug, Clone, PartialEq)]
pub struct ForwardCache {
    input: Matrix,
    lstm: LstmCache,
    conv: ConvCache,
    pooled: Vec<f64>,
    h: Vec<f64>,
    head_pre: f64,
    pub prediction: f64,
}

impl FusionNetwork {
    /// All-zero network of the given shape.
    pub fn zeros(shape: &NetworkShape) -> Self {
        Self {
            lstm: LstmParams::zeros(shape.hidden, FEATURES),
            conv: ConvParams::zeros(shape.filters, shape.half_width, FEATURES, shape.conv_activation),
            fusion: FusionParams::zeros(shape.filters, shape.hidden, shape.head_activation),
            window: shape.window,
        }
    }

    /// Seeded `U(−1/√fan_in, 1/√fan_in)` for every weight and bias, except
    /// forget-gate biases which start at 1.
    pub fn init(shape: &NetworkShape, seed: u64) -> Result<Self, NnError> {
        shape.validate()?;
        let mut net = Self::zeros(shape);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut fill = |xs: &mut [f64], fan_in: usize| {
            let s = 1.0 / (fan_in as f64).sqrt();
            xs.iter_mut().for_each(|x| *x = rng.random_range(-s..s));
        };

        let lstm_fan = shape.hidden + FEATURES;
        for gate in net.lstm.gates_mut() {
            fill(gate.w.as_mut_slice(), lstm_fan);
            fill(&mut gate.b, lstm_fan);
        }
        net.lstm.forget.b.iter_mut().for_each(|b| *b = 1.0);

        let conv_fan = net.conv.width() * FEATURES;
        for k in &mut net.conv.kernels {
            fill(k.as_mut_slice(), conv_fan);
        }
        fill(&mut net.conv.biases, conv_fan);

        let head_fan = shape.filters + shape.hidden;
        fill(&mut net.fusion.w_cnn, head_fan);
        fill(&mut net.fusion.w_lstm, head_fan);
        fill(std::slice::from_mut(&mut net.fusion.bias), head_fan);
        Ok(net)
    }

    pub fn shape(&self) -> NetworkShape {
        NetworkShape {
            hidden: self.lstm.hidden,
            filters: self.conv.filters(),
            half_width: self.conv.half_width,
            window: self.window,
            conv_activation: self.conv.activation,
            head_activation: self.fusion.activation,
        }
    }

    /// Same layout, every entry zero.
    pub fn zeros_like(&self) -> Self {
        Self::zeros(&self.shape())
    }

    pub fn check(&self) -> Result<(), NnError> {
        if self.lstm.features != FEATURES || self.conv.features != FEATURES {
            return Err(shape_err("feature count", FEATURES, self.lstm.features));
        }
        self.lstm.check()?;
        self.conv.check()?;
        if self.fusion.w_cnn.len() != self.conv.filters() || self.fusion.w_lstm.len() != self.lstm.hidden {
            return Err(shape_err(
                "fusion weights",
                format!("{}+{}", self.conv.filters(), self.lstm.hidden),
                format!("{}+{}", self.fusion.w_cnn.len(), self.fusion.w_lstm.len()),
            ));
        }
        if self.tensors().iter().any(|t| t.iter().any(|v| !v.is_finite())) {
            return Err(NnError::NonFinite("network parameters"));
        }
        Ok(())
    }

    /// Every parameter tensor, flattened, in a fixed order.
    pub fn tensors(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = Vec::new();
        for g in self.lstm.gates() {
            out.push(g.w.as_slice());
            out.push(&g.b);
        }
        for k in &self.conv.kernels {
            out.push(k.as_slice());
        }
        out.push(&self.conv.biases);
        out.push(&self.fusion.w_cnn);
        out.push(&self.fusion.w_lstm);
        out.push(std::slice::from_ref(&self.fusion.bias));
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = Vec::new();
        for g in self.lstm.gates_mut() {
            out.push(g.w.as_mut_slice());
            out.push(&mut g.b);
        }
        for k in &mut self.conv.kernels {
            out.push(k.as_mut_slice());
        }
        out.push(&mut self.conv.biases);
        out.push(&mut self.fusion.w_cnn);
        out.push(&mut self.fusion.w_lstm);
        out.push(std::slice::from_mut(&mut self.fusion.bias));
        out
    }

    pub fn parameter_count(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    /// `self += scale · other`; layouts must match.
    pub fn add_scaled(&mut self, other: &Self, scale: f64) {
        for (a, b) in self.tensors_mut().into_iter().zip(other.tensors()) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += scale * y;
            }
        }
    }

    fn check_window(&self, window: &Matrix) -> Result<(), NnError> {
        if window.rows() != self.window || window.cols() != FEATURES {
            return Err(shape_err(
                "window",
                format!("{}x{}", self.window, FEATURES),
                format!("{}x{}", window.rows(), window.cols()),
            ));
        }
        Ok(())
    }

    pub fn forward(&self, window: &Matrix) -> Result<(f64, ForwardCache), NnError> {
        self.check_window(window)?;
        let (h, lstm) = lstm_forward(&self.lstm, window)?;
        let (features, conv) = conv1d_forward(&self.conv, window)?;
        let pooled = temporal_pool(&features)?;
        let head_pre = self.fusion.preactivation(&pooled, &h)?;
        let prediction = self.fusion.activation.apply(head_pre);
        Ok((
            prediction,
            ForwardCache {
                input: window.clone(),
                lstm,
                conv,
                pooled,
                h,
                head_pre,
                prediction,
            },
        ))
    }

    pub fn predict(&self, window: &Matrix) -> Result<f64, NnError> {
        self.forward(window).map(|(p, _)| p)
    }

    /// Exact gradient of `(pred − target)²` with respect to every parameter.
    pub fn backward(&self, window: &Matrix, target: f64, cache: &ForwardCache) -> Result<Gradients, NnError> {
        self.check_window(window)?;
        if cache.input != *window
            || cache.h.len() != self.lstm.hidden
            || cache.pooled.len() != self.conv.filters()
            || cache.lstm.steps.len() != self.window
        {
            return Err(NnError::StaleCache);
        }
        let mut grads = self.zeros_like();
        let dy = loss_mse_grad(cache.prediction, target) * self.fusion.activation.derivative(cache.head_pre);

        grads.fusion.bias = dy;
        for (g, x) in grads.fusion.w_cnn.iter_mut().zip(&cache.pooled) {
            *g = dy * x;
        }
        for (g, h) in grads.fusion.w_lstm.iter_mut().zip(&cache.h) {
            *g = dy * h;
        }
        let dpooled: Vec<f64> = self.fusion.w_cnn.iter().map(|w| dy * w).collect();
        let dh: Vec<f64> = self.fusion.w_lstm.iter().map(|w| dy * w).collect();

        conv_backward(&self.conv, window, &cache.conv, &dpooled, &mut grads.conv);
        lstm_backward(&self.lstm, &cache.lstm, &dh, &mut grads.lstm);
        Ok(grads)
    }
}
