use serde::{Deserialize, Serialize};

use super::{shape_err, sigmoid, NnError};
use crate::linalg::Matrix;

/// One gate: `W · [h_{t−1}, x_t] + b`, with `W` of shape `H × (H + F)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gate {
    pub w: Matrix,
    pub b: Vec<f64>,
}

impl Gate {
    pub fn zeros(hidden: usize, features: usize) -> Self {
        Self {
            w: Matrix::zeros(hidden, hidden + features),
            b: vec![0.0; hidden],
        }
    }

    fn preactivation(&self, z: &[f64], out: &mut [f64]) {
        self.w.matvec(z, out);
        for (o, b) in out.iter_mut().zip(&self.b) {
            *o += b;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmParams {
    pub forget: Gate,
    pub input: Gate,
    pub candidate: Gate,
    pub output: Gate,
    pub hidden: usize,
    pub features: usize,
}

impl LstmParams {
    pub fn zeros(hidden: usize, features: usize) -> Self {
        Self {
            forget: Gate::zeros(hidden, features),
            input: Gate::zeros(hidden, features),
            candidate: Gate::zeros(hidden, features),
            output: Gate::zeros(hidden, features),
            hidden,
            features,
        }
    }

    pub(crate) fn gates(&self) -> [&Gate; 4] {
        [&self.forget, &self.input, &self.candidate, &self.output]
    }

    pub(crate) fn gates_mut(&mut self) -> [&mut Gate; 4] {
        [
            &mut self.forget,
            &mut self.input,
            &mut self.candidate,
            &mut self.output,
        ]
    }

    pub fn check(&self) -> Result<(), NnError> {
        let cols = self.hidden + self.features;
        for g in self.gates() {
            if g.w.rows() != self.hidden || g.w.cols() != cols || g.b.len() != self.hidden {
                return Err(shape_err(
                    "lstm gate",
                    format!("{}x{} + {}", self.hidden, cols, self.hidden),
                    format!("{}x{} + {}", g.w.rows(), g.w.cols(), g.b.len()),
                ));
            }
            if !g.w.is_finite() || g.b.iter().any(|v| !v.is_finite()) {
                return Err(NnError::NonFinite("lstm parameters"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LstmState {
    pub h: Vec<f64>,
    pub c: Vec<f64>,
}

impl LstmState {
    pub fn zeros(hidden: usize) -> Self {
        Self {
            h: vec![0.0; hidden],
            c: vec![0.0; hidden],
        }
    }
}

/// Everything one step needs for backpropagation.
#[derive(Debug, Clone, PartialEq)]
pub struct StepCache {
    /// `[h_{t−1}, x_t]`
    pub z: Vec<f64>,
    pub f: Vec<f64>,
    pub i: Vec<f64>,
    pub g: Vec<f64>,
    pub o: Vec<f64>,
    pub c_prev: Vec<f64>,
    pub c: Vec<f64>,
    pub tanh_c: Vec<f64>,
    pub h: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LstmCache {
    pub steps: Vec<StepCache>,
}

pub(crate) fn step_cached(
    params: &LstmParams,
    x: &[f64],
    state: &LstmState,
) -> Result<StepCache, NnError> {
    let hd = params.hidden;
    if x.len() != params.features {
        return Err(shape_err("lstm input", params.features, x.len()));
    }
    if state.h.len() != hd || state.c.len() != hd {
        return Err(shape_err("lstm state", hd, state.h.len().max(state.c.len())));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(NnError::NonFinite("lstm input"));
    }
    let mut z = Vec::with_capacity(hd + params.features);
    z.extend_from_slice(&state.h);
    z.extend_from_slice(x);

    let mut f = vec![0.0; hd];
    let mut i = vec![0.0; hd];
    let mut g = vec![0.0; hd];
    let mut o = vec![0.0; hd];
    params.forget.preactivation(&z, &mut f);
    params.input.preactivation(&z, &mut i);
    params.candidate.preactivation(&z, &mut g);
    params.output.preactivation(&z, &mut o);
    f.iter_mut().for_each(|v| *v = sigmoid(*v));
    i.iter_mut().for_each(|v| *v = sigmoid(*v));
    g.iter_mut().for_each(|v| *v = v.tanh());
    o.iter_mut().for_each(|v| *v = sigmoid(*v));

    let c: Vec<f64> = (0..hd).map(|k| f[k] * state.c[k] + i[k] * g[k]).collect();
    let tanh_c: Vec<f64> = c.iter().map(|v| v.tanh()).collect();
    let h: Vec<f64> = o.iter().zip(&tanh_c).map(|(o, t)| o * t).collect();
    Ok(StepCache {
        z,
        f,
        i,
        g,
        o,
        c_prev: state.c.clone(),
        c,
        tanh_c,
        h,
    })
}

/// One LSTM step:
/// `f, i, o = σ(W·[h, x] + b)`, `C̃ = tanh(W_C·[h, x] + b_C)`,
/// `C' = f⊙C + i⊙C̃`, `h' = o⊙tanh(C')`.
pub fn lstm_step(params: &LstmParams, x: &[f64], state: &LstmState) -> Result<LstmState, NnError> {
    let s = step_cached(params, x, state)?;
    Ok(LstmState { h: s.h, c: s.c })
}

/// Runs the LSTM over every row of `window` from a zero state.
pub fn lstm_forward(params: &LstmParams, window: &Matrix) -> Result<(Vec<f64>, LstmCache), NnError> {
    if window.cols() != params.features {
        return Err(shape_err("lstm window columns", params.features, window.cols()));
    }
    let mut state = LstmState::zeros(params.hidden);
    let mut steps = Vec::with_capacity(window.rows());
    for t in 0..window.rows() {
        let s = step_cached(params, window.row(t), &state)?;
        state = LstmState {
            h: s.h.clone(),
            c: s.c.clone(),
        };
        steps.push(s);
    }
    Ok((state.h, LstmCache { steps }))
}

/// BPTT from `dh_last = ∂L/∂h_L`, accumulating into `grads`.
pub(crate) fn lstm_backward(params: &LstmParams, cache: &LstmCache, dh_last: &[f64], grads: &mut LstmParams) {
    let hd = params.hidden;
    let mut dh = dh_last.to_vec();
    let mut dc = vec![0.0; hd];
    let mut da = [vec![0.0; hd], vec![0.0; hd], vec![0.0; hd], vec![0.0; hd]];
    let mut dz = vec![0.0; hd + params.features];

    for s in cache.steps.iter().rev() {
        for k in 0..hd {
            let d_o = dh[k] * s.tanh_c[k];
            dc[k] += dh[k] * s.o[k] * (1.0 - s.tanh_c[k] * s.tanh_c[k]);
            let d_f = dc[k] * s.c_prev[k];
            let d_i = dc[k] * s.g[k];
            let d_g = dc[k] * s.i[k];
            da[0][k] = d_f * s.f[k] * (1.0 - s.f[k]);
            da[1][k] = d_i * s.i[k] * (1.0 - s.i[k]);
            da[2][k] = d_g * (1.0 - s.g[k] * s.g[k]);
            da[3][k] = d_o * s.o[k] * (1.0 - s.o[k]);
            dc[k] *= s.f[k];
        }
        dz.iter_mut().for_each(|v| *v = 0.0);
        for ((gate, grad), d) in params.gates().into_iter().zip(grads.gates_mut()).zip(&da) {
            grad.w.add_outer(d, &s.z);
            for (b, v) in grad.b.iter_mut().zip(d) {
                *b += v;
            }
            gate.w.matvec_transpose_acc(d, &mut dz);
        }
        dh.copy_from_slice(&dz[..hd]);
    }
}
