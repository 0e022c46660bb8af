use crate::error::{Error, Result};

/// First-order optimizer applied to the flat parameter vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OptimizerKind {
    Sgd {
        lr: f64,
    },
    Adam {
        lr: f64,
        beta1: f64,
        beta2: f64,
        epsilon: f64,
    },
}

impl Default for OptimizerKind {
    fn default() -> Self {
        OptimizerKind::adam(1e-3)
    }
}

impl OptimizerKind {
    pub fn adam(lr: f64) -> Self {
        OptimizerKind::Adam {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }

    pub fn sgd(lr: f64) -> Self {
        OptimizerKind::Sgd { lr }
    }

    pub fn learning_rate(&self) -> f64 {
        match self {
            OptimizerKind::Sgd { lr } | OptimizerKind::Adam { lr, .. } => *lr,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.learning_rate() < 0.0 {
            return Err(Error::InvalidConfig("learning rate must be >= 0".into()));
        }
        Ok(())
    }

    /// One update step, applied in the normalized coordinates `c / s_i`
    /// given by `state.scales` (the quadrature-compensation factors of the
    /// model). The normalized gradient is `s_i * g_i` and the resulting
    /// normalized update is mapped back through `s_i`.
    pub(crate) fn step(&self, params: &mut [f64], grad: &[f64], state: &mut OptState) {
        debug_assert_eq!(params.len(), grad.len());
        match *self {
            OptimizerKind::Sgd { lr } => {
                for ((p, &g), &s) in params.iter_mut().zip(grad).zip(&state.scales) {
                    *p -= lr * s * s * g;
                }
            }
            OptimizerKind::Adam {
                lr,
                beta1,
                beta2,
                epsilon,
            } => {
                state.t += 1;
                let bc1 = 1.0 - beta1.powi(state.t as i32);
                let bc2 = 1.0 - beta2.powi(state.t as i32);
                for i in 0..params.len() {
                    let g = state.scales[i] * grad[i];
                    state.m[i] = beta1 * state.m[i] + (1.0 - beta1) * g;
                    state.v[i] = beta2 * state.v[i] + (1.0 - beta2) * g * g;
                    let m_hat = state.m[i] / bc1;
                    let v_hat = state.v[i] / bc2;
                    params[i] -= state.scales[i] * lr * m_hat / (v_hat.sqrt() + epsilon);
                }
            }
        }
    }
}

/// Adam moment buffers plus the per-parameter reparameterization scales.
#[derive(Debug, Clone)]
pub(crate) struct OptState {
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
    scales: Vec<f64>,
}

impl OptState {
    pub fn new(scales: Vec<f64>) -> Self {
        let n = scales.len();
        OptState {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
            scales,
        }
    }
}
