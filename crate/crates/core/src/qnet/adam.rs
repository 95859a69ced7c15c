use super::network::QNetworkParams;
use super::QNetError;

pub const BETA1: f64 = 0.9;
pub const BETA2: f64 = 0.999;
pub const EPSILON: f64 = 1e-8;

/// First and second moment estimates plus the step counter.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    m: QNetworkParams,
    v: QNetworkParams,
    step: u64,
}

impl AdamState {
    pub fn new(like: &QNetworkParams) -> Self {
        AdamState {
            m: QNetworkParams::zeros(like.dimension(), like.hidden()),
            v: QNetworkParams::zeros(like.dimension(), like.hidden()),
            step: 0,
        }
    }

    pub fn step(&self) -> u64 {
        self.step
    }
}

/// One bias-corrected Adam update of `params` in place.
pub fn adam_step(
    params: &mut QNetworkParams,
    grads: &QNetworkParams,
    state: &mut AdamState,
    learning_rate: f64,
) -> Result<(), QNetError> {
    params.check_same_shape(grads)?;
    params.check_same_shape(&state.m)?;
    state.step += 1;
    let correction1 = 1.0 - BETA1.powi(state.step as i32);
    let correction2 = 1.0 - BETA2.powi(state.step as i32);
    let tensors = params.tensors_mut().into_iter().zip(grads.tensors());
    let moments = state.m.tensors_mut().into_iter().zip(state.v.tensors_mut());
    for ((p, g), (m, v)) in tensors.zip(moments) {
        for i in 0..p.len() {
            m[i] = BETA1 * m[i] + (1.0 - BETA1) * g[i];
            v[i] = BETA2 * v[i] + (1.0 - BETA2) * g[i] * g[i];
            let m_hat = m[i] / correction1;
            let v_hat = v[i] / correction2;
            p[i] -= learning_rate * m_hat / (v_hat.sqrt() + EPSILON);
        }
    }
    Ok(())
}
