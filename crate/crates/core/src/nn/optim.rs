//! Loss and optimizer.

use crate::error::{Error, Result};

pub const PROB_EPS: f64 = 1e-7;

/// Mean binary cross-entropy with probabilities clamped to `[eps, 1-eps]`.
pub fn bce_loss(probs: &[f64], labels: &[u8]) -> Result<f64> {
    if probs.len() != labels.len() {
        return Err(Error::LengthMismatch {
            what: "probabilities and labels",
            left: probs.len(),
            right: labels.len(),
        });
    }
    if probs.is_empty() {
        return Err(Error::EmptyDataset("no predictions to score".into()));
    }
    let sum: f64 = probs
        .iter()
        .zip(labels)
        .map(|(&p, &y)| {
            let p = p.clamp(PROB_EPS, 1.0 - PROB_EPS);
            if y == 1 {
                -p.ln()
            } else {
                -(1.0 - p).ln()
            }
        })
        .sum();
    Ok(sum / probs.len() as f64)
}

/// A parameter scalar the optimizer can update through `f64`.
pub trait Param: Copy {
    fn to_f64(self) -> f64;
    fn from_f64(v: f64) -> Self;
}

impl Param for f32 {
    fn to_f64(self) -> f64 {
        f64::from(self)
    }
    fn from_f64(v: f64) -> Self {
        v as f32
    }
}

impl Param for f64 {
    fn to_f64(self) -> f64 {
        self
    }
    fn from_f64(v: f64) -> Self {
        v
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub step: u64,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
}

impl AdamState {
    pub fn new(n: usize, beta1: f64, beta2: f64, eps: f64) -> Self {
        AdamState {
            beta1,
            beta2,
            eps,
            step: 0,
            m: vec![0.0; n],
            v: vec![0.0; n],
        }
    }
}

/// One bias-corrected Adam update of `params` in place.
pub fn adam_step<P: Param>(state: &mut AdamState, params: &mut [P], grads: &[f64], lr: f64) -> Result<()> {
    if params.len() != grads.len() || state.m.len() != grads.len() {
        return Err(Error::LengthMismatch {
            what: "parameters and gradients",
            left: params.len(),
            right: grads.len(),
        });
    }
    state.step += 1;
    let t = state.step as i32;
    let c1 = 1.0 - state.beta1.powi(t);
    let c2 = 1.0 - state.beta2.powi(t);
    for i in 0..grads.len() {
        let g = grads[i];
        state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g;
        state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * g * g;
        let m_hat = state.m[i] / c1;
        let v_hat = state.v[i] / c2;
        let p = params[i].to_f64() - lr * m_hat / (v_hat.sqrt() + state.eps);
        params[i] = P::from_f64(p);
    }
    Ok(())
}
