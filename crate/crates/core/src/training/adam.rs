use alloc::vec::Vec;

use crate::numerics::{Matrix, ParamStore};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// Decoupled (AdamW-style) decay applied directly to the weights.
    pub weight_decay: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 1e-4,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 1e-5,
        }
    }
}

/// Bias-corrected Adam with decoupled weight decay.
#[derive(Clone, Debug)]
pub struct Adam {
    config: AdamConfig,
    step: u64,
    m: Vec<Matrix>,
    v: Vec<Matrix>,
}

impl Adam {
    pub fn new(config: AdamConfig, params: &ParamStore) -> Self {
        let zeros = || {
            params
                .iter()
                .map(|p| Matrix::zeros(p.value.rows(), p.value.cols()))
                .collect()
        };
        Self {
            config,
            step: 0,
            m: zeros(),
            v: zeros(),
        }
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    /// Applies one update from the accumulated gradients, then zeroes them.
    /// A non-finite gradient aborts before any parameter is touched.
    pub fn step(&mut self, params: &mut ParamStore) -> Result<()> {
        if let Some(bad) = params.iter().find(|p| !p.grad.is_finite()) {
            return Err(Error::NonFiniteGradient(bad.name.clone()));
        }
        if params.len() != self.m.len() {
            return Err(Error::State("optimizer built for a different parameter set"));
        }
        self.step += 1;
        let AdamConfig {
            lr,
            beta1,
            beta2,
            eps,
            weight_decay,
        } = self.config;
        let t = self.step as f64;
        let c1 = 1.0 - libm::pow(beta1, t);
        let c2 = 1.0 - libm::pow(beta2, t);
        for ((p, m), v) in params.iter_mut().zip(&mut self.m).zip(&mut self.v) {
            let w = p.value.as_mut_slice();
            let g = p.grad.as_slice();
            for i in 0..w.len() {
                let mi = &mut m.as_mut_slice()[i];
                let vi = &mut v.as_mut_slice()[i];
                *mi = beta1 * *mi + (1.0 - beta1) * g[i];
                *vi = beta2 * *vi + (1.0 - beta2) * g[i] * g[i];
                let m_hat = *mi / c1;
                let v_hat = *vi / c2;
                w[i] -= lr * (m_hat / (libm::sqrt(v_hat) + eps) + weight_decay * w[i]);
            }
        }
        params.zero_grad();
        Ok(())
    }
}
