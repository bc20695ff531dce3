use super::Trainable;
use crate::{AemError, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            learning_rate: 2e-4,
            beta1: 0.5,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Bias-corrected Adam. Moment buffers are allocated on the first step and
/// keyed by the visiting order of [`Trainable::visit_params`].
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    pub t: u64,
    pub m: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
}

impl AdamState {
    pub fn new(config: AdamConfig) -> Self {
        AdamState {
            config,
            t: 0,
            m: Vec::new(),
            v: Vec::new(),
        }
    }

    /// Applies one update from the accumulated gradients. Rejects the whole
    /// step, leaving parameters and moments untouched, if any gradient is
    /// non-finite or the parameter layout changed since the last step.
    pub fn step<T: Trainable + ?Sized>(&mut self, model: &mut T) -> Result<()> {
        let mut shapes = Vec::new();
        let mut bad = None;
        model.visit_params(&mut |p, g| {
            if bad.is_none() {
                bad = g.iter().position(|x| !x.is_finite()).map(|i| (shapes.len(), i));
            }
            shapes.push(p.len());
        });
        if let Some((tensor, index)) = bad {
            return Err(AemError::NonFinite(format!(
                "gradient of parameter tensor {tensor} at index {index}; Adam step rejected"
            )));
        }
        if self.m.is_empty() {
            self.m = shapes.iter().map(|&n| vec![0.0; n]).collect();
            self.v = self.m.clone();
        } else if self.m.len() != shapes.len() || self.m.iter().zip(&shapes).any(|(m, &n)| m.len() != n) {
            return Err(AemError::contract("Adam state does not match the parameter layout"));
        }

        self.t += 1;
        let AdamConfig { learning_rate, beta1, beta2, eps } = self.config;
        let correction1 = 1.0 - beta1.powi(self.t as i32);
        let correction2 = 1.0 - beta2.powi(self.t as i32);
        let mut k = 0;
        let (ms, vs) = (&mut self.m, &mut self.v);
        model.visit_params(&mut |p, g| {
            let (m, v) = (&mut ms[k], &mut vs[k]);
            for i in 0..p.len() {
                m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
                v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
                let m_hat = m[i] / correction1;
                let v_hat = v[i] / correction2;
                p[i] -= learning_rate * m_hat / (v_hat.sqrt() + eps);
            }
            k += 1;
        });
        Ok(())
    }
}
