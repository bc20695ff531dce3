use ndarray::{Array1, Array2, ArrayView2};
use rand::Rng;

use super::init::random_unit_vector;

/// Floor applied to the singular value estimate before dividing by it.
pub const SIGMA_EPS: f64 = 1e-12;

/// Persistent power-iteration state for one weight matrix.
///
/// `u` estimates the leading left singular vector and `v` the right one.
/// Both persist across training steps, so a single iteration per step keeps
/// the estimate close to the true spectral norm.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralNorm {
    pub u: Array1<f64>,
    pub v: Array1<f64>,
}

fn normalized(x: Array1<f64>) -> Array1<f64> {
    let norm = x.dot(&x).sqrt();
    if norm > SIGMA_EPS {
        x / norm
    } else {
        Array1::zeros(x.len())
    }
}

impl SpectralNorm {
    pub fn new<R: Rng + ?Sized>(weight: &ArrayView2<f64>, rng: &mut R) -> Self {
        let u = random_unit_vector(weight.nrows(), rng);
        let v = normalized(weight.t().dot(&u));
        SpectralNorm { u, v }
    }

    /// Runs `iterations` rounds of `v <- Wᵀu / |Wᵀu|`, `u <- Wv / |Wv|`.
    pub fn power_iterate(&mut self, weight: &ArrayView2<f64>, iterations: usize) {
        for _ in 0..iterations {
            let v = normalized(weight.t().dot(&self.u));
            let u = normalized(weight.dot(&v));
            if u.iter().all(|x| *x == 0.0) {
                // zero matrix: keep the old direction so later steps can recover
                self.v = v;
                break;
            }
            self.v = v;
            self.u = u;
        }
    }

    /// `uᵀ W v` under the stored vectors.
    pub fn sigma(&self, weight: &ArrayView2<f64>) -> f64 {
        self.u.dot(&weight.dot(&self.v))
    }

    /// The normalized weight `W / max(σ̂, eps)` and the raw estimate `σ̂`.
    pub fn normalize(&self, weight: &ArrayView2<f64>) -> (Array2<f64>, f64) {
        let sigma = self.sigma(weight);
        (weight.mapv(|w| w / sigma.max(SIGMA_EPS)), sigma)
    }

    /// Maps a gradient with respect to the normalized weight back to the raw
    /// weight, including the rank-one dependence `∂σ̂/∂W = u vᵀ`.
    pub fn backward(
        &self,
        normalized_weight: &ArrayView2<f64>,
        sigma: f64,
        grad_normalized: &ArrayView2<f64>,
    ) -> Array2<f64> {
        let denom = sigma.max(SIGMA_EPS);
        if sigma <= SIGMA_EPS {
            return grad_normalized.mapv(|g| g / denom);
        }
        let inner = (grad_normalized * normalized_weight).sum();
        let mut out = grad_normalized.to_owned();
        for (i, mut row) in out.rows_mut().into_iter().enumerate() {
            let ui = self.u[i] * inner;
            for (g, vj) in row.iter_mut().zip(self.v.iter()) {
                *g -= ui * vj;
            }
        }
        out / denom
    }
}
