use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::Rng;

use super::checkpoint::TensorStore;
use super::init::glorot_uniform;
use super::spectral::SpectralNorm;
use super::Trainable;
use crate::{AemError, Result};

/// Fully connected layer `y = x Wᵀ + b` over a batch of row vectors.
///
/// With spectral normalization enabled the forward pass uses `W / σ̂(W)`,
/// where `σ̂` is read from the persistent power-iteration vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    /// `out × in`
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
    pub grad_weight: Array2<f64>,
    pub grad_bias: Array1<f64>,
    pub spectral: Option<SpectralNorm>,
}

impl DenseLayer {
    pub fn new<R: Rng + ?Sized>(inputs: usize, outputs: usize, rng: &mut R) -> Self {
        Self::from_weights(glorot_uniform(outputs, inputs, rng), Array1::zeros(outputs))
    }

    pub fn from_weights(weight: Array2<f64>, bias: Array1<f64>) -> Self {
        assert_eq!(weight.nrows(), bias.len(), "bias length must equal output size");
        DenseLayer {
            grad_weight: Array2::zeros(weight.raw_dim()),
            grad_bias: Array1::zeros(bias.len()),
            weight,
            bias,
            spectral: None,
        }
    }

    pub fn with_spectral_norm<R: Rng + ?Sized>(mut self, rng: &mut R) -> Self {
        self.spectral = Some(SpectralNorm::new(&self.weight.view(), rng));
        self
    }

    pub fn inputs(&self) -> usize {
        self.weight.ncols()
    }

    pub fn outputs(&self) -> usize {
        self.weight.nrows()
    }

    /// One or more power iterations on the persistent spectral vectors.
    /// No-op without spectral normalization.
    pub fn refresh_spectral(&mut self, iterations: usize) {
        if let Some(sn) = self.spectral.as_mut() {
            sn.power_iterate(&self.weight.view(), iterations);
        }
    }

    /// The weight actually used in the forward pass, with `σ̂` (1 when unnormalized).
    pub fn effective_weight(&self) -> (Array2<f64>, f64) {
        match &self.spectral {
            Some(sn) => sn.normalize(&self.weight.view()),
            None => (self.weight.clone(), 1.0),
        }
    }

    fn check_input(&self, x: &ArrayView2<f64>) -> Result<()> {
        if x.ncols() != self.inputs() {
            return Err(AemError::contract(format!(
                "dense layer expects {} inputs, got {}",
                self.inputs(),
                x.ncols()
            )));
        }
        Ok(())
    }

    pub fn forward(&self, x: &ArrayView2<f64>) -> Result<Array2<f64>> {
        self.check_input(x)?;
        let (w, _) = self.effective_weight();
        Ok(x.dot(&w.t()) + &self.bias)
    }

    /// Accumulates parameter gradients for `upstream = ∂L/∂y` and returns `∂L/∂x`.
    pub fn backward(&mut self, x: &ArrayView2<f64>, upstream: &ArrayView2<f64>) -> Array2<f64> {
        let (w, sigma) = self.effective_weight();
        let grad_eff = upstream.t().dot(x);
        self.accumulate_effective_grad(&w.view(), sigma, &grad_eff.view());
        self.grad_bias += &upstream.sum_axis(Axis(0));
        upstream.dot(&w)
    }

    /// `∂L/∂x` without touching parameter gradients.
    pub fn input_grad(&self, upstream: &ArrayView2<f64>) -> Array2<f64> {
        let (w, _) = self.effective_weight();
        upstream.dot(&w)
    }

    /// Adds a gradient taken with respect to the effective weight, mapping it
    /// through the spectral normalization when present.
    pub fn accumulate_effective_grad(
        &mut self,
        effective: &ArrayView2<f64>,
        sigma: f64,
        grad_eff: &ArrayView2<f64>,
    ) {
        match &self.spectral {
            Some(sn) => self.grad_weight += &sn.backward(effective, sigma, grad_eff),
            None => self.grad_weight += grad_eff,
        }
    }

    pub fn export(&self, prefix: &str, store: &mut TensorStore) {
        store.put_matrix(format!("{prefix}.weight"), &self.weight);
        store.put_vector(format!("{prefix}.bias"), &self.bias);
        if let Some(sn) = &self.spectral {
            store.put_vector(format!("{prefix}.sn_u"), &sn.u);
            store.put_vector(format!("{prefix}.sn_v"), &sn.v);
        }
    }

    pub fn import(&mut self, prefix: &str, store: &TensorStore) -> Result<()> {
        let weight = store.matrix(&format!("{prefix}.weight"))?;
        let bias = store.vector(&format!("{prefix}.bias"))?;
        if weight.dim() != self.weight.dim() || bias.len() != self.bias.len() {
            return Err(AemError::Checkpoint(format!(
                "{prefix}: stored shape {:?} does not match layer shape {:?}",
                weight.dim(),
                self.weight.dim()
            )));
        }
        self.weight = weight;
        self.bias = bias;
        if let Some(sn) = self.spectral.as_mut() {
            sn.u = store.vector(&format!("{prefix}.sn_u"))?;
            sn.v = store.vector(&format!("{prefix}.sn_v"))?;
        }
        Ok(())
    }
}

impl Trainable for DenseLayer {
    fn visit_params(&mut self, f: &mut dyn FnMut(&mut [f64], &mut [f64])) {
        f(
            self.weight.as_slice_mut().expect("standard layout"),
            self.grad_weight.as_slice_mut().expect("standard layout"),
        );
        f(
            self.bias.as_slice_mut().expect("standard layout"),
            self.grad_bias.as_slice_mut().expect("standard layout"),
        );
    }
}
