use ndarray::{Array1, Array2, ArrayView2, Axis};

use super::checkpoint::TensorStore;
use super::Trainable;
use crate::{AemError, Result};

pub const NORM_EPS: f64 = 1e-5;
pub const BATCH_NORM_MOMENTUM: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Training,
    Inference,
}

/// Per-row normalization with learnable gain and bias.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerNorm {
    pub gain: Array1<f64>,
    pub bias: Array1<f64>,
    pub grad_gain: Array1<f64>,
    pub grad_bias: Array1<f64>,
    pub eps: f64,
}

#[derive(Debug, Clone)]
pub struct LayerNormCache {
    normalized: Array2<f64>,
    inv_std: Array1<f64>,
}

impl LayerNorm {
    pub fn new(features: usize) -> Self {
        LayerNorm {
            gain: Array1::ones(features),
            bias: Array1::zeros(features),
            grad_gain: Array1::zeros(features),
            grad_bias: Array1::zeros(features),
            eps: NORM_EPS,
        }
    }

    pub fn forward(&self, x: &ArrayView2<f64>) -> (Array2<f64>, LayerNormCache) {
        let mean = x.mean_axis(Axis(1)).expect("feature dimension >= 1");
        let centered = x - &mean.view().insert_axis(Axis(1));
        let var = centered.mapv(|c| c * c).mean_axis(Axis(1)).expect("non-empty");
        let inv_std = var.mapv(|v| 1.0 / (v + self.eps).sqrt());
        let normalized = centered * inv_std.view().insert_axis(Axis(1));
        let out = &normalized * &self.gain + &self.bias;
        (out, LayerNormCache { normalized, inv_std })
    }

    pub fn backward(&mut self, cache: &LayerNormCache, dy: &ArrayView2<f64>) -> Array2<f64> {
        let xhat = &cache.normalized;
        self.grad_gain += &(dy * xhat).sum_axis(Axis(0));
        self.grad_bias += &dy.sum_axis(Axis(0));
        let dxhat = dy * &self.gain;
        let mean_d = dxhat.mean_axis(Axis(1)).unwrap().insert_axis(Axis(1));
        let mean_dx = (&dxhat * xhat).mean_axis(Axis(1)).unwrap().insert_axis(Axis(1));
        (dxhat - &mean_d - &(xhat * &mean_dx)) * cache.inv_std.view().insert_axis(Axis(1))
    }

    pub fn export(&self, prefix: &str, store: &mut TensorStore) {
        store.put_vector(format!("{prefix}.gain"), &self.gain);
        store.put_vector(format!("{prefix}.bias"), &self.bias);
    }

    pub fn import(&mut self, prefix: &str, store: &TensorStore) -> Result<()> {
        self.gain = store.vector_of_len(&format!("{prefix}.gain"), self.gain.len())?;
        self.bias = store.vector_of_len(&format!("{prefix}.bias"), self.bias.len())?;
        Ok(())
    }
}

impl Trainable for LayerNorm {
    fn visit_params(&mut self, f: &mut dyn FnMut(&mut [f64], &mut [f64])) {
        f(self.gain.as_slice_mut().unwrap(), self.grad_gain.as_slice_mut().unwrap());
        f(self.bias.as_slice_mut().unwrap(), self.grad_bias.as_slice_mut().unwrap());
    }
}

/// Per-feature normalization over the batch, with running statistics for inference.
///
/// Running statistics follow `running <- momentum * running + (1 - momentum) * batch`
/// using the biased batch variance.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchNorm {
    pub gain: Array1<f64>,
    pub bias: Array1<f64>,
    pub grad_gain: Array1<f64>,
    pub grad_bias: Array1<f64>,
    pub running_mean: Array1<f64>,
    pub running_var: Array1<f64>,
    pub momentum: f64,
    pub eps: f64,
    /// Training-mode batches folded into the running statistics.
    pub batches_seen: u64,
}

#[derive(Debug, Clone)]
pub struct BatchNormCache {
    normalized: Array2<f64>,
    inv_std: Array1<f64>,
    mode: Mode,
}

impl BatchNorm {
    pub fn new(features: usize) -> Self {
        BatchNorm {
            gain: Array1::ones(features),
            bias: Array1::zeros(features),
            grad_gain: Array1::zeros(features),
            grad_bias: Array1::zeros(features),
            running_mean: Array1::zeros(features),
            running_var: Array1::ones(features),
            momentum: BATCH_NORM_MOMENTUM,
            eps: NORM_EPS,
            batches_seen: 0,
        }
    }

    pub fn forward(&mut self, x: &ArrayView2<f64>, mode: Mode) -> Result<(Array2<f64>, BatchNormCache)> {
        let (mean, var) = match mode {
            Mode::Training => {
                if x.nrows() < 2 {
                    return Err(AemError::contract(format!(
                        "batch normalization in training mode needs at least 2 rows, got {}",
                        x.nrows()
                    )));
                }
                let mean = x.mean_axis(Axis(0)).unwrap();
                let var = (x - &mean).mapv(|c| c * c).mean_axis(Axis(0)).unwrap();
                let keep = self.momentum;
                self.running_mean = &self.running_mean * keep + &mean * (1.0 - keep);
                self.running_var = &self.running_var * keep + &var * (1.0 - keep);
                self.batches_seen += 1;
                (mean, var)
            }
            Mode::Inference => (self.running_mean.clone(), self.running_var.clone()),
        };
        let inv_std = var.mapv(|v| 1.0 / (v + self.eps).sqrt());
        let normalized = (x - &mean) * &inv_std;
        let out = &normalized * &self.gain + &self.bias;
        Ok((out, BatchNormCache { normalized, inv_std, mode }))
    }

    pub fn backward(&mut self, cache: &BatchNormCache, dy: &ArrayView2<f64>) -> Array2<f64> {
        let xhat = &cache.normalized;
        self.grad_gain += &(dy * xhat).sum_axis(Axis(0));
        self.grad_bias += &dy.sum_axis(Axis(0));
        let dxhat = dy * &self.gain;
        match cache.mode {
            Mode::Inference => dxhat * &cache.inv_std,
            Mode::Training => {
                let mean_d = dxhat.mean_axis(Axis(0)).unwrap();
                let mean_dx = (&dxhat * xhat).mean_axis(Axis(0)).unwrap();
                (dxhat - &mean_d - &(xhat * &mean_dx)) * &cache.inv_std
            }
        }
    }

    pub fn export(&self, prefix: &str, store: &mut TensorStore) {
        store.put_vector(format!("{prefix}.gain"), &self.gain);
        store.put_vector(format!("{prefix}.bias"), &self.bias);
        store.put_vector(format!("{prefix}.running_mean"), &self.running_mean);
        store.put_vector(format!("{prefix}.running_var"), &self.running_var);
        store.put_vector(format!("{prefix}.batches_seen"), &Array1::from_elem(1, self.batches_seen as f64));
    }

    pub fn import(&mut self, prefix: &str, store: &TensorStore) -> Result<()> {
        let n = self.gain.len();
        self.gain = store.vector_of_len(&format!("{prefix}.gain"), n)?;
        self.bias = store.vector_of_len(&format!("{prefix}.bias"), n)?;
        self.running_mean = store.vector_of_len(&format!("{prefix}.running_mean"), n)?;
        self.running_var = store.vector_of_len(&format!("{prefix}.running_var"), n)?;
        self.batches_seen = store.vector_of_len(&format!("{prefix}.batches_seen"), 1)?[0] as u64;
        Ok(())
    }
}

impl Trainable for BatchNorm {
    fn visit_params(&mut self, f: &mut dyn FnMut(&mut [f64], &mut [f64])) {
        f(self.gain.as_slice_mut().unwrap(), self.grad_gain.as_slice_mut().unwrap());
        f(self.bias.as_slice_mut().unwrap(), self.grad_bias.as_slice_mut().unwrap());
    }
}
