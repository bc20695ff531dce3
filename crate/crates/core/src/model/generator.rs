use ndarray::{s, Array2, ArrayView2, Axis};
use rand::Rng;

use crate::corpus::block_offsets;
use crate::numerics::{
    leaky_relu, leaky_relu_derivative, softmax, softmax_backward, BatchNorm, BatchNormCache,
    DenseLayer, LayerNorm, LayerNormCache, Mode, TensorStore, Trainable,
};
use crate::{AemError, Result};

const SIMPLEX_TOLERANCE: f64 = 1e-6;

/// Linear → LayerNorm → LeakyReLU.
#[derive(Debug, Clone, PartialEq)]
pub struct HiddenBlock {
    pub dense: DenseLayer,
    pub norm: LayerNorm,
}

/// Linear → BatchNorm → softmax, producing one field distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct Subnet {
    pub dense: DenseLayer,
    pub norm: BatchNorm,
}

/// Maps document-event mixtures `θ` (rows on the `E`-simplex) to fake
/// documents: four softmax blocks concatenated in field order.
#[derive(Debug, Clone, PartialEq)]
pub struct Generator {
    pub hidden: Vec<HiddenBlock>,
    pub subnets: [Subnet; 4],
    pub slope: f64,
}

struct BlockCache {
    input: Array2<f64>,
    norm: LayerNormCache,
    normalized: Array2<f64>,
}

struct SubnetCache {
    norm: BatchNormCache,
    probs: Array2<f64>,
}

/// Activations kept by [`Generator::forward`] for the backward pass.
pub struct GeneratorCache {
    blocks: Vec<BlockCache>,
    shared: Array2<f64>,
    subnets: Vec<SubnetCache>,
}

impl Generator {
    pub fn new<R: Rng + ?Sized>(
        events: usize,
        hidden: usize,
        depth: usize,
        field_sizes: [usize; 4],
        slope: f64,
        rng: &mut R,
    ) -> Self {
        let extra = depth.saturating_sub(3);
        let mut blocks = Vec::with_capacity(1 + extra);
        for i in 0..=extra {
            let inputs = if i == 0 { events } else { hidden };
            blocks.push(HiddenBlock {
                dense: DenseLayer::new(inputs, hidden, rng),
                norm: LayerNorm::new(hidden),
            });
        }
        let subnets = field_sizes.map(|size| Subnet {
            dense: DenseLayer::new(hidden, size, rng),
            norm: BatchNorm::new(size),
        });
        Generator {
            hidden: blocks,
            subnets,
            slope,
        }
    }

    pub fn events(&self) -> usize {
        self.hidden[0].dense.inputs()
    }

    pub fn hidden_width(&self) -> usize {
        self.hidden[0].dense.outputs()
    }

    /// Number of layers counting input, hidden blocks and the output layer.
    pub fn depth(&self) -> usize {
        self.hidden.len() + 2
    }

    pub fn field_sizes(&self) -> [usize; 4] {
        [0, 1, 2, 3].map(|i| self.subnets[i].dense.outputs())
    }

    pub fn output_dimension(&self) -> usize {
        self.field_sizes().iter().sum()
    }

    /// Whether every batch-norm layer has folded in at least one training batch.
    pub fn has_running_stats(&self) -> bool {
        self.subnets.iter().all(|s| s.norm.batches_seen > 0)
    }

    fn check_simplex(&self, theta: &ArrayView2<f64>) -> Result<()> {
        if theta.ncols() != self.events() {
            return Err(AemError::contract(format!(
                "generator expects {} event proportions per row, got {}",
                self.events(),
                theta.ncols()
            )));
        }
        for (i, row) in theta.rows().into_iter().enumerate() {
            let sum: f64 = row.sum();
            if row.iter().any(|x| !(*x >= -SIMPLEX_TOLERANCE)) || (sum - 1.0).abs() > SIMPLEX_TOLERANCE {
                return Err(AemError::contract(format!("theta row {i} is not on the simplex")));
            }
        }
        Ok(())
    }

    pub fn forward(&mut self, theta: &ArrayView2<f64>, mode: Mode) -> Result<(Array2<f64>, GeneratorCache)> {
        self.check_simplex(theta)?;
        if mode == Mode::Training && theta.nrows() < 2 {
            return Err(AemError::contract("generator training mode needs a batch of at least 2"));
        }
        let mut blocks = Vec::with_capacity(self.hidden.len());
        let mut h = theta.to_owned();
        for block in &self.hidden {
            let pre = block.dense.forward(&h.view())?;
            let (normalized, norm) = block.norm.forward(&pre.view());
            let next = leaky_relu(&normalized.view(), self.slope);
            blocks.push(BlockCache { input: h, norm, normalized });
            h = next;
        }
        let mut out = Array2::zeros((theta.nrows(), self.output_dimension()));
        let offsets = block_offsets(self.field_sizes());
        let mut subnets = Vec::with_capacity(4);
        for (k, subnet) in self.subnets.iter_mut().enumerate() {
            let logits = subnet.dense.forward(&h.view())?;
            let (normalized, norm) = subnet.norm.forward(&logits.view(), mode)?;
            let probs = softmax(&normalized.view());
            let width = probs.ncols();
            out.slice_mut(s![.., offsets[k]..offsets[k] + width]).assign(&probs);
            subnets.push(SubnetCache { norm, probs });
        }
        Ok((out, GeneratorCache { blocks, shared: h, subnets }))
    }

    /// Backpropagates `∂L/∂output` (rows × V), accumulating parameter
    /// gradients, and returns `∂L/∂θ`.
    pub fn backward(&mut self, cache: &GeneratorCache, d_out: &ArrayView2<f64>) -> Array2<f64> {
        let offsets = block_offsets(self.field_sizes());
        let mut d_shared = Array2::zeros(cache.shared.raw_dim());
        for (k, subnet) in self.subnets.iter_mut().enumerate() {
            let sc = &cache.subnets[k];
            let width = sc.probs.ncols();
            let d_probs = d_out.slice(s![.., offsets[k]..offsets[k] + width]);
            let d_norm = softmax_backward(&sc.probs.view(), &d_probs);
            let d_logits = subnet.norm.backward(&sc.norm, &d_norm.view());
            d_shared += &subnet.dense.backward(&cache.shared.view(), &d_logits.view());
        }
        let mut d_h = d_shared;
        for (block, bc) in self.hidden.iter_mut().zip(&cache.blocks).rev() {
            let d_norm = d_h * &leaky_relu_derivative(&bc.normalized.view(), self.slope);
            let d_pre = block.norm.backward(&bc.norm, &d_norm.view());
            d_h = block.dense.backward(&bc.input.view(), &d_pre.view());
        }
        d_h
    }

    /// Generator output for a batch, discarding the cache.
    pub fn generate(&mut self, theta: &ArrayView2<f64>, mode: Mode) -> Result<Array2<f64>> {
        Ok(self.forward(theta, mode)?.0)
    }

    /// Mean of each field block's row sums; handy for diagnostics.
    pub fn block_sums(&self, output: &ArrayView2<f64>) -> Array2<f64> {
        let offsets = block_offsets(self.field_sizes());
        let sizes = self.field_sizes();
        let mut sums = Array2::zeros((output.nrows(), 4));
        for k in 0..4 {
            let block = output.slice(s![.., offsets[k]..offsets[k] + sizes[k]]);
            sums.column_mut(k).assign(&block.sum_axis(Axis(1)));
        }
        sums
    }

    pub fn export(&self, prefix: &str, store: &mut TensorStore) {
        for (i, block) in self.hidden.iter().enumerate() {
            block.dense.export(&format!("{prefix}.hidden{i}.dense"), store);
            block.norm.export(&format!("{prefix}.hidden{i}.norm"), store);
        }
        for (k, subnet) in self.subnets.iter().enumerate() {
            subnet.dense.export(&format!("{prefix}.subnet{k}.dense"), store);
            subnet.norm.export(&format!("{prefix}.subnet{k}.norm"), store);
        }
    }

    pub fn import(&mut self, prefix: &str, store: &TensorStore) -> Result<()> {
        for (i, block) in self.hidden.iter_mut().enumerate() {
            block.dense.import(&format!("{prefix}.hidden{i}.dense"), store)?;
            block.norm.import(&format!("{prefix}.hidden{i}.norm"), store)?;
        }
        for (k, subnet) in self.subnets.iter_mut().enumerate() {
            subnet.dense.import(&format!("{prefix}.subnet{k}.dense"), store)?;
            subnet.norm.import(&format!("{prefix}.subnet{k}.norm"), store)?;
        }
        Ok(())
    }
}

impl Trainable for Generator {
    fn visit_params(&mut self, f: &mut dyn FnMut(&mut [f64], &mut [f64])) {
        for block in &mut self.hidden {
            block.dense.visit_params(f);
            block.norm.visit_params(f);
        }
        for subnet in &mut self.subnets {
            subnet.dense.visit_params(f);
            subnet.norm.visit_params(f);
        }
    }
}
