//! Differentiable building blocks for small dense networks in `f64`.
//!
//! Every layer keeps its own gradient buffers. Forward passes return a cache
//! that the matching backward pass consumes; backward passes accumulate
//! parameter gradients and return the gradient with respect to the input.

mod activation;
mod adam;
pub mod checkpoint;
mod dense;
mod dirichlet;
mod gradcheck;
mod init;
mod norm;
mod spectral;

pub use activation::{
    leaky_relu, leaky_relu_derivative, sigmoid, sigmoid_derivative, softmax, softmax_backward,
    PROB_CLAMP,
};
pub use adam::{AdamConfig, AdamState};
pub use checkpoint::{NamedTensor, TensorStore};
pub use dense::DenseLayer;
pub use dirichlet::DirichletPrior;
pub use gradcheck::{gradient_check, GradCheckReport, FD_STEP};
pub use init::{glorot_uniform, random_unit_vector};
pub use norm::{BatchNorm, BatchNormCache, LayerNorm, LayerNormCache, Mode};
pub use spectral::{SpectralNorm, SIGMA_EPS};

/// Anything holding parameters with matching gradient buffers.
///
/// `visit_params` must visit parameters in the same order on every call;
/// optimizer state is keyed by position.
pub trait Trainable {
    fn visit_params(&mut self, f: &mut dyn FnMut(&mut [f64], &mut [f64]));

    fn zero_grad(&mut self) {
        self.visit_params(&mut |_, g| g.fill(0.0));
    }

    fn num_params(&mut self) -> usize {
        let mut n = 0;
        self.visit_params(&mut |p, _| n += p.len());
        n
    }
}
