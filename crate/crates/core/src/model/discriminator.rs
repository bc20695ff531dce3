use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::Rng;

use crate::numerics::{
    leaky_relu, leaky_relu_derivative, sigmoid, DenseLayer, TensorStore, Trainable,
};
use crate::Result;

/// Fully connected critic `V → H_d → H_d → 1` with a sigmoid output.
///
/// The activations of the second layer are the discriminative features used
/// for visualization.
#[derive(Debug, Clone, PartialEq)]
pub struct Discriminator {
    pub input: DenseLayer,
    pub feature: DenseLayer,
    pub output: DenseLayer,
    pub slope: f64,
}

/// Everything one forward pass produced.
#[derive(Debug, Clone)]
pub struct DiscriminatorPass {
    pub input: Array2<f64>,
    pre_input: Array2<f64>,
    hidden: Array2<f64>,
    pre_feature: Array2<f64>,
    /// Discriminative features, `m × H_d`.
    pub features: Array2<f64>,
    /// Pre-sigmoid outputs.
    pub logits: Array1<f64>,
    /// `D_out`, strictly inside (0, 1).
    pub probs: Array1<f64>,
}

impl Discriminator {
    pub fn new<R: Rng + ?Sized>(inputs: usize, hidden: usize, slope: f64, spectral: bool, rng: &mut R) -> Self {
        let mut layers = [
            DenseLayer::new(inputs, hidden, rng),
            DenseLayer::new(hidden, hidden, rng),
            DenseLayer::new(hidden, 1, rng),
        ];
        if spectral {
            layers = layers.map(|l| l.with_spectral_norm(rng));
            for l in &mut layers {
                l.refresh_spectral(1);
            }
        }
        let [input, feature, output] = layers;
        Discriminator { input, feature, output, slope }
    }

    pub fn input_dimension(&self) -> usize {
        self.input.inputs()
    }

    pub fn hidden_width(&self) -> usize {
        self.input.outputs()
    }

    pub fn is_spectral(&self) -> bool {
        self.input.spectral.is_some()
    }

    pub fn layers_mut(&mut self) -> [&mut DenseLayer; 3] {
        [&mut self.input, &mut self.feature, &mut self.output]
    }

    /// Power iterations on every normalized layer.
    pub fn refresh_spectral(&mut self, iterations: usize) {
        for layer in self.layers_mut() {
            layer.refresh_spectral(iterations);
        }
    }

    pub fn forward(&self, x: &ArrayView2<f64>) -> Result<DiscriminatorPass> {
        let pre_input = self.input.forward(x)?;
        let hidden = leaky_relu(&pre_input.view(), self.slope);
        let pre_feature = self.feature.forward(&hidden.view())?;
        let features = leaky_relu(&pre_feature.view(), self.slope);
        let logits = self.output.forward(&features.view())?.remove_axis(Axis(1));
        let probs = logits.mapv(sigmoid);
        Ok(DiscriminatorPass {
            input: x.to_owned(),
            pre_input,
            hidden,
            pre_feature,
            features,
            logits,
            probs,
        })
    }

    fn derivatives(&self, pass: &DiscriminatorPass) -> (Array2<f64>, Array2<f64>) {
        (
            leaky_relu_derivative(&pass.pre_input.view(), self.slope),
            leaky_relu_derivative(&pass.pre_feature.view(), self.slope),
        )
    }

    /// Backpropagates `∂L/∂logit` per sample, accumulating parameter
    /// gradients, and returns `∂L/∂x`.
    pub fn backward(&mut self, pass: &DiscriminatorPass, d_logits: &ArrayView1<f64>) -> Array2<f64> {
        let (d1, d2) = self.derivatives(pass);
        let d_z = d_logits.to_owned().insert_axis(Axis(1));
        let d_features = self.output.backward(&pass.features.view(), &d_z.view());
        let d_pre_feature = d_features * &d2;
        let d_hidden = self.feature.backward(&pass.hidden.view(), &d_pre_feature.view());
        let d_pre_input = d_hidden * &d1;
        self.input.backward(&pass.input.view(), &d_pre_input.view())
    }

    /// `∂L/∂x` for the given `∂L/∂logit`, leaving parameter gradients alone.
    pub fn input_grad(&self, pass: &DiscriminatorPass, d_logits: &ArrayView1<f64>) -> Array2<f64> {
        let (d1, d2) = self.derivatives(pass);
        let d_z = d_logits.to_owned().insert_axis(Axis(1));
        let d_features = self.output.input_grad(&d_z.view());
        let d_hidden = self.feature.input_grad(&(d_features * &d2).view());
        self.input.input_grad(&(d_hidden * &d1).view())
    }

    /// Per-sample gradient of the logit with respect to the input, `m × V`.
    pub fn logit_input_gradient(&self, pass: &DiscriminatorPass) -> Array2<f64> {
        self.input_grad(pass, &Array1::ones(pass.logits.len()).view())
    }

    /// Accumulates parameter gradients of `Σ_i <grad_u_i, u_i>` where `u_i`
    /// is [`Self::logit_input_gradient`] of sample `i`.
    ///
    /// The activation derivatives are piecewise constant, so `u` depends only
    /// on the three (normalized) weight matrices, not on the biases.
    pub fn penalty_backward(&mut self, pass: &DiscriminatorPass, grad_u: &ArrayView2<f64>) {
        let (d1, d2) = self.derivatives(pass);
        let (w1, s1) = self.input.effective_weight();
        let (w2, s2) = self.feature.effective_weight();
        let (w3, s3) = self.output.effective_weight();

        // forward of the input-gradient chain
        let q2 = &d2 * &w3.row(0);
        let p1 = q2.dot(&w2);
        let q1 = &d1 * &p1;

        // u = q1 W1
        let g_w1 = q1.t().dot(grad_u);
        let g_q1 = grad_u.dot(&w1.t());
        let g_p1 = g_q1 * &d1;
        // p1 = q2 W2
        let g_w2 = q2.t().dot(&g_p1);
        let g_q2 = g_p1.dot(&w2.t());
        // q2 = d2 ⊙ w3
        let g_w3 = (g_q2 * &d2).sum_axis(Axis(0)).insert_axis(Axis(0));

        self.input.accumulate_effective_grad(&w1.view(), s1, &g_w1.view());
        self.feature.accumulate_effective_grad(&w2.view(), s2, &g_w2.view());
        self.output.accumulate_effective_grad(&w3.view(), s3, &g_w3.view());
    }

    pub fn export(&self, prefix: &str, store: &mut TensorStore) {
        self.input.export(&format!("{prefix}.input"), store);
        self.feature.export(&format!("{prefix}.feature"), store);
        self.output.export(&format!("{prefix}.output"), store);
    }

    pub fn import(&mut self, prefix: &str, store: &TensorStore) -> Result<()> {
        self.input.import(&format!("{prefix}.input"), store)?;
        self.feature.import(&format!("{prefix}.feature"), store)?;
        self.output.import(&format!("{prefix}.output"), store)
    }
}

impl Trainable for Discriminator {
    fn visit_params(&mut self, f: &mut dyn FnMut(&mut [f64], &mut [f64])) {
        self.input.visit_params(f);
        self.feature.visit_params(f);
        self.output.visit_params(f);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{glorot_uniform, gradient_check};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_output_layer_gives_one_half() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut d = Discriminator::new(6, 5, 0.1, true, &mut rng);
        d.output.weight.fill(0.0);
        let x = glorot_uniform(4, 6, &mut rng);
        let pass = d.forward(&x.view()).unwrap();
        assert!(pass.probs.iter().all(|p| *p == 0.5));
        assert_eq!(pass.features.dim(), (4, 5));
    }

    #[test]
    fn logit_input_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let d = Discriminator::new(6, 5, 0.1, true, &mut rng);
        let x = glorot_uniform(1, 6, &mut rng);
        let u = d.logit_input_gradient(&d.forward(&x.view()).unwrap());
        let report = gradient_check(
            |p| d.forward(&ArrayView2::from_shape((1, 6), p).unwrap()).unwrap().logits[0],
            x.as_slice().unwrap(),
            u.as_slice().unwrap(),
        );
        assert!(report.passed(1e-6), "{report:?}");
    }
}
