use ndarray::{Array2, ArrayView2, Axis};
use rand::Rng;

use crate::model::Discriminator;
use crate::numerics::{sigmoid_derivative, PROB_CLAMP};
use crate::{AemError, Result};

fn clamp(p: f64) -> f64 {
    p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP)
}

fn mean(xs: impl ExactSizeIterator<Item = f64>) -> f64 {
    let n = xs.len();
    if n == 0 {
        return 0.0;
    }
    xs.sum::<f64>() / n as f64
}

/// `E[-ln D(d_r)] + E[-ln(1 - D(d_f))]` over the two batches.
pub fn discriminator_loss(d_real: &[f64], d_fake: &[f64]) -> f64 {
    mean(d_real.iter().map(|&p| -clamp(p).ln())) + mean(d_fake.iter().map(|&p| -(1.0 - clamp(p)).ln()))
}

/// Generator objective to minimize: `E[ln(1 - D(G(θ)))]`, or `E[-ln D(G(θ))]`
/// when `non_saturating` is set.
pub fn generator_loss(d_fake: &[f64], non_saturating: bool) -> f64 {
    if non_saturating {
        mean(d_fake.iter().map(|&p| -clamp(p).ln()))
    } else {
        mean(d_fake.iter().map(|&p| (1.0 - clamp(p)).ln()))
    }
}

/// A critic that can report `∂D_out/∂x` for each row of a batch.
pub trait InputGradient {
    fn output_input_gradient(&self, x: &ArrayView2<f64>) -> Result<Array2<f64>>;
}

impl InputGradient for Discriminator {
    fn output_input_gradient(&self, x: &ArrayView2<f64>) -> Result<Array2<f64>> {
        let pass = self.forward(x)?;
        let u = self.logit_input_gradient(&pass);
        let scale = pass.logits.mapv(sigmoid_derivative).insert_axis(Axis(1));
        Ok(u * &scale)
    }
}

/// `d* = ε d_r + (1 - ε) d_f` with one `ε ~ U[0, 1]` per row.
pub fn interpolate<R: Rng + ?Sized>(
    real: &ArrayView2<f64>,
    fake: &ArrayView2<f64>,
    rng: &mut R,
) -> Result<(Array2<f64>, Vec<f64>)> {
    if real.dim() != fake.dim() {
        return Err(AemError::contract(format!(
            "real batch {:?} and fake batch {:?} differ in shape",
            real.dim(),
            fake.dim()
        )));
    }
    let eps: Vec<f64> = (0..real.nrows()).map(|_| rng.random::<f64>()).collect();
    let mut out = fake.to_owned();
    for ((mut row, r), &e) in out.rows_mut().into_iter().zip(real.rows()).zip(&eps) {
        row.zip_mut_with(&r, |f, &r| *f = e * r + (1.0 - e) * *f);
    }
    Ok((out, eps))
}

/// `mean_i (‖g_i‖₂ - 1)²` over the rows of `grads`.
pub fn penalty_from_gradients(grads: &ArrayView2<f64>) -> f64 {
    mean(grads.rows().into_iter().map(|g| (g.dot(&g).sqrt() - 1.0).powi(2)))
}

/// Gradient penalty at random interpolates of the two batches.
pub fn gradient_penalty<C, R>(
    critic: &C,
    real: &ArrayView2<f64>,
    fake: &ArrayView2<f64>,
    rng: &mut R,
) -> Result<f64>
where
    C: InputGradient + ?Sized,
    R: Rng + ?Sized,
{
    let (mixed, _) = interpolate(real, fake, rng)?;
    let grads = critic.output_input_gradient(&mixed.view())?;
    Ok(penalty_from_gradients(&grads.view()))
}
