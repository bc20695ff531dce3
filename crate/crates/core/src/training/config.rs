use serde::{Deserialize, Serialize};

use crate::numerics::{AdamConfig, DirichletPrior};
use crate::{AemError, Result};

/// Which discriminator output the gradient penalty differentiates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PenaltyTarget {
    /// The pre-sigmoid score, whose Lipschitz constant spectral
    /// normalization bounds by 1.
    #[default]
    Logit,
    /// `D_out` itself. With spectral normalization `‖∇D_out‖ ≤ 1/4`, so the
    /// penalty cannot drop below `(3/4)²`.
    Probability,
}

/// Every knob of the adversarial training loop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    /// Number of latent events `E`.
    pub events: usize,
    /// Generator hidden width `H`.
    pub hidden: usize,
    /// Discriminator hidden width `H_d`.
    pub disc_hidden: usize,
    /// Generator layers: 3, 4 or 5.
    pub depth: usize,
    /// Gradient-penalty coefficient `λ`.
    pub lambda: f64,
    pub penalty_target: PenaltyTarget,
    /// Discriminator updates per generator update.
    pub n_d: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_eps: f64,
    /// Dirichlet concentration; `None` means all ones.
    pub alpha: Option<Vec<f64>>,
    pub leaky_slope: f64,
    pub spectral_norm: bool,
    /// Power iterations per discriminator step.
    pub power_iterations: usize,
    /// Minimize `-ln D(G(θ))` instead of `ln(1 - D(G(θ)))`.
    pub non_saturating: bool,
    pub max_g_steps: usize,
    pub convergence_window: usize,
    /// Relative change of the windowed mean generator loss below which
    /// training stops; `0` disables the check.
    pub convergence_tolerance: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        let adam = AdamConfig::default();
        TrainConfig {
            events: 25,
            hidden: 200,
            disc_hidden: 200,
            depth: 3,
            lambda: 10.0,
            penalty_target: PenaltyTarget::Logit,
            n_d: 5,
            batch_size: 32,
            learning_rate: adam.learning_rate,
            beta1: adam.beta1,
            beta2: adam.beta2,
            adam_eps: adam.eps,
            alpha: None,
            leaky_slope: 0.1,
            spectral_norm: true,
            power_iterations: 1,
            non_saturating: false,
            max_g_steps: 3_000,
            convergence_window: 100,
            convergence_tolerance: 1e-3,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            learning_rate: self.learning_rate,
            beta1: self.beta1,
            beta2: self.beta2,
            eps: self.adam_eps,
        }
    }

    pub fn alpha_vector(&self) -> Vec<f64> {
        self.alpha.clone().unwrap_or_else(|| vec![1.0; self.events])
    }

    pub fn prior(&self) -> Result<DirichletPrior> {
        DirichletPrior::new(self.alpha_vector())
    }

    /// Checks every constraint and reports all violations at once.
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if self.events < 2 {
            problems.push(format!("events must be at least 2 (got {})", self.events));
        }
        if self.hidden < 1 {
            problems.push("hidden must be at least 1".to_string());
        }
        if self.disc_hidden < 1 {
            problems.push("disc_hidden must be at least 1".to_string());
        }
        if !(3..=5).contains(&self.depth) {
            problems.push(format!("depth must be 3, 4 or 5 (got {})", self.depth));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            problems.push(format!("lambda must be finite and >= 0 (got {})", self.lambda));
        }
        if self.n_d < 1 {
            problems.push("n_d must be at least 1".to_string());
        }
        if self.batch_size < 2 {
            problems.push(format!("batch_size must be at least 2 (got {})", self.batch_size));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            problems.push(format!("learning_rate must be positive (got {})", self.learning_rate));
        }
        for (name, b) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(0.0..1.0).contains(&b) {
                problems.push(format!("{name} must lie in [0, 1) (got {b})"));
            }
        }
        if !(self.adam_eps > 0.0) {
            problems.push("adam_eps must be positive".to_string());
        }
        if let Some(alpha) = &self.alpha {
            if alpha.len() != self.events {
                problems.push(format!(
                    "alpha has {} components but events is {}",
                    alpha.len(),
                    self.events
                ));
            }
            if alpha.iter().any(|a| !(*a > 0.0 && a.is_finite())) {
                problems.push("alpha components must be positive and finite".to_string());
            }
        }
        if !(self.leaky_slope >= 0.0 && self.leaky_slope <= 1.0) {
            problems.push(format!("leaky_slope must lie in [0, 1] (got {})", self.leaky_slope));
        }
        if self.spectral_norm && self.power_iterations < 1 {
            problems.push("power_iterations must be at least 1 with spectral normalization".to_string());
        }
        if self.max_g_steps < 1 {
            problems.push("max_g_steps must be at least 1".to_string());
        }
        if self.convergence_window < 1 {
            problems.push("convergence_window must be at least 1".to_string());
        }
        if !(self.convergence_tolerance >= 0.0) {
            problems.push("convergence_tolerance must be >= 0".to_string());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(AemError::Config(problems.join("; ")))
        }
    }
}
