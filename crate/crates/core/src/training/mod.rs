//! Adversarial objective and training loop.

mod config;
mod losses;
mod trainer;

pub use config::{PenaltyTarget, TrainConfig};
pub use losses::{
    discriminator_loss, generator_loss, gradient_penalty, interpolate, penalty_from_gradients,
    InputGradient,
};
pub use trainer::{
    discriminator_gradients, generator_gradients, train, BatchSampler, DStepRecord,
    DiscriminatorLosses, GStepRecord, StopReason, TrainTrace, Trainer,
};
