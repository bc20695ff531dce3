use std::fmt::Write as _;
use std::hash::{DefaultHasher, Hash, Hasher};
use std::time::{Duration, Instant};

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::{PenaltyTarget, TrainConfig};
use super::losses::{discriminator_loss, generator_loss, interpolate};
use crate::model::{init_model, Discriminator, Generator};
use crate::numerics::{sigmoid_derivative, AdamState, DirichletPrior, Mode, Trainable};
use crate::{AemError, Result};

/// Epoch-shuffled minibatches: every row appears exactly once per epoch.
#[derive(Debug, Clone)]
pub struct BatchSampler {
    order: Vec<usize>,
    position: usize,
}

impl BatchSampler {
    pub fn new<R: Rng + ?Sized>(rows: usize, rng: &mut R) -> Self {
        let mut order: Vec<usize> = (0..rows).collect();
        order.shuffle(rng);
        BatchSampler { order, position: 0 }
    }

    pub fn next_batch<R: Rng + ?Sized>(&mut self, size: usize, rng: &mut R) -> Vec<usize> {
        let mut batch = Vec::with_capacity(size);
        while batch.len() < size {
            if self.position == self.order.len() {
                self.order.shuffle(rng);
                self.position = 0;
            }
            let take = (size - batch.len()).min(self.order.len() - self.position);
            batch.extend_from_slice(&self.order[self.position..self.position + take]);
            self.position += take;
        }
        batch
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DStepRecord {
    /// Index of the generator round this update belongs to.
    pub g_step: usize,
    pub l_d: f64,
    pub l_gp: f64,
    /// `l_d + λ l_gp`, computed exactly that way.
    pub l: f64,
    /// Training time so far, excluding anything outside the update steps.
    pub seconds: f64,
    /// Hash of the bits of the θ batch fed to the generator.
    pub theta_digest: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GStepRecord {
    pub g_step: usize,
    pub gen_loss: f64,
    pub seconds: f64,
    pub theta_digest: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum StopReason {
    MaxSteps,
    Converged,
    NonFinite(String),
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainTrace {
    pub lambda: f64,
    pub d_steps: Vec<DStepRecord>,
    pub g_steps: Vec<GStepRecord>,
    pub stop: Option<StopReason>,
}

impl TrainTrace {
    pub fn total_seconds(&self) -> f64 {
        let d = self.d_steps.last().map_or(0.0, |r| r.seconds);
        let g = self.g_steps.last().map_or(0.0, |r| r.seconds);
        d.max(g)
    }

    /// Hash of every recorded loss and θ digest, ignoring wall-clock times.
    pub fn fingerprint(&self) -> u64 {
        let mut h = DefaultHasher::new();
        for r in &self.d_steps {
            (r.g_step, r.l_d.to_bits(), r.l_gp.to_bits(), r.l.to_bits(), r.theta_digest).hash(&mut h);
        }
        for r in &self.g_steps {
            (r.g_step, r.gen_loss.to_bits(), r.theta_digest).hash(&mut h);
        }
        h.finish()
    }

    /// Tab-separated log, one row per update in execution order:
    /// `iteration phase g_step l_d l_gp l gen_loss seconds theta_digest`.
    /// Columns that do not apply to a phase hold `-`.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("iteration\tphase\tg_step\tl_d\tl_gp\tl\tgen_loss\tseconds\ttheta_digest\n");
        let mut d = self.d_steps.iter().peekable();
        let mut iteration = 0;
        for g in &self.g_steps {
            while let Some(r) = d.next_if(|r| r.g_step <= g.g_step) {
                let _ = writeln!(
                    out,
                    "{iteration}\tD\t{}\t{:.16e}\t{:.16e}\t{:.16e}\t-\t{:.6}\t{:016x}",
                    r.g_step, r.l_d, r.l_gp, r.l, r.seconds, r.theta_digest
                );
                iteration += 1;
            }
            let _ = writeln!(
                out,
                "{iteration}\tG\t{}\t-\t-\t-\t{:.16e}\t{:.6}\t{:016x}",
                g.g_step, g.gen_loss, g.seconds, g.theta_digest
            );
            iteration += 1;
        }
        for r in d {
            let _ = writeln!(
                out,
                "{iteration}\tD\t{}\t{:.16e}\t{:.16e}\t{:.16e}\t-\t{:.6}\t{:016x}",
                r.g_step, r.l_d, r.l_gp, r.l, r.seconds, r.theta_digest
            );
            iteration += 1;
        }
        out
    }
}

fn digest(batch: &Array2<f64>) -> u64 {
    let mut h = DefaultHasher::new();
    for x in batch.iter() {
        x.to_bits().hash(&mut h);
    }
    h.finish()
}

/// Losses of one discriminator update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscriminatorLosses {
    pub l_d: f64,
    pub l_gp: f64,
    pub l: f64,
}

/// Zeroes the discriminator's gradients, then accumulates the gradient of
/// `L_d + λ L_gp` for fixed real, fake and interpolated batches.
pub fn discriminator_gradients(
    d: &mut Discriminator,
    real: &ArrayView2<f64>,
    fake: &ArrayView2<f64>,
    mixed: &ArrayView2<f64>,
    lambda: f64,
    target: PenaltyTarget,
) -> Result<DiscriminatorLosses> {
    d.zero_grad();
    let pass_real = d.forward(real)?;
    let pass_fake = d.forward(fake)?;
    let l_d = discriminator_loss(pass_real.probs.as_slice().unwrap(), pass_fake.probs.as_slice().unwrap());

    let (m_r, m_f) = (real.nrows() as f64, fake.nrows() as f64);
    // d(-ln σ(z))/dz = -(1 - σ), d(-ln(1 - σ(z)))/dz = σ
    let d_real = pass_real.logits.mapv(|z| -(1.0 - unclamped_sigmoid(z)) / m_r);
    let d_fake = pass_fake.logits.mapv(|z| unclamped_sigmoid(z) / m_f);
    d.backward(&pass_real, &d_real.view());
    d.backward(&pass_fake, &d_fake.view());

    let pass_mixed = d.forward(mixed)?;
    let u = d.logit_input_gradient(&pass_mixed);
    let m = mixed.nrows() as f64;
    let u_norms: Array1<f64> = u.rows().into_iter().map(|r| r.dot(&r).sqrt()).collect();
    // ‖∇D_out‖ = σ'(z) ‖u‖
    let slopes = match target {
        PenaltyTarget::Logit => Array1::ones(u_norms.len()),
        PenaltyTarget::Probability => pass_mixed.logits.mapv(sigmoid_derivative),
    };
    let grad_norms = &slopes * &u_norms;
    let l_gp = grad_norms.iter().map(|n| (n - 1.0).powi(2)).sum::<f64>() / m;

    if lambda > 0.0 {
        let coeff = grad_norms.mapv(|n| lambda * 2.0 * (n - 1.0) / m);
        if target == PenaltyTarget::Probability {
            // σ'' = σ' (1 - 2σ)
            let d_logits: Array1<f64> = pass_mixed
                .logits
                .iter()
                .zip(coeff.iter().zip(&u_norms))
                .map(|(&z, (&c, &un))| c * un * sigmoid_derivative(z) * (1.0 - 2.0 * unclamped_sigmoid(z)))
                .collect();
            d.backward(&pass_mixed, &d_logits.view());
        }
        let scale: Array1<f64> = coeff
            .iter()
            .zip(slopes.iter().zip(&u_norms))
            .map(|(&c, (&s, &un))| if un > 0.0 { c * s / un } else { 0.0 })
            .collect();
        let grad_u = u * &scale.insert_axis(Axis(1));
        d.penalty_backward(&pass_mixed, &grad_u.view());
    }
    Ok(DiscriminatorLosses { l_d, l_gp, l: l_d + lambda * l_gp })
}

fn unclamped_sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Zeroes the generator's gradients, then accumulates the gradient of the
/// generator loss for a fixed θ batch. Discriminator gradients are untouched.
pub fn generator_gradients(
    g: &mut Generator,
    d: &Discriminator,
    theta: &ArrayView2<f64>,
    non_saturating: bool,
) -> Result<f64> {
    g.zero_grad();
    let (fake, cache) = g.forward(theta, Mode::Training)?;
    let pass = d.forward(&fake.view())?;
    let loss = generator_loss(pass.probs.as_slice().unwrap(), non_saturating);
    let m = theta.nrows() as f64;
    let d_logits = pass.logits.mapv(|z| {
        let s = unclamped_sigmoid(z);
        if non_saturating {
            -(1.0 - s) / m
        } else {
            -s / m
        }
    });
    let d_fake = d.input_grad(&pass, &d_logits.view());
    g.backward(&cache, &d_fake.view());
    Ok(loss)
}

/// Stateful adversarial training: `n_d` discriminator updates per generator
/// update, fresh Dirichlet θ for every update, one RNG seeded from the config.
pub struct Trainer<'a> {
    data: ArrayView2<'a, f64>,
    pub config: TrainConfig,
    pub generator: Generator,
    pub discriminator: Discriminator,
    adam_g: AdamState,
    adam_d: AdamState,
    prior: DirichletPrior,
    rng: ChaCha8Rng,
    sampler: BatchSampler,
    pub trace: TrainTrace,
    elapsed: Duration,
}

impl<'a> Trainer<'a> {
    pub fn new(data: ArrayView2<'a, f64>, config: TrainConfig, field_sizes: [usize; 4]) -> Result<Self> {
        config.validate()?;
        if data.ncols() != field_sizes.iter().sum::<usize>() {
            return Err(AemError::config(format!(
                "document matrix has {} columns but the field sizes sum to {}",
                data.ncols(),
                field_sizes.iter().sum::<usize>()
            )));
        }
        if data.nrows() < config.batch_size {
            return Err(AemError::config(format!(
                "corpus has {} documents, fewer than the batch size {}",
                data.nrows(),
                config.batch_size
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let (generator, discriminator) = init_model(&config, field_sizes, &mut rng)?;
        let sampler = BatchSampler::new(data.nrows(), &mut rng);
        Ok(Trainer {
            data,
            prior: config.prior()?,
            adam_g: AdamState::new(config.adam()),
            adam_d: AdamState::new(config.adam()),
            trace: TrainTrace { lambda: config.lambda, ..TrainTrace::default() },
            config,
            generator,
            discriminator,
            rng,
            sampler,
            elapsed: Duration::ZERO,
        })
    }

    pub fn g_steps_done(&self) -> usize {
        self.trace.g_steps.len()
    }

    fn discriminator_step(&mut self, g_step: usize) -> Result<()> {
        let start = Instant::now();
        let m = self.config.batch_size;
        if self.config.spectral_norm {
            self.discriminator.refresh_spectral(self.config.power_iterations);
        }
        let rows = self.sampler.next_batch(m, &mut self.rng);
        let real = self.data.select(Axis(0), &rows);
        let theta = self.prior.sample_batch(m, &mut self.rng);
        let fake = self.generator.generate(&theta.view(), Mode::Training)?;
        let (mixed, _) = interpolate(&real.view(), &fake.view(), &mut self.rng)?;
        let losses = discriminator_gradients(
            &mut self.discriminator,
            &real.view(),
            &fake.view(),
            &mixed.view(),
            self.config.lambda,
            self.config.penalty_target,
        )?;
        if !losses.l.is_finite() {
            return Err(AemError::NonFinite(format!("discriminator loss {} at generator step {g_step}", losses.l)));
        }
        self.adam_d.step(&mut self.discriminator)?;
        self.elapsed += start.elapsed();
        self.trace.d_steps.push(DStepRecord {
            g_step,
            l_d: losses.l_d,
            l_gp: losses.l_gp,
            l: losses.l,
            seconds: self.elapsed.as_secs_f64(),
            theta_digest: digest(&theta),
        });
        Ok(())
    }

    fn generator_step(&mut self, g_step: usize) -> Result<()> {
        let start = Instant::now();
        let theta = self.prior.sample_batch(self.config.batch_size, &mut self.rng);
        let loss = generator_gradients(
            &mut self.generator,
            &self.discriminator,
            &theta.view(),
            self.config.non_saturating,
        )?;
        if !loss.is_finite() {
            return Err(AemError::NonFinite(format!("generator loss {loss} at step {g_step}")));
        }
        self.adam_g.step(&mut self.generator)?;
        self.elapsed += start.elapsed();
        self.trace.g_steps.push(GStepRecord {
            g_step,
            gen_loss: loss,
            seconds: self.elapsed.as_secs_f64(),
            theta_digest: digest(&theta),
        });
        Ok(())
    }

    /// One generator round: `n_d` discriminator updates then one generator update.
    pub fn step(&mut self) -> Result<()> {
        let g_step = self.g_steps_done();
        for _ in 0..self.config.n_d {
            self.discriminator_step(g_step)?;
        }
        self.generator_step(g_step)
    }

    fn converged(&self) -> bool {
        let w = self.config.convergence_window;
        let tol = self.config.convergence_tolerance;
        let losses = &self.trace.g_steps;
        if tol <= 0.0 || losses.len() < 2 * w {
            return false;
        }
        let window_mean = |rs: &[GStepRecord]| rs.iter().map(|r| r.gen_loss).sum::<f64>() / w as f64;
        let n = losses.len();
        let previous = window_mean(&losses[n - 2 * w..n - w]);
        let last = window_mean(&losses[n - w..]);
        (last - previous).abs() <= tol * previous.abs().max(1e-12)
    }

    /// Runs rounds until the step budget, convergence, or a non-finite value.
    /// `on_round` is called after every completed round.
    pub fn run_with(&mut self, mut on_round: impl FnMut(&Trainer<'a>) -> Result<()>) -> Result<StopReason> {
        let reason = loop {
            if self.g_steps_done() >= self.config.max_g_steps {
                break StopReason::MaxSteps;
            }
            match self.step() {
                Ok(()) => {}
                Err(AemError::NonFinite(msg)) => break StopReason::NonFinite(msg),
                Err(e) => return Err(e),
            }
            on_round(self)?;
            if self.converged() {
                break StopReason::Converged;
            }
        };
        self.trace.stop = Some(reason.clone());
        Ok(reason)
    }

    pub fn run(&mut self) -> Result<StopReason> {
        self.run_with(|_| Ok(()))
    }

    pub fn into_parts(self) -> (Generator, Discriminator, TrainTrace) {
        (self.generator, self.discriminator, self.trace)
    }
}

/// Trains from scratch. Configuration problems are errors; a non-finite loss
/// stops training and is reported in [`TrainTrace::stop`].
pub fn train(
    data: &ArrayView2<f64>,
    config: &TrainConfig,
    field_sizes: [usize; 4],
) -> Result<(Generator, Discriminator, TrainTrace)> {
    let mut trainer = Trainer::new(data.view(), config.clone(), field_sizes)?;
    trainer.run()?;
    Ok(trainer.into_parts())
}
