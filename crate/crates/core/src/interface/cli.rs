//! Command-line definitions. `main` only parses and calls [`run`].

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use super::commands::{
    self, BaselineOptions, EvalOptions, ExtractOptions, FeaturesOptions, PrepareOptions, SynthOptions,
    TrainOptions,
};
use crate::evaluation::DEFAULT_CORRECT_THRESHOLD;
use crate::events::{DEFAULT_MERGE_THRESHOLD, DEFAULT_TOP_WORDS};
use crate::training::{PenaltyTarget, TrainConfig};
use crate::Result;

#[derive(Debug, Parser)]
#[command(name = "aem", version, about = "Adversarial-neural event model: extract structured events from pre-tagged documents")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build field vocabularies and TF-IDF document vectors from a corpus.
    Prepare {
        /// Line-delimited JSON corpus.
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Document-frequency floor (default: 3 above 5000 documents, else 1).
        #[arg(long)]
        min_df: Option<usize>,
    },
    /// Train generator and discriminator on a prepared directory.
    Train(TrainArgs),
    /// Decode events from a checkpoint and assign documents to them.
    Extract {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        prepared: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Terms per field in events.txt.
        #[arg(long, default_value_t = DEFAULT_TOP_WORDS)]
        top_words: usize,
        /// Merge events whose top keywords overlap.
        #[arg(long)]
        merge: bool,
        #[arg(long, default_value_t = DEFAULT_MERGE_THRESHOLD)]
        merge_threshold: f64,
    },
    /// Score an event table against gold events (Table-1 style report).
    Eval {
        /// event_terms.txt written by `extract`.
        #[arg(long)]
        events: PathBuf,
        #[arg(long)]
        gold: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Mean-Jaccard similarity a matched event needs to count as correct.
        #[arg(long, default_value_t = DEFAULT_CORRECT_THRESHOLD)]
        threshold: f64,
        /// Also run the K-means baseline with this many clusters.
        #[arg(long, requires = "prepared")]
        kmeans: Option<usize>,
        /// Prepared directory for the baseline.
        #[arg(long)]
        prepared: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Export discriminative features, a 2-D PCA projection and a scatter plot.
    Features {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        prepared: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate a synthetic corpus with known events.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 10)]
        true_events: usize,
        #[arg(long, default_value_t = 100)]
        docs_per_event: usize,
        #[arg(long, default_value_t = 40)]
        vocab_size: usize,
        /// Terms with non-zero probability per event and field.
        #[arg(long, default_value_t = 10)]
        support_size: usize,
        #[arg(long, default_value_t = 0.2)]
        noise_rate: f64,
        #[arg(long, default_value_t = 8)]
        tokens_per_field: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PenaltyArg {
    Logit,
    Probability,
}

/// Training flags; every unset flag keeps the [`TrainConfig`] default.
#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub prepared: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Number of latent events E.
    #[arg(long)]
    pub events: Option<usize>,
    /// Generator hidden width H.
    #[arg(long)]
    pub hidden: Option<usize>,
    #[arg(long)]
    pub disc_hidden: Option<usize>,
    /// Generator layers (3, 4 or 5).
    #[arg(long)]
    pub depth: Option<usize>,
    /// Gradient-penalty coefficient.
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long, value_enum)]
    pub penalty_target: Option<PenaltyArg>,
    /// Discriminator updates per generator update.
    #[arg(long)]
    pub n_d: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub beta1: Option<f64>,
    #[arg(long)]
    pub beta2: Option<f64>,
    /// Dirichlet concentration: one value for all events or E comma-separated values.
    #[arg(long, value_delimiter = ',')]
    pub alpha: Option<Vec<f64>>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub max_g_steps: Option<usize>,
    #[arg(long)]
    pub convergence_window: Option<usize>,
    /// 0 disables the convergence check.
    #[arg(long)]
    pub convergence_tolerance: Option<f64>,
    #[arg(long)]
    pub no_spectral_norm: bool,
    /// Minimize -ln D(G(θ)) instead of ln(1 - D(G(θ))).
    #[arg(long)]
    pub non_saturating: bool,
    /// Write an extra checkpoint every this many generator steps.
    #[arg(long)]
    pub checkpoint_every: Option<usize>,
}

impl TrainArgs {
    pub fn to_config(&self) -> TrainConfig {
        let mut c = TrainConfig::default();
        macro_rules! overlay {
            ($($field:ident),*) => { $(if let Some(v) = self.$field.clone() { c.$field = v; })* };
        }
        overlay!(events, hidden, disc_hidden, depth, lambda, n_d, batch_size, learning_rate, beta1, beta2, seed,
            max_g_steps, convergence_window, convergence_tolerance);
        if let Some(alpha) = &self.alpha {
            c.alpha = Some(if alpha.len() == 1 { vec![alpha[0]; c.events] } else { alpha.clone() });
        }
        if let Some(p) = self.penalty_target {
            c.penalty_target = match p {
                PenaltyArg::Logit => PenaltyTarget::Logit,
                PenaltyArg::Probability => PenaltyTarget::Probability,
            };
        }
        c.spectral_norm = !self.no_spectral_norm;
        c.non_saturating = self.non_saturating;
        c
    }
}

/// Runs one command and returns the lines to print.
pub fn run(cli: Cli) -> Result<Vec<String>> {
    Ok(match cli.command {
        Command::Prepare { corpus, out, min_df } => {
            let s = commands::prepare(&PrepareOptions { corpus, out_dir: out, min_df })?;
            vec![format!(
                "{} documents, V = {} (entities {}, locations {}, keywords {}, dates {})",
                s.documents, s.dimension, s.field_sizes[0], s.field_sizes[1], s.field_sizes[2], s.field_sizes[3]
            )]
        }
        Command::Train(args) => {
            let s = commands::train(&TrainOptions {
                config: args.to_config(),
                prepared: args.prepared,
                out_dir: args.out,
                checkpoint_every: args.checkpoint_every,
            })?;
            vec![format!(
                "{} generator steps, {} discriminator steps, {:.1} s, stopped: {}",
                s.g_steps, s.d_steps, s.seconds, s.stop
            )]
        }
        Command::Extract { checkpoint, prepared, out, top_words, merge, merge_threshold } => {
            let n = commands::extract(&ExtractOptions {
                checkpoint,
                prepared,
                out_dir: out,
                top_words,
                merge_threshold: merge.then_some(merge_threshold),
            })?;
            vec![format!("{n} events")]
        }
        Command::Eval { events, gold, out, threshold, kmeans, prepared, seed } => {
            let mut opts = EvalOptions::new(events, gold, out);
            opts.threshold = threshold;
            opts.baseline = kmeans.zip(prepared).map(|(k, prepared)| BaselineOptions { prepared, k, seed });
            commands::eval(&opts)?
                .into_iter()
                .map(|(m, r)| {
                    format!("{m}: P {:.1}  R {:.1}  F {:.1}", 100.0 * r.precision, 100.0 * r.recall, 100.0 * r.f_measure)
                })
                .collect()
        }
        Command::Features { checkpoint, prepared, out } => {
            let f = commands::features(&FeaturesOptions { checkpoint, prepared, out_dir: out })?;
            vec![format!("{} x {} features", f.nrows(), f.ncols())]
        }
        Command::Synth { out, true_events, docs_per_event, vocab_size, support_size, noise_rate, tokens_per_field, seed } => {
            let n = commands::synth(&SynthOptions {
                out_dir: out,
                true_events,
                docs_per_event,
                vocab_size,
                support_size,
                noise_rate,
                tokens_per_field,
                seed,
            })?;
            vec![format!("{n} documents")]
        }
    })
}
