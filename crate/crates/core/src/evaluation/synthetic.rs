use rand::distr::weighted::WeightedIndex;
use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Distribution;

use super::matching::GoldEvent;
use crate::corpus::DocumentRecord;
use crate::numerics::DirichletPrior;
use crate::{AemError, Field, Result};

const TERM_PREFIX: [&str; 4] = ["ent", "loc", "kw", "day"];

/// Concentration of the weights over an event's support terms.
const SUPPORT_CONCENTRATION: f64 = 5.0;

/// Ground truth for a synthetic corpus: every true event owns one
/// distribution per field over that field's vocabulary.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub docs_per_event: usize,
    pub vocab_sizes: [usize; 4],
    /// `ground_truth[e][f]` is event `e`'s distribution over field `f`.
    pub ground_truth: Vec<[Vec<f64>; 4]>,
    /// Fraction of tokens replaced by uniformly random vocabulary terms.
    pub noise_rate: f64,
    pub tokens_per_field: usize,
}

impl SyntheticSpec {
    /// Random ground truth: each event puts Dirichlet weights on
    /// `support_size` distinct terms per field and zero elsewhere.
    pub fn random(
        true_events: usize,
        docs_per_event: usize,
        vocab_size: usize,
        support_size: usize,
        noise_rate: f64,
        tokens_per_field: usize,
        seed: u64,
    ) -> Result<Self> {
        if support_size == 0 || support_size > vocab_size {
            return Err(AemError::config(format!(
                "support size {support_size} must lie in 1..={vocab_size}"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let weights = DirichletPrior::symmetric(support_size, SUPPORT_CONCENTRATION)?;
        let ground_truth = (0..true_events)
            .map(|_| {
                [0, 1, 2, 3].map(|_| {
                    let mut dist = vec![0.0; vocab_size];
                    let support = index::sample(&mut rng, vocab_size, support_size);
                    for (term, w) in support.iter().zip(weights.sample(&mut rng)) {
                        dist[term] = w;
                    }
                    dist
                })
            })
            .collect();
        let spec = SyntheticSpec {
            docs_per_event,
            vocab_sizes: [vocab_size; 4],
            ground_truth,
            noise_rate,
            tokens_per_field,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn true_events(&self) -> usize {
        self.ground_truth.len()
    }

    pub fn term(field: Field, index: usize) -> String {
        format!("{}{:03}", TERM_PREFIX[field.index()], index)
    }

    pub fn validate(&self) -> Result<()> {
        if self.ground_truth.is_empty() {
            return Err(AemError::config("synthetic spec needs at least one event"));
        }
        if !(0.0..1.0).contains(&self.noise_rate) {
            return Err(AemError::config(format!("noise rate must lie in [0, 1), got {}", self.noise_rate)));
        }
        for (e, fields) in self.ground_truth.iter().enumerate() {
            for (f, dist) in fields.iter().enumerate() {
                let ok = dist.len() == self.vocab_sizes[f]
                    && dist.iter().all(|p| *p >= 0.0 && p.is_finite())
                    && (dist.iter().sum::<f64>() - 1.0).abs() < 1e-9;
                if !ok {
                    return Err(AemError::config(format!(
                        "event {e} field {f}: not a probability vector over {} terms",
                        self.vocab_sizes[f]
                    )));
                }
            }
        }
        Ok(())
    }

    /// Terms with non-zero probability, per event and field.
    pub fn gold_events(&self) -> Vec<GoldEvent> {
        self.ground_truth
            .iter()
            .enumerate()
            .map(|(e, fields)| GoldEvent {
                name: format!("event{e:02}"),
                terms: Field::ALL.map(|f| {
                    fields[f.index()]
                        .iter()
                        .enumerate()
                        .filter(|(_, p)| **p > 0.0)
                        .map(|(i, _)| Self::term(f, i))
                        .collect()
                }),
            })
            .collect()
    }
}

/// Draws `docs_per_event` documents per true event, in shuffled order.
pub fn generate_synthetic_corpus<R: Rng + ?Sized>(
    spec: &SyntheticSpec,
    rng: &mut R,
) -> Result<(Vec<DocumentRecord>, Vec<GoldEvent>)> {
    spec.validate()?;
    let gold = spec.gold_events();
    let samplers: Vec<[WeightedIndex<f64>; 4]> = spec
        .ground_truth
        .iter()
        .map(|fields| {
            [0, 1, 2, 3].map(|f| WeightedIndex::new(&fields[f]).expect("validated distribution"))
        })
        .collect();

    let mut labels: Vec<usize> = (0..spec.true_events())
        .flat_map(|e| std::iter::repeat_n(e, spec.docs_per_event))
        .collect();
    labels.shuffle(rng);

    let corpus = labels
        .into_iter()
        .enumerate()
        .map(|(i, e)| {
            let mut doc = DocumentRecord {
                id: format!("doc{i:05}"),
                entities: vec![],
                locations: vec![],
                keywords: vec![],
                dates: vec![],
                gold_event: Some(gold[e].name.clone()),
            };
            for field in Field::ALL {
                let f = field.index();
                let tokens = (0..spec.tokens_per_field)
                    .map(|_| {
                        let term = if rng.random::<f64>() < spec.noise_rate {
                            rng.random_range(0..spec.vocab_sizes[f])
                        } else {
                            samplers[e][f].sample(rng)
                        };
                        SyntheticSpec::term(field, term)
                    })
                    .collect();
                *doc.tokens_mut(field) = tokens;
            }
            doc
        })
        .collect();
    Ok((corpus, gold))
}
