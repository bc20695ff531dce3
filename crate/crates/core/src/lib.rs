//! Adversarial-neural event model.
//!
//! Documents are represented as four concatenated TF-IDF distributions
//! (entity, location, keyword, date). A generator maps Dirichlet-distributed
//! document-event mixtures to fake documents, a spectrally normalized
//! discriminator separates them from real ones, and the trained generator is
//! decoded into per-event word distributions by feeding it one-hot seeds.
//!
//! Module map:
//! - [`corpus`]: document records, field vocabularies and TF-IDF vectors.
//! - [`numerics`]: layers, normalization, activations, spectral norm, Adam,
//!   Dirichlet sampling, gradient checking and checkpoint containers.
//! - [`model`]: generator and discriminator networks.
//! - [`training`]: losses, gradient penalty and the adversarial loop.
//! - [`events`]: event decoding, document assignment, duplicate merging.
//! - [`evaluation`]: event matching, precision/recall/F, K-means baseline,
//!   synthetic corpora and timing.
//! - [`interface`]: file formats, PCA projection, scatter plots, CLI commands.

pub mod corpus;
pub mod error;
pub mod evaluation;
pub mod events;
pub mod interface;
pub mod model;
pub mod numerics;
pub mod training;

pub use error::{AemError, Result};

/// The four role slots of an event quadruple, in concatenation order.
///
/// For news corpora the slots are conventionally filled with
/// organization, location, person and keyword tokens; the names are roles,
/// not hard-coded semantics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Field {
    Entity,
    Location,
    Keyword,
    Date,
}

impl Field {
    pub const ALL: [Field; 4] = [Field::Entity, Field::Location, Field::Keyword, Field::Date];

    pub fn index(self) -> usize {
        self as usize
    }

    /// Key used in the line-delimited corpus format.
    pub fn key(self) -> &'static str {
        match self {
            Field::Entity => "entities",
            Field::Location => "locations",
            Field::Keyword => "keywords",
            Field::Date => "dates",
        }
    }

    pub fn from_key(key: &str) -> Option<Field> {
        Field::ALL.into_iter().find(|f| f.key() == key)
    }
}

impl std::fmt::Display for Field {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.key())
    }
}
