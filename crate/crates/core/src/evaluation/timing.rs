use std::time::Instant;

use super::kmeans::{kmeans, KMEANS_RESTARTS};
use crate::corpus::DocMatrix;
use crate::training::{train, TrainConfig};
use crate::Result;

#[derive(Debug, Clone, PartialEq)]
pub enum Method {
    KMeans { k: usize, seed: u64 },
    Aem(TrainConfig),
}

impl Method {
    pub fn label(&self) -> String {
        match self {
            Method::KMeans { k, .. } => format!("K-means (k={k})"),
            Method::Aem(c) => format!("AEM (E={}, steps={})", c.events, c.max_g_steps),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Timing {
    pub method: String,
    pub seconds: f64,
}

/// Wall-clock of each method on an already represented corpus, so corpus
/// loading is excluded.
pub fn timing_harness(methods: &[Method], docs: &DocMatrix) -> Result<Vec<Timing>> {
    methods
        .iter()
        .map(|m| {
            let start = Instant::now();
            match m {
                Method::KMeans { k, seed } => {
                    kmeans(&docs.vectors.view(), *k, *seed, KMEANS_RESTARTS)?;
                }
                Method::Aem(config) => {
                    train(&docs.vectors.view(), config, docs.field_sizes)?;
                }
            }
            Ok(Timing { method: m.label(), seconds: start.elapsed().as_secs_f64() })
        })
        .collect()
}
