//! Generator and discriminator networks.

mod discriminator;
mod generator;

pub use discriminator::{Discriminator, DiscriminatorPass};
pub use generator::{Generator, GeneratorCache, HiddenBlock, Subnet};

use rand::Rng;

use crate::numerics::{TensorStore, Trainable};
use crate::training::TrainConfig;
use crate::{AemError, Result};

/// Builds both networks for the given field sizes.
///
/// The generator has `depth - 3` extra `H × H` hidden blocks; the
/// discriminator is `V → H_d → H_d → 1` with spectral normalization on every
/// linear layer when enabled.
pub fn init_model<R: Rng + ?Sized>(
    config: &TrainConfig,
    field_sizes: [usize; 4],
    rng: &mut R,
) -> Result<(Generator, Discriminator)> {
    config.validate()?;
    let v: usize = field_sizes.iter().sum();
    if v < 4 {
        return Err(AemError::config(format!(
            "document dimension V must be at least 4, got {v}"
        )));
    }
    let g = Generator::new(
        config.events,
        config.hidden,
        config.depth,
        field_sizes,
        config.leaky_slope,
        rng,
    );
    let d = Discriminator::new(v, config.disc_hidden, config.leaky_slope, config.spectral_norm, rng);
    Ok((g, d))
}

/// Snapshot of both networks in one container, with the shape metadata
/// needed to rebuild them.
pub fn export_checkpoint(g: &Generator, d: &Discriminator) -> TensorStore {
    let mut store = TensorStore::new();
    let sizes = g.field_sizes();
    store.metadata.insert("events".into(), g.events().to_string());
    store.metadata.insert("hidden".into(), g.hidden_width().to_string());
    store.metadata.insert("depth".into(), g.depth().to_string());
    store.metadata.insert(
        "field_sizes".into(),
        sizes.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(","),
    );
    store.metadata.insert("disc_hidden".into(), d.hidden_width().to_string());
    store.metadata.insert("spectral_norm".into(), d.is_spectral().to_string());
    store.metadata.insert("leaky_slope".into(), format!("{:e}", g.slope));
    g.export("generator", &mut store);
    d.export("discriminator", &mut store);
    store
}

/// Rebuilds both networks from [`export_checkpoint`] output.
pub fn import_checkpoint(store: &TensorStore) -> Result<(Generator, Discriminator)> {
    let parse = |key: &str| -> Result<usize> {
        store
            .meta(key)?
            .parse()
            .map_err(|_| AemError::Checkpoint(format!("metadata {key:?} is not an integer")))
    };
    let sizes: Vec<usize> = store
        .meta("field_sizes")?
        .split(',')
        .map(|s| s.parse())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| AemError::Checkpoint("bad field_sizes".into()))?;
    let field_sizes: [usize; 4] = sizes
        .try_into()
        .map_err(|_| AemError::Checkpoint("field_sizes needs four entries".into()))?;
    let slope: f64 = store
        .meta("leaky_slope")?
        .parse()
        .map_err(|_| AemError::Checkpoint("bad leaky_slope".into()))?;
    let spectral = store.meta("spectral_norm")? == "true";
    // shapes come from metadata; values are overwritten by the import
    let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(0);
    let mut g = Generator::new(parse("events")?, parse("hidden")?, parse("depth")?, field_sizes, slope, &mut rng);
    let mut d = Discriminator::new(
        field_sizes.iter().sum(),
        parse("disc_hidden")?,
        slope,
        spectral,
        &mut rng,
    );
    g.import("generator", store)?;
    d.import("discriminator", store)?;
    g.zero_grad();
    d.zero_grad();
    Ok((g, d))
}
