use ndarray::Array2;
use rand::Rng;
use rand_distr::{Distribution, Gamma};

use crate::{AemError, Result};

/// Dirichlet distribution over the `E`-simplex, sampled by normalizing
/// independent `Gamma(α_t, 1)` draws.
#[derive(Debug, Clone)]
pub struct DirichletPrior {
    alpha: Vec<f64>,
    gammas: Vec<Gamma<f64>>,
}

impl DirichletPrior {
    pub fn new(alpha: Vec<f64>) -> Result<Self> {
        if alpha.is_empty() {
            return Err(AemError::config("Dirichlet prior needs at least one component"));
        }
        let gammas = alpha
            .iter()
            .map(|&a| {
                if !(a > 0.0 && a.is_finite()) {
                    return Err(AemError::config(format!(
                        "Dirichlet concentration must be positive and finite, got {a}"
                    )));
                }
                Gamma::new(a, 1.0).map_err(|e| AemError::config(e.to_string()))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(DirichletPrior { alpha, gammas })
    }

    pub fn symmetric(components: usize, concentration: f64) -> Result<Self> {
        Self::new(vec![concentration; components])
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn dimension(&self) -> usize {
        self.alpha.len()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let mut draws: Vec<f64> = self.gammas.iter().map(|g| g.sample(rng)).collect();
        let total: f64 = draws.iter().sum();
        if total > 0.0 {
            draws.iter_mut().for_each(|d| *d /= total);
        } else {
            // every draw underflowed (tiny concentrations): mass goes to one corner
            let corner = rng.random_range(0..draws.len());
            draws.iter_mut().enumerate().for_each(|(i, d)| *d = (i == corner) as u8 as f64);
        }
        draws
    }

    /// `rows × E` matrix of independent samples.
    pub fn sample_batch<R: Rng + ?Sized>(&self, rows: usize, rng: &mut R) -> Array2<f64> {
        let mut out = Array2::zeros((rows, self.dimension()));
        for mut row in out.rows_mut() {
            for (dst, src) in row.iter_mut().zip(self.sample(rng)) {
                *dst = src;
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn single_component_is_certain() {
        let prior = DirichletPrior::new(vec![0.7]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..10 {
            assert_eq!(prior.sample(&mut rng), vec![1.0]);
        }
    }

    #[test]
    fn samples_lie_on_simplex() {
        let prior = DirichletPrior::symmetric(6, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..1000 {
            let s = prior.sample(&mut rng);
            assert!(s.iter().all(|x| *x >= 0.0));
            assert!((s.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn invalid_concentration() {
        assert!(DirichletPrior::new(vec![1.0, 0.0]).is_err());
        assert!(DirichletPrior::new(vec![-1.0]).is_err());
        assert!(DirichletPrior::new(vec![f64::NAN]).is_err());
        assert!(DirichletPrior::new(vec![]).is_err());
    }
}
