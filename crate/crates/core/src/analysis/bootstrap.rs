//! Ensembles assembled from independently trained single GANs.

use rand::seq::index::sample;
use rand::Rng;

use crate::error::{Error, Result};
use crate::mixture::{evolve_mixture, MixtureEAConfig, MixtureWeights, SampleSource};
use crate::scalar::Scalar;
use crate::scoring::GaussianSummary;

/// Generators per virtual neighborhood, matching a grid neighborhood.
pub const BOOTSTRAP_ENSEMBLE_SIZE: usize = 5;

#[derive(Debug, Clone, PartialEq)]
pub struct BootstrapScore<T> {
    /// Pool indices, in draw order.
    pub members: Vec<usize>,
    pub uniform_score: T,
    pub evolved_score: T,
    pub weights: MixtureWeights<T>,
}

/// Per repeat: draws five pool members without replacement, evolves their
/// mixture weights from uniform and records both scores.
pub fn bootstrap_ensembles<T, S, R>(
    pool: &[S],
    n_repeats: usize,
    reference: &GaussianSummary<T>,
    cfg: &MixtureEAConfig,
    rng: &mut R,
) -> Result<Vec<BootstrapScore<T>>>
where
    T: Scalar,
    S: SampleSource<T> + Clone,
    R: Rng + ?Sized,
{
    if pool.len() < BOOTSTRAP_ENSEMBLE_SIZE {
        return Err(Error::Config(format!(
            "bootstrap needs at least {BOOTSTRAP_ENSEMBLE_SIZE} generators, got {}",
            pool.len()
        )));
    }
    let mut out = Vec::with_capacity(n_repeats);
    for _ in 0..n_repeats {
        let members = sample(rng, pool.len(), BOOTSTRAP_ENSEMBLE_SIZE).into_vec();
        let gens: Vec<S> = members.iter().map(|&i| pool[i].clone()).collect();
        let w0 = MixtureWeights::uniform(gens.len());
        let evolved = evolve_mixture(&gens, &w0, reference, cfg, rng)?;
        out.push(BootstrapScore {
            members,
            uniform_score: evolved.initial_score.value,
            evolved_score: evolved.score.value,
            weights: evolved.weights,
        });
    }
    Ok(out)
}
