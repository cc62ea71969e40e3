use rand::seq::index;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::scalar::Scalar;

pub const LR_MIN: f64 = 1e-8;
pub const LR_MAX: f64 = 1.0;

/// Draws `tau` distinct indices and returns the one with the lowest fitness.
/// Ties go to the lowest index; `tau` is clamped to the population size.
pub fn tournament_select<T: Scalar, R: Rng + ?Sized>(fitness: &[T], tau: usize, rng: &mut R) -> usize {
    assert!(!fitness.is_empty(), "tournament over an empty population");
    let k = tau.clamp(1, fitness.len());
    let mut picked = index::sample(rng, fitness.len(), k).into_vec();
    picked.sort_unstable();
    picked
        .into_iter()
        .reduce(|best, i| if fitness[i] < fitness[best] { i } else { best })
        .expect("k >= 1")
}

/// With probability `beta`, scales `lr` by `exp(N(0, 1) * mutation_rate)`.
/// The result is clamped to `[LR_MIN, LR_MAX]`.
pub fn mutate_learning_rate<R: Rng + ?Sized>(lr: f64, beta: f64, mutation_rate: f64, rng: &mut R) -> f64 {
    let next = if rng.random::<f64>() < beta {
        let e: f64 = rng.sample(StandardNormal);
        lr * (e * mutation_rate).exp()
    } else {
        lr
    };
    next.clamp(LR_MIN, LR_MAX)
}
