//! Weighted generator ensembles and (1+1) evolution of their weights.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::grid::CellId;
use crate::matrix::Matrix;
use crate::nn::{sample_latent, ModelParams};
use crate::scalar::Scalar;
use crate::scoring::{frechet_distance, summarize, GaussianSummary};
use crate::seed;

/// Anything that maps a latent batch to samples.
pub trait SampleSource<T> {
    fn latent_dim(&self) -> usize;
    fn output_dim(&self) -> usize;
    fn generate(&self, latent: &Matrix<T>) -> Result<Matrix<T>>;
}

impl<T: Scalar> SampleSource<T> for ModelParams<T> {
    fn latent_dim(&self) -> usize {
        self.input_size()
    }

    fn output_dim(&self) -> usize {
        self.output_size()
    }

    fn generate(&self, latent: &Matrix<T>) -> Result<Matrix<T>> {
        self.forward(latent)
    }
}

/// A probability vector over a neighborhood's generators.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureWeights<T> {
    weights: Vec<T>,
}

impl<T: Scalar> MixtureWeights<T> {
    pub fn uniform(n: usize) -> Self {
        assert!(n > 0, "mixture over no generators");
        Self {
            weights: vec![T::one() / T::of_usize(n); n],
        }
    }

    /// Normalizes non-negative weights to unit sum.
    pub fn new(weights: Vec<T>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::Config("mixture over no generators".into()));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < T::zero()) {
            return Err(Error::Config("mixture weights must be finite and non-negative".into()));
        }
        let total: T = weights.iter().copied().sum();
        if total <= T::zero() {
            return Err(Error::Config("mixture weights sum to zero".into()));
        }
        Ok(Self {
            weights: weights.into_iter().map(|w| w / total).collect(),
        })
    }

    pub fn as_slice(&self) -> &[T] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Index whose cumulative weight first exceeds `u` in `[0, 1)`.
    fn pick(&self, u: f64) -> usize {
        let mut acc = 0.0;
        let mut last = 0;
        for (i, w) in self.weights.iter().enumerate() {
            let w = w.as_f64();
            if w > 0.0 {
                acc += w;
                last = i;
                if u < acc {
                    return i;
                }
            }
        }
        last
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleScore<T> {
    pub value: T,
    pub eval_sample_count: usize,
    pub eval_seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixtureEAConfig {
    pub generations: usize,
    pub mutation_scale: f64,
    pub eval_sample_count: usize,
}

impl Default for MixtureEAConfig {
    fn default() -> Self {
        Self {
            generations: 5000,
            mutation_scale: 0.01,
            eval_sample_count: 1000,
        }
    }
}

impl MixtureEAConfig {
    pub fn validate(&self, dimension: usize) -> Result<()> {
        if !(self.mutation_scale > 0.0 && self.mutation_scale.is_finite()) {
            return Err(Error::Config("mixture mutation scale must be positive".into()));
        }
        if self.eval_sample_count < dimension + 1 {
            return Err(Error::Config(format!(
                "{} evaluation samples cannot estimate a {dimension}-dimensional covariance",
                self.eval_sample_count
            )));
        }
        Ok(())
    }
}

fn check_sources<T: Scalar, S: SampleSource<T>>(gens: &[S], w: &MixtureWeights<T>) -> Result<usize> {
    if gens.is_empty() || gens.len() != w.len() {
        return Err(Error::Dimension(format!(
            "{} generators but {} weights",
            gens.len(),
            w.len()
        )));
    }
    let latent = gens[0].latent_dim();
    let out = gens[0].output_dim();
    if gens.iter().any(|g| g.latent_dim() != latent || g.output_dim() != out) {
        return Err(Error::Dimension("ensemble members disagree on widths".into()));
    }
    Ok(latent)
}

fn assemble<T: Scalar>(outputs: &[Matrix<T>], choice: &[usize]) -> Matrix<T> {
    let cols = outputs[0].cols();
    let mut m = Matrix::zeros(choice.len(), cols);
    for (r, &i) in choice.iter().enumerate() {
        m.row_mut(r).copy_from_slice(outputs[i].row(r));
    }
    m
}

/// Draws `n` samples: all latents first, then one generator choice per sample.
pub fn sample_ensemble<T: Scalar, S: SampleSource<T>, R: Rng + ?Sized>(
    gens: &[S],
    w: &MixtureWeights<T>,
    n: usize,
    rng: &mut R,
) -> Result<Matrix<T>> {
    let latent_dim = check_sources(gens, w)?;
    let z: Matrix<T> = sample_latent(rng, n, latent_dim);
    let choice: Vec<usize> = (0..n).map(|_| w.pick(rng.random::<f64>())).collect();
    let mut out = Matrix::zeros(n, gens[0].output_dim());
    for (i, g) in gens.iter().enumerate() {
        let rows: Vec<usize> = (0..n).filter(|&r| choice[r] == i).collect();
        if rows.is_empty() {
            continue;
        }
        let samples = g.generate(&z.select_rows(&rows))?;
        for (k, &r) in rows.iter().enumerate() {
            out.row_mut(r).copy_from_slice(samples.row(k));
        }
    }
    Ok(out)
}

/// Scores a weighted ensemble against a reference summary with a fixed
/// sampling seed.
pub fn evaluate_mixture<T: Scalar, S: SampleSource<T>>(
    gens: &[S],
    w: &MixtureWeights<T>,
    reference: &GaussianSummary<T>,
    cfg: &MixtureEAConfig,
    eval_seed: u64,
) -> Result<EnsembleScore<T>> {
    let samples = sample_ensemble(gens, w, cfg.eval_sample_count, &mut seed::rng(eval_seed))?;
    let score = frechet_distance(reference, &summarize(&samples)?)?;
    Ok(EnsembleScore {
        value: score.value,
        eval_sample_count: cfg.eval_sample_count,
        eval_seed,
    })
}

/// Caches every generator's output on one seeded latent batch, so repeated
/// evaluations with different weights only re-draw the assignment.
///
/// `score` returns exactly what [`evaluate_mixture`] returns for the same seed,
/// provided each generator maps latent rows independently (true of any MLP).
pub struct MixtureEvaluator<'a, T> {
    outputs: Vec<Matrix<T>>,
    uniforms: Vec<f64>,
    reference: &'a GaussianSummary<T>,
    eval_seed: u64,
}

impl<'a, T: Scalar> MixtureEvaluator<'a, T> {
    pub fn new<S: SampleSource<T>>(
        gens: &[S],
        reference: &'a GaussianSummary<T>,
        cfg: &MixtureEAConfig,
        eval_seed: u64,
    ) -> Result<Self> {
        let latent_dim = check_sources(gens, &MixtureWeights::uniform(gens.len().max(1)))?;
        if gens[0].output_dim() != reference.dimension() {
            return Err(Error::Dimension("reference and generators differ in width".into()));
        }
        let mut rng = seed::rng(eval_seed);
        let z: Matrix<T> = sample_latent(&mut rng, cfg.eval_sample_count, latent_dim);
        let uniforms = (0..cfg.eval_sample_count).map(|_| rng.random::<f64>()).collect();
        let outputs = gens.iter().map(|g| g.generate(&z)).collect::<Result<Vec<_>>>()?;
        Ok(Self {
            outputs,
            uniforms,
            reference,
            eval_seed,
        })
    }

    pub fn samples(&self, w: &MixtureWeights<T>) -> Matrix<T> {
        let choice: Vec<usize> = self.uniforms.iter().map(|&u| w.pick(u)).collect();
        assemble(&self.outputs, &choice)
    }

    pub fn score(&self, w: &MixtureWeights<T>) -> Result<EnsembleScore<T>> {
        if w.len() != self.outputs.len() {
            return Err(Error::Dimension(format!(
                "{} generators but {} weights",
                self.outputs.len(),
                w.len()
            )));
        }
        let s = frechet_distance(self.reference, &summarize(&self.samples(w))?)?;
        Ok(EnsembleScore {
            value: s.value,
            eval_sample_count: self.uniforms.len(),
            eval_seed: self.eval_seed,
        })
    }
}

/// Adds `N(0, mu^2)` noise to each weight, clamps at zero and renormalizes.
/// Returns `w` unchanged if every weight clamps to zero.
pub fn mutate_weights<T: Scalar, R: Rng + ?Sized>(w: &MixtureWeights<T>, mu: f64, rng: &mut R) -> MixtureWeights<T> {
    let noisy: Vec<T> = w
        .weights
        .iter()
        .map(|&x| {
            let e: f64 = rng.sample(StandardNormal);
            (x + T::of(mu * e)).max(T::zero())
        })
        .collect();
    MixtureWeights::new(noisy).unwrap_or_else(|_| w.clone())
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvolvedMixture<T> {
    pub weights: MixtureWeights<T>,
    pub score: EnsembleScore<T>,
    pub initial_score: EnsembleScore<T>,
    /// Best score after each iteration.
    pub history: Vec<T>,
    pub accepted: usize,
}

/// (1+1) evolution strategy over the weights: mutate, score with a seed fixed
/// for the whole run, keep the mutant only when strictly better.
pub fn evolve_mixture<T: Scalar, S: SampleSource<T>, R: Rng + ?Sized>(
    gens: &[S],
    w0: &MixtureWeights<T>,
    reference: &GaussianSummary<T>,
    cfg: &MixtureEAConfig,
    rng: &mut R,
) -> Result<EvolvedMixture<T>> {
    cfg.validate(reference.dimension())?;
    check_sources(gens, w0)?;
    let eval_seed: u64 = rng.random();
    let evaluator = MixtureEvaluator::new(gens, reference, cfg, eval_seed)?;
    let initial = evaluator.score(w0)?;
    let mut best_w = w0.clone();
    let mut best = initial;
    let mut history = Vec::with_capacity(cfg.generations);
    let mut accepted = 0;
    for _ in 0..cfg.generations {
        let candidate = mutate_weights(&best_w, cfg.mutation_scale, rng);
        let s = evaluator.score(&candidate)?;
        if s.value < best.value {
            best = s;
            best_w = candidate;
            accepted += 1;
        }
        history.push(best.value);
    }
    Ok(EvolvedMixture {
        weights: best_w,
        score: best,
        initial_score: initial,
        history,
        accepted,
    })
}

/// Entry with the lowest score; ties go to the earliest (row-major) cell.
pub fn select_best_neighborhood<T: Scalar>(
    entries: &[(CellId, MixtureWeights<T>, EnsembleScore<T>)],
) -> Option<&(CellId, MixtureWeights<T>, EnsembleScore<T>)> {
    entries.iter().fold(None, |best, e| match best {
        Some(b) if e.2.value >= b.2.value => Some(b),
        _ => Some(e),
    })
}
