use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::nn::{mean_log, ModelParams, ModelSnapshot};
use crate::scalar::Scalar;

/// How a model's losses against all adversaries collapse into one fitness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FitnessMode {
    #[default]
    Average,
    Min,
}

impl std::str::FromStr for FitnessMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "average" | "mean" => Ok(FitnessMode::Average),
            "min" => Ok(FitnessMode::Min),
            other => Err(Error::Config(format!("unknown fitness mode `{other}`"))),
        }
    }
}

impl std::fmt::Display for FitnessMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            FitnessMode::Average => "average",
            FitnessMode::Min => "min",
        })
    }
}

/// Gathered models of one role with their latest fitness.
#[derive(Debug, Clone, PartialEq)]
pub struct Subpopulation<T> {
    pub snapshots: Vec<ModelSnapshot<T>>,
    pub fitness: Vec<Option<T>>,
}

impl<T: Scalar> Subpopulation<T> {
    pub fn new(snapshots: Vec<ModelSnapshot<T>>) -> Self {
        let n = snapshots.len();
        Self {
            snapshots,
            fitness: vec![None; n],
        }
    }

    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }
}

/// Pairwise losses of every generator against every discriminator.
///
/// Entry `(i, j)` lives at `i * n_discriminators + j`.
#[derive(Debug, Clone, PartialEq)]
pub struct FitnessRecord<T> {
    pub n_generators: usize,
    pub n_discriminators: usize,
    /// Generator-side loss `0.5 * mean log(1 - D_j(G_i(z)))`.
    pub generator_loss: Vec<T>,
    /// Discriminator BCE of `D_j` on the real batch and `G_i(z)`.
    pub discriminator_loss: Vec<T>,
}

impl<T: Scalar> FitnessRecord<T> {
    pub fn generator_entry(&self, i: usize, j: usize) -> T {
        self.generator_loss[i * self.n_discriminators + j]
    }

    pub fn discriminator_entry(&self, i: usize, j: usize) -> T {
        self.discriminator_loss[i * self.n_discriminators + j]
    }
}

/// Evaluates every pair on one real batch and one latent batch.
pub fn evaluate_all_pairs<T: Scalar>(
    gens: &[ModelParams<T>],
    discs: &[ModelParams<T>],
    real: &Matrix<T>,
    latent: &Matrix<T>,
) -> Result<FitnessRecord<T>> {
    if gens.is_empty() || discs.is_empty() {
        return Err(Error::Dimension("cannot evaluate an empty subpopulation".into()));
    }
    if real.rows() == 0 || latent.rows() == 0 {
        return Err(Error::Dimension("evaluation batch is empty".into()));
    }
    let fakes = gens.iter().map(|g| g.forward(latent)).collect::<Result<Vec<_>>>()?;
    let real_terms = discs
        .iter()
        .map(|d| Ok(mean_log(&d.forward(real)?, false)))
        .collect::<Result<Vec<T>>>()?;
    let nd = discs.len();
    let mut generator_loss = Vec::with_capacity(gens.len() * nd);
    let mut discriminator_loss = Vec::with_capacity(gens.len() * nd);
    let half = T::of(0.5);
    for fake in &fakes {
        for (d, &real_term) in discs.iter().zip(&real_terms) {
            let fake_term = mean_log(&d.forward(fake)?, true);
            generator_loss.push(half * fake_term);
            discriminator_loss.push(-(real_term + fake_term));
        }
    }
    if generator_loss.iter().chain(&discriminator_loss).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("pair evaluation"));
    }
    Ok(FitnessRecord {
        n_generators: gens.len(),
        n_discriminators: nd,
        generator_loss,
        discriminator_loss,
    })
}

fn aggregate<T: Scalar>(values: impl Iterator<Item = T>, mode: FitnessMode) -> T {
    let mut n = 0usize;
    let mut sum = T::zero();
    let mut min = T::infinity();
    for v in values {
        n += 1;
        sum += v;
        min = min.min(v);
    }
    match mode {
        FitnessMode::Average => sum / T::of_usize(n),
        FitnessMode::Min => min,
    }
}

/// Per-generator and per-discriminator fitness, lower is better for both.
pub fn fitness_from_record<T: Scalar>(rec: &FitnessRecord<T>, mode: FitnessMode) -> (Vec<T>, Vec<T>) {
    let (ng, nd) = (rec.n_generators, rec.n_discriminators);
    let gen = (0..ng)
        .map(|i| aggregate((0..nd).map(|j| rec.generator_entry(i, j)), mode))
        .collect();
    let disc = (0..nd)
        .map(|j| aggregate((0..ng).map(|i| rec.discriminator_entry(i, j)), mode))
        .collect();
    (gen, disc)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(m: [[f64; 2]; 2]) -> FitnessRecord<f64> {
        let flat: Vec<f64> = m.iter().flatten().copied().collect();
        FitnessRecord {
            n_generators: 2,
            n_discriminators: 2,
            generator_loss: flat.clone(),
            discriminator_loss: flat,
        }
    }

    #[test]
    fn average_and_min_aggregation() {
        let rec = record([[1.0, 3.0], [2.0, 4.0]]);
        let (g, d) = fitness_from_record(&rec, FitnessMode::Average);
        assert_eq!(g, vec![2.0, 3.0]);
        assert_eq!(d, vec![1.5, 3.5]);
        let (g, d) = fitness_from_record(&rec, FitnessMode::Min);
        assert_eq!(g, vec![1.0, 2.0]);
        assert_eq!(d, vec![1.0, 3.0]);
    }

    #[test]
    fn single_column_modes_coincide() {
        let rec = FitnessRecord {
            n_generators: 3,
            n_discriminators: 1,
            generator_loss: vec![0.3, -0.1, 0.7],
            discriminator_loss: vec![1.0, 2.0, 3.0],
        };
        assert_eq!(
            fitness_from_record(&rec, FitnessMode::Average).0,
            fitness_from_record(&rec, FitnessMode::Min).0
        );
    }

    #[test]
    fn fitness_mode_parsing() {
        assert_eq!("AVERAGE".parse::<FitnessMode>().unwrap(), FitnessMode::Average);
        assert_eq!("min".parse::<FitnessMode>().unwrap(), FitnessMode::Min);
        assert!("median".parse::<FitnessMode>().is_err());
    }
}
