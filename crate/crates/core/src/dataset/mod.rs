//! Synthetic targets, per-cell subsampling and batch-budget arithmetic.

mod io;

pub use io::{read_dataset, write_dataset, MAGIC};

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::grid::CellId;
use crate::matrix::Matrix;
use crate::scalar::Scalar;
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TargetKind {
    /// Modes evenly spaced on a circle of the given radius.
    GaussianRing,
    /// Modes on a square lattice with the given pitch, centered on the origin.
    GaussianGrid,
}

impl std::str::FromStr for TargetKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ring" | "gaussianring" | "gaussian_ring" => Ok(TargetKind::GaussianRing),
            "grid" | "gaussiangrid" | "gaussian_grid" => Ok(TargetKind::GaussianGrid),
            other => Err(Error::Config(format!("unknown target kind `{other}`"))),
        }
    }
}

impl std::fmt::Display for TargetKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            TargetKind::GaussianRing => "ring",
            TargetKind::GaussianGrid => "grid",
        })
    }
}

/// A mixture of isotropic Gaussians with equal mode probabilities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TargetSpec {
    pub kind: TargetKind,
    pub modes: usize,
    pub dimension: usize,
    pub mode_std: f64,
    /// Ring radius or lattice pitch.
    pub radius_or_pitch: f64,
    pub total_samples: usize,
}

impl TargetSpec {
    pub fn ring(modes: usize, radius: f64, mode_std: f64, total_samples: usize) -> Self {
        Self {
            kind: TargetKind::GaussianRing,
            modes,
            dimension: 2,
            mode_std,
            radius_or_pitch: radius,
            total_samples,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.modes == 0 {
            return Err(Error::Config("target needs at least one mode".into()));
        }
        if !(1..=8).contains(&self.dimension) {
            return Err(Error::Config(format!("target dimension {} outside 1..=8", self.dimension)));
        }
        if !(self.mode_std > 0.0 && self.mode_std.is_finite()) {
            return Err(Error::Config("mode_std must be positive".into()));
        }
        if !(self.radius_or_pitch >= 0.0 && self.radius_or_pitch.is_finite()) {
            return Err(Error::Config("radius/pitch must be non-negative".into()));
        }
        if self.total_samples == 0 {
            return Err(Error::Config("target needs at least one sample".into()));
        }
        Ok(())
    }

    /// Mode centers. Only the first two coordinates are non-zero.
    pub fn mode_centers(&self) -> Vec<Vec<f64>> {
        let d = self.dimension;
        match self.kind {
            TargetKind::GaussianRing => (0..self.modes)
                .map(|k| {
                    let a = 2.0 * std::f64::consts::PI * k as f64 / self.modes as f64;
                    let mut c = vec![0.0; d];
                    c[0] = self.radius_or_pitch * a.cos();
                    if d > 1 {
                        c[1] = self.radius_or_pitch * a.sin();
                    }
                    c
                })
                .collect(),
            TargetKind::GaussianGrid => {
                let side = if d == 1 {
                    self.modes
                } else {
                    (self.modes as f64).sqrt().ceil() as usize
                };
                let rows = self.modes.div_ceil(side);
                let off_c = (side as f64 - 1.0) / 2.0;
                let off_r = (rows as f64 - 1.0) / 2.0;
                (0..self.modes)
                    .map(|k| {
                        let mut c = vec![0.0; d];
                        c[0] = (k % side) as f64 - off_c;
                        if d > 1 {
                            c[1] = (k / side) as f64 - off_r;
                        }
                        c.iter_mut().for_each(|v| *v *= self.radius_or_pitch);
                        c
                    })
                    .collect()
            }
        }
    }
}

/// Draws `total_samples` points: a uniformly chosen mode plus isotropic noise.
pub fn generate_target<T: Scalar>(spec: &TargetSpec, seed: u64) -> Result<Matrix<T>> {
    spec.validate()?;
    let mut rng = seed::rng(seed);
    Ok(sample_target(spec, spec.total_samples, &mut rng))
}

/// Draws `n` points from the target with a caller-provided stream.
pub fn sample_target<T: Scalar, R: Rng + ?Sized>(spec: &TargetSpec, n: usize, rng: &mut R) -> Matrix<T> {
    let centers = spec.mode_centers();
    let mut m = Matrix::zeros(n, spec.dimension);
    for i in 0..n {
        let c = &centers[rng.random_range(0..centers.len())];
        for (j, &cj) in c.iter().enumerate() {
            let e: f64 = rng.sample(StandardNormal);
            m.set(i, j, T::of(cj + spec.mode_std * e));
        }
    }
    m
}

/// A cell's private training subset: indices into the master dataset,
/// drawn with replacement.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetPartition {
    pub indices: Vec<usize>,
    pub portion: f64,
    pub owner: CellId,
    pub rng_seed: u64,
}

impl DatasetPartition {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn distinct(&self) -> usize {
        let mut v = self.indices.clone();
        v.sort_unstable();
        v.dedup();
        v.len()
    }
}

fn check_portion(portion: f64) -> Result<()> {
    if !(portion > 0.0 && portion <= 1.0) {
        return Err(Error::Config(format!("data portion {portion} outside (0, 1]")));
    }
    Ok(())
}

/// Number of samples a cell trains on.
pub fn partition_size(master_size: usize, portion: f64) -> Result<usize> {
    check_portion(portion)?;
    Ok((portion * master_size as f64).round() as usize)
}

/// `round(portion * master_size)` indices drawn i.i.d. uniformly with replacement.
pub fn sample_partition(master_size: usize, portion: f64, owner: CellId, seed: u64) -> Result<DatasetPartition> {
    let n = partition_size(master_size, portion)?;
    if master_size == 0 {
        return Err(Error::Config("cannot partition an empty dataset".into()));
    }
    let mut rng = seed::rng(seed);
    let indices = (0..n).map(|_| rng.random_range(0..master_size)).collect();
    Ok(DatasetPartition {
        indices,
        portion,
        owner,
        rng_seed: seed,
    })
}

/// Shuffled mini-batches of a partition. The remainder smaller than
/// `batch_size` is dropped.
pub fn minibatches(partition: &DatasetPartition, batch_size: usize, epoch_seed: u64) -> Vec<Vec<usize>> {
    assert!(batch_size >= 1, "batch size must be positive");
    let mut order = partition.indices.clone();
    order.shuffle(&mut seed::rng(epoch_seed));
    order
        .chunks_exact(batch_size)
        .map(<[usize]>::to_vec)
        .collect()
}

/// Generations needed to spend a fixed mini-batch budget at a given data portion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BudgetPlan {
    pub dataset_size: usize,
    pub batch_size: usize,
    pub portion: f64,
    pub batches_per_generation: usize,
    pub generations: usize,
    /// Batches actually trained: `batches_per_generation * generations`.
    pub total_batches: usize,
}

pub fn plan_budget(dataset_size: usize, batch_size: usize, portion: f64, total_batch_budget: usize) -> Result<BudgetPlan> {
    if dataset_size == 0 || batch_size == 0 || total_batch_budget == 0 {
        return Err(Error::Config("budget inputs must be positive".into()));
    }
    let per_cell = partition_size(dataset_size, portion)?;
    let batches_per_generation = per_cell / batch_size;
    if batches_per_generation == 0 {
        return Err(Error::Config(format!(
            "batch size {batch_size} exceeds the {per_cell} samples of a {portion} portion"
        )));
    }
    let generations = total_batch_budget.div_ceil(batches_per_generation);
    Ok(BudgetPlan {
        dataset_size,
        batch_size,
        portion,
        batches_per_generation,
        generations,
        total_batches: batches_per_generation * generations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn budget_rows_for_sixty_thousand_samples() {
        for (p, b, g) in [(1.0, 600, 200), (0.75, 450, 267), (0.5, 300, 400), (0.25, 150, 800)] {
            let plan = plan_budget(60000, 100, p, 120_000).unwrap();
            assert_eq!((plan.batches_per_generation, plan.generations), (b, g), "portion {p}");
        }
    }

    #[test]
    fn budget_rejects_empty_generations() {
        assert!(plan_budget(100, 100, 0.5, 10).is_err());
        assert!(plan_budget(100, 10, 0.0, 10).is_err());
        assert!(plan_budget(100, 10, 1.5, 10).is_err());
    }

    #[test]
    fn quarter_partition_size_is_exact() {
        let p = sample_partition(60000, 0.25, CellId::new(0, 0), 1).unwrap();
        assert_eq!(p.len(), 15000);
        assert!(p.indices.iter().all(|&i| i < 60000));
    }

    #[test]
    fn partitions_depend_on_seed() {
        let a = sample_partition(1000, 0.5, CellId::new(0, 0), 1).unwrap();
        let b = sample_partition(1000, 0.5, CellId::new(0, 1), 2).unwrap();
        assert_ne!(a.indices, b.indices);
        let a2 = sample_partition(1000, 0.5, CellId::new(0, 0), 1).unwrap();
        assert_eq!(a, a2);
    }

    fn partition_of(n: usize) -> DatasetPartition {
        DatasetPartition {
            indices: (0..n).collect(),
            portion: 1.0,
            owner: CellId::new(0, 0),
            rng_seed: 0,
        }
    }

    #[test]
    fn minibatches_cover_a_permutation() {
        let batches = minibatches(&partition_of(300), 100, 4);
        assert_eq!(batches.len(), 3);
        let mut all: Vec<usize> = batches.concat();
        all.sort_unstable();
        assert_eq!(all, (0..300).collect::<Vec<_>>());
    }

    #[test]
    fn minibatches_drop_remainder() {
        let batches = minibatches(&partition_of(350), 100, 4);
        assert_eq!(batches.len(), 3);
        assert!(batches.iter().all(|b| b.len() == 100));
        assert_eq!(batches, minibatches(&partition_of(350), 100, 4));
        assert_ne!(batches, minibatches(&partition_of(350), 100, 5));
    }

    #[test]
    fn single_mode_ring_is_one_gaussian() {
        let spec = TargetSpec::ring(1, 0.0, 0.5, 4000);
        let m = generate_target::<f64>(&spec, 11).unwrap();
        let mean: f64 = m.as_slice().iter().sum::<f64>() / 8000.0;
        assert!(mean.abs() < 0.03);
        let var: f64 = m.as_slice().iter().map(|v| v * v).sum::<f64>() / 8000.0;
        assert!((var - 0.25).abs() < 0.02);
    }

    #[test]
    fn same_seed_same_dataset() {
        let spec = TargetSpec::ring(8, 2.0, 0.05, 500);
        let a = generate_target::<f64>(&spec, 3).unwrap();
        let b = generate_target::<f64>(&spec, 3).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, generate_target::<f64>(&spec, 4).unwrap());
    }

    #[test]
    fn lattice_centers_are_centered() {
        let spec = TargetSpec {
            kind: TargetKind::GaussianGrid,
            modes: 9,
            dimension: 2,
            mode_std: 0.1,
            radius_or_pitch: 2.0,
            total_samples: 10,
        };
        let c = spec.mode_centers();
        assert_eq!(c.len(), 9);
        assert_eq!(c[0], vec![-2.0, -2.0]);
        assert_eq!(c[4], vec![0.0, 0.0]);
        assert_eq!(c[8], vec![2.0, 2.0]);
    }

    #[test]
    fn invalid_specs_rejected() {
        let mut s = TargetSpec::ring(8, 2.0, 0.1, 10);
        s.dimension = 9;
        assert!(s.validate().is_err());
        s.dimension = 2;
        s.modes = 0;
        assert!(s.validate().is_err());
    }
}
