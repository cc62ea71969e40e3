//! Coevolutionary training of the grid.
//!
//! Each generation a cell gathers its neighborhood, ranks every
//! generator/discriminator pair, picks its center by tournament, trains every
//! gathered model with gradient steps against randomly drawn adversaries,
//! ranks the pairs again and publishes the best generator and discriminator.

mod cell;
mod engine;
mod fitness;
mod selection;

pub use cell::{train_cell_generation, CellState, GenerationRecord};
pub use engine::{run, CellReport, ExecutionMode, TrainedGrid, TrainingSetup};
pub use fitness::{evaluate_all_pairs, fitness_from_record, FitnessMode, FitnessRecord, Subpopulation};
pub use selection::{mutate_learning_rate, tournament_select, LR_MAX, LR_MIN};

use crate::error::{Error, Result};
use crate::nn::{mlp_layers, Activation, LayerSpec, OptimizerKind};

#[derive(Debug, Clone, PartialEq)]
pub struct CoevConfig {
    pub tournament_size: usize,
    /// Probability of mutating the learning rate before each mini-batch.
    pub mutation_probability: f64,
    /// Standard deviation of the log-normal learning-rate step.
    pub mutation_rate: f64,
    pub initial_learning_rate: f64,
    pub population_size_per_cell: usize,
    pub batch_size: usize,
    pub fitness_mode: FitnessMode,
    pub optimizer: OptimizerKind,
}

impl Default for CoevConfig {
    fn default() -> Self {
        Self {
            tournament_size: 2,
            mutation_probability: 0.5,
            mutation_rate: 0.0001,
            initial_learning_rate: 0.0002,
            population_size_per_cell: 1,
            batch_size: 100,
            fitness_mode: FitnessMode::Average,
            optimizer: OptimizerKind::Adam,
        }
    }
}

impl CoevConfig {
    pub fn validate(&self) -> Result<()> {
        if self.tournament_size == 0 {
            return Err(Error::Config("tournament size must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.mutation_probability) {
            return Err(Error::Config("mutation probability outside [0, 1]".into()));
        }
        if !(self.mutation_rate >= 0.0 && self.mutation_rate.is_finite()) {
            return Err(Error::Config("mutation rate must be non-negative".into()));
        }
        if !(self.initial_learning_rate > 0.0 && self.initial_learning_rate.is_finite()) {
            return Err(Error::Config("learning rate must be positive".into()));
        }
        if self.population_size_per_cell != 1 {
            return Err(Error::Config("only one individual per cell is supported".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be positive".into()));
        }
        Ok(())
    }
}

/// Shapes of the generator and discriminator MLPs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetworkSpec {
    pub latent_dim: usize,
    pub hidden: Vec<usize>,
    pub activation: Activation,
}

impl Default for NetworkSpec {
    fn default() -> Self {
        Self {
            latent_dim: 64,
            hidden: vec![256, 256],
            activation: Activation::Tanh,
        }
    }
}

impl NetworkSpec {
    fn widths(&self, first: usize, last: usize) -> Vec<usize> {
        let mut w = vec![first];
        w.extend_from_slice(&self.hidden);
        w.push(last);
        w
    }

    /// Latent noise to samples, with a linear output layer.
    pub fn generator_layers(&self, data_dim: usize) -> Vec<LayerSpec> {
        mlp_layers(&self.widths(self.latent_dim, data_dim), self.activation, Activation::Identity)
    }

    /// Samples to a single sigmoid probability.
    pub fn discriminator_layers(&self, data_dim: usize) -> Vec<LayerSpec> {
        mlp_layers(&self.widths(data_dim, 1), self.activation, Activation::Sigmoid)
    }

    pub fn validate(&self) -> Result<()> {
        if self.latent_dim == 0 || self.hidden.contains(&0) {
            return Err(Error::Config("network widths must be positive".into()));
        }
        Ok(())
    }
}
