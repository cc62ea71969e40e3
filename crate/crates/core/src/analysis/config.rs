//! Flat `section.key = value` run configuration.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use sha2::{Digest, Sha256};

use crate::coev::{CoevConfig, ExecutionMode, FitnessMode, NetworkSpec};
use crate::dataset::{TargetKind, TargetSpec};
use crate::error::{Error, Result};
use crate::grid::GridConfig;
use crate::mixture::MixtureEAConfig;
use crate::nn::{Activation, OptimizerKind};

/// Samples the mixture weights are scored against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReferenceSource {
    /// A slice of the master data withheld from training, shared by all cells.
    Holdout,
    /// Each cell's own training partition.
    Partition,
}

impl FromStr for ReferenceSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "holdout" => Ok(ReferenceSource::Holdout),
            "partition" => Ok(ReferenceSource::Partition),
            other => Err(Error::Config(format!("unknown mixture reference `{other}`"))),
        }
    }
}

impl std::fmt::Display for ReferenceSource {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ReferenceSource::Holdout => "holdout",
            ReferenceSource::Partition => "partition",
        })
    }
}

/// How the per-cell scores of one run collapse to one number.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Aggregate {
    Best,
    Mean,
}

impl FromStr for Aggregate {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "best" | "min" => Ok(Aggregate::Best),
            "mean" => Ok(Aggregate::Mean),
            other => Err(Error::Config(format!("unknown aggregate `{other}`"))),
        }
    }
}

impl std::fmt::Display for Aggregate {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Aggregate::Best => "best",
            Aggregate::Mean => "mean",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// `total_samples` is the size of the training set.
    pub target: TargetSpec,
    pub holdout_samples: usize,
    pub grid: GridConfig,
    pub coev: CoevConfig,
    pub network: NetworkSpec,
    pub mixture: MixtureEAConfig,
    pub mixture_reference: ReferenceSource,
    /// Total mini-batches each cell trains, shared across portions.
    pub budget: usize,
    pub portion: f64,
    pub master_seed: u64,
    pub run_seed: u64,
    pub mode: ExecutionMode,
    pub repeats: usize,
    pub bootstrap_pool: usize,
    pub bootstrap_repeats: usize,
    pub aggregate: Aggregate,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            target: TargetSpec::ring(8, 2.0, 0.05, 2000),
            holdout_samples: 1000,
            grid: GridConfig::square(3).expect("3x3 is valid"),
            coev: CoevConfig::default(),
            network: NetworkSpec::default(),
            mixture: MixtureEAConfig::default(),
            mixture_reference: ReferenceSource::Holdout,
            budget: 2000,
            portion: 1.0,
            master_seed: 1,
            run_seed: 1,
            mode: ExecutionMode::Sequential,
            repeats: 1,
            bootstrap_pool: 30,
            bootstrap_repeats: 30,
            aggregate: Aggregate::Best,
        }
    }
}

fn parse<V: FromStr>(key: &str, value: &str) -> Result<V> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("bad value `{value}` for `{key}`")))
}

fn parse_with<V, E>(key: &str, value: &str, f: impl FnOnce(&str) -> std::result::Result<V, E>) -> Result<V> {
    f(value).map_err(|_| Error::Config(format!("bad value `{value}` for `{key}`")))
}

impl RunConfig {
    /// Parses a configuration, starting from the defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        let mut hidden_layers = cfg.network.hidden.len();
        let mut hidden_width = cfg.network.hidden.first().copied().unwrap_or(0);
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", n + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            let k = key;
            match key {
                "target.kind" => cfg.target.kind = parse_with(k, value, TargetKind::from_str)?,
                "target.modes" => cfg.target.modes = parse(k, value)?,
                "target.dimension" => cfg.target.dimension = parse(k, value)?,
                "target.mode_std" => cfg.target.mode_std = parse(k, value)?,
                "target.radius" => cfg.target.radius_or_pitch = parse(k, value)?,
                "target.total_samples" => cfg.target.total_samples = parse(k, value)?,
                "target.holdout_samples" => cfg.holdout_samples = parse(k, value)?,
                "grid.size" => cfg.grid = parse_with(k, value, GridConfig::from_str)?,
                "data.portion" => cfg.portion = parse(k, value)?,
                "budget.batches" => cfg.budget = parse(k, value)?,
                "coev.tournament_size" => cfg.coev.tournament_size = parse(k, value)?,
                "coev.mutation_probability" => cfg.coev.mutation_probability = parse(k, value)?,
                "coev.mutation_rate" => cfg.coev.mutation_rate = parse(k, value)?,
                "coev.learning_rate" => cfg.coev.initial_learning_rate = parse(k, value)?,
                "coev.population_size" => cfg.coev.population_size_per_cell = parse(k, value)?,
                "coev.batch_size" => cfg.coev.batch_size = parse(k, value)?,
                "coev.fitness" => cfg.coev.fitness_mode = parse_with(k, value, FitnessMode::from_str)?,
                "coev.optimizer" => cfg.coev.optimizer = parse_with(k, value, OptimizerKind::from_str)?,
                "network.latent_dim" => cfg.network.latent_dim = parse(k, value)?,
                "network.hidden_layers" => hidden_layers = parse(k, value)?,
                "network.hidden_width" => hidden_width = parse(k, value)?,
                "network.activation" => cfg.network.activation = parse_with(k, value, Activation::from_str)?,
                "mixture.generations" => cfg.mixture.generations = parse(k, value)?,
                "mixture.mutation_scale" => cfg.mixture.mutation_scale = parse(k, value)?,
                "mixture.eval_samples" => cfg.mixture.eval_sample_count = parse(k, value)?,
                "mixture.reference" => cfg.mixture_reference = parse_with(k, value, ReferenceSource::from_str)?,
                "seed.master" => cfg.master_seed = parse(k, value)?,
                "seed.run" => cfg.run_seed = parse(k, value)?,
                "run.mode" => cfg.mode = parse_with(k, value, ExecutionMode::from_str)?,
                "run.repeats" => cfg.repeats = parse(k, value)?,
                "bootstrap.pool" => cfg.bootstrap_pool = parse(k, value)?,
                "bootstrap.repeats" => cfg.bootstrap_repeats = parse(k, value)?,
                "score.aggregate" => cfg.aggregate = parse_with(k, value, Aggregate::from_str)?,
                other => return Err(Error::Config(format!("line {}: unknown key `{other}`", n + 1))),
            }
        }
        cfg.network.hidden = vec![hidden_width; hidden_layers];
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> Result<()> {
        self.target.validate()?;
        self.coev.validate()?;
        self.network.validate()?;
        self.mixture.validate(self.target.dimension)?;
        if !(self.portion > 0.0 && self.portion <= 1.0) {
            return Err(Error::Config(format!("portion {} outside (0, 1]", self.portion)));
        }
        if self.budget == 0 {
            return Err(Error::Config("batch budget must be positive".into()));
        }
        if self.repeats == 0 {
            return Err(Error::Config("at least one repeat is required".into()));
        }
        if self.mixture_reference == ReferenceSource::Holdout && self.holdout_samples < self.target.dimension + 1 {
            return Err(Error::Config("holdout too small to estimate a covariance".into()));
        }
        let hidden = &self.network.hidden;
        if hidden.windows(2).any(|w| w[0] != w[1]) {
            return Err(Error::Config("hidden layers must share one width to be written as config".into()));
        }
        Ok(())
    }

    /// Canonical text form: every key, fixed order. Parsing it yields `self`.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: &dyn std::fmt::Display| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("target.kind", &self.target.kind);
        kv("target.modes", &self.target.modes);
        kv("target.dimension", &self.target.dimension);
        kv("target.mode_std", &self.target.mode_std);
        kv("target.radius", &self.target.radius_or_pitch);
        kv("target.total_samples", &self.target.total_samples);
        kv("target.holdout_samples", &self.holdout_samples);
        kv("grid.size", &self.grid);
        kv("data.portion", &self.portion);
        kv("budget.batches", &self.budget);
        kv("coev.tournament_size", &self.coev.tournament_size);
        kv("coev.mutation_probability", &self.coev.mutation_probability);
        kv("coev.mutation_rate", &self.coev.mutation_rate);
        kv("coev.learning_rate", &self.coev.initial_learning_rate);
        kv("coev.population_size", &self.coev.population_size_per_cell);
        kv("coev.batch_size", &self.coev.batch_size);
        kv("coev.fitness", &self.coev.fitness_mode);
        kv("coev.optimizer", &self.coev.optimizer);
        kv("network.latent_dim", &self.network.latent_dim);
        kv("network.hidden_layers", &self.network.hidden.len());
        kv("network.hidden_width", &self.network.hidden.first().copied().unwrap_or(0));
        kv("network.activation", &activation_name(self.network.activation));
        kv("mixture.generations", &self.mixture.generations);
        kv("mixture.mutation_scale", &self.mixture.mutation_scale);
        kv("mixture.eval_samples", &self.mixture.eval_sample_count);
        kv("mixture.reference", &self.mixture_reference);
        kv("seed.master", &self.master_seed);
        kv("seed.run", &self.run_seed);
        kv("run.mode", &self.mode);
        kv("run.repeats", &self.repeats);
        kv("bootstrap.pool", &self.bootstrap_pool);
        kv("bootstrap.repeats", &self.bootstrap_repeats);
        kv("score.aggregate", &self.aggregate);
        s
    }

    /// SHA-256 of [`RunConfig::to_text`], hex encoded.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_text().as_bytes()))
    }
}

fn activation_name(a: Activation) -> &'static str {
    match a {
        Activation::Tanh => "tanh",
        Activation::Sigmoid => "sigmoid",
        Activation::Identity => "identity",
    }
}
