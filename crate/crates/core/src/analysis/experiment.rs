//! End-to-end runs: data, grid training, mixtures, result files.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analysis::config::{ReferenceSource, RunConfig};
use crate::coev::{self, GenerationRecord, TrainedGrid, TrainingSetup};
use crate::dataset::{generate_target, plan_budget, BudgetPlan, TargetSpec};
use crate::error::{Error, Result};
use crate::grid::{CellId, GridConfig};
use crate::matrix::Matrix;
use crate::mixture::{evolve_mixture, EnsembleScore, select_best_neighborhood, MixtureEvaluator, MixtureWeights};
use crate::scalar::Scalar;
use crate::scoring::{summarize, GaussianSummary};
use crate::seed::{self, Stream};

/// Name of a run: `SingleGAN` for one cell, `Grid-KxK` otherwise.
pub fn variant_name(grid: GridConfig) -> String {
    if grid.cell_count() == 1 {
        "SingleGAN".to_string()
    } else {
        format!("Grid-{grid}")
    }
}

pub fn ensemble_name(grid: GridConfig) -> String {
    format!("{}-Ensemble", variant_name(grid))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellResult<T> {
    pub cell: CellId,
    /// Neighborhood members, center first; order of `weights`.
    pub members: Vec<CellId>,
    /// Score of the cell's own (center) generator.
    pub best_score: T,
    pub uniform_ensemble_score: T,
    pub evolved_ensemble_score: T,
    pub weights: MixtureWeights<T>,
    /// Seed of the latent draws all three scores share.
    pub eval_seed: u64,
}

#[derive(Debug, Clone)]
pub struct RunResult<T> {
    pub variant: String,
    pub portion: f64,
    pub repeat: usize,
    pub run_seed: u64,
    pub plan: BudgetPlan,
    /// Row-major.
    pub cells: Vec<CellResult<T>>,
    pub grid_best_score: T,
    pub grid_mean_score: T,
    /// Cell whose evolved mixture scored lowest.
    pub best_ensemble_cell: CellId,
    pub best_ensemble_score: T,
    pub telemetry: Vec<GenerationRecord>,
    pub telemetry_path: Option<PathBuf>,
}

/// Training set and holdout drawn from one master stream.
pub struct MasterData<T> {
    pub train: Matrix<T>,
    pub holdout: Matrix<T>,
}

pub fn master_data<T: Scalar>(cfg: &RunConfig) -> Result<MasterData<T>> {
    let n = cfg.target.total_samples;
    let spec = TargetSpec {
        total_samples: n + cfg.holdout_samples,
        ..cfg.target
    };
    let all = generate_target::<T>(&spec, seed::derive(cfg.master_seed, &[Stream::Target as u64]))?;
    let train = all.slice_rows(0, n);
    let holdout = all.slice_rows(n, n + cfg.holdout_samples);
    Ok(MasterData { train, holdout })
}

/// Seed of repeat `repeat`; distinct repeats train independently.
pub fn repeat_seed(run_seed: u64, repeat: usize) -> u64 {
    seed::derive(run_seed, &[repeat as u64])
}

/// Coevolutionary training only, no mixtures.
pub fn train_grid<T: Scalar>(cfg: &RunConfig, repeat: usize, data: &MasterData<T>) -> Result<(BudgetPlan, TrainedGrid<T>)> {
    let plan = plan_budget(data.train.rows(), cfg.coev.batch_size, cfg.portion, cfg.budget)?;
    let setup = TrainingSetup {
        grid: cfg.grid,
        master: &data.train,
        portion: cfg.portion,
        plan,
        coev: cfg.coev.clone(),
        network: cfg.network.clone(),
        seed: repeat_seed(cfg.run_seed, repeat),
        mode: cfg.mode,
    };
    Ok((plan, coev::run(&setup)?))
}

/// Trains one grid and fits a mixture for every neighborhood.
///
/// Single-generator and ensemble scores of a cell share one evaluator, so they
/// are computed on the same latent draws against the same reference.
pub fn run_experiment<T: Scalar>(cfg: &RunConfig, repeat: usize) -> Result<RunResult<T>> {
    cfg.validate()?;
    let data = master_data::<T>(cfg)?;
    run_on_data(cfg, repeat, &data)
}

/// [`run_experiment`] on data that is already generated.
pub fn run_on_data<T: Scalar>(cfg: &RunConfig, repeat: usize, data: &MasterData<T>) -> Result<RunResult<T>> {
    let (plan, trained) = train_grid(cfg, repeat, data)?;
    let run_seed = repeat_seed(cfg.run_seed, repeat);

    let holdout = match cfg.mixture_reference {
        ReferenceSource::Holdout => Some(summarize(&data.holdout)?),
        ReferenceSource::Partition => None,
    };
    let mut cells = Vec::with_capacity(cfg.grid.cell_count());
    for (i, cell) in cfg.grid.cells().enumerate() {
        let partition_summary;
        let reference: &GaussianSummary<T> = match &holdout {
            Some(h) => h,
            None => {
                partition_summary = summarize(&data.train.select_rows(&trained.partitions[i].indices))?;
                &partition_summary
            }
        };
        let gens = trained.neighborhood_generators(cell);
        let mut rng = seed::rng(seed::cell_seed(run_seed, Stream::Mixture, cell.row, cell.col));
        let uniform = MixtureWeights::uniform(gens.len());
        let evolved = evolve_mixture(&gens, &uniform, reference, &cfg.mixture, &mut rng)?;
        let evaluator = MixtureEvaluator::new(&gens, reference, &cfg.mixture, evolved.score.eval_seed)?;
        let mut center_only = vec![T::zero(); gens.len()];
        center_only[0] = T::one();
        let best = evaluator.score(&MixtureWeights::new(center_only)?)?;
        cells.push(CellResult {
            cell,
            members: trained.neighborhoods[i].members.clone(),
            best_score: best.value,
            uniform_ensemble_score: evolved.initial_score.value,
            evolved_ensemble_score: evolved.score.value,
            weights: evolved.weights,
            eval_seed: evolved.score.eval_seed,
        });
    }

    let ensembles: Vec<_> = cells
        .iter()
        .map(|c| {
            let score = EnsembleScore {
                value: c.evolved_ensemble_score,
                eval_sample_count: cfg.mixture.eval_sample_count,
                eval_seed: c.eval_seed,
            };
            (c.cell, c.weights.clone(), score)
        })
        .collect();
    let (best_cell, _, best_ens) = select_best_neighborhood(&ensembles).expect("grid has cells").clone();
    let grid_best = cells.iter().map(|c| c.best_score).fold(T::infinity(), T::min);
    let grid_mean = cells.iter().map(|c| c.best_score).sum::<T>() / T::of_usize(cells.len());
    Ok(RunResult {
        variant: variant_name(cfg.grid),
        portion: cfg.portion,
        repeat,
        run_seed,
        plan,
        cells,
        grid_best_score: grid_best,
        grid_mean_score: grid_mean,
        best_ensemble_cell: best_cell,
        best_ensemble_score: best_ens.value,
        telemetry: trained.telemetry,
        telemetry_path: None,
    })
}

/// One line of `scores.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRow {
    pub variant: String,
    pub portion: f64,
    pub repeat: usize,
    pub cell_row: usize,
    pub cell_col: usize,
    pub best_score: f64,
    pub uniform_ensemble_score: f64,
    pub evolved_ensemble_score: f64,
}

/// One line of `weights.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightRow {
    pub variant: String,
    pub portion: f64,
    pub repeat: usize,
    pub cell_row: usize,
    pub cell_col: usize,
    pub member_row: usize,
    pub member_col: usize,
    pub weight: f64,
}

/// One line of `telemetry.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TelemetryRow {
    pub variant: String,
    pub portion: f64,
    pub repeat: usize,
    pub cell_row: usize,
    pub cell_col: usize,
    pub generation: usize,
    pub gen_fitness: f64,
    pub disc_fitness: f64,
    pub learning_rate: f64,
}

impl<T: Scalar> RunResult<T> {
    pub fn score_rows(&self) -> Vec<ScoreRow> {
        self.cells
            .iter()
            .map(|c| ScoreRow {
                variant: self.variant.clone(),
                portion: self.portion,
                repeat: self.repeat,
                cell_row: c.cell.row,
                cell_col: c.cell.col,
                best_score: c.best_score.as_f64(),
                uniform_ensemble_score: c.uniform_ensemble_score.as_f64(),
                evolved_ensemble_score: c.evolved_ensemble_score.as_f64(),
            })
            .collect()
    }

    pub fn weight_rows(&self) -> Vec<WeightRow> {
        let mut rows = Vec::new();
        for c in &self.cells {
            for (m, w) in c.members.iter().zip(c.weights.as_slice()) {
                rows.push(WeightRow {
                    variant: self.variant.clone(),
                    portion: self.portion,
                    repeat: self.repeat,
                    cell_row: c.cell.row,
                    cell_col: c.cell.col,
                    member_row: m.row,
                    member_col: m.col,
                    weight: w.as_f64(),
                });
            }
        }
        rows
    }

    pub fn telemetry_rows(&self) -> Vec<TelemetryRow> {
        self.telemetry
            .iter()
            .map(|r| TelemetryRow {
                variant: self.variant.clone(),
                portion: self.portion,
                repeat: self.repeat,
                cell_row: r.cell.row,
                cell_col: r.cell.col,
                generation: r.generation,
                gen_fitness: r.generator_fitness,
                disc_fitness: r.discriminator_fitness,
                learning_rate: r.learning_rate,
            })
            .collect()
    }
}

pub fn write_rows<R: Serialize>(path: &Path, rows: &[R]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_io(path, e))?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

pub fn read_rows<R: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<R>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_io(path, e))?;
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

fn csv_io(path: &Path, e: csv::Error) -> Error {
    if e.is_io_error() {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            _ => unreachable!(),
        }
    } else {
        Error::Csv(e)
    }
}

/// Manifest text: seeds, plan and the config hash. Contains no timestamps.
pub fn manifest<T: Scalar>(cfg: &RunConfig, results: &[RunResult<T>]) -> String {
    let mut s = String::new();
    s.push_str(&format!("config_hash = {}\n", cfg.hash()));
    s.push_str(&format!("seed.master = {}\n", cfg.master_seed));
    s.push_str(&format!("seed.run = {}\n", cfg.run_seed));
    s.push_str(&format!("precision = {}\n", std::any::type_name::<T>()));
    for r in results {
        s.push_str(&format!(
            "repeat {} = variant {} portion {} seed {} generations {} batches_per_generation {}\n",
            r.repeat, r.variant, r.portion, r.run_seed, r.plan.generations, r.plan.batches_per_generation
        ));
    }
    s
}

/// Writes `scores.csv`, `weights.csv`, `telemetry.csv`, `manifest.txt` and
/// `config.txt` into `dir`, and records the telemetry path on each result.
pub fn persist<T: Scalar>(cfg: &RunConfig, results: &mut [RunResult<T>], dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let scores: Vec<ScoreRow> = results.iter().flat_map(|r| r.score_rows()).collect();
    write_rows(&dir.join("scores.csv"), &scores)?;
    let weights: Vec<WeightRow> = results.iter().flat_map(|r| r.weight_rows()).collect();
    write_rows(&dir.join("weights.csv"), &weights)?;
    let telemetry_path = dir.join("telemetry.csv");
    let telemetry: Vec<TelemetryRow> = results.iter().flat_map(|r| r.telemetry_rows()).collect();
    write_rows(&telemetry_path, &telemetry)?;
    let manifest_path = dir.join("manifest.txt");
    fs::write(&manifest_path, manifest(cfg, results)).map_err(|e| Error::io(&manifest_path, e))?;
    let config_path = dir.join("config.txt");
    fs::write(&config_path, cfg.to_text()).map_err(|e| Error::io(&config_path, e))?;
    for r in results.iter_mut() {
        r.telemetry_path = Some(telemetry_path.clone());
    }
    Ok(())
}
