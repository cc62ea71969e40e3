use std::sync::atomic::{AtomicBool, Ordering};

use parking_lot::Mutex;

use crate::coev::cell::evolve_generation;
use crate::coev::{train_cell_generation, CellState, CoevConfig, GenerationRecord, NetworkSpec};
use crate::dataset::{sample_partition, BudgetPlan, DatasetPartition};
use crate::error::{Error, Result};
use crate::grid::{CellId, CellModels, GridConfig, Neighborhood, SnapshotBoard};
use crate::matrix::Matrix;
use crate::nn::{ModelParams, ModelSnapshot, Optimizer, Role};
use crate::scalar::Scalar;
use crate::seed::{self, Stream};

/// How cells are scheduled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ExecutionMode {
    /// One thread per cell, reading whatever neighbors have published so far.
    Async,
    /// Single thread, cells in row-major order, each generation seeing the
    /// publishes of cells already processed. Fully deterministic.
    #[default]
    Sequential,
    /// All cells of a generation read the state left by the previous
    /// generation; publishes land together at a barrier. Deterministic.
    Synchronous,
}

impl std::str::FromStr for ExecutionMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "async" | "asynchronous" => Ok(ExecutionMode::Async),
            "seq" | "sequential" => Ok(ExecutionMode::Sequential),
            "sync" | "synchronous" => Ok(ExecutionMode::Synchronous),
            other => Err(Error::Config(format!("unknown execution mode `{other}`"))),
        }
    }
}

impl std::fmt::Display for ExecutionMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ExecutionMode::Async => "async",
            ExecutionMode::Sequential => "seq",
            ExecutionMode::Synchronous => "sync",
        })
    }
}

/// Inputs of one grid training run.
#[derive(Debug, Clone)]
pub struct TrainingSetup<'a, T> {
    pub grid: GridConfig,
    pub master: &'a Matrix<T>,
    pub portion: f64,
    pub plan: BudgetPlan,
    pub coev: CoevConfig,
    pub network: NetworkSpec,
    pub seed: u64,
    pub mode: ExecutionMode,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellReport {
    pub cell: CellId,
    pub generations: usize,
    pub generator_steps: u64,
    pub discriminator_steps: u64,
    pub partition_size: usize,
    pub partition_distinct: usize,
}

/// Final state of a training run.
#[derive(Debug)]
pub struct TrainedGrid<T> {
    pub board: SnapshotBoard<T>,
    /// Row-major, one per cell.
    pub neighborhoods: Vec<Neighborhood>,
    pub cells: Vec<CellReport>,
    /// Training partition of each cell, row-major.
    pub partitions: Vec<DatasetPartition>,
    /// Ordered by cell (row-major) then generation.
    pub telemetry: Vec<GenerationRecord>,
}

impl<T: Scalar> TrainedGrid<T> {
    /// Final generators of a cell's neighborhood, center first.
    pub fn neighborhood_generators(&self, cell: CellId) -> Vec<ModelParams<T>> {
        let nb = &self.neighborhoods[self.board.grid().index_of(cell)];
        self.board.gather(nb).0.into_iter().map(|s| s.params).collect()
    }

    pub fn center_generator(&self, cell: CellId) -> ModelParams<T> {
        self.board.latest(cell).generator.params.clone()
    }
}

fn initial_models<T: Scalar>(setup: &TrainingSetup<'_, T>, cell: CellId) -> Result<CellModels<T>> {
    let dim = setup.master.cols();
    let mut rng = seed::rng(seed::cell_seed(setup.seed, Stream::Init, cell.row, cell.col));
    let g = ModelParams::init_uniform(setup.network.generator_layers(dim), &mut rng)?;
    let d = ModelParams::init_uniform(setup.network.discriminator_layers(dim), &mut rng)?;
    let snap = |params, role| ModelSnapshot {
        params,
        role,
        learning_rate: setup.coev.initial_learning_rate,
        origin: cell,
        version: 0,
    };
    Ok(CellModels {
        generator: snap(g, Role::Generator),
        discriminator: snap(d, Role::Discriminator),
    })
}

fn initial_state<T: Scalar>(setup: &TrainingSetup<'_, T>, cell: CellId) -> Result<CellState<T>> {
    let partition = sample_partition(
        setup.master.rows(),
        setup.portion,
        cell,
        seed::cell_seed(setup.seed, Stream::Partition, cell.row, cell.col),
    )?;
    Ok(CellState {
        id: cell,
        neighborhood: setup.grid.neighborhood_of(cell),
        partition,
        rng: seed::rng(seed::cell_seed(setup.seed, Stream::Training, cell.row, cell.col)),
        generation: 0,
        generator_optimizer: Optimizer::new(setup.coev.optimizer),
        discriminator_optimizer: Optimizer::new(setup.coev.optimizer),
        generator_steps: 0,
        discriminator_steps: 0,
    })
}

/// Trains every cell for `setup.plan.generations` generations.
pub fn run<T: Scalar>(setup: &TrainingSetup<'_, T>) -> Result<TrainedGrid<T>> {
    setup.coev.validate()?;
    setup.network.validate()?;
    if setup.master.rows() == 0 {
        return Err(Error::Config("empty training set".into()));
    }
    if setup.coev.batch_size != setup.plan.batch_size {
        return Err(Error::Config(format!(
            "batch size {} differs from the budget plan's {}",
            setup.coev.batch_size, setup.plan.batch_size
        )));
    }
    let cells: Vec<CellId> = setup.grid.cells().collect();
    let initial = cells
        .iter()
        .map(|&c| initial_models(setup, c))
        .collect::<Result<Vec<_>>>()?;
    let board = SnapshotBoard::new(setup.grid, initial)?;
    let mut states = cells
        .iter()
        .map(|&c| initial_state(setup, c))
        .collect::<Result<Vec<_>>>()?;
    for st in &states {
        if st.partition.len() < setup.coev.batch_size {
            return Err(Error::Config(format!(
                "cell {} holds {} samples, fewer than one batch of {}",
                st.id,
                st.partition.len(),
                setup.coev.batch_size
            )));
        }
    }
    let generations = setup.plan.generations;
    let mut telemetry: Vec<Vec<GenerationRecord>> = vec![Vec::with_capacity(generations); cells.len()];

    match setup.mode {
        ExecutionMode::Sequential => {
            for _ in 0..generations {
                for (st, log) in states.iter_mut().zip(telemetry.iter_mut()) {
                    log.push(train_cell_generation(st, &board, setup.master, &setup.coev, &setup.network)?);
                }
            }
        }
        ExecutionMode::Synchronous => {
            for _ in 0..generations {
                let frozen = board.snapshot();
                let results: Vec<Result<(CellModels<T>, GenerationRecord)>> = std::thread::scope(|s| {
                    let handles: Vec<_> = states
                        .iter_mut()
                        .map(|st| {
                            let frozen = &frozen;
                            s.spawn(move || evolve_generation(st, frozen, setup.master, &setup.coev, &setup.network))
                        })
                        .collect();
                    handles.into_iter().map(|h| h.join().expect("cell worker panicked")).collect()
                });
                for ((res, &c), log) in results.into_iter().zip(&cells).zip(telemetry.iter_mut()) {
                    let (pair, rec) = res?;
                    board.publish(c, pair.generator, pair.discriminator)?;
                    log.push(rec);
                }
            }
        }
        ExecutionMode::Async => {
            let abort = AtomicBool::new(false);
            let failure: Mutex<Option<Error>> = Mutex::new(None);
            std::thread::scope(|s| {
                for (st, log) in states.iter_mut().zip(telemetry.iter_mut()) {
                    let (board, abort, failure) = (&board, &abort, &failure);
                    s.spawn(move || {
                        for _ in 0..generations {
                            if abort.load(Ordering::Relaxed) {
                                return;
                            }
                            match train_cell_generation(st, board, setup.master, &setup.coev, &setup.network) {
                                Ok(rec) => log.push(rec),
                                Err(e) => {
                                    abort.store(true, Ordering::Relaxed);
                                    failure.lock().get_or_insert(e);
                                    return;
                                }
                            }
                        }
                    });
                }
            });
            if let Some(e) = failure.into_inner() {
                return Err(e);
            }
        }
    }

    let reports = states
        .iter()
        .map(|st| CellReport {
            cell: st.id,
            generations: st.generation,
            generator_steps: st.generator_steps,
            discriminator_steps: st.discriminator_steps,
            partition_size: st.partition.len(),
            partition_distinct: st.partition.distinct(),
        })
        .collect();
    Ok(TrainedGrid {
        neighborhoods: cells.iter().map(|&c| setup.grid.neighborhood_of(c)).collect(),
        board,
        cells: reports,
        partitions: states.into_iter().map(|st| st.partition).collect(),
        telemetry: telemetry.into_iter().flatten().collect(),
    })
}
