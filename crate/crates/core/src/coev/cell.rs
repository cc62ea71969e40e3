use rand::Rng;

use crate::coev::{
    evaluate_all_pairs, fitness_from_record, mutate_learning_rate, tournament_select, CoevConfig, NetworkSpec,
};
use crate::dataset::{minibatches, DatasetPartition};
use crate::error::{Error, Result};
use crate::grid::{CellId, CellModels, Neighborhood, SnapshotBoard};
use crate::matrix::Matrix;
use crate::nn::{backward, sample_latent, LossSpec, ModelParams, ModelSnapshot, Optimizer, Role};
use crate::scalar::Scalar;
use crate::seed::Rng as CellRng;

/// Everything a cell keeps between generations.
#[derive(Debug, Clone)]
pub struct CellState<T> {
    pub id: CellId,
    pub neighborhood: Neighborhood,
    pub partition: DatasetPartition,
    pub rng: CellRng,
    pub generation: usize,
    /// Optimizer state of the cell's own center models. Reset when a model
    /// gathered from a neighbor takes over the center.
    pub generator_optimizer: Optimizer<T>,
    pub discriminator_optimizer: Optimizer<T>,
    pub generator_steps: u64,
    pub discriminator_steps: u64,
}

/// Telemetry of one finished generation.
#[derive(Debug, Clone, PartialEq)]
pub struct GenerationRecord {
    pub cell: CellId,
    pub generation: usize,
    pub generator_fitness: f64,
    pub discriminator_fitness: f64,
    pub learning_rate: f64,
    pub version: u64,
}

struct Trainee<T> {
    params: ModelParams<T>,
    optimizer: Optimizer<T>,
    /// True for the copy of the cell's own previous center.
    own_lineage: bool,
}

fn argmin<T: Scalar>(v: &[T]) -> usize {
    (1..v.len()).fold(0, |best, i| if v[i] < v[best] { i } else { best })
}

fn argmax<T: Scalar>(v: &[T]) -> usize {
    (1..v.len()).fold(0, |worst, i| if v[i] >= v[worst] { i } else { worst })
}

fn trainees<T: Scalar>(snaps: Vec<ModelSnapshot<T>>, own: &mut Optimizer<T>) -> Vec<Trainee<T>> {
    snaps
        .into_iter()
        .enumerate()
        .map(|(i, s)| Trainee {
            params: s.params,
            optimizer: if i == 0 {
                std::mem::replace(own, Optimizer::new(own.kind()))
            } else {
                Optimizer::new(own.kind())
            },
            own_lineage: i == 0,
        })
        .collect()
}

fn params<T>(pop: &[Trainee<T>]) -> Vec<ModelParams<T>> 
where
    T: Clone,
{
    pop.iter().map(|t| t.params.clone()).collect()
}

/// Runs one generation of `state`'s cell, reading neighbors from `source`,
/// and returns the pair to publish without publishing it.
pub(crate) fn evolve_generation<T: Scalar>(
    state: &mut CellState<T>,
    source: &SnapshotBoard<T>,
    master: &Matrix<T>,
    config: &CoevConfig,
    net: &NetworkSpec,
) -> Result<(CellModels<T>, GenerationRecord)> {
    let generation = state.generation;
    let tag = |e: Error| Error::Training {
        cell: state.id,
        generation,
        source: Box::new(e),
    };
    let (gsnaps, dsnaps) = source.gather(&state.neighborhood);
    let version = gsnaps[0].version;
    let mut lr = gsnaps[0].learning_rate;
    let mut gens = trainees(gsnaps, &mut state.generator_optimizer);
    let mut discs = trainees(dsnaps, &mut state.discriminator_optimizer);
    let s_gen = gens.len();
    let s_disc = discs.len();

    let batches = minibatches(&state.partition, config.batch_size, state.rng.random());
    if batches.is_empty() {
        return Err(tag(Error::Config(format!(
            "partition of {} samples yields no batch of {}",
            state.partition.len(),
            config.batch_size
        ))));
    }

    // Rank all pairs on one random batch and pick the centers by tournament.
    let eval_batch = &batches[state.rng.random_range(0..batches.len())];
    let real = master.select_rows(eval_batch);
    let z = sample_latent(&mut state.rng, eval_batch.len(), net.latent_dim);
    let rec = evaluate_all_pairs(&params(&gens), &params(&discs), &real, &z).map_err(tag)?;
    let (gf, df) = fitness_from_record(&rec, config.fitness_mode);
    let gi = tournament_select(&gf, config.tournament_size, &mut state.rng);
    let di = tournament_select(&df, config.tournament_size, &mut state.rng);
    gens.swap(0, gi);
    discs.swap(0, di);

    for batch in &batches {
        lr = mutate_learning_rate(lr, config.mutation_probability, config.mutation_rate, &mut state.rng);
        let real = master.select_rows(batch);
        let z = sample_latent(&mut state.rng, batch.len(), net.latent_dim);

        let adversary = state.rng.random_range(0..s_disc);
        for g in gens.iter_mut() {
            let spec = LossSpec::Generator {
                discriminator: &discs[adversary].params,
                latent: &z,
            };
            let (_, grad) = backward(&g.params, spec).map_err(tag)?;
            g.params = g.optimizer.step(&g.params, &grad, lr).map_err(tag)?;
        }
        state.generator_steps += s_gen as u64;

        let adversary = state.rng.random_range(0..s_gen);
        let fake = gens[adversary].params.forward(&z).map_err(tag)?;
        for d in discs.iter_mut() {
            let spec = LossSpec::Discriminator { real: &real, fake: &fake };
            let (_, grad) = backward(&d.params, spec).map_err(tag)?;
            d.params = d.optimizer.step(&d.params, &grad, lr).map_err(tag)?;
        }
        state.discriminator_steps += s_disc as u64;
    }

    // Re-rank on the last batch, replace the worst with the best, publish the best.
    let last = batches.last().expect("non-empty");
    let real = master.select_rows(last);
    let z = sample_latent(&mut state.rng, last.len(), net.latent_dim);
    let rec = evaluate_all_pairs(&params(&gens), &params(&discs), &real, &z).map_err(tag)?;
    let (gf, df) = fitness_from_record(&rec, config.fitness_mode);
    let (gb, db) = (argmin(&gf), argmin(&df));
    let (gw, dw) = (argmax(&gf), argmax(&df));
    if gw != gb {
        gens[gw].params = gens[gb].params.clone();
    }
    if dw != db {
        discs[dw].params = discs[db].params.clone();
    }

    let best_g = gens.swap_remove(gb);
    let best_d = discs.swap_remove(db);
    state.generator_optimizer = if best_g.own_lineage {
        best_g.optimizer
    } else {
        Optimizer::new(config.optimizer)
    };
    state.discriminator_optimizer = if best_d.own_lineage {
        best_d.optimizer
    } else {
        Optimizer::new(config.optimizer)
    };
    state.generation += 1;

    let snap = |params, role| ModelSnapshot {
        params,
        role,
        learning_rate: lr,
        origin: state.id,
        version: version + 1,
    };
    let pair = CellModels {
        generator: snap(best_g.params, Role::Generator),
        discriminator: snap(best_d.params, Role::Discriminator),
    };
    let record = GenerationRecord {
        cell: state.id,
        generation,
        generator_fitness: gf[gb].as_f64(),
        discriminator_fitness: df[db].as_f64(),
        learning_rate: lr,
        version: version + 1,
    };
    Ok((pair, record))
}

/// One full generation of a cell on a live board: gather, rank, select,
/// train, re-rank, replace and publish.
pub fn train_cell_generation<T: Scalar>(
    state: &mut CellState<T>,
    board: &SnapshotBoard<T>,
    master: &Matrix<T>,
    config: &CoevConfig,
    net: &NetworkSpec,
) -> Result<GenerationRecord> {
    let (pair, record) = evolve_generation(state, board, master, config, net)?;
    board.publish(state.id, pair.generator, pair.discriminator)?;
    Ok(record)
}
