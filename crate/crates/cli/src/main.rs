//! Command-line front end: training runs, comparisons, bootstrap ensembles,
//! heatmaps and budget tables.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;

use gridgan::analysis::{
    bootstrap_ensembles, emit_heatmap, ensemble_name, improvement_delta, master_data, persist, read_rows,
    run_on_data, summarize_runs, train_grid, variant_name, wilcoxon_rank_sum, Aggregate, RunConfig,
    RunResult, ScoreRow,
};
use gridgan::coev::ExecutionMode;
use gridgan::dataset::plan_budget;
use gridgan::scoring::summarize;
use gridgan::seed::{self, Stream};
use gridgan::{Error, GridConfig};

#[derive(Parser)]
#[command(name = "gridgan", version, about = "Coevolutionary GAN training on a toroidal grid")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a grid, evolve every neighborhood's mixture and write result files.
    Run(Common),
    /// Pool independently trained single GANs into random five-generator ensembles.
    Bootstrap(Common),
    /// Train SingleGAN and the configured grid over repeats and compare them.
    Compare(Common),
    /// Render per-cell scores from a results directory.
    Heatmap(HeatmapArgs),
    /// Print batches per generation and generation counts per portion.
    Budget(BudgetArgs),
}

#[derive(Args, Clone)]
struct Common {
    /// Configuration file of `section.key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Fraction of the training set each cell samples.
    #[arg(long)]
    portion: Option<f64>,
    /// Grid shape, e.g. 3x3.
    #[arg(long)]
    grid: Option<GridConfig>,
    /// Run seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_parser = parse_mode)]
    mode: Option<ExecutionMode>,
    #[arg(long)]
    repeats: Option<usize>,
    /// Output directory.
    #[arg(long, default_value = "results")]
    out: PathBuf,
}

fn parse_mode(s: &str) -> Result<ExecutionMode, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

#[derive(Clone, Copy, ValueEnum)]
enum ScoreColumn {
    Best,
    Uniform,
    Evolved,
}

#[derive(Args)]
struct HeatmapArgs {
    /// Directory holding scores.csv; the heatmap is written next to it.
    #[arg(long, default_value = "results")]
    out: PathBuf,
    /// Scores file, if not `<out>/scores.csv`.
    #[arg(long)]
    scores: Option<PathBuf>,
    /// Variant to draw; defaults to the first one in the file.
    #[arg(long)]
    variant: Option<String>,
    #[arg(long, default_value_t = 0)]
    repeat: usize,
    #[arg(long, value_enum, default_value = "best")]
    column: ScoreColumn,
}

#[derive(Args)]
struct BudgetArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Portion to plan for; defaults to 1, 0.75, 0.5 and 0.25.
    #[arg(long)]
    portion: Option<f64>,
    #[arg(long)]
    dataset_size: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    /// Total mini-batch budget per cell.
    #[arg(long)]
    budget: Option<usize>,
}

/// Failure split by exit code: 1 for configuration, 2 for runtime.
enum Failure {
    Config(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_config() {
            Failure::Config(e.to_string())
        } else {
            Failure::Runtime(e.to_string())
        }
    }
}

fn load_config(path: Option<&Path>) -> Result<RunConfig, Failure> {
    match path {
        Some(p) => RunConfig::load(p).map_err(|e| Failure::Config(e.to_string())),
        None => Ok(RunConfig::default()),
    }
}

fn resolve(common: &Common) -> Result<RunConfig, Failure> {
    let mut cfg = load_config(common.config.as_deref())?;
    if let Some(p) = common.portion {
        cfg.portion = p;
    }
    if let Some(g) = common.grid {
        cfg.grid = g;
    }
    if let Some(s) = common.seed {
        cfg.run_seed = s;
    }
    if let Some(m) = common.mode {
        cfg.mode = m;
    }
    if let Some(r) = common.repeats {
        cfg.repeats = r;
    }
    cfg.validate().map_err(|e| Failure::Config(e.to_string()))?;
    Ok(cfg)
}

fn aggregate_single(r: &RunResult<f64>, how: Aggregate) -> f64 {
    match how {
        Aggregate::Best => r.grid_best_score,
        Aggregate::Mean => r.grid_mean_score,
    }
}

fn aggregate_ensemble(r: &RunResult<f64>, how: Aggregate) -> f64 {
    match how {
        Aggregate::Best => r.best_ensemble_score,
        Aggregate::Mean => r.cells.iter().map(|c| c.evolved_ensemble_score).sum::<f64>() / r.cells.len() as f64,
    }
}

fn cmd_run(common: &Common) -> Result<(), Failure> {
    let cfg = resolve(common)?;
    let data = master_data::<f64>(&cfg)?;
    let mut results = Vec::with_capacity(cfg.repeats);
    for repeat in 0..cfg.repeats {
        info!("{} portion {} repeat {repeat}", variant_name(cfg.grid), cfg.portion);
        let r = run_on_data::<f64>(&cfg, repeat, &data)?;
        println!(
            "{} portion {} repeat {}: generations {} grid best {:.6} grid mean {:.6} best ensemble {:.6} at {}",
            r.variant,
            r.portion,
            r.repeat,
            r.plan.generations,
            r.grid_best_score,
            r.grid_mean_score,
            r.best_ensemble_score,
            r.best_ensemble_cell
        );
        results.push(r);
    }
    persist(&cfg, &mut results, &common.out)?;
    println!("results written to {}", common.out.display());
    Ok(())
}

fn cmd_compare(common: &Common) -> Result<(), Failure> {
    let cfg = resolve(common)?;
    let data = master_data::<f64>(&cfg)?;
    let single_cfg = RunConfig {
        grid: GridConfig::square(1)?,
        ..cfg.clone()
    };
    let mut results = Vec::new();
    for repeat in 0..cfg.repeats {
        info!("SingleGAN repeat {repeat}");
        results.push(run_on_data::<f64>(&single_cfg, repeat, &data)?);
        info!("{} repeat {repeat}", variant_name(cfg.grid));
        results.push(run_on_data::<f64>(&cfg, repeat, &data)?);
    }
    let how = cfg.aggregate;
    let single: Vec<f64> = results.iter().step_by(2).map(|r| aggregate_single(r, how)).collect();
    let grid: Vec<f64> = results.iter().skip(1).step_by(2).map(|r| aggregate_single(r, how)).collect();
    let ensemble: Vec<f64> = results.iter().skip(1).step_by(2).map(|r| aggregate_ensemble(r, how)).collect();

    let mut table = String::from("variant,portion,repeats,mean,std_percent,min,delta_percent,p_value\n");
    for (name, values) in [
        (variant_name(single_cfg.grid), &single),
        (variant_name(cfg.grid), &grid),
        (ensemble_name(cfg.grid), &ensemble),
    ] {
        let s = summarize_runs(values)?;
        let delta = improvement_delta(&single, values)?;
        let p = if values.len() >= 3 {
            wilcoxon_rank_sum(&single, values)?.p_value.to_string()
        } else {
            String::new()
        };
        let _ = writeln!(table, "{name},{},{},{},{},{},{delta},{p}", cfg.portion, s.n, s.mean, s.std_percent, s.min);
        println!(
            "{name:<24} {:>10.6} ±{:>6.1}%  min {:>10.6}  delta {:>6.1}%  p {}",
            s.mean,
            s.std_percent,
            s.min,
            delta,
            if p.is_empty() { "n/a" } else { &p }
        );
    }
    persist(&cfg, &mut results, &common.out)?;
    let path = common.out.join("compare.csv");
    std::fs::write(&path, table).map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))?;
    println!("results written to {}", common.out.display());
    Ok(())
}

fn cmd_bootstrap(common: &Common) -> Result<(), Failure> {
    let cfg = resolve(common)?;
    let data = master_data::<f64>(&cfg)?;
    let single_cfg = RunConfig {
        grid: GridConfig::square(1)?,
        ..cfg.clone()
    };
    let mut pool = Vec::with_capacity(cfg.bootstrap_pool);
    for i in 0..cfg.bootstrap_pool {
        info!("single GAN {i} of {}", cfg.bootstrap_pool);
        let (_, trained) = train_grid::<f64>(&single_cfg, i, &data)?;
        pool.push(trained.center_generator(gridgan::CellId::new(0, 0)));
    }
    let reference = summarize(&data.holdout)?;
    let mut rng = seed::rng(seed::derive(cfg.run_seed, &[Stream::Bootstrap as u64]));
    let scores = bootstrap_ensembles(&pool, cfg.bootstrap_repeats, &reference, &cfg.mixture, &mut rng)?;
    let variant = format!("Bootstrap-{}", cfg.grid);
    let mut csv = String::from("variant,repeat,members,uniform_score,evolved_score\n");
    for (i, s) in scores.iter().enumerate() {
        let members: Vec<String> = s.members.iter().map(usize::to_string).collect();
        let _ = writeln!(csv, "{variant}-Ensemble,{i},{},{},{}", members.join(" "), s.uniform_score, s.evolved_score);
    }
    if !scores.is_empty() {
        let uniform: Vec<f64> = scores.iter().map(|s| s.uniform_score).collect();
        let evolved: Vec<f64> = scores.iter().map(|s| s.evolved_score).collect();
        let (u, e) = (summarize_runs(&uniform)?, summarize_runs(&evolved)?);
        println!("{variant} uniform  {:.6} ±{:.1}% min {:.6}", u.mean, u.std_percent, u.min);
        println!("{variant}-Ensemble {:.6} ±{:.1}% min {:.6}", e.mean, e.std_percent, e.min);
    }
    std::fs::create_dir_all(&common.out).map_err(|e| Failure::Runtime(e.to_string()))?;
    let path = common.out.join("bootstrap.csv");
    std::fs::write(&path, csv).map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))?;
    println!("results written to {}", common.out.display());
    Ok(())
}

fn cmd_heatmap(args: &HeatmapArgs) -> Result<(), Failure> {
    let path = args.scores.clone().unwrap_or_else(|| args.out.join("scores.csv"));
    let rows: Vec<ScoreRow> = read_rows(&path).map_err(|e| Failure::Config(e.to_string()))?;
    let variant = match &args.variant {
        Some(v) => v.clone(),
        None => rows
            .first()
            .map(|r| r.variant.clone())
            .ok_or_else(|| Failure::Config(format!("{} has no rows", path.display())))?,
    };
    let picked: Vec<&ScoreRow> = rows.iter().filter(|r| r.variant == variant && r.repeat == args.repeat).collect();
    if picked.is_empty() {
        return Err(Failure::Config(format!("no rows for {variant} repeat {}", args.repeat)));
    }
    let n_rows = picked.iter().map(|r| r.cell_row).max().unwrap_or(0) + 1;
    let n_cols = picked.iter().map(|r| r.cell_col).max().unwrap_or(0) + 1;
    let grid = GridConfig::new(n_rows, n_cols)?;
    let mut scores = vec![f64::NAN; grid.cell_count()];
    for r in &picked {
        scores[r.cell_row * n_cols + r.cell_col] = match args.column {
            ScoreColumn::Best => r.best_score,
            ScoreColumn::Uniform => r.uniform_ensemble_score,
            ScoreColumn::Evolved => r.evolved_ensemble_score,
        };
    }
    std::fs::create_dir_all(&args.out).map_err(|e| Failure::Runtime(e.to_string()))?;
    let files = emit_heatmap(grid, &scores, &args.out.join("heatmap"))?;
    println!("{} and {}", files.csv.display(), files.ppm.display());
    Ok(())
}

fn cmd_budget(args: &BudgetArgs) -> Result<(), Failure> {
    let cfg = load_config(args.config.as_deref())?;
    let n = args.dataset_size.unwrap_or(cfg.target.total_samples);
    let batch = args.batch_size.unwrap_or(cfg.coev.batch_size);
    let budget = args.budget.unwrap_or(cfg.budget);
    let portions = match args.portion {
        Some(p) => vec![p],
        None => vec![1.0, 0.75, 0.5, 0.25],
    };
    println!("portion,dataset_size,batch_size,batches_per_generation,generations,total_batches");
    for p in portions {
        let plan = plan_budget(n, batch, p, budget)?;
        println!(
            "{},{},{},{},{},{}",
            plan.portion, plan.dataset_size, plan.batch_size, plan.batches_per_generation, plan.generations, plan.total_batches
        );
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let outcome = match &cli.command {
        Command::Run(c) => cmd_run(c),
        Command::Compare(c) => cmd_compare(c),
        Command::Bootstrap(c) => cmd_bootstrap(c),
        Command::Heatmap(h) => cmd_heatmap(h),
        Command::Budget(b) => cmd_budget(b),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("configuration error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
