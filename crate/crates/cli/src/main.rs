use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use lore_core::io::{load_matrix_csv, load_triplets_csv, save_embedding_csv, save_matrix_csv, save_triplets_csv};
use lore_core::metrics::principal_axes;
use lore_core::{Embedding, LossScale, PerceptualSpace};
use lore_cli::runner::{self, fit_and_evaluate, load_dataset, write_json};
use lore_cli::{CliError, CliResult, ExperimentConfig, Method};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "lore", version, about = "Low-rank ordinal embedding from triplet comparisons")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic space with train and test triplets for each seed.
    Synth(ConfigArgs),
    /// Fit one embedding (first seed, solver λ) and write it with its traces.
    Fit(ConfigArgs),
    /// Score an embedding against test triplets and optional ground truth.
    Eval(EvalArgs),
    /// Run the seed × λ grid and write per-run and aggregate reports.
    Sweep(ConfigArgs),
    /// Order items along the leading principal axes of an embedding.
    Axes(AxesArgs),
}

#[derive(Args)]
struct ConfigArgs {
    /// TOML or JSON experiment config; flags below override its values.
    #[arg(long)]
    config: Option<PathBuf>,

    #[arg(long, help_heading = "Generator")]
    n_items: Option<usize>,
    #[arg(long, help_heading = "Generator")]
    intrinsic_rank: Option<usize>,
    #[arg(long, help_heading = "Generator")]
    noise_variance: Option<f64>,
    #[arg(long, help_heading = "Generator")]
    query_fraction: Option<f64>,
    #[arg(long, help_heading = "Generator")]
    test_size: Option<usize>,

    /// Train triplet CSV (replaces the generator).
    #[arg(long, help_heading = "Data")]
    train: Option<PathBuf>,
    #[arg(long, help_heading = "Data")]
    test: Option<PathBuf>,
    /// Ground-truth matrix CSV for NPD and PSNR.
    #[arg(long, help_heading = "Data")]
    space: Option<PathBuf>,
    /// Item count of the triplet files.
    #[arg(long, help_heading = "Data")]
    data_n_items: Option<usize>,
    /// Item-embedding matrix CSV to simulate triplets from.
    #[arg(long, help_heading = "Data")]
    matrix: Option<PathBuf>,
    #[arg(long, help_heading = "Data")]
    truncate_rank: Option<usize>,

    #[arg(long, help_heading = "Solver")]
    lambda: Option<f64>,
    #[arg(long, help_heading = "Solver")]
    p: Option<f64>,
    #[arg(long, help_heading = "Solver")]
    mu: Option<f64>,
    #[arg(long, help_heading = "Solver")]
    tol: Option<f64>,
    #[arg(long, help_heading = "Solver")]
    max_iters: Option<usize>,
    #[arg(long, help_heading = "Solver")]
    init_variance: Option<f64>,
    /// `mean` or `sum`.
    #[arg(long, help_heading = "Solver")]
    loss_scale: Option<String>,

    #[arg(long, value_enum)]
    method: Option<Method>,
    #[arg(long)]
    ambient_dim: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    #[arg(long, value_delimiter = ',')]
    lambda_grid: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    candidate_dims: Option<Vec<usize>>,
    #[arg(long)]
    folds: Option<usize>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
}

macro_rules! set {
    ($target:expr, $flag:expr) => {
        if let Some(v) = $flag.clone() {
            $target = v;
        }
    };
    ($target:expr, some $flag:expr) => {
        if let Some(v) = $flag.clone() {
            $target = Some(v);
        }
    };
}

impl ConfigArgs {
    fn resolve(&self) -> CliResult<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        set!(cfg.gen.n_items, self.n_items);
        set!(cfg.gen.intrinsic_rank, self.intrinsic_rank);
        set!(cfg.gen.noise_variance, self.noise_variance);
        set!(cfg.gen.query_fraction, self.query_fraction);
        set!(cfg.gen.test_size, self.test_size);
        set!(cfg.data.train, some self.train);
        set!(cfg.data.test, some self.test);
        set!(cfg.data.space, some self.space);
        set!(cfg.data.n_items, some self.data_n_items);
        set!(cfg.data.matrix, some self.matrix);
        set!(cfg.data.truncate_rank, some self.truncate_rank);
        set!(cfg.solver.lambda, self.lambda);
        set!(cfg.solver.p, self.p);
        set!(cfg.solver.mu, self.mu);
        set!(cfg.solver.tol, self.tol);
        set!(cfg.solver.max_iters, self.max_iters);
        set!(cfg.solver.init_variance, self.init_variance);
        if let Some(s) = &self.loss_scale {
            cfg.solver.loss_scale = match s.as_str() {
                "mean" => LossScale::Mean,
                "sum" => LossScale::Sum,
                other => return Err(CliError::Config(format!("unknown loss scale '{other}'"))),
            };
        }
        set!(cfg.method, self.method);
        set!(cfg.ambient_dim, self.ambient_dim);
        set!(cfg.seeds, self.seeds);
        set!(cfg.lambda_grid, some self.lambda_grid);
        set!(cfg.candidate_dims, self.candidate_dims);
        set!(cfg.folds, self.folds);
        set!(cfg.output_dir, self.output_dir);
        set!(cfg.threads, self.threads);
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args)]
struct EvalArgs {
    /// Embedding matrix CSV.
    #[arg(long)]
    embedding: PathBuf,
    /// Test triplet CSV.
    #[arg(long)]
    test: PathBuf,
    /// Ground-truth matrix CSV.
    #[arg(long)]
    space: Option<PathBuf>,
}

#[derive(Args)]
struct AxesArgs {
    #[arg(long)]
    embedding: PathBuf,
    /// Number of leading axes.
    #[arg(long, default_value_t = 2)]
    k: usize,
    /// Optional file with one item label per line.
    #[arg(long)]
    labels: Option<PathBuf>,
}

fn create_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::Data(format!("{}: {e}", dir.display())))
}

fn synth(args: &ConfigArgs) -> CliResult<()> {
    let cfg = args.resolve()?;
    if cfg.data.train.is_some() {
        return Err(CliError::Config("synth simulates triplets; drop --train".into()));
    }
    for &seed in &cfg.seeds {
        let data = load_dataset(&cfg, seed)?;
        let dir = cfg.output_dir.join(format!("seed-{seed}"));
        create_dir(&dir)?;
        if let Some(space) = &data.space {
            save_matrix_csv(space.matrix(), dir.join("space.csv"))?;
        }
        save_triplets_csv(&data.train, dir.join("train.csv"))?;
        save_triplets_csv(&data.test, dir.join("test.csv"))?;
        println!("{}: {} train, {} test triplets", dir.display(), data.train.len(), data.test.len());
    }
    Ok(())
}

#[derive(Serialize)]
struct Traces<'a> {
    objective_trace: &'a [f64],
    iterate_delta_trace: &'a [f64],
}

fn fit(args: &ConfigArgs) -> CliResult<()> {
    let cfg = args.resolve()?;
    let seed = cfg.seeds[0];
    let data = load_dataset(&cfg, seed)?;
    let out = fit_and_evaluate(&cfg, &data, seed, cfg.solver.lambda)?;
    create_dir(&cfg.output_dir)?;
    save_embedding_csv(&out.embedding, cfg.output_dir.join("embedding.csv"))?;
    write_json(&out.record, &cfg.output_dir.join("run.json"))?;
    if cfg.method != Method::DimSweep {
        let traces = Traces {
            objective_trace: &out.objective_trace,
            iterate_delta_trace: &out.iterate_delta_trace,
        };
        write_json(&traces, &cfg.output_dir.join("traces.json"))?;
    }
    let m = &out.record.metrics;
    println!(
        "accuracy {:.4}  rank {}  iterations {}  time {:.2}s",
        m.test_accuracy,
        m.measured_rank,
        out.record.iterations_run.map_or("-".into(), |k| k.to_string()),
        m.wall_time_seconds
    );
    Ok(())
}

fn eval(args: &EvalArgs) -> CliResult<()> {
    let z = Embedding::new(load_matrix_csv(&args.embedding)?)?;
    let test = load_triplets_csv(&args.test, z.n_items())?;
    let space = match &args.space {
        Some(path) => Some(PerceptualSpace::new(load_matrix_csv(path)?)?),
        None => None,
    };
    let report = runner::evaluate(&z, &test, space.as_ref(), 0.0)?;
    println!("{}", serde_json::to_string_pretty(&report).map_err(|e| CliError::Data(e.to_string()))?);
    Ok(())
}

fn sweep(args: &ConfigArgs) -> CliResult<()> {
    let cfg = args.resolve()?;
    let report = lore_cli::run_experiment(&cfg)?;
    println!("lambda\truns\taccuracy\trank(median)\ttime");
    for a in &report.aggregates {
        println!(
            "{:e}\t{}\t{:.4}\t{}\t{:.2}s",
            a.lambda, a.count, a.accuracy.mean, a.rank.median, a.wall_time_seconds.mean
        );
    }
    println!("report written to {}", cfg.output_dir.join("report.json").display());
    Ok(())
}

fn axes(args: &AxesArgs) -> CliResult<()> {
    let z = Embedding::new(load_matrix_csv(&args.embedding)?)?;
    let labels: Option<Vec<String>> = match &args.labels {
        Some(path) => {
            let text = fs::read_to_string(path)?;
            let labels: Vec<String> = text.lines().map(|l| l.trim().to_string()).collect();
            if labels.len() != z.n_items() {
                return Err(CliError::Data(format!(
                    "{} labels for {} items",
                    labels.len(),
                    z.n_items()
                )));
            }
            Some(labels)
        }
        None => None,
    };
    println!("axis,position,item,label,projection");
    for axis in principal_axes(&z, args.k)? {
        for (position, &item) in axis.item_order.iter().enumerate() {
            let label = labels.as_ref().map_or("", |l| l[item].as_str());
            println!(
                "{},{position},{item},{label},{:.6}",
                axis.component_index, axis.projections[item]
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::Synth(a) => synth(a),
        Command::Fit(a) => fit(a),
        Command::Eval(a) => eval(a),
        Command::Sweep(a) => sweep(a),
        Command::Axes(a) => axes(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
