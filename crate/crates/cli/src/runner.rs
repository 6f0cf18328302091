//! generate → fit → evaluate → report, across a seed × λ grid.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use lore_core::baselines::{dim_sweep_cv, fit_unregularized};
use lore_core::datagen::{generate_space, sample_triplets, truncate_rank, GenConfig};
use lore_core::io::{load_matrix_csv, load_triplets_csv};
use lore_core::linalg;
use lore_core::metrics::{self, DEFAULT_ETA};
use lore_core::solver::fit_lore;
use lore_core::{Embedding, LoreError, MetricsReport, PerceptualSpace, TripletSet};
use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, Method};
use crate::error::{CliError, CliResult};

pub struct Dataset {
    pub train: TripletSet,
    pub test: TripletSet,
    pub space: Option<PerceptualSpace>,
}

impl Dataset {
    pub fn n_items(&self) -> usize {
        self.train.n_items()
    }
}

/// The rank-`d` approximation of an item matrix, expressed in `d` coordinates.
pub fn space_from_matrix(m: &DMatrix<f64>, d: usize) -> CliResult<PerceptualSpace> {
    let truncated = truncate_rank(m, d)?;
    let s = linalg::svd(&truncated)?;
    let mut coords = s.u.columns(0, d).into_owned();
    for (mut col, sigma) in coords.column_iter_mut().zip(s.singular_values.iter()) {
        col *= *sigma;
    }
    Ok(PerceptualSpace::new(coords)?)
}

pub fn load_dataset(cfg: &ExperimentConfig, seed: u64) -> CliResult<Dataset> {
    let data = &cfg.data;
    if let Some(train) = &data.train {
        let n = data.n_items.ok_or_else(|| CliError::Config("data.n_items is required".into()))?;
        let test = data.test.as_ref().ok_or_else(|| CliError::Config("data.test is required".into()))?;
        let space = match &data.space {
            Some(path) => Some(PerceptualSpace::new(load_matrix_csv(path)?)?),
            None => None,
        };
        if let Some(p) = &space {
            if p.n_items() != n {
                return Err(CliError::Data(format!("space has {} rows, expected {n}", p.n_items())));
            }
        }
        return Ok(Dataset {
            train: load_triplets_csv(train, n)?,
            test: load_triplets_csv(test, n)?,
            space,
        });
    }
    let gen = cfg.gen.with_seed(seed);
    let (space, gen) = match &data.matrix {
        Some(path) => {
            let m = load_matrix_csv(path)?;
            let d = data.truncate_rank.unwrap_or(m.nrows().min(m.ncols()));
            let space = space_from_matrix(&m, d)?;
            let gen = GenConfig {
                n_items: m.nrows(),
                intrinsic_rank: d,
                ..gen
            };
            (space, gen)
        }
        None => (generate_space(&gen)?, gen),
    };
    let (train, test) = sample_triplets(&space, &gen)?;
    Ok(Dataset {
        train,
        test,
        space: Some(space),
    })
}

fn optional_metric(r: lore_core::Result<f64>) -> lore_core::Result<Option<f64>> {
    match r {
        Ok(v) if v.is_finite() => Ok(Some(v)),
        Ok(_) | Err(LoreError::DegenerateEmbedding) | Err(LoreError::NonPositivePeak) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Accuracy and rank always; NPD and PSNR when ground truth is known and
/// the metric is defined for this embedding.
pub fn evaluate(
    z: &Embedding,
    test: &TripletSet,
    space: Option<&PerceptualSpace>,
    wall_time_seconds: f64,
) -> CliResult<MetricsReport> {
    let (npd, psnr_db) = match space {
        Some(p) => (
            optional_metric(metrics::normalized_procrustes_distance(p, z, DEFAULT_ETA))?,
            optional_metric(metrics::psnr(p, z, DEFAULT_ETA))?,
        ),
        None => (None, None),
    };
    Ok(MetricsReport {
        test_accuracy: metrics::triplet_accuracy(z, test)?,
        measured_rank: metrics::measured_rank(z)?,
        npd,
        psnr_db,
        wall_time_seconds,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub seed: u64,
    pub lambda: f64,
    pub method: Method,
    pub n_train: usize,
    pub n_test: usize,
    pub ambient_dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iterations_run: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub converged: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub final_objective: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_dim_cv_accuracy: Option<BTreeMap<usize, f64>>,
    pub singular_values: Vec<f64>,
    pub metrics: MetricsReport,
}

/// A finished run together with what is too bulky for the run record.
pub struct RunOutput {
    pub record: RunRecord,
    pub embedding: Embedding,
    pub objective_trace: Vec<f64>,
    pub iterate_delta_trace: Vec<f64>,
}

pub fn fit_and_evaluate(cfg: &ExperimentConfig, data: &Dataset, seed: u64, lambda: f64) -> CliResult<RunOutput> {
    let solver = cfg.solver.with_seed(seed).with_lambda(lambda);
    let n = data.n_items();
    let mut record = RunRecord {
        seed,
        lambda,
        method: cfg.method,
        n_train: data.train.len(),
        n_test: data.test.len(),
        ambient_dim: cfg.ambient_dim,
        iterations_run: None,
        converged: None,
        final_objective: None,
        per_dim_cv_accuracy: None,
        singular_values: Vec::new(),
        metrics: MetricsReport {
            test_accuracy: 0.0,
            measured_rank: 0,
            npd: None,
            psnr_db: None,
            wall_time_seconds: 0.0,
        },
    };
    let (embedding, wall, objective_trace, iterate_delta_trace) = match cfg.method {
        Method::Lore | Method::Unregularized => {
            let fit = if cfg.method == Method::Lore {
                fit_lore(&data.train, n, cfg.ambient_dim, &solver)?
            } else {
                fit_unregularized(&data.train, n, cfg.ambient_dim, &solver)?
            };
            record.iterations_run = Some(fit.iterations_run);
            record.converged = Some(fit.converged);
            record.final_objective = fit.objective_trace.last().copied();
            (fit.embedding, fit.wall_time_seconds, fit.objective_trace, fit.iterate_delta_trace)
        }
        Method::DimSweep => {
            let r = dim_sweep_cv(&data.train, n, &cfg.candidate_dims, cfg.folds, &solver)?;
            record.per_dim_cv_accuracy = Some(r.per_dim_cv_accuracy);
            (r.embedding, r.wall_time_seconds, Vec::new(), Vec::new())
        }
    };
    record.ambient_dim = embedding.ambient_dim();
    record.singular_values = linalg::singular_values(embedding.matrix())?;
    record.metrics = evaluate(&embedding, &data.test, data.space.as_ref(), wall)?;
    Ok(RunOutput {
        record,
        embedding,
        objective_trace,
        iterate_delta_trace,
    })
}

pub fn run_one(cfg: &ExperimentConfig, data: &Dataset, seed: u64, lambda: f64) -> CliResult<RunRecord> {
    fit_and_evaluate(cfg, data, seed, lambda).map(|out| out.record)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    /// Sample standard deviation; absent for a single run.
    pub std: Option<f64>,
    pub median: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = (values.len() > 1)
            .then(|| (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt());
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let mid = sorted.len() / 2;
        let median = if sorted.len().is_multiple_of(2) {
            (sorted[mid - 1] + sorted[mid]) / 2.0
        } else {
            sorted[mid]
        };
        Self { mean, std, median }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub lambda: f64,
    pub count: usize,
    pub accuracy: Summary,
    pub rank: Summary,
    pub wall_time_seconds: Summary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRecord {
    pub config: ExperimentConfig,
    pub runs: Vec<RunRecord>,
    pub aggregates: Vec<Aggregate>,
}

pub fn aggregate(runs: &[RunRecord]) -> Vec<Aggregate> {
    let mut by_lambda: BTreeMap<u64, Vec<&RunRecord>> = BTreeMap::new();
    for r in runs {
        by_lambda.entry(r.lambda.to_bits()).or_default().push(r);
    }
    let mut out: Vec<Aggregate> = by_lambda
        .into_values()
        .map(|group| {
            let pick = |f: fn(&RunRecord) -> f64| group.iter().map(|r| f(r)).collect::<Vec<_>>();
            Aggregate {
                lambda: group[0].lambda,
                count: group.len(),
                accuracy: Summary::of(&pick(|r| r.metrics.test_accuracy)),
                rank: Summary::of(&pick(|r| r.metrics.measured_rank as f64)),
                wall_time_seconds: Summary::of(&pick(|r| r.metrics.wall_time_seconds)),
            }
        })
        .collect();
    out.sort_by(|a, b| a.lambda.total_cmp(&b.lambda));
    out
}

pub fn run_file_name(seed: u64, lambda: f64) -> String {
    format!("seed-{seed}_lambda-{lambda:e}.json")
}

/// Runs every (seed, λ) pair on a worker pool. Results are ordered by
/// (seed, λ) and do not depend on the number of threads.
pub fn run_experiment(cfg: &ExperimentConfig) -> CliResult<ReportRecord> {
    cfg.validate()?;
    let mut seeds = cfg.seeds.clone();
    seeds.sort_unstable();
    seeds.dedup();
    let lambdas = cfg.lambdas();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .map_err(|e| CliError::Config(e.to_string()))?;

    let runs: Vec<RunRecord> = pool.install(|| {
        let datasets: Vec<Dataset> = seeds
            .par_iter()
            .map(|&seed| load_dataset(cfg, seed).map_err(|e| e.context(&format!("seed {seed}"))))
            .collect::<CliResult<_>>()?;
        let jobs: Vec<(usize, f64)> = (0..seeds.len())
            .flat_map(|k| lambdas.iter().map(move |&l| (k, l)))
            .collect();
        jobs.par_iter()
            .map(|&(k, lambda)| {
                run_one(cfg, &datasets[k], seeds[k], lambda)
                    .map_err(|e| e.context(&format!("seed {}, lambda {lambda}", seeds[k])))
            })
            .collect::<CliResult<Vec<_>>>()
    })?;

    let report = ReportRecord {
        config: cfg.clone(),
        aggregates: aggregate(&runs),
        runs,
    };
    write_report(&report, &cfg.output_dir)?;
    Ok(report)
}

#[derive(Serialize)]
struct CsvRow {
    seed: u64,
    lambda: f64,
    accuracy: f64,
    rank: usize,
    npd: Option<f64>,
    psnr: Option<f64>,
    time: f64,
}

pub fn write_json(value: &impl Serialize, path: &Path) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Data(e.to_string()))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

pub fn write_report(report: &ReportRecord, dir: &Path) -> CliResult<()> {
    let runs_dir: PathBuf = dir.join("runs");
    fs::create_dir_all(&runs_dir).map_err(|e| CliError::Data(format!("{}: {e}", runs_dir.display())))?;
    for r in &report.runs {
        write_json(r, &runs_dir.join(run_file_name(r.seed, r.lambda)))?;
    }
    write_json(report, &dir.join("report.json"))?;
    let csv_path = dir.join("report.csv");
    let mut w = csv::Writer::from_path(&csv_path).map_err(|e| CliError::Data(e.to_string()))?;
    for r in &report.runs {
        w.serialize(CsvRow {
            seed: r.seed,
            lambda: r.lambda,
            accuracy: r.metrics.test_accuracy,
            rank: r.metrics.measured_rank,
            npd: r.metrics.npd,
            psnr: r.metrics.psnr_db,
            time: r.metrics.wall_time_seconds,
        })
        .map_err(|e| CliError::Data(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}
