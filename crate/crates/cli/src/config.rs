//! Experiment configuration, loadable from TOML or JSON.

use std::fs;
use std::path::{Path, PathBuf};

use lore_core::baselines::{DEFAULT_CANDIDATE_DIMS, DEFAULT_FOLDS};
use lore_core::datagen::GenConfig;
use lore_core::SolverConfig;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum Method {
    #[default]
    Lore,
    Unregularized,
    DimSweep,
}

/// Files that replace the synthetic generator.
///
/// Either `train` (with optional `test` and ground-truth `space`) supplies
/// triplets directly, or `matrix` supplies an item-embedding matrix whose
/// rank-`truncate_rank` approximation becomes the ground truth that
/// triplets are simulated from.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataSource {
    pub train: Option<PathBuf>,
    pub test: Option<PathBuf>,
    pub space: Option<PathBuf>,
    pub n_items: Option<usize>,
    pub matrix: Option<PathBuf>,
    pub truncate_rank: Option<usize>,
}

impl DataSource {
    pub fn is_empty(&self) -> bool {
        *self == DataSource::default()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub gen: GenConfig,
    #[serde(skip_serializing_if = "DataSource::is_empty")]
    pub data: DataSource,
    pub solver: SolverConfig,
    pub method: Method,
    pub ambient_dim: usize,
    pub seeds: Vec<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda_grid: Option<Vec<f64>>,
    pub candidate_dims: Vec<usize>,
    pub folds: usize,
    pub output_dir: PathBuf,
    /// Worker threads; 0 lets the pool decide.
    pub threads: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            gen: GenConfig::default(),
            data: DataSource::default(),
            solver: SolverConfig::default(),
            method: Method::Lore,
            ambient_dim: 15,
            seeds: vec![0],
            lambda_grid: None,
            candidate_dims: DEFAULT_CANDIDATE_DIMS.to_vec(),
            folds: DEFAULT_FOLDS,
            output_dir: PathBuf::from("lore-out"),
            threads: 0,
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
        let parsed = if is_json {
            serde_json::from_str(&text).map_err(|e| e.to_string())
        } else {
            toml::from_str(&text).map_err(|e| e.to_string())
        };
        parsed.map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> CliResult<()> {
        if self.seeds.is_empty() {
            return Err(CliError::Config("seeds must not be empty".into()));
        }
        if let Some(grid) = &self.lambda_grid {
            if self.method != Method::Lore {
                return Err(CliError::Config("lambda_grid requires method = lore".into()));
            }
            if grid.is_empty() {
                return Err(CliError::Config("lambda_grid must not be empty when given".into()));
            }
            for &l in grid {
                self.solver.with_lambda(l).validate()?;
            }
        }
        if self.ambient_dim == 0 {
            return Err(CliError::Config("ambient_dim must be positive".into()));
        }
        self.solver.validate()?;
        let d = &self.data;
        if d.train.is_some() && d.matrix.is_some() {
            return Err(CliError::Config("give either data.train or data.matrix, not both".into()));
        }
        if d.train.is_some() {
            if d.n_items.is_none() {
                return Err(CliError::Config("data.n_items is required with data.train".into()));
            }
            if d.test.is_none() {
                return Err(CliError::Config("data.test is required with data.train".into()));
            }
        } else if d.test.is_some() || d.space.is_some() || d.n_items.is_some() {
            return Err(CliError::Config("data.test, data.space and data.n_items need data.train".into()));
        }
        if d.truncate_rank.is_some() && d.matrix.is_none() {
            return Err(CliError::Config("data.truncate_rank needs data.matrix".into()));
        }
        if d.train.is_none() && d.matrix.is_none() {
            self.gen.validate()?;
        }
        Ok(())
    }

    /// The λ values to run, in ascending order.
    pub fn lambdas(&self) -> Vec<f64> {
        let mut grid = match (&self.lambda_grid, self.method) {
            (Some(g), _) => g.clone(),
            (None, Method::Lore) => vec![self.solver.lambda],
            (None, _) => vec![0.0],
        };
        grid.sort_by(f64::total_cmp);
        grid.dedup();
        grid
    }
}
