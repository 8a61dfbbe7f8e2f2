//! Problem construction and `f*` resolution for a config.

use std::fs::{self, File};
use std::io::BufReader;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use zoacc::optimizers::Reference;
use zoacc::oracle::SmoothnessConstants;
use zoacc::problems::{
    parse_libsvm, solve_reference_logistic, Dataset, LeastSquaresProblem, LogisticRegressionProblem,
    ReferenceSolution, REFERENCE_MAX_ITER,
};
use zoacc::{DenseVector, Objective};

use crate::config::{ExperimentConfig, ProblemSpec};
use crate::error::{config_err, CliResult};

#[derive(Clone, Debug)]
pub enum Problem {
    LeastSquares(LeastSquaresProblem),
    Logistic(LogisticRegressionProblem),
}

impl Objective for Problem {
    fn dim(&self) -> usize {
        match self {
            Problem::LeastSquares(p) => p.dim(),
            Problem::Logistic(p) => p.dim(),
        }
    }

    fn value(&self, x: &DenseVector) -> f64 {
        match self {
            Problem::LeastSquares(p) => p.value(x),
            Problem::Logistic(p) => p.value(x),
        }
    }

    fn gradient(&self, x: &DenseVector) -> Option<DenseVector> {
        match self {
            Problem::LeastSquares(p) => p.gradient(x),
            Problem::Logistic(p) => p.gradient(x),
        }
    }

    fn constants(&self) -> SmoothnessConstants {
        match self {
            Problem::LeastSquares(p) => p.constants(),
            Problem::Logistic(p) => p.constants(),
        }
    }
}

/// Where `f*` came from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FStarSource {
    Planted,
    Solved,
    Cache,
}

pub struct Prepared {
    pub problem: Problem,
    pub reference: Reference,
    pub f_star_source: FStarSource,
    pub reference_warning: Option<String>,
}

pub fn load_dataset(path: &Path) -> CliResult<Dataset> {
    let file = File::open(path).map_err(|e| config_err(format!("cannot open {}: {e}", path.display())))?;
    let name = path.file_stem().map_or_else(String::new, |s| s.to_string_lossy().into_owned());
    Ok(parse_libsvm(BufReader::new(file), &name, &path.display().to_string())?)
}

pub fn prepare(cfg: &ExperimentConfig) -> CliResult<Prepared> {
    match &cfg.problem {
        ProblemSpec::LeastSquares { d, p, condition, scale, seed } => {
            let ls = LeastSquaresProblem::random(*d, p.unwrap_or(*d), *seed, *condition)?.scaled(*scale);
            let x_star = ls.planted_solution().cloned();
            Ok(Prepared {
                problem: Problem::LeastSquares(ls),
                reference: Reference { f_star: 0.0, x_star },
                f_star_source: FStarSource::Planted,
                reference_warning: None,
            })
        }
        ProblemSpec::Logistic { dataset, reference_tol } => {
            let bytes = fs::read(dataset)?;
            let lr = LogisticRegressionProblem::from_dataset(load_dataset(dataset)?)?;
            let (sol, source) = cached_reference(dataset, &bytes, &lr, *reference_tol)?;
            Ok(Prepared {
                problem: Problem::Logistic(lr),
                reference: Reference {
                    f_star: sol.f_star,
                    x_star: Some(DenseVector::from_vec(sol.x.clone())),
                },
                f_star_source: source,
                reference_warning: sol.warning,
            })
        }
    }
}

/// `<dataset>.fstar.json`.
pub fn cache_path(dataset: &Path) -> PathBuf {
    let mut name = dataset.file_name().unwrap_or_default().to_os_string();
    name.push(".fstar.json");
    dataset.with_file_name(name)
}

#[derive(Debug, Serialize, Deserialize)]
struct CachedReference {
    sha256: String,
    tol: f64,
    solution: ReferenceSolution,
    version: String,
}

pub fn checksum(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn cached_reference(
    dataset: &Path,
    bytes: &[u8],
    problem: &LogisticRegressionProblem,
    tol: f64,
) -> CliResult<(ReferenceSolution, FStarSource)> {
    let sha256 = checksum(bytes);
    let path = cache_path(dataset);
    if let Ok(text) = fs::read_to_string(&path) {
        match serde_json::from_str::<CachedReference>(&text) {
            Ok(c) if c.sha256 == sha256 && c.tol == tol && c.solution.x.len() == problem.dim() => {
                return Ok((c.solution, FStarSource::Cache));
            }
            Ok(_) => log::info!("stale f* cache {}, recomputing", path.display()),
            Err(e) => log::warn!("ignoring unreadable f* cache {}: {e}", path.display()),
        }
    }
    let solution = solve_reference_logistic(problem, tol, REFERENCE_MAX_ITER)?;
    if let Some(w) = &solution.warning {
        log::warn!("{}: {w}", dataset.display());
    }
    let entry = CachedReference {
        sha256,
        tol,
        solution,
        version: env!("CARGO_PKG_VERSION").to_string(),
    };
    if let Err(e) = fs::write(&path, serde_json::to_string_pretty(&entry)?) {
        log::warn!("could not write f* cache {}: {e}", path.display());
    }
    Ok((entry.solution, FStarSource::Solved))
}
