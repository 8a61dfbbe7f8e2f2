//! JSON experiment configuration.

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use zoacc::estimators::EstimatorConfig;
use zoacc::kernels::KernelSpec;
use zoacc::NoiseModel;

use crate::error::{config_err, CliResult};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ProblemSpec {
    /// Random consistent system, see `LeastSquaresProblem::random`.
    LeastSquares {
        d: usize,
        /// Rows; defaults to `d`.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        p: Option<usize>,
        #[serde(default = "one")]
        condition: f64,
        #[serde(default = "one")]
        scale: f64,
        #[serde(default)]
        seed: u64,
    },
    /// Logistic regression on a LIBSVM file.
    Logistic {
        dataset: PathBuf,
        #[serde(default = "reference_tol")]
        reference_tol: f64,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    #[value(name = "zo_acc_sgd")]
    ZoAccSgd,
    #[value(name = "zo_sgd")]
    ZoSgd,
}

impl Method {
    pub fn id(self) -> &'static str {
        match self {
            Method::ZoAccSgd => "zo_acc_sgd",
            Method::ZoSgd => "zo_sgd",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    #[value(name = "kernel_onepoint")]
    KernelOnepoint,
    #[value(name = "central_l2")]
    CentralL2,
}

/// Relative paths are resolved against the directory holding the config file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemSpec,
    pub method: Method,
    #[serde(default = "kernel_onepoint")]
    pub estimator: EstimatorKind,
    #[serde(default = "three")]
    pub beta: u32,
    /// Custom kernel (`{"name", "beta_targets", "coefficients"}`) instead of the Legendre one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel_file: Option<PathBuf>,
    pub batch: usize,
    pub h: f64,
    /// Required for `zo_sgd`; `zo_acc_sgd` defaults to `1 / (rho_B L)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    /// Overrides the problem's smoothness constant.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lipschitz: Option<f64>,
    #[serde(default = "no_noise")]
    pub noise: NoiseModel,
    pub iterations: usize,
    #[serde(default = "one_usize")]
    pub record_stride: usize,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    /// Starting point; zeros when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_gap: Option<f64>,
    #[serde(default = "default_output")]
    pub output: PathBuf,
}

fn one() -> f64 {
    1.0
}
fn one_usize() -> usize {
    1
}
fn three() -> u32 {
    3
}
fn reference_tol() -> f64 {
    1e-10
}
fn kernel_onepoint() -> EstimatorKind {
    EstimatorKind::KernelOnepoint
}
fn no_noise() -> NoiseModel {
    NoiseModel::None
}
fn default_seeds() -> Vec<u64> {
    vec![0]
}
fn default_output() -> PathBuf {
    PathBuf::from("out")
}

/// Custom kernel file contents.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelFile {
    pub name: String,
    pub beta_targets: Vec<u32>,
    pub coefficients: Vec<f64>,
}

pub fn load_kernel_file(path: &Path) -> CliResult<KernelSpec> {
    let text = fs::read_to_string(path)
        .map_err(|e| config_err(format!("cannot read kernel file {}: {e}", path.display())))?;
    let file: KernelFile = serde_json::from_str(&text)
        .map_err(|e| config_err(format!("invalid kernel file {}: {e}", path.display())))?;
    Ok(KernelSpec::custom(file.name, file.beta_targets, file.coefficients)?)
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

impl ExperimentConfig {
    /// Reads, resolves relative paths and validates.
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| config_err(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg: Self = serde_json::from_str(&text)
            .map_err(|e| config_err(format!("invalid config {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.resolve_paths(base);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        if let ProblemSpec::Logistic { dataset, .. } = &mut self.problem {
            *dataset = resolve(base, dataset);
        }
        if let Some(k) = &mut self.kernel_file {
            *k = resolve(base, k);
        }
        self.output = resolve(base, &self.output);
    }

    pub fn validate(&self) -> CliResult<()> {
        match &self.problem {
            ProblemSpec::LeastSquares { d, p, condition, scale, .. } => {
                if *d == 0 || p.is_some_and(|p| p == 0) {
                    return Err(config_err("least squares needs d, p >= 1"));
                }
                if !(*condition >= 1.0 && condition.is_finite()) {
                    return Err(config_err(format!("condition must be >= 1, got {condition}")));
                }
                if !(*scale > 0.0 && scale.is_finite()) {
                    return Err(config_err(format!("scale must be positive, got {scale}")));
                }
            }
            ProblemSpec::Logistic { dataset, reference_tol } => {
                if !dataset.is_file() {
                    return Err(config_err(format!("dataset {} does not exist", dataset.display())));
                }
                if reference_tol.is_nan() || *reference_tol <= 0.0 {
                    return Err(config_err("reference_tol must be positive"));
                }
            }
        }
        if let Some(k) = &self.kernel_file {
            if !k.is_file() {
                return Err(config_err(format!("kernel file {} does not exist", k.display())));
            }
        }
        if self.batch == 0 {
            return Err(config_err("batch must be at least 1"));
        }
        if !(self.h > 0.0 && self.h.is_finite()) {
            return Err(config_err(format!("h must be positive, got {}", self.h)));
        }
        if let Some(eta) = self.eta {
            if !(eta > 0.0 && eta.is_finite()) {
                return Err(config_err(format!("eta must be positive, got {eta}")));
            }
        } else if self.method == Method::ZoSgd {
            return Err(config_err("zo_sgd needs an explicit eta"));
        }
        if let Some(l) = self.lipschitz {
            if !(l > 0.0 && l.is_finite()) {
                return Err(config_err(format!("lipschitz must be positive, got {l}")));
            }
        }
        self.noise.validate()?;
        if self.record_stride == 0 {
            return Err(config_err("record_stride must be at least 1"));
        }
        if self.seeds.is_empty() {
            return Err(config_err("seeds must not be empty"));
        }
        if self.seeds.iter().collect::<HashSet<_>>().len() != self.seeds.len() {
            return Err(config_err("seeds must be distinct"));
        }
        if let Some(t) = self.target_gap {
            if t.is_nan() || t <= 0.0 {
                return Err(config_err("target_gap must be positive"));
            }
        }
        if self.estimator == EstimatorKind::KernelOnepoint && self.kernel_file.is_none() {
            KernelSpec::legendre(self.beta)?;
        }
        Ok(())
    }

    pub fn kernel(&self) -> CliResult<KernelSpec> {
        match &self.kernel_file {
            Some(path) => load_kernel_file(path),
            None => Ok(KernelSpec::legendre(self.beta)?),
        }
    }

    pub fn estimator_config(&self) -> CliResult<EstimatorConfig> {
        Ok(match self.estimator {
            EstimatorKind::KernelOnepoint => EstimatorConfig::kernel(self.kernel()?, self.h, self.batch),
            EstimatorKind::CentralL2 => EstimatorConfig::central_l2(self.h, self.batch),
        })
    }
}
