//! Zero-order gradient estimates.
//!
//! The kernel estimator draws `e` uniform on the unit sphere and `r` uniform on
//! `[-1, 1]`, queries the oracle at `x ± h r e` (two independent noise draws)
//! and returns `d (f~(x + h r e) - f~(x - h r e)) / (2h) K(r) e`. The baseline
//! drops the kernel and `r`: `d (f~(x + h e) - f~(x - h e)) / (2h) e`.

use serde::{Deserialize, Serialize};

use crate::kernels::KernelSpec;
use crate::linalg::pairwise_sum;
use crate::oracle::{Objective, ZeroOrderOracle};
use crate::{DenseVector, Error, Result, RngStream};

/// MC diagnostics refuse to run with fewer samples than this.
pub const MIN_MC_SAMPLES: usize = 1_000;

const MC_CHUNK: u64 = 1_024;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum EstimatorMode {
    KernelOnepoint { kernel: KernelSpec },
    CentralL2,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    /// Smoothing radius.
    pub h: f64,
    /// Samples averaged per estimate.
    pub batch: usize,
    #[serde(flatten)]
    pub mode: EstimatorMode,
}

impl EstimatorConfig {
    pub fn kernel(kernel: KernelSpec, h: f64, batch: usize) -> Self {
        Self {
            h,
            batch,
            mode: EstimatorMode::KernelOnepoint { kernel },
        }
    }

    pub fn central_l2(h: f64, batch: usize) -> Self {
        Self {
            h,
            batch,
            mode: EstimatorMode::CentralL2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.h > 0.0 && self.h.is_finite()) {
            return Err(Error::usage(format!("smoothing h must be positive, got {}", self.h)));
        }
        if self.batch == 0 {
            return Err(Error::usage("batch size must be at least 1"));
        }
        if let EstimatorMode::KernelOnepoint { kernel } = &self.mode {
            kernel.check_structure()?;
        }
        Ok(())
    }

    /// One estimator sample (two oracle calls).
    pub fn sample<F: Objective>(
        &self,
        oracle: &ZeroOrderOracle<F>,
        x: &DenseVector,
        rng: &mut RngStream,
    ) -> Result<DenseVector> {
        match &self.mode {
            EstimatorMode::KernelOnepoint { kernel } => kernel_gradient_sample(oracle, kernel, x, self.h, rng),
            EstimatorMode::CentralL2 => central_l2_sample(oracle, x, self.h, rng),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GradientEstimate {
    pub vector: DenseVector,
    pub samples_used: usize,
    pub oracle_calls: u64,
    pub h_used: f64,
    /// Set when `h` is small enough relative to `x` that the finite
    /// difference is dominated by rounding.
    pub cancellation_warning: bool,
}

/// Uniform direction on the unit sphere of `R^d` (normalized Gaussian).
pub fn sample_sphere(d: usize, rng: &mut RngStream) -> Result<DenseVector> {
    if d == 0 {
        return Err(Error::usage("sphere dimension must be at least 1"));
    }
    loop {
        let g = DenseVector::from_fn(d, |_, _| rng.standard_normal());
        let n = g.norm();
        if n > 0.0 {
            return Ok(g / n);
        }
    }
}

fn check_inputs(x: &DenseVector, h: f64) -> Result<()> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::usage(format!("smoothing h must be positive, got {h}")));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::usage("estimate requested at a non-finite point"));
    }
    Ok(())
}

pub fn kernel_gradient_sample<F: Objective>(
    oracle: &ZeroOrderOracle<F>,
    kernel: &KernelSpec,
    x: &DenseVector,
    h: f64,
    rng: &mut RngStream,
) -> Result<DenseVector> {
    check_inputs(x, h)?;
    let d = x.len();
    let e = sample_sphere(d, rng)?;
    let r = rng.uniform(-1.0, 1.0);
    let step = (h * r) * &e;
    let plus = oracle.query(&(x + &step), rng)?;
    let minus = oracle.query(&(x - &step), rng)?;
    let scale = d as f64 * (plus - minus) / (2.0 * h) * kernel.value(r);
    Ok(e * scale)
}

pub fn central_l2_sample<F: Objective>(
    oracle: &ZeroOrderOracle<F>,
    x: &DenseVector,
    h: f64,
    rng: &mut RngStream,
) -> Result<DenseVector> {
    check_inputs(x, h)?;
    let d = x.len();
    let e = sample_sphere(d, rng)?;
    let step = h * &e;
    let plus = oracle.query(&(x + &step), rng)?;
    let minus = oracle.query(&(x - &step), rng)?;
    let scale = d as f64 * (plus - minus) / (2.0 * h);
    Ok(e * scale)
}

/// Runs `f(i)` for `i in 0..n` and returns the results in index order.
pub(crate) fn map_indexed<T, F>(n: u64, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        if n > 1 {
            return (0..n).into_par_iter().map(f).collect();
        }
    }
    (0..n).map(f).collect()
}

/// Mean of `cfg.batch` independent samples. Sample `i` draws only from
/// `rng.split(i)` and the partial sums are reduced in a fixed tree, so the
/// result does not depend on the worker count.
pub fn batched_estimate<F: Objective>(
    oracle: &ZeroOrderOracle<F>,
    cfg: &EstimatorConfig,
    x: &DenseVector,
    rng: &RngStream,
) -> Result<GradientEstimate> {
    cfg.validate()?;
    if x.len() != oracle.dim() {
        return Err(Error::usage(format!(
            "estimate point has dimension {}, oracle expects {}",
            x.len(),
            oracle.dim()
        )));
    }
    let samples = map_indexed(cfg.batch as u64, |i| cfg.sample(oracle, x, &mut rng.split(i)))?;
    let sum = pairwise_sum(samples).expect("batch is non-empty");
    let cancellation_warning = cfg.h < 1e-3 * f64::EPSILON.sqrt() * x.norm().max(1.0);
    if cancellation_warning {
        log::warn!(
            "smoothing h = {:e} is at the rounding scale of x; finite differences may cancel",
            cfg.h
        );
    }
    Ok(GradientEstimate {
        vector: sum / cfg.batch as f64,
        samples_used: cfg.batch,
        oracle_calls: 2 * cfg.batch as u64,
        h_used: cfg.h,
        cancellation_warning,
    })
}

#[derive(Clone, Debug)]
struct Moments {
    n: u64,
    sum: DenseVector,
    sum_sq: DenseVector,
    norm_sq_sum: f64,
    norm_sq_sq_sum: f64,
}

impl Moments {
    fn zeros(d: usize) -> Self {
        Self {
            n: 0,
            sum: DenseVector::zeros(d),
            sum_sq: DenseVector::zeros(d),
            norm_sq_sum: 0.0,
            norm_sq_sq_sum: 0.0,
        }
    }

    fn push(&mut self, g: &DenseVector) {
        let ns = g.norm_squared();
        self.n += 1;
        self.sum += g;
        self.sum_sq += g.component_mul(g);
        self.norm_sq_sum += ns;
        self.norm_sq_sq_sum += ns * ns;
    }

    fn merge(mut self, other: Moments) -> Self {
        self.n += other.n;
        self.sum += other.sum;
        self.sum_sq += other.sum_sq;
        self.norm_sq_sum += other.norm_sq_sum;
        self.norm_sq_sq_sum += other.norm_sq_sq_sum;
        self
    }
}

// Single-sample statistics over `n` draws, chunked for parallelism and merged
// in a fixed pairwise order.
fn single_sample_moments<F: Objective>(
    oracle: &ZeroOrderOracle<F>,
    cfg: &EstimatorConfig,
    x: &DenseVector,
    n: usize,
    rng: &RngStream,
) -> Result<Moments> {
    cfg.validate()?;
    if n < MIN_MC_SAMPLES {
        return Err(Error::usage(format!(
            "Monte-Carlo diagnostics need at least {MIN_MC_SAMPLES} samples, got {n}"
        )));
    }
    let n = n as u64;
    let chunks = n.div_ceil(MC_CHUNK);
    let mut parts = map_indexed(chunks, |c| {
        let mut m = Moments::zeros(x.len());
        for i in c * MC_CHUNK..((c + 1) * MC_CHUNK).min(n) {
            m.push(&cfg.sample(oracle, x, &mut rng.split(i))?);
        }
        Ok(m)
    })?;
    while parts.len() > 1 {
        let mut next = Vec::with_capacity(parts.len().div_ceil(2));
        let mut it = parts.into_iter();
        while let Some(a) = it.next() {
            next.push(match it.next() {
                Some(b) => a.merge(b),
                None => a,
            });
        }
        parts = next;
    }
    Ok(parts.pop().expect("at least one chunk"))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BiasReport {
    pub mean: Vec<f64>,
    /// `‖mean - reference‖`.
    pub bias: f64,
    /// Standard error of the mean estimate, `sqrt(sum_j Var(g_j) / n)`.
    pub stderr: f64,
    pub n_mc: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub measured: f64,
    pub bound: f64,
    /// Slack added for Monte-Carlo error (3 standard errors).
    pub mc_slack: f64,
    pub calibration: f64,
    pub passed: bool,
}

impl BiasReport {
    /// `bias <= c kappa_beta L_beta h^(beta-1) + 3 stderr`.
    pub fn check_bound(&self, calibration: f64, kappa_beta: f64, l_beta: f64, beta: f64, h: f64) -> BoundCheck {
        let bound = calibration * bias_bound(kappa_beta, l_beta, beta, h);
        let mc_slack = 3.0 * self.stderr;
        BoundCheck {
            measured: self.bias,
            bound,
            mc_slack,
            calibration,
            passed: self.bias <= bound + mc_slack,
        }
    }
}

/// Up-to-constant bias bound `kappa_beta L_beta h^(beta - 1)`.
pub fn bias_bound(kappa_beta: f64, l_beta: f64, beta: f64, h: f64) -> f64 {
    kappa_beta * l_beta * h.powf(beta - 1.0)
}

/// Second-moment bound `4 d kappa ‖∇f‖^2 + 4 d kappa L^2 h^2 + kappa d^2 Δ^2 / h^2`.
pub fn second_moment_bound(d: usize, kappa: f64, grad_norm_sq: f64, lipschitz: f64, h: f64, delta: f64) -> f64 {
    let d = d as f64;
    4.0 * d * kappa * grad_norm_sq + 4.0 * d * kappa * lipschitz * lipschitz * h * h + kappa * d * d * delta * delta / (h * h)
}

/// Monte-Carlo bias of a single estimator sample against a known gradient.
pub fn estimate_bias<F: Objective>(
    oracle: &ZeroOrderOracle<F>,
    cfg: &EstimatorConfig,
    x: &DenseVector,
    n_mc: usize,
    reference_grad: &DenseVector,
    rng: &RngStream,
) -> Result<BiasReport> {
    if reference_grad.len() != x.len() {
        return Err(Error::usage("reference gradient has the wrong dimension"));
    }
    let m = single_sample_moments(oracle, cfg, x, n_mc, rng)?;
    let n = m.n as f64;
    let mean = &m.sum / n;
    let var_sum: f64 = m
        .sum_sq
        .iter()
        .zip(mean.iter())
        .map(|(s2, mu)| (s2 / n - mu * mu).max(0.0) * n / (n - 1.0))
        .sum();
    Ok(BiasReport {
        bias: (&mean - reference_grad).norm(),
        stderr: (var_sum / n).sqrt(),
        mean: mean.iter().copied().collect(),
        n_mc,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SecondMomentReport {
    /// Sample mean of `‖g‖^2`.
    pub value: f64,
    pub stderr: f64,
    pub n_mc: usize,
}

impl SecondMomentReport {
    pub fn check_bound(&self, bound: f64) -> BoundCheck {
        let mc_slack = 3.0 * self.stderr;
        BoundCheck {
            measured: self.value,
            bound,
            mc_slack,
            calibration: 1.0,
            passed: self.value <= bound + mc_slack,
        }
    }
}

/// Monte-Carlo `E‖g‖^2` of a single estimator sample.
pub fn estimate_second_moment<F: Objective>(
    oracle: &ZeroOrderOracle<F>,
    cfg: &EstimatorConfig,
    x: &DenseVector,
    n_mc: usize,
    rng: &RngStream,
) -> Result<SecondMomentReport> {
    let m = single_sample_moments(oracle, cfg, x, n_mc, rng)?;
    let n = m.n as f64;
    let mean = m.norm_sq_sum / n;
    let var = (m.norm_sq_sq_sum / n - mean * mean).max(0.0) * n / (n - 1.0);
    Ok(SecondMomentReport {
        value: mean,
        stderr: (var / n).sqrt(),
        n_mc,
    })
}
