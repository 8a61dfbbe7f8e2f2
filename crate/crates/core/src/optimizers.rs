//! Accelerated SGD for biased gradient oracles, and its zero-order instance.
//!
//! Iteration `k` with step `eta` and schedule `(gamma, alpha)`:
//!
//! ```text
//! g       = estimate(y_k)
//! x_{k+1} = y_k - eta g
//! z_{k+1} = z_k - gamma_{k+1} eta g
//! y_{k+1} = alpha z_{k+1} + (1 - alpha) x_{k+1}
//! ```
//!
//! with `gamma_k = (1/rho + sqrt(1/rho^2 + 4 gamma_{k-1}^2)) / 2`,
//! `gamma_0 = 0`, `a_{k+1} = gamma_k sqrt(eta rho)` and
//! `alpha_k = gamma_k eta / (gamma_k eta + a_k^2)`.

use serde::{Deserialize, Serialize};

use crate::estimators::{batched_estimate, EstimatorConfig, EstimatorMode};
use crate::kernels::Convention;
use crate::oracle::{NoiseModel, Objective, ZeroOrderOracle};
use crate::{DenseVector, Error, Result, RngStream};

/// Iterates farther than this multiple of `1 + ‖x_0‖` count as diverged.
pub const DIVERGENCE_RADIUS: f64 = 1e6;

/// `max{1, 4 d kappa / B}`.
pub fn rho_b(d: usize, kappa: f64, batch: usize) -> f64 {
    (4.0 * d as f64 * kappa / batch as f64).max(1.0)
}

/// Source of (possibly biased, possibly stochastic) gradients.
pub trait GradientProvider: Sync {
    fn dim(&self) -> usize;

    /// Gradient estimate at `x` and the number of oracle calls it cost.
    fn estimate(&self, x: &DenseVector, rng: &RngStream) -> Result<(DenseVector, u64)>;
}

/// The analytic gradient; costs no oracle calls.
pub struct ExactGradient<'a, F: ?Sized>(pub &'a F);

impl<F: Objective + ?Sized> GradientProvider for ExactGradient<'_, F> {
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn estimate(&self, x: &DenseVector, _rng: &RngStream) -> Result<(DenseVector, u64)> {
        let g = self
            .0
            .gradient(x)
            .ok_or_else(|| Error::usage("objective has no analytic gradient"))?;
        Ok((g, 0))
    }
}

/// Analytic gradient plus a fixed bias vector `b`, so `‖E g - ∇f‖ = ‖b‖`.
pub struct BiasedGradient<'a, F: ?Sized> {
    pub objective: &'a F,
    pub bias: DenseVector,
}

impl<F: Objective + ?Sized> GradientProvider for BiasedGradient<'_, F> {
    fn dim(&self) -> usize {
        self.objective.dim()
    }

    fn estimate(&self, x: &DenseVector, rng: &RngStream) -> Result<(DenseVector, u64)> {
        let (g, calls) = ExactGradient(self.objective).estimate(x, rng)?;
        Ok((g + &self.bias, calls))
    }
}

/// Batched zero-order estimate through a noisy oracle.
pub struct ZeroOrderGradient<'a, F> {
    pub oracle: &'a ZeroOrderOracle<F>,
    pub config: EstimatorConfig,
}

impl<F: Objective> GradientProvider for ZeroOrderGradient<'_, F> {
    fn dim(&self) -> usize {
        self.oracle.dim()
    }

    fn estimate(&self, x: &DenseVector, rng: &RngStream) -> Result<(DenseVector, u64)> {
        let est = batched_estimate(self.oracle, &self.config, x, rng)?;
        Ok((est.vector, est.oracle_calls))
    }
}

/// Step size and momentum schedule. `zeta` and `b` of the general scheme are
/// fixed to 1 (convex, no strong-convexity term).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AccSgdParams {
    pub eta: f64,
    pub rho_b: f64,
    pub lipschitz: f64,
    pub gamma: f64,
    pub a: f64,
    pub alpha: f64,
    pub k: usize,
}

impl AccSgdParams {
    /// Fresh schedule at `k = 0`. `eta` defaults to `1 / (rho_b L)`.
    pub fn new(rho_b: f64, lipschitz: f64, eta: Option<f64>) -> Result<Self> {
        if !(rho_b >= 1.0 && rho_b.is_finite()) {
            return Err(Error::usage(format!("rho_B must be >= 1, got {rho_b}")));
        }
        if !(lipschitz > 0.0 && lipschitz.is_finite()) {
            return Err(Error::usage(format!("L must be positive, got {lipschitz}")));
        }
        let eta = eta.unwrap_or(1.0 / (rho_b * lipschitz));
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(Error::usage(format!("step size must be positive, got {eta}")));
        }
        Ok(Self {
            eta,
            rho_b,
            lipschitz,
            gamma: 0.0,
            a: 0.0,
            alpha: 0.0,
            k: 0,
        })
    }

    /// `(gamma_k, a_k, alpha_k) -> (gamma_{k+1}, a_{k+1}, alpha_{k+1})`.
    pub fn advance(&self) -> Self {
        let inv = 1.0 / self.rho_b;
        let gamma = 0.5 * (inv + (inv * inv + 4.0 * self.gamma * self.gamma).sqrt());
        let a = self.gamma * (self.eta * self.rho_b).sqrt();
        let alpha = gamma * self.eta / (gamma * self.eta + a * a);
        Self {
            gamma,
            a,
            alpha,
            k: self.k + 1,
            ..*self
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AccSgdState {
    pub x: DenseVector,
    pub y: DenseVector,
    pub z: DenseVector,
    pub k: usize,
}

impl AccSgdState {
    pub fn new(x0: DenseVector) -> Self {
        Self {
            y: x0.clone(),
            z: x0.clone(),
            x: x0,
            k: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub iteration: usize,
    pub oracle_calls: u64,
    pub f_gap: f64,
    pub wall_ms: f64,
    pub seed: u64,
    /// `‖z_k - y_k‖`, accelerated runs only.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub z_minus_y: Option<f64>,
    /// `‖z_k - x*‖` when the minimizer is known.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub z_minus_opt: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum RunStatus {
    Completed,
    TargetReached { iteration: usize },
    Diverged { iteration: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub method: String,
    pub seed: u64,
    pub records: Vec<TraceRecord>,
    pub status: RunStatus,
    /// Last finite `x_k`.
    pub final_x: Vec<f64>,
}

impl RunTrace {
    pub fn final_gap(&self) -> f64 {
        self.records.last().map_or(f64::NAN, |r| r.f_gap)
    }

    pub fn diverged(&self) -> bool {
        matches!(self.status, RunStatus::Diverged { .. })
    }

    /// First recorded iteration whose gap is at most `gap`.
    pub fn iterations_to(&self, gap: f64) -> Option<usize> {
        self.records.iter().find(|r| r.f_gap <= gap).map(|r| r.iteration)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StopRule {
    pub max_iters: usize,
    /// Record every `record_stride` iterations (the last one is always recorded).
    pub record_stride: usize,
    /// Stop early once `f(x_k) - f* <= target_gap`; checked every iteration.
    pub target_gap: Option<f64>,
}

impl StopRule {
    pub fn iterations(max_iters: usize, record_stride: usize) -> Self {
        Self {
            max_iters,
            record_stride,
            target_gap: None,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.record_stride == 0 {
            return Err(Error::usage("record stride must be at least 1"));
        }
        Ok(())
    }
}

/// What the trace measures progress against.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Reference {
    pub f_star: f64,
    pub x_star: Option<DenseVector>,
}

impl Reference {
    pub fn value(f_star: f64) -> Self {
        Self { f_star, x_star: None }
    }
}

/// One accelerated step; also returns the oracle calls it spent.
pub fn acc_sgd_step<P: GradientProvider + ?Sized>(
    state: &AccSgdState,
    params: &AccSgdParams,
    provider: &P,
    rng: &RngStream,
) -> Result<(AccSgdState, AccSgdParams, u64)> {
    if state.y.len() != provider.dim() {
        return Err(Error::usage("state and gradient provider dimensions differ"));
    }
    let (g, calls) = provider.estimate(&state.y, rng)?;
    let next = params.advance();
    let x = &state.y - params.eta * &g;
    let z = &state.z - (next.gamma * params.eta) * &g;
    let y = next.alpha * &z + (1.0 - next.alpha) * &x;
    let stepped = AccSgdState {
        x,
        y,
        z,
        k: state.k + 1,
    };
    if !is_finite(&stepped.x) || !is_finite(&stepped.y) || !is_finite(&stepped.z) {
        return Err(Error::Divergence {
            iteration: stepped.k,
            last_finite: state.x.iter().copied().collect(),
        });
    }
    Ok((stepped, next, calls))
}

fn is_finite(v: &DenseVector) -> bool {
    v.iter().all(|x| x.is_finite())
}

struct Clock {
    #[cfg(not(target_arch = "wasm32"))]
    start: std::time::Instant,
}

impl Clock {
    fn start() -> Self {
        Self {
            #[cfg(not(target_arch = "wasm32"))]
            start: std::time::Instant::now(),
        }
    }

    fn elapsed_ms(&self) -> f64 {
        #[cfg(not(target_arch = "wasm32"))]
        {
            self.start.elapsed().as_secs_f64() * 1e3
        }
        #[cfg(target_arch = "wasm32")]
        {
            0.0
        }
    }
}

// Shared loop for both methods. `step` maps (k, x_k-view) to the next state.
struct Recorder<'a, F: ?Sized> {
    objective: &'a F,
    reference: &'a Reference,
    stop: StopRule,
    seed: u64,
    clock: Clock,
    records: Vec<TraceRecord>,
    radius: f64,
}

impl<'a, F: Objective + ?Sized> Recorder<'a, F> {
    fn new(objective: &'a F, reference: &'a Reference, stop: StopRule, seed: u64, x0: &DenseVector) -> Result<Self> {
        stop.validate()?;
        if x0.len() != objective.dim() {
            return Err(Error::usage(format!(
                "x0 has dimension {}, objective expects {}",
                x0.len(),
                objective.dim()
            )));
        }
        Ok(Self {
            objective,
            reference,
            stop,
            seed,
            clock: Clock::start(),
            records: Vec::new(),
            radius: DIVERGENCE_RADIUS * (1.0 + x0.norm()),
        })
    }

    fn gap(&self, x: &DenseVector) -> f64 {
        self.objective.value(x) - self.reference.f_star
    }

    fn record(&mut self, k: usize, calls: u64, x: &DenseVector, zy: Option<(&DenseVector, &DenseVector)>) -> f64 {
        let f_gap = self.gap(x);
        let (z_minus_y, z_minus_opt) = match zy {
            Some((z, y)) => (
                Some((z - y).norm()),
                self.reference.x_star.as_ref().map(|xs| (z - xs).norm()),
            ),
            None => (None, None),
        };
        self.records.push(TraceRecord {
            iteration: k,
            oracle_calls: calls,
            f_gap,
            wall_ms: self.clock.elapsed_ms(),
            seed: self.seed,
            z_minus_y,
            z_minus_opt,
        });
        f_gap
    }

    fn should_record(&self, k: usize) -> bool {
        k.is_multiple_of(self.stop.record_stride) || k == self.stop.max_iters
    }

    fn escaped(&self, x: &DenseVector) -> bool {
        x.norm() > self.radius
    }

    fn finish(self, method: &str, status: RunStatus, final_x: &DenseVector) -> RunTrace {
        RunTrace {
            method: method.to_string(),
            seed: self.seed,
            records: self.records,
            status,
            final_x: final_x.iter().copied().collect(),
        }
    }
}

/// Accelerated SGD driven by any gradient provider. `objective` is only used
/// to monitor `f(x_k) - f*` for the trace.
pub fn run_acc_sgd<F, P>(
    objective: &F,
    provider: &P,
    params: AccSgdParams,
    x0: DenseVector,
    stop: StopRule,
    seed: u64,
    reference: &Reference,
) -> Result<RunTrace>
where
    F: Objective + ?Sized,
    P: GradientProvider + ?Sized,
{
    const METHOD: &str = "zo_acc_sgd";
    let mut rec = Recorder::new(objective, reference, stop, seed, &x0)?;
    let root = RngStream::new(seed);
    let mut state = AccSgdState::new(x0);
    let mut params = params;
    let mut calls = 0u64;
    let gap0 = rec.record(0, 0, &state.x, Some((&state.z, &state.y)));
    if stop.target_gap.is_some_and(|t| gap0 <= t) {
        return Ok(rec.finish(METHOD, RunStatus::TargetReached { iteration: 0 }, &state.x));
    }
    for k in 0..stop.max_iters {
        let (next, next_params, spent) = match acc_sgd_step(&state, &params, provider, &root.split(k as u64)) {
            Ok(v) => v,
            Err(Error::Divergence { iteration, .. }) => {
                return Ok(rec.finish(METHOD, RunStatus::Diverged { iteration }, &state.x));
            }
            Err(e) => return Err(e),
        };
        calls += spent;
        if rec.escaped(&next.x) {
            rec.record(k + 1, calls, &next.x, Some((&next.z, &next.y)));
            return Ok(rec.finish(METHOD, RunStatus::Diverged { iteration: k + 1 }, &state.x));
        }
        state = next;
        params = next_params;
        let k1 = k + 1;
        if let Some(target) = stop.target_gap {
            if rec.gap(&state.x) <= target {
                rec.record(k1, calls, &state.x, Some((&state.z, &state.y)));
                return Ok(rec.finish(METHOD, RunStatus::TargetReached { iteration: k1 }, &state.x));
            }
        }
        if rec.should_record(k1) {
            rec.record(k1, calls, &state.x, Some((&state.z, &state.y)));
        }
    }
    Ok(rec.finish(METHOD, RunStatus::Completed, &state.x))
}

/// Plain (unaccelerated) SGD `x_{k+1} = x_k - eta g_k`.
pub fn run_sgd<F, P>(
    objective: &F,
    provider: &P,
    step_size: f64,
    x0: DenseVector,
    stop: StopRule,
    seed: u64,
    reference: &Reference,
) -> Result<RunTrace>
where
    F: Objective + ?Sized,
    P: GradientProvider + ?Sized,
{
    const METHOD: &str = "zo_sgd";
    if !(step_size > 0.0 && step_size.is_finite()) {
        return Err(Error::usage(format!("step size must be positive, got {step_size}")));
    }
    let mut rec = Recorder::new(objective, reference, stop, seed, &x0)?;
    let root = RngStream::new(seed);
    let mut x = x0;
    let mut calls = 0u64;
    let gap0 = rec.record(0, 0, &x, None);
    if stop.target_gap.is_some_and(|t| gap0 <= t) {
        return Ok(rec.finish(METHOD, RunStatus::TargetReached { iteration: 0 }, &x));
    }
    for k in 0..stop.max_iters {
        let (g, spent) = provider.estimate(&x, &root.split(k as u64))?;
        calls += spent;
        let next = &x - step_size * g;
        let k1 = k + 1;
        if !is_finite(&next) || rec.escaped(&next) {
            if is_finite(&next) {
                rec.record(k1, calls, &next, None);
            }
            return Ok(rec.finish(METHOD, RunStatus::Diverged { iteration: k1 }, &x));
        }
        x = next;
        if let Some(target) = stop.target_gap {
            if rec.gap(&x) <= target {
                rec.record(k1, calls, &x, None);
                return Ok(rec.finish(METHOD, RunStatus::TargetReached { iteration: k1 }, &x));
            }
        }
        if rec.should_record(k1) {
            rec.record(k1, calls, &x, None);
        }
    }
    Ok(rec.finish(METHOD, RunStatus::Completed, &x))
}

/// `rho_B` for an estimator: `max{1, 4 d kappa / B}` with the
/// expectation-convention `kappa` of the kernel at its largest served beta.
/// The plain central-difference estimator has `E‖g‖^2 <= 2 d ‖∇f‖^2 + ...`,
/// i.e. it behaves like `kappa = 1/2`.
pub fn estimator_rho_b(d: usize, config: &EstimatorConfig) -> Result<f64> {
    let kappa = match &config.mode {
        EstimatorMode::KernelOnepoint { kernel } => {
            let beta = kernel.beta_targets.iter().copied().max().unwrap_or(2) as f64;
            kernel
                .compute_constants(beta, 64)?
                .kappa(Convention::Expectation)
        }
        EstimatorMode::CentralL2 => 0.5,
    };
    Ok(rho_b(d, kappa, config.batch))
}

/// Accelerated zero-order run configuration.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AccSgdConfig {
    pub lipschitz: f64,
    /// Step size; `None` means `1 / (rho_B L)`.
    pub eta: Option<f64>,
}

/// ZO-AccSGD: accelerated SGD on batched zero-order estimates.
#[allow(clippy::too_many_arguments)]
pub fn run_zo_acc_sgd<F: Objective>(
    problem: F,
    noise: NoiseModel,
    estimator: &EstimatorConfig,
    config: &AccSgdConfig,
    x0: DenseVector,
    stop: StopRule,
    seed: u64,
    reference: &Reference,
) -> Result<RunTrace> {
    let oracle = ZeroOrderOracle::new(problem, noise)?;
    estimator.validate()?;
    if let EstimatorMode::KernelOnepoint { kernel } = &estimator.mode {
        let report = kernel.validate_moments(kernel.degree() + 2)?;
        if let Some(bad) = report.first_failure() {
            return Err(Error::usage(format!(
                "kernel {} fails moment j={} (value {})",
                kernel.name, bad.order, bad.value
            )));
        }
    }
    let rho = estimator_rho_b(oracle.dim(), estimator)?;
    let params = AccSgdParams::new(rho, config.lipschitz, config.eta)?;
    let provider = ZeroOrderGradient {
        oracle: &oracle,
        config: estimator.clone(),
    };
    run_acc_sgd(oracle.objective(), &provider, params, x0, stop, seed, reference)
}

/// ZO-SGD baseline with the same estimator and trace format.
#[allow(clippy::too_many_arguments)]
pub fn run_zo_sgd<F: Objective>(
    problem: F,
    noise: NoiseModel,
    estimator: &EstimatorConfig,
    step_size: f64,
    x0: DenseVector,
    stop: StopRule,
    seed: u64,
    reference: &Reference,
) -> Result<RunTrace> {
    let oracle = ZeroOrderOracle::new(problem, noise)?;
    estimator.validate()?;
    let provider = ZeroOrderGradient {
        oracle: &oracle,
        config: estimator.clone(),
    };
    run_sgd(oracle.objective(), &provider, step_size, x0, stop, seed, reference)
}
