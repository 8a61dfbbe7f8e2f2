//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Every export returns a JSON string; errors come back as `{"error": "..."}`
//! so the page never has to deal with thrown exceptions.

use serde::Serialize;
use wasm_bindgen::prelude::*;
use zoacc::estimators::EstimatorConfig;
use zoacc::kernels::{Convention, KernelSpec};
use zoacc::optimizers::{run_zo_acc_sgd, run_zo_sgd, AccSgdConfig, Reference, RunTrace, StopRule};
use zoacc::problems::LeastSquaresProblem;
use zoacc::theory::{plan, PlanInputs};
use zoacc::{DenseVector, NoiseModel, Objective};

const QUAD_POINTS: usize = 64;
const MAX_DEMO_DIM: usize = 256;
const MAX_DEMO_WORK: usize = 20_000_000;

fn to_json<T: Serialize>(result: zoacc::Result<T>) -> String {
    match result {
        Ok(v) => serde_json::to_string(&v).unwrap_or_else(|e| error_json(&e.to_string())),
        Err(e) => error_json(&e.to_string()),
    }
}

fn error_json(message: &str) -> String {
    serde_json::json!({ "error": message }).to_string()
}

#[derive(Serialize)]
struct KernelView {
    name: String,
    r: Vec<f64>,
    k: Vec<f64>,
    moments: Vec<f64>,
    kappa: f64,
    kappa_beta: f64,
}

/// Samples of the Legendre kernel for `beta` on `[-1, 1]`, its moments and constants.
#[wasm_bindgen]
pub fn kernel_curve(beta: u32, samples: usize) -> String {
    to_json((|| {
        let kernel = KernelSpec::legendre(beta)?;
        let constants = kernel.compute_constants(beta as f64, QUAD_POINTS)?;
        let n = samples.clamp(2, 2000);
        let r: Vec<f64> = (0..n).map(|i| -1.0 + 2.0 * i as f64 / (n - 1) as f64).collect();
        Ok(KernelView {
            name: kernel.name.clone(),
            k: r.iter().map(|&x| kernel.value(x)).collect(),
            r,
            moments: kernel.validate_moments(QUAD_POINTS)?.moments.iter().map(|m| m.value).collect(),
            kappa: constants.kappa(Convention::Expectation),
            kappa_beta: constants.kappa_beta(Convention::Expectation),
        })
    })())
}

/// Iteration and oracle budgets for the given setting.
#[wasm_bindgen]
pub fn complexity_plan(d: usize, beta: f64, lipschitz: f64, radius: f64, eps: f64, batch: usize, delta_target: f64) -> String {
    to_json((|| {
        let kernel_beta = (beta.floor() as u32).clamp(3, 6);
        let constants = KernelSpec::legendre(kernel_beta)?.compute_constants(kernel_beta as f64, QUAD_POINTS)?;
        let inputs = PlanInputs {
            d,
            beta,
            lipschitz,
            radius,
            eps,
            batch,
            delta_target: (delta_target > 0.0).then_some(delta_target),
        };
        plan(&inputs, &constants)
    })())
}

#[derive(Serialize)]
struct Curve {
    method: &'static str,
    iterations: Vec<usize>,
    relative_gap: Vec<f64>,
    diverged: bool,
}

impl Curve {
    fn new(method: &'static str, trace: &RunTrace, f0: f64) -> Self {
        Self {
            method,
            iterations: trace.records.iter().map(|r| r.iteration).collect(),
            relative_gap: trace.records.iter().map(|r| r.f_gap / f0).collect(),
            diverged: trace.diverged(),
        }
    }
}

/// ZO-AccSGD against ZO-SGD on a planted least-squares problem, same
/// estimator, step size and seed. Gaps are relative to `f(x_0)`.
#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn compare_methods(
    d: usize,
    condition: f64,
    batch: usize,
    h: f64,
    noise: f64,
    eta: f64,
    iterations: usize,
    seed: u32,
) -> String {
    if d == 0 || d > MAX_DEMO_DIM {
        return error_json(&format!("dimension must be between 1 and {MAX_DEMO_DIM}"));
    }
    if iterations.saturating_mul(batch).saturating_mul(d) > MAX_DEMO_WORK {
        return error_json("iterations x batch x d is too large for the browser demo");
    }
    to_json((|| {
        let problem = LeastSquaresProblem::random(d, d, seed as u64, condition)?.scaled(0.02);
        let x0 = DenseVector::zeros(d);
        let f0 = problem.value(&x0);
        let estimator = EstimatorConfig::kernel(KernelSpec::legendre(3)?, h, batch);
        let noise = NoiseModel::Uniform { level: noise };
        let stop = StopRule::iterations(iterations, (iterations / 200).max(1));
        let reference = Reference::value(0.0);
        let config = AccSgdConfig {
            lipschitz: problem.smoothness_constant(),
            eta: Some(eta),
        };
        let acc = run_zo_acc_sgd(&problem, noise, &estimator, &config, x0.clone(), stop, seed as u64, &reference)?;
        let sgd = run_zo_sgd(&problem, noise, &estimator, eta, x0, stop, seed as u64, &reference)?;
        Ok([Curve::new("zo_acc_sgd", &acc, f0), Curve::new("zo_sgd", &sgd, f0)])
    })())
}
