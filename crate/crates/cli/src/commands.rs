//! Subcommand implementations.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;
use zoacc::kernels::{KernelConstants, KernelSpec, MomentReport};
use zoacc::optimizers::{
    estimator_rho_b, run_zo_acc_sgd, run_zo_sgd, AccSgdConfig, RunStatus, RunTrace, StopRule,
};
use zoacc::theory::{plan, PlanInputs};
use zoacc::{DenseVector, Error, Objective};

use crate::config::{load_kernel_file, ExperimentConfig, Method};
use crate::error::{config_err, CliError, CliResult};
use crate::problem::{load_dataset, prepare, FStarSource, Prepared};

pub const TRACE_HEADER: [&str; 5] = ["iteration", "oracle_calls", "f_gap", "wall_ms", "seed"];
pub const SUMMARY_HEADER: [&str; 7] = ["method", "eta", "batch", "seed", "final_f_gap", "diverged", "best"];
const VERSION: &str = env!("CARGO_PKG_VERSION");
const CONSTANT_QUAD_POINTS: usize = 64;

/// Per-config quantities that the trace depends on but the config leaves implicit.
#[derive(Clone, Debug, Serialize)]
pub struct Derived {
    pub dim: usize,
    pub lipschitz: f64,
    pub rho_b: f64,
    pub eta: f64,
    pub f_star: f64,
    pub f_star_source: FStarSource,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference_warning: Option<String>,
    pub initial_f_gap: f64,
}

fn start_point(cfg: &ExperimentConfig, dim: usize) -> CliResult<DenseVector> {
    match &cfg.x0 {
        None => Ok(DenseVector::zeros(dim)),
        Some(v) if v.len() == dim => Ok(DenseVector::from_column_slice(v)),
        Some(v) => Err(config_err(format!("x0 has length {}, problem dimension is {dim}", v.len()))),
    }
}

pub fn derive(cfg: &ExperimentConfig, prepared: &Prepared) -> CliResult<Derived> {
    let dim = prepared.problem.dim();
    let lipschitz = match cfg.lipschitz {
        Some(l) => l,
        None => prepared
            .problem
            .constants()
            .lipschitz
            .ok_or_else(|| config_err("problem has no smoothness constant; set lipschitz"))?,
    };
    let rho_b = estimator_rho_b(dim, &cfg.estimator_config()?)?;
    let eta = match (cfg.eta, cfg.method) {
        (Some(eta), _) => eta,
        (None, Method::ZoAccSgd) => 1.0 / (rho_b * lipschitz),
        (None, Method::ZoSgd) => return Err(config_err("zo_sgd needs an explicit eta")),
    };
    let x0 = start_point(cfg, dim)?;
    Ok(Derived {
        dim,
        lipschitz,
        rho_b,
        eta,
        f_star: prepared.reference.f_star,
        f_star_source: prepared.f_star_source.clone(),
        reference_warning: prepared.reference_warning.clone(),
        initial_f_gap: prepared.problem.value(&x0) - prepared.reference.f_star,
    })
}

/// One seed of one configuration.
pub fn execute(cfg: &ExperimentConfig, prepared: &Prepared, derived: &Derived, seed: u64) -> CliResult<RunTrace> {
    let est = cfg.estimator_config()?;
    let x0 = start_point(cfg, derived.dim)?;
    let stop = StopRule {
        max_iters: cfg.iterations,
        record_stride: cfg.record_stride,
        target_gap: cfg.target_gap,
    };
    let reference = &prepared.reference;
    let result = match cfg.method {
        Method::ZoAccSgd => {
            let acc = AccSgdConfig {
                lipschitz: derived.lipschitz,
                eta: Some(derived.eta),
            };
            run_zo_acc_sgd(&prepared.problem, cfg.noise, &est, &acc, x0, stop, seed, reference)
        }
        Method::ZoSgd => run_zo_sgd(&prepared.problem, cfg.noise, &est, derived.eta, x0, stop, seed, reference),
    };
    match result {
        Ok(trace) => Ok(trace),
        // A non-finite objective value means the iterates left the domain of
        // floating point; report it like any other divergence.
        Err(Error::Evaluation { .. }) => Ok(RunTrace {
            method: cfg.method.id().into(),
            seed,
            records: Vec::new(),
            status: RunStatus::Diverged { iteration: 0 },
            final_x: Vec::new(),
        }),
        Err(e) => Err(e.into()),
    }
}

fn format_float(v: f64) -> String {
    if v.is_infinite() && v > 0.0 {
        "inf".into()
    } else {
        format!("{v}")
    }
}

pub fn write_trace(path: &Path, trace: &RunTrace) -> CliResult<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_path(path)?;
    w.write_record(TRACE_HEADER)?;
    for r in &trace.records {
        w.write_record([
            r.iteration.to_string(),
            r.oracle_calls.to_string(),
            format_float(r.f_gap),
            format!("{:.3}", r.wall_ms),
            r.seed.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn write_json(path: &Path, value: &impl Serialize) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

pub fn trace_file_name(seed: u64) -> String {
    format!("trace_seed{seed}.csv")
}

/// `run`: one trace CSV per seed plus `run.json`. Divergence of any seed is
/// reported after all outputs are written.
pub fn cmd_run(cfg: &ExperimentConfig) -> CliResult<()> {
    let prepared = prepare(cfg)?;
    let derived = derive(cfg, &prepared)?;
    fs::create_dir_all(&cfg.output)?;
    let traces: Vec<CliResult<RunTrace>> = cfg
        .seeds
        .par_iter()
        .map(|&seed| execute(cfg, &prepared, &derived, seed))
        .collect();
    let mut runs = Vec::new();
    let mut diverged = Vec::new();
    for (seed, trace) in cfg.seeds.iter().zip(traces) {
        let trace = trace?;
        let file = trace_file_name(*seed);
        write_trace(&cfg.output.join(&file), &trace)?;
        if trace.diverged() {
            diverged.push(*seed);
        }
        runs.push(json!({
            "seed": seed,
            "trace": file,
            "status": trace.status,
            "final_f_gap": format_float(trace.final_gap()),
            "oracle_calls": trace.records.last().map_or(0, |r| r.oracle_calls),
        }));
    }
    let sidecar = json!({
        "command": "run",
        "version": VERSION,
        "config": cfg,
        "derived": derived,
        "runs": runs,
    });
    write_json(&cfg.output.join("run.json"), &sidecar)?;
    if diverged.is_empty() {
        Ok(())
    } else {
        Err(CliError::Diverged(format!("run diverged for seed(s) {diverged:?}")))
    }
}

/// One row of the sweep summary.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub method: Method,
    pub eta: f64,
    pub batch: usize,
    pub seed: u64,
    pub final_f_gap: f64,
    pub diverged: bool,
    pub best: bool,
}

/// Grid over methods x batch sizes x step sizes, every cell run for every seed.
pub struct Grid {
    pub methods: Vec<Method>,
    pub batches: Vec<usize>,
    pub etas: Vec<f64>,
}

/// `sweep`: marks, for every (method, batch), the step size with the lowest
/// mean final gap over seeds (a diverged seed makes the mean infinite).
pub fn cmd_sweep(cfg: &ExperimentConfig, grid: &Grid, summary: &Path) -> CliResult<Vec<SweepRow>> {
    if grid.methods.is_empty() || grid.batches.is_empty() || grid.etas.is_empty() {
        return Err(config_err("sweep grid is empty"));
    }
    if let Some(bad) = grid.etas.iter().find(|e| !(**e > 0.0 && e.is_finite())) {
        return Err(config_err(format!("grid step size {bad} is not positive")));
    }
    if grid.batches.contains(&0) {
        return Err(config_err("grid batch sizes must be at least 1"));
    }
    let prepared = prepare(cfg)?;
    let mut jobs = Vec::new();
    for &method in &grid.methods {
        for &batch in &grid.batches {
            for &eta in &grid.etas {
                for &seed in &cfg.seeds {
                    let mut cell = cfg.clone();
                    cell.method = method;
                    cell.batch = batch;
                    cell.eta = Some(eta);
                    cell.record_stride = cell.iterations.max(1);
                    jobs.push((cell, seed));
                }
            }
        }
    }
    let results: Vec<CliResult<SweepRow>> = jobs
        .par_iter()
        .map(|(cell, seed)| {
            let derived = derive(cell, &prepared)?;
            let trace = execute(cell, &prepared, &derived, *seed)?;
            let diverged = trace.diverged();
            Ok(SweepRow {
                method: cell.method,
                eta: derived.eta,
                batch: cell.batch,
                seed: *seed,
                final_f_gap: if diverged { f64::INFINITY } else { trace.final_gap() },
                diverged,
                best: false,
            })
        })
        .collect();
    let mut rows = results.into_iter().collect::<CliResult<Vec<_>>>()?;
    mark_best(&mut rows);
    if let Some(dir) = summary.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_path(summary)?;
    w.write_record(SUMMARY_HEADER)?;
    for r in &rows {
        w.write_record([
            r.method.id().to_string(),
            format_float(r.eta),
            r.batch.to_string(),
            r.seed.to_string(),
            format_float(r.final_f_gap),
            r.diverged.to_string(),
            r.best.to_string(),
        ])?;
    }
    w.flush()?;
    let sidecar = json!({
        "command": "sweep",
        "version": VERSION,
        "config": cfg,
        "grid": {
            "methods": grid.methods,
            "batches": grid.batches,
            "etas": grid.etas,
        },
        "summary": summary,
    });
    write_json(&summary.with_extension("json"), &sidecar)?;
    Ok(rows)
}

fn mark_best(rows: &mut [SweepRow]) {
    // (method, batch, eta, gap sum, seeds)
    let mut cells: Vec<(Method, usize, f64, f64, usize)> = Vec::new();
    for r in rows.iter() {
        match cells.iter_mut().find(|c| c.0 == r.method && c.1 == r.batch && c.2 == r.eta) {
            Some(c) => {
                c.3 += r.final_f_gap;
                c.4 += 1;
            }
            None => cells.push((r.method, r.batch, r.eta, r.final_f_gap, 1)),
        }
    }
    for r in rows.iter_mut() {
        let best = cells
            .iter()
            .filter(|c| c.0 == r.method && c.1 == r.batch && c.3.is_finite())
            .min_by(|a, b| (a.3 / a.4 as f64).total_cmp(&(b.3 / b.4 as f64)));
        r.best = best.is_some_and(|c| c.2 == r.eta);
    }
}

/// `plan`: the kernel defaults to the Legendre kernel for `floor(beta)`
/// clamped to the supported range.
pub fn cmd_plan(inputs: &PlanInputs, kernel_beta: Option<u32>) -> CliResult<String> {
    let kb = kernel_beta.unwrap_or_else(|| (inputs.beta.floor().clamp(3.0, 6.0)) as u32);
    if inputs.beta.is_nan() || inputs.beta <= 2.0 {
        return Err(config_err(format!("smoothness order beta must exceed 2, got {}", inputs.beta)));
    }
    // Only kappa enters the plan and it does not depend on beta; the bounds
    // are checked at the kernel's own order.
    let constants = KernelSpec::legendre(kb)?.compute_constants(kb as f64, CONSTANT_QUAD_POINTS)?;
    let p = plan(inputs, &constants)?;
    Ok(serde_json::to_string_pretty(&p)?)
}

#[derive(Debug, Serialize)]
pub struct KernelCheck {
    pub kernel: KernelSpec,
    pub moments: MomentReport,
    pub constants: Vec<KernelConstants>,
    pub passed: bool,
}

pub enum KernelSource {
    Legendre(u32),
    File(PathBuf),
}

/// `check-kernel`: the JSON report is returned even when a check fails, so it
/// can be printed before exiting with the failure.
pub fn cmd_check_kernel(source: &KernelSource, quad_points: usize) -> (Option<String>, CliResult<()>) {
    let kernel = match source {
        KernelSource::Legendre(beta) => KernelSpec::legendre(*beta).map_err(CliError::from),
        KernelSource::File(path) => load_kernel_file(path),
    };
    let kernel = match kernel {
        Ok(k) => k,
        Err(e) => return (None, Err(e)),
    };
    let moments = match kernel.validate_moments(quad_points) {
        Ok(m) => m,
        Err(e) => return (None, Err(e.into())),
    };
    let mut constants = Vec::new();
    let mut outcome = Ok(());
    if let Some(bad) = moments.first_failure() {
        outcome = Err(CliError::CheckFailed(format!(
            "moment j={} failed: E[r^{} K(r)] = {} (expected {}, tolerance {:e})",
            bad.order, bad.order, bad.value, bad.expected, moments.tolerance
        )));
    } else {
        for &beta in &kernel.beta_targets {
            match kernel.compute_constants(beta as f64, quad_points.max(CONSTANT_QUAD_POINTS)) {
                Ok(c) => constants.push(c),
                Err(Error::Consistency(msg)) => {
                    outcome = Err(CliError::CheckFailed(format!("bound check failed at beta={beta}: {msg}")));
                    break;
                }
                Err(e) => {
                    outcome = Err(e.into());
                    break;
                }
            }
        }
    }
    let report = KernelCheck {
        passed: outcome.is_ok(),
        kernel,
        moments,
        constants,
    };
    let json = serde_json::to_string_pretty(&report).ok();
    (json, outcome)
}

/// `parse-data`: the dataset's metadata as JSON.
pub fn cmd_parse_data(path: &Path) -> CliResult<String> {
    let data = load_dataset(path)?;
    Ok(serde_json::to_string_pretty(&data.meta)?)
}
