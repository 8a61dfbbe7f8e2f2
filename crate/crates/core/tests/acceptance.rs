//! Acceptance suite. Each test prints one `PASS`/`FAIL` line.
//!
//! Run with `cargo test -p zoacc --test acceptance -- --test-threads 1` to see
//! the lines in order.

use std::io::{Cursor, Write};
use std::path::PathBuf;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use zoacc::estimators::{estimate_bias, estimate_second_moment, second_moment_bound, EstimatorConfig};
use zoacc::kernels::{Convention, KernelSpec};
use zoacc::optimizers::{
    run_acc_sgd, run_zo_acc_sgd, run_zo_sgd, AccSgdConfig, AccSgdParams, ExactGradient, Reference, RunTrace,
    StopRule,
};
use zoacc::oracle::FnObjective;
use zoacc::problems::{parse_libsvm, write_libsvm, LeastSquaresProblem};
use zoacc::theory::{self, plan, BatchRegime, PlanInputs};
use zoacc::{DenseVector, Error, NoiseModel, Objective, RngStream, ZeroOrderOracle};

fn report(id: u32, name: &str, passed: bool, elapsed: Duration, budget: Duration, detail: String) {
    let in_time = elapsed <= budget;
    let verdict = if passed && in_time { "PASS" } else { "FAIL" };
    // Written to the raw handle so the line shows up without --nocapture.
    let _ = writeln!(
        std::io::stdout().lock(),
        "criterion {id:>2} {name}: {verdict} ({detail}; {:.2} s of {} s)",
        elapsed.as_secs_f64(),
        budget.as_secs()
    );
    assert!(passed, "criterion {id} failed: {detail}");
    assert!(in_time, "criterion {id} exceeded its {} s budget", budget.as_secs());
}

fn secs(s: u64) -> Duration {
    Duration::from_secs(s)
}

fn legendre(beta: u32) -> KernelSpec {
    KernelSpec::legendre(beta).unwrap()
}

fn expectation_kappa(beta: u32) -> f64 {
    legendre(beta)
        .compute_constants(beta as f64, 64)
        .unwrap()
        .kappa(Convention::Expectation)
}

fn fit_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

#[test]
fn c01_kernel_moments() {
    let start = Instant::now();
    let mut worst_moment = 0.0f64;
    let mut ok = true;
    let mut constants = Vec::new();
    for beta in [3u32, 4, 5, 6] {
        let k = legendre(beta);
        let report = k.validate_moments(64).unwrap();
        ok &= report.passed;
        worst_moment = report.moments.iter().fold(worst_moment, |w, m| w.max(m.abs_error));
        let c = k.compute_constants(beta as f64, 64).unwrap();
        ok &= c.plain.kappa <= c.kappa_bound() && c.plain.kappa_beta <= c.kappa_beta_bound();
        constants.push(format!("b{beta} kappa {:.3} kappa_b {:.3}", c.plain.kappa, c.plain.kappa_beta));
    }
    ok &= worst_moment <= 1e-10;
    let detail = format!("max moment error {worst_moment:.1e}; {}", constants.join(", "));
    report(1, "kernel moments", ok, start.elapsed(), secs(1), detail);
}

#[test]
fn c02_linear_unbiasedness() {
    let start = Instant::now();
    let d = 16;
    let a = DenseVector::from_fn(d, |i, _| 1.0 + 0.25 * i as f64 - if i % 3 == 0 { 3.0 } else { 0.0 });
    let grad = a.clone();
    let f = FnObjective::new(d, move |x: &DenseVector| a.dot(x) + 0.5);
    let x = DenseVector::from_fn(d, |i, _| (i as f64).sin());
    let mut worst = 0.0f64;
    for delta in [0.0, 1e-2] {
        let oracle = ZeroOrderOracle::new(&f, NoiseModel::Uniform { level: delta }).unwrap();
        for h in [0.1, 1.0] {
            let cfg = EstimatorConfig::kernel(legendre(3), h, 1);
            let r = estimate_bias(&oracle, &cfg, &x, 100_000, &grad, &RngStream::new(2)).unwrap();
            worst = worst.max(r.bias / grad.norm());
        }
    }
    let detail = format!("worst relative error {worst:.4} <= 0.05");
    report(2, "linear unbiasedness", worst <= 0.05, start.elapsed(), secs(10), detail);
}

#[test]
fn c03_kernel_advantage_cubic() {
    let start = Instant::now();
    let f = FnObjective::new(1, |x: &DenseVector| x[0].powi(3));
    let oracle = ZeroOrderOracle::new(&f, NoiseModel::None).unwrap();
    let x = DenseVector::from_element(1, 1.0);
    let grad = DenseVector::from_element(1, 3.0);
    let rng = RngStream::new(3);
    let kernel = estimate_bias(&oracle, &EstimatorConfig::kernel(legendre(4), 0.4, 1), &x, 1_000_000, &grad, &rng).unwrap();
    let central = estimate_bias(&oracle, &EstimatorConfig::central_l2(0.4, 1), &x, 1_000_000, &grad, &rng).unwrap();
    let ok = kernel.bias <= 3.0 * kernel.stderr && central.bias >= 0.1;
    let detail = format!(
        "kernel |bias| {:.2e} vs 3 stderr {:.2e}; central |bias| {:.4}",
        kernel.bias,
        3.0 * kernel.stderr,
        central.bias
    );
    report(3, "kernel advantage on x^3", ok, start.elapsed(), secs(20), detail);
}

// The beta=4 kernel annihilates every term of the x^4 Taylor expansion that
// could produce bias, so both measured biases are Monte-Carlo noise and their
// ratio is not near 8.
#[test]
#[ignore = "unattainable as stated: the bias of the beta=4 kernel on x^4 is exactly zero"]
fn c04_bias_scaling() {
    let start = Instant::now();
    let f = FnObjective::new(1, |x: &DenseVector| x[0].powi(4));
    let oracle = ZeroOrderOracle::new(&f, NoiseModel::None).unwrap();
    let x = DenseVector::from_element(1, 1.0);
    let grad = DenseVector::from_element(1, 4.0);
    let rng = RngStream::new(4);
    let bias = |h: f64| {
        estimate_bias(&oracle, &EstimatorConfig::kernel(legendre(4), h, 1), &x, 1_000_000, &grad, &rng).unwrap()
    };
    let (wide, narrow) = (bias(0.4), bias(0.2));
    let ratio = wide.bias / narrow.bias;
    let detail = format!(
        "ratio {ratio:.3} outside [6, 10]; biases {:.2e} (stderr {:.2e}) and {:.2e} (stderr {:.2e})",
        wide.bias, wide.stderr, narrow.bias, narrow.stderr
    );
    report(4, "bias scaling on x^4", (6.0..=10.0).contains(&ratio), start.elapsed(), secs(30), detail);
}

#[test]
fn c05_second_moment_bound() {
    let start = Instant::now();
    let d = 8;
    let problem = LeastSquaresProblem::random(d, d, 5, 10.0).unwrap();
    let x = DenseVector::from_fn(d, |i, _| 1.0 - 0.2 * i as f64);
    let (h, delta) = (0.1, 1e-3);
    let oracle = ZeroOrderOracle::new(&problem, NoiseModel::Uniform { level: delta }).unwrap();
    let cfg = EstimatorConfig::kernel(legendre(3), h, 1);
    let m = estimate_second_moment(&oracle, &cfg, &x, 400_000, &RngStream::new(5)).unwrap();
    let grad_sq = problem.gradient(&x).unwrap().norm_squared();
    let bound = second_moment_bound(d, expectation_kappa(3), grad_sq, problem.smoothness_constant(), h, delta);
    let check = m.check_bound(bound);
    let detail = format!("E|g|^2 {:.4} <= bound {:.4} + slack {:.4}", m.value, bound, check.mc_slack);
    report(5, "second-moment bound", check.passed, start.elapsed(), secs(20), detail);
}

#[test]
fn c06_schedule_identities() {
    let start = Instant::now();
    let mut worst_identity = 0.0f64;
    let mut growth_ok = true;
    for rho in [1.0, 2.0, 96.0] {
        let mut p = AccSgdParams::new(rho, 1.0, None).unwrap();
        for _ in 0..10_000 {
            let next = p.advance();
            let lhs = next.gamma * next.gamma - next.gamma / rho;
            let rhs = p.gamma * p.gamma;
            worst_identity = worst_identity.max((lhs - rhs).abs() / lhs.abs().max(rhs.abs()).max(f64::MIN_POSITIVE));
            growth_ok &= next.gamma >= next.k as f64 / (2.0 * rho);
            p = next;
        }
    }
    let ok = worst_identity <= 1e-10 && growth_ok;
    let detail = format!("max relative identity error {worst_identity:.1e}; gamma_k >= k/(2 rho) {growth_ok}");
    report(6, "schedule identities", ok, start.elapsed(), secs(1), detail);
}

#[test]
fn c07_acceleration_rate() {
    let start = Instant::now();
    let problem = LeastSquaresProblem::random(32, 32, 0, 1e3f64.sqrt()).unwrap();
    let params = AccSgdParams::new(1.0, problem.smoothness_constant(), None).unwrap();
    let trace = run_acc_sgd(
        &problem,
        &ExactGradient(&problem),
        params,
        DenseVector::zeros(32),
        StopRule::iterations(1000, 1),
        0,
        &Reference::value(0.0),
    )
    .unwrap();
    let window: Vec<_> = trace.records.iter().filter(|r| (100..=1000).contains(&r.iteration)).collect();
    let xs: Vec<f64> = window.iter().map(|r| (r.iteration as f64).ln()).collect();
    let ys: Vec<f64> = window.iter().map(|r| r.f_gap.ln()).collect();
    let slope = fit_slope(&xs, &ys);
    let detail = format!("log-log slope {slope:.3} <= -1.7");
    report(7, "acceleration rate", slope <= -1.7, start.elapsed(), secs(5), detail);
}

const ETA_GRID: [f64; 9] = [0.01, 0.02, 0.04, 0.08, 0.1, 0.12, 0.14, 0.16, 0.2];
const PLANTED_SEED: u64 = 7;
const BATCHES: [usize; 3] = [10, 100, 1000];
const BATCH_SEEDS: [u64; 5] = [0, 1, 2, 3, 4];

fn planted_problem() -> LeastSquaresProblem {
    LeastSquaresProblem::random(64, 64, 1, 100.0).unwrap().scaled(0.02)
}

struct PlantedRuns {
    main: RunTrace,
    acc_grid: Vec<RunTrace>,
    sgd_grid: Vec<RunTrace>,
}

fn planted_runs() -> PlantedRuns {
    let p = planted_problem();
    let x0 = DenseVector::zeros(64);
    let f0 = p.value(&x0);
    let est = EstimatorConfig::kernel(legendre(3), 0.5, 50);
    let noise = NoiseModel::Uniform { level: 1e-5 };
    let reference = Reference::value(0.0);
    let acc = |eta: f64, stop: StopRule| {
        let cfg = AccSgdConfig {
            lipschitz: p.smoothness_constant(),
            eta: Some(eta),
        };
        run_zo_acc_sgd(&p, noise, &est, &cfg, x0.clone(), stop, PLANTED_SEED, &reference).unwrap()
    };
    let mut to_target = StopRule::iterations(10_000, 1);
    to_target.target_gap = Some(0.1 * f0);
    PlantedRuns {
        main: acc(0.02, StopRule::iterations(10_000, 100)),
        acc_grid: ETA_GRID.iter().map(|&eta| acc(eta, to_target)).collect(),
        sgd_grid: ETA_GRID
            .iter()
            .map(|&eta| run_zo_sgd(&p, noise, &est, eta, x0.clone(), to_target, PLANTED_SEED, &reference).unwrap())
            .collect(),
    }
}

fn batch_runs() -> Vec<Vec<RunTrace>> {
    let p = planted_problem();
    let cfg = AccSgdConfig {
        lipschitz: p.smoothness_constant(),
        eta: Some(0.005),
    };
    BATCHES
        .iter()
        .map(|&b| {
            let est = EstimatorConfig::kernel(legendre(3), 0.5, b);
            BATCH_SEEDS
                .iter()
                .map(|&seed| {
                    let stop = StopRule::iterations(3000, 100);
                    let noise = NoiseModel::Uniform { level: 1e-3 };
                    run_zo_acc_sgd(&p, noise, &est, &cfg, DenseVector::zeros(64), stop, seed, &Reference::value(0.0))
                        .unwrap()
                })
                .collect()
        })
        .collect()
}

fn with_workers<T: Send>(n: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new().num_threads(n).build().unwrap().install(f)
}

fn planted_single_worker() -> &'static PlantedRuns {
    static CELL: OnceLock<PlantedRuns> = OnceLock::new();
    CELL.get_or_init(|| with_workers(1, planted_runs))
}

fn batch_single_worker() -> &'static Vec<Vec<RunTrace>> {
    static CELL: OnceLock<Vec<Vec<RunTrace>>> = OnceLock::new();
    CELL.get_or_init(|| with_workers(1, batch_runs))
}

fn best_iterations(grid: &[RunTrace], target: f64) -> Option<(usize, f64)> {
    grid.iter()
        .zip(ETA_GRID)
        .filter(|(t, _)| !t.diverged())
        .filter_map(|(t, eta)| t.iterations_to(target).map(|n| (n, eta)))
        .min_by_key(|(n, _)| *n)
}

#[test]
fn c08_end_to_end_linear_system() {
    let start = Instant::now();
    let runs = planted_single_worker();
    let f0 = planted_problem().value(&DenseVector::zeros(64));
    let final_ratio = runs.main.final_gap() / f0;
    let acc = best_iterations(&runs.acc_grid, 0.1 * f0);
    let sgd = best_iterations(&runs.sgd_grid, 0.1 * f0);
    let faster = match (acc, sgd) {
        (Some((a, _)), Some((s, _))) => a < s,
        (Some(_), None) => true,
        _ => false,
    };
    let ok = !runs.main.diverged() && final_ratio <= 1e-2 && faster;
    let detail = format!(
        "final gap {final_ratio:.2e} of initial; iterations to 0.1 initial: acc {acc:?}, sgd {sgd:?} (iterations, eta)"
    );
    report(8, "end-to-end planted system", ok, start.elapsed(), secs(120), detail);
}

#[test]
fn c09_overbatching() {
    let start = Instant::now();
    let f0 = planted_problem().value(&DenseVector::zeros(64));
    let means: Vec<f64> = batch_single_worker()
        .iter()
        .map(|runs| runs.iter().map(RunTrace::final_gap).sum::<f64>() / runs.len() as f64 / f0)
        .collect();
    let diverged = batch_single_worker().iter().flatten().any(RunTrace::diverged);
    let ok = !diverged && means.windows(2).all(|w| w[1] <= w[0]) && means[2] <= 0.5 * means[0];
    let detail = format!(
        "mean final gap / initial for B = {BATCHES:?}: [{}]",
        means.iter().map(|m| format!("{m:.3e}")).collect::<Vec<_>>().join(", ")
    );
    report(9, "overbatching floor", ok, start.elapsed(), secs(300), detail);
}

#[test]
fn c10_iteration_complexity_scaling() {
    let start = Instant::now();
    let d = 16;
    let diag = DenseVector::from_fn(d, |i, _| 10f64.powf(-6.0 * i as f64 / (d - 1) as f64 / 2.0));
    let problem = LeastSquaresProblem::new(DMatrix::from_diagonal(&diag), DenseVector::zeros(d)).unwrap();
    let ones = DenseVector::from_element(d, 1.0);
    let x0 = &ones * (100.0 / problem.value(&ones)).sqrt();
    let kappa = expectation_kappa(3);
    let batch = (4.0 * d as f64 * kappa).ceil() as usize;
    let est = EstimatorConfig::kernel(legendre(3), 1e-2, batch);
    let cfg = AccSgdConfig {
        lipschitz: problem.smoothness_constant(),
        eta: None,
    };
    let eps = [1e-1, 1e-2, 1e-3];
    let mut stop = StopRule::iterations(20_000, 1);
    stop.target_gap = Some(eps[2]);
    let seeds = [0u64, 1, 2, 3, 4];
    let mut totals = [0.0; 3];
    let mut reached = true;
    for seed in seeds {
        let trace = run_zo_acc_sgd(&problem, NoiseModel::None, &est, &cfg, x0.clone(), stop, seed, &Reference::value(0.0))
            .unwrap();
        for (total, e) in totals.iter_mut().zip(eps) {
            match trace.iterations_to(e) {
                Some(n) => *total += n as f64,
                None => reached = false,
            }
        }
    }
    let mean_n: Vec<f64> = totals.iter().map(|t| t / seeds.len() as f64).collect();
    let xs: Vec<f64> = eps.iter().map(|e| (1.0 / e).ln()).collect();
    let ys: Vec<f64> = mean_n.iter().map(|n| n.ln()).collect();
    let gamma = fit_slope(&xs, &ys);
    let ok = reached && (0.4..=0.6).contains(&gamma);
    let detail = format!("B = {batch}; mean N = {mean_n:?}; fitted gamma {gamma:.3}");
    report(10, "iteration-complexity scaling", ok, start.elapsed(), secs(300), detail);
}

#[test]
fn c11_planner_consistency() {
    let start = Instant::now();
    let constants = legendre(3).compute_constants(3.0, 64).unwrap();
    let kappa = constants.kappa(Convention::Expectation);
    let d = 64;
    let threshold = (4.0 * d as f64 * kappa).round() as usize;
    let at = |eps: f64, radius: f64, batch: usize| {
        plan(
            &PlanInputs {
                d,
                beta: 3.0,
                lipschitz: 2.0,
                radius,
                eps,
                batch,
                delta_target: None,
            },
            &constants,
        )
        .unwrap()
    };
    let mut ok = true;
    let mut ratios = Vec::new();
    for eps in [1e-1, 1e-2, 1e-4] {
        for radius in [0.5, 1.0, 7.0] {
            let below = at(eps, radius, threshold - 1);
            let equal = at(eps, radius, threshold);
            ok &= below.case_id == BatchRegime::BLt4dk && equal.case_id == BatchRegime::BEq4dk;
            let ratio = below.n * (threshold - 1) as f64 / threshold as f64 / equal.n;
            ratios.push(ratio);
            ok &= ((ratio - 1.0 / (4.0 * kappa)) * 4.0 * kappa).abs() < 1e-12;
            for b in [1, 7, threshold - 1, threshold] {
                let p = at(eps, radius, b);
                ok &= ((p.t - p.n * b as f64) / p.t).abs() < 1e-12;
            }
            let quarter = at(eps / 4.0, radius, 50);
            ok &= (quarter.n / at(eps, radius, 50).n - 2.0).abs() < 1e-12;
        }
    }
    let spread = ratios.iter().cloned().fold(f64::MIN, f64::max) - ratios.iter().cloned().fold(f64::MAX, f64::min);
    ok &= spread < 1e-15;
    let mut exponent_ok = true;
    for beta in [7.0 / 3.0, 3.0, 4.5, 10.0] {
        let (a, b) = (theory::max_noise(1e-2, d, beta, 50, kappa).unwrap(), theory::max_noise(1e-4, d, beta, 50, kappa).unwrap());
        let exponent = (a / b).ln() / 100f64.ln();
        exponent_ok &= (exponent - 1.5).abs() < 1e-12;
    }
    ok &= exponent_ok;
    let detail = format!(
        "case-2/case-3 ratio {:.6} (1/(4 kappa) = {:.6}, spread {spread:.1e}); Delta_max exponent 3/2 {exponent_ok}",
        ratios[0],
        1.0 / (4.0 * kappa)
    );
    report(11, "planner consistency", ok, start.elapsed(), secs(1), detail);
}

fn dataset_dir() -> Option<PathBuf> {
    std::env::var_os("ZOACC_DATASETS").map(PathBuf::from)
}

#[test]
fn c12_parser() {
    let start = Instant::now();
    let mut rng = RngStream::new(12);
    let mut text = String::from("# synthetic fixture\n");
    for i in 0..40 {
        text.push_str(if i % 3 == 0 { "1" } else { "0" });
        for j in 1..=9 {
            if rng.uniform(0.0, 1.0) < 0.6 {
                text.push_str(&format!(" {j}:{:e}", rng.standard_normal() * 10f64.powf(rng.uniform(-8.0, 8.0))));
            }
        }
        text.push('\n');
    }
    let data = parse_libsvm(Cursor::new(&text), "fixture", "inline").unwrap();
    let again = parse_libsvm(Cursor::new(write_libsvm(&data)), "fixture", "inline").unwrap();
    let mut worst = 0.0f64;
    let (m, d) = data.matrix.shape();
    let mut same_shape = again.matrix.shape() == (m, d) && again.labels == data.labels;
    for i in 0..m {
        let (a, b): (Vec<_>, Vec<_>) = (data.matrix.row(i).collect(), again.matrix.row(i).collect());
        same_shape &= a.len() == b.len();
        for ((ja, va), (jb, vb)) in a.iter().zip(&b) {
            same_shape &= ja == jb;
            worst = worst.max((va - vb).abs() / va.abs());
        }
    }

    let malformed = [
        ("1 1:0.5\n-1 2:1\n-1 2:1 1:3\n", 3),
        ("1 1:0.5\n\nfoo 1:1\n", 3),
        ("1 1:0.5\n-1 0:2\n", 2),
        ("1 1:0.5\n-1 3:nan\n", 2),
        ("1 1:0.5\n-1 2\n", 2),
        ("1 1:1\n-1 1:1\n2 1:1\n3 1:1\n", 3),
    ];
    let mut lines_ok = true;
    for (input, line) in malformed {
        lines_ok &= matches!(parse_libsvm(Cursor::new(input), "bad", "inline"), Err(Error::Parse { line: l, .. }) if l == line);
    }

    let mut table = Vec::new();
    let mut table_ok = true;
    if let Some(dir) = dataset_dir() {
        for (name, shape) in [("phishing", (11055, 68)), ("diabetes", (768, 8)), ("heart", (270, 13))] {
            let path = dir.join(name);
            match std::fs::File::open(&path) {
                Ok(f) => {
                    let parsed = parse_libsvm(std::io::BufReader::new(f), name, &path.display().to_string()).unwrap();
                    let got = (parsed.meta.m, parsed.meta.d);
                    table_ok &= got == shape;
                    table.push(format!("{name} {got:?}"));
                }
                Err(_) => table.push(format!("{name} absent")),
            }
        }
    } else {
        table.push("reference datasets not supplied (set ZOACC_DATASETS)".into());
    }
    let ok = same_shape && worst <= 1e-12 && lines_ok && table_ok;
    let detail = format!(
        "round-trip max relative error {worst:.1e}; malformed line numbers {lines_ok}; {}",
        table.join(", ")
    );
    report(12, "LIBSVM parser", ok, start.elapsed(), secs(5), detail);
}

fn numeric_columns(trace: &RunTrace) -> Vec<(usize, u64, u64, u64)> {
    trace.records.iter().map(|r| (r.iteration, r.oracle_calls, r.f_gap.to_bits(), r.seed)).collect()
}

#[test]
fn c13_determinism_across_workers() {
    let start = Instant::now();
    let one = planted_single_worker();
    let many = with_workers(4, planted_runs);
    let planted_pairs = std::iter::once((&one.main, &many.main))
        .chain(one.acc_grid.iter().zip(&many.acc_grid))
        .chain(one.sgd_grid.iter().zip(&many.sgd_grid));
    let mut compared = 0;
    let mut identical = true;
    for (a, b) in planted_pairs {
        identical &= numeric_columns(a) == numeric_columns(b) && a.final_x == b.final_x;
        compared += 1;
    }
    let many3 = with_workers(4, batch_runs);
    for (a, b) in batch_single_worker().iter().flatten().zip(many3.iter().flatten()) {
        identical &= numeric_columns(a) == numeric_columns(b) && a.final_x == b.final_x;
        compared += 1;
    }
    let detail = format!("{compared} traces compared between 1 and 4 workers; identical {identical}");
    report(13, "determinism across workers", identical, start.elapsed(), secs(600), detail);
}
