//! Command-line experiment runner for `zoacc`.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 a run diverged,
//! 3 a kernel check failed.

pub mod commands;
pub mod config;
pub mod error;
pub mod problem;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use zoacc::theory::PlanInputs;
use zoacc::NoiseModel;

use crate::commands::{Grid, KernelSource};
use crate::config::{ExperimentConfig, Method};
use crate::error::{config_err, CliResult};

/// Worker-count variable; unset or 0 means one worker per core.
pub const THREADS_ENV: &str = "ZO_THREADS";

#[derive(Debug, Parser)]
#[command(name = "zoacc", version, about = "Zero-order accelerated SGD experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a configured experiment, one trace CSV per seed.
    Run {
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Grid-search step sizes (and optionally batch sizes and methods).
    Sweep {
        config: PathBuf,
        /// Comma-separated step sizes.
        #[arg(long, value_delimiter = ',', required = true)]
        eta_grid: Vec<f64>,
        /// Comma-separated batch sizes; defaults to the config's batch.
        #[arg(long, value_delimiter = ',')]
        batch_grid: Option<Vec<usize>>,
        /// Comma-separated methods; defaults to the config's method.
        #[arg(long, value_delimiter = ',')]
        method_grid: Option<Vec<Method>>,
        /// Summary CSV path; defaults to `<output>/sweep.csv`.
        #[arg(long)]
        summary: Option<PathBuf>,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Iteration, oracle and noise budgets as JSON.
    Plan(PlanArgs),
    /// Verify kernel moment conditions and constant bounds.
    CheckKernel {
        #[arg(long, conflicts_with = "kernel_file", required_unless_present = "kernel_file")]
        beta: Option<u32>,
        /// JSON file with `name`, `beta_targets` and `coefficients`.
        #[arg(long)]
        kernel_file: Option<PathBuf>,
        #[arg(long, default_value_t = 64)]
        quad_points: usize,
    },
    /// Validate a LIBSVM file and print its metadata.
    ParseData { path: PathBuf },
}

/// Flags that take precedence over the config file.
#[derive(Debug, Default, Args)]
pub struct Overrides {
    #[arg(long)]
    pub method: Option<Method>,
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long)]
    pub batch: Option<usize>,
    #[arg(long)]
    pub h: Option<f64>,
    #[arg(long)]
    pub beta: Option<u32>,
    /// Noise level; keeps the configured variant (uniform if none was set).
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub iterations: Option<usize>,
    #[arg(long)]
    pub record_stride: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pub seeds: Option<Vec<u64>>,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut ExperimentConfig) {
        if let Some(m) = self.method {
            cfg.method = m;
        }
        if let Some(eta) = self.eta {
            cfg.eta = Some(eta);
        }
        if let Some(b) = self.batch {
            cfg.batch = b;
        }
        if let Some(h) = self.h {
            cfg.h = h;
        }
        if let Some(beta) = self.beta {
            cfg.beta = beta;
        }
        if let Some(level) = self.delta {
            cfg.noise = match cfg.noise {
                _ if level == 0.0 => NoiseModel::None,
                NoiseModel::None | NoiseModel::Uniform { .. } => NoiseModel::Uniform { level },
                NoiseModel::GaussianClipped { .. } => NoiseModel::GaussianClipped { level },
                NoiseModel::AdversarialSign { .. } => NoiseModel::AdversarialSign { level },
            };
        }
        if let Some(n) = self.iterations {
            cfg.iterations = n;
        }
        if let Some(s) = self.record_stride {
            cfg.record_stride = s;
        }
        if let Some(seeds) = &self.seeds {
            cfg.seeds = seeds.clone();
        }
        if let Some(out) = &self.output {
            cfg.output = out.clone();
        }
    }
}

#[derive(Debug, Args)]
pub struct PlanArgs {
    #[arg(long)]
    pub d: usize,
    #[arg(long)]
    pub beta: f64,
    #[arg(long = "lipschitz", visible_alias = "L")]
    pub lipschitz: f64,
    /// Initial distance to the solution.
    #[arg(long = "radius", visible_alias = "R")]
    pub radius: f64,
    #[arg(long)]
    pub eps: f64,
    #[arg(long)]
    pub batch: usize,
    #[arg(long)]
    pub delta_target: Option<f64>,
    /// Legendre kernel used for the constants; defaults to `floor(beta)` within 3..=6.
    #[arg(long)]
    pub kernel_beta: Option<u32>,
}

/// Prints to stdout; a closed pipe (e.g. `| head`) is not an error.
fn emit(text: &str) {
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{text}");
}

fn load_config(path: &Path, overrides: &Overrides) -> CliResult<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(path)?;
    overrides.apply(&mut cfg);
    cfg.validate()?;
    Ok(cfg)
}

/// Sizes the global worker pool from [`THREADS_ENV`].
pub fn configure_threads() -> CliResult<()> {
    let threads = match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map_err(|_| config_err(format!("{THREADS_ENV} must be a non-negative integer, got {v:?}")))?,
        Err(_) => 0,
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| config_err(format!("cannot start worker pool: {e}")))
}

pub fn dispatch(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Run { config, overrides } => commands::cmd_run(&load_config(&config, &overrides)?),
        Command::Sweep {
            config,
            eta_grid,
            batch_grid,
            method_grid,
            summary,
            overrides,
        } => {
            let cfg = load_config(&config, &overrides)?;
            let grid = Grid {
                methods: method_grid.unwrap_or_else(|| vec![cfg.method]),
                batches: batch_grid.unwrap_or_else(|| vec![cfg.batch]),
                etas: eta_grid,
            };
            let summary = summary.unwrap_or_else(|| cfg.output.join("sweep.csv"));
            let rows = commands::cmd_sweep(&cfg, &grid, &summary)?;
            let mut lines = vec![format!("summary: {}", summary.display())];
            for &method in &grid.methods {
                for &batch in &grid.batches {
                    let best: Vec<_> = rows
                        .iter()
                        .filter(|r| r.best && r.method == method && r.batch == batch)
                        .collect();
                    lines.push(match best.first() {
                        Some(r) => format!(
                            "{} B={batch}: best eta={} (mean final f_gap {:e})",
                            method.id(),
                            r.eta,
                            best.iter().map(|r| r.final_f_gap).sum::<f64>() / best.len() as f64
                        ),
                        None => format!("{} B={batch}: every step size diverged", method.id()),
                    });
                }
            }
            emit(&lines.join("\n"));
            Ok(())
        }
        Command::Plan(args) => {
            let inputs = PlanInputs {
                d: args.d,
                beta: args.beta,
                lipschitz: args.lipschitz,
                radius: args.radius,
                eps: args.eps,
                batch: args.batch,
                delta_target: args.delta_target,
            };
            emit(&commands::cmd_plan(&inputs, args.kernel_beta)?);
            Ok(())
        }
        Command::CheckKernel {
            beta,
            kernel_file,
            quad_points,
        } => {
            let source = match (beta, kernel_file) {
                (_, Some(path)) => KernelSource::File(path),
                (Some(b), None) => KernelSource::Legendre(b),
                (None, None) => return Err(config_err("pass --beta or --kernel-file")),
            };
            let (report, outcome) = commands::cmd_check_kernel(&source, quad_points);
            if let Some(json) = report {
                emit(&json);
            }
            outcome
        }
        Command::ParseData { path } => {
            emit(&commands::cmd_parse_data(&path)?);
            Ok(())
        }
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return e.exit_code();
    }
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
