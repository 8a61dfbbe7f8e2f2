//! Zero-order convex optimization with kernel-smoothed gradient estimates.
//!
//! The crate is organized bottom-up:
//!
//! * [`rng`]: counter-based, splittable random streams.
//! * [`oracle`]: black-box objectives, noise models and the noisy value oracle.
//! * [`kernels`]: odd polynomial smoothing kernels, moment checks and constants.
//! * [`estimators`]: one-point kernel and plain central-difference gradient estimates.
//! * [`optimizers`]: accelerated SGD for biased oracles (ZO-AccSGD) and plain ZO-SGD.
//! * [`theory`]: iteration/oracle complexity and maximum-noise planner.
//! * [`problems`]: least squares, logistic regression and LIBSVM ingestion.

pub mod error;
pub mod estimators;
pub mod kernels;
pub mod linalg;
pub mod optimizers;
pub mod oracle;
pub mod problems;
pub mod quadrature;
pub mod rng;
pub mod theory;

pub use error::{Error, Result};
pub use estimators::{EstimatorConfig, EstimatorMode, GradientEstimate};
pub use kernels::{KernelConstants, KernelSpec, MomentReport};
pub use optimizers::{AccSgdParams, AccSgdState, RunTrace, StopRule, TraceRecord};
pub use oracle::{NoiseModel, Objective, ZeroOrderOracle};
pub use rng::RngStream;
pub use theory::{BatchRegime, ComplexityPlan};

/// Dense real vector used for iterates, directions and gradients.
pub type DenseVector = nalgebra::DVector<f64>;
