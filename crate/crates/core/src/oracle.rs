//! Black-box objectives and the noisy zero-order oracle `f~(x) = f(x) + xi`.

use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};

use crate::{DenseVector, Error, Result, RngStream};

/// Known smoothness constants of an objective, when available.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SmoothnessConstants {
    /// Lipschitz constant of the gradient.
    pub lipschitz: Option<f64>,
    /// Hölder order of the higher-order smoothness class.
    pub beta: Option<f64>,
    /// Hölder constant of the order-`beta` Taylor remainder.
    pub l_beta: Option<f64>,
}

/// A deterministic objective `f: R^d -> R`.
pub trait Objective: Send + Sync {
    fn dim(&self) -> usize;

    fn value(&self, x: &DenseVector) -> f64;

    /// Analytic gradient, for validation and first-order baselines only.
    /// Zero-order methods never call this.
    fn gradient(&self, _x: &DenseVector) -> Option<DenseVector> {
        None
    }

    fn constants(&self) -> SmoothnessConstants {
        SmoothnessConstants::default()
    }
}

impl<T: Objective + ?Sized> Objective for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn value(&self, x: &DenseVector) -> f64 {
        (**self).value(x)
    }
    fn gradient(&self, x: &DenseVector) -> Option<DenseVector> {
        (**self).gradient(x)
    }
    fn constants(&self) -> SmoothnessConstants {
        (**self).constants()
    }
}

impl<T: Objective + ?Sized> Objective for Box<T> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn value(&self, x: &DenseVector) -> f64 {
        (**self).value(x)
    }
    fn gradient(&self, x: &DenseVector) -> Option<DenseVector> {
        (**self).gradient(x)
    }
    fn constants(&self) -> SmoothnessConstants {
        (**self).constants()
    }
}

/// Objective given by a pair of closures; handy for tests and synthetic checks.
pub struct FnObjective<F, G = fn(&DenseVector) -> DenseVector> {
    dim: usize,
    value: F,
    gradient: Option<G>,
    constants: SmoothnessConstants,
}

impl<F> FnObjective<F>
where
    F: Fn(&DenseVector) -> f64 + Send + Sync,
{
    pub fn new(dim: usize, value: F) -> Self {
        Self {
            dim,
            value,
            gradient: None,
            constants: SmoothnessConstants::default(),
        }
    }
}

impl<F, G> FnObjective<F, G>
where
    F: Fn(&DenseVector) -> f64 + Send + Sync,
    G: Fn(&DenseVector) -> DenseVector + Send + Sync,
{
    pub fn with_gradient(dim: usize, value: F, gradient: G) -> Self {
        Self {
            dim,
            value,
            gradient: Some(gradient),
            constants: SmoothnessConstants::default(),
        }
    }

    pub fn lipschitz(mut self, l: f64) -> Self {
        self.constants.lipschitz = Some(l);
        self
    }
}

impl<F, G> Objective for FnObjective<F, G>
where
    F: Fn(&DenseVector) -> f64 + Send + Sync,
    G: Fn(&DenseVector) -> DenseVector + Send + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, x: &DenseVector) -> f64 {
        (self.value)(x)
    }
    fn gradient(&self, x: &DenseVector) -> Option<DenseVector> {
        self.gradient.as_ref().map(|g| g(x))
    }
    fn constants(&self) -> SmoothnessConstants {
        self.constants
    }
}

// E[clamp(Z, -3, 3)^2] for standard normal Z.
const CLIPPED_NORMAL_SECOND_MOMENT: f64 = 0.995_007_278_034_453_5;

/// Additive oracle noise with `E[xi^2] <= level^2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum NoiseModel {
    None,
    /// Uniform on `[-sqrt(3) level, sqrt(3) level]`.
    Uniform { level: f64 },
    /// `level * Z` clamped to `±3 level`, rescaled to second moment exactly `level^2`.
    GaussianClipped { level: f64 },
    /// `level * sign(hint)`; a deterministic worst-case adversary.
    AdversarialSign { level: f64 },
}

impl NoiseModel {
    pub fn level(&self) -> f64 {
        match *self {
            NoiseModel::None => 0.0,
            NoiseModel::Uniform { level }
            | NoiseModel::GaussianClipped { level }
            | NoiseModel::AdversarialSign { level } => level,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let level = self.level();
        if !(level >= 0.0 && level.is_finite()) {
            return Err(Error::usage(format!(
                "noise level must be finite and non-negative, got {level}"
            )));
        }
        Ok(())
    }

    /// Draws one noise realization. `hint` only matters for the adversarial
    /// variant, whose sign follows it (zero counts as positive).
    pub fn sample(&self, rng: &mut RngStream, hint: f64) -> Result<f64> {
        self.validate()?;
        Ok(match *self {
            NoiseModel::None => 0.0,
            NoiseModel::Uniform { level } => {
                let half_width = 3f64.sqrt() * level;
                rng.uniform(-half_width, half_width)
            }
            NoiseModel::GaussianClipped { level } => {
                let z = rng.standard_normal().clamp(-3.0, 3.0);
                level * z / CLIPPED_NORMAL_SECOND_MOMENT.sqrt()
            }
            NoiseModel::AdversarialSign { level } => {
                if hint < 0.0 {
                    -level
                } else {
                    level
                }
            }
        })
    }
}

/// Noisy value oracle. Every query draws fresh noise (one-point feedback) and
/// bumps an atomic query counter, so a shared oracle can serve parallel
/// batch members.
pub struct ZeroOrderOracle<F> {
    objective: F,
    noise: NoiseModel,
    queries: AtomicU64,
}

impl<F: Objective> ZeroOrderOracle<F> {
    pub fn new(objective: F, noise: NoiseModel) -> Result<Self> {
        noise.validate()?;
        Ok(Self {
            objective,
            noise,
            queries: AtomicU64::new(0),
        })
    }

    pub fn objective(&self) -> &F {
        &self.objective
    }

    pub fn noise(&self) -> NoiseModel {
        self.noise
    }

    pub fn dim(&self) -> usize {
        self.objective.dim()
    }

    pub fn query_count(&self) -> u64 {
        self.queries.load(Ordering::Relaxed)
    }

    pub fn reset_count(&self) {
        self.queries.store(0, Ordering::Relaxed);
    }

    /// Returns `f(x) + xi` with `xi` freshly drawn from `rng`. The adversarial
    /// variant receives `f(x)` as its hint.
    pub fn query(&self, x: &DenseVector, rng: &mut RngStream) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::usage(format!(
                "query point has dimension {}, oracle expects {}",
                x.len(),
                self.dim()
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::usage("query point has non-finite entries"));
        }
        let value = self.objective.value(x);
        self.queries.fetch_add(1, Ordering::Relaxed);
        if !value.is_finite() {
            return Err(Error::Evaluation {
                x: x.iter().copied().collect(),
                value,
            });
        }
        Ok(value + self.noise.sample(rng, value)?)
    }
}

/// Largest per-coordinate mismatch between the analytic gradient and a
/// symmetric finite difference with step `step`, over `points`.
///
/// Mismatch is `|g_fd - g| / max(1, |g|)`. Returns `None` if the objective has
/// no analytic gradient.
pub fn gradient_check<F: Objective + ?Sized>(
    objective: &F,
    points: &[DenseVector],
    step: f64,
) -> Option<f64> {
    let mut worst: f64 = 0.0;
    for x in points {
        let g = objective.gradient(x)?;
        for i in 0..x.len() {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[i] += step;
            xm[i] -= step;
            let fd = (objective.value(&xp) - objective.value(&xm)) / (2.0 * step);
            worst = worst.max((fd - g[i]).abs() / g[i].abs().max(1.0));
        }
    }
    Some(worst)
}
