//! Odd polynomial smoothing kernels on `[-1, 1]`.
//!
//! A kernel serving smoothness order `beta` must satisfy, under the uniform
//! law on `[-1, 1]`: `E[K] = 0`, `E[rK] = 1`, `E[r^j K] = 0` for `j = 2..=l`
//! where `l` is the largest integer strictly below `beta`. Oddness gives the
//! even-`j` conditions for free.

use serde::{Deserialize, Serialize};

use crate::quadrature::GaussLegendre;
use crate::{Error, Result};

/// Tolerance applied to every moment condition.
pub const MOMENT_TOLERANCE: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub name: String,
    /// Smoothness orders this kernel is meant for, e.g. `[3, 4]`.
    pub beta_targets: Vec<u32>,
    /// `coefficients[i]` multiplies `r^i`.
    pub coefficients: Vec<f64>,
    /// Highest moment order that must vanish.
    pub l: u32,
}

impl KernelSpec {
    /// Legendre-based kernel for `beta` in `{3, 4, 5, 6}`.
    ///
    /// * `beta = 3, 4`: `K(r) = (15 r / 4)(5 - 7 r^2)`
    /// * `beta = 5, 6`: `K(r) = (105 r / 64)(99 r^4 - 126 r^2 + 35)`
    pub fn legendre(beta: u32) -> Result<Self> {
        let (targets, coefficients) = match beta {
            3 | 4 => (vec![3, 4], vec![0.0, 75.0 / 4.0, 0.0, -105.0 / 4.0]),
            5 | 6 => {
                let c = 105.0 / 64.0;
                (
                    vec![5, 6],
                    vec![0.0, 35.0 * c, 0.0, -126.0 * c, 0.0, 99.0 * c],
                )
            }
            _ => {
                return Err(Error::usage(format!(
                    "no Legendre kernel for beta = {beta}; supported: 3, 4, 5, 6"
                )))
            }
        };
        Self::custom(
            format!("legendre-beta{}-{}", targets[0], targets[1]),
            targets,
            coefficients,
        )
    }

    /// A user-supplied odd polynomial kernel. Moment conditions are *not*
    /// checked here; run [`KernelSpec::validate_moments`] before use.
    pub fn custom(name: impl Into<String>, beta_targets: Vec<u32>, coefficients: Vec<f64>) -> Result<Self> {
        let max_beta = beta_targets
            .iter()
            .copied()
            .max()
            .ok_or_else(|| Error::usage("kernel must serve at least one beta"))?;
        if max_beta < 2 {
            return Err(Error::usage("kernel beta targets must be at least 2"));
        }
        let spec = Self {
            name: name.into(),
            beta_targets,
            coefficients,
            l: max_beta - 1,
        };
        spec.check_structure()?;
        Ok(spec)
    }

    /// Oddness, finiteness and `l` consistency; used after deserializing.
    pub fn check_structure(&self) -> Result<()> {
        if self.coefficients.iter().any(|c| !c.is_finite()) {
            return Err(Error::usage("kernel coefficients must be finite"));
        }
        if let Some((i, _)) = self
            .coefficients
            .iter()
            .enumerate()
            .find(|(i, c)| i % 2 == 0 && **c != 0.0)
        {
            return Err(Error::usage(format!(
                "kernel must be odd, but the r^{i} coefficient is non-zero"
            )));
        }
        let expected_l = self.beta_targets.iter().copied().max().unwrap_or(0).saturating_sub(1);
        if self.l != expected_l {
            return Err(Error::usage(format!(
                "kernel l = {} does not match beta targets (expected {expected_l})",
                self.l
            )));
        }
        Ok(())
    }

    pub fn degree(&self) -> usize {
        self.coefficients
            .iter()
            .rposition(|c| *c != 0.0)
            .unwrap_or(0)
    }

    /// `K(r)` without the domain check; the estimators' hot path.
    #[inline]
    pub fn value(&self, r: f64) -> f64 {
        self.coefficients.iter().rev().fold(0.0, |acc, c| acc * r + c)
    }

    pub fn eval(&self, r: f64) -> Result<f64> {
        if !(-1.0..=1.0).contains(&r) {
            return Err(Error::usage(format!("kernel argument {r} outside [-1, 1]")));
        }
        Ok(self.value(r))
    }

    /// `E[r^j K(r)]` for `j = 0..=l`, `r ~ U[-1, 1]`, by Gauss–Legendre.
    pub fn validate_moments(&self, quad_points: usize) -> Result<MomentReport> {
        let needed = self.degree() + 2;
        if quad_points < needed {
            return Err(Error::usage(format!(
                "{quad_points} quadrature points cannot integrate this kernel exactly; need at least {needed}"
            )));
        }
        let rule = GaussLegendre::new(quad_points);
        let moments: Vec<MomentCheck> = (0..=self.l)
            .map(|j| {
                let value = 0.5 * rule.integrate(-1.0, 1.0, |r| r.powi(j as i32) * self.value(r));
                let expected = if j == 1 { 1.0 } else { 0.0 };
                let abs_error = (value - expected).abs();
                MomentCheck {
                    order: j,
                    value,
                    expected,
                    abs_error,
                    passed: abs_error < MOMENT_TOLERANCE,
                }
            })
            .collect();
        Ok(MomentReport {
            kernel: self.name.clone(),
            quad_points,
            tolerance: MOMENT_TOLERANCE,
            passed: moments.iter().all(|m| m.passed),
            moments,
        })
    }

    /// `kappa = ∫K^2` and `kappa_beta = ∫|u|^beta |K(u)|` under both the plain
    /// integral and the uniform-expectation conventions.
    ///
    /// `|u|^beta |K|` has kinks at the roots of `K` (and at 0 for non-integer
    /// `beta`), so the integral is split there. Fails if doubling
    /// `quad_points` moves either constant by `1e-8` or more, or if a plain
    /// constant exceeds its Legendre bound (`3 beta^3`, `2 sqrt(2) (beta - 1)`).
    pub fn compute_constants(&self, beta: f64, quad_points: usize) -> Result<KernelConstants> {
        if !(beta >= 1.0 && beta.is_finite()) {
            return Err(Error::usage(format!("beta must be >= 1, got {beta}")));
        }
        if quad_points == 0 {
            return Err(Error::usage("quad_points must be positive"));
        }
        let breaks = self.breakpoints();
        let (kappa, kappa_beta) = self.plain_constants(beta, &breaks, quad_points);
        let (kappa2, kappa_beta2) = self.plain_constants(beta, &breaks, 2 * quad_points);
        let drift = (kappa - kappa2).abs().max((kappa_beta - kappa_beta2).abs());
        if drift >= 1e-8 {
            return Err(Error::usage(format!(
                "{quad_points} quadrature points are not enough: doubling moves the constants by {drift:e}"
            )));
        }
        let constants = KernelConstants {
            beta,
            plain: ConstantPair {
                kappa: kappa2,
                kappa_beta: kappa_beta2,
            },
            expectation: ConstantPair {
                kappa: 0.5 * kappa2,
                kappa_beta: 0.5 * kappa_beta2,
            },
        };
        constants.check_bounds()?;
        Ok(constants)
    }

    fn plain_constants(&self, beta: f64, breaks: &[f64], n: usize) -> (f64, f64) {
        let rule = GaussLegendre::new(n);
        let mut kappa = 0.0;
        let mut kappa_beta = 0.0;
        for w in breaks.windows(2) {
            kappa += rule.integrate(w[0], w[1], |u| self.value(u).powi(2));
            kappa_beta += rule.integrate(w[0], w[1], |u| u.abs().powf(beta) * self.value(u).abs());
        }
        (kappa, kappa_beta)
    }

    /// Sorted `{-1, 0, 1}` plus the roots of `K` in `(-1, 1)`.
    fn breakpoints(&self) -> Vec<f64> {
        const SCAN: usize = 4096;
        let mut pts = vec![-1.0, 0.0, 1.0];
        let grid = |i: usize| -1.0 + 2.0 * i as f64 / SCAN as f64;
        for i in 0..SCAN {
            let (mut a, mut b) = (grid(i), grid(i + 1));
            let (fa, fb) = (self.value(a), self.value(b));
            if fb == 0.0 && i + 1 < SCAN {
                pts.push(b);
                continue;
            }
            if fa * fb >= 0.0 {
                continue;
            }
            let mut fa = fa;
            for _ in 0..200 {
                let m = 0.5 * (a + b);
                let fm = self.value(m);
                if fm == 0.0 || b - a < 1e-16 {
                    a = m;
                    b = m;
                    break;
                }
                if fa * fm < 0.0 {
                    b = m;
                } else {
                    a = m;
                    fa = fm;
                }
            }
            pts.push(0.5 * (a + b));
        }
        pts.sort_by(f64::total_cmp);
        pts.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
        pts
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentCheck {
    pub order: u32,
    pub value: f64,
    pub expected: f64,
    pub abs_error: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentReport {
    pub kernel: String,
    pub quad_points: usize,
    pub tolerance: f64,
    pub moments: Vec<MomentCheck>,
    pub passed: bool,
}

impl MomentReport {
    pub fn first_failure(&self) -> Option<&MomentCheck> {
        self.moments.iter().find(|m| !m.passed)
    }
}

/// Which normalization a kernel constant uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Convention {
    /// `E[.]` under `U[-1, 1]`; used wherever constants feed algorithm parameters.
    Expectation,
    /// Plain `∫_{-1}^{1}`; the convention of the Legendre bounds.
    PlainIntegral,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstantPair {
    pub kappa: f64,
    pub kappa_beta: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelConstants {
    pub beta: f64,
    pub plain: ConstantPair,
    pub expectation: ConstantPair,
}

impl KernelConstants {
    pub fn kappa(&self, convention: Convention) -> f64 {
        self.pair(convention).kappa
    }

    pub fn kappa_beta(&self, convention: Convention) -> f64 {
        self.pair(convention).kappa_beta
    }

    fn pair(&self, convention: Convention) -> ConstantPair {
        match convention {
            Convention::Expectation => self.expectation,
            Convention::PlainIntegral => self.plain,
        }
    }

    pub fn kappa_bound(&self) -> f64 {
        3.0 * self.beta.powi(3)
    }

    pub fn kappa_beta_bound(&self) -> f64 {
        2.0 * 2f64.sqrt() * (self.beta - 1.0)
    }

    pub fn check_bounds(&self) -> Result<()> {
        if self.plain.kappa > self.kappa_bound() {
            return Err(Error::Consistency(format!(
                "kappa = {} exceeds 3 beta^3 = {}",
                self.plain.kappa,
                self.kappa_bound()
            )));
        }
        if self.plain.kappa_beta > self.kappa_beta_bound() {
            return Err(Error::Consistency(format!(
                "kappa_beta = {} exceeds 2 sqrt(2) (beta - 1) = {}",
                self.plain.kappa_beta,
                self.kappa_beta_bound()
            )));
        }
        Ok(())
    }
}
