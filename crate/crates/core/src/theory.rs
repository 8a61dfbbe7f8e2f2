//! Closed-form iteration, oracle and noise budgets for ZO-AccSGD.
//!
//! Every `O(.)` is evaluated with constant 1, so outputs are scale-free:
//! ratios and exponents are meaningful, absolute values are not.

use serde::{Deserialize, Serialize};

use crate::kernels::{Convention, KernelConstants};
use crate::optimizers::rho_b;
use crate::{Error, Result};

/// Where the batch size sits relative to `4 d kappa`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum BatchRegime {
    #[serde(rename = "B_eq_1")]
    BEq1,
    #[serde(rename = "B_lt_4dk")]
    BLt4dk,
    #[serde(rename = "B_eq_4dk")]
    BEq4dk,
    #[serde(rename = "B_gt_4dk")]
    BGt4dk,
}

impl BatchRegime {
    /// `B = 1` takes precedence; `B` within one sample of `4 d kappa` counts as equal.
    pub fn classify(d: usize, kappa: f64, batch: usize) -> Self {
        let threshold = 4.0 * d as f64 * kappa;
        let b = batch as f64;
        if batch == 1 {
            Self::BEq1
        } else if (b - threshold).abs() < 1.0 {
            Self::BEq4dk
        } else if b < threshold {
            Self::BLt4dk
        } else {
            Self::BGt4dk
        }
    }

    pub fn id(self) -> &'static str {
        match self {
            Self::BEq1 => "B_eq_1",
            Self::BLt4dk => "B_lt_4dk",
            Self::BEq4dk => "B_eq_4dk",
            Self::BGt4dk => "B_gt_4dk",
        }
    }

    fn large_batch(self) -> bool {
        self == Self::BGt4dk
    }
}

/// Which noise formula produced `delta_max`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum NoiseBranch {
    /// `eps^{3/2} / sqrt(d)`.
    #[serde(rename = "beta_ge_7_3")]
    BetaAtLeast7Over3,
    /// `eps^{(3 beta + 1) / (4 (beta - 1))} / sqrt(d)`.
    #[serde(rename = "beta_lt_7_3")]
    BetaBelow7Over3,
    /// `eps^{(3 beta + 1) / (4 (beta - 1))} sqrt(B) / d`.
    #[serde(rename = "large_batch")]
    LargeBatch,
}

fn check_inputs(eps: f64, d: usize, beta: f64) -> Result<()> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::usage(format!(
            "accuracy eps must lie in (0, 1) for the asymptotic formulas, got {eps}"
        )));
    }
    if d == 0 {
        return Err(Error::usage("dimension must be at least 1"));
    }
    if !(beta > 2.0 && beta.is_finite()) {
        return Err(Error::usage(format!(
            "smoothness order beta must exceed 2, got {beta}"
        )));
    }
    Ok(())
}

/// `(3 beta + 1) / (4 (beta - 1))`.
pub fn noise_exponent(beta: f64) -> f64 {
    (3.0 * beta + 1.0) / (4.0 * (beta - 1.0))
}

/// Smoothing parameter `h` for the regime.
pub fn smoothing_choice(eps: f64, d: usize, beta: f64, regime: BatchRegime) -> Result<f64> {
    check_inputs(eps, d, beta)?;
    let bias_term = eps.powf(1.0 / (beta - 1.0));
    if regime.large_batch() {
        return Ok(bias_term);
    }
    let dim_term = eps.powf(3.0 / (4.0 * (beta - 1.0))) / (d as f64).powf(1.0 / (2.0 * (beta - 1.0)));
    Ok(eps.powf(0.75).min(bias_term).min(dim_term))
}

/// Largest oracle noise `Delta` for which accuracy `eps` remains reachable,
/// and the formula branch used.
pub fn max_noise_branch(eps: f64, d: usize, beta: f64, batch: usize, kappa: f64) -> Result<(f64, NoiseBranch)> {
    check_inputs(eps, d, beta)?;
    if batch == 0 {
        return Err(Error::usage("batch size must be at least 1"));
    }
    let d_f = d as f64;
    Ok(match BatchRegime::classify(d, kappa, batch) {
        BatchRegime::BGt4dk => (
            eps.powf(noise_exponent(beta)) * (batch as f64).sqrt() / d_f,
            NoiseBranch::LargeBatch,
        ),
        _ if beta >= 7.0 / 3.0 => (eps.powf(1.5) / d_f.sqrt(), NoiseBranch::BetaAtLeast7Over3),
        _ => (eps.powf(noise_exponent(beta)) / d_f.sqrt(), NoiseBranch::BetaBelow7Over3),
    })
}

pub fn max_noise(eps: f64, d: usize, beta: f64, batch: usize, kappa: f64) -> Result<f64> {
    max_noise_branch(eps, d, beta, batch, kappa).map(|(delta, _)| delta)
}

/// Planner inputs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanInputs {
    pub d: usize,
    pub beta: f64,
    pub lipschitz: f64,
    /// `R = ‖x_0 - x*‖`.
    pub radius: f64,
    pub eps: f64,
    pub batch: usize,
    /// Target noise level; enables `required_batch`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_target: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplexityPlan {
    pub case_id: BatchRegime,
    /// Iterations.
    #[serde(rename = "N")]
    pub n: f64,
    /// Oracle calls.
    #[serde(rename = "T")]
    pub t: f64,
    pub h: f64,
    pub delta_max: f64,
    pub noise_branch: NoiseBranch,
    #[serde(rename = "rho_B")]
    pub rho_b: f64,
    /// `d^2 Delta^2 / eps^{3/2 + 2/(beta-1)}` for the supplied noise target.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub required_batch: Option<f64>,
    pub kappa: f64,
    pub kappa_convention: Convention,
    pub inputs: PlanInputs,
    pub scale_free: bool,
}

/// Selects the batch regime and evaluates all budgets for it.
pub fn plan(inputs: &PlanInputs, constants: &KernelConstants) -> Result<ComplexityPlan> {
    let PlanInputs {
        d,
        beta,
        lipschitz,
        radius,
        eps,
        batch,
        delta_target,
    } = *inputs;
    check_inputs(eps, d, beta)?;
    if !(lipschitz > 0.0 && radius > 0.0) {
        return Err(Error::usage("L and R must be positive"));
    }
    if batch == 0 {
        return Err(Error::usage("batch size must be at least 1"));
    }
    if let Some(delta) = delta_target {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::usage(format!("noise target must be positive, got {delta}")));
        }
    }
    let convention = Convention::Expectation;
    let kappa = constants.kappa(convention);
    let regime = BatchRegime::classify(d, kappa, batch);
    let (d_f, b_f) = (d as f64, batch as f64);
    let base = (lipschitz * radius * radius / eps).sqrt();
    let n = match regime {
        BatchRegime::BEq1 => d_f * base,
        BatchRegime::BLt4dk => d_f * base / b_f,
        BatchRegime::BEq4dk | BatchRegime::BGt4dk => base,
    };
    let (delta_max, noise_branch) = max_noise_branch(eps, d, beta, batch, kappa)?;
    let t = if regime.large_batch() {
        let delta = delta_target.unwrap_or(delta_max);
        (d_f * base).max(d_f * d_f * delta * delta / eps.powf(2.0 + 2.0 / (beta - 1.0)))
    } else {
        n * b_f
    };
    let required_batch = delta_target.map(|delta| d_f * d_f * delta * delta / eps.powf(1.5 + 2.0 / (beta - 1.0)));
    Ok(ComplexityPlan {
        case_id: regime,
        n,
        t,
        h: smoothing_choice(eps, d, beta, regime)?,
        delta_max,
        noise_branch,
        rho_b: rho_b(d, kappa, batch),
        required_batch,
        kappa,
        kappa_convention: convention,
        inputs: *inputs,
        scale_free: true,
    })
}
