//! Reward functions over normalized power `x` and delivered data ratio `y`.
//!
//! All three are non-positive: higher is better, zero only for a cell that
//! draws no power and loses nothing.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum RewardError {
    #[error("linear coefficient c = {0} outside [0, 1]")]
    Coefficient(f64),
    #[error("qos threshold constants violate a > 0 and -a >= y0 - b (a = {a}, b = {b}, y0 = {y0})")]
    Threshold { a: f64, b: f64, y0: f64 },
    #[error("approximated qos constants violate 0 < y0 < 1, m > 0, alpha > 1 (y0 = {y0}, m = {m}, alpha = {alpha})")]
    Approx { y0: f64, m: f64, alpha: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RewardSpec {
    Linear { c: f64 },
    QosThreshold { a: f64, b: f64, y0: f64 },
    QosApprox { y0: f64, m: f64, alpha: f64 },
}

impl Default for RewardSpec {
    fn default() -> Self {
        RewardSpec::QosApprox {
            y0: 0.9,
            m: 2.0,
            alpha: 3.0,
        }
    }
}

impl RewardSpec {
    pub fn linear_default() -> Self {
        RewardSpec::Linear { c: 0.75 }
    }

    /// `a = 1`, `b = 1 + y0` with `y0 = 0.9`.
    pub fn threshold_default() -> Self {
        RewardSpec::QosThreshold { a: 1.0, b: 1.9, y0: 0.9 }
    }

    pub fn validate(&self) -> Result<(), RewardError> {
        match *self {
            RewardSpec::Linear { c } => {
                if !(0.0..=1.0).contains(&c) {
                    return Err(RewardError::Coefficient(c));
                }
            }
            RewardSpec::QosThreshold { a, b, y0 } => {
                // b = 1 + y0 is the intended equality case and is not exact in f64
                if !(a > 0.0 && -a >= y0 - b - 1e-12) {
                    return Err(RewardError::Threshold { a, b, y0 });
                }
            }
            RewardSpec::QosApprox { y0, m, alpha } => {
                if !(y0 > 0.0 && y0 < 1.0 && m > 0.0 && alpha > 1.0) {
                    return Err(RewardError::Approx { y0, m, alpha });
                }
            }
        }
        Ok(())
    }

    pub fn evaluate(&self, x: f64, y: f64) -> f64 {
        match *self {
            RewardSpec::Linear { c } => reward_linear(x, y, c),
            RewardSpec::QosThreshold { a, b, y0 } => reward_qos_threshold(x, y, a, b, y0),
            RewardSpec::QosApprox { y0, m, alpha } => reward_qos_approx(x, y, y0, m, alpha),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            RewardSpec::Linear { .. } => "linear",
            RewardSpec::QosThreshold { .. } => "qos_threshold",
            RewardSpec::QosApprox { .. } => "qos_approx",
        }
    }
}

pub fn reward_linear(x: f64, y: f64, c: f64) -> f64 {
    -(1.0 - c) * x - c * (1.0 - y)
}

pub fn reward_qos_threshold(x: f64, y: f64, a: f64, b: f64, y0: f64) -> f64 {
    if y >= y0 {
        -a * x
    } else {
        y - b
    }
}

/// Smooth approximation of the QoS-threshold reward.
///
/// With `u = ((1-y) / ((1-y0)(1-x)))^m` the reward is
/// `-(u·A + x) / (u + 1)`, `A = 1 + (alpha-1)(1-y)`. It is evaluated as the
/// blend `-(w·A + (1-w)·x)` with `w = u/(u+1)` taken from `ln u`, which
/// stays finite for any `m` and extends continuously to `x = 1`.
pub fn reward_qos_approx(x: f64, y: f64, y0: f64, m: f64, alpha: f64) -> f64 {
    let fail = 1.0 - y;
    let amplitude = 1.0 + (alpha - 1.0) * fail;
    if fail <= 0.0 {
        return -x;
    }
    if x >= 1.0 {
        return -amplitude;
    }
    let ln_u = m * (fail.ln() - (1.0 - y0).ln() - (1.0 - x).ln());
    let w = 1.0 / (1.0 + (-ln_u).exp());
    -(w * amplitude + (1.0 - w) * x)
}
