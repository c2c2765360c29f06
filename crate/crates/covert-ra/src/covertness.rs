//! Warden detection model: minimum detection-error probability under a
//! log-uniform noise-uncertainty prior, the covertness power budget, and a
//! grid-search oracle validating the closed form.
//!
//! Each warden runs an energy detector whose noise power is only known to lie
//! in `[sigma~^2 / rho, rho * sigma~^2]` with a log-uniform prior. In the
//! long-observation limit the detection error probability (false alarm plus
//! missed detection at threshold `gamma`) is
//! `1 - (F(gamma) - F(gamma - v))` where `v` is the received signal power and
//! `F` is the prior CDF. Minimizing over `gamma` gives the closed form in
//! [`min_dep`]; [`dep_oracle`] minimizes the same expression numerically and
//! is kept independent of the closed-form path.

use thiserror::Error;

use crate::beamforming::Beamformer;
use crate::geometry::{received_power, ChannelVector, SystemParams};

#[derive(Debug, Error)]
pub enum CovertnessError {
    #[error("degenerate noise-uncertainty model: rho must exceed 1")]
    DegenerateNoiseModel,
    #[error("oracle grid must have at least 1000 points, got {0}")]
    GridTooCoarse(usize),
}

/// Outcome of the warden's optimal energy detection for one received power.
#[derive(Debug, Clone, Copy)]
pub struct DetectionOutcome {
    /// Minimum detection error probability over all thresholds, in [0, 1].
    pub dep_min: f64,
    /// Threshold attaining the minimum, watts.
    pub optimal_threshold: f64,
    /// Received signal power `v` at the warden, watts.
    pub received_power: f64,
}

/// Maximum received signal power at any warden compatible with the
/// covertness requirement `dep >= 1 - delta`.
#[derive(Debug, Clone, Copy)]
pub struct CovertBudget {
    pub eta: f64,
}

/// Received signal power `|w^H h_k|^2` at a warden, watts.
pub fn willie_power(w: &Beamformer, hk: &ChannelVector) -> f64 {
    received_power(w, hk)
}

/// Closed-form minimum detection error probability
/// `max(0, 1 - ln(1 + rho v / sigma~^2) / (2 ln rho))`, clamped to [0, 1].
pub fn min_dep(v: f64, params: &SystemParams) -> Result<f64, CovertnessError> {
    let rho = params.noise_uncertainty;
    if rho <= 1.0 {
        return Err(CovertnessError::DegenerateNoiseModel);
    }
    let s2 = params.noise_willie_nominal;
    let dep = 1.0 - (1.0 + rho * v / s2).ln() / (2.0 * rho.ln());
    Ok(dep.clamp(0.0, 1.0))
}

/// Covertness power budget
/// `eta = min(sigma~^2 (rho - 1/rho), (rho^(2 delta) - 1) sigma~^2 / rho)`.
pub fn covert_budget(params: &SystemParams) -> CovertBudget {
    let rho = params.noise_uncertainty;
    let s2 = params.noise_willie_nominal;
    let delta = params.covert_tolerance;
    let a = s2 * (rho - 1.0 / rho);
    let b = (rho.powf(2.0 * delta) - 1.0) * s2 / rho;
    CovertBudget { eta: a.min(b) }
}

/// CDF of the log-uniform noise-power prior on
/// `[sigma~^2 / rho, rho sigma~^2]`.
fn noise_cdf(x: f64, rho: f64, s2: f64) -> f64 {
    ((x * rho / s2).ln() / (2.0 * rho.ln())).clamp(0.0, 1.0)
}

/// Grid minimization of the detection error probability over the threshold,
/// independent of the closed form in [`min_dep`].
///
/// Scans `gamma` over `[sigma~^2 / rho, rho sigma~^2 + v]` on a uniform grid
/// and evaluates `1 - (F(gamma) - F(gamma - v))` at every point.
pub fn dep_oracle(
    v: f64,
    params: &SystemParams,
    grid_size: usize,
) -> Result<DetectionOutcome, CovertnessError> {
    let rho = params.noise_uncertainty;
    if rho <= 1.0 {
        return Err(CovertnessError::DegenerateNoiseModel);
    }
    if grid_size < 1000 {
        return Err(CovertnessError::GridTooCoarse(grid_size));
    }
    let s2 = params.noise_willie_nominal;
    let lo = s2 / rho;
    let hi = rho * s2 + v;
    let mut best = f64::INFINITY;
    let mut best_gamma = lo;
    for i in 0..=grid_size {
        let gamma = lo + (hi - lo) * i as f64 / grid_size as f64;
        let dep = 1.0 - (noise_cdf(gamma, rho, s2) - noise_cdf(gamma - v, rho, s2));
        if dep < best {
            best = dep;
            best_gamma = gamma;
        }
    }
    Ok(DetectionOutcome {
        dep_min: best,
        optimal_threshold: best_gamma,
        received_power: v,
    })
}
