//! Alternating optimization driver and baseline runs.
//!
//! The full design alternates between the beamforming cone program (elements
//! fixed) and one safeguarded rotation step (beamformer fixed), starting
//! from all boresights at +z, until the fractional rate increase drops below
//! a threshold or the iteration cap is reached. Every accepted iterate keeps
//! the true leakage powers inside the covert budget, and the rate trace is
//! non-decreasing by construction: the beamforming resolve is only adopted
//! when it does not lower the received power, and rotation steps pass the
//! true-objective safeguard.
//!
//! The beamforming optimum saturates the leakage caps, which leaves the
//! w-fixed rotation step almost no room: with the beamformer pinned, any
//! rotation of more than a few microradians pushes some warden over a budget
//! that sits fourteen orders of magnitude below the constraint curvature.
//! Rotation progress at realistic budgets therefore comes from a joint
//! fallback: when the safeguarded step collapses, a step proposed on the
//! objective model alone is accepted together with a fresh beamforming
//! resolve at the rotated state, and only if the re-nulled pair strictly
//! improves the rate. Both acceptance paths keep every emitted iterate
//! covert-feasible.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::beamforming::{solve_beamforming, Beamformer};
use crate::conic::SolveStatus;
use crate::covertness::{covert_budget, willie_power};
use crate::geometry::{
    channel_vector, covert_rate, received_power, ArrayScene, ChannelVector, RotationState,
    SystemParams,
};
use crate::rotation::{
    constraint_surrogate, objective_surrogate, safeguarded_update, solve_rotation_step,
};

#[derive(Debug, Error)]
pub enum AoError {
    #[error("unknown scheme '{0}'")]
    UnknownScheme(String),
    #[error("scheme '{0}' is not a baseline")]
    NotABaseline(String),
}

/// Driver configuration shared by all schemes.
#[derive(Debug, Clone)]
pub struct AOConfig {
    /// Iteration cap for the alternating loop.
    pub max_iters: usize,
    /// Fractional rate-increase threshold that stops the loop.
    pub rel_tol: f64,
    /// Scheme name: one of `ra`, `fixed`, `random`, `isotropic`.
    pub scheme: String,
    /// Seed for every stochastic element of the run.
    pub seed: u64,
    /// Half-width of the uniform perturbation applied to the initial
    /// rotation of the `ra` scheme, radians. Zero starts exactly at
    /// boresight +z.
    pub init_perturbation: f64,
    /// Feasibility/gap tolerance handed to the cone solver.
    pub solver_tol: f64,
}

impl Default for AOConfig {
    fn default() -> Self {
        Self {
            max_iters: 30,
            rel_tol: 1e-3,
            scheme: "ra".to_string(),
            seed: 0,
            init_perturbation: 0.0,
            solver_tol: 1e-8,
        }
    }
}

/// Outcome of one optimization run.
#[derive(Debug, Clone)]
pub struct AOResult {
    pub beamformer: Beamformer,
    pub rotation: RotationState,
    /// Achieved rate after the initial beamforming solve and after each
    /// alternating iteration, bits/s/Hz.
    pub rate_trace: Vec<f64>,
    /// Largest leakage-to-budget ratio `max_k |w^H h_k|^2 / eta` at each
    /// trace point.
    pub willie_ratio_trace: Vec<f64>,
    /// Final per-warden leakage powers, watts.
    pub willie_powers: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

fn warden_channels(
    scene: &ArrayScene,
    rotation: &RotationState,
    params: &SystemParams,
) -> Vec<ChannelVector> {
    (1..=scene.num_wardens())
        .map(|k| channel_vector(scene, k, rotation, params))
        .collect()
}

fn max_leakage_ratio(w: &Beamformer, hks: &[ChannelVector], eta: f64) -> f64 {
    hks.iter()
        .map(|hk| willie_power(w, hk) / eta)
        .fold(0.0, f64::max)
}

fn offset_rotation(
    base: &RotationState,
    delta: &[[f64; 2]],
    scale: f64,
    params: &SystemParams,
) -> RotationState {
    let angles = base
        .angles()
        .iter()
        .zip(delta.iter())
        .map(|(a, d)| {
            [
                (a[0] + d[0] * scale).clamp(0.0, params.theta_max),
                (a[1] + d[1] * scale).clamp(0.0, 2.0 * std::f64::consts::PI),
            ]
        })
        .collect();
    RotationState::new(angles, params.theta_max).expect("clamped angles stay inside the box")
}

fn initial_rotation(scene: &ArrayScene, params: &SystemParams, config: &AOConfig) -> RotationState {
    let n = scene.num_antennas();
    if config.init_perturbation <= 0.0 {
        return RotationState::zeros(n);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let p = config.init_perturbation;
    let angles = (0..n)
        .map(|_| {
            let dz: f64 = rng.gen_range(-p..=p);
            let da: f64 = rng.gen_range(-p..=p);
            [
                dz.clamp(0.0, params.theta_max),
                da.clamp(0.0, 2.0 * std::f64::consts::PI),
            ]
        })
        .collect();
    RotationState::new(angles, params.theta_max).expect("perturbation clamped into the box")
}

/// Runs the alternating rotation/beamforming optimization (the `ra` scheme).
///
/// Numeric failures never abort the run: the last feasible iterate is kept
/// and the loop continues or terminates on the rate test.
pub fn run_ao(scene: &ArrayScene, params: &SystemParams, config: &AOConfig) -> AOResult {
    assert!(config.max_iters >= 1, "need at least one iteration");
    assert!(config.rel_tol > 0.0, "rate threshold must be positive");
    let eta = covert_budget(params).eta;
    let mut rotation = initial_rotation(scene, params, config);

    let mut h0 = channel_vector(scene, 0, &rotation, params);
    let mut hks = warden_channels(scene, &rotation, params);
    let sol = solve_beamforming(&h0, &hks, eta, params.pmax, config.solver_tol);
    let mut w = if sol.status == SolveStatus::Optimal {
        sol.beamformer
    } else {
        Beamformer::zeros(scene.num_antennas())
    };

    let mut rate = covert_rate(&w, &h0, params);
    let mut rate_trace = vec![rate];
    let mut ratio_trace = vec![max_leakage_ratio(&w, &hks, eta)];
    let mut iterations = 0;
    let mut converged = false;

    for i in 1..=config.max_iters {
        iterations = i;

        // rotation substep: surrogate, cone step, true-value safeguard
        let surrogates = objective_surrogate(scene, &rotation, &w, params).and_then(|obj| {
            (1..=scene.num_wardens())
                .map(|k| constraint_surrogate(scene, &rotation, &w, params, k))
                .collect::<Result<Vec<_>, _>>()
                .map(|cons| (obj, cons))
        });
        match surrogates {
            Ok((obj, cons)) => {
                let step = solve_rotation_step(
                    &obj,
                    &cons,
                    &rotation,
                    eta,
                    params.theta_max,
                    config.solver_tol,
                );
                let power_before = received_power(&w, &h0);
                let (next, taken) = safeguarded_update(scene, &rotation, &w, step, eta, params);
                if taken.accepted && !taken.is_zero() {
                    rotation = next;
                }
                let power_after = received_power(&w, &channel_vector(scene, 0, &rotation, params));
                // saturated leakage caps confine the w-fixed step to
                // microradians; when it stalls in rate terms, propose on the
                // objective model alone and accept the rotation jointly with
                // a re-nulled beamformer if the pair strictly improves
                let stalled = power_after
                    <= power_before * (1.0 + config.rel_tol * rate.max(1e-12) * f64::ln(2.0));
                if stalled && !cons.is_empty() {
                    let free = solve_rotation_step(
                        &obj,
                        &[],
                        &rotation,
                        eta,
                        params.theta_max,
                        config.solver_tol,
                    );
                    if free.accepted && !free.is_zero() {
                        let base_power = power_after;
                        for backtracks in 0..=10 {
                            let scale = 0.5f64.powi(backtracks);
                            let cand = offset_rotation(&rotation, &free.delta, scale, params);
                            let ch0 = channel_vector(scene, 0, &cand, params);
                            let chks = warden_channels(scene, &cand, params);
                            let sol =
                                solve_beamforming(&ch0, &chks, eta, params.pmax, config.solver_tol);
                            if sol.status == SolveStatus::Optimal
                                && received_power(&sol.beamformer, &ch0) > base_power
                            {
                                rotation = cand;
                                w = sol.beamformer;
                                break;
                            }
                        }
                    }
                }
            }
            Err(_) => break,
        }

        // beamforming substep: adopt the resolve only if it does not lower
        // the received power (the previous w stays feasible at the new
        // rotation thanks to the acceptance rules above)
        h0 = channel_vector(scene, 0, &rotation, params);
        hks = warden_channels(scene, &rotation, params);
        let sol = solve_beamforming(&h0, &hks, eta, params.pmax, config.solver_tol);
        if sol.status == SolveStatus::Optimal
            && received_power(&sol.beamformer, &h0) >= received_power(&w, &h0)
        {
            w = sol.beamformer;
        }

        let new_rate = covert_rate(&w, &h0, params);
        rate_trace.push(new_rate);
        ratio_trace.push(max_leakage_ratio(&w, &hks, eta));
        let frac = (new_rate - rate) / rate.max(1e-12);
        rate = new_rate;
        if frac < config.rel_tol {
            converged = true;
            break;
        }
    }

    let willie_powers = hks.iter().map(|hk| willie_power(&w, hk)).collect();
    AOResult {
        beamformer: w,
        rotation,
        rate_trace,
        willie_ratio_trace: ratio_trace,
        willie_powers,
        iterations,
        converged,
    }
}

/// Runs one of the non-adaptive baselines: `fixed` (all boresights at +z),
/// `random` (seeded uniform draws over the rotational range), or
/// `isotropic` (directivity exponent forced to zero, boresights at +z).
/// Each performs a single beamforming solve.
pub fn run_baseline(
    scene: &ArrayScene,
    params: &SystemParams,
    config: &AOConfig,
) -> Result<AOResult, AoError> {
    let n = scene.num_antennas();
    let (rotation, eff_params) = match config.scheme.as_str() {
        "fixed" => (RotationState::zeros(n), params.clone()),
        "isotropic" => (RotationState::zeros(n), params.with_directivity(0.0)),
        "random" => {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            let angles = (0..n)
                .map(|_| {
                    let tz: f64 = rng.gen_range(0.0..=params.theta_max);
                    let ta: f64 = rng.gen::<f64>() * 2.0 * std::f64::consts::PI;
                    [tz, ta]
                })
                .collect();
            (
                RotationState::new(angles, params.theta_max).expect("draws lie in the box"),
                params.clone(),
            )
        }
        "ra" => return Err(AoError::NotABaseline(config.scheme.clone())),
        other => return Err(AoError::UnknownScheme(other.to_string())),
    };
    let eta = covert_budget(&eff_params).eta;
    let h0 = channel_vector(scene, 0, &rotation, &eff_params);
    let hks = warden_channels(scene, &rotation, &eff_params);
    let sol = solve_beamforming(&h0, &hks, eta, eff_params.pmax, config.solver_tol);
    let w = if sol.status == SolveStatus::Optimal {
        sol.beamformer
    } else {
        Beamformer::zeros(n)
    };
    let rate = covert_rate(&w, &h0, &eff_params);
    let willie_powers: Vec<f64> = hks.iter().map(|hk| willie_power(&w, hk)).collect();
    Ok(AOResult {
        rate_trace: vec![rate],
        willie_ratio_trace: vec![max_leakage_ratio(&w, &hks, eta)],
        willie_powers,
        beamformer: w,
        rotation,
        iterations: 1,
        converged: true,
    })
}
