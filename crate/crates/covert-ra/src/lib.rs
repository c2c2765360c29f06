//! Covert communication with rotatable directional antennas.
//!
//! A transmitter with a planar array of rotatable directional elements
//! serves one receiver while keeping the received signal power at every
//! warden below the budget that guarantees their energy detectors stay
//! near-blind. The covert rate is maximized by alternating between two
//! convex subproblems: transmit beamforming with fixed rotations (a
//! second-order cone program) and per-antenna rotation steps on quadratic
//! surrogates of the received powers (successive convex approximation with
//! a backtracking safeguard).
//!
//! Modules:
//! - [`geometry`]: array layout, gain pattern, LoS channels, covert rate.
//! - [`covertness`]: warden detection-error model and the leakage budget.
//! - [`conic`]: solver-agnostic cone-program form over the Clarabel backend.
//! - [`beamforming`]: the fixed-rotation beamforming subproblem.
//! - [`rotation`]: rotation surrogates, cone step, and safeguard.
//! - [`ao`]: the alternating driver and the non-adaptive baselines.
//! - [`scheme`]: name-keyed registry of interchangeable schemes.

pub mod ao;
pub mod beamforming;
pub mod conic;
pub mod covertness;
pub mod geometry;
pub mod rotation;
pub mod scheme;

pub use ao::{run_ao, run_baseline, AOConfig, AOResult};
pub use beamforming::{mrt_closed_form, solve_beamforming, Beamformer, BeamformingSolution};
pub use conic::{ConicProblem, ConicSolution, SolveStatus};
pub use covertness::{covert_budget, dep_oracle, min_dep, willie_power, CovertBudget};
pub use geometry::{
    build_upa, channel_vector, covert_rate, directional_gain, inner_product, pointing_vector,
    received_power, ArrayScene, ChannelVector, RotationState, SystemParams, Vec3,
};
pub use scheme::{Scheme, SchemeRegistry};

pub use num_complex::Complex64;
