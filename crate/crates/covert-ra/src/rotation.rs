//! Convexified rotation subproblem: quadratic surrogates of the received
//! power in the per-antenna angle deviations, a cone-form step solver, and a
//! backtracking safeguard.
//!
//! With the beamformer fixed, the received power at a node expands into a
//! double sum over antenna pairs,
//! `sum_nm |w_n w_m| c_nm cos^p(eps_n) cos^p(eps_m) cos(psi_nm^eff)`,
//! where `c_nm` is an amplitude weight and `psi_nm^eff` combines the path
//! phase difference with the beamformer phase difference. Each `cos(eps)`
//! factor gets a second-order Taylor model whose Hessian is replaced by
//! `+/- I_2`, chosen per pair so the surrogate bounds the pair term from the
//! required side; products of first-order terms and cross-antenna curvature
//! are dropped, leaving a block-diagonal quadratic with one scalar per
//! antenna. The surrogate is tight in value and gradient at zero deviation
//! but is only a local model beyond that, so accepted steps are re-validated
//! against the true objective and true leakage powers, halving the step on
//! failure.

use thiserror::Error;

use crate::beamforming::Beamformer;
use crate::conic::{self, quadratic_to_socp, ConicProblem, QuadSense, SolveStatus};
use crate::covertness::willie_power;
use crate::geometry::{
    channel_vector, incidence_cosine, pointing_vector, received_power, ArrayScene, RotationState,
    SystemParams, Vec3,
};

#[derive(Debug, Error)]
pub enum RotationError {
    #[error("expansion point outside pattern support: antenna {antenna} has cos(eps) = {cos_eps} toward the receiver")]
    OutsideSupport { antenna: usize, cos_eps: f64 },
    #[error("conic step failed: {0}")]
    Conic(#[from] conic::ConicError),
}

/// Pairwise coupling constants between two antennas toward one node.
#[derive(Debug, Clone, Copy)]
pub struct PairGeometry {
    /// Amplitude weight `S G0 / (4 pi r_n r_m)`.
    pub amplitude: f64,
    /// Path phase difference `2 pi (r_m - r_n) / lambda`, radians.
    pub path_phase: f64,
    /// Path phase adjusted by the beamformer phase difference
    /// `arg(w_m) - arg(w_n)`; its cosine weights the pair term.
    pub eff_phase: f64,
}

/// Builds the pair constants for antennas `n`, `m` toward node `k`.
pub fn pair_geometry(
    scene: &ArrayScene,
    k: usize,
    w: &Beamformer,
    params: &SystemParams,
    n: usize,
    m: usize,
) -> PairGeometry {
    let rn = scene.distance(k, n);
    let rm = scene.distance(k, m);
    let amplitude =
        params.element_area_m2 * params.boresight_gain() / (4.0 * std::f64::consts::PI * rn * rm);
    let path_phase = 2.0 * std::f64::consts::PI * (rm - rn) / params.wavelength_m;
    let eff_phase = path_phase + (w.entries[m].arg() - w.entries[n].arg());
    PairGeometry {
        amplitude,
        path_phase,
        eff_phase,
    }
}

/// Quadratic model `constant + linear . delta + 1/2 sum_n a_n ||delta_n||^2`
/// of a received power in the stacked angle deviations.
///
/// `linear` is ordered `(dz_1, da_1, dz_2, da_2, ...)`; `block_scalars[n]`
/// is the multiple of the 2x2 identity forming antenna `n`'s curvature
/// block. Objective surrogates carry non-positive scalars, constraint
/// surrogates non-negative ones.
#[derive(Debug, Clone)]
pub struct SurrogateQuadratic {
    pub constant: f64,
    pub linear: Vec<f64>,
    pub block_scalars: Vec<f64>,
}

impl SurrogateQuadratic {
    pub fn num_antennas(&self) -> usize {
        self.block_scalars.len()
    }

    /// Direct evaluation at a stacked deviation.
    pub fn eval(&self, delta: &[f64]) -> f64 {
        assert_eq!(delta.len(), self.linear.len());
        let lin: f64 = self
            .linear
            .iter()
            .zip(delta.iter())
            .map(|(a, b)| a * b)
            .sum();
        let quad: f64 = self
            .block_scalars
            .iter()
            .enumerate()
            .map(|(n, a)| a * (delta[2 * n] * delta[2 * n] + delta[2 * n + 1] * delta[2 * n + 1]))
            .sum();
        self.constant + lin + 0.5 * quad
    }

    /// Curvature flattened to one scalar per coordinate.
    pub fn diag(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(2 * self.block_scalars.len());
        for a in &self.block_scalars {
            out.push(*a);
            out.push(*a);
        }
        out
    }

    fn scaled(&self, s: f64) -> Self {
        Self {
            constant: self.constant * s,
            linear: self.linear.iter().map(|x| x * s).collect(),
            block_scalars: self.block_scalars.iter().map(|x| x * s).collect(),
        }
    }
}

/// Gradient of `cos(eps) = f(theta) . qhat` with respect to
/// `(theta_z, theta_a)`.
pub fn cos_eps_gradient(theta: [f64; 2], qhat: &Vec3) -> [f64; 2] {
    let (sz, cz) = theta[0].sin_cos();
    let (sa, ca) = theta[1].sin_cos();
    [
        cz * ca * qhat.x + cz * sa * qhat.y - sz * qhat.z,
        -sz * sa * qhat.x + sz * ca * qhat.y,
    ]
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum SurrogateSense {
    /// Concave lower bound of the objective power.
    Objective,
    /// Convex upper bound of a leakage power.
    Constraint,
}

fn build_surrogate(
    scene: &ArrayScene,
    rotation: &RotationState,
    w: &Beamformer,
    params: &SystemParams,
    k: usize,
    sense: SurrogateSense,
) -> Result<SurrogateQuadratic, RotationError> {
    let n_ant = scene.num_antennas();
    assert_eq!(rotation.num_antennas(), n_ant);
    assert_eq!(w.len(), n_ant);
    let p = params.directivity;

    let mut cos_eps = vec![0.0; n_ant];
    let mut grads = vec![[0.0; 2]; n_ant];
    let mut pow_p = vec![0.0; n_ant]; // cos^p, zero outside support
    let mut dpow = vec![0.0; n_ant]; // p cos^(p-1), zero outside support
    for n in 0..n_ant {
        let theta = rotation.angle(n);
        let f = pointing_vector(theta[0], theta[1]);
        let qhat = scene.unit_dir(k, n);
        let c = incidence_cosine(&f, &qhat);
        cos_eps[n] = c;
        grads[n] = cos_eps_gradient(theta, &qhat);
        if sense == SurrogateSense::Objective && c < 0.0 {
            return Err(RotationError::OutsideSupport {
                antenna: n,
                cos_eps: c,
            });
        }
        if c > 0.0 {
            pow_p[n] = c.powf(p);
            dpow[n] = if p == 0.0 {
                0.0
            } else if p == 1.0 {
                1.0
            } else {
                // floor the base before the (p-1) power so sub-unity
                // exponents cannot blow up near the support edge
                let base = if p < 1.0 { c.max(1e-9) } else { c };
                p * base.powf(p - 1.0)
            };
        }
    }

    let curv_sign = match sense {
        SurrogateSense::Objective => -1.0,
        SurrogateSense::Constraint => 1.0,
    };
    let mut constant = 0.0;
    let mut linear = vec![0.0; 2 * n_ant];
    let mut blocks = vec![0.0; n_ant];
    for n in 0..n_ant {
        let wn = w.entries[n].norm();
        if wn == 0.0 {
            continue;
        }
        for m in 0..n_ant {
            let wm = w.entries[m].norm();
            if wm == 0.0 {
                continue;
            }
            let pg = pair_geometry(scene, k, w, params, n, m);
            let base = wn * wm * pg.amplitude * pg.eff_phase.cos();
            constant += base * pow_p[n] * pow_p[m];
            // first-order model of each cos^p factor in turn
            let cn = base * pow_p[m] * dpow[n];
            linear[2 * n] += cn * grads[n][0];
            linear[2 * n + 1] += cn * grads[n][1];
            let cm = base * pow_p[n] * dpow[m];
            linear[2 * m] += cm * grads[m][0];
            linear[2 * m + 1] += cm * grads[m][1];
            // Hessian replacement +/- I_2 per pair, oriented so the term is
            // bounded from the required side regardless of the weight sign
            blocks[n] += curv_sign * base.abs() * pow_p[m] * dpow[n];
            blocks[m] += curv_sign * base.abs() * pow_p[n] * dpow[m];
        }
    }
    for b in &mut blocks {
        *b = match sense {
            SurrogateSense::Objective => b.min(0.0),
            SurrogateSense::Constraint => b.max(0.0),
        };
    }
    Ok(SurrogateQuadratic {
        constant,
        linear,
        block_scalars: blocks,
    })
}

/// Concave quadratic lower model of `|w^H h0(Theta)|^2` around the current
/// rotation. Errors if any element's boresight has drifted outside the
/// pattern support toward the receiver.
pub fn objective_surrogate(
    scene: &ArrayScene,
    rotation: &RotationState,
    w: &Beamformer,
    params: &SystemParams,
) -> Result<SurrogateQuadratic, RotationError> {
    build_surrogate(scene, rotation, w, params, 0, SurrogateSense::Objective)
}

/// Convex quadratic upper model of `|w^H h_k(Theta)|^2` for warden `k`
/// (node index `1..=K`). Elements outside the pattern support toward the
/// warden contribute nothing.
pub fn constraint_surrogate(
    scene: &ArrayScene,
    rotation: &RotationState,
    w: &Beamformer,
    params: &SystemParams,
    k: usize,
) -> Result<SurrogateQuadratic, RotationError> {
    assert!(
        k >= 1 && k <= scene.num_wardens(),
        "warden index out of range"
    );
    build_surrogate(scene, rotation, w, params, k, SurrogateSense::Constraint)
}

/// One candidate angle step.
#[derive(Debug, Clone)]
pub struct AngleStep {
    /// Per-antenna `(d_theta_z, d_theta_a)` deviations.
    pub delta: Vec<[f64; 2]>,
    pub accepted: bool,
    pub backtracks: usize,
}

impl AngleStep {
    pub fn zero(n: usize, accepted: bool) -> Self {
        Self {
            delta: vec![[0.0; 2]; n],
            accepted,
            backtracks: 0,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.delta.iter().all(|d| d[0] == 0.0 && d[1] == 0.0)
    }
}

/// Maximizes the objective surrogate subject to the constraint surrogates
/// staying below `eta` and the updated angles staying inside
/// `[0, theta_max] x [0, 2 pi]`.
///
/// The quadratics enter the cone program through square-root factorization
/// of their diagonal blocks; the surrogate data is rescaled internally so
/// the solver sees O(1) coefficients. If some constraint is already violated
/// at the expansion point the zero step is returned unaccepted.
pub fn solve_rotation_step(
    obj: &SurrogateQuadratic,
    cons: &[SurrogateQuadratic],
    rotation: &RotationState,
    eta: f64,
    theta_max: f64,
    tol: f64,
) -> AngleStep {
    let n_ant = obj.num_antennas();
    let dim = 2 * n_ant;
    for c in cons {
        if c.constant > eta * (1.0 + 1e-9) {
            return AngleStep::zero(n_ant, false);
        }
    }
    let flat = obj.linear.iter().all(|x| *x == 0.0);
    if flat && obj.block_scalars.iter().all(|a| *a == 0.0) {
        return AngleStep::zero(n_ant, true);
    }

    // scale the objective to O(1); the argmax is scale-invariant
    let s_obj = obj
        .linear
        .iter()
        .chain(obj.block_scalars.iter())
        .fold(0.0f64, |acc, x| acc.max(x.abs()));
    let obj_n = obj.scaled(1.0 / s_obj);

    let has_curvature = obj_n.block_scalars.iter().any(|a| *a != 0.0);
    let total = if has_curvature { dim + 1 } else { dim };
    let epi = if has_curvature { Some(dim) } else { None };

    let mut objective = vec![0.0; total];
    for (i, b) in obj_n.linear.iter().enumerate() {
        objective[i] = -b;
    }
    if let Some(e) = epi {
        objective[e] = 1.0;
    }

    let mut cones = Vec::new();
    if has_curvature {
        match quadratic_to_socp(
            0.0,
            &obj_n.linear,
            &obj_n.diag(),
            QuadSense::ConcaveMax,
            0.0,
            total,
            epi,
        ) {
            Ok(frags) => cones.extend(frags),
            Err(_) => return AngleStep::zero(n_ant, false),
        }
    }
    for c in cons {
        // normalize each leakage constraint to a unit budget
        let cn = c.scaled(1.0 / eta);
        let mut lin = cn.linear.clone();
        let mut diag = cn.diag();
        lin.resize(total, 0.0);
        diag.resize(total, 0.0);
        match quadratic_to_socp(
            cn.constant,
            &lin,
            &diag,
            QuadSense::ConvexLeq,
            1.0,
            total,
            None,
        ) {
            Ok(frags) => cones.extend(frags),
            Err(_) => return AngleStep::zero(n_ant, false),
        }
    }

    let mut bounds = Vec::with_capacity(total);
    for n in 0..n_ant {
        let [tz, ta] = rotation.angle(n);
        bounds.push((Some(-tz), Some(theta_max - tz)));
        bounds.push((Some(-ta), Some(2.0 * std::f64::consts::PI - ta)));
    }
    if has_curvature {
        bounds.push((None, None));
    }

    let problem = ConicProblem {
        num_vars: total,
        objective,
        equalities: vec![],
        cones,
        bounds,
    };
    let sol = match conic::solve(&problem, tol) {
        Ok(s) => s,
        Err(_) => return AngleStep::zero(n_ant, false),
    };
    if sol.status != SolveStatus::Optimal {
        return AngleStep::zero(n_ant, false);
    }
    let mut delta = Vec::with_capacity(n_ant);
    for n in 0..n_ant {
        let [tz, ta] = rotation.angle(n);
        // project solver roundoff back onto the exact box
        let dz = sol.x[2 * n].clamp(-tz, theta_max - tz);
        let da = sol.x[2 * n + 1].clamp(-ta, 2.0 * std::f64::consts::PI - ta);
        delta.push([dz, da]);
    }
    AngleStep {
        delta,
        accepted: true,
        backtracks: 0,
    }
}

/// Validates a candidate step against the true objective and true leakage
/// powers, halving it until both checks pass (at most 10 halvings). Returns
/// the updated rotation and the step actually taken.
pub fn safeguarded_update(
    scene: &ArrayScene,
    rotation: &RotationState,
    w: &Beamformer,
    step: AngleStep,
    eta: f64,
    params: &SystemParams,
) -> (RotationState, AngleStep) {
    let n_ant = rotation.num_antennas();
    if !step.accepted || step.is_zero() {
        return (rotation.clone(), step);
    }
    let h0 = channel_vector(scene, 0, rotation, params);
    let base_obj = received_power(w, &h0);
    let wardens = scene.num_wardens();

    for backtracks in 0..=10usize {
        let scale = 0.5f64.powi(backtracks as i32);
        let mut angles = Vec::with_capacity(n_ant);
        let mut scaled = Vec::with_capacity(n_ant);
        for n in 0..n_ant {
            let [tz, ta] = rotation.angle(n);
            let dz = step.delta[n][0] * scale;
            let da = step.delta[n][1] * scale;
            angles.push([
                (tz + dz).clamp(0.0, params.theta_max),
                (ta + da).clamp(0.0, 2.0 * std::f64::consts::PI),
            ]);
            scaled.push([dz, da]);
        }
        let cand = RotationState::new(angles, params.theta_max)
            .expect("clamped angles are inside the box");
        let obj = received_power(w, &channel_vector(scene, 0, &cand, params));
        let covert_ok = (1..=wardens).all(|k| {
            willie_power(w, &channel_vector(scene, k, &cand, params)) <= eta * (1.0 + 1e-6)
        });
        if obj >= base_obj && covert_ok {
            return (
                cand,
                AngleStep {
                    delta: scaled,
                    accepted: true,
                    backtracks,
                },
            );
        }
    }
    (rotation.clone(), AngleStep::zero(n_ant, false))
}
