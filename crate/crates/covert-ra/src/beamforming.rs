//! Transmit beamforming with fixed rotations, solved as a second-order cone
//! program.
//!
//! For fixed element rotations the rate maximization reduces to maximizing
//! `|w^H h0|` subject to per-warden leakage caps `|w^H h_k|^2 <= eta` and the
//! power budget `||w||^2 <= pmax`. Since every constraint and the objective
//! magnitude are invariant under a global phase rotation of `w`, the problem
//! is realified by stacking `(Re w, Im w)`, pinning `Im(w^H h0) = 0`, and
//! maximizing the slack `t <= Re(w^H h0)`.

use num_complex::Complex64;
use thiserror::Error;

use crate::conic::{self, ConicProblem, SocCone, SolveStatus};
use crate::covertness::willie_power;
use crate::geometry::{inner_product, ChannelVector};

#[derive(Debug, Error)]
pub enum BeamformingError {
    #[error("zero channel vector: maximum-ratio transmission undefined")]
    ZeroChannel,
}

/// Complex transmit weight vector.
#[derive(Debug, Clone)]
pub struct Beamformer {
    pub entries: Vec<Complex64>,
}

impl Beamformer {
    pub fn new(entries: Vec<Complex64>) -> Self {
        Self { entries }
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            entries: vec![Complex64::new(0.0, 0.0); n],
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Transmit power `||w||^2`, watts.
    pub fn power(&self) -> f64 {
        self.entries.iter().map(|w| w.norm_sqr()).sum()
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            entries: self.entries.iter().map(|w| w * s).collect(),
        }
    }
}

/// Result of one beamforming solve.
#[derive(Debug, Clone)]
pub struct BeamformingSolution {
    pub beamformer: Beamformer,
    /// Achieved real inner product `t = Re(w^H h0)` after phase alignment.
    pub objective: f64,
    pub status: SolveStatus,
}

/// Maximum-ratio transmission `w = sqrt(pmax) h0 / ||h0||`, the analytic
/// optimum when no warden constraints bind.
pub fn mrt_closed_form(h0: &ChannelVector, pmax: f64) -> Result<Beamformer, BeamformingError> {
    let norm = h0.norm();
    if norm <= 0.0 {
        return Err(BeamformingError::ZeroChannel);
    }
    let s = pmax.sqrt() / norm;
    Ok(Beamformer {
        entries: h0.entries.iter().map(|h| h * s).collect(),
    })
}

/// Solves the fixed-rotation beamforming subproblem.
///
/// Maximizes `t` subject to `Re(w^H h0) >= t`, `Im(w^H h0) = 0`,
/// `|w^H h_k|^2 <= eta` for every warden channel in `hks`, and
/// `||w||^2 <= pmax`. The returned beamformer is phase-aligned so that
/// `w^H h0` is real non-negative and rescaled, if necessary, so that every
/// constraint holds exactly under direct evaluation.
///
/// On solver failure the trivial feasible point `w = 0` is returned with
/// `NumericFailure` status so callers can keep their last feasible iterate.
pub fn solve_beamforming(
    h0: &ChannelVector,
    hks: &[ChannelVector],
    eta: f64,
    pmax: f64,
    tol: f64,
) -> BeamformingSolution {
    assert!(eta > 0.0, "covert budget must be positive");
    assert!(pmax > 0.0, "power budget must be positive");
    let n = h0.len();
    for hk in hks {
        assert_eq!(hk.len(), n, "channel length mismatch");
    }

    let h0_norm = h0.norm();
    if h0_norm <= 0.0 {
        return BeamformingSolution {
            beamformer: Beamformer::zeros(n),
            objective: 0.0,
            status: SolveStatus::Optimal,
        };
    }

    // Normalized variables keep every cone O(1): w = sqrt(pmax) w~ with
    // ||w~|| <= 1, the objective channel is unit-norm, and warden channels
    // are scaled so the leakage cap is exactly 1.
    let dim = 2 * n + 1;
    let t_idx = 2 * n;
    let h0n: Vec<Complex64> = h0.entries.iter().map(|h| h / h0_norm).collect();

    let mut objective = vec![0.0; dim];
    objective[t_idx] = -1.0;

    // Im(w~^H h0n) = 0
    let mut im_row = vec![0.0; dim];
    for i in 0..n {
        im_row[i] = h0n[i].im;
        im_row[n + i] = -h0n[i].re;
    }

    // Re(w~^H h0n) - t >= 0 as a degenerate cone
    let mut re_row = vec![0.0; dim];
    for i in 0..n {
        re_row[i] = h0n[i].re;
        re_row[n + i] = h0n[i].im;
    }
    re_row[t_idx] = -1.0;
    let mut cones = vec![SocCone {
        rows: Vec::new(),
        offsets: Vec::new(),
        rhs: re_row,
        rhs_offset: 0.0,
    }];

    // ||w~|| <= 1
    let mut power_rows = Vec::with_capacity(2 * n);
    for i in 0..2 * n {
        let mut row = vec![0.0; dim];
        row[i] = 1.0;
        power_rows.push(row);
    }
    cones.push(SocCone {
        rows: power_rows,
        offsets: vec![0.0; 2 * n],
        rhs: vec![0.0; dim],
        rhs_offset: 1.0,
    });

    // per-warden leakage: ||(Re(w~^H c_k), Im(w~^H c_k))|| <= 1
    let leak_scale = (pmax / eta).sqrt();
    for hk in hks {
        let ck: Vec<Complex64> = hk.entries.iter().map(|h| h * leak_scale).collect();
        let mut re = vec![0.0; dim];
        let mut im = vec![0.0; dim];
        for i in 0..n {
            re[i] = ck[i].re;
            re[n + i] = ck[i].im;
            im[i] = ck[i].im;
            im[n + i] = -ck[i].re;
        }
        cones.push(SocCone {
            rows: vec![re, im],
            offsets: vec![0.0, 0.0],
            rhs: vec![0.0; dim],
            rhs_offset: 1.0,
        });
    }

    let problem = ConicProblem {
        num_vars: dim,
        objective,
        equalities: vec![(im_row, 0.0)],
        cones,
        bounds: vec![],
    };

    let sol = match conic::solve(&problem, tol) {
        Ok(sol) => sol,
        Err(_) => {
            return BeamformingSolution {
                beamformer: Beamformer::zeros(n),
                objective: 0.0,
                status: SolveStatus::NumericFailure,
            }
        }
    };
    if sol.status != SolveStatus::Optimal {
        // w = 0 is always feasible for eta > 0, so a reported infeasibility
        // is a numerical artifact
        return BeamformingSolution {
            beamformer: Beamformer::zeros(n),
            objective: 0.0,
            status: SolveStatus::NumericFailure,
        };
    }

    let scale = pmax.sqrt();
    let mut w: Vec<Complex64> = (0..n)
        .map(|i| Complex64::new(sol.x[i], sol.x[n + i]) * scale)
        .collect();

    // phase-align so w^H h0 lands on the positive real axis
    let ip = w
        .iter()
        .zip(h0.entries.iter())
        .map(|(wi, hi)| wi.conj() * hi)
        .sum::<Complex64>();
    if ip.norm() > 0.0 {
        let rot = Complex64::from_polar(1.0, ip.arg());
        for wi in &mut w {
            *wi *= rot;
        }
    }
    let mut w = Beamformer::new(w);

    // exact-feasibility polish: shrink uniformly until every constraint holds
    // under direct evaluation (homogeneous in w, objective shrinks equally)
    let mut shrink = 1.0f64;
    let p = w.power();
    if p > pmax {
        shrink = shrink.min((pmax / p).sqrt());
    }
    for hk in hks {
        let v = willie_power(&w, hk);
        if v > eta {
            shrink = shrink.min((eta / v).sqrt());
        }
    }
    if shrink < 1.0 {
        w = w.scale(shrink);
    }

    let objective = inner_product(&w, h0).re;
    BeamformingSolution {
        beamformer: w,
        objective,
        status: SolveStatus::Optimal,
    }
}
