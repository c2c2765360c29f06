//! Solver-agnostic standard form for the two convex subproblems.
//!
//! Every convex program in this crate is expressed as a [`ConicProblem`]:
//! a linear objective to minimize, linear equalities, second-order cone
//! constraints `||M x + u|| <= m.x + v`, and per-variable box bounds. A cone
//! with zero rows in `M` degenerates to the linear inequality
//! `m.x + v >= 0`. The backend is the Clarabel interior-point solver; this
//! module owns all realification and cone-ordering conventions so both
//! subproblems share one tested path.

use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettingsBuilder, DefaultSolver, IPSolver, SolverStatus, SupportedConeT,
};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConicError {
    #[error("malformed problem: {0}")]
    Malformed(String),
    #[error("quadratic coefficient sign violates the requested sense at index {0}")]
    SignViolation(usize),
}

/// One second-order cone constraint `||M x + u|| <= m.x + v`.
///
/// `rows` holds the dense rows of `M` (possibly none), `offsets` the entries
/// of `u`, `rhs` the vector `m`, and `rhs_offset` the scalar `v`.
#[derive(Debug, Clone)]
pub struct SocCone {
    pub rows: Vec<Vec<f64>>,
    pub offsets: Vec<f64>,
    pub rhs: Vec<f64>,
    pub rhs_offset: f64,
}

impl SocCone {
    /// Direct evaluation of cone membership slack: `m.x + v - ||M x + u||`.
    /// Non-negative iff `x` satisfies the constraint.
    pub fn slack(&self, x: &[f64]) -> f64 {
        let lhs: f64 = self
            .rows
            .iter()
            .zip(self.offsets.iter())
            .map(|(row, u)| {
                let e: f64 = row.iter().zip(x.iter()).map(|(a, b)| a * b).sum::<f64>() + u;
                e * e
            })
            .sum::<f64>()
            .sqrt();
        let rhs: f64 = self
            .rhs
            .iter()
            .zip(x.iter())
            .map(|(a, b)| a * b)
            .sum::<f64>()
            + self.rhs_offset;
        rhs - lhs
    }
}

/// A conic program: minimize `objective . x` subject to equalities, cones,
/// and box bounds.
#[derive(Debug, Clone, Default)]
pub struct ConicProblem {
    pub num_vars: usize,
    pub objective: Vec<f64>,
    pub equalities: Vec<(Vec<f64>, f64)>,
    pub cones: Vec<SocCone>,
    /// Per-variable `(lower, upper)`; `None` leaves that side free. May be
    /// empty when no variable is bounded.
    pub bounds: Vec<(Option<f64>, Option<f64>)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    NumericFailure,
}

#[derive(Debug, Clone)]
pub struct ConicSolution {
    pub x: Vec<f64>,
    pub objective_value: f64,
    pub status: SolveStatus,
    pub iterations: usize,
}

fn validate(problem: &ConicProblem) -> Result<(), ConicError> {
    let n = problem.num_vars;
    if problem.objective.len() != n {
        return Err(ConicError::Malformed(format!(
            "objective has {} entries for {} variables",
            problem.objective.len(),
            n
        )));
    }
    for (row, _) in &problem.equalities {
        if row.len() != n {
            return Err(ConicError::Malformed("equality row width mismatch".into()));
        }
    }
    for cone in &problem.cones {
        if cone.rows.len() != cone.offsets.len() {
            return Err(ConicError::Malformed(
                "cone row/offset count mismatch".into(),
            ));
        }
        if cone.rhs.len() != n {
            return Err(ConicError::Malformed("cone rhs width mismatch".into()));
        }
        for row in &cone.rows {
            if row.len() != n {
                return Err(ConicError::Malformed("cone row width mismatch".into()));
            }
        }
    }
    if !problem.bounds.is_empty() && problem.bounds.len() != n {
        return Err(ConicError::Malformed("bounds length mismatch".into()));
    }
    Ok(())
}

/// Solves the problem with the Clarabel backend.
///
/// `tol` sets the feasibility and duality-gap tolerances. Identical inputs
/// with identical tolerance produce identical solutions.
pub fn solve(problem: &ConicProblem, tol: f64) -> Result<ConicSolution, ConicError> {
    validate(problem)?;
    let n = problem.num_vars;

    // Clarabel form: min q.x  s.t.  A x + s = b,  s in K.
    // Row blocks in order: equalities (Zero cone), bounds + degenerate cones
    // (Nonnegative cone), then each SOC block.
    let mut rows_a: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut b: Vec<f64> = Vec::new();
    let mut cones: Vec<SupportedConeT<f64>> = Vec::new();

    let dense = |row: &[f64]| -> Vec<(usize, f64)> {
        row.iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(j, v)| (j, *v))
            .collect()
    };

    if !problem.equalities.is_empty() {
        for (row, rhs) in &problem.equalities {
            rows_a.push(dense(row));
            b.push(*rhs);
        }
        cones.push(SupportedConeT::ZeroConeT(problem.equalities.len()));
    }

    let mut nonneg = 0usize;
    for (j, (lo, hi)) in problem.bounds.iter().enumerate() {
        if let Some(lo) = lo {
            // x_j >= lo  <=>  -x_j <= -lo
            rows_a.push(vec![(j, -1.0)]);
            b.push(-lo);
            nonneg += 1;
        }
        if let Some(hi) = hi {
            rows_a.push(vec![(j, 1.0)]);
            b.push(*hi);
            nonneg += 1;
        }
    }
    for cone in &problem.cones {
        if cone.rows.is_empty() {
            // degenerate cone: m.x + v >= 0  <=>  -m.x <= v
            rows_a.push(dense(&cone.rhs).into_iter().map(|(j, v)| (j, -v)).collect());
            b.push(cone.rhs_offset);
            nonneg += 1;
        }
    }
    if nonneg > 0 {
        cones.push(SupportedConeT::NonnegativeConeT(nonneg));
    }

    for cone in &problem.cones {
        if cone.rows.is_empty() {
            continue;
        }
        // s = (m.x + v, M x + u) in SOC  =>  A rows (-m; -M), b (v; u)
        rows_a.push(dense(&cone.rhs).into_iter().map(|(j, v)| (j, -v)).collect());
        b.push(cone.rhs_offset);
        for (row, u) in cone.rows.iter().zip(cone.offsets.iter()) {
            rows_a.push(dense(row).into_iter().map(|(j, v)| (j, -v)).collect());
            b.push(*u);
        }
        cones.push(SupportedConeT::SecondOrderConeT(cone.rows.len() + 1));
    }

    let m = rows_a.len();
    // CSC assembly by column
    let mut colptr = vec![0usize; n + 1];
    for row in &rows_a {
        for (j, _) in row {
            colptr[j + 1] += 1;
        }
    }
    for j in 0..n {
        colptr[j + 1] += colptr[j];
    }
    let nnz = colptr[n];
    let mut rowval = vec![0usize; nnz];
    let mut nzval = vec![0.0f64; nnz];
    let mut cursor = colptr.clone();
    for (i, row) in rows_a.iter().enumerate() {
        for (j, v) in row {
            rowval[cursor[*j]] = i;
            nzval[cursor[*j]] = *v;
            cursor[*j] += 1;
        }
    }
    let a = CscMatrix::new(m, n, colptr, rowval, nzval);
    let p = CscMatrix::<f64>::zeros((n, n));

    let settings = DefaultSettingsBuilder::default()
        .verbose(false)
        .tol_feas(tol)
        .tol_gap_abs(tol)
        .tol_gap_rel(tol)
        .max_iter(200)
        .build()
        .map_err(|e| ConicError::Malformed(format!("settings: {e}")))?;

    let mut solver = DefaultSolver::new(&p, &problem.objective, &a, &b, &cones, settings);
    solver.solve();

    let status = match solver.solution.status {
        SolverStatus::Solved => SolveStatus::Optimal,
        SolverStatus::PrimalInfeasible | SolverStatus::DualInfeasible => SolveStatus::Infeasible,
        _ => SolveStatus::NumericFailure,
    };
    Ok(ConicSolution {
        x: solver.solution.x.clone(),
        objective_value: solver.solution.obj_val,
        status,
        iterations: solver.solution.iterations as usize,
    })
}

/// Sense of a diagonal quadratic being embedded into cone form.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuadSense {
    /// Maximize `constant + linear.x + 1/2 sum_i diag_i x_i^2` through an
    /// epigraph variable; requires every `diag_i <= 0`.
    ConcaveMax,
    /// Constrain `constant + linear.x + 1/2 sum_i diag_i x_i^2 <= rhs`;
    /// requires every `diag_i >= 0`.
    ConvexLeq,
}

/// Converts a diagonal quadratic into second-order cone fragments over a
/// problem with `total_vars` variables, the quadratic acting on variables
/// `0..diag.len()`.
///
/// For `ConcaveMax`, `epigraph_var` must name a variable `r`, and the
/// returned cone enforces `r >= 1/2 sum |diag_i| x_i^2` via
/// `||(D x, r - 1/2)|| <= r + 1/2` with `D = diag(sqrt|diag_i|)`; the caller
/// minimizes `-linear.x + r`. An all-zero `diag` yields no fragment.
///
/// For `ConvexLeq` the single returned cone has the feasible set
/// `{x : constant + linear.x + 1/2 x.Dx <= rhs}`; with all-zero `diag` it
/// degenerates to the linear fragment `rhs - constant - linear.x >= 0`.
pub fn quadratic_to_socp(
    constant: f64,
    linear: &[f64],
    diag: &[f64],
    sense: QuadSense,
    rhs: f64,
    total_vars: usize,
    epigraph_var: Option<usize>,
) -> Result<Vec<SocCone>, ConicError> {
    assert!(linear.len() == diag.len(), "linear/diag length mismatch");
    assert!(diag.len() <= total_vars, "quadratic wider than problem");
    for (i, d) in diag.iter().enumerate() {
        match sense {
            QuadSense::ConcaveMax if *d > 0.0 => return Err(ConicError::SignViolation(i)),
            QuadSense::ConvexLeq if *d < 0.0 => return Err(ConicError::SignViolation(i)),
            _ => {}
        }
    }
    let sqrt_rows: Vec<(usize, f64)> = diag
        .iter()
        .enumerate()
        .filter(|(_, d)| **d != 0.0)
        .map(|(i, d)| (i, d.abs().sqrt()))
        .collect();

    match sense {
        QuadSense::ConcaveMax => {
            let epi = epigraph_var.ok_or_else(|| {
                ConicError::Malformed("concave-max needs an epigraph variable".into())
            })?;
            if epi >= total_vars {
                return Err(ConicError::Malformed(
                    "epigraph variable out of range".into(),
                ));
            }
            if sqrt_rows.is_empty() {
                return Ok(Vec::new());
            }
            let mut rows = Vec::with_capacity(sqrt_rows.len() + 1);
            let mut offsets = Vec::with_capacity(sqrt_rows.len() + 1);
            for (i, s) in &sqrt_rows {
                let mut row = vec![0.0; total_vars];
                row[*i] = *s;
                rows.push(row);
                offsets.push(0.0);
            }
            let mut r_row = vec![0.0; total_vars];
            r_row[epi] = 1.0;
            rows.push(r_row);
            offsets.push(-0.5);
            let mut rhs_vec = vec![0.0; total_vars];
            rhs_vec[epi] = 1.0;
            Ok(vec![SocCone {
                rows,
                offsets,
                rhs: rhs_vec,
                rhs_offset: 0.5,
            }])
        }
        QuadSense::ConvexLeq => {
            // slack s = rhs - constant - linear.x must satisfy ||D x||^2 <= 2 s
            let mut rhs_vec = vec![0.0; total_vars];
            for (i, l) in linear.iter().enumerate() {
                rhs_vec[i] = -l;
            }
            if sqrt_rows.is_empty() {
                return Ok(vec![SocCone {
                    rows: Vec::new(),
                    offsets: Vec::new(),
                    rhs: rhs_vec,
                    rhs_offset: rhs - constant,
                }]);
            }
            let mut rows = Vec::with_capacity(sqrt_rows.len() + 1);
            let mut offsets = Vec::with_capacity(sqrt_rows.len() + 1);
            for (i, s) in &sqrt_rows {
                let mut row = vec![0.0; total_vars];
                row[*i] = *s;
                rows.push(row);
                offsets.push(0.0);
            }
            // last row: s - 1/2 where 2s = 2(rhs - constant) - 2 linear.x
            let mut s_row = vec![0.0; total_vars];
            for (i, l) in linear.iter().enumerate() {
                s_row[i] = -l;
            }
            rows.push(s_row);
            offsets.push(rhs - constant - 0.5);
            Ok(vec![SocCone {
                rows,
                offsets,
                rhs: rhs_vec,
                rhs_offset: rhs - constant + 0.5,
            }])
        }
    }
}
