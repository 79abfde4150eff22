//! Crank-Nicolson time integration for the semi-discrete systems
//! M u' + K u = F(t), shared by the lattice and the effective 2D problem.

use crate::linalg::{cg_solve_from, spmv, Csr, CG_TOL};
use crate::{Error, Result};

/// A semi-discrete transient system with uniform time steps.
///
/// `load` returns the assembled load vector at a given time; the trapezoidal
/// average of consecutive load vectors enters the right-hand side.
pub struct TransientSystem<'a> {
    pub mass: &'a Csr,
    pub stiffness: &'a Csr,
    pub load: &'a (dyn Fn(f64) -> Vec<f64> + Sync),
    pub u0: Vec<f64>,
    pub dt: f64,
    pub t_final: f64,
}

/// Advance to t_final with Crank-Nicolson steps:
/// (M + dt/2 K) u_{n+1} = (M - dt/2 K) u_n + dt/2 (F_{n+1} + F_n).
///
/// The constant left-hand operator is kept across steps and each solve is a
/// Jacobi-preconditioned CG warm-started from the previous state. The
/// observer sees every state including the initial one.
pub fn crank_nicolson_run(
    sys: &TransientSystem,
    mut observer: impl FnMut(usize, f64, &[f64]),
) -> Result<Vec<f64>> {
    let n = sys.mass.dim;
    if sys.stiffness.dim != n || sys.u0.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "transient system: mass {}, stiffness {}, state {}",
            n,
            sys.stiffness.dim,
            sys.u0.len()
        )));
    }
    if !(sys.dt > 0.0 && sys.t_final > 0.0) {
        return Err(Error::InvalidInput("dt and t_final must be positive".into()));
    }
    let steps_f = sys.t_final / sys.dt;
    let steps = steps_f.round();
    if (steps_f - steps).abs() > 1e-9 * steps_f.max(1.0) {
        return Err(Error::InvalidInput(format!(
            "dt = {} does not divide t_final = {} into whole steps",
            sys.dt, sys.t_final
        )));
    }
    let steps = steps as usize;

    let half = sys.dt / 2.0;
    let lhs = sys.mass.add_scaled(sys.stiffness, half)?;
    let rhs_op = sys.mass.add_scaled(sys.stiffness, -half)?;

    let mut u = sys.u0.clone();
    let mut load_prev = (sys.load)(0.0);
    if load_prev.len() != n {
        return Err(Error::DimensionMismatch("load vector length".into()));
    }
    observer(0, 0.0, &u);
    for step in 1..=steps {
        let t = step as f64 * sys.dt;
        let load_next = (sys.load)(t);
        let mut rhs = spmv(&rhs_op, &u)?;
        for i in 0..n {
            rhs[i] += half * (load_prev[i] + load_next[i]);
        }
        u = cg_solve_from(&lhs, &rhs, u, CG_TOL, 10 * n.max(10)).map_err(|e| match e {
            Error::CgDidNotConverge { iterations, residual } => Error::InvalidInput(format!(
                "time step {step}: cg did not converge within {iterations} iterations \
                 (relative residual {residual:e})"
            )),
            other => other,
        })?;
        observer(step, t, &u);
        load_prev = load_next;
    }
    Ok(u)
}
