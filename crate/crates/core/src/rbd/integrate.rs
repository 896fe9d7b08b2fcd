//! State composition and the semi-implicit Euler step.
//!
//! States are `x = (q, v)` stacked into one vector of length `2 nv`. The
//! tangent space is the same vector space; `⊕` adds and then wraps the pitch
//! angles of planar bases to `(−π, π]`.

use super::contact::{solve_contact, solve_impulse, ContactSet};
use super::derivatives::{
    contact_param_derivative_with, impulse_param_derivative_with, impulse_state_derivatives_with, state_derivatives_with,
    ParamBlock,
};
use super::model::RobotModel;
use super::RbdError;
use nalgebra::{DMatrix, DVector};
use std::f64::consts::PI;

/// Wraps an angle to `(−π, π]`.
pub fn wrap_angle(x: f64) -> f64 {
    let y = x - 2.0 * PI * ((x + PI) / (2.0 * PI)).floor();
    if y <= -PI {
        y + 2.0 * PI
    } else {
        y
    }
}

/// `x ⊕ dx`.
pub fn state_plus(model: &RobotModel, x: &DVector<f64>, dx: &DVector<f64>) -> DVector<f64> {
    let mut out = x + dx;
    for (i, w) in model.wrapped_coordinates().into_iter().enumerate() {
        if w {
            out[i] = wrap_angle(out[i]);
        }
    }
    out
}

/// `x1 ⊖ x0`, the tangent vector with `x0 ⊕ (x1 ⊖ x0) = x1`.
pub fn state_minus(model: &RobotModel, x1: &DVector<f64>, x0: &DVector<f64>) -> DVector<f64> {
    let mut out = x1 - x0;
    for (i, w) in model.wrapped_coordinates().into_iter().enumerate() {
        if w {
            out[i] = wrap_angle(out[i]);
        }
    }
    out
}

fn split(model: &RobotModel, x: &DVector<f64>) -> Result<(DVector<f64>, DVector<f64>), RbdError> {
    let n = model.nv();
    if x.len() != 2 * n {
        return Err(RbdError::DimensionMismatch(format!("state has length {}, expected {}", x.len(), 2 * n)));
    }
    Ok((x.rows(0, n).into_owned(), x.rows(n, n).into_owned()))
}

fn join(q: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
    let mut out = DVector::zeros(q.len() + v.len());
    out.rows_mut(0, q.len()).copy_from(q);
    out.rows_mut(q.len(), v.len()).copy_from(v);
    out
}

/// One semi-implicit Euler step followed by `⊕ w`:
/// `v' = v + a dt`, `q' = q ⊕ v' dt`.
pub fn integrate_step(
    model: &RobotModel,
    x: &DVector<f64>,
    w: &DVector<f64>,
    tau: &DVector<f64>,
    contacts: &ContactSet,
    dt: f64,
) -> Result<DVector<f64>, RbdError> {
    if !(dt > 0.0) {
        return Err(RbdError::DimensionMismatch(format!("time step must be positive, got {dt}")));
    }
    let (q, v) = split(model, x)?;
    let sol = solve_contact(model, &q, &v, tau, contacts)?.0;
    let v1 = &v + &sol.a * dt;
    let q1 = &q + &v1 * dt;
    Ok(state_plus(model, &join(&q1, &v1), w))
}

/// Impulse reset `(q, v⁻) ↦ (q, v⁺)`.
pub fn reset_step(model: &RobotModel, x: &DVector<f64>, contacts: &ContactSet) -> Result<DVector<f64>, RbdError> {
    let (q, v) = split(model, x)?;
    let sol = solve_impulse(model, &q, &v, contacts)?.0;
    Ok(join(&q, &sol.a))
}

/// Value and Jacobians of a transition. `f_w` is the identity and omitted.
#[derive(Clone, Debug, PartialEq)]
pub struct StepJacobians {
    pub next: DVector<f64>,
    pub f_x: DMatrix<f64>,
    pub f_u: DMatrix<f64>,
    pub f_theta: DMatrix<f64>,
}

/// Semi-implicit Euler step with its Jacobians with respect to the state,
/// the generalized forces and the chart coordinates of `blocks`.
pub fn integrate_step_jacobians(
    model: &RobotModel,
    x: &DVector<f64>,
    w: &DVector<f64>,
    tau: &DVector<f64>,
    contacts: &ContactSet,
    dt: f64,
    blocks: &[ParamBlock],
) -> Result<StepJacobians, RbdError> {
    let n = model.nv();
    let (q, v) = split(model, x)?;
    let (sol, kkt) = solve_contact(model, &q, &v, tau, contacts)?;
    let d = state_derivatives_with(model, &q, &v, contacts, &sol, &kkt);
    let da_dp = contact_param_derivative_with(model, &q, &v, &sol, &kkt, blocks);
    let v1 = &v + &sol.a * dt;
    let q1 = &q + &v1 * dt;
    let next = state_plus(model, &join(&q1, &v1), w);

    let eye = DMatrix::<f64>::identity(n, n);
    let dv_dq = d.d_dq.rows(0, n) * dt;
    let dv_dv = &eye + d.d_dv.rows(0, n) * dt;
    let mut f_x = DMatrix::zeros(2 * n, 2 * n);
    f_x.view_mut((0, 0), (n, n)).copy_from(&(&eye + &dv_dq * dt));
    f_x.view_mut((0, n), (n, n)).copy_from(&(&dv_dv * dt));
    f_x.view_mut((n, 0), (n, n)).copy_from(&dv_dq);
    f_x.view_mut((n, n), (n, n)).copy_from(&dv_dv);
    let stack_qv = |dv: DMatrix<f64>| -> DMatrix<f64> {
        let mut out = DMatrix::zeros(2 * n, dv.ncols());
        out.rows_mut(0, n).copy_from(&(&dv * dt));
        out.rows_mut(n, n).copy_from(&dv);
        out
    };
    let f_u = stack_qv(d.d_dtau.rows(0, n) * dt);
    let f_theta = stack_qv(da_dp.rows(0, n) * dt);
    Ok(StepJacobians { next, f_x, f_u, f_theta })
}

/// Impulse reset with its Jacobians; `f_u` has no columns.
pub fn reset_step_jacobians(
    model: &RobotModel,
    x: &DVector<f64>,
    contacts: &ContactSet,
    blocks: &[ParamBlock],
) -> Result<StepJacobians, RbdError> {
    let n = model.nv();
    let (q, v) = split(model, x)?;
    let (sol, kkt) = solve_impulse(model, &q, &v, contacts)?;
    let d = impulse_state_derivatives_with(model, &q, &v, contacts, &sol, &kkt);
    let dp = impulse_param_derivative_with(model, &q, &v, &sol, &kkt, blocks);
    let mut f_x = DMatrix::zeros(2 * n, 2 * n);
    f_x.view_mut((0, 0), (n, n)).fill_with_identity();
    f_x.view_mut((n, 0), (n, n)).copy_from(&d.d_dq.rows(0, n));
    f_x.view_mut((n, n), (n, n)).copy_from(&d.d_dv.rows(0, n));
    let mut f_theta = DMatrix::zeros(2 * n, dp.ncols());
    f_theta.rows_mut(n, n).copy_from(&dp.rows(0, n));
    Ok(StepJacobians { next: join(&q, &sol.a), f_x, f_u: DMatrix::zeros(2 * n, 0), f_theta })
}
