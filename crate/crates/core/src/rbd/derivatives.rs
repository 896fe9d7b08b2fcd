//! Derivatives of free, contact and impulse dynamics with respect to chart
//! coordinates of the inertial parameters and with respect to the state.
//!
//! Parameter derivatives are analytic: perturbing ϑ changes the torque needed
//! for a fixed motion by `Y δϑ`, so the saddle system is solved with the
//! right-hand side `[−Y ∂ϑ/∂π; 0]`.
//!
//! State derivatives differentiate the saddle residuals
//! `R₁ = ID(q, v, a) − J(q)ᵀλ` and `R₂ = J(q) a + a_c(q, v)` at the nominal
//! `(a, λ)` by central differences and then apply the factored saddle system.
//! Both residuals are quadratic in `v`, so the velocity columns are exact up
//! to round-off.

use super::contact::{solve_contact, solve_impulse, ContactSet, ContactSolution, KktSystem};
use super::dynamics::{check_dims, contact_acceleration, contact_jacobian, contact_velocity, regressor_columns, rnea};
use super::model::RobotModel;
use super::RbdError;
use crate::inertia::Matrix10;
use nalgebra::{DMatrix, DVector};

/// Chart Jacobian `∂ϑ/∂π` of one estimated body.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamBlock {
    pub body: usize,
    pub jacobian: Matrix10,
}

/// Derivatives of `(a, λ)` (rows `0..nv` then `nv..nv+nc`).
#[derive(Clone, Debug, PartialEq)]
pub struct DynDerivatives {
    pub d_dq: DMatrix<f64>,
    pub d_dv: DMatrix<f64>,
    pub d_dtau: DMatrix<f64>,
}

const Q_STEP: f64 = 1e-5;
const V_STEP: f64 = 1e-3;

fn block_diag_product(y: &DMatrix<f64>, blocks: &[ParamBlock]) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(y.nrows(), 10 * blocks.len());
    for (k, b) in blocks.iter().enumerate() {
        let prod = y.columns(10 * k, 10) * b.jacobian;
        out.columns_mut(10 * k, 10).copy_from(&prod);
    }
    out
}

/// `Y(q, v, a) ∂ϑ/∂π` for the listed bodies; `gravity = false` drops the
/// gravity contribution.
pub(crate) fn torque_param_jacobian(
    model: &RobotModel,
    q: &DVector<f64>,
    v: &DVector<f64>,
    a: &DVector<f64>,
    blocks: &[ParamBlock],
    gravity: bool,
) -> DMatrix<f64> {
    let bodies: Vec<usize> = blocks.iter().map(|b| b.body).collect();
    let y = if gravity {
        regressor_columns(model, q, v, a, &bodies)
    } else {
        let mut m = model.clone();
        m.gravity = nalgebra::Vector3::zeros();
        regressor_columns(&m, q, v, a, &bodies)
    };
    block_diag_product(&y, blocks)
}

fn stack(top: DMatrix<f64>, bottom: DMatrix<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(top.nrows() + bottom.nrows(), top.ncols());
    out.rows_mut(0, top.nrows()).copy_from(&top);
    out.rows_mut(top.nrows(), bottom.nrows()).copy_from(&bottom);
    out
}

/// `∂a/∂π` of free dynamics: `−M⁻¹ Y(q, v, a) ∂ϑ/∂π`.
pub fn fd_param_derivative(
    model: &RobotModel,
    q: &DVector<f64>,
    v: &DVector<f64>,
    tau: &DVector<f64>,
    blocks: &[ParamBlock],
) -> Result<DMatrix<f64>, RbdError> {
    contact_param_derivative(model, q, v, tau, &ContactSet::none(), blocks)
}

/// `∂(a, λ)/∂π` of contact dynamics, rows `[a; λ]`.
pub fn contact_param_derivative(
    model: &RobotModel,
    q: &DVector<f64>,
    v: &DVector<f64>,
    tau: &DVector<f64>,
    contacts: &ContactSet,
    blocks: &[ParamBlock],
) -> Result<DMatrix<f64>, RbdError> {
    let (sol, kkt) = solve_contact(model, q, v, tau, contacts)?;
    Ok(contact_param_derivative_with(model, q, v, &sol, &kkt, blocks))
}

pub(crate) fn contact_param_derivative_with(
    model: &RobotModel,
    q: &DVector<f64>,
    v: &DVector<f64>,
    sol: &ContactSolution,
    kkt: &KktSystem,
    blocks: &[ParamBlock],
) -> DMatrix<f64> {
    let r1 = -torque_param_jacobian(model, q, v, &sol.a, blocks, true);
    let r2 = DMatrix::zeros(kkt.nc(), r1.ncols());
    let (x, y) = kkt.solve_matrix(&r1, &r2);
    stack(x, y)
}

/// `∂(v⁺, Λ)/∂π` of the impulse map, rows `[v⁺; Λ]`.
pub fn impulse_param_derivative(
    model: &RobotModel,
    q: &DVector<f64>,
    v_minus: &DVector<f64>,
    contacts: &ContactSet,
    blocks: &[ParamBlock],
) -> Result<DMatrix<f64>, RbdError> {
    let (sol, kkt) = solve_impulse(model, q, v_minus, contacts)?;
    Ok(impulse_param_derivative_with(model, q, v_minus, &sol, &kkt, blocks))
}

pub(crate) fn impulse_param_derivative_with(
    model: &RobotModel,
    q: &DVector<f64>,
    v_minus: &DVector<f64>,
    sol: &ContactSolution,
    kkt: &KktSystem,
    blocks: &[ParamBlock],
) -> DMatrix<f64> {
    let zero = DVector::zeros(model.nv());
    let dv = &sol.a - v_minus;
    let r1 = -(torque_param_jacobian(model, q, &zero, &dv, blocks, true) - torque_param_jacobian(model, q, &zero, &zero, blocks, true));
    let r2 = DMatrix::zeros(kkt.nc(), r1.ncols());
    let (x, y) = kkt.solve_matrix(&r1, &r2);
    stack(x, y)
}

fn central_columns<F>(x: &DVector<f64>, step: f64, rows: usize, mut f: F) -> DMatrix<f64>
where
    F: FnMut(&DVector<f64>) -> DVector<f64>,
{
    let mut out = DMatrix::zeros(rows, x.len());
    let mut xp = x.clone();
    for j in 0..x.len() {
        let h = step * x[j].abs().max(1.0);
        xp[j] = x[j] + h;
        let fp = f(&xp);
        xp[j] = x[j] - h;
        let fm = f(&xp);
        xp[j] = x[j];
        out.set_column(j, &((fp - fm) / (2.0 * h)));
    }
    out
}

fn concat(a: DVector<f64>, b: DVector<f64>) -> DVector<f64> {
    let mut out = DVector::zeros(a.len() + b.len());
    out.rows_mut(0, a.len()).copy_from(&a);
    out.rows_mut(a.len(), b.len()).copy_from(&b);
    out
}

/// `∂(a, λ)/∂(q, v, τ)` of contact (or free, with no contacts) dynamics.
pub fn state_derivatives(
    model: &RobotModel,
    q: &DVector<f64>,
    v: &DVector<f64>,
    tau: &DVector<f64>,
    contacts: &ContactSet,
) -> Result<DynDerivatives, RbdError> {
    let (sol, kkt) = solve_contact(model, q, v, tau, contacts)?;
    Ok(state_derivatives_with(model, q, v, contacts, &sol, &kkt))
}

pub(crate) fn state_derivatives_with(
    model: &RobotModel,
    q: &DVector<f64>,
    v: &DVector<f64>,
    contacts: &ContactSet,
    sol: &ContactSolution,
    kkt: &KktSystem,
) -> DynDerivatives {
    let (nv, nc) = (model.nv(), contacts.nc());
    let residual = |q: &DVector<f64>, v: &DVector<f64>| -> DVector<f64> {
        let r1 = rnea(model, q, v, &sol.a, true) - contact_jacobian(model, q, &contacts.active).transpose() * &sol.lambda;
        let r2 = contact_acceleration(model, q, v, &sol.a, &contacts.active);
        concat(r1, r2)
    };
    let dr_dq = central_columns(q, Q_STEP, nv + nc, |qq| residual(qq, v));
    let dr_dv = central_columns(v, V_STEP, nv + nc, |vv| residual(q, vv));
    let solve = |dr: &DMatrix<f64>| -> DMatrix<f64> {
        let (x, y) = kkt.solve_matrix(&(-dr.rows(0, nv)), &(-dr.rows(nv, nc)));
        stack(x, y)
    };
    let tau_rhs = DMatrix::identity(nv, nv);
    let (xt, yt) = kkt.solve_matrix(&tau_rhs, &DMatrix::zeros(nc, nv));
    DynDerivatives { d_dq: solve(&dr_dq), d_dv: solve(&dr_dv), d_dtau: stack(xt, yt) }
}

/// `∂(v⁺, Λ)/∂(q, v⁻)` of the impulse map; `d_dtau` is empty.
pub fn impulse_state_derivatives(
    model: &RobotModel,
    q: &DVector<f64>,
    v_minus: &DVector<f64>,
    contacts: &ContactSet,
) -> Result<DynDerivatives, RbdError> {
    check_dims(model, &[("q", q), ("v_minus", v_minus)])?;
    let (sol, kkt) = solve_impulse(model, q, v_minus, contacts)?;
    Ok(impulse_state_derivatives_with(model, q, v_minus, contacts, &sol, &kkt))
}

pub(crate) fn impulse_state_derivatives_with(
    model: &RobotModel,
    q: &DVector<f64>,
    v_minus: &DVector<f64>,
    contacts: &ContactSet,
    sol: &ContactSolution,
    kkt: &KktSystem,
) -> DynDerivatives {
    let (nv, nc) = (model.nv(), contacts.nc());
    let zero = DVector::zeros(nv);
    let dv = &sol.a - v_minus;
    let residual = |q: &DVector<f64>| -> DVector<f64> {
        let r1 = rnea(model, q, &zero, &dv, false) - contact_jacobian(model, q, &contacts.active).transpose() * &sol.lambda;
        let r2 = contact_velocity(model, q, &sol.a, &contacts.active);
        concat(r1, r2)
    };
    let dr_dq = central_columns(q, Q_STEP, nv + nc, residual);
    let (xq, yq) = kkt.solve_matrix(&(-dr_dq.rows(0, nv)), &(-dr_dq.rows(nv, nc)));
    // ∂R₁/∂v⁻ = −M.
    let (xv, yv) = kkt.solve_matrix(&kkt.mass, &DMatrix::zeros(nc, nv));
    DynDerivatives { d_dq: stack(xq, yq), d_dv: stack(xv, yv), d_dtau: DMatrix::zeros(nv + nc, 0) }
}
