//! Recursive Newton–Euler inverse dynamics, the joint-torque regressor, joint-space
//! inertia, contact kinematics and free forward dynamics.

use super::model::{LinkJoint, RobotModel};
use super::spatial::{self, body_force, body_force_regressor, cross_motion, Force, Motion, Transform};
use super::RbdError;
use crate::inertia::so3;
use nalgebra::{Cholesky, DMatrix, DVector, Dyn, Matrix3, SMatrix, Vector3};

#[derive(Clone, Debug)]
pub(crate) struct LinkState {
    /// `ⁱX_λ(i)`
    pub x_parent: Transform,
    /// `ⁱX_0`
    pub x_world: Transform,
    pub v: Motion,
    pub a: Motion,
}

pub(crate) fn check_dims(model: &RobotModel, vectors: &[(&str, &DVector<f64>)]) -> Result<(), RbdError> {
    for (name, v) in vectors {
        if v.len() != model.nv() {
            return Err(RbdError::DimensionMismatch(format!("{name} has length {}, expected {}", v.len(), model.nv())));
        }
    }
    Ok(())
}

fn joint_transform(joint: LinkJoint, axis: &Vector3<f64>, q: f64) -> Transform {
    match joint {
        LinkJoint::Revolute => Transform::from_pose(&so3::exp(&(axis * q)), &Vector3::zeros()),
        LinkJoint::Prismatic => Transform::from_pose(&Matrix3::identity(), &(axis * q)),
    }
}

pub(crate) fn motion_subspace(joint: LinkJoint, axis: &Vector3<f64>) -> Motion {
    match joint {
        LinkJoint::Revolute => spatial::join(axis, &Vector3::zeros()),
        LinkJoint::Prismatic => spatial::join(&Vector3::zeros(), axis),
    }
}

/// Forward pass of link transforms, velocities and accelerations. With
/// `gravity` the base acceleration is `−g` so that `a` includes gravity.
pub(crate) fn forward_pass(model: &RobotModel, q: &DVector<f64>, v: &DVector<f64>, a: &DVector<f64>, gravity: bool) -> Vec<LinkState> {
    let base_acc = if gravity { spatial::join(&Vector3::zeros(), &(-model.gravity)) } else { Motion::zeros() };
    let mut states: Vec<LinkState> = Vec::with_capacity(model.links.len());
    for (i, link) in model.links.iter().enumerate() {
        let x_parent = joint_transform(link.joint, &link.axis, q[i]).compose(&link.placement);
        let s = motion_subspace(link.joint, &link.axis);
        let vj = s * v[i];
        let (x_world, v_parent, a_parent) = match link.parent {
            Some(p) => (x_parent.compose(&states[p].x_world), states[p].v, states[p].a),
            None => (x_parent, Motion::zeros(), base_acc),
        };
        let vi = x_parent.apply_motion(&v_parent) + vj;
        let ai = x_parent.apply_motion(&a_parent) + s * a[i] + cross_motion(&vi, &vj);
        states.push(LinkState { x_parent, x_world, v: vi, a: ai });
    }
    states
}

/// Generalized forces `τ = M(q) a + h(q, v)`.
pub fn inverse_dynamics(model: &RobotModel, q: &DVector<f64>, v: &DVector<f64>, a: &DVector<f64>) -> DVector<f64> {
    rnea(model, q, v, a, true)
}

pub(crate) fn rnea(model: &RobotModel, q: &DVector<f64>, v: &DVector<f64>, a: &DVector<f64>, gravity: bool) -> DVector<f64> {
    let states = forward_pass(model, q, v, a, gravity);
    let mut forces: Vec<Force> = states
        .iter()
        .enumerate()
        .map(|(i, st)| model.link_inertia(i).map_or(Force::zeros(), |th| body_force(th, &st.v, &st.a)))
        .collect();
    let mut tau = DVector::zeros(model.nv());
    for i in (0..model.links.len()).rev() {
        let link = &model.links[i];
        tau[i] = motion_subspace(link.joint, &link.axis).dot(&forces[i]);
        if let Some(p) = link.parent {
            let f = states[i].x_parent.apply_force_transpose(&forces[i]);
            forces[p] += f;
        }
    }
    tau
}

/// Coriolis, centrifugal and gravity terms `h(q, v) = ID(q, v, 0)`.
pub fn bias_forces(model: &RobotModel, q: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
    inverse_dynamics(model, q, v, &DVector::zeros(model.nv()))
}

/// Joint-space inertia matrix, assembled column by column from unit accelerations.
pub fn mass_matrix(model: &RobotModel, q: &DVector<f64>) -> DMatrix<f64> {
    let n = model.nv();
    let zero = DVector::zeros(n);
    let mut m = DMatrix::zeros(n, n);
    for j in 0..n {
        let e = DVector::from_fn(n, |i, _| if i == j { 1.0 } else { 0.0 });
        m.set_column(j, &rnea(model, q, &zero, &e, false));
    }
    // Symmetrize away round-off.
    (&m + m.transpose()) * 0.5
}

/// Regressor columns of the listed bodies: `nv × 10·bodies.len()`.
pub fn regressor_columns(
    model: &RobotModel,
    q: &DVector<f64>,
    v: &DVector<f64>,
    a: &DVector<f64>,
    bodies: &[usize],
) -> DMatrix<f64> {
    let states = forward_pass(model, q, v, a, true);
    let mut y = DMatrix::zeros(model.nv(), 10 * bodies.len());
    for (col, &b) in bodies.iter().enumerate() {
        let link = model.body_link[b];
        let mut block: SMatrix<f64, 6, 10> = body_force_regressor(&states[link].v, &states[link].a);
        let mut j = Some(link);
        while let Some(i) = j {
            let l = &model.links[i];
            let s = motion_subspace(l.joint, &l.axis);
            let row = s.transpose() * block;
            y.view_mut((i, 10 * col), (1, 10)).copy_from(&row);
            if l.parent.is_some() {
                for c in 0..10 {
                    let f = states[i].x_parent.apply_force_transpose(&block.column(c).into_owned());
                    block.set_column(c, &f);
                }
            }
            j = l.parent;
        }
    }
    y
}

/// Joint-torque regressor `Y(q, v, a)` with `Y ϑ = ID(q, v, a)`, columns
/// ordered per body.
pub fn joint_torque_regressor(model: &RobotModel, q: &DVector<f64>, v: &DVector<f64>, a: &DVector<f64>) -> DMatrix<f64> {
    let all: Vec<usize> = (0..model.num_bodies()).collect();
    regressor_columns(model, q, v, a, &all)
}

pub(crate) fn cholesky(m: DMatrix<f64>) -> Result<Cholesky<f64, Dyn>, RbdError> {
    if !m.iter().all(|x| x.is_finite()) {
        return Err(RbdError::NonFiniteData("mass matrix".into()));
    }
    Cholesky::new(m).ok_or(RbdError::NotPositiveDefinite)
}

/// Free forward dynamics `a = M⁻¹ (τ − h)`.
pub fn forward_dynamics(model: &RobotModel, q: &DVector<f64>, v: &DVector<f64>, tau: &DVector<f64>) -> Result<DVector<f64>, RbdError> {
    check_dims(model, &[("q", q), ("v", v), ("tau", tau)])?;
    let chol = cholesky(mass_matrix(model, q))?;
    Ok(chol.solve(&(tau - bias_forces(model, q, v))))
}

/// World position of a contact point.
pub fn contact_position(model: &RobotModel, q: &DVector<f64>, contact: usize) -> Vector3<f64> {
    let c = &model.contacts()[contact];
    let states = forward_pass(model, q, &DVector::zeros(model.nv()), &DVector::zeros(model.nv()), false);
    let x = &states[model.body_link[c.body]].x_world;
    x.position() + x.orientation() * c.offset
}

/// Planar contact rows (world x and z) of the listed contacts' point Jacobians.
pub fn contact_jacobian(model: &RobotModel, q: &DVector<f64>, contacts: &[usize]) -> DMatrix<f64> {
    let n = model.nv();
    let states = forward_pass(model, q, &DVector::zeros(n), &DVector::zeros(n), false);
    let mut jac = DMatrix::zeros(2 * contacts.len(), n);
    for (row, &k) in contacts.iter().enumerate() {
        let c = &model.contacts()[k];
        let link = model.body_link[c.body];
        let xw = &states[link].x_world;
        let p = xw.position() + xw.orientation() * c.offset;
        let mut j = Some(link);
        while let Some(i) = j {
            let l = &model.links[i];
            let frame = &states[i].x_world;
            let axis = frame.orientation() * l.axis;
            let col = match l.joint {
                LinkJoint::Revolute => axis.cross(&(p - frame.position())),
                LinkJoint::Prismatic => axis,
            };
            jac[(2 * row, i)] = col.x;
            jac[(2 * row + 1, i)] = col.z;
            j = l.parent;
        }
    }
    jac
}

fn point_kinematics(states: &[LinkState], link: usize, offset: &Vector3<f64>) -> (Vector3<f64>, Vector3<f64>) {
    let st = &states[link];
    let (w, u) = (spatial::angular(&st.v), spatial::linear(&st.v));
    let (dw, du) = (spatial::angular(&st.a), spatial::linear(&st.a));
    let vel = u + w.cross(offset);
    let acc = du + dw.cross(offset) + w.cross(&vel);
    let r = st.x_world.orientation();
    (r * vel, r * acc)
}

/// Planar (x, z) world velocities of the listed contact points.
pub fn contact_velocity(model: &RobotModel, q: &DVector<f64>, v: &DVector<f64>, contacts: &[usize]) -> DVector<f64> {
    let states = forward_pass(model, q, v, &DVector::zeros(model.nv()), false);
    let mut out = DVector::zeros(2 * contacts.len());
    for (row, &k) in contacts.iter().enumerate() {
        let c = &model.contacts()[k];
        let (vel, _) = point_kinematics(&states, model.body_link[c.body], &c.offset);
        out[2 * row] = vel.x;
        out[2 * row + 1] = vel.z;
    }
    out
}

/// Planar classical accelerations `J_c a + J̇_c v` of the listed contact points.
pub fn contact_acceleration(
    model: &RobotModel,
    q: &DVector<f64>,
    v: &DVector<f64>,
    a: &DVector<f64>,
    contacts: &[usize],
) -> DVector<f64> {
    let states = forward_pass(model, q, v, a, false);
    let mut out = DVector::zeros(2 * contacts.len());
    for (row, &k) in contacts.iter().enumerate() {
        let c = &model.contacts()[k];
        let (_, acc) = point_kinematics(&states, model.body_link[c.body], &c.offset);
        out[2 * row] = acc.x;
        out[2 * row + 1] = acc.z;
    }
    out
}

/// Contact drift `a_c = J̇_c v`.
pub fn contact_drift(model: &RobotModel, q: &DVector<f64>, v: &DVector<f64>, contacts: &[usize]) -> DVector<f64> {
    contact_acceleration(model, q, v, &DVector::zeros(model.nv()), contacts)
}

pub fn kinetic_energy(model: &RobotModel, q: &DVector<f64>, v: &DVector<f64>) -> f64 {
    0.5 * v.dot(&(mass_matrix(model, q) * v))
}

/// Gravitational potential energy `−Σ m_i gᵀ c_i`.
pub fn potential_energy(model: &RobotModel, q: &DVector<f64>) -> f64 {
    let n = model.nv();
    let states = forward_pass(model, q, &DVector::zeros(n), &DVector::zeros(n), false);
    model
        .bodies()
        .iter()
        .enumerate()
        .filter(|(_, b)| b.inertia.mass() != 0.0)
        .map(|(i, b)| {
            let x = &states[model.body_link[i]].x_world;
            let com = x.position() + x.orientation() * (b.inertia.first_moment() / b.inertia.mass());
            -b.inertia.mass() * model.gravity.dot(&com)
        })
        .sum()
}
