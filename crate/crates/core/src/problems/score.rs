//! Accuracy metrics of an estimate against ground truth.

use crate::inertia::InertialVector;
use crate::rbd::dynamics::regressor_columns;
use crate::rbd::{state_minus, RobotModel};
use crate::solver::NodeKind;
use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::scenario::NodeSpec;

/// Estimated trajectory and parameters in physical coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct Estimate {
    pub trajectory: Vec<DVector<f64>>,
    pub params: Vec<InertialVector>,
    pub cost: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GroundTruth<'a> {
    pub model: &'a RobotModel,
    pub trajectory: &'a [DVector<f64>],
    pub params: &'a [InertialVector],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    /// `‖ϑ̂ − ϑ‖ / ‖ϑ‖` per estimated body.
    pub param_rel_err: Vec<f64>,
    /// `|m̂ − m| / |m|` per estimated body.
    pub mass_rel_err: Vec<f64>,
    /// `Σ_k ‖x̂_k ⊖ x_k‖₁`.
    pub traj_l1: f64,
    /// `max_k ‖x̂_k ⊖ x_k‖∞`.
    pub traj_linf: f64,
    pub final_cost: f64,
}

fn rel(err: f64, scale: f64) -> f64 {
    if scale > 0.0 {
        err / scale
    } else {
        err
    }
}

/// Compares an estimate with the ground truth. Trajectory errors use the
/// state difference of `truth.model` (wrapped pitch angles).
pub fn score_estimate(estimate: &Estimate, truth: &GroundTruth) -> Metrics {
    let param_rel_err = estimate.params.iter().zip(truth.params).map(|(e, t)| rel((e.0 - t.0).norm(), t.0.norm())).collect();
    let mass_rel_err = estimate.params.iter().zip(truth.params).map(|(e, t)| rel((e.mass() - t.mass()).abs(), t.mass().abs())).collect();
    let mut traj_l1 = 0.0;
    let mut traj_linf: f64 = 0.0;
    for (x, t) in estimate.trajectory.iter().zip(truth.trajectory) {
        let d = state_minus(truth.model, x, t);
        traj_l1 += d.lp_norm(1);
        traj_linf = traj_linf.max(d.amax());
    }
    Metrics { param_rel_err, mass_rel_err, traj_l1, traj_linf, final_cost: estimate.cost }
}

/// Largest generalized-force difference `‖Y(q, v, a) (ϑ̂ − ϑ)‖∞` over the
/// running nodes of a trajectory, with accelerations `(v_{k+1} − v_k)/dt`.
/// Zero means the estimate explains the motion exactly as the truth does.
pub fn regressor_image_error(
    model: &RobotModel,
    schedule: &[NodeSpec],
    trajectory: &[DVector<f64>],
    bodies: &[usize],
    estimate: &[InertialVector],
    truth: &[InertialVector],
    dt: f64,
) -> f64 {
    let n = model.nv();
    let mut delta = DVector::zeros(10 * bodies.len());
    for (i, (e, t)) in estimate.iter().zip(truth).enumerate() {
        delta.rows_mut(10 * i, 10).copy_from(&(e.0 - t.0));
    }
    let mut worst: f64 = 0.0;
    for (k, node) in schedule.iter().enumerate() {
        if node.kind != NodeKind::Running {
            continue;
        }
        let q = trajectory[k].rows(0, n).into_owned();
        let v = trajectory[k].rows(n, n).into_owned();
        let a = (trajectory[k + 1].rows(n, n) - &v) / dt;
        let y = regressor_columns(model, &q, &v, &a, bodies);
        worst = worst.max((y * &delta).amax());
    }
    worst
}
