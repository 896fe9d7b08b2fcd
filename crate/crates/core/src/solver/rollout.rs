//! Candidate iterates along a search direction.

use super::backward::{ArrivalSolution, BackwardPass, Direction, Expansions};
use super::problem::{par_map, Iterate, ShootingProblem};
use super::SolverError;
use nalgebra::DVector;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RolloutKind {
    Single,
    Feasibility,
    Multiple,
}

impl RolloutKind {
    pub const ALL: [RolloutKind; 3] = [RolloutKind::Single, RolloutKind::Feasibility, RolloutKind::Multiple];

    pub fn name(&self) -> &'static str {
        match self {
            RolloutKind::Single => "single",
            RolloutKind::Feasibility => "feasibility",
            RolloutKind::Multiple => "multiple",
        }
    }
}

impl std::fmt::Display for RolloutKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for RolloutKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "single" => Ok(RolloutKind::Single),
            "feasibility" => Ok(RolloutKind::Feasibility),
            "multiple" => Ok(RolloutKind::Multiple),
            _ => Err(format!("unknown rollout '{s}' (expected single, feasibility or multiple)")),
        }
    }
}

fn forward_with_policy(
    problem: &ShootingProblem,
    it: &Iterate,
    exp: &Expansions,
    bp: &BackwardPass,
    arrival: &ArrivalSolution,
    alpha: f64,
    keep_gaps: bool,
) -> Result<Iterate, SolverError> {
    let space = &problem.space;
    let theta = &it.theta + &arrival.dtheta * alpha;
    let mut xs = Vec::with_capacity(it.xs.len());
    let mut ws = Vec::with_capacity(it.ws.len());
    xs.push(space.plus(&it.xs[0], &(&arrival.dx0 * alpha)));
    for k in 0..problem.nodes.len() {
        let p = &bp.policies[k];
        let dx = space.minus(&xs[k], &it.xs[k]);
        let w = &it.ws[k] - &p.k_total * alpha - &p.k_x * dx;
        let mut next = problem.nodes[k].dynamics.next(&xs[k], &w, &theta)?;
        if keep_gaps {
            next = space.plus(&next, &(&exp.nodes[k].gap * (alpha - 1.0)));
        }
        if !next.iter().all(|x| x.is_finite()) {
            return Err(SolverError::NonFiniteData(format!("rollout state {}", k + 1)));
        }
        ws.push(w);
        xs.push(next);
    }
    Ok(Iterate { xs, ws, theta })
}

/// Nonlinear rollout under the feedback policy that keeps the fraction
/// `(1 − α)` of every gap.
pub fn rollout_feasibility(
    problem: &ShootingProblem,
    it: &Iterate,
    exp: &Expansions,
    bp: &BackwardPass,
    arrival: &ArrivalSolution,
    alpha: f64,
) -> Result<Iterate, SolverError> {
    forward_with_policy(problem, it, exp, bp, arrival, alpha, true)
}

/// Nonlinear rollout under the feedback policy with every gap closed.
pub fn rollout_single_shooting(
    problem: &ShootingProblem,
    it: &Iterate,
    exp: &Expansions,
    bp: &BackwardPass,
    arrival: &ArrivalSolution,
    alpha: f64,
) -> Result<Iterate, SolverError> {
    forward_with_policy(problem, it, exp, bp, arrival, alpha, false)
}

/// Linear update of every state and uncertainty; gaps are re-evaluated by the
/// caller with nonlinear shoots.
pub fn rollout_multiple_shooting(problem: &ShootingProblem, it: &Iterate, d: &Direction, alpha: f64) -> Iterate {
    let xs = par_map(it.xs.len(), |k| problem.space.plus(&it.xs[k], &(&d.dxs[k] * alpha)));
    let ws = par_map(it.ws.len(), |k| &it.ws[k] + &d.dws[k] * alpha);
    Iterate { xs, ws, theta: &it.theta + &d.dtheta * alpha }
}

/// Sum of the ℓ₁ norms of the gaps.
pub fn gap_l1(gaps: &[DVector<f64>]) -> f64 {
    gaps.iter().map(|g| g.lp_norm(1)).sum()
}

pub fn gap_max(gaps: &[DVector<f64>]) -> f64 {
    gaps.iter().map(|g| g.amax()).fold(0.0, f64::max)
}
