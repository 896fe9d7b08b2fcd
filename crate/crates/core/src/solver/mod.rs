//! Multiple-shooting parametrized DDP for estimation problems.
//!
//! Decision variables are the states `x_k`, the uncertainties `w_k` and a
//! static parameter vector `θ`. Each iteration linearizes the transitions,
//! runs a Riccati recursion that carries parameter sensitivities, resolves
//! `(δx₀, δθ)` at the arrival node and searches along the resulting direction
//! with a nonmonotone merit line search.

pub mod backward;
pub mod lq;
pub mod problem;
pub mod rollout;
pub mod solve;

pub use backward::{
    arrival_value, backward_pass, compute_node_expansions, direct_model, linear_direction, riccati_model, set_feedforward,
    solve_arrival, solve_arrival_nullspace, solve_arrival_schur, ArrivalMethod, ArrivalSolution, BackwardPass, Direction, Expansions,
    NodeExpansion, NodePolicy, QuadraticModel, ValueExpansion,
};
pub use problem::{
    CostExpansion, CostTerm, Euclidean, GaussianPrior, Iterate, LinearDynamics, LinearResidual, Linearization, Node, NodeKind,
    NoiseResidual, Residual, ResidualEval, ShootingProblem, StateSpace, Transition,
};
pub use rollout::{gap_l1, gap_max, rollout_feasibility, rollout_multiple_shooting, rollout_single_shooting, RolloutKind};
pub use solve::{merit_and_penalty, solve, SolveOutcome, SolveStatus, SolverConfig, SolverTrace, TraceRow};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SolverError {
    #[error("matrix is not positive definite: {0}")]
    NotPositiveDefinite(String),
    #[error("parameter Hessian is singular (eigenvalues in [{min_eig:.3e}, {max_eig:.3e}]); use the nullspace arrival solve")]
    SingularParameterHessian { min_eig: f64, max_eig: f64 },
    #[error("non-finite data in {0}")]
    NonFiniteData(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("dynamics failure: {0}")]
    Dynamics(String),
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
}

impl From<crate::rbd::RbdError> for SolverError {
    fn from(e: crate::rbd::RbdError) -> Self {
        match e {
            crate::rbd::RbdError::NonFiniteData(s) => SolverError::NonFiniteData(s),
            other => SolverError::Dynamics(other.to_string()),
        }
    }
}

#[cfg(test)]
pub(crate) mod tests;
