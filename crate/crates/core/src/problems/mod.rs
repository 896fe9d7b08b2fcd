//! Estimation scenarios: observation models, synthetic data, problem assembly
//! and scoring.

pub mod builder;
pub mod observation;
pub mod scenario;
pub mod score;
pub mod synth;

pub use builder::{build_problem, initial_parameters, measured_states, EstimationProblem, ParamMap, RobotStateSpace, RobotTransition};
pub use observation::{Covariance, ObservationKind, ObservationModel, ObservationResidual, ObservationSpec};
pub use scenario::{CostSpec, NodeSpec, NoiseSpec, Phase, Scenario, ScenarioFile, ThetaInit};
pub use score::{regressor_image_error, score_estimate, Estimate, GroundTruth, Metrics};
pub use synth::{synthesize_data, SyntheticData};

use crate::inertia::InertiaError;
use crate::rbd::RbdError;
use crate::solver::SolverError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ProblemError {
    #[error("inconsistent schedule: {0}")]
    InconsistentSchedule(String),
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error(transparent)]
    Rbd(#[from] RbdError),
    #[error(transparent)]
    Inertia(#[from] InertiaError),
    #[error(transparent)]
    Solver(#[from] SolverError),
}
