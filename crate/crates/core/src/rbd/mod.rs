//! Rigid-body dynamics for kinematic trees with revolute, prismatic and planar
//! floating joints, planar point contacts and inertial-parameter derivatives.

pub mod contact;
pub mod derivatives;
pub mod dynamics;
pub mod integrate;
pub mod model;
pub mod spatial;

pub use contact::{contact_dynamics, impulse_dynamics, ContactSet, ContactSolution, KktSystem};
pub use derivatives::{
    contact_param_derivative, fd_param_derivative, impulse_param_derivative, impulse_state_derivatives, state_derivatives,
    DynDerivatives, ParamBlock,
};
pub use dynamics::{
    bias_forces, contact_jacobian, contact_position, forward_dynamics, inverse_dynamics, joint_torque_regressor, mass_matrix,
};
pub use integrate::{integrate_step, state_minus, state_plus, wrap_angle};
pub use model::{Body, ContactPoint, JointType, RobotModel};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RbdError {
    #[error("contact Jacobian is rank deficient (singular value ratio {0:.3e})")]
    RankDeficientContact(f64),
    #[error("mass matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("non-finite data in {0}")]
    NonFiniteData(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("i/o error: {0}")]
    Io(String),
}
