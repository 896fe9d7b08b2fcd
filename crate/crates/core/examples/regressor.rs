//! Joint torques are linear in the stacked inertial parameters.

use nalgebra::DVector;
use parest::rbd::{inverse_dynamics, joint_torque_regressor, RobotModel};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let model = RobotModel::from_file(concat!(env!("CARGO_MANIFEST_DIR"), "/data/models/double_pendulum.json"))?;
    let q = DVector::from_vec(vec![0.4, -0.7]);
    let v = DVector::from_vec(vec![1.0, 0.5]);
    let a = DVector::from_vec(vec![-0.2, 2.0]);

    let y = joint_torque_regressor(&model, &q, &v, &a);
    let tau = inverse_dynamics(&model, &q, &v, &a);
    println!("regressor is {}x{}", y.nrows(), y.ncols());
    println!("Y theta = {:.4?}", (&y * model.stacked_inertia()).as_slice());
    println!("RNEA    = {:.4?}", tau.as_slice());
    Ok(())
}
