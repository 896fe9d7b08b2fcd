//! Constrained forward dynamics and an impulse for the walker with both
//! contacts closed.

use nalgebra::DVector;
use parest::rbd::{contact_dynamics, contact_jacobian, impulse_dynamics, ContactSet, RobotModel};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let model = RobotModel::from_file(concat!(env!("CARGO_MANIFEST_DIR"), "/data/models/walker.json"))?;
    let n = model.nv();
    let q = DVector::from_fn(n, |i, _| 0.1 * i as f64);
    let v = DVector::from_fn(n, |i, _| 0.3 - 0.05 * i as f64);
    let tau = DVector::zeros(n);
    let active = ContactSet::new(vec![0, 1]);

    let sol = contact_dynamics(&model, &q, &v, &tau, &active)?;
    println!("a      = {:.4?}", sol.a.as_slice());
    println!("lambda = {:.4?}", sol.lambda.as_slice());

    let jump = impulse_dynamics(&model, &q, &v, &active)?;
    let j = contact_jacobian(&model, &q, &[0, 1]);
    println!("v+     = {:.4?}", jump.a.as_slice());
    println!("|J v+| = {:.2e}", (j * &jump.a).amax());
    Ok(())
}
