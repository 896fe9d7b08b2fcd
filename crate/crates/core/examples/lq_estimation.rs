//! On a linear-quadratic problem the solver reaches the optimum in one step.

use parest::solver::lq::{random_lq_problem, LqDims};
use parest::solver::{solve, SolverConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dims = LqDims { horizon: 10, nx: 4, nw: 4, ntheta: 3, nz: 2 };
    let (problem, init) = random_lq_problem(7, dims, true, true);
    let out = solve(&problem, init, &SolverConfig::default())?;
    println!("{:?} after {} iteration(s)", out.status, out.iterations);
    println!("cost {:.6e}, gap {:.2e}, grad {:.2e}", out.cost, out.gap_l1, out.grad_norm);
    println!("theta = {:.4?}", out.iterate.theta.as_slice());
    Ok(())
}
