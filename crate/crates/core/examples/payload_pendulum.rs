//! Identify the payload of a lifted pendulum from noiseless joint data,
//! starting from a 70% mass error.

use parest::inertia::ParamChart;
use parest::problems::{build_problem, measured_states, synthesize_data, Scenario};
use parest::solver::{solve, SolverConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let s = Scenario::from_file(concat!(env!("CARGO_MANIFEST_DIR"), "/data/scenarios/lift_payload.json"))?;
    let data = synthesize_data(&s, 0)?;
    let problem = build_problem(&s, &data, ParamChart::ExpEigenvalue, &s.theta_init)?;
    let init = problem.iterate_from_states(measured_states(&s, &data));
    let out = solve(&problem.problem, init, &SolverConfig::default())?;

    let start = problem.params.physical(&problem.theta0);
    let est = problem.params.physical(&out.iterate.theta);
    println!("{:?} in {} iterations", out.status, out.iterations);
    println!("true mass  {:.6}", data.theta_true[0].mass());
    println!("start mass {:.6}", start[0].mass());
    println!("estimate   {:.6}", est[0].mass());
    Ok(())
}
