//! A sphere payload leaves inertia directions unobservable. The Schur solve
//! reports the singular parameter Hessian; the nullspace solve converges.

use parest::inertia::ParamChart;
use parest::problems::{build_problem, measured_states, synthesize_data, Scenario};
use parest::solver::{solve, ArrivalMethod, SolverConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let s = Scenario::from_file(concat!(env!("CARGO_MANIFEST_DIR"), "/data/scenarios/sphere_payload.json"))?;
    let data = synthesize_data(&s, 0)?;
    let problem = build_problem(&s, &data, ParamChart::ExpEigenvalue, &s.theta_init)?;
    let init = problem.iterate_from_states(measured_states(&s, &data));

    for arrival in [ArrivalMethod::Schur, ArrivalMethod::Nullspace] {
        let config = SolverConfig { arrival, ..SolverConfig::default() };
        match solve(&problem.problem, init.clone(), &config) {
            Ok(out) => {
                let dropped = out.arrival.as_ref().map_or(0, |a| a.null_basis.ncols());
                println!("{arrival:?}: {:?} in {} iterations, {dropped} directions dropped", out.status, out.iterations);
            }
            Err(e) => println!("{arrival:?}: {e}"),
        }
    }
    Ok(())
}
