//! Log-Cholesky against exponential-eigenvalue coordinates over the shipped
//! scenarios.

use parest::bench::{run_suite, Suite};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut suite = Suite::from_file(concat!(env!("CARGO_MANIFEST_DIR"), "/data/suites/charts.json"))?;
    suite.spec.seeds = 2;
    let report = run_suite(&suite, 0)?;
    print!("{}", report.table());
    Ok(())
}
