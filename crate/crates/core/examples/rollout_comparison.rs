//! Single shooting against the gap-closing rollouts on the hopper, from a
//! perturbed start.

use parest::bench::{run_suite, Suite};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut suite = Suite::from_file(concat!(env!("CARGO_MANIFEST_DIR"), "/data/suites/rollouts.json"))?;
    suite.scenarios.retain(|s| s.name == "hopper");
    suite.spec.seeds = 5;
    let report = run_suite(&suite, 0)?;
    print!("{}", report.table());
    Ok(())
}
