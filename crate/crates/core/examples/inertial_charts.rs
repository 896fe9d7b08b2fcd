//! Map random chart coordinates to inertial parameters and check that every
//! image is physically consistent.

use parest::inertia::{ParamChart, Vector10};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for chart in [ParamChart::LogCholesky, ParamChart::ExpEigenvalue] {
        let mut bad = 0;
        for _ in 0..1000 {
            let pi = Vector10::from_fn(|_, _| rng.random_range(-2.0..2.0));
            if !chart.to_theta(&pi).is_fully_consistent(1e-9) {
                bad += 1;
            }
        }
        let theta = chart.to_theta(&Vector10::zeros());
        println!("{:<8} origin -> {theta}", chart.name());
        println!("{:<8} {bad} inconsistent of 1000", chart.name());

        // round trip through the chart
        let back = chart.to_theta(&chart.from_theta(&theta).unwrap());
        println!("{:<8} round trip error {:.2e}", chart.name(), (back.0 - theta.0).amax());
    }
}
