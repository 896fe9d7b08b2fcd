//! Random linear-Gaussian estimation problems.

use super::problem::{CostTerm, Euclidean, GaussianPrior, Iterate, LinearDynamics, LinearResidual, Node, NodeKind, ShootingProblem};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LqDims {
    pub horizon: usize,
    pub nx: usize,
    pub nw: usize,
    pub ntheta: usize,
    /// Observation dimension per node.
    pub nz: usize,
}

fn random_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize, scale: f64) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| rng.random_range(-scale..scale))
}

fn random_vector(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.random_range(-scale..scale))
}

fn random_spd(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let a = random_matrix(rng, n, n, 1.0);
    &a * a.transpose() + DMatrix::identity(n, n) * 0.5
}

/// Random problem with affine dynamics and observations depending on `x` and
/// `θ`, a parameter prior when `param_prior`, and a random iterate with gaps.
/// The reset node at the middle of the horizon (if `with_reset`) has no
/// uncertainty.
pub fn random_lq_problem(seed: u64, dims: LqDims, param_prior: bool, with_reset: bool) -> (ShootingProblem, Iterate) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let LqDims { horizon, nx, nw, ntheta, nz } = dims;
    let mut nodes = Vec::with_capacity(horizon);
    let observation = |rng: &mut ChaCha8Rng, nw_k: usize| -> CostTerm {
        let res = LinearResidual {
            a_x: random_matrix(rng, nz, nx, 1.0),
            a_w: DMatrix::zeros(nz, nw_k),
            a_theta: random_matrix(rng, nz, ntheta, 1.0),
            b: random_vector(rng, nz, 1.0),
        };
        CostTerm::new(Arc::new(res), random_spd(rng, nz))
    };
    for k in 0..horizon {
        let reset = with_reset && k == horizon / 2;
        let nw_k = if reset { 0 } else { nw };
        let dynamics = LinearDynamics {
            a: DMatrix::identity(nx, nx) + random_matrix(&mut rng, nx, nx, 0.3),
            b: random_matrix(&mut rng, nx, nw_k, 1.0),
            c: random_matrix(&mut rng, nx, ntheta, 0.5),
            offset: random_vector(&mut rng, nx, 0.2),
        };
        let mut costs = vec![observation(&mut rng, nw_k)];
        if nw_k > 0 {
            let noise = LinearResidual {
                a_x: DMatrix::zeros(nw_k, nx),
                a_w: DMatrix::identity(nw_k, nw_k),
                a_theta: DMatrix::zeros(nw_k, ntheta),
                b: DVector::zeros(nw_k),
            };
            costs.push(CostTerm::new(Arc::new(noise), random_spd(&mut rng, nw_k)));
        }
        nodes.push(Node { kind: if reset { NodeKind::Reset } else { NodeKind::Running }, dynamics: Arc::new(dynamics), costs });
    }
    let terminal = vec![observation(&mut rng, 0)];
    let arrival = GaussianPrior { mean: random_vector(&mut rng, nx, 1.0), precision: random_spd(&mut rng, nx) };
    let prior = param_prior.then(|| GaussianPrior { mean: random_vector(&mut rng, ntheta, 1.0), precision: random_spd(&mut rng, ntheta) });
    let problem = ShootingProblem { nx, ntheta, nodes, terminal, arrival, param_prior: prior, space: Arc::new(Euclidean) };
    let it = Iterate {
        xs: (0..=horizon).map(|_| random_vector(&mut rng, nx, 1.0)).collect(),
        ws: problem.nodes.iter().map(|n| random_vector(&mut rng, n.nw(), 0.5)).collect(),
        theta: random_vector(&mut rng, ntheta, 1.0),
    };
    (problem, it)
}
