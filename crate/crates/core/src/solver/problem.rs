//! Problem description: transitions, Gauss–Newton costs, priors and iterates.

use super::SolverError;
use nalgebra::{DMatrix, DVector};
use std::sync::Arc;

/// Composition on the state manifold. The solver assumes both operations have
/// identity Jacobians (additive coordinates, possibly with angle wrapping).
pub trait StateSpace: Send + Sync {
    fn plus(&self, x: &DVector<f64>, dx: &DVector<f64>) -> DVector<f64>;
    fn minus(&self, x1: &DVector<f64>, x0: &DVector<f64>) -> DVector<f64>;
}

#[derive(Clone, Copy, Debug, Default)]
pub struct Euclidean;

impl StateSpace for Euclidean {
    fn plus(&self, x: &DVector<f64>, dx: &DVector<f64>) -> DVector<f64> {
        x + dx
    }

    fn minus(&self, x1: &DVector<f64>, x0: &DVector<f64>) -> DVector<f64> {
        x1 - x0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Linearization {
    pub next: DVector<f64>,
    pub f_x: DMatrix<f64>,
    pub f_w: DMatrix<f64>,
    pub f_theta: DMatrix<f64>,
}

/// Discrete transition `x' = f(x, w; θ)` of one node.
pub trait Transition: Send + Sync {
    fn nw(&self) -> usize;
    fn next(&self, x: &DVector<f64>, w: &DVector<f64>, theta: &DVector<f64>) -> Result<DVector<f64>, SolverError>;
    fn linearize(&self, x: &DVector<f64>, w: &DVector<f64>, theta: &DVector<f64>) -> Result<Linearization, SolverError>;
}

/// Residual `r(x, w, θ)` and its Jacobians.
#[derive(Clone, Debug, PartialEq)]
pub struct ResidualEval {
    pub r: DVector<f64>,
    pub r_x: DMatrix<f64>,
    pub r_w: DMatrix<f64>,
    pub r_theta: DMatrix<f64>,
}

pub trait Residual: Send + Sync {
    fn value(&self, x: &DVector<f64>, w: &DVector<f64>, theta: &DVector<f64>) -> DVector<f64>;
    fn eval(&self, x: &DVector<f64>, w: &DVector<f64>, theta: &DVector<f64>) -> ResidualEval;
}

/// Affine residual `A_x x + A_w w + A_θ θ − b`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearResidual {
    pub a_x: DMatrix<f64>,
    pub a_w: DMatrix<f64>,
    pub a_theta: DMatrix<f64>,
    pub b: DVector<f64>,
}

impl Residual for LinearResidual {
    fn value(&self, x: &DVector<f64>, w: &DVector<f64>, theta: &DVector<f64>) -> DVector<f64> {
        &self.a_x * x + &self.a_w * w + &self.a_theta * theta - &self.b
    }

    fn eval(&self, x: &DVector<f64>, w: &DVector<f64>, theta: &DVector<f64>) -> ResidualEval {
        ResidualEval { r: self.value(x, w, theta), r_x: self.a_x.clone(), r_w: self.a_w.clone(), r_theta: self.a_theta.clone() }
    }
}

/// Residual `w` (the process-noise term).
#[derive(Clone, Copy, Debug)]
pub struct NoiseResidual {
    pub nx: usize,
    pub nw: usize,
    pub ntheta: usize,
}

impl Residual for NoiseResidual {
    fn value(&self, _x: &DVector<f64>, w: &DVector<f64>, _theta: &DVector<f64>) -> DVector<f64> {
        w.clone()
    }

    fn eval(&self, x: &DVector<f64>, w: &DVector<f64>, theta: &DVector<f64>) -> ResidualEval {
        ResidualEval {
            r: self.value(x, w, theta),
            r_x: DMatrix::zeros(self.nw, self.nx),
            r_w: DMatrix::identity(self.nw, self.nw),
            r_theta: DMatrix::zeros(self.nw, self.ntheta),
        }
    }
}

/// Gauss–Newton expansion of a node cost.
#[derive(Clone, Debug, PartialEq)]
pub struct CostExpansion {
    pub l: f64,
    pub l_x: DVector<f64>,
    pub l_w: DVector<f64>,
    pub l_theta: DVector<f64>,
    pub l_xx: DMatrix<f64>,
    pub l_xw: DMatrix<f64>,
    pub l_xtheta: DMatrix<f64>,
    pub l_ww: DMatrix<f64>,
    pub l_wtheta: DMatrix<f64>,
    pub l_thetatheta: DMatrix<f64>,
}

impl CostExpansion {
    pub fn zeros(nx: usize, nw: usize, nt: usize) -> Self {
        CostExpansion {
            l: 0.0,
            l_x: DVector::zeros(nx),
            l_w: DVector::zeros(nw),
            l_theta: DVector::zeros(nt),
            l_xx: DMatrix::zeros(nx, nx),
            l_xw: DMatrix::zeros(nx, nw),
            l_xtheta: DMatrix::zeros(nx, nt),
            l_ww: DMatrix::zeros(nw, nw),
            l_wtheta: DMatrix::zeros(nw, nt),
            l_thetatheta: DMatrix::zeros(nt, nt),
        }
    }

    /// Adds `½ rᵀ W r` in Gauss–Newton form.
    pub fn add_residual(&mut self, e: &ResidualEval, weight: &DMatrix<f64>) {
        let wr = weight * &e.r;
        let wx = weight * &e.r_x;
        let ww = weight * &e.r_w;
        let wt = weight * &e.r_theta;
        self.l += 0.5 * e.r.dot(&wr);
        self.l_x += e.r_x.tr_mul(&wr);
        self.l_w += e.r_w.tr_mul(&wr);
        self.l_theta += e.r_theta.tr_mul(&wr);
        self.l_xx += e.r_x.tr_mul(&wx);
        self.l_xw += e.r_x.tr_mul(&ww);
        self.l_xtheta += e.r_x.tr_mul(&wt);
        self.l_ww += e.r_w.tr_mul(&ww);
        self.l_wtheta += e.r_w.tr_mul(&wt);
        self.l_thetatheta += e.r_theta.tr_mul(&wt);
    }
}

/// Weighted residual `½ rᵀ W r`, `W` symmetric positive (semi)definite.
#[derive(Clone)]
pub struct CostTerm {
    pub residual: Arc<dyn Residual>,
    pub weight: DMatrix<f64>,
}

impl CostTerm {
    pub fn new(residual: Arc<dyn Residual>, weight: DMatrix<f64>) -> Self {
        CostTerm { residual, weight }
    }

    pub fn value(&self, x: &DVector<f64>, w: &DVector<f64>, theta: &DVector<f64>) -> f64 {
        let r = self.residual.value(x, w, theta);
        0.5 * r.dot(&(&self.weight * &r))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NodeKind {
    Running,
    /// Impulse reset; carries no uncertainty (`n_w = 0`).
    Reset,
}

/// Transition from `x_k` to `x_{k+1}` with the cost attached to `(x_k, w_k)`.
#[derive(Clone)]
pub struct Node {
    pub kind: NodeKind,
    pub dynamics: Arc<dyn Transition>,
    pub costs: Vec<CostTerm>,
}

impl Node {
    pub fn nw(&self) -> usize {
        self.dynamics.nw()
    }
}

/// Quadratic prior `½ ‖x ⊖ mean‖²_precision` (parameter priors use plain differences).
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianPrior {
    pub mean: DVector<f64>,
    pub precision: DMatrix<f64>,
}

impl GaussianPrior {
    /// Prior from a covariance matrix.
    pub fn from_covariance(mean: DVector<f64>, cov: &DMatrix<f64>) -> Result<Self, SolverError> {
        let chol = cov.clone().cholesky().ok_or_else(|| SolverError::NotPositiveDefinite("prior covariance".into()))?;
        Ok(GaussianPrior { mean, precision: chol.inverse() })
    }

    pub fn isotropic(mean: DVector<f64>, sigma: f64) -> Self {
        let n = mean.len();
        GaussianPrior { mean, precision: DMatrix::identity(n, n) / (sigma * sigma) }
    }
}

/// Multiple-shooting estimation problem over `N` transitions.
#[derive(Clone)]
pub struct ShootingProblem {
    pub nx: usize,
    pub ntheta: usize,
    pub nodes: Vec<Node>,
    /// Costs on `x_N` (the uncertainty argument is empty).
    pub terminal: Vec<CostTerm>,
    pub arrival: GaussianPrior,
    pub param_prior: Option<GaussianPrior>,
    pub space: Arc<dyn StateSpace>,
}

impl ShootingProblem {
    pub fn horizon(&self) -> usize {
        self.nodes.len()
    }

    pub fn validate_iterate(&self, it: &Iterate) -> Result<(), SolverError> {
        let bad = |m: String| Err(SolverError::DimensionMismatch(m));
        if it.xs.len() != self.nodes.len() + 1 || it.ws.len() != self.nodes.len() {
            return bad(format!("iterate has {} states and {} uncertainties for horizon {}", it.xs.len(), it.ws.len(), self.nodes.len()));
        }
        if it.theta.len() != self.ntheta {
            return bad(format!("θ has length {}, expected {}", it.theta.len(), self.ntheta));
        }
        for (k, x) in it.xs.iter().enumerate() {
            if x.len() != self.nx {
                return bad(format!("state {k} has length {}", x.len()));
            }
        }
        for (k, (w, n)) in it.ws.iter().zip(&self.nodes).enumerate() {
            if w.len() != n.nw() {
                return bad(format!("uncertainty {k} has length {}, expected {}", w.len(), n.nw()));
            }
        }
        if self.arrival.mean.len() != self.nx {
            return bad("arrival prior dimension".into());
        }
        Ok(())
    }

    fn empty_w(&self) -> DVector<f64> {
        DVector::zeros(0)
    }

    /// Cost of node `k` (including the arrival prior at node 0).
    pub fn node_cost(&self, k: usize, it: &Iterate) -> f64 {
        let node = &self.nodes[k];
        let mut c: f64 = node.costs.iter().map(|t| t.value(&it.xs[k], &it.ws[k], &it.theta)).sum();
        if k == 0 {
            c += self.arrival_cost(&it.xs[0]);
        }
        c
    }

    pub fn arrival_cost(&self, x0: &DVector<f64>) -> f64 {
        let r = self.space.minus(x0, &self.arrival.mean);
        0.5 * r.dot(&(&self.arrival.precision * &r))
    }

    pub fn terminal_cost(&self, it: &Iterate) -> f64 {
        let xn = &it.xs[self.nodes.len()];
        let mut c: f64 = self.terminal.iter().map(|t| t.value(xn, &self.empty_w(), &it.theta)).sum();
        if self.nodes.is_empty() {
            c += self.arrival_cost(xn);
        }
        c
    }

    pub fn param_prior_cost(&self, theta: &DVector<f64>) -> f64 {
        self.param_prior.as_ref().map_or(0.0, |p| {
            let r = theta - &p.mean;
            0.5 * r.dot(&(&p.precision * &r))
        })
    }

    /// Total cost of an iterate.
    pub fn total_cost(&self, it: &Iterate) -> f64 {
        let running: Vec<f64> = par_map(self.nodes.len(), |k| self.node_cost(k, it));
        running.iter().sum::<f64>() + self.terminal_cost(it) + self.param_prior_cost(&it.theta)
    }

    /// Gaps `f̄_k = f(x_k, w_k; θ) ⊖ x_{k+1}`.
    pub fn gaps(&self, it: &Iterate) -> Result<Vec<DVector<f64>>, SolverError> {
        par_map(self.nodes.len(), |k| {
            let f = self.nodes[k].dynamics.next(&it.xs[k], &it.ws[k], &it.theta)?;
            Ok(self.space.minus(&f, &it.xs[k + 1]))
        })
        .into_iter()
        .collect()
    }

    /// Replaces `x_1..x_N` by a rollout from `x_0`, closing every gap.
    pub fn make_feasible(&self, it: &mut Iterate) -> Result<(), SolverError> {
        for k in 0..self.nodes.len() {
            it.xs[k + 1] = self.nodes[k].dynamics.next(&it.xs[k], &it.ws[k], &it.theta)?;
        }
        Ok(())
    }

    /// Zero-uncertainty iterate rolled out from the arrival mean.
    pub fn rollout_from_arrival(&self, theta: DVector<f64>) -> Result<Iterate, SolverError> {
        let mut it = Iterate {
            xs: vec![self.arrival.mean.clone(); self.nodes.len() + 1],
            ws: self.nodes.iter().map(|n| DVector::zeros(n.nw())).collect(),
            theta,
        };
        self.make_feasible(&mut it)?;
        Ok(it)
    }
}

/// Order-preserving parallel map over node indices.
pub(crate) fn par_map<T: Send, F: Fn(usize) -> T + Sync + Send>(n: usize, f: F) -> Vec<T> {
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

/// Decision variables `({x_k}, {w_k}, θ)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Iterate {
    pub xs: Vec<DVector<f64>>,
    pub ws: Vec<DVector<f64>>,
    pub theta: DVector<f64>,
}

/// Affine transition `x' = A x + B w + C θ + c`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearDynamics {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub offset: DVector<f64>,
}

impl Transition for LinearDynamics {
    fn nw(&self) -> usize {
        self.b.ncols()
    }

    fn next(&self, x: &DVector<f64>, w: &DVector<f64>, theta: &DVector<f64>) -> Result<DVector<f64>, SolverError> {
        Ok(&self.a * x + &self.b * w + &self.c * theta + &self.offset)
    }

    fn linearize(&self, x: &DVector<f64>, w: &DVector<f64>, theta: &DVector<f64>) -> Result<Linearization, SolverError> {
        Ok(Linearization { next: self.next(x, w, theta)?, f_x: self.a.clone(), f_w: self.b.clone(), f_theta: self.c.clone() })
    }
}
