//! The solve loop: backward pass, arrival solve, merit line search and
//! Levenberg–Marquardt regularization.

use super::backward::{
    arrival_value, backward_pass, compute_node_expansions, direct_model, linear_direction, set_feedforward, solve_arrival,
    ArrivalMethod, ArrivalSolution,
};
use super::problem::{Iterate, ShootingProblem};
use super::rollout::{gap_l1, gap_max, rollout_feasibility, rollout_multiple_shooting, rollout_single_shooting, RolloutKind};
use super::SolverError;
use log::{debug, info};
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;
use std::io::Write;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub max_iter: usize,
    pub rollout: RolloutKind,
    pub arrival: ArrivalMethod,
    /// Step lengths tried in order.
    pub alphas: Vec<f64>,
    pub mu_init: f64,
    pub mu_min: f64,
    pub mu_max: f64,
    pub mu_increase: f64,
    pub mu_decrease: f64,
    pub rho: f64,
    pub beta_nu: f64,
    pub nu_init: f64,
    /// Number of accepted merit values kept as nonmonotone reference.
    pub memory: usize,
    pub armijo_c1: f64,
    pub tol_grad: f64,
    pub tol_gap: f64,
    pub tol_step: f64,
    pub eps_rank: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            max_iter: 100,
            rollout: RolloutKind::Multiple,
            arrival: ArrivalMethod::Nullspace,
            alphas: (0..=10).map(|i| 0.5f64.powi(i)).collect(),
            mu_init: 1e-9,
            mu_min: 1e-9,
            mu_max: 1e9,
            mu_increase: 10.0,
            mu_decrease: 0.5,
            rho: 0.3,
            beta_nu: 0.5,
            nu_init: 1.0,
            memory: 5,
            armijo_c1: 1e-4,
            tol_grad: 1e-6,
            tol_gap: 1e-8,
            tol_step: 1e-12,
            eps_rank: 1e-8,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), SolverError> {
        let bad = |m: &str| Err(SolverError::InvalidConfig(m.into()));
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return bad("rho must lie in (0, 1)");
        }
        if !(self.beta_nu > 0.0 && self.beta_nu < 1.0) {
            return bad("beta_nu must lie in (0, 1)");
        }
        if self.alphas.is_empty() || self.alphas.windows(2).any(|w| w[1] >= w[0]) || self.alphas[0] > 1.0 || self.alphas.iter().any(|&a| a <= 0.0) {
            return bad("alphas must be strictly decreasing in (0, 1]");
        }
        if !(self.mu_min > 0.0 && self.mu_min <= self.mu_max) || self.memory == 0 {
            return bad("invalid regularization bounds or memory");
        }
        Ok(())
    }
}

/// Merit `φ = cost + ν Σ‖f̄‖₁` and the penalty update
/// `ν⁺ = max(β ν, Δℓ(1) / ((1 − ρ) Σ‖f̄‖₁))` (`β ν` when there are no gaps).
pub fn merit_and_penalty(cost: f64, gap_l1: f64, nu: f64, dl1: f64, rho: f64, beta_nu: f64) -> (f64, f64) {
    let phi = cost + nu * gap_l1;
    let nu_plus = if gap_l1 > 0.0 { (beta_nu * nu).max(dl1 / ((1.0 - rho) * gap_l1)) } else { beta_nu * nu };
    (phi, nu_plus)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iter: usize,
    pub cost: f64,
    pub gap_l1: f64,
    pub dtheta_norm: f64,
    pub alpha: f64,
    pub mu: f64,
    pub nu: f64,
    pub accepted: bool,
    /// Expected cost change `Δℓ(α)` at the tried step.
    pub expected: f64,
    /// Nonmonotone reference merit.
    pub merit_ref: f64,
    /// Merit of the last candidate tried.
    pub merit: f64,
    pub grad_norm: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SolverTrace {
    pub rows: Vec<TraceRow>,
}

impl SolverTrace {
    pub const HEADER: [&'static str; 8] = ["iter", "cost", "gap_l1", "dtheta_norm", "alpha", "mu", "nu", "accepted"];

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(Self::HEADER)?;
        for r in &self.rows {
            w.write_record([
                r.iter.to_string(),
                format!("{:e}", r.cost),
                format!("{:e}", r.gap_l1),
                format!("{:e}", r.dtheta_norm),
                format!("{:e}", r.alpha),
                format!("{:e}", r.mu),
                format!("{:e}", r.nu),
                (r.accepted as u8).to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv is utf-8")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    /// Gradient and gap below tolerance.
    Converged,
    /// Search direction below the step tolerance.
    StepTolerance,
    MaxIterReached,
}

impl SolveStatus {
    pub fn is_converged(&self) -> bool {
        !matches!(self, SolveStatus::MaxIterReached)
    }
}

#[derive(Clone, Debug)]
pub struct SolveOutcome {
    pub iterate: Iterate,
    pub status: SolveStatus,
    /// Iterations that computed a search direction and ran a line search.
    pub iterations: usize,
    pub cost: f64,
    pub gap_l1: f64,
    pub max_gap: f64,
    pub grad_norm: f64,
    pub arrival: Option<ArrivalSolution>,
    pub trace: SolverTrace,
}

/// Gradient of the reduced arrival problem, ignoring discarded parameter directions.
fn arrival_grad_norm(v_x: f64, v_theta: &nalgebra::DVector<f64>, arrival: &ArrivalSolution, q_w: f64) -> f64 {
    let z = &arrival.null_basis;
    let projected = v_theta - z * z.tr_mul(v_theta);
    v_x.max(projected.amax()).max(q_w)
}

/// Minimizes the estimation problem from `init`.
pub fn solve(problem: &ShootingProblem, init: Iterate, config: &SolverConfig) -> Result<SolveOutcome, SolverError> {
    config.validate()?;
    problem.validate_iterate(&init)?;
    let mut it = init;
    if config.rollout == RolloutKind::Single {
        problem.make_feasible(&mut it)?;
    }
    let mut cost = problem.total_cost(&it);
    let mut gaps = problem.gaps(&it)?;
    if !cost.is_finite() {
        return Err(SolverError::NonFiniteData("initial cost".into()));
    }
    let mut mu = config.mu_init;
    let mut nu = config.nu_init;
    let mut memory: VecDeque<(f64, f64)> = VecDeque::from([(cost, gap_l1(&gaps))]);
    let mut trace = SolverTrace::default();
    let mut exp = compute_node_expansions(problem, &it)?;
    let mut last_arrival = None;
    let mut grad_norm = f64::INFINITY;
    let mut iterations = 0;
    let finish = |it: Iterate, status, iterations, cost, gaps: &[nalgebra::DVector<f64>], grad_norm, arrival, trace| SolveOutcome {
        iterate: it,
        status,
        iterations,
        cost,
        gap_l1: gap_l1(gaps),
        max_gap: gap_max(gaps),
        grad_norm,
        arrival,
        trace,
    };

    loop {
        let mut bp = match backward_pass(problem, &exp, mu) {
            Ok(bp) => bp,
            Err(SolverError::NotPositiveDefinite(what)) => {
                debug!("backward pass failed ({what}), mu {mu:e}");
                if iterations >= config.max_iter {
                    break;
                }
                iterations += 1;
                mu = (mu * config.mu_increase).min(config.mu_max);
                continue;
            }
            Err(e) => return Err(e),
        };
        let v = arrival_value(problem, &bp, &it.theta);
        let arrival = solve_arrival(&v, config.arrival, config.eps_rank)?;
        set_feedforward(&mut bp, &arrival.dtheta);
        grad_norm = arrival_grad_norm(v.v_x.amax(), &v.v_theta, &arrival, bp.q_w_norm);
        let max_gap = gap_max(&gaps);
        let dir = linear_direction(&exp, &bp, &arrival);
        if grad_norm < config.tol_grad && max_gap < config.tol_gap {
            info!("converged after {iterations} iterations: cost {cost:e}, grad {grad_norm:e}");
            return Ok(finish(it, SolveStatus::Converged, iterations, cost, &gaps, grad_norm, Some(arrival), trace));
        }
        if dir.max_norm() < config.tol_step && max_gap < config.tol_gap {
            info!("step below tolerance after {iterations} iterations");
            return Ok(finish(it, SolveStatus::StepTolerance, iterations, cost, &gaps, grad_norm, Some(arrival), trace));
        }
        if iterations >= config.max_iter {
            last_arrival = Some(arrival);
            break;
        }
        iterations += 1;

        let model = direct_model(problem, &exp, &dir, &it.theta);
        let cur_gap = gap_l1(&gaps);
        nu = merit_and_penalty(cost, cur_gap, nu, model.eval(1.0), config.rho, config.beta_nu).1;
        let merit_ref = memory.iter().map(|(c, g)| c + nu * g).fold(f64::NEG_INFINITY, f64::max);

        let mut accepted = None;
        let mut tried = (config.alphas[0], f64::NAN, f64::NAN);
        for &alpha in &config.alphas {
            let cand = match config.rollout {
                RolloutKind::Multiple => Ok(rollout_multiple_shooting(problem, &it, &dir, alpha)),
                RolloutKind::Feasibility => rollout_feasibility(problem, &it, &exp, &bp, &arrival, alpha),
                RolloutKind::Single => rollout_single_shooting(problem, &it, &exp, &bp, &arrival, alpha),
            };
            let Ok(cand) = cand else { continue };
            let Ok(cand_gaps) = problem.gaps(&cand) else { continue };
            let cand_cost = problem.total_cost(&cand);
            let phi = cand_cost + nu * gap_l1(&cand_gaps);
            let expected = model.eval(alpha);
            tried = (alpha, expected, phi);
            if phi.is_finite() && phi <= merit_ref + config.armijo_c1 * alpha * expected {
                accepted = Some((alpha, cand, cand_cost, cand_gaps));
                break;
            }
        }
        let dtheta_norm = arrival.dtheta.norm();
        match accepted {
            Some((alpha, cand, cand_cost, cand_gaps)) => {
                let step_exp = compute_node_expansions(problem, &cand);
                let new_exp = match step_exp {
                    Ok(e) => e,
                    Err(SolverError::NonFiniteData(_)) | Err(SolverError::Dynamics(_)) => {
                        mu = (mu * config.mu_increase).min(config.mu_max);
                        trace.rows.push(row(iterations, cost, cur_gap, dtheta_norm, alpha, mu, nu, false, tried, merit_ref, grad_norm));
                        continue;
                    }
                    Err(e) => return Err(e),
                };
                it = cand;
                cost = cand_cost;
                gaps = cand_gaps;
                exp = new_exp;
                memory.push_back((cost, gap_l1(&gaps)));
                while memory.len() > config.memory {
                    memory.pop_front();
                }
                if alpha == config.alphas[0] {
                    mu = (mu * config.mu_decrease).max(config.mu_min);
                }
                debug!("iter {iterations}: cost {cost:e} gap {:e} alpha {alpha} mu {mu:e}", gap_l1(&gaps));
                trace.rows.push(row(iterations, cost, gap_l1(&gaps), dtheta_norm, alpha, mu, nu, true, tried, merit_ref, grad_norm));
            }
            None => {
                mu = (mu * config.mu_increase).min(config.mu_max);
                debug!("iter {iterations}: line search failed, mu {mu:e}");
                trace.rows.push(row(iterations, cost, cur_gap, dtheta_norm, tried.0, mu, nu, false, tried, merit_ref, grad_norm));
            }
        }
    }
    info!("maximum iterations reached: cost {cost:e}, grad {grad_norm:e}");
    Ok(finish(it, SolveStatus::MaxIterReached, iterations, cost, &gaps, grad_norm, last_arrival, trace))
}

#[allow(clippy::too_many_arguments)]
fn row(
    iter: usize,
    cost: f64,
    gap_l1: f64,
    dtheta_norm: f64,
    alpha: f64,
    mu: f64,
    nu: f64,
    accepted: bool,
    tried: (f64, f64, f64),
    merit_ref: f64,
    grad_norm: f64,
) -> TraceRow {
    TraceRow { iter, cost, gap_l1, dtheta_norm, alpha, mu, nu, accepted, expected: tried.1, merit_ref, merit: tried.2, grad_norm }
}
