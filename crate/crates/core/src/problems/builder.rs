//! Assembly of shooting problems from scenarios and measurements.

use super::scenario::{NodeSpec, Scenario, ThetaInit};
use super::synth::SyntheticData;
use super::ProblemError;
use crate::inertia::{InertialVector, ParamChart, Vector10};
use crate::rbd::derivatives::ParamBlock;
use crate::rbd::integrate::{integrate_step, integrate_step_jacobians, reset_step, reset_step_jacobians};
use crate::rbd::{state_minus, state_plus, ContactSet, RobotModel};
use crate::solver::{
    CostTerm, GaussianPrior, Iterate, Linearization, Node, NodeKind, NoiseResidual, ShootingProblem, SolverError, StateSpace,
    Transition,
};
use nalgebra::{DMatrix, DVector};
use std::sync::Arc;

/// `(q, v)` states with wrapped planar pitch angles.
#[derive(Clone, Debug)]
pub struct RobotStateSpace {
    model: Arc<RobotModel>,
}

impl RobotStateSpace {
    pub fn new(model: Arc<RobotModel>) -> Self {
        RobotStateSpace { model }
    }
}

impl StateSpace for RobotStateSpace {
    fn plus(&self, x: &DVector<f64>, dx: &DVector<f64>) -> DVector<f64> {
        state_plus(&self.model, x, dx)
    }

    fn minus(&self, x1: &DVector<f64>, x0: &DVector<f64>) -> DVector<f64> {
        state_minus(&self.model, x1, x0)
    }
}

/// Maps chart coordinates of the estimated bodies onto a model.
#[derive(Clone, Debug)]
pub struct ParamMap {
    pub chart: ParamChart,
    pub estimated: Vec<usize>,
}

impl ParamMap {
    pub fn ntheta(&self) -> usize {
        10 * self.estimated.len()
    }

    pub fn coords(&self, theta: &DVector<f64>, i: usize) -> Vector10 {
        Vector10::from_iterator(theta.rows(10 * i, 10).iter().copied())
    }

    /// Physical parameters of every estimated body.
    pub fn physical(&self, theta: &DVector<f64>) -> Vec<InertialVector> {
        (0..self.estimated.len()).map(|i| self.chart.to_theta(&self.coords(theta, i))).collect()
    }

    /// Chart coordinates of physical parameters.
    pub fn chart_coords(&self, params: &[InertialVector]) -> Result<DVector<f64>, ProblemError> {
        let mut theta = DVector::zeros(self.ntheta());
        for (i, p) in params.iter().enumerate() {
            theta.rows_mut(10 * i, 10).copy_from(&self.chart.from_theta(p)?);
        }
        Ok(theta)
    }

    pub fn apply(&self, model: &RobotModel, theta: &DVector<f64>) -> Result<RobotModel, SolverError> {
        if theta.len() != self.ntheta() {
            return Err(SolverError::DimensionMismatch(format!("θ has length {}, expected {}", theta.len(), self.ntheta())));
        }
        if !theta.iter().all(|t| t.is_finite()) {
            return Err(SolverError::NonFiniteData("θ".into()));
        }
        let mut m = model.clone();
        for (i, p) in self.physical(theta).into_iter().enumerate() {
            m.set_body_inertia(self.estimated[i], p);
        }
        Ok(m)
    }

    pub fn blocks(&self, theta: &DVector<f64>) -> Vec<ParamBlock> {
        self.estimated
            .iter()
            .enumerate()
            .map(|(i, &body)| ParamBlock { body, jacobian: self.chart.jacobian(&self.coords(theta, i)) })
            .collect()
    }
}

#[derive(Clone, Debug)]
enum Step {
    Integrate { tau: DVector<f64>, dt: f64 },
    Reset,
}

/// One robot transition: a semi-implicit Euler step under a contact set, or
/// an impact reset.
#[derive(Clone, Debug)]
pub struct RobotTransition {
    model: Arc<RobotModel>,
    params: Arc<ParamMap>,
    contacts: ContactSet,
    step: Step,
}

impl RobotTransition {
    pub fn integrate(model: Arc<RobotModel>, params: Arc<ParamMap>, contacts: ContactSet, tau: DVector<f64>, dt: f64) -> Self {
        RobotTransition { model, params, contacts, step: Step::Integrate { tau, dt } }
    }

    pub fn reset(model: Arc<RobotModel>, params: Arc<ParamMap>, contacts: ContactSet) -> Self {
        RobotTransition { model, params, contacts, step: Step::Reset }
    }
}

impl Transition for RobotTransition {
    fn nw(&self) -> usize {
        match self.step {
            Step::Integrate { .. } => 2 * self.model.nv(),
            Step::Reset => 0,
        }
    }

    fn next(&self, x: &DVector<f64>, w: &DVector<f64>, theta: &DVector<f64>) -> Result<DVector<f64>, SolverError> {
        let m = self.params.apply(&self.model, theta)?;
        Ok(match &self.step {
            Step::Integrate { tau, dt } => integrate_step(&m, x, w, tau, &self.contacts, *dt)?,
            Step::Reset => reset_step(&m, x, &self.contacts)?,
        })
    }

    fn linearize(&self, x: &DVector<f64>, w: &DVector<f64>, theta: &DVector<f64>) -> Result<Linearization, SolverError> {
        let m = self.params.apply(&self.model, theta)?;
        let blocks = self.params.blocks(theta);
        let j = match &self.step {
            Step::Integrate { tau, dt } => integrate_step_jacobians(&m, x, w, tau, &self.contacts, *dt, &blocks)?,
            Step::Reset => reset_step_jacobians(&m, x, &self.contacts, &blocks)?,
        };
        let nw = self.nw();
        Ok(Linearization { next: j.next, f_x: j.f_x, f_w: DMatrix::identity(x.len(), nw), f_theta: j.f_theta })
    }
}

/// A shooting problem together with its parameter map and initial guess.
#[derive(Clone)]
pub struct EstimationProblem {
    pub problem: ShootingProblem,
    /// Initial parameters in chart coordinates.
    pub theta0: DVector<f64>,
    pub params: Arc<ParamMap>,
    pub schedule: Vec<NodeSpec>,
    pub model: Arc<RobotModel>,
}

impl EstimationProblem {
    pub fn chart(&self) -> ParamChart {
        self.params.chart
    }

    /// Iterate on the given states with zero uncertainties and `θ₀`.
    pub fn iterate_from_states(&self, xs: Vec<DVector<f64>>) -> Iterate {
        let ws = self.problem.nodes.iter().map(|n| DVector::zeros(n.nw())).collect();
        Iterate { xs, ws, theta: self.theta0.clone() }
    }
}

/// Initial physical parameters of the estimated bodies under `policy`.
pub fn initial_parameters(policy: &ThetaInit, truth: &[InertialVector]) -> Result<Vec<InertialVector>, ProblemError> {
    match policy {
        ThetaInit::Exact => Ok(truth.to_vec()),
        ThetaInit::Scale(s) if *s > 0.0 && s.is_finite() => Ok(truth.iter().map(|t| *t * *s).collect()),
        ThetaInit::Scale(s) => Err(ProblemError::InvalidScenario(format!("θ scale must be positive, got {s}"))),
        ThetaInit::Explicit(v) if v.len() == truth.len() => Ok(v.iter().map(|a| InertialVector::from(*a)).collect()),
        ThetaInit::Explicit(v) => Err(ProblemError::InvalidScenario(format!("{} explicit bodies for {} estimated", v.len(), truth.len()))),
    }
}

/// States read off the measurements: observed coordinates take their
/// measured values, unobserved positions are dead-reckoned from the current
/// velocity and everything else is held from the arrival mean.
pub fn measured_states(scenario: &Scenario, data: &SyntheticData) -> Vec<DVector<f64>> {
    let n = scenario.model.nv();
    let schedule = scenario.schedule();
    let wrapped = scenario.model.wrapped_coordinates();
    let mut observed = vec![false; 2 * n];
    for o in &scenario.observations {
        for &r in &o.rows {
            observed[r] = true;
        }
    }
    let fill = |x: &mut DVector<f64>, k: usize| {
        let z = &data.observations[k];
        for (i, &r) in scenario.observations.iter().flat_map(|o| o.rows.iter()).enumerate() {
            x[r] = z[i];
        }
    };
    let sample_at = |j: usize| schedule.get(j).map_or(Some(scenario.horizon), |s| s.sample);
    let mut x = data.arrival_mean.clone();
    if let Some(k) = sample_at(0) {
        fill(&mut x, k);
    }
    let mut xs = Vec::with_capacity(schedule.len() + 1);
    xs.push(x.clone());
    for (j, node) in schedule.iter().enumerate() {
        if node.kind == NodeKind::Running {
            for i in (0..n).filter(|&i| !observed[i]) {
                x[i] += scenario.dt * x[n + i];
                if wrapped[i] {
                    x[i] = crate::rbd::wrap_angle(x[i]);
                }
            }
        }
        if let Some(k) = sample_at(j + 1) {
            fill(&mut x, k);
        }
        xs.push(x.clone());
    }
    xs
}

/// Builds the estimation problem of `scenario` on measurements `data`.
///
/// Running nodes carry the process-noise cost and the observation of their
/// input state; reset nodes carry only the observation. The estimator uses the
/// scenario's nominal model, with the estimated bodies' inertias taken from θ.
pub fn build_problem(
    scenario: &Scenario,
    data: &SyntheticData,
    chart: ParamChart,
    theta_init: &ThetaInit,
) -> Result<EstimationProblem, ProblemError> {
    data.check(scenario)?;
    let n = scenario.model.nv();
    let nx = 2 * n;
    let model = Arc::new(scenario.model.clone());
    let params = Arc::new(ParamMap { chart, estimated: scenario.estimated.clone() });
    let ntheta = params.ntheta();
    let init = initial_parameters(theta_init, &data.theta_true)?;
    let theta0 = params.chart_coords(&init)?;

    let process_weight = DMatrix::from_diagonal(&scenario.costs.process.diagonal(n)?.map(|v| 1.0 / v));
    let observation_terms = |sample: usize| -> Vec<CostTerm> {
        let z = &data.observations[sample];
        let mut offset = 0;
        scenario
            .observations
            .iter()
            .map(|o| {
                let zk = z.rows(offset, o.dim()).into_owned();
                offset += o.dim();
                CostTerm::new(Arc::new(o.bind(zk, nx, ntheta)), o.weight())
            })
            .collect()
    };

    let schedule = scenario.schedule();
    let mut nodes = Vec::with_capacity(schedule.len());
    for spec in &schedule {
        let mut costs = spec.sample.map(observation_terms).unwrap_or_default();
        let dynamics: Arc<dyn Transition> = match spec.kind {
            NodeKind::Running => {
                costs.push(CostTerm::new(Arc::new(NoiseResidual { nx, nw: nx, ntheta }), process_weight.clone()));
                Arc::new(RobotTransition::integrate(
                    model.clone(),
                    params.clone(),
                    spec.contacts.clone(),
                    scenario.controls[spec.step].clone(),
                    scenario.dt,
                ))
            }
            NodeKind::Reset => Arc::new(RobotTransition::reset(model.clone(), params.clone(), spec.contacts.clone())),
        };
        nodes.push(Node { kind: spec.kind, dynamics, costs });
    }
    let terminal = observation_terms(scenario.horizon);
    let arrival_cov = DMatrix::from_diagonal(&scenario.costs.arrival.diagonal(n)?);
    let arrival = GaussianPrior::from_covariance(data.arrival_mean.clone(), &arrival_cov)?;
    let param_prior = match scenario.costs.param_prior {
        Some(p) if p.sigma > 0.0 && p.sigma.is_finite() => Some(GaussianPrior::isotropic(theta0.clone(), p.sigma)),
        Some(p) => return Err(ProblemError::InvalidScenario(format!("parameter prior σ must be positive, got {}", p.sigma))),
        None => None,
    };
    let problem = ShootingProblem {
        nx,
        ntheta,
        nodes,
        terminal,
        arrival,
        param_prior,
        space: Arc::new(RobotStateSpace::new(model.clone())),
    };
    Ok(EstimationProblem { problem, theta0, params, schedule, model })
}
