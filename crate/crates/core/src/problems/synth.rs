//! Synthetic measurements from a scenario's true model.

use super::scenario::{NodeSpec, Scenario};
use super::ProblemError;
use crate::inertia::InertialVector;
use crate::rbd::integrate::{integrate_step, reset_step};
use crate::rbd::state_plus;
use crate::solver::NodeKind;
use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Observations and ground truth of one synthetic run.
#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticData {
    pub scenario: String,
    pub seed: u64,
    /// Stacked observation streams for samples `0..=N`.
    pub observations: Vec<DVector<f64>>,
    /// True state at every node of the schedule (`nodes + 1` entries).
    pub trajectory: Vec<DVector<f64>>,
    /// True uncertainties (process noise) at every node.
    pub uncertainties: Vec<DVector<f64>>,
    pub arrival_mean: DVector<f64>,
    /// True inertial parameters of the estimated bodies.
    pub theta_true: Vec<InertialVector>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DataFile {
    scenario: String,
    seed: u64,
    observations: Vec<Vec<f64>>,
    trajectory: Vec<Vec<f64>>,
    uncertainties: Vec<Vec<f64>>,
    arrival_mean: Vec<f64>,
    theta_true: Vec<InertialVector>,
}

fn rows(v: &[DVector<f64>]) -> Vec<Vec<f64>> {
    v.iter().map(|x| x.as_slice().to_vec()).collect()
}

fn vectors(v: Vec<Vec<f64>>) -> Vec<DVector<f64>> {
    v.into_iter().map(DVector::from_vec).collect()
}

impl SyntheticData {
    pub fn to_json_string(&self) -> String {
        let file = DataFile {
            scenario: self.scenario.clone(),
            seed: self.seed,
            observations: rows(&self.observations),
            trajectory: rows(&self.trajectory),
            uncertainties: rows(&self.uncertainties),
            arrival_mean: self.arrival_mean.as_slice().to_vec(),
            theta_true: self.theta_true.clone(),
        };
        serde_json::to_string_pretty(&file).expect("data serializes")
    }

    pub fn from_json_str(text: &str) -> Result<Self, ProblemError> {
        let f: DataFile = serde_json::from_str(text)
            .map_err(|e| ProblemError::Parse(format!("line {}, column {}: {e}", e.line(), e.column())))?;
        Ok(SyntheticData {
            scenario: f.scenario,
            seed: f.seed,
            observations: vectors(f.observations),
            trajectory: vectors(f.trajectory),
            uncertainties: vectors(f.uncertainties),
            arrival_mean: DVector::from_vec(f.arrival_mean),
            theta_true: f.theta_true,
        })
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, ProblemError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| ProblemError::Io(format!("{}: {e}", path.display())))?;
        Self::from_json_str(&text).map_err(|e| match e {
            ProblemError::Parse(m) => ProblemError::Parse(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// Checks the data against the scenario's dimensions and schedule.
    pub fn check(&self, scenario: &Scenario) -> Result<(), ProblemError> {
        let nx = scenario.nx();
        let nodes = scenario.schedule().len();
        let bad = |m: String| Err(ProblemError::InconsistentSchedule(m));
        if self.observations.len() != scenario.horizon + 1 {
            return bad(format!("{} observation samples for horizon {}", self.observations.len(), scenario.horizon));
        }
        if let Some(k) = self.observations.iter().position(|z| z.len() != scenario.observation_dim()) {
            return bad(format!("observation sample {k} has the wrong length"));
        }
        if self.trajectory.len() != nodes + 1 || self.trajectory.iter().any(|x| x.len() != nx) {
            return bad("trajectory does not match the schedule".into());
        }
        if self.arrival_mean.len() != nx {
            return bad("arrival mean has the wrong length".into());
        }
        if self.theta_true.len() != scenario.estimated.len() {
            return bad("ground-truth parameters do not match the estimated bodies".into());
        }
        Ok(())
    }
}

fn gaussian(rng: &mut ChaCha8Rng, std: &DVector<f64>) -> DVector<f64> {
    std.map(|s| {
        let e: f64 = StandardNormal.sample(rng);
        s * e
    })
}

/// Stacked `h(x)` of every stream, with wrapped channels brought to `(−π, π]`.
pub(crate) fn observe(scenario: &Scenario, x: &DVector<f64>) -> DVector<f64> {
    let parts: Vec<f64> = scenario.observations.iter().flat_map(|o| o.predict(x).iter().copied().collect::<Vec<_>>()).collect();
    DVector::from_vec(parts)
}

fn observation_noise(scenario: &Scenario, rng: &mut ChaCha8Rng) -> DVector<f64> {
    let s = scenario.noise.observation;
    let parts: Vec<f64> = scenario
        .observations
        .iter()
        .flat_map(|o| gaussian(rng, &o.covariance.map(|c| s * c.sqrt())).iter().copied().collect::<Vec<_>>())
        .collect();
    DVector::from_vec(parts)
}

fn wrap_observation(scenario: &Scenario, z: &mut DVector<f64>) {
    let mut i = 0;
    for o in &scenario.observations {
        for &w in &o.wrapped {
            if w {
                z[i] = crate::rbd::wrap_angle(z[i]);
            }
            i += 1;
        }
    }
}

/// Rolls the true model through the schedule and samples observations.
///
/// When the first step has contacts, the initial velocity is first projected
/// onto the contact constraints by an impulse. Noise is only drawn for
/// nonzero noise levels, so noiseless data does not depend on the seed.
pub fn synthesize_data(scenario: &Scenario, seed: u64) -> Result<SyntheticData, ProblemError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let model = &scenario.true_model;
    let n = model.nv();
    let schedule: Vec<NodeSpec> = scenario.schedule();
    let mut x0 = scenario.initial_state.clone();
    let first = scenario.contacts_at(0);
    if !first.is_empty() {
        x0 = reset_step(model, &x0, &first)?;
    }
    let process_std = scenario.costs.process.diagonal(n)?.map(|v| scenario.noise.process * v.sqrt());
    let arrival_std = scenario.costs.arrival.diagonal(n)?.map(|v| scenario.noise.arrival * v.sqrt());

    let mut trajectory = Vec::with_capacity(schedule.len() + 1);
    let mut uncertainties = Vec::with_capacity(schedule.len());
    trajectory.push(x0.clone());
    let mut x = x0.clone();
    for node in &schedule {
        let next = match node.kind {
            NodeKind::Running => {
                let w = if scenario.noise.process > 0.0 { gaussian(&mut rng, &process_std) } else { DVector::zeros(2 * n) };
                let next = integrate_step(model, &x, &w, &scenario.controls[node.step], &node.contacts, scenario.dt)?;
                uncertainties.push(w);
                next
            }
            NodeKind::Reset => {
                uncertainties.push(DVector::zeros(0));
                reset_step(model, &x, &node.contacts)?
            }
        };
        if !next.iter().all(|v| v.is_finite()) {
            return Err(ProblemError::Rbd(crate::rbd::RbdError::NonFiniteData(format!("simulated state at step {}", node.step))));
        }
        trajectory.push(next.clone());
        x = next;
    }

    let mut sample_state = Vec::with_capacity(scenario.horizon + 1);
    for (j, node) in schedule.iter().enumerate() {
        if node.sample.is_some() {
            sample_state.push(j);
        }
    }
    sample_state.push(schedule.len());
    let observations = sample_state
        .iter()
        .map(|&j| {
            let mut z = observe(scenario, &trajectory[j]);
            if scenario.noise.observation > 0.0 {
                z += observation_noise(scenario, &mut rng);
            }
            wrap_observation(scenario, &mut z);
            z
        })
        .collect();
    let arrival_mean = if scenario.noise.arrival > 0.0 {
        let e = gaussian(&mut rng, &arrival_std);
        state_plus(&scenario.model, &x0, &e)
    } else {
        x0
    };
    let theta_true = scenario.estimated.iter().map(|&b| *model.body_inertia(b)).collect();
    Ok(SyntheticData { scenario: scenario.name.clone(), seed, observations, trajectory, uncertainties, arrival_mean, theta_true })
}
