//! Scenario files: robot, controls, contact phases, sensors and noise.
//!
//! ```json
//! {
//!   "name": "lift",
//!   "model": "../models/lift_pendulum.json",
//!   "horizon": 200, "dt": 0.01,
//!   "controls": { "sines": [ { "dof": 0, "amplitude": 4.0, "frequency": 0.7 } ] },
//!   "initial_state": [0, 0.3, 0, 0],
//!   "phases": [ { "start": 20, "end": 80, "contacts": ["tip"] } ],
//!   "observations": [ { "kind": "full-state", "cov": 1e-4 } ],
//!   "noise": { "observation": 0, "process": 0, "arrival": 0 },
//!   "payload": { "body": "link", "inertia": { "mass": 0.5, "com": [0.6, 0, 0], "inertia": [1e-3, 0, 1e-3, 0, 0, 1e-3] } },
//!   "estimate": ["link"],
//!   "theta_init": { "scale": 1.7 },
//!   "costs": { "process": { "q": 1e-8, "v": 1e-6 }, "arrival": { "q": 1e-4, "v": 1e-2 } }
//! }
//! ```
//!
//! `model` is a path relative to the scenario file or an inline model object.
//! Controls are generalized forces, one row of `nv` values per step, given as
//! `{"inline": [[...], ...]}`, `{"csv": "path"}` (no header), `{"sines": [...]}`
//! (`offset + amplitude · sin(2π · frequency · t + phase)` on one dof) or
//! `"zero"`. Phases are half-open step ranges `[start, end)`; steps outside
//! every phase have no contacts. Noise levels scale the configured covariances
//! when sampling synthetic data.

use super::observation::{ObservationModel, ObservationSpec};
use super::ProblemError;
use crate::inertia::{unflatten_symmetric, InertialVector};
use crate::rbd::{ContactSet, RobotModel};
use crate::solver::NodeKind;
use nalgebra::{DVector, Vector3};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ModelRef {
    Path(String),
    Inline(serde_json::Value),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SineSpec {
    pub dof: usize,
    pub amplitude: f64,
    pub frequency: f64,
    #[serde(default)]
    pub phase: f64,
    #[serde(default)]
    pub offset: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ControlSpec {
    Zero,
    Inline(Vec<Vec<f64>>),
    Csv(String),
    Sines(Vec<SineSpec>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseSpec {
    pub start: usize,
    pub end: usize,
    pub contacts: Vec<String>,
}

/// Noise levels as multiples of the configured standard deviations.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseSpec {
    pub observation: f64,
    pub process: f64,
    pub arrival: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InertiaSpec {
    Vector([f64; 10]),
    /// Mass, center of mass and the rotational inertia about it flattened as
    /// `(xx, xy, yy, xz, yz, zz)`.
    Barycentric { mass: f64, com: [f64; 3], inertia: [f64; 6] },
}

impl InertiaSpec {
    pub fn to_inertial_vector(&self) -> InertialVector {
        match self {
            InertiaSpec::Vector(v) => InertialVector::from(*v),
            InertiaSpec::Barycentric { mass, com, inertia } => {
                InertialVector::from_barycentric(*mass, Vector3::from(*com), &unflatten_symmetric(inertia))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PayloadSpec {
    pub body: String,
    pub inertia: InertiaSpec,
}

/// Initial inertial parameters of the estimated bodies.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ThetaInit {
    #[default]
    Exact,
    /// `ϑ₀ = s · ϑ_true` for every estimated body.
    Scale(f64),
    /// One inertial vector per estimated body.
    Explicit(Vec<[f64; 10]>),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateVariance {
    pub q: f64,
    pub v: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamPriorSpec {
    /// Standard deviation in chart coordinates around `θ₀`.
    pub sigma: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CostSpec {
    /// Diagonal of `Ω` (variance of the uncertainty on positions and velocities).
    pub process: StateVariance,
    /// Diagonal of `Σ_x₀`.
    pub arrival: StateVariance,
    pub param_prior: Option<ParamPriorSpec>,
}

impl Default for CostSpec {
    fn default() -> Self {
        CostSpec {
            process: StateVariance { q: 1e-6, v: 1e-4 },
            arrival: StateVariance { q: 1e-4, v: 1e-2 },
            param_prior: None,
        }
    }
}

impl StateVariance {
    pub fn diagonal(&self, nv: usize) -> Result<DVector<f64>, ProblemError> {
        if !(self.q > 0.0 && self.v > 0.0 && self.q.is_finite() && self.v.is_finite()) {
            return Err(ProblemError::InvalidScenario("state variances must be positive and finite".into()));
        }
        Ok(DVector::from_fn(2 * nv, |i, _| if i < nv { self.q } else { self.v }))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(default)]
    pub name: String,
    pub model: ModelRef,
    pub horizon: usize,
    pub dt: f64,
    pub controls: ControlSpec,
    #[serde(default)]
    pub initial_state: Option<Vec<f64>>,
    #[serde(default)]
    pub phases: Vec<PhaseSpec>,
    pub observations: Vec<ObservationSpec>,
    #[serde(default)]
    pub noise: NoiseSpec,
    #[serde(default)]
    pub payload: Option<PayloadSpec>,
    pub estimate: Vec<String>,
    #[serde(default)]
    pub theta_init: ThetaInit,
    #[serde(default)]
    pub costs: CostSpec,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Phase {
    pub start: usize,
    pub end: usize,
    pub contacts: ContactSet,
}

/// One transition of the estimation horizon.
#[derive(Clone, Debug, PartialEq)]
pub struct NodeSpec {
    pub kind: NodeKind,
    pub contacts: ContactSet,
    /// Control step of a running node.
    pub step: usize,
    /// Observation sample attached to the node's input state.
    pub sample: Option<usize>,
}

/// A resolved scenario.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub name: String,
    /// Model known to the estimator (without payload).
    pub model: RobotModel,
    /// Model generating the data (with payload).
    pub true_model: RobotModel,
    pub horizon: usize,
    pub dt: f64,
    pub controls: Vec<DVector<f64>>,
    pub initial_state: DVector<f64>,
    pub phases: Vec<Phase>,
    pub observations: Vec<ObservationModel>,
    pub noise: NoiseSpec,
    pub estimated: Vec<usize>,
    pub theta_init: ThetaInit,
    pub costs: CostSpec,
}

fn body_index(model: &RobotModel, name: &str) -> Result<usize, ProblemError> {
    model
        .bodies()
        .iter()
        .position(|b| b.name == name)
        .ok_or_else(|| ProblemError::InvalidScenario(format!("unknown body {name:?}")))
}

fn read_csv_controls(path: &Path) -> Result<Vec<Vec<f64>>, ProblemError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| ProblemError::Io(format!("{}: {e}", path.display())))?;
    let mut rows = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| ProblemError::Parse(format!("{}: {e}", path.display())))?;
        let row = rec
            .iter()
            .map(|s| s.parse::<f64>().map_err(|e| ProblemError::Parse(format!("{}: row {}: {s:?}: {e}", path.display(), i + 1))))
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(row);
    }
    Ok(rows)
}

impl Scenario {
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, ProblemError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| ProblemError::Io(format!("{}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_json_str(&text, &base).map_err(|e| match e {
            ProblemError::Parse(m) => ProblemError::Parse(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// Parses a scenario; relative paths resolve against `base`.
    pub fn from_json_str(text: &str, base: &Path) -> Result<Self, ProblemError> {
        let file: ScenarioFile = serde_json::from_str(text)
            .map_err(|e| ProblemError::Parse(format!("line {}, column {}: {e}", e.line(), e.column())))?;
        Self::from_spec(file, base)
    }

    pub fn from_spec(file: ScenarioFile, base: &Path) -> Result<Self, ProblemError> {
        let resolve = |p: &str| -> PathBuf { base.join(p) };
        let model = match &file.model {
            ModelRef::Path(p) => RobotModel::from_file(resolve(p))?,
            ModelRef::Inline(v) => RobotModel::from_json_str(&v.to_string())?,
        };
        let n = model.nv();
        let horizon = file.horizon;
        if horizon == 0 {
            return Err(ProblemError::InvalidScenario("horizon must be positive".into()));
        }
        if !(file.dt > 0.0 && file.dt.is_finite()) {
            return Err(ProblemError::InvalidScenario(format!("time step must be positive, got {}", file.dt)));
        }
        let rows = match &file.controls {
            ControlSpec::Zero => vec![vec![0.0; n]; horizon],
            ControlSpec::Inline(rows) => rows.clone(),
            ControlSpec::Csv(p) => read_csv_controls(&resolve(p))?,
            ControlSpec::Sines(sines) => {
                let mut rows = vec![vec![0.0; n]; horizon];
                for s in sines {
                    if s.dof >= n {
                        return Err(ProblemError::InvalidScenario(format!("control dof {} out of range (nv = {n})", s.dof)));
                    }
                    for (k, row) in rows.iter_mut().enumerate() {
                        let t = k as f64 * file.dt;
                        row[s.dof] += s.offset + s.amplitude * (2.0 * std::f64::consts::PI * s.frequency * t + s.phase).sin();
                    }
                }
                rows
            }
        };
        if rows.len() != horizon {
            return Err(ProblemError::InconsistentSchedule(format!("{} control rows for horizon {horizon}", rows.len())));
        }
        let mut controls = Vec::with_capacity(horizon);
        for (k, r) in rows.iter().enumerate() {
            if r.len() != n {
                return Err(ProblemError::InconsistentSchedule(format!("control row {k} has {} entries, expected {n}", r.len())));
            }
            if !r.iter().all(|x| x.is_finite()) {
                return Err(ProblemError::InvalidScenario(format!("control row {k} is not finite")));
            }
            controls.push(DVector::from_column_slice(r));
        }
        let initial_state = match &file.initial_state {
            None => DVector::zeros(2 * n),
            Some(x) if x.len() == 2 * n => DVector::from_column_slice(x),
            Some(x) => return Err(ProblemError::InvalidScenario(format!("initial state has {} entries, expected {}", x.len(), 2 * n))),
        };
        let mut phases: Vec<Phase> = Vec::with_capacity(file.phases.len());
        for p in &file.phases {
            if p.start >= p.end || p.end > horizon {
                return Err(ProblemError::InconsistentSchedule(format!("phase [{}, {}) outside horizon {horizon}", p.start, p.end)));
            }
            if let Some(prev) = phases.last() {
                if p.start < prev.end {
                    return Err(ProblemError::InconsistentSchedule(format!("phase starting at {} overlaps the previous one", p.start)));
                }
            }
            let mut active = p
                .contacts
                .iter()
                .map(|c| model.contact_index(c).ok_or_else(|| ProblemError::InvalidScenario(format!("unknown contact {c:?}"))))
                .collect::<Result<Vec<_>, _>>()?;
            active.sort_unstable();
            active.dedup();
            phases.push(Phase { start: p.start, end: p.end, contacts: ContactSet::new(active) });
        }
        let observations = file.observations.iter().map(|o| ObservationModel::new(&model, o)).collect::<Result<Vec<_>, _>>()?;
        if observations.is_empty() {
            return Err(ProblemError::InvalidScenario("at least one observation stream is required".into()));
        }
        let mut estimated = file.estimate.iter().map(|b| body_index(&model, b)).collect::<Result<Vec<_>, _>>()?;
        estimated.sort_unstable();
        estimated.dedup();
        if let ThetaInit::Explicit(v) = &file.theta_init {
            if v.len() != estimated.len() {
                return Err(ProblemError::InvalidScenario(format!(
                    "explicit θ_init has {} bodies, {} are estimated",
                    v.len(),
                    estimated.len()
                )));
            }
        }
        let mut true_model = model.clone();
        if let Some(p) = &file.payload {
            let b = body_index(&model, &p.body)?;
            let added = p.inertia.to_inertial_vector();
            if !added.is_finite() {
                return Err(ProblemError::InvalidScenario("payload inertia is not finite".into()));
            }
            true_model.set_body_inertia(b, *model.body_inertia(b) + added);
        }
        file.costs.process.diagonal(n)?;
        file.costs.arrival.diagonal(n)?;
        let name = if file.name.is_empty() { model.name.clone() } else { file.name.clone() };
        Ok(Scenario {
            name,
            model,
            true_model,
            horizon,
            dt: file.dt,
            controls,
            initial_state,
            phases,
            observations,
            noise: file.noise,
            estimated,
            theta_init: file.theta_init,
            costs: file.costs,
        })
    }

    pub fn nx(&self) -> usize {
        2 * self.model.nv()
    }

    /// Length of one observation sample (all streams stacked).
    pub fn observation_dim(&self) -> usize {
        self.observations.iter().map(|o| o.dim()).sum()
    }

    pub fn contacts_at(&self, step: usize) -> ContactSet {
        self.phases
            .iter()
            .find(|p| p.start <= step && step < p.end)
            .map(|p| p.contacts.clone())
            .unwrap_or_default()
    }

    /// Transitions of the horizon. A reset node precedes the first step of
    /// every phase that gains a contact; the observation of that instant is
    /// attached to the pre-impact state.
    pub fn schedule(&self) -> Vec<NodeSpec> {
        let mut nodes = Vec::with_capacity(self.horizon + self.phases.len());
        let mut prev = self.contacts_at(0);
        for k in 0..self.horizon {
            let c = self.contacts_at(k);
            let gained = k > 0 && c.active.iter().any(|i| !prev.active.contains(i));
            if gained {
                nodes.push(NodeSpec { kind: NodeKind::Reset, contacts: c.clone(), step: k, sample: Some(k) });
            }
            nodes.push(NodeSpec { kind: NodeKind::Running, contacts: c.clone(), step: k, sample: (!gained).then_some(k) });
            prev = c;
        }
        nodes
    }
}
