//! Library side of the `parest` subcommands. The binary only parses flags.

use super::{run_suite, Suite};
use crate::inertia::{InertialVector, ParamChart, Vector10};
use crate::problems::{build_problem, measured_states, score_estimate, synthesize_data, Estimate, GroundTruth, Metrics, ProblemError, Scenario, SyntheticData};
use crate::rbd::derivatives::{contact_param_derivative, fd_param_derivative, impulse_param_derivative, ParamBlock};
use crate::rbd::{contact_dynamics, impulse_dynamics, inverse_dynamics, joint_torque_regressor, ContactSet, RbdError, RobotModel};
use crate::solver::{solve, ArrivalMethod, RolloutKind, SolveStatus, SolverConfig, SolverError};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::path::{Path, PathBuf};

/// Failure of a command, carrying its exit code class.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CommandError {
    /// Bad flags, unreadable or malformed input. Exit code 1.
    #[error("{0}")]
    Usage(String),
    /// Non-finite data, singular systems and other numerical failures. Exit code 2.
    #[error("{0}")]
    Numerical(String),
    /// The solver stopped without converging. Exit code 3.
    #[error("{0}")]
    Convergence(String),
}

impl CommandError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CommandError::Usage(_) => 1,
            CommandError::Numerical(_) => 2,
            CommandError::Convergence(_) => 3,
        }
    }
}

impl From<SolverError> for CommandError {
    fn from(e: SolverError) -> Self {
        match e {
            SolverError::InvalidConfig(_) | SolverError::DimensionMismatch(_) => CommandError::Usage(e.to_string()),
            other => CommandError::Numerical(other.to_string()),
        }
    }
}

impl From<RbdError> for CommandError {
    fn from(e: RbdError) -> Self {
        match e {
            RbdError::Parse(_) | RbdError::Io(_) | RbdError::InvalidModel(_) | RbdError::DimensionMismatch(_) => {
                CommandError::Usage(e.to_string())
            }
            other => CommandError::Numerical(other.to_string()),
        }
    }
}

impl From<ProblemError> for CommandError {
    fn from(e: ProblemError) -> Self {
        match e {
            ProblemError::Rbd(r) => r.into(),
            ProblemError::Solver(s) => s.into(),
            ProblemError::Inertia(crate::inertia::InertiaError::NotPositiveDefinite) => CommandError::Numerical(e.to_string()),
            other => CommandError::Usage(other.to_string()),
        }
    }
}

fn io_error(path: &Path, e: std::io::Error) -> CommandError {
    CommandError::Usage(format!("{}: {e}", path.display()))
}

fn write_file(path: &Path, contents: &str) -> Result<(), CommandError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
    }
    std::fs::write(path, contents).map_err(|e| io_error(path, e))
}

/// Simulates a scenario and writes observations plus ground truth to `out`.
pub fn simulate(scenario: &Path, out: &Path, seed: u64) -> Result<SyntheticData, CommandError> {
    let s = Scenario::from_file(scenario)?;
    let data = synthesize_data(&s, seed)?;
    write_file(out, &data.to_json_string())?;
    log::info!("{}: {} samples, {} nodes -> {}", s.name, s.horizon + 1, data.trajectory.len() - 1, out.display());
    Ok(data)
}

/// Solver flags shared by `estimate` and `bench`; `None` keeps the default.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SolverFlags {
    pub chart: Option<ParamChart>,
    pub rollout: Option<RolloutKind>,
    pub arrival: Option<ArrivalMethod>,
    pub tol_grad: Option<f64>,
    pub max_iter: Option<usize>,
}

impl SolverFlags {
    pub fn apply(&self, config: &mut SolverConfig) {
        if let Some(r) = self.rollout {
            config.rollout = r;
        }
        if let Some(a) = self.arrival {
            config.arrival = a;
        }
        if let Some(t) = self.tol_grad {
            config.tol_grad = t;
        }
        if let Some(m) = self.max_iter {
            config.max_iter = m;
        }
    }
}

/// Contents of `estimate.json`.
#[derive(Clone, Debug, Serialize)]
pub struct EstimateFile {
    pub scenario: String,
    pub chart: String,
    pub rollout: String,
    pub arrival: String,
    /// Solver status, or `error` when the solve failed.
    pub status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub iterations: usize,
    pub cost: f64,
    pub gap_l1: f64,
    pub grad_norm: f64,
    pub bodies: Vec<String>,
    /// Chart coordinates, ten per estimated body.
    pub theta_chart: Vec<Vec<f64>>,
    /// Physical inertial vectors `(m, h, I)` about the body origin.
    pub theta_physical: Vec<InertialVector>,
    pub trajectory: Vec<Vec<f64>>,
    /// Scores against the ground truth stored in the data file.
    pub metrics: Option<Metrics>,
}

/// Result of [`estimate`]: the file written and the process outcome.
#[derive(Clone, Debug)]
pub struct EstimateResult {
    pub file: EstimateFile,
    pub outcome: Result<(), CommandError>,
}

/// Estimates the scenario's parameters from `data` (synthesized with `seed`
/// when absent). Writes `estimate.json` and `trace.csv` into `out_dir`.
///
/// The solve starts from the scenario's parameter guess and from the states
/// read off the measurements (see [`measured_states`]). The estimate is
/// written even when the solve fails; the returned outcome carries the exit
/// class.
pub fn estimate(
    scenario: &Path,
    data: Option<&Path>,
    seed: u64,
    flags: &SolverFlags,
    out_dir: &Path,
) -> Result<EstimateResult, CommandError> {
    let s = Scenario::from_file(scenario)?;
    let data = match data {
        Some(p) => SyntheticData::from_file(p)?,
        None => synthesize_data(&s, seed)?,
    };
    data.check(&s)?;
    let mut config = SolverConfig::default();
    flags.apply(&mut config);
    config.validate()?;
    let chart = flags.chart.unwrap_or(ParamChart::ExpEigenvalue);
    let problem = build_problem(&s, &data, chart, &s.theta_init)?;
    let init = problem.iterate_from_states(measured_states(&s, &data));

    let bodies = s.estimated.iter().map(|&b| s.model.bodies()[b].name.clone()).collect();
    let mut file = EstimateFile {
        scenario: s.name.clone(),
        chart: chart.name().into(),
        rollout: config.rollout.name().into(),
        arrival: config.arrival.name().into(),
        status: "error".into(),
        error: None,
        iterations: 0,
        cost: problem.problem.total_cost(&init),
        gap_l1: 0.0,
        grad_norm: f64::NAN,
        bodies,
        theta_chart: rows(&init.theta, 10),
        theta_physical: problem.params.physical(&init.theta),
        trajectory: init.xs.iter().map(|x| x.as_slice().to_vec()).collect(),
        metrics: None,
    };
    std::fs::create_dir_all(out_dir).map_err(|e| io_error(out_dir, e))?;
    let outcome = match solve(&problem.problem, init, &config) {
        Ok(o) => {
            write_file(&out_dir.join("trace.csv"), &o.trace.to_csv_string())?;
            let params = problem.params.physical(&o.iterate.theta);
            let truth = GroundTruth { model: &s.model, trajectory: &data.trajectory, params: &data.theta_true };
            let m = score_estimate(&Estimate { trajectory: o.iterate.xs.clone(), params: params.clone(), cost: o.cost }, &truth);
            log::info!(
                "{}: {:?} after {} iterations, cost {:.6e}, max parameter error {:.3e}",
                s.name,
                o.status,
                o.iterations,
                o.cost,
                m.param_rel_err.iter().copied().fold(0.0, f64::max)
            );
            file.status = super::status_name(o.status).into();
            file.iterations = o.iterations;
            file.cost = o.cost;
            file.gap_l1 = o.gap_l1;
            file.grad_norm = o.grad_norm;
            file.theta_chart = rows(&o.iterate.theta, 10);
            file.theta_physical = params;
            file.trajectory = o.iterate.xs.iter().map(|x| x.as_slice().to_vec()).collect();
            file.metrics = Some(m);
            match o.status {
                SolveStatus::MaxIterReached => {
                    Err(CommandError::Convergence(format!("no convergence within {} iterations", config.max_iter)))
                }
                _ => Ok(()),
            }
        }
        Err(e) => {
            file.error = Some(e.to_string());
            Err(e.into())
        }
    };
    let json = serde_json::to_string_pretty(&file).expect("estimate serializes");
    write_file(&out_dir.join("estimate.json"), &json)?;
    Ok(EstimateResult { file, outcome })
}

fn rows(v: &DVector<f64>, width: usize) -> Vec<Vec<f64>> {
    v.as_slice().chunks(width).map(<[f64]>::to_vec).collect()
}

/// Overrides applied to a suite before it runs.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct BenchFlags {
    pub solver: SolverFlags,
    pub seed: Option<u64>,
    pub jobs: usize,
}

/// Runs a suite and writes `records.csv`, `timings.csv` and `summary.txt`
/// into `out_dir`. Chart, rollout and arrival flags replace the suite's lists.
pub fn bench(suite: &Path, flags: &BenchFlags, out_dir: &Path) -> Result<super::BenchReport, CommandError> {
    let mut suite = Suite::from_file(suite)?;
    if let Some(c) = flags.solver.chart {
        suite.spec.charts = vec![c];
    }
    if let Some(r) = flags.solver.rollout {
        suite.spec.rollouts = vec![r];
    }
    if let Some(a) = flags.solver.arrival {
        suite.spec.arrivals = vec![a];
    }
    if let Some(s) = flags.seed {
        suite.spec.seed = s;
    }
    flags.solver.apply(&mut suite.spec.solver);
    suite.spec.solver.validate()?;
    let jobs = if flags.jobs == 0 { std::thread::available_parallelism().map_or(1, |n| n.get()) } else { flags.jobs };
    let report = run_suite(&suite, jobs)?;
    std::fs::create_dir_all(out_dir).map_err(|e| io_error(out_dir, e))?;
    write_file(&out_dir.join("records.csv"), &report.records_csv())?;
    write_file(&out_dir.join("timings.csv"), &report.timings_csv())?;
    write_file(&out_dir.join("summary.txt"), &report.table())?;
    Ok(report)
}

/// Worst errors of the derivative checks.
#[derive(Clone, Debug, PartialEq)]
pub struct DerivativeReport {
    pub samples: usize,
    pub tolerance: f64,
    /// `(check name, worst relative error)`; checks that could not run are absent.
    pub checks: Vec<(String, f64)>,
}

impl DerivativeReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|(_, e)| *e < self.tolerance)
    }

    pub fn worst(&self) -> f64 {
        self.checks.iter().map(|c| c.1).fold(0.0, f64::max)
    }
}

/// `‖a − b‖∞ / (1 + ‖b‖∞)`.
fn rel_err(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let e = (a - b).amax() / (1.0 + b.amax());
    if e.is_nan() {
        f64::INFINITY
    } else {
        e
    }
}

const FD_STEP: f64 = 1e-6;

fn central<F>(x: &Vector10, rows: usize, mut f: F) -> Result<DMatrix<f64>, RbdError>
where
    F: FnMut(&Vector10) -> Result<DVector<f64>, RbdError>,
{
    let mut out = DMatrix::zeros(rows, 10);
    for j in 0..10 {
        let mut p = *x;
        p[j] += FD_STEP;
        let fp = f(&p)?;
        p[j] -= 2.0 * FD_STEP;
        let fm = f(&p)?;
        out.set_column(j, &((fp - fm) / (2.0 * FD_STEP)));
    }
    Ok(out)
}

struct Worst(Vec<(String, f64)>);

impl Worst {
    fn record(&mut self, name: &str, e: f64) {
        match self.0.iter_mut().find(|c| c.0 == name) {
            Some(c) => c.1 = c.1.max(e),
            None => self.0.push((name.into(), e)),
        }
    }
}

/// Regressor identity, chart Jacobians and parameter derivatives of free,
/// contact and impulse dynamics against central differences at `n` random
/// states. Contact checks use every contact point of the model at once and
/// skip samples where that contact set is rank deficient.
pub fn check_derivatives(model: &RobotModel, n: usize, seed: u64, tolerance: f64) -> Result<DerivativeReport, CommandError> {
    if !model.stacked_inertia().iter().all(|x| x.is_finite()) {
        return Err(RbdError::NonFiniteData("model inertia".into()).into());
    }
    if n == 0 {
        log::warn!("no samples requested; nothing was checked");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nv = model.nv();
    let all = ContactSet::new((0..model.contacts().len()).collect());
    let mut worst = Worst(Vec::new());
    let charts = [ParamChart::Raw, ParamChart::LogCholesky, ParamChart::ExpEigenvalue];
    for _ in 0..n {
        let mut r = || DVector::from_fn(nv, |_, _| rng.random_range(-1.0..1.0));
        let (q, v, a, tau) = (r(), r(), r(), r());
        let id = inverse_dynamics(model, &q, &v, &a);
        let y = joint_torque_regressor(model, &q, &v, &a);
        let yt = y * model.stacked_inertia();
        worst.record("regressor identity", rel_err(&DMatrix::from_column_slice(nv, 1, yt.as_slice()), &DMatrix::from_column_slice(nv, 1, id.as_slice())));

        for chart in charts {
            let pi = Vector10::from_fn(|_, _| rng.random_range(-1.0..1.0));
            let fd = central(&pi, 10, |p| Ok(DVector::from_column_slice(chart.to_theta(p).0.as_slice())))?;
            let j = chart.jacobian(&pi);
            worst.record(
                &format!("{} chart Jacobian", chart.name()),
                rel_err(&DMatrix::from_column_slice(10, 10, j.as_slice()), &fd),
            );
        }

        for chart in charts {
            for body in 0..model.num_bodies() {
                let Ok(pi) = chart.from_theta(model.body_inertia(body)) else {
                    log::debug!("body {body} has no {} coordinates; skipped", chart.name());
                    continue;
                };
                let blocks = [ParamBlock { body, jacobian: chart.jacobian(&pi) }];
                let with = |p: &Vector10| {
                    let mut m = model.clone();
                    m.set_body_inertia(body, chart.to_theta(p));
                    m
                };
                let d = fd_param_derivative(model, &q, &v, &tau, &blocks)?;
                let fd = central(&pi, nv, |p| crate::rbd::forward_dynamics(&with(p), &q, &v, &tau))?;
                worst.record(&format!("free dynamics ∂a/∂θ ({})", chart.name()), rel_err(&d, &fd));
                if all.is_empty() {
                    continue;
                }
                let (Ok(dc), Ok(di)) = (
                    contact_param_derivative(model, &q, &v, &tau, &all, &blocks),
                    impulse_param_derivative(model, &q, &v, &all, &blocks),
                ) else {
                    log::debug!("contact set rank deficient at this sample; skipped");
                    continue;
                };
                let fdc = central(&pi, dc.nrows(), |p| {
                    let s = contact_dynamics(&with(p), &q, &v, &tau, &all)?;
                    Ok(concat(&s.a, &s.lambda))
                });
                let fdi = central(&pi, di.nrows(), |p| {
                    let s = impulse_dynamics(&with(p), &q, &v, &all)?;
                    Ok(concat(&s.a, &s.lambda))
                });
                if let (Ok(fdc), Ok(fdi)) = (fdc, fdi) {
                    worst.record(&format!("contact dynamics ∂(a,λ)/∂θ ({})", chart.name()), rel_err(&dc, &fdc));
                    worst.record(&format!("impulse dynamics ∂(v⁺,Λ)/∂θ ({})", chart.name()), rel_err(&di, &fdi));
                }
            }
        }
    }
    Ok(DerivativeReport { samples: n, tolerance, checks: worst.0 })
}

fn concat(a: &DVector<f64>, b: &DVector<f64>) -> DVector<f64> {
    DVector::from_iterator(a.len() + b.len(), a.iter().chain(b.iter()).copied())
}

/// Loads a model file and runs [`check_derivatives`].
pub fn check_derivatives_file(model: &Path, n: usize, seed: u64, tolerance: f64) -> Result<DerivativeReport, CommandError> {
    let m = RobotModel::from_file(model)?;
    check_derivatives(&m, n, seed, tolerance)
}

/// Default output location for a command.
pub fn default_out(command: &str) -> PathBuf {
    match command {
        "simulate" => PathBuf::from("data.json"),
        _ => PathBuf::from(format!("{command}-out")),
    }
}
