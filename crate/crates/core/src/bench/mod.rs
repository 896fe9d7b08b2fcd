//! Benchmark suites: scenarios × charts × rollouts × arrival solves × seeds.
//!
//! A suite file looks like
//!
//! ```json
//! {
//!   "name": "rollouts",
//!   "scenarios": ["../scenarios/hopper.json"],
//!   "charts": ["expeig"],
//!   "rollouts": ["single", "feasibility", "multiple"],
//!   "arrivals": ["nullspace"],
//!   "seeds": 20,
//!   "seed": 7,
//!   "init": { "state_sigma": 0.01, "theta_error": 0.7 },
//!   "noise": { "observation": 1.0 },
//!   "solver": { "max_iter": 200 }
//! }
//! ```
//!
//! Each run starts from a random initial guess drawn from `(suite seed,
//! scenario, run seed)`: every state of the synthetic trajectory is perturbed
//! by `N(0, state_sigma²)` and each estimated body's true inertial vector is
//! scaled by `1 + theta_error` or `1 − theta_error` with equal probability.
//! The same guess is used for every chart, rollout and arrival method.

pub mod commands;

use crate::inertia::{InertialVector, ParamChart};
use crate::problems::{
    build_problem, score_estimate, synthesize_data, Estimate, EstimationProblem, GroundTruth, NoiseSpec, ProblemError, Scenario,
    SyntheticData, ThetaInit,
};
use crate::solver::{solve, ArrivalMethod, Iterate, RolloutKind, SolveStatus, SolverConfig, SolverError};
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InitSpec {
    pub state_sigma: f64,
    pub theta_error: f64,
}

impl Default for InitSpec {
    fn default() -> Self {
        InitSpec { state_sigma: 0.01, theta_error: 0.7 }
    }
}

fn default_charts() -> Vec<ParamChart> {
    vec![ParamChart::LogCholesky, ParamChart::ExpEigenvalue]
}

fn default_rollouts() -> Vec<RolloutKind> {
    vec![RolloutKind::Multiple]
}

fn default_arrivals() -> Vec<ArrivalMethod> {
    vec![ArrivalMethod::Nullspace]
}

fn default_seeds() -> usize {
    5
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteFile {
    #[serde(default)]
    pub name: String,
    pub scenarios: Vec<String>,
    #[serde(default = "default_charts")]
    pub charts: Vec<ParamChart>,
    #[serde(default = "default_rollouts")]
    pub rollouts: Vec<RolloutKind>,
    #[serde(default = "default_arrivals")]
    pub arrivals: Vec<ArrivalMethod>,
    #[serde(default = "default_seeds")]
    pub seeds: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub init: InitSpec,
    /// Replaces the noise levels of every scenario when present.
    #[serde(default)]
    pub noise: Option<NoiseSpec>,
    #[serde(default)]
    pub solver: SolverConfig,
}

/// A suite with its scenarios loaded.
#[derive(Clone, Debug)]
pub struct Suite {
    pub spec: SuiteFile,
    pub scenarios: Vec<Scenario>,
}

impl Suite {
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, ProblemError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| ProblemError::Io(format!("{}: {e}", path.display())))?;
        let spec: SuiteFile = serde_json::from_str(&text)
            .map_err(|e| ProblemError::Parse(format!("{}: line {}, column {}: {e}", path.display(), e.line(), e.column())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_spec(spec, &base)
    }

    pub fn from_spec(spec: SuiteFile, base: &Path) -> Result<Self, ProblemError> {
        if spec.scenarios.is_empty() || spec.charts.is_empty() || spec.rollouts.is_empty() || spec.arrivals.is_empty() {
            return Err(ProblemError::InvalidScenario("suite needs at least one scenario, chart, rollout and arrival method".into()));
        }
        spec.solver.validate()?;
        let scenarios = spec
            .scenarios
            .iter()
            .map(|p| {
                let mut s = Scenario::from_file(base.join(PathBuf::from(p)))?;
                if let Some(noise) = spec.noise {
                    s.noise = noise;
                }
                Ok(s)
            })
            .collect::<Result<Vec<_>, ProblemError>>()?;
        Ok(Suite { spec, scenarios })
    }

    /// All cells in report order.
    pub fn cells(&self) -> Vec<Cell> {
        let mut out = Vec::new();
        for scenario in 0..self.scenarios.len() {
            for &chart in &self.spec.charts {
                for &rollout in &self.spec.rollouts {
                    for &arrival in &self.spec.arrivals {
                        for seed in 0..self.spec.seeds {
                            out.push(Cell { scenario, chart, rollout, arrival, seed });
                        }
                    }
                }
            }
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Cell {
    pub scenario: usize,
    pub chart: ParamChart,
    pub rollout: RolloutKind,
    pub arrival: ArrivalMethod,
    pub seed: usize,
}

/// Random initial guess in physical coordinates, independent of the chart.
#[derive(Clone, Debug, PartialEq)]
pub struct InitialGuess {
    pub states: Vec<DVector<f64>>,
    pub params: Vec<InertialVector>,
}

/// Per-run seed mixing the suite seed, scenario index and run index.
pub fn run_seed(suite_seed: u64, scenario: usize, run: usize) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(suite_seed);
    rng.set_stream(((scenario as u64) << 32) | run as u64);
    rng.random()
}

pub fn random_initial_guess(scenario: &Scenario, data: &SyntheticData, init: &InitSpec, seed: u64) -> InitialGuess {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let params = data
        .theta_true
        .iter()
        .map(|t| {
            let s = if rng.random_bool(0.5) { 1.0 + init.theta_error } else { 1.0 - init.theta_error };
            *t * s
        })
        .collect();
    let states = data
        .trajectory
        .iter()
        .map(|x| {
            let dx = x.map(|_| {
                let e: f64 = StandardNormal.sample(&mut rng);
                init.state_sigma * e
            });
            crate::rbd::state_plus(&scenario.model, x, &dx)
        })
        .collect();
    InitialGuess { states, params }
}

/// Outcome of one benchmark run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub scenario: String,
    pub chart: String,
    pub rollout: String,
    pub arrival: String,
    pub seed: usize,
    /// `converged`, `step_tolerance`, `max_iter_reached` or `error`.
    pub status: String,
    pub converged: bool,
    pub iterations: usize,
    pub cost: f64,
    pub gap_l1: f64,
    pub param_err: f64,
    pub traj_err: f64,
    #[serde(skip)]
    pub wall_time: f64,
}

pub(crate) fn status_name(s: SolveStatus) -> &'static str {
    match s {
        SolveStatus::Converged => "converged",
        SolveStatus::StepTolerance => "step_tolerance",
        SolveStatus::MaxIterReached => "max_iter_reached",
    }
}

/// Result of solving one estimation problem from a given start.
pub struct EstimateRun {
    pub problem: EstimationProblem,
    pub outcome: crate::solver::SolveOutcome,
    pub params: Vec<InertialVector>,
}

/// Builds and solves the problem from `guess`.
pub fn estimate_from(
    scenario: &Scenario,
    data: &SyntheticData,
    chart: ParamChart,
    guess: &InitialGuess,
    config: &SolverConfig,
) -> Result<EstimateRun, ProblemError> {
    let explicit = ThetaInit::Explicit(guess.params.iter().map(|p| <[f64; 10]>::from(*p)).collect());
    let problem = build_problem(scenario, data, chart, &explicit)?;
    let init: Iterate = problem.iterate_from_states(guess.states.clone());
    let outcome = solve(&problem.problem, init, config)?;
    let params = problem.params.physical(&outcome.iterate.theta);
    Ok(EstimateRun { problem, outcome, params })
}

pub fn run_cell(suite: &Suite, data: &[SyntheticData], cell: Cell) -> RunRecord {
    let scenario = &suite.scenarios[cell.scenario];
    let d = &data[cell.scenario];
    let guess = random_initial_guess(scenario, d, &suite.spec.init, run_seed(suite.spec.seed, cell.scenario, cell.seed));
    let config = SolverConfig { rollout: cell.rollout, arrival: cell.arrival, ..suite.spec.solver.clone() };
    let start = Instant::now();
    let result = estimate_from(scenario, d, cell.chart, &guess, &config);
    let wall_time = start.elapsed().as_secs_f64();
    let mut rec = RunRecord {
        scenario: scenario.name.clone(),
        chart: cell.chart.name().into(),
        rollout: cell.rollout.name().into(),
        arrival: cell.arrival.name().into(),
        seed: cell.seed,
        status: "error".into(),
        converged: false,
        iterations: 0,
        cost: f64::NAN,
        gap_l1: f64::NAN,
        param_err: f64::NAN,
        traj_err: f64::NAN,
        wall_time,
    };
    match result {
        Ok(run) => {
            let m = score_estimate(
                &Estimate { trajectory: run.outcome.iterate.xs.clone(), params: run.params.clone(), cost: run.outcome.cost },
                &GroundTruth { model: &scenario.model, trajectory: &d.trajectory, params: &d.theta_true },
            );
            rec.status = status_name(run.outcome.status).into();
            rec.converged = run.outcome.status.is_converged();
            rec.iterations = run.outcome.iterations;
            rec.cost = run.outcome.cost;
            rec.gap_l1 = run.outcome.gap_l1;
            rec.param_err = m.param_rel_err.iter().copied().fold(0.0, f64::max);
            rec.traj_err = m.traj_linf;
        }
        Err(e) => log::warn!("{} {} {} {} seed {}: {e}", rec.scenario, rec.chart, rec.rollout, rec.arrival, rec.seed),
    }
    rec
}

/// Records of a finished suite, in cell order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct BenchReport {
    pub name: String,
    pub records: Vec<RunRecord>,
}

/// Runs every cell of the suite on at most `jobs` threads.
pub fn run_suite(suite: &Suite, jobs: usize) -> Result<BenchReport, ProblemError> {
    let data = suite.scenarios.iter().map(|s| synthesize_data(s, suite.spec.seed)).collect::<Result<Vec<_>, _>>()?;
    let cells = suite.cells();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| ProblemError::Solver(SolverError::InvalidConfig(e.to_string())))?;
    let records = pool.install(|| {
        use rayon::prelude::*;
        cells.par_iter().map(|&c| run_cell(suite, &data, c)).collect::<Vec<_>>()
    });
    Ok(BenchReport { name: suite.spec.name.clone(), records })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

/// Sample mean and (population) standard deviation; `None` for no samples.
pub fn mean_std(xs: &[f64]) -> Option<MeanStd> {
    if xs.is_empty() {
        return None;
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    Some(MeanStd { mean, std: var.sqrt() })
}

/// Aggregates of one (scenario, chart, rollout, arrival) cell over seeds.
/// Means are taken over converged runs only.
#[derive(Clone, Debug, PartialEq)]
pub struct CellSummary {
    pub scenario: String,
    pub chart: String,
    pub rollout: String,
    pub arrival: String,
    pub runs: usize,
    pub converged: usize,
    pub iterations: Option<MeanStd>,
    pub cost: Option<MeanStd>,
    pub traj_err: Option<MeanStd>,
}

impl BenchReport {
    pub fn summary(&self) -> Vec<CellSummary> {
        let mut out: Vec<CellSummary> = Vec::new();
        let mut groups: Vec<(&str, &str, &str, &str, Vec<&RunRecord>)> = Vec::new();
        for r in &self.records {
            match groups.iter_mut().find(|g| (g.0, g.1, g.2, g.3) == (&r.scenario[..], &r.chart[..], &r.rollout[..], &r.arrival[..])) {
                Some(g) => g.4.push(r),
                None => groups.push((&r.scenario, &r.chart, &r.rollout, &r.arrival, vec![r])),
            }
        }
        for (scenario, chart, rollout, arrival, recs) in groups {
            let ok: Vec<&&RunRecord> = recs.iter().filter(|r| r.converged).collect();
            let col = |f: fn(&RunRecord) -> f64| mean_std(&ok.iter().map(|r| f(r)).collect::<Vec<_>>());
            out.push(CellSummary {
                scenario: scenario.into(),
                chart: chart.into(),
                rollout: rollout.into(),
                arrival: arrival.into(),
                runs: recs.len(),
                converged: ok.len(),
                iterations: col(|r| r.iterations as f64),
                cost: col(|r| r.cost),
                traj_err: col(|r| r.traj_err),
            });
        }
        out
    }

    pub fn write_records_csv<W: std::io::Write>(&self, out: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "scenario", "chart", "rollout", "arrival", "seed", "status", "converged", "iterations", "cost", "gap_l1", "param_err", "traj_err",
        ])?;
        for r in &self.records {
            w.write_record([
                r.scenario.clone(),
                r.chart.clone(),
                r.rollout.clone(),
                r.arrival.clone(),
                r.seed.to_string(),
                r.status.clone(),
                u8::from(r.converged).to_string(),
                r.iterations.to_string(),
                format!("{:e}", r.cost),
                format!("{:e}", r.gap_l1),
                format!("{:e}", r.param_err),
                format!("{:e}", r.traj_err),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn records_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_records_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv is utf-8")
    }

    /// Wall times per run; kept apart from the deterministic records.
    pub fn timings_csv(&self) -> String {
        let mut s = String::from("scenario,chart,rollout,arrival,seed,wall_time\n");
        for r in &self.records {
            let _ = writeln!(s, "{},{},{},{},{},{:.6}", r.scenario, r.chart, r.rollout, r.arrival, r.seed, r.wall_time);
        }
        s
    }

    /// Fixed-width table with mean ± std of iterations, cost and trajectory
    /// ℓ∞ error over converged runs; `x` marks cells without a converged run.
    pub fn table(&self) -> String {
        let fmt = |m: Option<MeanStd>, prec: usize| match m {
            Some(m) => format!("{:.p$} ± {:.p$}", m.mean, m.std, p = prec),
            None => "x".into(),
        };
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{:<18} {:<8} {:<12} {:<10} {:>9} {:>22} {:>26} {:>26}",
            "scenario", "chart", "rollout", "arrival", "converged", "iterations", "cost", "error [l-inf]"
        );
        for c in self.summary() {
            let cost = match c.cost {
                Some(m) => format!("{:.3e} ± {:.3e}", m.mean, m.std),
                None => "x".into(),
            };
            let _ = writeln!(
                s,
                "{:<18} {:<8} {:<12} {:<10} {:>9} {:>22} {:>26} {:>26}",
                c.scenario,
                c.chart,
                c.rollout,
                c.arrival,
                format!("{}/{}", c.converged, c.runs),
                fmt(c.iterations, 1),
                cost,
                fmt(c.traj_err, 4)
            );
        }
        s
    }
}
