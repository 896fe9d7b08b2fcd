//! Acceptance criteria. Every test prints one `criterion N [PASS|FAIL]` line
//! with the measured value and its pinned tolerance.

mod common;

use common::*;
use nalgebra::{DMatrix, DVector};
use parest::bench::{run_suite, BenchReport, Suite};
use parest::inertia::{ParamChart, Vector10};
use parest::problems::{build_problem, measured_states, regressor_image_error, synthesize_data, Scenario};
use parest::rbd::derivatives::{contact_param_derivative, fd_param_derivative, impulse_param_derivative, ParamBlock};
use parest::rbd::dynamics::{contact_acceleration, contact_velocity};
use parest::rbd::{
    bias_forces, contact_dynamics, contact_jacobian, forward_dynamics, impulse_dynamics, inverse_dynamics, joint_torque_regressor,
    mass_matrix, ContactSet, RobotModel,
};
use parest::solver::lq::{random_lq_problem, LqDims};
use parest::solver::{
    arrival_value, backward_pass, compute_node_expansions, direct_model, linear_direction, rollout_feasibility, rollout_multiple_shooting,
    set_feedforward, solve, solve_arrival, ArrivalMethod, RolloutKind, SolverConfig, SolverError,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::process::Command;
use std::time::Instant;

const CHARTS: [ParamChart; 2] = [ParamChart::LogCholesky, ParamChart::ExpEigenvalue];

fn random_vec(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.random_range(-scale..scale))
}

fn to_dmatrix<const R: usize, const C: usize>(m: &nalgebra::SMatrix<f64, R, C>) -> DMatrix<f64> {
    DMatrix::from_column_slice(R, C, m.as_slice())
}

fn scenario(name: &str) -> Scenario {
    Scenario::from_file(data_dir().join("scenarios").join(format!("{name}.json"))).unwrap()
}

#[test]
fn criterion_01_chart_images_are_physically_consistent() {
    const POINTS: usize = 10_000;
    const TOL: f64 = 1e-9;
    const MAX_SECONDS: f64 = 5.0;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let start = Instant::now();
    let mut failures = 0;
    for chart in CHARTS {
        for _ in 0..POINTS {
            let pi = Vector10::from_fn(|_, _| rng.random_range(-2.0..2.0));
            if !chart.to_theta(&pi).is_fully_consistent(TOL) {
                failures += 1;
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(
        1,
        "physical-consistency closure",
        failures == 0 && secs < MAX_SECONDS,
        &format!("{failures} inconsistent of {} points (tol {TOL:e}), {secs:.2} s (limit {MAX_SECONDS} s)", 2 * POINTS),
    );
}

#[test]
fn criterion_02_chart_jacobians_match_differences() {
    const POINTS: usize = 1_000;
    const STEP: f64 = 1e-6;
    const TOL: f64 = 1e-6;
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    for chart in CHARTS {
        for _ in 0..POINTS {
            let pi = DVector::from_fn(10, |_, _| rng.random_range(-2.0..2.0));
            let fd = central_jacobian(&pi, STEP, |p| {
                let t = chart.to_theta(&Vector10::from_column_slice(p.as_slice()));
                DVector::from_column_slice(t.0.as_slice())
            });
            let j = to_dmatrix(&chart.jacobian(&Vector10::from_column_slice(pi.as_slice())));
            worst = worst.max(rel_err(&j, &fd));
        }
    }
    verdict(2, "chart Jacobians", worst < TOL, &format!("max relative error {worst:.3e} (tol {TOL:e})"));
}

#[test]
fn criterion_03_regressor_identity() {
    const SAMPLES: usize = 1_000;
    const TOL: f64 = 1e-10;
    let model = chain3();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    for _ in 0..SAMPLES {
        let (q, v, a) = (random_vec(&mut rng, 3, 3.0), random_vec(&mut rng, 3, 3.0), random_vec(&mut rng, 3, 3.0));
        let y = joint_torque_regressor(&model, &q, &v, &a);
        let diff = y * model.stacked_inertia() - inverse_dynamics(&model, &q, &v, &a);
        worst = worst.max(diff.amax());
    }
    verdict(3, "regressor identity", worst < TOL, &format!("max |Yϑ − ID| {worst:.3e} (tol {TOL:e})"));
}

#[test]
fn criterion_04_contact_kkt() {
    const INSTANCES: usize = 500;
    const RES_TOL: f64 = 1e-8;
    const DENSE_TOL: f64 = 1e-9;
    let cases: Vec<(RobotModel, Vec<usize>)> = vec![
        (chain3(), vec![0]),
        (model("walker"), vec![0]),
        (model("walker"), vec![0, 1]),
        (model("hopper"), vec![0]),
        (model("lift_pendulum"), vec![0]),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut res, mut dense, mut solved) = (0.0f64, 0.0f64, 0);
    for i in 0..INSTANCES {
        let (m, active) = &cases[i % cases.len()];
        let n = m.nv();
        let contacts = ContactSet::new(active.clone());
        let (q, v, tau) = (random_vec(&mut rng, n, 1.0), random_vec(&mut rng, n, 1.0), random_vec(&mut rng, n, 1.0));
        let mass = mass_matrix(m, &q);
        let j = contact_jacobian(m, &q, active);
        let impulse = i % 2 == 1;
        let sol = if impulse { impulse_dynamics(m, &q, &v, &contacts) } else { contact_dynamics(m, &q, &v, &tau, &contacts) };
        let Ok(sol) = sol else { continue };
        solved += 1;
        let (r1, r2, d1, d2) = if impulse {
            let r1 = &mass * (&sol.a - &v) - j.transpose() * &sol.lambda;
            let r2 = contact_velocity(m, &q, &sol.a, active);
            (r1, r2, &mass * &v, DVector::zeros(j.nrows()))
        } else {
            let rhs = &tau - bias_forces(m, &q, &v);
            let r1 = &mass * &sol.a - j.transpose() * &sol.lambda - &rhs;
            let r2 = contact_acceleration(m, &q, &v, &sol.a, active);
            let drift = -contact_acceleration(m, &q, &v, &DVector::zeros(n), active);
            (r1, r2, rhs, drift)
        };
        res = res.max(r1.amax()).max(r2.amax());
        let (a, l) = dense_saddle(&mass, &j, &d1, &d2);
        let scale = 1.0 + a.amax().max(l.amax());
        dense = dense.max((&a - &sol.a).amax().max((&l - &sol.lambda).amax()) / scale);
    }
    verdict(
        4,
        "contact KKT",
        solved == INSTANCES && res < RES_TOL && dense < DENSE_TOL,
        &format!(
            "{solved}/{INSTANCES} solved, max residual {res:.3e} (tol {RES_TOL:e}), Schur vs dense {dense:.3e} (tol {DENSE_TOL:e})"
        ),
    );
}

#[test]
fn criterion_05_parameter_derivatives() {
    const SAMPLES: usize = 10;
    const STEP: f64 = 1e-6;
    const TOL: f64 = 1e-6;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = [0.0f64; 3];
    let mut counts = [0usize; 3];
    for name in ["walker", "lift_pendulum", "hopper"] {
        let m = model(name);
        let n = m.nv();
        let contacts = ContactSet::new((0..m.contacts().len()).collect());
        for _ in 0..SAMPLES {
            let (q, v, tau) = (random_vec(&mut rng, n, 1.0), random_vec(&mut rng, n, 1.0), random_vec(&mut rng, n, 1.0));
            for chart in CHARTS {
                for body in 0..m.num_bodies() {
                    let pi = chart.from_theta(m.body_inertia(body)).unwrap();
                    let blocks = [ParamBlock { body, jacobian: chart.jacobian(&pi) }];
                    let with = |p: &DVector<f64>| {
                        let mut mm = m.clone();
                        mm.set_body_inertia(body, chart.to_theta(&Vector10::from_column_slice(p.as_slice())));
                        mm
                    };
                    let p0 = DVector::from_column_slice(pi.as_slice());
                    let stack = |a: &DVector<f64>, l: &DVector<f64>| DVector::from_iterator(a.len() + l.len(), a.iter().chain(l.iter()).copied());

                    let d = fd_param_derivative(&m, &q, &v, &tau, &blocks).unwrap();
                    let fd = central_jacobian(&p0, STEP, |p| forward_dynamics(&with(p), &q, &v, &tau).unwrap());
                    worst[0] = worst[0].max(rel_err(&d, &fd));
                    counts[0] += 1;

                    if let Ok(d) = contact_param_derivative(&m, &q, &v, &tau, &contacts, &blocks) {
                        let fd = central_jacobian(&p0, STEP, |p| {
                            let s = contact_dynamics(&with(p), &q, &v, &tau, &contacts).unwrap();
                            stack(&s.a, &s.lambda)
                        });
                        worst[1] = worst[1].max(rel_err(&d, &fd));
                        counts[1] += 1;
                    }
                    if let Ok(d) = impulse_param_derivative(&m, &q, &v, &contacts, &blocks) {
                        let fd = central_jacobian(&p0, STEP, |p| {
                            let s = impulse_dynamics(&with(p), &q, &v, &contacts).unwrap();
                            stack(&s.a, &s.lambda)
                        });
                        worst[2] = worst[2].max(rel_err(&d, &fd));
                        counts[2] += 1;
                    }
                }
            }
        }
    }
    let pass = worst.iter().all(|&w| w < TOL) && counts.iter().all(|&c| c > 0);
    verdict(
        5,
        "parameter derivatives",
        pass,
        &format!(
            "free {:.3e} ({} checks), contact {:.3e} ({}), impulse {:.3e} ({}) (tol {TOL:e})",
            worst[0], counts[0], worst[1], counts[1], worst[2], counts[2]
        ),
    );
}

fn lq_dims(seed: u64) -> LqDims {
    let s = seed as usize;
    LqDims { horizon: 1 + s % 8, nx: 1 + s % 4, nw: 1 + s / 4 % 3, ntheta: 1 + s / 2 % 3, nz: 2 }
}

#[test]
fn criterion_06_riccati_matches_dense_kkt() {
    const PROBLEMS: u64 = 100;
    const KKT_TOL: f64 = 1e-8;
    const NULL_TOL: f64 = 1e-9;
    let (mut worst_kkt, mut worst_null, mut compared) = (0.0f64, 0.0f64, 0);
    for seed in 0..PROBLEMS {
        let (problem, it) = random_lq_problem(seed, lq_dims(seed), seed % 3 != 0, seed % 2 == 1);
        let exp = compute_node_expansions(&problem, &it).unwrap();
        let dense = dense_direction(&problem, &exp, &it.theta);
        let scale = 1.0 + dense.max_norm();
        let direction = |method: ArrivalMethod| -> Result<_, SolverError> {
            let mut bp = backward_pass(&problem, &exp, 0.0)?;
            let v = arrival_value(&problem, &bp, &it.theta);
            let arr = solve_arrival(&v, method, 1e-12)?;
            set_feedforward(&mut bp, &arr.dtheta);
            Ok(linear_direction(&exp, &bp, &arr))
        };
        let null = direction(ArrivalMethod::Nullspace).unwrap();
        worst_kkt = worst_kkt.max(direction_diff(&null, &dense) / scale);
        if let Ok(schur) = direction(ArrivalMethod::Schur) {
            worst_null = worst_null.max(direction_diff(&null, &schur) / scale);
            compared += 1;
        }
    }
    verdict(
        6,
        "Riccati equals KKT",
        worst_kkt < KKT_TOL && worst_null < NULL_TOL && compared > 0,
        &format!(
            "{PROBLEMS} problems, Riccati vs dense {worst_kkt:.3e} (tol {KKT_TOL:e}), nullspace vs Schur {worst_null:.3e} on {compared} full-rank (tol {NULL_TOL:e})"
        ),
    );
}

#[test]
fn criterion_07_lq_exactness() {
    const TOL: f64 = 1e-8;
    let (mut worst, mut max_iters) = (0.0f64, 0);
    for seed in 0..20 {
        let (problem, it) = random_lq_problem(100 + seed, lq_dims(seed), true, seed % 2 == 0);
        let out = solve(&problem, it, &SolverConfig::default()).unwrap();
        max_iters = max_iters.max(out.iterations);
        let (xs, ws, theta) = condensed_least_squares(&problem);
        let mut d: f64 = (&out.iterate.theta - &theta).amax();
        for (a, b) in out.iterate.xs.iter().zip(&xs).chain(out.iterate.ws.iter().zip(&ws)) {
            d = d.max((a - b).amax());
        }
        worst = worst.max(d);
    }
    verdict(
        7,
        "LQ exactness",
        max_iters == 1 && worst < TOL,
        &format!("max iterations {max_iters} (expected 1), distance to least-squares optimum {worst:.3e} (tol {TOL:e})"),
    );
}

#[test]
fn criterion_08_gap_contraction() {
    const TOL: f64 = 1e-10;
    let mut worst: f64 = 0.0;
    for seed in 0..10 {
        let (problem, it) = random_lq_problem(200 + seed, LqDims { horizon: 6, nx: 3, nw: 2, ntheta: 2, nz: 2 }, true, seed % 2 == 0);
        let exp = compute_node_expansions(&problem, &it).unwrap();
        let mut bp = backward_pass(&problem, &exp, 0.0).unwrap();
        let v = arrival_value(&problem, &bp, &it.theta);
        let arr = solve_arrival(&v, ArrivalMethod::Schur, 1e-12).unwrap();
        set_feedforward(&mut bp, &arr.dtheta);
        for alpha in [1.0, 0.5, 0.25] {
            let cand = rollout_feasibility(&problem, &it, &exp, &bp, &arr, alpha).unwrap();
            for (g, e) in problem.gaps(&cand).unwrap().iter().zip(&exp.nodes) {
                worst = worst.max((g.norm() - (1.0 - alpha) * e.gap.norm()).abs());
            }
        }
    }
    verdict(8, "gap contraction", worst < TOL, &format!("max |‖f̄⁺‖ − (1−α)‖f̄‖| {worst:.3e} (tol {TOL:e})"));
}

#[test]
fn criterion_09_expected_improvement() {
    const TOL: f64 = 1e-8;
    let mut worst: f64 = 0.0;
    for seed in 0..20 {
        let (problem, it) = random_lq_problem(300 + seed, lq_dims(seed), true, seed % 2 == 1);
        let exp = compute_node_expansions(&problem, &it).unwrap();
        let mut bp = backward_pass(&problem, &exp, 0.0).unwrap();
        let v = arrival_value(&problem, &bp, &it.theta);
        let arr = solve_arrival(&v, ArrivalMethod::Schur, 1e-12).unwrap();
        set_feedforward(&mut bp, &arr.dtheta);
        let d = linear_direction(&exp, &bp, &arr);
        let model = direct_model(&problem, &exp, &d, &it.theta);
        let c0 = problem.total_cost(&it);
        for alpha in [1.0, 0.5, 0.125] {
            let cand = rollout_multiple_shooting(&problem, &it, &d, alpha);
            let realized = problem.total_cost(&cand) - c0;
            worst = worst.max((model.eval(alpha) - realized).abs() / c0.abs().max(1.0));
        }
    }
    verdict(9, "expected improvement", worst < TOL, &format!("max |Δℓ(α) − realized| {worst:.3e} (tol {TOL:e}, relative to max(1, cost))"));
}

#[test]
fn criterion_10_payload_recovery() {
    const IMAGE_TOL: f64 = 1e-6;
    const MASS_TOL: f64 = 1e-4;
    const MAX_ITERS: usize = 100;
    const MAX_SECONDS: f64 = 10.0;
    let s = scenario("lift_payload");
    let data = synthesize_data(&s, 0).unwrap();
    let start = Instant::now();
    let problem = build_problem(&s, &data, ParamChart::ExpEigenvalue, &s.theta_init).unwrap();
    let init = problem.iterate_from_states(measured_states(&s, &data));
    let out = solve(&problem.problem, init, &SolverConfig::default()).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let est = problem.params.physical(&out.iterate.theta);
    let initial = problem.params.physical(&problem.theta0);
    let start_err = (initial[0].mass() - data.theta_true[0].mass()).abs() / data.theta_true[0].mass();
    let mass_err = (est[0].mass() - data.theta_true[0].mass()).abs() / data.theta_true[0].mass();
    let image = regressor_image_error(&s.model, &problem.schedule, &data.trajectory, &s.estimated, &est, &data.theta_true, s.dt);
    verdict(
        10,
        "payload recovery",
        out.status.is_converged() && out.iterations < MAX_ITERS && secs < MAX_SECONDS && mass_err < MASS_TOL && image < IMAGE_TOL,
        &format!(
            "start mass error {start_err:.2}, {:?} in {} iterations (limit {MAX_ITERS}), {secs:.2} s (limit {MAX_SECONDS} s), \
             mass error {mass_err:.3e} (tol {MASS_TOL:e}), regressor-image error {image:.3e} (tol {IMAGE_TOL:e})",
            out.status, out.iterations
        ),
    );
}

fn pair_runs(report: &BenchReport, a: &str, b: &str) -> Vec<(parest::bench::RunRecord, parest::bench::RunRecord)> {
    let mut out = Vec::new();
    for r in report.records.iter().filter(|r| r.chart == a) {
        if let Some(o) = report.records.iter().find(|o| o.chart == b && o.scenario == r.scenario && o.seed == r.seed) {
            out.push((r.clone(), o.clone()));
        }
    }
    out
}

#[test]
fn criterion_11_parametrization_comparison() {
    const COST_TOL: f64 = 0.01;
    const ORDER_FRACTION: f64 = 0.6;
    let suite = Suite::from_file(data_dir().join("suites/charts.json")).unwrap();
    let report = run_suite(&suite, 4).unwrap();
    let pairs = pair_runs(&report, "expeig", "logchol");
    let mut agree = 0;
    let mut fewer = 0;
    let mut worst: f64 = 0.0;
    for (e, l) in &pairs {
        let rel = (e.cost - l.cost).abs() / l.cost.abs();
        worst = worst.max(if rel.is_nan() { f64::INFINITY } else { rel });
        if e.converged && l.converged && rel < COST_TOL {
            agree += 1;
        }
        if e.iterations <= l.iterations {
            fewer += 1;
        }
    }
    let cells = pairs.len();
    let scenarios = suite.scenarios.len();
    report_table(&report);
    let fraction = fewer as f64 / cells as f64;
    verdict(
        11,
        "parametrization comparison",
        scenarios >= 5 && suite.spec.seeds >= 5 && agree == cells && fraction >= ORDER_FRACTION,
        &format!(
            "{scenarios} scenarios × {} seeds, costs agree in {agree}/{cells} cells (worst {worst:.2e}, tol {COST_TOL}), \
             expeig ≤ logchol iterations in {fewer}/{cells} = {fraction:.2} (need ≥ {ORDER_FRACTION})",
            suite.spec.seeds
        ),
    );
}

fn report_table(bench: &BenchReport) {
    for line in bench.table().lines() {
        report(&format!("    {line}"));
    }
}

#[test]
fn criterion_12_nullspace_necessity() {
    const GAP_TOL: f64 = 1e-6;
    const GRAD_TOL: f64 = 1e-5;
    let s = scenario("sphere_payload");
    let data = synthesize_data(&s, 0).unwrap();
    let problem = build_problem(&s, &data, ParamChart::ExpEigenvalue, &s.theta_init).unwrap();
    let init = problem.iterate_from_states(measured_states(&s, &data));
    let schur = solve(&problem.problem, init.clone(), &SolverConfig { arrival: ArrivalMethod::Schur, ..SolverConfig::default() });
    let singular = matches!(schur, Err(SolverError::SingularParameterHessian { .. }));
    let null = solve(&problem.problem, init, &SolverConfig { arrival: ArrivalMethod::Nullspace, ..SolverConfig::default() }).unwrap();
    let ok = null.status.is_converged() && null.gap_l1 < GAP_TOL && null.grad_norm < GRAD_TOL;
    verdict(
        12,
        "nullspace necessity",
        singular && ok,
        &format!(
            "Schur: {}; nullspace: {:?} after {} iterations, gap ℓ₁ {:.3e} (tol {GAP_TOL:e}), grad {:.3e} (tol {GRAD_TOL:e})",
            match &schur {
                Err(e) => e.to_string(),
                Ok(o) => format!("{:?}", o.status),
            },
            null.status,
            null.iterations,
            null.gap_l1,
            null.grad_norm
        ),
    );
}

#[test]
fn criterion_13_rollout_comparison() {
    const MIN_FRACTION: f64 = 0.9;
    let mut suite = Suite::from_file(data_dir().join("suites/rollouts.json")).unwrap();
    suite.scenarios.retain(|s| s.name == "hopper");
    let report = run_suite(&suite, 4).unwrap();
    report_table(&report);
    let count = |rollout: &str| {
        let runs: Vec<_> = report.records.iter().filter(|r| r.rollout == rollout).collect();
        (runs.iter().filter(|r| r.converged).count(), runs.len())
    };
    let (ms_ok, ms_n) = count("multiple");
    let (ss_ok, ss_n) = count("single");
    let table = report.table();
    let shaped = ["iterations", "cost", "error [l-inf]"].iter().all(|h| table.lines().next().unwrap_or("").contains(h));
    let fraction = ms_ok as f64 / ms_n as f64;
    verdict(
        13,
        "rollout comparison",
        ms_n == 20 && fraction >= MIN_FRACTION && ss_ok < ss_n && shaped,
        &format!("multiple shooting converged {ms_ok}/{ms_n} (need ≥ {MIN_FRACTION}), single shooting {ss_ok}/{ss_n}"),
    );
}

fn run(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_parest")).args(args).env("PAREST_LOG", "error").output().unwrap()
}

#[test]
fn criterion_14_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let p = |s: &str| dir.path().join(s).to_str().unwrap().to_owned();
    let scen = data_dir().join("scenarios/walker.json");
    let scen = scen.to_str().unwrap();
    let suite = data_dir().join("suites/smoke.json");
    let suite = suite.to_str().unwrap();
    let mut codes = Vec::new();
    for tag in ["a", "b"] {
        codes.push(run(&["simulate", scen, "--seed", "5", "--out", &p(&format!("{tag}/data.json"))]).status.code());
        codes.push(run(&["estimate", scen, "--data", &p(&format!("{tag}/data.json")), "--out", &p(&format!("{tag}/est"))]).status.code());
        codes.push(run(&["bench", suite, "--jobs", if tag == "a" { "1" } else { "3" }, "--out", &p(&format!("{tag}/bench"))]).status.code());
    }
    let files = ["data.json", "est/trace.csv", "est/estimate.json", "bench/records.csv", "bench/summary.txt"];
    let same: Vec<bool> = files
        .iter()
        .map(|f| {
            let a = std::fs::read(p(&format!("a/{f}"))).unwrap_or_default();
            let b = std::fs::read(p(&format!("b/{f}"))).unwrap_or_default();
            !a.is_empty() && a == b
        })
        .collect();
    let identical = same.iter().filter(|&&s| s).count();
    verdict(
        14,
        "determinism",
        codes.iter().all(|c| *c == Some(0)) && identical == files.len(),
        &format!("{identical}/{} outputs byte-identical across reruns (bench with 1 and 3 jobs), exit codes {codes:?}", files.len()),
    );
}

#[test]
fn scenario_directory_solves_with_rollout_kinds() {
    // Every shipped scenario converges from its own guess with the
    // feasibility and multiple-shooting rollouts.
    for name in ["lift_payload", "sphere_payload", "hopper", "walker", "double_pendulum"] {
        let s = scenario(name);
        let data = synthesize_data(&s, 0).unwrap();
        let problem = build_problem(&s, &data, ParamChart::LogCholesky, &s.theta_init).unwrap();
        for rollout in [RolloutKind::Feasibility, RolloutKind::Multiple] {
            let init = problem.iterate_from_states(measured_states(&s, &data));
            let out = solve(&problem.problem, init, &SolverConfig { rollout, ..SolverConfig::default() }).unwrap();
            assert!(out.status.is_converged() && out.cost < 1e-12, "{name} {rollout:?}: {:?} cost {}", out.status, out.cost);
        }
    }
}
