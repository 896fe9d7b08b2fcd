use super::lq::{random_lq_problem, LqDims};
use super::*;
use nalgebra::{DMatrix, DVector};

/// Direction from the stacked equality-constrained quadratic program, solved densely.
pub(crate) fn dense_direction(problem: &ShootingProblem, exp: &Expansions, theta: &DVector<f64>) -> Direction {
    let n = exp.nodes.len();
    let (nx, nt) = (problem.nx, problem.ntheta);
    let nws: Vec<usize> = exp.nodes.iter().map(|e| e.f_w.ncols()).collect();
    let w_off: Vec<usize> = nws.iter().scan((n + 1) * nx, |acc, &w| {
        let o = *acc;
        *acc += w;
        Some(o)
    })
    .collect();
    let t_off = (n + 1) * nx + nws.iter().sum::<usize>();
    let nz = t_off + nt;
    let nc = n * nx;
    let mut h = DMatrix::zeros(nz, nz);
    let mut g = DVector::zeros(nz);
    let add = |c: &CostExpansion, xo: usize, wo: usize, nw: usize, h: &mut DMatrix<f64>, g: &mut DVector<f64>| {
        g.rows_mut(xo, nx).add_assign(&c.l_x);
        g.rows_mut(wo, nw).add_assign(&c.l_w);
        g.rows_mut(t_off, nt).add_assign(&c.l_theta);
        let mut blk = |r: usize, cc: usize, m: &DMatrix<f64>| {
            let mut v = h.view_mut((r, cc), m.shape());
            v += m;
        };
        blk(xo, xo, &c.l_xx);
        blk(wo, wo, &c.l_ww);
        blk(t_off, t_off, &c.l_thetatheta);
        blk(xo, wo, &c.l_xw);
        blk(wo, xo, &c.l_xw.transpose());
        blk(xo, t_off, &c.l_xtheta);
        blk(t_off, xo, &c.l_xtheta.transpose());
        blk(wo, t_off, &c.l_wtheta);
        blk(t_off, wo, &c.l_wtheta.transpose());
    };
    for (k, e) in exp.nodes.iter().enumerate() {
        add(&e.cost, k * nx, w_off[k], nws[k], &mut h, &mut g);
    }
    add(&exp.terminal, n * nx, t_off, 0, &mut h, &mut g);
    if let Some(p) = &problem.param_prior {
        g.rows_mut(t_off, nt).add_assign(&(&p.precision * (theta - &p.mean)));
        let mut v = h.view_mut((t_off, t_off), (nt, nt));
        v += &p.precision;
    }
    let mut a = DMatrix::zeros(nc, nz);
    let mut b = DVector::zeros(nc);
    for (k, e) in exp.nodes.iter().enumerate() {
        let r = k * nx;
        a.view_mut((r, (k + 1) * nx), (nx, nx)).fill_with_identity();
        a.view_mut((r, k * nx), (nx, nx)).copy_from(&(-&e.f_x));
        a.view_mut((r, w_off[k]), (nx, nws[k])).copy_from(&(-&e.f_w));
        a.view_mut((r, t_off), (nx, nt)).copy_from(&(-&e.f_theta));
        b.rows_mut(r, nx).copy_from(&e.gap);
    }
    let mut kkt = DMatrix::zeros(nz + nc, nz + nc);
    kkt.view_mut((0, 0), (nz, nz)).copy_from(&h);
    kkt.view_mut((0, nz), (nz, nc)).copy_from(&a.transpose());
    kkt.view_mut((nz, 0), (nc, nz)).copy_from(&a);
    let mut rhs = DVector::zeros(nz + nc);
    rhs.rows_mut(0, nz).copy_from(&(-g));
    rhs.rows_mut(nz, nc).copy_from(&b);
    let sol = kkt.lu().solve(&rhs).expect("nonsingular KKT");
    Direction {
        dxs: (0..=n).map(|k| sol.rows(k * nx, nx).into_owned()).collect(),
        dws: (0..n).map(|k| sol.rows(w_off[k], nws[k]).into_owned()).collect(),
        dtheta: sol.rows(t_off, nt).into_owned(),
    }
}

use std::ops::AddAssign;

fn dir_diff(a: &Direction, b: &Direction) -> f64 {
    let mut m: f64 = (&a.dtheta - &b.dtheta).amax();
    for (x, y) in a.dxs.iter().zip(&b.dxs) {
        m = m.max((x - y).amax());
    }
    for (x, y) in a.dws.iter().zip(&b.dws) {
        m = m.max((x - y).amax());
    }
    m
}

pub(crate) fn riccati_direction(problem: &ShootingProblem, it: &Iterate, method: ArrivalMethod) -> Result<(Direction, Expansions), SolverError> {
    let exp = compute_node_expansions(problem, it)?;
    let mut bp = backward_pass(problem, &exp, 0.0)?;
    let v = arrival_value(problem, &bp, &it.theta);
    let arr = solve_arrival(&v, method, 1e-8)?;
    set_feedforward(&mut bp, &arr.dtheta);
    Ok((linear_direction(&exp, &bp, &arr), exp))
}

fn dims(seed: u64) -> LqDims {
    LqDims { horizon: 1 + (seed as usize % 8), nx: 1 + (seed as usize % 4), nw: 1 + (seed as usize / 3 % 3), ntheta: 1 + (seed as usize % 3), nz: 2 }
}

#[test]
fn riccati_matches_dense_kkt() {
    for seed in 0..40 {
        let (problem, it) = random_lq_problem(seed, dims(seed), seed % 2 == 0, seed % 3 == 0);
        let (d, exp) = riccati_direction(&problem, &it, ArrivalMethod::Schur).unwrap();
        let dense = dense_direction(&problem, &exp, &it.theta);
        assert!(dir_diff(&d, &dense) < 1e-8, "seed {seed}: {}", dir_diff(&d, &dense));
        let (dn, _) = riccati_direction(&problem, &it, ArrivalMethod::Nullspace).unwrap();
        assert!(dir_diff(&d, &dn) < 1e-9);
    }
}

#[test]
fn cross_term_identity() {
    let (problem, it) = random_lq_problem(3, LqDims { horizon: 5, nx: 3, nw: 2, ntheta: 2, nz: 2 }, true, false);
    let exp = compute_node_expansions(&problem, &it).unwrap();
    let bp = backward_pass(&problem, &exp, 0.0).unwrap();
    for (q, p) in bp.q_terms.iter().zip(&bp.policies) {
        assert!((&q.q_xw * &p.k_theta - p.k_x.transpose() * &q.q_wtheta).amax() < 1e-10);
    }
}

fn value(vx: f64, vt: f64, vxx: f64, vxt: f64, vtt: f64) -> ValueExpansion {
    ValueExpansion {
        v_x: DVector::from_element(1, vx),
        v_theta: DVector::from_element(1, vt),
        v_xx: DMatrix::from_element(1, 1, vxx),
        v_xtheta: DMatrix::from_element(1, 1, vxt),
        v_thetatheta: DMatrix::from_element(1, 1, vtt),
        dv1: 0.0,
        dv2: 0.0,
    }
}

#[test]
fn arrival_examples() {
    let a = solve_arrival_schur(&value(0.0, 1.0, 1.0, 0.0, 1.0), 1e-8).unwrap();
    assert_eq!(a.dtheta[0], -1.0);
    assert_eq!(a.dx0[0], 0.0);
    assert!(matches!(solve_arrival_schur(&value(0.0, 1.0, 1.0, 0.0, 1e-12), 1e-8), Ok(_)));
    let mut v = value(0.0, 1.0, 1.0, 0.0, 1.0);
    v.v_theta = DVector::from_vec(vec![1.0, 0.0]);
    v.v_xtheta = DMatrix::zeros(1, 2);
    v.v_thetatheta = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 1e-12]));
    assert!(matches!(solve_arrival_schur(&v, 1e-8), Err(SolverError::SingularParameterHessian { .. })));
    v.v_thetatheta = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 0.0]));
    let n = solve_arrival_nullspace(&v, 1e-8).unwrap();
    assert!((n.dtheta - DVector::from_vec(vec![-1.0, 0.0])).amax() < 1e-15);
    assert_eq!(n.rank, 1);
    v.v_thetatheta = DMatrix::zeros(2, 2);
    v.v_x[0] = 2.0;
    v.v_xx[(0, 0)] = 4.0;
    let n = solve_arrival_nullspace(&v, 1e-8).unwrap();
    assert_eq!(n.dtheta, DVector::zeros(2));
    assert_eq!(n.dx0[0], -0.5);
}

#[test]
fn merit_examples() {
    let (_, nu) = merit_and_penalty(0.0, 10.0, 1.0, -10.0, 0.3, 0.5);
    assert_eq!(nu, 0.5);
    let (_, nu) = merit_and_penalty(0.0, 1.0, 1.0, 7.0, 0.3, 0.5);
    assert!((nu - 10.0).abs() < 1e-12);
    let (phi, nu) = merit_and_penalty(3.5, 0.0, 2.0, 7.0, 0.3, 0.5);
    assert_eq!((phi, nu), (3.5, 1.0));
}

#[test]
fn gap_contraction_under_feasibility_rollout() {
    let (problem, it) = random_lq_problem(7, LqDims { horizon: 6, nx: 3, nw: 2, ntheta: 2, nz: 2 }, true, true);
    let exp = compute_node_expansions(&problem, &it).unwrap();
    let mut bp = backward_pass(&problem, &exp, 0.0).unwrap();
    let v = arrival_value(&problem, &bp, &it.theta);
    let arr = solve_arrival_schur(&v, 1e-8).unwrap();
    set_feedforward(&mut bp, &arr.dtheta);
    for alpha in [1.0, 0.5, 0.25] {
        let cand = rollout_feasibility(&problem, &it, &exp, &bp, &arr, alpha).unwrap();
        let gaps = problem.gaps(&cand).unwrap();
        for (g, e) in gaps.iter().zip(&exp.nodes) {
            assert!((g - &e.gap * (1.0 - alpha)).amax() < 1e-10);
        }
    }
}

#[test]
fn expected_improvement_is_exact_on_lq() {
    for seed in 0..20 {
        let (problem, it) = random_lq_problem(seed, dims(seed), true, seed % 2 == 1);
        let exp = compute_node_expansions(&problem, &it).unwrap();
        let mut bp = backward_pass(&problem, &exp, 0.0).unwrap();
        let v = arrival_value(&problem, &bp, &it.theta);
        let arr = solve_arrival_schur(&v, 1e-8).unwrap();
        set_feedforward(&mut bp, &arr.dtheta);
        let d = linear_direction(&exp, &bp, &arr);
        let model = direct_model(&problem, &exp, &d, &it.theta);
        let c0 = problem.total_cost(&it);
        for alpha in [1.0, 0.5, 0.125] {
            let cand = rollout_multiple_shooting(&problem, &it, &d, alpha);
            let real = problem.total_cost(&cand) - c0;
            assert!((model.eval(alpha) - real).abs() < 1e-8 * c0.abs().max(1.0), "seed {seed}");
        }
    }
}

#[test]
fn lq_solves_in_one_iteration() {
    for seed in 0..10 {
        let (problem, it) = random_lq_problem(seed, dims(seed), true, false);
        let out = solve(&problem, it.clone(), &SolverConfig { tol_grad: 1e-8, ..SolverConfig::default() }).unwrap();
        assert!(out.status.is_converged(), "seed {seed}: {:?}", out.status);
        assert_eq!(out.iterations, 1, "seed {seed}");
        assert!(out.max_gap < 1e-10);
    }
}

#[test]
fn deterministic_traces() {
    let (problem, it) = random_lq_problem(1, LqDims { horizon: 8, nx: 4, nw: 2, ntheta: 3, nz: 3 }, true, true);
    let cfg = SolverConfig { rollout: RolloutKind::Feasibility, ..SolverConfig::default() };
    let a = solve(&problem, it.clone(), &cfg).unwrap().trace.to_csv_string();
    let b = solve(&problem, it, &cfg).unwrap().trace.to_csv_string();
    assert_eq!(a, b);
    assert!(a.starts_with("iter,cost,gap_l1,dtheta_norm,alpha,mu,nu,accepted\n"));
}

#[test]
fn stationary_point_gives_zero_step() {
    let (problem, it) = random_lq_problem(2, LqDims { horizon: 4, nx: 2, nw: 2, ntheta: 1, nz: 2 }, true, false);
    let out = solve(&problem, it, &SolverConfig::default()).unwrap();
    let (d, _) = riccati_direction(&problem, &out.iterate, ArrivalMethod::Schur).unwrap();
    assert!(d.max_norm() < 1e-9);
    let again = solve(&problem, out.iterate, &SolverConfig::default()).unwrap();
    assert!(again.iterations <= 1);
}

#[test]
fn riccati_model_agrees_on_feasible_iterates() {
    for prior in [false, true] {
        let (problem, mut it) = random_lq_problem(5, LqDims { horizon: 5, nx: 3, nw: 2, ntheta: 2, nz: 2 }, prior, false);
        problem.make_feasible(&mut it).unwrap();
        let exp = compute_node_expansions(&problem, &it).unwrap();
        let mut bp = backward_pass(&problem, &exp, 0.0).unwrap();
        let v = arrival_value(&problem, &bp, &it.theta);
        let arr = solve_arrival_schur(&v, 1e-8).unwrap();
        set_feedforward(&mut bp, &arr.dtheta);
        let d = linear_direction(&exp, &bp, &arr);
        let direct = direct_model(&problem, &exp, &d, &it.theta);
        let riccati = riccati_model(&exp, &bp, &v, &arr);
        assert!((direct.linear - riccati.linear).abs() < 1e-9);
        assert!((direct.quadratic - riccati.quadratic).abs() < 1e-9);
    }
}
