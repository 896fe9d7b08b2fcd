//! Independent oracles for the integration tests: finite differences, dense
//! saddle solves, the dense stacked KKT system of one estimation step and a
//! condensed least-squares solve of linear-Gaussian problems.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use parest::rbd::RobotModel;
use parest::solver::{CostExpansion, CostTerm, Direction, Expansions, ShootingProblem};
use std::io::Write;
use std::path::PathBuf;

pub fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data")
}

pub fn model(name: &str) -> RobotModel {
    RobotModel::from_file(data_dir().join("models").join(format!("{name}.json"))).unwrap()
}

/// Three revolute links with non-parallel axes.
pub fn chain3() -> RobotModel {
    RobotModel::from_json_str(
        r#"{
        "name": "chain3",
        "bodies": [
          { "parent": null, "joint": { "type": "revolute", "axis": [0, 0, 1] },
            "inertia": [1.2, 0, 0, -0.3, 0.1, 0, 0.1, 0, 0, 0.0012] },
          { "parent": 0, "joint": { "type": "revolute", "axis": [0, 1, 0] }, "placement": { "xyz": [0, 0, -0.5] },
            "inertia": [0.9, 0, 0, -0.18, 0.048, 0, 0.048, 0, 0, 0.0009] },
          { "parent": 1, "joint": { "type": "revolute", "axis": [1, 0, 0.3] }, "placement": { "xyz": [0, 0.05, -0.4] },
            "inertia": [0.6, 0, 0, -0.09, 0.018, 0, 0.018, 0, 0, 0.0006] }
        ],
        "contacts": [ { "name": "tip", "body": 2, "offset": [0, 0, -0.3] } ]
      }"#,
    )
    .unwrap()
}

/// Prints a line that survives the test harness' output capture.
pub fn report(line: &str) {
    let mut err = std::io::stderr().lock();
    let _ = writeln!(err, "{line}");
}

/// Prints the verdict of one acceptance criterion and fails the test if it
/// did not pass.
pub fn verdict(id: u32, name: &str, pass: bool, detail: &str) {
    report(&format!("criterion {id:>2} [{}] {name}: {detail}", if pass { "PASS" } else { "FAIL" }));
    assert!(pass, "criterion {id} ({name}) failed: {detail}");
}

/// `‖a − b‖∞ / (1 + ‖b‖∞)`.
pub fn rel_err(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).amax() / (1.0 + b.amax())
}

/// Central differences of `f` at `x` with step `h`.
pub fn central_jacobian<F>(x: &DVector<f64>, h: f64, mut f: F) -> DMatrix<f64>
where
    F: FnMut(&DVector<f64>) -> DVector<f64>,
{
    let m = f(x).len();
    let mut out = DMatrix::zeros(m, x.len());
    for j in 0..x.len() {
        let mut p = x.clone();
        p[j] += h;
        let fp = f(&p);
        p[j] -= 2.0 * h;
        let fm = f(&p);
        out.set_column(j, &((fp - fm) / (2.0 * h)));
    }
    out
}

/// Solves `[M −Jᵀ; J 0] [a; λ] = [r₁; r₂]` by dense LU.
pub fn dense_saddle(m: &DMatrix<f64>, j: &DMatrix<f64>, r1: &DVector<f64>, r2: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
    let (n, c) = (m.nrows(), j.nrows());
    let mut k = DMatrix::zeros(n + c, n + c);
    k.view_mut((0, 0), (n, n)).copy_from(m);
    k.view_mut((0, n), (n, c)).copy_from(&(-j.transpose()));
    k.view_mut((n, 0), (c, n)).copy_from(j);
    let mut rhs = DVector::zeros(n + c);
    rhs.rows_mut(0, n).copy_from(r1);
    rhs.rows_mut(n, c).copy_from(r2);
    let s = k.lu().solve(&rhs).expect("nonsingular saddle matrix");
    (s.rows(0, n).into_owned(), s.rows(n, c).into_owned())
}

/// Step of the equality-constrained quadratic program built from the node
/// expansions, solved as one dense KKT system over all states, uncertainties
/// and parameters.
pub fn dense_direction(problem: &ShootingProblem, exp: &Expansions, theta: &DVector<f64>) -> Direction {
    let n = exp.nodes.len();
    let (nx, nt) = (problem.nx, problem.ntheta);
    let nws: Vec<usize> = exp.nodes.iter().map(|e| e.f_w.ncols()).collect();
    let mut w_off = Vec::with_capacity(n);
    let mut acc = (n + 1) * nx;
    for &w in &nws {
        w_off.push(acc);
        acc += w;
    }
    let t_off = acc;
    let nz = t_off + nt;
    let nc = n * nx;
    let mut h = DMatrix::zeros(nz, nz);
    let mut g = DVector::zeros(nz);
    let mut add = |c: &CostExpansion, xo: usize, wo: usize, nw: usize| {
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
        let mut gx = g.rows_mut(xo, nx);
        gx += &c.l_x;
        let mut gw = g.rows_mut(wo, nw);
        gw += &c.l_w;
        let mut gt = g.rows_mut(t_off, nt);
        gt += &c.l_theta;
    };
    for (k, e) in exp.nodes.iter().enumerate() {
        add(&e.cost, k * nx, w_off[k], nws[k]);
    }
    add(&exp.terminal, n * nx, t_off, 0);
    if let Some(p) = &problem.param_prior {
        let mut gt = g.rows_mut(t_off, nt);
        gt += &p.precision * (theta - &p.mean);
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
    let sol = kkt.lu().solve(&rhs).expect("nonsingular KKT matrix");
    Direction {
        dxs: (0..=n).map(|k| sol.rows(k * nx, nx).into_owned()).collect(),
        dws: (0..n).map(|k| sol.rows(w_off[k], nws[k]).into_owned()).collect(),
        dtheta: sol.rows(t_off, nt).into_owned(),
    }
}

pub fn direction_diff(a: &Direction, b: &Direction) -> f64 {
    let mut m: f64 = (&a.dtheta - &b.dtheta).amax();
    for (x, y) in a.dxs.iter().zip(&b.dxs).chain(a.dws.iter().zip(&b.dws)) {
        m = m.max((x - y).amax());
    }
    m
}

/// Minimizer of a problem with affine transitions and residuals on Euclidean
/// states, found by eliminating the states (`x_k` as an affine function of
/// `x₀`, the uncertainties and `θ`) and solving the stacked weighted least
/// squares by SVD. Returns `(states, uncertainties, θ)`.
pub fn condensed_least_squares(problem: &ShootingProblem) -> (Vec<DVector<f64>>, Vec<DVector<f64>>, DVector<f64>) {
    let (nx, nt) = (problem.nx, problem.ntheta);
    let n = problem.nodes.len();
    let nws: Vec<usize> = problem.nodes.iter().map(|n| n.nw()).collect();
    let nw_total: usize = nws.iter().sum();
    let nz = nx + nw_total + nt;
    let t_off = nx + nw_total;
    // x_k = G_k z + c_k
    let mut gs = vec![DMatrix::zeros(nx, nz)];
    gs[0].view_mut((0, 0), (nx, nx)).fill_with_identity();
    let mut cs = vec![DVector::zeros(nx)];
    let mut w_off = Vec::with_capacity(n);
    let mut off = nx;
    for (k, node) in problem.nodes.iter().enumerate() {
        w_off.push(off);
        let zero_w = DVector::zeros(nws[k]);
        let lin = node.dynamics.linearize(&DVector::zeros(nx), &zero_w, &DVector::zeros(nt)).unwrap();
        let mut g = &lin.f_x * &gs[k];
        {
            let mut gw = g.view_mut((0, off), (nx, nws[k]));
            gw += &lin.f_w;
            let mut gt = g.view_mut((0, t_off), (nx, nt));
            gt += &lin.f_theta;
        }
        cs.push(&lin.f_x * &cs[k] + &lin.next);
        gs.push(g);
        off += nws[k];
    }
    let mut rows: Vec<DMatrix<f64>> = Vec::new();
    let mut rhs: Vec<DVector<f64>> = Vec::new();
    let mut push = |a: DMatrix<f64>, r0: DVector<f64>, weight: &DMatrix<f64>| {
        // ½‖a z + r0‖²_W = ½‖Lᵀ(a z + r0)‖² with W = L Lᵀ.
        let l = weight.clone().cholesky().expect("positive definite weight").l();
        rows.push(l.transpose() * a);
        rhs.push(-(l.transpose() * r0));
    };
    let mut term = |t: &CostTerm, g: &DMatrix<f64>, c: &DVector<f64>, wo: usize, nw: usize| {
        let e = t.residual.eval(&DVector::zeros(nx), &DVector::zeros(nw), &DVector::zeros(nt));
        let mut a = &e.r_x * g;
        {
            let mut aw = a.view_mut((0, wo), (e.r_w.nrows(), nw));
            aw += &e.r_w;
            let mut at = a.view_mut((0, t_off), (e.r_theta.nrows(), nt));
            at += &e.r_theta;
        }
        let r0 = &e.r + &e.r_x * c;
        push(a, r0, &t.weight);
    };
    for (k, node) in problem.nodes.iter().enumerate() {
        for t in &node.costs {
            term(t, &gs[k], &cs[k], w_off[k], nws[k]);
        }
    }
    for t in &problem.terminal {
        term(t, &gs[n], &cs[n], 0, 0);
    }
    let mut a0 = DMatrix::zeros(nx, nz);
    a0.view_mut((0, 0), (nx, nx)).fill_with_identity();
    push(a0, -problem.arrival.mean.clone(), &problem.arrival.precision);
    if let Some(p) = &problem.param_prior {
        let mut ap = DMatrix::zeros(nt, nz);
        ap.view_mut((0, t_off), (nt, nt)).fill_with_identity();
        push(ap, -p.mean.clone(), &p.precision);
    }
    let m: usize = rows.iter().map(|r| r.nrows()).sum();
    let mut a = DMatrix::zeros(m, nz);
    let mut b = DVector::zeros(m);
    let mut r = 0;
    for (blk, v) in rows.iter().zip(&rhs) {
        a.view_mut((r, 0), blk.shape()).copy_from(blk);
        b.rows_mut(r, v.len()).copy_from(v);
        r += blk.nrows();
    }
    let z = a.svd(true, true).solve(&b, 1e-14).expect("least-squares solve");
    let xs = (0..=n).map(|k| &gs[k] * &z + &cs[k]).collect();
    let ws = (0..n).map(|k| z.rows(w_off[k], nws[k]).into_owned()).collect();
    (xs, ws, z.rows(t_off, nt).into_owned())
}
