//! Node expansions, the parametrized Riccati recursion, arrival-node solves and
//! the linear search direction.

use super::problem::{par_map, CostExpansion, Iterate, ShootingProblem};
use super::SolverError;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq)]
pub struct NodeExpansion {
    pub cost: CostExpansion,
    pub f_x: DMatrix<f64>,
    pub f_w: DMatrix<f64>,
    pub f_theta: DMatrix<f64>,
    /// `f̄ = f(x_k, w_k; θ) ⊖ x_{k+1}`; the linearized dynamics read
    /// `δx_{k+1} = f_x δx_k + f_w δw_k + f_θ δθ + f̄`.
    pub gap: DVector<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Expansions {
    pub nodes: Vec<NodeExpansion>,
    /// Expansion of the terminal cost on `x_N` (no uncertainty block).
    pub terminal: CostExpansion,
}

impl Expansions {
    pub fn max_gap(&self) -> f64 {
        self.nodes.iter().map(|n| n.gap.amax()).fold(0.0, f64::max)
    }
}

fn all_finite_matrix(m: &DMatrix<f64>) -> bool {
    m.iter().all(|x| x.is_finite())
}

fn expansion_is_finite(c: &CostExpansion) -> bool {
    c.l.is_finite()
        && c.l_x.iter().chain(c.l_w.iter()).chain(c.l_theta.iter()).all(|x| x.is_finite())
        && [&c.l_xx, &c.l_xw, &c.l_xtheta, &c.l_ww, &c.l_wtheta, &c.l_thetatheta].iter().all(|m| all_finite_matrix(m))
}

/// Linearizes every node at the iterate (in parallel) and adds the arrival
/// prior to node 0.
pub fn compute_node_expansions(problem: &ShootingProblem, it: &Iterate) -> Result<Expansions, SolverError> {
    problem.validate_iterate(it)?;
    let (nx, nt) = (problem.nx, problem.ntheta);
    let nodes: Result<Vec<NodeExpansion>, SolverError> = par_map(problem.nodes.len(), |k| {
        let node = &problem.nodes[k];
        let (x, w) = (&it.xs[k], &it.ws[k]);
        let lin = node.dynamics.linearize(x, w, &it.theta)?;
        let gap = problem.space.minus(&lin.next, &it.xs[k + 1]);
        let mut cost = CostExpansion::zeros(nx, node.nw(), nt);
        for term in &node.costs {
            cost.add_residual(&term.residual.eval(x, w, &it.theta), &term.weight);
        }
        let exp = NodeExpansion { cost, f_x: lin.f_x, f_w: lin.f_w, f_theta: lin.f_theta, gap };
        let finite = expansion_is_finite(&exp.cost)
            && all_finite_matrix(&exp.f_x)
            && all_finite_matrix(&exp.f_w)
            && all_finite_matrix(&exp.f_theta)
            && exp.gap.iter().all(|g| g.is_finite());
        if !finite {
            return Err(SolverError::NonFiniteData(format!("expansion of node {k}")));
        }
        Ok(exp)
    })
    .into_iter()
    .collect();
    let mut nodes = nodes?;
    let n = problem.nodes.len();
    let mut terminal = CostExpansion::zeros(nx, 0, nt);
    let empty = DVector::zeros(0);
    for term in &problem.terminal {
        terminal.add_residual(&term.residual.eval(&it.xs[n], &empty, &it.theta), &term.weight);
    }
    let r0 = problem.space.minus(&it.xs[0], &problem.arrival.mean);
    let p = &problem.arrival.precision;
    let target = if n == 0 { &mut terminal } else { &mut nodes[0].cost };
    target.l += 0.5 * r0.dot(&(p * &r0));
    target.l_x += p * &r0;
    target.l_xx += p;
    if !expansion_is_finite(&terminal) {
        return Err(SolverError::NonFiniteData("terminal expansion".into()));
    }
    Ok(Expansions { nodes, terminal })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ValueExpansion {
    pub v_x: DVector<f64>,
    pub v_theta: DVector<f64>,
    pub v_xx: DMatrix<f64>,
    pub v_xtheta: DMatrix<f64>,
    pub v_thetatheta: DMatrix<f64>,
    /// `−kᵀQ_w` of the node (zero at the terminal and reset nodes).
    pub dv1: f64,
    /// `kᵀQ_ww k`.
    pub dv2: f64,
}

/// Uncertainty policy `δw = −k − K δx − K_θ δθ`.
#[derive(Clone, Debug, PartialEq)]
pub struct NodePolicy {
    pub k: DVector<f64>,
    pub k_x: DMatrix<f64>,
    pub k_theta: DMatrix<f64>,
    /// `k̂ = k + K_θ δθ`, set once the arrival step is known.
    pub k_total: DVector<f64>,
}

/// Action-value terms of one node, kept for diagnostics.
#[derive(Clone, Debug, PartialEq)]
pub struct QTerms {
    pub q_x: DVector<f64>,
    pub q_w: DVector<f64>,
    pub q_theta: DVector<f64>,
    pub q_xx: DMatrix<f64>,
    pub q_xw: DMatrix<f64>,
    pub q_xtheta: DMatrix<f64>,
    pub q_ww: DMatrix<f64>,
    pub q_wtheta: DMatrix<f64>,
    pub q_thetatheta: DMatrix<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BackwardPass {
    pub policies: Vec<NodePolicy>,
    /// Value expansions at nodes `0..=N`; `values[0]` is the arrival node
    /// before the parameter prior is added.
    pub values: Vec<ValueExpansion>,
    pub q_terms: Vec<QTerms>,
    /// `max_k ‖Q_w‖∞`.
    pub q_w_norm: f64,
}

fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

/// Riccati recursion from the terminal node to node 0 with `μ` added to `Q_ww`.
pub fn backward_pass(problem: &ShootingProblem, exp: &Expansions, mu: f64) -> Result<BackwardPass, SolverError> {
    let n = exp.nodes.len();
    let t = &exp.terminal;
    let mut values = vec![
        ValueExpansion {
            v_x: t.l_x.clone(),
            v_theta: t.l_theta.clone(),
            v_xx: t.l_xx.clone(),
            v_xtheta: t.l_xtheta.clone(),
            v_thetatheta: t.l_thetatheta.clone(),
            dv1: 0.0,
            dv2: 0.0,
        };
        n + 1
    ];
    let mut policies = Vec::with_capacity(n);
    let mut q_terms = Vec::with_capacity(n);
    let mut q_w_norm: f64 = 0.0;
    for k in (0..n).rev() {
        let e = &exp.nodes[k];
        let c = &e.cost;
        let vn = &values[k + 1];
        let vx_plus = &vn.v_x + &vn.v_xx * &e.gap;
        let vt_plus = &vn.v_theta + vn.v_xtheta.tr_mul(&e.gap);
        let vxx_fx = &vn.v_xx * &e.f_x;
        let vxx_fw = &vn.v_xx * &e.f_w;
        let vxx_ft_vxt = &vn.v_xx * &e.f_theta + &vn.v_xtheta;
        let q = QTerms {
            q_x: &c.l_x + e.f_x.tr_mul(&vx_plus),
            q_w: &c.l_w + e.f_w.tr_mul(&vx_plus),
            q_theta: &c.l_theta + &vt_plus + e.f_theta.tr_mul(&vx_plus),
            q_xx: symmetrize(&c.l_xx + e.f_x.tr_mul(&vxx_fx)),
            q_xw: &c.l_xw + e.f_x.tr_mul(&vxx_fw),
            q_xtheta: &c.l_xtheta + e.f_x.tr_mul(&vxx_ft_vxt),
            q_ww: symmetrize(&c.l_ww + e.f_w.tr_mul(&vxx_fw)),
            q_wtheta: &c.l_wtheta + e.f_w.tr_mul(&vxx_ft_vxt),
            q_thetatheta: symmetrize(
                &c.l_thetatheta
                    + &vn.v_thetatheta
                    + e.f_theta.tr_mul(&vn.v_xtheta)
                    + vn.v_xtheta.tr_mul(&e.f_theta)
                    + e.f_theta.tr_mul(&(&vn.v_xx * &e.f_theta)),
            ),
        };
        let nw = q.q_w.len();
        let (policy, value) = if nw == 0 {
            let policy = NodePolicy {
                k: DVector::zeros(0),
                k_x: DMatrix::zeros(0, problem.nx),
                k_theta: DMatrix::zeros(0, problem.ntheta),
                k_total: DVector::zeros(0),
            };
            let value = ValueExpansion {
                v_x: q.q_x.clone(),
                v_theta: q.q_theta.clone(),
                v_xx: q.q_xx.clone(),
                v_xtheta: q.q_xtheta.clone(),
                v_thetatheta: q.q_thetatheta.clone(),
                dv1: 0.0,
                dv2: 0.0,
            };
            (policy, value)
        } else {
            q_w_norm = q_w_norm.max(q.q_w.amax());
            let reg = &q.q_ww + DMatrix::identity(nw, nw) * mu;
            let chol = reg.cholesky().ok_or_else(|| SolverError::NotPositiveDefinite(format!("Q_ww at node {k}")))?;
            let kk = chol.solve(&q.q_w);
            let k_x = chol.solve(&q.q_xw.transpose());
            let k_theta = chol.solve(&q.q_wtheta);
            let value = ValueExpansion {
                v_x: &q.q_x - &q.q_xw * &kk,
                v_theta: &q.q_theta - q.q_wtheta.tr_mul(&kk),
                v_xx: symmetrize(&q.q_xx - &q.q_xw * &k_x),
                v_xtheta: &q.q_xtheta - &q.q_xw * &k_theta,
                v_thetatheta: symmetrize(&q.q_thetatheta - q.q_wtheta.tr_mul(&k_theta)),
                dv1: -kk.dot(&q.q_w),
                dv2: kk.dot(&(&q.q_ww * &kk)),
            };
            (NodePolicy { k: kk, k_x, k_theta, k_total: DVector::zeros(nw) }, value)
        };
        let finite = value.v_x.iter().chain(value.v_theta.iter()).all(|x| x.is_finite())
            && all_finite_matrix(&value.v_xx)
            && all_finite_matrix(&value.v_thetatheta)
            && all_finite_matrix(&value.v_xtheta);
        if !finite {
            return Err(SolverError::NonFiniteData(format!("value expansion at node {k}")));
        }
        values[k] = value;
        policies.push(policy);
        q_terms.push(q);
    }
    policies.reverse();
    q_terms.reverse();
    Ok(BackwardPass { policies, values, q_terms, q_w_norm })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArrivalMethod {
    Schur,
    Nullspace,
}

impl ArrivalMethod {
    pub fn name(&self) -> &'static str {
        match self {
            ArrivalMethod::Schur => "schur",
            ArrivalMethod::Nullspace => "nullspace",
        }
    }
}

impl std::fmt::Display for ArrivalMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for ArrivalMethod {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "schur" => Ok(ArrivalMethod::Schur),
            "nullspace" => Ok(ArrivalMethod::Nullspace),
            _ => Err(format!("unknown arrival method '{s}' (expected schur or nullspace)")),
        }
    }
}

/// Value expansion at the arrival node including the parameter prior (the
/// "•" quantities).
pub fn arrival_value(problem: &ShootingProblem, bp: &BackwardPass, theta: &DVector<f64>) -> ValueExpansion {
    let mut v = bp.values[0].clone();
    if let Some(p) = &problem.param_prior {
        v.v_theta += &p.precision * (theta - &p.mean);
        v.v_thetatheta += &p.precision;
    }
    v
}

#[derive(Clone, Debug, PartialEq)]
pub struct ArrivalSolution {
    pub dx0: DVector<f64>,
    pub dtheta: DVector<f64>,
    pub k_theta: DVector<f64>,
    pub k_theta_x: DMatrix<f64>,
    pub method: ArrivalMethod,
    /// Number of parameter directions kept (rank of `V_θθ•` at `ε_rank`).
    pub rank: usize,
    /// Orthonormal basis of the discarded directions (`nθ × (nθ − rank)`).
    pub null_basis: DMatrix<f64>,
}

fn arrival_with_basis(v: &ValueExpansion, y: &DMatrix<f64>) -> Result<(DVector<f64>, DVector<f64>, DVector<f64>, DMatrix<f64>), SolverError> {
    let vtt = symmetrize(y.tr_mul(&(&v.v_thetatheta * y)));
    let vt = y.tr_mul(&v.v_theta);
    let vxt = &v.v_xtheta * y;
    let r = y.ncols();
    let (k_y, kx_y) = if r == 0 {
        (DVector::zeros(0), DMatrix::zeros(0, v.v_x.len()))
    } else {
        let chol = vtt.cholesky().ok_or_else(|| SolverError::NotPositiveDefinite("reduced V_θθ".into()))?;
        (chol.solve(&vt), chol.solve(&vxt.transpose()))
    };
    let vx_hat = &v.v_x - &vxt * &k_y;
    let vxx_hat = symmetrize(&v.v_xx - &vxt * &kx_y);
    let chol_x = vxx_hat.cholesky().ok_or_else(|| SolverError::NotPositiveDefinite("arrival Schur complement V_xx̂".into()))?;
    let dx0 = -chol_x.solve(&vx_hat);
    let dty = -&k_y - &kx_y * &dx0;
    Ok((dx0, y * dty, y * k_y, y * kx_y))
}

/// Arrival step by the Schur complement of `V_θθ•`.
pub fn solve_arrival_schur(v: &ValueExpansion, eps_rank: f64) -> Result<ArrivalSolution, SolverError> {
    let nt = v.v_theta.len();
    if nt > 0 {
        let eig = symmetrize(v.v_thetatheta.clone()).symmetric_eigenvalues();
        let (min, max) = (eig.min(), eig.max());
        if !min.is_finite() || !max.is_finite() {
            return Err(SolverError::NonFiniteData("V_θθ".into()));
        }
        if max <= 0.0 || min <= eps_rank * max {
            return Err(SolverError::SingularParameterHessian { min_eig: min, max_eig: max });
        }
    }
    let (dx0, dtheta, k_theta, k_theta_x) = arrival_with_basis(v, &DMatrix::identity(nt, nt))?;
    Ok(ArrivalSolution { dx0, dtheta, k_theta, k_theta_x, method: ArrivalMethod::Schur, rank: nt, null_basis: DMatrix::zeros(nt, 0) })
}

/// Arrival step restricted to the range of `V_θθ•`: eigenvalues at most
/// `ε_rank · λ_max` are treated as null directions and receive no step.
pub fn solve_arrival_nullspace(v: &ValueExpansion, eps_rank: f64) -> Result<ArrivalSolution, SolverError> {
    let nt = v.v_theta.len();
    if !all_finite_matrix(&v.v_thetatheta) {
        return Err(SolverError::NonFiniteData("V_θθ".into()));
    }
    let eig = symmetrize(v.v_thetatheta.clone()).symmetric_eigen();
    let max = eig.eigenvalues.iter().copied().fold(0.0, f64::max);
    let keep: Vec<usize> = (0..nt).filter(|&i| max > 0.0 && eig.eigenvalues[i] > eps_rank * max).collect();
    let drop: Vec<usize> = (0..nt).filter(|i| !keep.contains(i)).collect();
    let y = eig.eigenvectors.select_columns(&keep);
    let z = eig.eigenvectors.select_columns(&drop);
    let (dx0, dtheta, k_theta, k_theta_x) = arrival_with_basis(v, &y)?;
    Ok(ArrivalSolution { dx0, dtheta, k_theta, k_theta_x, method: ArrivalMethod::Nullspace, rank: keep.len(), null_basis: z })
}

pub fn solve_arrival(v: &ValueExpansion, method: ArrivalMethod, eps_rank: f64) -> Result<ArrivalSolution, SolverError> {
    match method {
        ArrivalMethod::Schur => solve_arrival_schur(v, eps_rank),
        ArrivalMethod::Nullspace => solve_arrival_nullspace(v, eps_rank),
    }
}

/// Caches `k̂ = k + K_θ δθ` in every policy.
pub fn set_feedforward(bp: &mut BackwardPass, dtheta: &DVector<f64>) {
    for p in &mut bp.policies {
        p.k_total = &p.k + &p.k_theta * dtheta;
    }
}

/// Full linear search direction.
#[derive(Clone, Debug, PartialEq)]
pub struct Direction {
    pub dxs: Vec<DVector<f64>>,
    pub dws: Vec<DVector<f64>>,
    pub dtheta: DVector<f64>,
}

impl Direction {
    pub fn max_norm(&self) -> f64 {
        self.dxs.iter().chain(self.dws.iter()).chain(std::iter::once(&self.dtheta)).map(|v| v.amax()).fold(0.0, f64::max)
    }
}

/// Propagates the arrival step through the policies and the linearized
/// dynamics.
pub fn linear_direction(exp: &Expansions, bp: &BackwardPass, arrival: &ArrivalSolution) -> Direction {
    let n = exp.nodes.len();
    let mut dxs = Vec::with_capacity(n + 1);
    let mut dws = Vec::with_capacity(n);
    dxs.push(arrival.dx0.clone());
    for k in 0..n {
        let e = &exp.nodes[k];
        let p = &bp.policies[k];
        let dx = &dxs[k];
        let dw = -(&p.k + &p.k_x * dx + &p.k_theta * &arrival.dtheta);
        let next = &e.f_x * dx + &e.f_w * &dw + &e.f_theta * &arrival.dtheta + &e.gap;
        dws.push(dw);
        dxs.push(next);
    }
    Direction { dxs, dws, dtheta: arrival.dtheta.clone() }
}

/// Quadratic model of the cost change along `α d`:
/// `Δℓ(α) = α gᵀd + ½ α² dᵀ H d`, assembled from the node expansions.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadraticModel {
    pub linear: f64,
    pub quadratic: f64,
}

impl QuadraticModel {
    pub fn eval(&self, alpha: f64) -> f64 {
        alpha * self.linear + 0.5 * alpha * alpha * self.quadratic
    }
}

pub fn direct_model(problem: &ShootingProblem, exp: &Expansions, d: &Direction, theta: &DVector<f64>) -> QuadraticModel {
    let dt = &d.dtheta;
    let term = |c: &CostExpansion, dx: &DVector<f64>, dw: &DVector<f64>| -> (f64, f64) {
        let lin = c.l_x.dot(dx) + c.l_w.dot(dw) + c.l_theta.dot(dt);
        let quad = dx.dot(&(&c.l_xx * dx))
            + dw.dot(&(&c.l_ww * dw))
            + dt.dot(&(&c.l_thetatheta * dt))
            + 2.0 * dx.dot(&(&c.l_xw * dw))
            + 2.0 * dx.dot(&(&c.l_xtheta * dt))
            + 2.0 * dw.dot(&(&c.l_wtheta * dt));
        (lin, quad)
    };
    let mut model = QuadraticModel { linear: 0.0, quadratic: 0.0 };
    for (k, e) in exp.nodes.iter().enumerate() {
        let (l, q) = term(&e.cost, &d.dxs[k], &d.dws[k]);
        model.linear += l;
        model.quadratic += q;
    }
    let (l, q) = term(&exp.terminal, &d.dxs[exp.nodes.len()], &DVector::zeros(0));
    model.linear += l;
    model.quadratic += q;
    if let Some(p) = &problem.param_prior {
        model.linear += (&p.precision * (theta - &p.mean)).dot(dt);
        model.quadratic += dt.dot(&(&p.precision * dt));
    }
    model
}

/// Expected improvement assembled from the Riccati accumulators:
/// `Δℓ(α) = α(ΔV₁^θ + ½αΔV₂^θ + Σ_k(Δℓ₁ₖ + ½αΔℓ₂ₖ))` with
/// `Δℓ₁ₖ = ΔV₁ₖ + f̄ₖᵀV_xₖ`, `Δℓ₂ₖ = ΔV₂ₖ + f̄ₖᵀV_xxₖ f̄ₖ`, where `f̄₀ = δx₀`
/// and `f̄ₖ` (k ≥ 1) is the gap entering node `k`.
pub fn riccati_model(exp: &Expansions, bp: &BackwardPass, v_arrival: &ValueExpansion, arrival: &ArrivalSolution) -> QuadraticModel {
    let dt = &arrival.dtheta;
    let f0 = &arrival.dx0;
    let mut linear = dt.dot(&v_arrival.v_theta);
    let mut quadratic = 2.0 * f0.dot(&(&v_arrival.v_xtheta * dt)) + dt.dot(&(&v_arrival.v_thetatheta * dt));
    for k in 0..=exp.nodes.len() {
        let v = if k == 0 { v_arrival } else { &bp.values[k] };
        let gap = if k == 0 { f0 } else { &exp.nodes[k - 1].gap };
        linear += v.dv1 + gap.dot(&v.v_x);
        quadratic += v.dv2 + gap.dot(&(&v.v_xx * gap));
    }
    QuadraticModel { linear, quadratic }
}
