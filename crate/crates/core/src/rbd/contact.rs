//! Bilateral planar point contacts: constrained forward dynamics and impulses.
//!
//! Both problems share the saddle system
//!
//! ```text
//! [ M  −Jᵀ ] [x]   [r1]
//! [ J   0  ] [y] = [r2]
//! ```
//!
//! solved with a Cholesky factor of `M` and of the Schur complement `J M⁻¹ Jᵀ`.

use super::dynamics::{bias_forces, check_dims, cholesky, contact_drift, contact_jacobian, mass_matrix};
use super::model::RobotModel;
use super::RbdError;
use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

/// Relative singular-value threshold below which a contact Jacobian is rejected.
pub const CONTACT_RANK_TOL: f64 = 1e-8;

/// Active contact points, two constraint rows (world x, world z) each.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct ContactSet {
    pub active: Vec<usize>,
}

impl ContactSet {
    pub fn none() -> Self {
        ContactSet { active: Vec::new() }
    }

    pub fn new(active: Vec<usize>) -> Self {
        ContactSet { active }
    }

    pub fn nc(&self) -> usize {
        2 * self.active.len()
    }

    pub fn is_empty(&self) -> bool {
        self.active.is_empty()
    }

    pub(crate) fn validate(&self, model: &RobotModel) -> Result<(), RbdError> {
        match self.active.iter().find(|&&k| k >= model.contacts().len()) {
            Some(k) => Err(RbdError::InvalidModel(format!("contact {k} does not exist"))),
            None => Ok(()),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ContactSolution {
    /// Acceleration (or post-impact velocity for impulses).
    pub a: DVector<f64>,
    /// Contact forces (or impulses), two per active contact.
    pub lambda: DVector<f64>,
}

/// Factored saddle system at a configuration.
#[derive(Clone, Debug)]
pub struct KktSystem {
    pub mass: DMatrix<f64>,
    pub jacobian: DMatrix<f64>,
    chol_m: Cholesky<f64, Dyn>,
    minv_jt: DMatrix<f64>,
    chol_s: Option<Cholesky<f64, Dyn>>,
}

impl KktSystem {
    pub fn new(model: &RobotModel, q: &DVector<f64>, contacts: &ContactSet) -> Result<Self, RbdError> {
        contacts.validate(model)?;
        let mass = mass_matrix(model, q);
        let jacobian = contact_jacobian(model, q, &contacts.active);
        Self::from_parts(mass, jacobian)
    }

    pub fn from_parts(mass: DMatrix<f64>, jacobian: DMatrix<f64>) -> Result<Self, RbdError> {
        if !jacobian.iter().all(|x| x.is_finite()) {
            return Err(RbdError::NonFiniteData("contact Jacobian".into()));
        }
        let chol_m = cholesky(mass.clone())?;
        if jacobian.nrows() == 0 {
            let minv_jt = DMatrix::zeros(mass.nrows(), 0);
            return Ok(KktSystem { mass, jacobian, chol_m, minv_jt, chol_s: None });
        }
        if jacobian.nrows() > jacobian.ncols() {
            return Err(RbdError::RankDeficientContact(0.0));
        }
        let sv = jacobian.singular_values();
        let (smax, smin) = (sv.max(), sv.min());
        if !(smax > 0.0) || smin / smax < CONTACT_RANK_TOL {
            return Err(RbdError::RankDeficientContact(if smax > 0.0 { smin / smax } else { 0.0 }));
        }
        let minv_jt = chol_m.solve(&jacobian.transpose());
        let schur = &jacobian * &minv_jt;
        let schur = (&schur + schur.transpose()) * 0.5;
        let chol_s = Cholesky::new(schur).ok_or(RbdError::RankDeficientContact(smin / smax))?;
        Ok(KktSystem { mass, jacobian, chol_m, minv_jt, chol_s: Some(chol_s) })
    }

    pub fn nv(&self) -> usize {
        self.mass.nrows()
    }

    pub fn nc(&self) -> usize {
        self.jacobian.nrows()
    }

    /// Solves the saddle system for several right-hand sides at once.
    pub fn solve_matrix(&self, r1: &DMatrix<f64>, r2: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
        let minv_r1 = self.chol_m.solve(r1);
        match &self.chol_s {
            None => (minv_r1, DMatrix::zeros(0, r1.ncols())),
            Some(chol_s) => {
                let y = chol_s.solve(&(r2 - &self.jacobian * &minv_r1));
                let x = minv_r1 + &self.minv_jt * &y;
                (x, y)
            }
        }
    }

    pub fn solve(&self, r1: &DVector<f64>, r2: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
        let r1m = DMatrix::from_column_slice(r1.len(), 1, r1.as_slice());
        let r2m = DMatrix::from_column_slice(r2.len(), 1, r2.as_slice());
        let (x, y) = self.solve_matrix(&r1m, &r2m);
        (x.column(0).into_owned(), y.column(0).into_owned())
    }

    /// Solves `M x = r` (free dynamics).
    pub fn solve_mass(&self, r: &DMatrix<f64>) -> DMatrix<f64> {
        self.chol_m.solve(r)
    }
}

/// Constrained forward dynamics: `M a − Jᵀλ = τ − h`, `J a = −a_c`.
pub fn contact_dynamics(
    model: &RobotModel,
    q: &DVector<f64>,
    v: &DVector<f64>,
    tau: &DVector<f64>,
    contacts: &ContactSet,
) -> Result<ContactSolution, RbdError> {
    solve_contact(model, q, v, tau, contacts).map(|(s, _)| s)
}

pub(crate) fn solve_contact(
    model: &RobotModel,
    q: &DVector<f64>,
    v: &DVector<f64>,
    tau: &DVector<f64>,
    contacts: &ContactSet,
) -> Result<(ContactSolution, KktSystem), RbdError> {
    check_dims(model, &[("q", q), ("v", v), ("tau", tau)])?;
    let kkt = KktSystem::new(model, q, contacts)?;
    let rhs = tau - bias_forces(model, q, v);
    let drift = -contact_drift(model, q, v, &contacts.active);
    let (a, lambda) = kkt.solve(&rhs, &drift);
    if !a.iter().chain(lambda.iter()).all(|x| x.is_finite()) {
        return Err(RbdError::NonFiniteData("contact dynamics solution".into()));
    }
    Ok((ContactSolution { a, lambda }, kkt))
}

/// Inelastic impulse: `M(v⁺ − v⁻) = JᵀΛ`, `J v⁺ = 0`. Returns `(v⁺, Λ)` in a
/// [`ContactSolution`].
pub fn impulse_dynamics(
    model: &RobotModel,
    q: &DVector<f64>,
    v_minus: &DVector<f64>,
    contacts: &ContactSet,
) -> Result<ContactSolution, RbdError> {
    solve_impulse(model, q, v_minus, contacts).map(|(s, _)| s)
}

pub(crate) fn solve_impulse(
    model: &RobotModel,
    q: &DVector<f64>,
    v_minus: &DVector<f64>,
    contacts: &ContactSet,
) -> Result<(ContactSolution, KktSystem), RbdError> {
    check_dims(model, &[("q", q), ("v_minus", v_minus)])?;
    let kkt = KktSystem::new(model, q, contacts)?;
    let rhs = &kkt.mass * v_minus;
    let (a, lambda) = kkt.solve(&rhs, &DVector::zeros(contacts.nc()));
    Ok((ContactSolution { a, lambda }, kkt))
}
