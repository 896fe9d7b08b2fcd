//! Observation models on the state `x = (q, v)`.
//!
//! Every model selects coordinates of the state, so `h(x)` is linear and the
//! residual `h(x) ⊖ z̄` only wraps the planar pitch angles.

use super::ProblemError;
use crate::rbd::{wrap_angle, JointType, RobotModel};
use crate::solver::{Residual, ResidualEval};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ObservationKind {
    JointPosition,
    JointVelocity,
    /// Pitch of the planar base, compared as a wrapped angle.
    BaseOrientation,
    /// `(ẋ, ż, pitch rate)` of the planar base.
    BaseVelocity,
    FullState,
}

/// Observation covariance: one variance for every channel or one per channel.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Covariance {
    Isotropic(f64),
    Diagonal(Vec<f64>),
}

impl Covariance {
    pub fn diagonal(&self, n: usize) -> Result<DVector<f64>, ProblemError> {
        let d = match self {
            Covariance::Isotropic(s) => DVector::from_element(n, *s),
            Covariance::Diagonal(v) if v.len() == n => DVector::from_column_slice(v),
            Covariance::Diagonal(v) => {
                return Err(ProblemError::InvalidScenario(format!("covariance has {} entries for {n} channels", v.len())))
            }
        };
        if !d.iter().all(|s| s.is_finite() && *s > 0.0) {
            return Err(ProblemError::InvalidScenario("covariance entries must be positive and finite".into()));
        }
        Ok(d)
    }
}

/// Configuration of one observation stream.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObservationSpec {
    pub kind: ObservationKind,
    /// Joint indices for joint observations (all joints when absent).
    #[serde(default)]
    pub indices: Option<Vec<usize>>,
    pub cov: Covariance,
}

/// A resolved observation stream: selected state coordinates and covariance `Γ`.
#[derive(Clone, Debug, PartialEq)]
pub struct ObservationModel {
    pub kind: ObservationKind,
    /// Indices into the state vector.
    pub rows: Vec<usize>,
    pub wrapped: Vec<bool>,
    pub covariance: DVector<f64>,
}

fn planar_base(model: &RobotModel) -> Result<usize, ProblemError> {
    match model.bodies().first().map(|b| b.joint) {
        Some(JointType::Planar) => Ok(model.joint_offset(0)),
        _ => Err(ProblemError::InvalidScenario("base observations need a planar floating root".into())),
    }
}

impl ObservationModel {
    pub fn new(model: &RobotModel, spec: &ObservationSpec) -> Result<Self, ProblemError> {
        let n = model.nv();
        let joints = |offset: usize| -> Result<Vec<usize>, ProblemError> {
            match &spec.indices {
                None => Ok((0..n).map(|i| i + offset).collect()),
                Some(ix) => ix
                    .iter()
                    .map(|&i| {
                        if i < n {
                            Ok(i + offset)
                        } else {
                            Err(ProblemError::InvalidScenario(format!("joint index {i} out of range (nv = {n})")))
                        }
                    })
                    .collect(),
            }
        };
        let rows = match spec.kind {
            ObservationKind::JointPosition => joints(0)?,
            ObservationKind::JointVelocity => joints(n)?,
            ObservationKind::BaseOrientation => vec![planar_base(model)? + 2],
            ObservationKind::BaseVelocity => {
                let b = planar_base(model)?;
                vec![n + b, n + b + 1, n + b + 2]
            }
            ObservationKind::FullState => (0..2 * n).collect(),
        };
        let wrap = model.wrapped_coordinates();
        let wrapped = rows.iter().map(|&r| r < n && wrap[r]).collect();
        let covariance = spec.cov.diagonal(rows.len())?;
        Ok(ObservationModel { kind: spec.kind, rows, wrapped, covariance })
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn predict(&self, x: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(self.rows.len(), self.rows.iter().map(|&r| x[r]))
    }

    /// `h(x) ⊖ z̄`.
    pub fn residual(&self, x: &DVector<f64>, z: &DVector<f64>) -> DVector<f64> {
        let mut r = self.predict(x) - z;
        for (i, &w) in self.wrapped.iter().enumerate() {
            if w {
                r[i] = wrap_angle(r[i]);
            }
        }
        r
    }

    /// `Γ⁻¹`.
    pub fn weight(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&self.covariance.map(|s| 1.0 / s))
    }

    /// Observation with measurement `z` as a solver residual.
    pub fn bind(&self, z: DVector<f64>, nx: usize, ntheta: usize) -> ObservationResidual {
        ObservationResidual { model: self.clone(), z, nx, ntheta }
    }
}

/// `r(x) = h(x) ⊖ z̄` for one node.
#[derive(Clone, Debug)]
pub struct ObservationResidual {
    pub model: ObservationModel,
    pub z: DVector<f64>,
    nx: usize,
    ntheta: usize,
}

impl Residual for ObservationResidual {
    fn value(&self, x: &DVector<f64>, _w: &DVector<f64>, _theta: &DVector<f64>) -> DVector<f64> {
        self.model.residual(x, &self.z)
    }

    fn eval(&self, x: &DVector<f64>, w: &DVector<f64>, theta: &DVector<f64>) -> ResidualEval {
        let m = self.model.dim();
        let mut r_x = DMatrix::zeros(m, self.nx);
        for (i, &row) in self.model.rows.iter().enumerate() {
            r_x[(i, row)] = 1.0;
        }
        ResidualEval { r: self.value(x, w, theta), r_x, r_w: DMatrix::zeros(m, w.len()), r_theta: DMatrix::zeros(m, self.ntheta) }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rbd::dynamics::test_models::*;
    use std::f64::consts::PI;

    fn spec(kind: ObservationKind, indices: Option<Vec<usize>>) -> ObservationSpec {
        ObservationSpec { kind, indices, cov: Covariance::Isotropic(0.01) }
    }

    #[test]
    fn selections() {
        let m = planar_walker();
        let n = m.nv();
        let x = DVector::from_fn(2 * n, |i, _| i as f64);
        let pos = ObservationModel::new(&m, &spec(ObservationKind::JointPosition, Some(vec![3, 4]))).unwrap();
        assert_eq!(pos.predict(&x).as_slice(), &[3.0, 4.0]);
        let vel = ObservationModel::new(&m, &spec(ObservationKind::JointVelocity, None)).unwrap();
        assert_eq!(vel.rows, (n..2 * n).collect::<Vec<_>>());
        let ori = ObservationModel::new(&m, &spec(ObservationKind::BaseOrientation, None)).unwrap();
        assert_eq!(ori.rows, vec![2]);
        assert_eq!(ori.wrapped, vec![true]);
        let bv = ObservationModel::new(&m, &spec(ObservationKind::BaseVelocity, None)).unwrap();
        assert_eq!(bv.rows, vec![n, n + 1, n + 2]);
        let full = ObservationModel::new(&m, &spec(ObservationKind::FullState, None)).unwrap();
        assert_eq!(full.dim(), 2 * n);
        assert!(ObservationModel::new(&m, &spec(ObservationKind::JointPosition, Some(vec![n]))).is_err());
        assert!(ObservationModel::new(&chain3(), &spec(ObservationKind::BaseOrientation, None)).is_err());
    }

    #[test]
    fn orientation_residual_wraps() {
        let m = planar_walker();
        let ori = ObservationModel::new(&m, &spec(ObservationKind::BaseOrientation, None)).unwrap();
        let mut x = DVector::zeros(2 * m.nv());
        x[2] = PI - 0.1;
        let r = ori.residual(&x, &DVector::from_element(1, -PI + 0.1));
        assert!((r[0] + 0.2).abs() < 1e-12);
    }

    #[test]
    fn residual_jacobian_matches_differences() {
        let m = chain3();
        let obs = ObservationModel::new(&m, &spec(ObservationKind::FullState, None)).unwrap();
        let x = DVector::from_fn(6, |i, _| 0.1 * i as f64);
        let res = obs.bind(DVector::from_element(6, 0.2), 6, 3);
        let e = res.eval(&x, &DVector::zeros(2), &DVector::zeros(3));
        for j in 0..6 {
            let mut xp = x.clone();
            xp[j] += 1e-6;
            let fd = (res.value(&xp, &DVector::zeros(2), &DVector::zeros(3)) - &e.r) / 1e-6;
            assert!((fd - e.r_x.column(j)).amax() < 1e-8);
        }
    }

    #[test]
    fn covariance_checks() {
        assert!(Covariance::Diagonal(vec![1.0, 2.0]).diagonal(3).is_err());
        assert!(Covariance::Isotropic(-1.0).diagonal(2).is_err());
        assert_eq!(Covariance::Diagonal(vec![1.0, 2.0]).diagonal(2).unwrap().as_slice(), &[1.0, 2.0]);
    }
}
