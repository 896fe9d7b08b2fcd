//! Rigid-body inertial parameters, full physical consistency, and smooth charts
//! onto the set of physically consistent inertias.
//!
//! The ten inertial parameters of a body are always serialized as
//! `[m, h_x, h_y, h_z, I_xx, I_xy, I_yy, I_xz, I_yz, I_zz]`, where `h = m c` is
//! the first mass moment and `I` the rotational inertia about the body-frame
//! origin, both expressed in the body frame.

mod chart;
pub mod so3;

pub use chart::{ExpEigParams, LogCholeskyParams, ParamChart};

use nalgebra::{Matrix3, Matrix4, SMatrix, SVector, SymmetricEigen, Vector3};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

pub type Vector10 = SVector<f64, 10>;
pub type Matrix10 = SMatrix<f64, 10, 10>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InertiaError {
    #[error("non-positive mass {0}")]
    NonPositiveMass(f64),
    #[error("inconsistent inertial parameters: {0}")]
    InconsistentInput(String),
    #[error("pseudo-inertia is not positive definite")]
    NotPositiveDefinite,
    #[error("cannot parse inertial vector: {0}")]
    Parse(String),
}

/// Ten inertial parameters of one rigid body.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 10]", into = "[f64; 10]")]
pub struct InertialVector(pub Vector10);

impl From<[f64; 10]> for InertialVector {
    fn from(a: [f64; 10]) -> Self {
        InertialVector(Vector10::from_column_slice(&a))
    }
}

impl From<InertialVector> for [f64; 10] {
    fn from(v: InertialVector) -> Self {
        let mut a = [0.0; 10];
        a.copy_from_slice(v.0.as_slice());
        a
    }
}

/// Flatten a symmetric 3×3 matrix as `(xx, xy, yy, xz, yz, zz)`.
pub fn flatten_symmetric(m: &Matrix3<f64>) -> [f64; 6] {
    [m[(0, 0)], m[(0, 1)], m[(1, 1)], m[(0, 2)], m[(1, 2)], m[(2, 2)]]
}

pub fn unflatten_symmetric(f: &[f64]) -> Matrix3<f64> {
    Matrix3::new(f[0], f[1], f[3], f[1], f[2], f[4], f[3], f[4], f[5])
}

impl InertialVector {
    pub fn zeros() -> Self {
        InertialVector(Vector10::zeros())
    }

    pub fn from_parts(mass: f64, first_moment: Vector3<f64>, inertia: &Matrix3<f64>) -> Self {
        let f = flatten_symmetric(inertia);
        InertialVector(Vector10::from_column_slice(&[
            mass,
            first_moment.x,
            first_moment.y,
            first_moment.z,
            f[0],
            f[1],
            f[2],
            f[3],
            f[4],
            f[5],
        ]))
    }

    /// Body of mass `m` with barycenter `c` and barycentric inertia `inertia_c`.
    pub fn from_barycentric(mass: f64, com: Vector3<f64>, inertia_c: &Matrix3<f64>) -> Self {
        let h = com * mass;
        let s = so3::skew(&com);
        let inertia = inertia_c + mass * s * s.transpose();
        Self::from_parts(mass, h, &inertia)
    }

    pub fn mass(&self) -> f64 {
        self.0[0]
    }

    pub fn first_moment(&self) -> Vector3<f64> {
        Vector3::new(self.0[1], self.0[2], self.0[3])
    }

    /// Rotational inertia about the body-frame origin.
    pub fn rotational_inertia(&self) -> Matrix3<f64> {
        unflatten_symmetric(&self.0.as_slice()[4..])
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|x| x.is_finite())
    }

    /// Parallel-axis shift of the rotational inertia to the barycenter.
    pub fn inertia_at_barycenter(&self) -> Result<Matrix3<f64>, InertiaError> {
        let m = self.mass();
        if !(m > 0.0) {
            return Err(InertiaError::NonPositiveMass(m));
        }
        let s = so3::skew(&self.first_moment());
        Ok(self.rotational_inertia() - s * s.transpose() / m)
    }

    /// The 4×4 pseudo-inertia `[[Σ, h], [hᵀ, m]]`.
    pub fn pseudo_inertia(&self) -> PseudoInertia {
        let inertia = self.rotational_inertia();
        let sigma = Matrix3::identity() * (0.5 * inertia.trace()) - inertia;
        let h = self.first_moment();
        let mut j = Matrix4::zeros();
        j.fixed_view_mut::<3, 3>(0, 0).copy_from(&sigma);
        j.fixed_view_mut::<3, 1>(0, 3).copy_from(&h);
        j.fixed_view_mut::<1, 3>(3, 0).copy_from(&h.transpose());
        j[(3, 3)] = self.mass();
        PseudoInertia(j)
    }

    /// Checks `m ≥ 0`, `I_c ⪰ 0` and the triangle inequalities on the principal
    /// moments, each relaxed by `tol`. With `tol = 0` the triangle inequalities
    /// are strict.
    pub fn check_full_consistency(&self, tol: f64) -> Result<(), ConsistencyViolation> {
        let m = self.mass();
        if !self.is_finite() {
            return Err(ConsistencyViolation::NonFinite);
        }
        if m < -tol {
            return Err(ConsistencyViolation::Mass);
        }
        let inertia_c = if m > 0.0 {
            self.inertia_at_barycenter().map_err(|_| ConsistencyViolation::Mass)?
        } else if self.first_moment().amax() <= tol {
            self.rotational_inertia()
        } else {
            return Err(ConsistencyViolation::Mass);
        };
        let d = principal_moments_ascending(&inertia_c);
        if d[0] < -tol {
            return Err(ConsistencyViolation::InertiaNotPsd);
        }
        let violations = [
            (d[0] - d[1] - d[2], ConsistencyViolation::TriangleX),
            (d[1] - d[0] - d[2], ConsistencyViolation::TriangleY),
            (d[2] - d[0] - d[1], ConsistencyViolation::TriangleZ),
        ];
        for (excess, v) in violations {
            if !(excess < tol) {
                return Err(v);
            }
        }
        Ok(())
    }

    pub fn is_fully_consistent(&self, tol: f64) -> bool {
        self.check_full_consistency(tol).is_ok()
    }

    /// Principal-axis decomposition of the barycentric inertia.
    pub fn barycentric(&self) -> Result<BarycentricInertia, InertiaError> {
        let inertia_c = self.inertia_at_barycenter()?;
        let (rotation, moments) = principal_axes_descending(&inertia_c);
        Ok(BarycentricInertia {
            inertia_c,
            rotation,
            moments,
            second_moments: second_moments_from_principal(&moments),
        })
    }
}

impl std::ops::Add for InertialVector {
    type Output = InertialVector;
    fn add(self, rhs: Self) -> Self {
        InertialVector(self.0 + rhs.0)
    }
}

impl std::ops::Mul<f64> for InertialVector {
    type Output = InertialVector;
    fn mul(self, rhs: f64) -> Self {
        InertialVector(self.0 * rhs)
    }
}

impl fmt::Display for InertialVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, x) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{x:?}")?;
        }
        Ok(())
    }
}

impl FromStr for InertialVector {
    type Err = InertiaError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let values = s
            .split_whitespace()
            .map(|t| t.parse::<f64>().map_err(|e| InertiaError::Parse(format!("{t:?}: {e}"))))
            .collect::<Result<Vec<_>, _>>()?;
        if values.len() != 10 {
            return Err(InertiaError::Parse(format!("expected 10 values, found {}", values.len())));
        }
        Ok(InertialVector(Vector10::from_vec(values)))
    }
}

/// First violated condition of full physical consistency.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConsistencyViolation {
    NonFinite,
    Mass,
    InertiaNotPsd,
    TriangleX,
    TriangleY,
    TriangleZ,
}

impl fmt::Display for ConsistencyViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ConsistencyViolation::NonFinite => "non-finite entry",
            ConsistencyViolation::Mass => "mass",
            ConsistencyViolation::InertiaNotPsd => "barycentric inertia not positive semidefinite",
            ConsistencyViolation::TriangleX => "triangle inequality D_x",
            ConsistencyViolation::TriangleY => "triangle inequality D_y",
            ConsistencyViolation::TriangleZ => "triangle inequality D_z",
        };
        f.write_str(s)
    }
}

/// Barycentric inertia `I_c = R diag(D) Rᵀ` with `D = P L`.
#[derive(Clone, Debug, PartialEq)]
pub struct BarycentricInertia {
    pub inertia_c: Matrix3<f64>,
    pub rotation: Matrix3<f64>,
    /// Principal moments `(D_x, D_y, D_z)`, sorted descending.
    pub moments: Vector3<f64>,
    /// Second moments of mass `(L_x, L_y, L_z)`.
    pub second_moments: Vector3<f64>,
}

/// The fixed matrix mapping second moments of mass to principal moments.
pub fn second_moment_map() -> Matrix3<f64> {
    Matrix3::new(0.0, 1.0, 1.0, 1.0, 0.0, 1.0, 1.0, 1.0, 0.0)
}

pub fn second_moments_from_principal(d: &Vector3<f64>) -> Vector3<f64> {
    Vector3::new(d.y + d.z - d.x, d.x + d.z - d.y, d.x + d.y - d.z) * 0.5
}

fn principal_moments_ascending(m: &Matrix3<f64>) -> [f64; 3] {
    let eig = SymmetricEigen::new(*m);
    let mut d = [eig.eigenvalues[0], eig.eigenvalues[1], eig.eigenvalues[2]];
    d.sort_by(f64::total_cmp);
    d
}

/// Eigen-decomposition with eigenvalues sorted descending and columns signed so
/// the first two start with a positive entry and the third completes a
/// right-handed frame.
pub(crate) fn principal_axes_descending(m: &Matrix3<f64>) -> (Matrix3<f64>, Vector3<f64>) {
    let eig = SymmetricEigen::new(*m);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let mut r = Matrix3::zeros();
    let mut d = Vector3::zeros();
    for (col, &i) in order.iter().enumerate() {
        let mut v: Vector3<f64> = eig.eigenvectors.column(i).into_owned();
        if let Some(first) = v.iter().find(|x| x.abs() > 1e-12) {
            if *first < 0.0 {
                v = -v;
            }
        }
        r.set_column(col, &v);
        d[col] = eig.eigenvalues[i];
    }
    let third = r.column(0).cross(&r.column(1));
    r.set_column(2, &third);
    (r, d)
}

/// Symmetric 4×4 pseudo-inertia matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PseudoInertia(pub Matrix4<f64>);

impl PseudoInertia {
    pub fn matrix(&self) -> &Matrix4<f64> {
        &self.0
    }

    /// Second-moment block `Σ`.
    pub fn sigma(&self) -> Matrix3<f64> {
        self.0.fixed_view::<3, 3>(0, 0).into_owned()
    }

    /// Inverse of the pseudo-inertia map.
    pub fn to_inertial_vector(&self) -> InertialVector {
        let sigma = self.sigma();
        let inertia = Matrix3::identity() * sigma.trace() - sigma;
        let h = self.0.fixed_view::<3, 1>(0, 3).into_owned();
        InertialVector::from_parts(self.0[(3, 3)], h, &inertia)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        SymmetricEigen::new(self.0).eigenvalues.min()
    }
}
