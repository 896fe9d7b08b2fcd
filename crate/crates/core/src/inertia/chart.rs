//! Smooth charts from `R¹⁰` onto physically consistent inertial parameters.
//!
//! * Log-Cholesky: `π = [α, d₁, d₂, d₃, s₁₂, s₂₃, s₁₃, t₁, t₂, t₃]`, the
//!   pseudo-inertia is `J = U Uᵀ` with
//!   `U = e^α [[e^d₁, s₁₂, s₁₃, t₁], [0, e^d₂, s₂₃, t₂], [0, 0, e^d₃, t₃], [0, 0, 0, 1]]`.
//!   The chart is singularity-free but overparametrized by the scale `e^α`.
//! * Exponential eigenvalue: `π = [σ_m, h_x, h_y, h_z, ω_x, ω_y, ω_z, σ_x, σ_y, σ_z]`
//!   with `m = e^σ_m`, `L = e^σ`, `D = P L`, `I_c = Exp(ω) diag(D) Exp(ω)ᵀ`.
//!   The rotation block loses rank when two principal moments coincide.
//! * Raw: the identity map, with no consistency guarantee.

use super::so3;
use super::{
    flatten_symmetric, principal_axes_descending, second_moment_map, second_moments_from_principal,
    InertiaError, InertialVector, Matrix10, Vector10,
};
use nalgebra::{Matrix3, Matrix4, Vector3};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParamChart {
    Raw,
    #[serde(rename = "logchol")]
    LogCholesky,
    #[serde(rename = "expeig")]
    ExpEigenvalue,
}

impl ParamChart {
    pub const ALL: [ParamChart; 3] = [ParamChart::Raw, ParamChart::LogCholesky, ParamChart::ExpEigenvalue];

    pub fn name(&self) -> &'static str {
        match self {
            ParamChart::Raw => "raw",
            ParamChart::LogCholesky => "logchol",
            ParamChart::ExpEigenvalue => "expeig",
        }
    }

    /// Maps chart coordinates to inertial parameters.
    pub fn to_theta(&self, pi: &Vector10) -> InertialVector {
        match self {
            ParamChart::Raw => InertialVector(*pi),
            ParamChart::LogCholesky => LogCholeskyParams::from_vector(pi).to_theta(),
            ParamChart::ExpEigenvalue => ExpEigParams::from_vector(pi).to_theta(),
        }
    }

    /// Canonical chart coordinates of `theta`.
    pub fn from_theta(&self, theta: &InertialVector) -> Result<Vector10, InertiaError> {
        match self {
            ParamChart::Raw => Ok(theta.0),
            ParamChart::LogCholesky => LogCholeskyParams::from_theta(theta).map(|p| p.to_vector()),
            ParamChart::ExpEigenvalue => ExpEigParams::from_theta(theta).map(|p| p.to_vector()),
        }
    }

    /// Analytical Jacobian `∂ϑ/∂π`.
    pub fn jacobian(&self, pi: &Vector10) -> Matrix10 {
        match self {
            ParamChart::Raw => Matrix10::identity(),
            ParamChart::LogCholesky => LogCholeskyParams::from_vector(pi).jacobian(),
            ParamChart::ExpEigenvalue => ExpEigParams::from_vector(pi).jacobian(),
        }
    }
}

impl fmt::Display for ParamChart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ParamChart {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "raw" => Ok(ParamChart::Raw),
            "logchol" | "log-cholesky" => Ok(ParamChart::LogCholesky),
            "expeig" | "exp-eigenvalue" => Ok(ParamChart::ExpEigenvalue),
            other => Err(format!("unknown chart {other:?} (expected raw, logchol or expeig)")),
        }
    }
}

/// Extracts `ϑ` from a (not necessarily positive) pseudo-inertia. Linear in `j`.
fn theta_from_pseudo(j: &Matrix4<f64>) -> Vector10 {
    let sigma = j.fixed_view::<3, 3>(0, 0).into_owned();
    let inertia = Matrix3::identity() * sigma.trace() - sigma;
    let f = flatten_symmetric(&inertia);
    Vector10::from_column_slice(&[j[(3, 3)], j[(0, 3)], j[(1, 3)], j[(2, 3)], f[0], f[1], f[2], f[3], f[4], f[5]])
}

#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct LogCholeskyParams {
    pub alpha: f64,
    pub d: Vector3<f64>,
    /// `(s₁₂, s₂₃, s₁₃)`
    pub s: Vector3<f64>,
    pub t: Vector3<f64>,
}

impl LogCholeskyParams {
    pub fn from_vector(pi: &Vector10) -> Self {
        LogCholeskyParams {
            alpha: pi[0],
            d: Vector3::new(pi[1], pi[2], pi[3]),
            s: Vector3::new(pi[4], pi[5], pi[6]),
            t: Vector3::new(pi[7], pi[8], pi[9]),
        }
    }

    pub fn to_vector(&self) -> Vector10 {
        Vector10::from_column_slice(&[
            self.alpha, self.d.x, self.d.y, self.d.z, self.s.x, self.s.y, self.s.z, self.t.x, self.t.y, self.t.z,
        ])
    }

    /// Upper-triangular factor without the `e^α` scale.
    fn unit_factor(&self) -> Matrix4<f64> {
        let (s12, s23, s13) = (self.s.x, self.s.y, self.s.z);
        Matrix4::new(
            self.d.x.exp(), s12, s13, self.t.x,
            0.0, self.d.y.exp(), s23, self.t.y,
            0.0, 0.0, self.d.z.exp(), self.t.z,
            0.0, 0.0, 0.0, 1.0,
        )
    }

    pub fn factor(&self) -> Matrix4<f64> {
        self.unit_factor() * self.alpha.exp()
    }

    pub fn to_theta(&self) -> InertialVector {
        let u = self.factor();
        InertialVector(theta_from_pseudo(&(u * u.transpose())))
    }

    pub fn jacobian(&self) -> Matrix10 {
        let scale = self.alpha.exp();
        let u = self.factor();
        let mut jac = Matrix10::zeros();
        let mut column = |col: usize, du: Matrix4<f64>| {
            let dj = du * u.transpose() + u * du.transpose();
            jac.set_column(col, &theta_from_pseudo(&dj));
        };
        column(0, u);
        let unit = |r: usize, c: usize, v: f64| {
            let mut m = Matrix4::zeros();
            m[(r, c)] = v;
            m
        };
        for i in 0..3 {
            column(1 + i, unit(i, i, scale * self.d[i].exp()));
        }
        column(4, unit(0, 1, scale));
        column(5, unit(1, 2, scale));
        column(6, unit(0, 2, scale));
        for i in 0..3 {
            column(7 + i, unit(i, 3, scale));
        }
        jac
    }

    /// Canonical coordinates: the `(4,4)` entry of the unit factor is 1, so
    /// `α = ln √m` absorbs the overall scale.
    pub fn from_theta(theta: &InertialVector) -> Result<Self, InertiaError> {
        if !theta.is_finite() {
            return Err(InertiaError::NotPositiveDefinite);
        }
        let j = theta.pseudo_inertia().0;
        // J = U Uᵀ with U upper triangular ⇔ (PJP) = (PUP)(PUP)ᵀ with P the exchange matrix.
        let flip = |m: &Matrix4<f64>| {
            Matrix4::from_fn(|r, c| m[(3 - r, 3 - c)])
        };
        let lower = nalgebra::Cholesky::new(flip(&j)).ok_or(InertiaError::NotPositiveDefinite)?.l();
        let u = flip(&lower);
        let u44 = u[(3, 3)];
        let unit = u / u44;
        Ok(LogCholeskyParams {
            alpha: u44.ln(),
            d: Vector3::new(unit[(0, 0)].ln(), unit[(1, 1)].ln(), unit[(2, 2)].ln()),
            s: Vector3::new(unit[(0, 1)], unit[(1, 2)], unit[(0, 2)]),
            t: Vector3::new(unit[(0, 3)], unit[(1, 3)], unit[(2, 3)]),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct ExpEigParams {
    pub sigma_m: f64,
    pub h: Vector3<f64>,
    pub omega: Vector3<f64>,
    pub sigma: Vector3<f64>,
}

impl ExpEigParams {
    pub fn from_vector(pi: &Vector10) -> Self {
        ExpEigParams {
            sigma_m: pi[0],
            h: Vector3::new(pi[1], pi[2], pi[3]),
            omega: Vector3::new(pi[4], pi[5], pi[6]),
            sigma: Vector3::new(pi[7], pi[8], pi[9]),
        }
    }

    pub fn to_vector(&self) -> Vector10 {
        Vector10::from_column_slice(&[
            self.sigma_m, self.h.x, self.h.y, self.h.z, self.omega.x, self.omega.y, self.omega.z, self.sigma.x,
            self.sigma.y, self.sigma.z,
        ])
    }

    pub fn principal_moments(&self) -> Vector3<f64> {
        second_moment_map() * self.sigma.map(f64::exp)
    }

    pub fn to_theta(&self) -> InertialVector {
        let m = self.sigma_m.exp();
        let r = so3::exp(&self.omega);
        let inertia_c = r * Matrix3::from_diagonal(&self.principal_moments()) * r.transpose();
        let s = so3::skew(&self.h);
        InertialVector::from_parts(m, self.h, &(inertia_c + s * s.transpose() / m))
    }

    pub fn jacobian(&self) -> Matrix10 {
        let m = self.sigma_m.exp();
        let r = so3::exp(&self.omega);
        let second = self.sigma.map(f64::exp);
        let d = Matrix3::from_diagonal(&(second_moment_map() * second));
        let sh = so3::skew(&self.h);
        let shift = sh * sh.transpose();
        let mut jac = Matrix10::zeros();
        let put = |jac: &mut Matrix10, col: usize, dm: f64, dh: Vector3<f64>, di: Matrix3<f64>| {
            let f = flatten_symmetric(&di);
            jac.set_column(col, &Vector10::from_column_slice(&[dm, dh.x, dh.y, dh.z, f[0], f[1], f[2], f[3], f[4], f[5]]));
        };
        put(&mut jac, 0, m, Vector3::zeros(), -shift / m);
        for j in 0..3 {
            let e = Vector3::ith(j, 1.0);
            let se = so3::skew(&e);
            put(&mut jac, 1 + j, 0.0, e, (se * sh.transpose() + sh * se.transpose()) / m);
        }
        let jr = so3::right_jacobian(&self.omega);
        for j in 0..3 {
            let su = so3::skew(&jr.column(j).into_owned());
            put(&mut jac, 4 + j, 0.0, Vector3::zeros(), r * (su * d - d * su) * r.transpose());
        }
        for j in 0..3 {
            let dd = Matrix3::from_diagonal(&(second_moment_map().column(j) * second[j]));
            put(&mut jac, 7 + j, 0.0, Vector3::zeros(), r * dd * r.transpose());
        }
        jac
    }

    /// Canonical inverse: principal moments sorted descending, a right-handed
    /// principal frame, and the smallest rotation compatible with any repeated
    /// principal moments (identity for isotropic inertia).
    pub fn from_theta(theta: &InertialVector) -> Result<Self, InertiaError> {
        let m = theta.mass();
        if !theta.is_finite() || !(m > 0.0) {
            return Err(InertiaError::InconsistentInput(format!("mass must be positive, got {m}")));
        }
        let inertia_c = theta.inertia_at_barycenter()?;
        let (axes, d) = principal_axes_descending(&inertia_c);
        let second = second_moments_from_principal(&d);
        if second.iter().any(|l| !(*l > 0.0)) {
            return Err(InertiaError::InconsistentInput(format!(
                "second moments of mass must be positive, got ({}, {}, {})",
                second.x, second.y, second.z
            )));
        }
        let tie = 1e-10 * d.amax();
        let top_tied = d[0] - d[1] <= tie;
        let bottom_tied = d[1] - d[2] <= tie;
        let r = match (top_tied, bottom_tied) {
            (true, true) => Matrix3::identity(),
            (true, false) => minimal_rotation_to(2, &axes.column(2).into_owned()),
            (false, true) => minimal_rotation_to(0, &axes.column(0).into_owned()),
            (false, false) => axes,
        };
        Ok(ExpEigParams {
            sigma_m: m.ln(),
            h: theta.first_moment(),
            omega: so3::log(&r),
            sigma: second.map(f64::ln),
        })
    }
}

/// Smallest rotation taking the `axis`-th basis vector onto `±v` (sign chosen
/// so the angle is at most π/2).
fn minimal_rotation_to(axis: usize, v: &Vector3<f64>) -> Matrix3<f64> {
    let e = Vector3::ith(axis, 1.0);
    let v = if v.dot(&e) < 0.0 { -v } else { *v };
    let c = e.cross(&v);
    let sin = c.norm();
    if sin < 1e-15 {
        return Matrix3::identity();
    }
    let angle = sin.atan2(e.dot(&v));
    so3::exp(&(c / sin * angle))
}
