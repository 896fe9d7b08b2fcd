//! Minimal SO(3) toolkit: hat/vee, exponential and logarithm maps, right Jacobian.

use nalgebra::{Matrix3, Vector3};
use std::f64::consts::PI;

const SMALL_ANGLE: f64 = 1e-8;

/// Skew-symmetric matrix `S(v)` with `S(v) w = v × w`.
pub fn skew(v: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

pub fn vee(m: &Matrix3<f64>) -> Vector3<f64> {
    Vector3::new(m[(2, 1)], m[(0, 2)], m[(1, 0)])
}

/// Rodrigues' formula, falling back to a second-order series near the identity.
pub fn exp(omega: &Vector3<f64>) -> Matrix3<f64> {
    let theta = omega.norm();
    let k = skew(omega);
    let k2 = k * k;
    if theta < SMALL_ANGLE {
        return Matrix3::identity() + k + 0.5 * k2;
    }
    let a = theta.sin() / theta;
    let b = (1.0 - theta.cos()) / (theta * theta);
    Matrix3::identity() + a * k + b * k2
}

/// Logarithm of a rotation matrix. The returned vector has norm in `[0, π]`.
pub fn log(r: &Matrix3<f64>) -> Vector3<f64> {
    let cos_theta = ((r.trace() - 1.0) * 0.5).clamp(-1.0, 1.0);
    let theta = cos_theta.acos();
    let axial = vee(&(r - r.transpose())) * 0.5;
    if theta < SMALL_ANGLE {
        return axial * (1.0 + theta * theta / 6.0);
    }
    if PI - theta < 1e-6 {
        // R ≈ 2nnᵀ − 1 near π; read the axis off the dominant diagonal entry.
        let b = (r + Matrix3::identity()) * 0.5;
        let i = (0..3)
            .max_by(|&a, &c| b[(a, a)].total_cmp(&b[(c, c)]))
            .unwrap_or(0);
        let mut n: Vector3<f64> = b.column(i) / b[(i, i)].max(0.0).sqrt();
        n.normalize_mut();
        if n.dot(&axial) < 0.0 {
            n = -n;
        }
        return n * theta;
    }
    axial * (theta / theta.sin())
}

/// Right Jacobian: `Exp(ω + δ) ≈ Exp(ω) Exp(J_r(ω) δ)`.
pub fn right_jacobian(omega: &Vector3<f64>) -> Matrix3<f64> {
    let theta = omega.norm();
    let k = skew(omega);
    let k2 = k * k;
    if theta < SMALL_ANGLE {
        return Matrix3::identity() - 0.5 * k + k2 / 6.0;
    }
    let t2 = theta * theta;
    Matrix3::identity() - (1.0 - theta.cos()) / t2 * k + (theta - theta.sin()) / (t2 * theta) * k2
}
