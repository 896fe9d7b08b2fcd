//! Spatial (6D) vector algebra, angular part first.

use crate::inertia::so3::skew;
use crate::inertia::InertialVector;
use nalgebra::{Matrix3, Matrix6, SMatrix, Vector3, Vector6};

pub type Motion = Vector6<f64>;
pub type Force = Vector6<f64>;

pub fn angular(v: &Vector6<f64>) -> Vector3<f64> {
    Vector3::new(v[0], v[1], v[2])
}

pub fn linear(v: &Vector6<f64>) -> Vector3<f64> {
    Vector3::new(v[3], v[4], v[5])
}

pub fn join(ang: &Vector3<f64>, lin: &Vector3<f64>) -> Vector6<f64> {
    Vector6::new(ang.x, ang.y, ang.z, lin.x, lin.y, lin.z)
}

/// `v ×` acting on a motion vector.
pub fn cross_motion(v: &Motion, m: &Motion) -> Motion {
    let (w, u) = (angular(v), linear(v));
    join(&w.cross(&angular(m)), &(w.cross(&linear(m)) + u.cross(&angular(m))))
}

/// `v ×*` acting on a force vector.
pub fn cross_force(v: &Motion, f: &Force) -> Force {
    let (w, u) = (angular(v), linear(v));
    join(&(w.cross(&angular(f)) + u.cross(&linear(f))), &w.cross(&linear(f)))
}

/// Spatial inertia about the body-frame origin.
pub fn spatial_inertia(theta: &InertialVector) -> Matrix6<f64> {
    let s = skew(&theta.first_moment());
    let mut m = Matrix6::zeros();
    m.fixed_view_mut::<3, 3>(0, 0).copy_from(&theta.rotational_inertia());
    m.fixed_view_mut::<3, 3>(0, 3).copy_from(&s);
    m.fixed_view_mut::<3, 3>(3, 0).copy_from(&s.transpose());
    m.fixed_view_mut::<3, 3>(3, 3).copy_from(&(Matrix3::identity() * theta.mass()));
    m
}

/// Net body force `I a + v ×* I v`, linear in the inertial parameters.
pub fn body_force(theta: &InertialVector, v: &Motion, a: &Motion) -> Force {
    let inertia = spatial_inertia(theta);
    inertia * a + cross_force(v, &(inertia * v))
}

/// 6×10 matrix `A(v, a)` with `body_force(ϑ, v, a) = A ϑ`.
pub fn body_force_regressor(v: &Motion, a: &Motion) -> SMatrix<f64, 6, 10> {
    let mut out = SMatrix::<f64, 6, 10>::zeros();
    for k in 0..10 {
        let mut e = InertialVector::zeros();
        e.0[k] = 1.0;
        out.set_column(k, &body_force(&e, v, a));
    }
    out
}

/// Plücker transform `ᴮX_A`: `rot` maps A coordinates to B coordinates and
/// `trans` is the origin of B expressed in A.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Transform {
    pub rot: Matrix3<f64>,
    pub trans: Vector3<f64>,
}

impl Transform {
    pub fn identity() -> Self {
        Transform { rot: Matrix3::identity(), trans: Vector3::zeros() }
    }

    /// Frame B at position `p` with orientation `r` (columns are B's axes in A).
    pub fn from_pose(r: &Matrix3<f64>, p: &Vector3<f64>) -> Self {
        Transform { rot: r.transpose(), trans: *p }
    }

    pub fn apply_motion(&self, m: &Motion) -> Motion {
        let w = angular(m);
        join(&(self.rot * w), &(self.rot * (linear(m) - self.trans.cross(&w))))
    }

    /// `Xᵀ f`: maps a force in B coordinates back to A.
    pub fn apply_force_transpose(&self, f: &Force) -> Force {
        let n = self.rot.transpose() * angular(f);
        let lin = self.rot.transpose() * linear(f);
        join(&(n + self.trans.cross(&lin)), &lin)
    }

    /// Composition `ᶜX_A = self(ᶜX_B) ∘ other(ᴮX_A)`.
    pub fn compose(&self, other: &Transform) -> Transform {
        Transform { rot: self.rot * other.rot, trans: other.trans + other.rot.transpose() * self.trans }
    }

    /// Orientation of B in A (columns are B's axes).
    pub fn orientation(&self) -> Matrix3<f64> {
        self.rot.transpose()
    }

    pub fn position(&self) -> Vector3<f64> {
        self.trans
    }
}
