use std::ops::Mul;

use nalgebra::{Matrix3, Point3, Rotation3, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

/// Rigid transform made of a rotation matrix and a translation, i.e. the
/// homogeneous transformation `[R p; 0 1]` without the padding row.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PoseTransform {
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
}

impl Default for PoseTransform {
    fn default() -> Self {
        Self::identity()
    }
}

impl PoseTransform {
    pub fn identity() -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Self {
        Self {
            rotation,
            translation,
        }
    }

    pub fn from_translation(translation: Vector3<f64>) -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation,
        }
    }

    pub fn from_rotation(rotation: Matrix3<f64>) -> Self {
        Self {
            rotation,
            translation: Vector3::zeros(),
        }
    }

    /// Pure rotation about +Z.
    pub fn rot_z(angle: f64) -> Self {
        Self::from_rotation(rot_z(angle))
    }

    pub fn inverse(&self) -> Self {
        let rt = self.rotation.transpose();
        Self {
            rotation: rt,
            translation: -(rt * self.translation),
        }
    }

    pub fn transform_point(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * p + self.translation
    }

    pub fn transform_vector(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * v
    }

    /// Largest deviation of `R Rᵀ` from identity and of `det R` from one.
    pub fn orthonormality_error(&self) -> f64 {
        let gram = self.rotation * self.rotation.transpose() - Matrix3::identity();
        let det = (self.rotation.determinant() - 1.0).abs();
        gram.amax().max(det)
    }

    pub fn is_proper(&self, tol: f64) -> bool {
        self.orthonormality_error() <= tol
    }

    /// Unit quaternion of the rotation part, sign fixed so that `w >= 0`.
    pub fn quaternion(&self) -> UnitQuaternion<f64> {
        let rot = Rotation3::from_matrix_unchecked(self.rotation);
        let q = UnitQuaternion::from_rotation_matrix(&rot);
        if q.w < 0.0 {
            UnitQuaternion::new_unchecked(-q.into_inner())
        } else {
            q
        }
    }
}

impl Mul for PoseTransform {
    type Output = PoseTransform;

    fn mul(self, rhs: PoseTransform) -> PoseTransform {
        PoseTransform {
            rotation: self.rotation * rhs.rotation,
            translation: self.rotation * rhs.translation + self.translation,
        }
    }
}

impl Mul<&PoseTransform> for &PoseTransform {
    type Output = PoseTransform;

    fn mul(self, rhs: &PoseTransform) -> PoseTransform {
        *self * *rhs
    }
}

impl Mul<Point3<f64>> for PoseTransform {
    type Output = Point3<f64>;

    fn mul(self, rhs: Point3<f64>) -> Point3<f64> {
        Point3::from(self.transform_point(&rhs.coords))
    }
}

pub(crate) fn rot_z(angle: f64) -> Matrix3<f64> {
    let (s, c) = angle.sin_cos();
    Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
}

pub(crate) fn rot_y(angle: f64) -> Matrix3<f64> {
    let (s, c) = angle.sin_cos();
    Matrix3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c)
}

pub(crate) fn rot_x(angle: f64) -> Matrix3<f64> {
    let (s, c) = angle.sin_cos();
    Matrix3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c)
}

/// Floating-base pose `[x_b, y_b, z_b, α, β, γ]` of the robot frame in the
/// world frame.
///
/// The angles are intrinsic Z-Y-X Euler angles: the rotation is
/// `Rz(alpha) * Ry(beta) * Rx(gamma)`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BasePose {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl BasePose {
    pub fn identity() -> Self {
        Self::default()
    }

    pub fn from_translation(x: f64, y: f64, z: f64) -> Self {
        Self {
            x,
            y,
            z,
            ..Self::default()
        }
    }

    pub fn to_transform(&self) -> PoseTransform {
        PoseTransform {
            rotation: rot_z(self.alpha) * rot_y(self.beta) * rot_x(self.gamma),
            translation: Vector3::new(self.x, self.y, self.z),
        }
    }

    /// Inverse of [`BasePose::to_transform`]. Near `|beta| = π/2` the split
    /// between `alpha` and `gamma` is not unique.
    pub fn from_transform(t: &PoseTransform) -> Self {
        let r = &t.rotation;
        let beta = (-r[(2, 0)]).clamp(-1.0, 1.0).asin();
        let alpha = r[(1, 0)].atan2(r[(0, 0)]);
        let gamma = r[(2, 1)].atan2(r[(2, 2)]);
        Self {
            x: t.translation.x,
            y: t.translation.y,
            z: t.translation.z,
            alpha,
            beta,
            gamma,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn inverse_composes_to_identity() {
        let pose = BasePose {
            x: 0.3,
            y: -1.2,
            z: 2.0,
            alpha: 0.4,
            beta: -0.7,
            gamma: 1.9,
        }
        .to_transform();
        let id = pose * pose.inverse();
        assert!((id.rotation - Matrix3::identity()).amax() < 1e-14);
        assert!(id.translation.amax() < 1e-14);
    }

    #[test]
    fn euler_round_trip() {
        let pose = BasePose {
            x: 1.0,
            y: 2.0,
            z: 3.0,
            alpha: -2.5,
            beta: 0.9,
            gamma: 0.3,
        };
        let back = BasePose::from_transform(&pose.to_transform());
        for (a, b) in [
            (pose.x, back.x),
            (pose.y, back.y),
            (pose.z, back.z),
            (pose.alpha, back.alpha),
            (pose.beta, back.beta),
            (pose.gamma, back.gamma),
        ] {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn euler_order_is_zyx_intrinsic() {
        // Yaw a quarter turn: body X lands on world Y.
        let t = BasePose {
            alpha: FRAC_PI_2,
            ..BasePose::default()
        }
        .to_transform();
        let x = t.transform_vector(&Vector3::x());
        assert!((x - Vector3::y()).norm() < 1e-15);
        let q = BasePose {
            alpha: 0.3,
            beta: 0.2,
            gamma: 0.1,
        ..BasePose::default()
        }
        .to_transform();
        let expected = Rotation3::from_euler_angles(0.1, 0.2, 0.3);
        assert!((q.rotation - expected.matrix()).amax() < 1e-15);
        assert!(q.is_proper(1e-12));
    }

    #[test]
    fn quaternion_has_non_negative_scalar() {
        let t = PoseTransform::rot_z(3.0);
        assert!(t.quaternion().w >= 0.0);
    }
}
