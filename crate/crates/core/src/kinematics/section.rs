//! Constant-curvature kinematics of a single bending section.
//!
//! A section is a backbone of fixed length `L0` carrying three actuators at
//! 120° spacing on a pitch circle of radius `r_act`. Actuator `j` (1-based)
//! changes length by
//!
//! ```text
//! l_j = -r_act * φ * cos(θ - 2π (j - 1) / 3)
//! ```
//!
//! so `l1 + l2 + l3 = 0` for every bend. Internally the bend is carried as the
//! curvature components `u = φ cos θ`, `v = φ sin θ`, which are linear in the
//! actuator lengths and keep the forward map smooth through the straight pose.

use std::f64::consts::{PI, TAU};

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use super::pose::{rot_z, PoseTransform};
use super::KinematicsError;

const SQRT_3: f64 = 1.732_050_807_568_877_2;

/// Below this arc angle `ξ·φ` (radians) the arc functions switch to their
/// truncated series.
pub const SERIES_THRESHOLD: f64 = 1e-6;

// Below this the derivative helpers use series to avoid cancellation.
const DERIVATIVE_SERIES_THRESHOLD: f64 = 0.05;

/// Geometric constants of one bending section, in meters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SectionConfig {
    /// Neutral-axis length `L_i0`.
    pub backbone_length: f64,
    /// Radial distance of the actuator axes from the neutral axis.
    pub actuator_pitch_radius: f64,
    /// Radius of the skin surface.
    pub skin_radius: f64,
    /// Straight rigid backbone extension to the next section.
    pub trailing_offset: f64,
}

impl Default for SectionConfig {
    fn default() -> Self {
        Self {
            backbone_length: 0.240,
            actuator_pitch_radius: 0.020,
            skin_radius: 0.020,
            trailing_offset: 0.050,
        }
    }
}

impl SectionConfig {
    pub fn validate(&self) -> Result<(), KinematicsError> {
        let positive = [
            ("backbone_length", self.backbone_length),
            ("actuator_pitch_radius", self.actuator_pitch_radius),
            ("skin_radius", self.skin_radius),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(KinematicsError::InvalidConfig(format!(
                    "{name} must be positive, got {value}"
                )));
            }
        }
        if !(self.trailing_offset.is_finite() && self.trailing_offset >= 0.0) {
            return Err(KinematicsError::InvalidConfig(format!(
                "trailing_offset must be non-negative, got {}",
                self.trailing_offset
            )));
        }
        Ok(())
    }
}

/// Length changes of actuators 1 and 2 of a section; actuator 3 is
/// determined by `l1 + l2 + l3 = 0`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SectionJoints {
    pub l1: f64,
    pub l2: f64,
}

impl SectionJoints {
    pub const fn new(l1: f64, l2: f64) -> Self {
        Self { l1, l2 }
    }

    pub const fn zero() -> Self {
        Self { l1: 0.0, l2: 0.0 }
    }

    #[inline]
    pub fn l3(&self) -> f64 {
        -(self.l1 + self.l2)
    }

    pub fn lengths(&self) -> [f64; 3] {
        [self.l1, self.l2, self.l3()]
    }

    /// Curvature components `(φ cos θ, φ sin θ)` of the bend these joints produce.
    #[inline]
    pub(crate) fn curvature(&self, c: &SectionConfig) -> (f64, f64) {
        let r = c.actuator_pitch_radius;
        let u = -self.l1 / r;
        let v = (-self.l1 - 2.0 * self.l2) / (SQRT_3 * r);
        (u, v)
    }
}

/// Bending direction `θ ∈ [-π, π]` and bending angle `φ ∈ [0, π]`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BendParameters {
    pub direction: f64,
    pub angle: f64,
}

impl BendParameters {
    pub const fn new(direction: f64, angle: f64) -> Self {
        Self { direction, angle }
    }

    /// Curvature `κ = φ / L0` in 1/m.
    pub fn curvature(&self, c: &SectionConfig) -> f64 {
        self.angle / c.backbone_length
    }
}

/// Actuator strain limits shared by all sections.
///
/// Every actuator length `L0 + l` must lie in
/// `[L0 (1 - contraction_strain), L0 (1 + extension_strain)]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JointBounds {
    pub contraction_strain: f64,
    pub extension_strain: f64,
}

impl Default for JointBounds {
    fn default() -> Self {
        Self {
            contraction_strain: 0.05,
            extension_strain: 0.35,
        }
    }
}

impl JointBounds {
    /// Unlimited bounds, used when only the geometric model is of interest.
    pub fn unbounded() -> Self {
        Self {
            contraction_strain: f64::INFINITY,
            extension_strain: f64::INFINITY,
        }
    }

    pub fn validate(&self) -> Result<(), KinematicsError> {
        if !(self.contraction_strain >= 0.0 && self.extension_strain >= 0.0) {
            return Err(KinematicsError::InvalidConfig(format!(
                "strain bounds must be non-negative, got contraction {} extension {}",
                self.contraction_strain, self.extension_strain
            )));
        }
        Ok(())
    }

    /// Admissible range of each length change `l` for this section.
    pub fn limits(&self, c: &SectionConfig) -> (f64, f64) {
        (
            -c.backbone_length * self.contraction_strain,
            c.backbone_length * self.extension_strain,
        )
    }

    pub fn check(&self, j: &SectionJoints, c: &SectionConfig) -> Result<(), KinematicsError> {
        let (lo, hi) = self.limits(c);
        for (idx, l) in j.lengths().into_iter().enumerate() {
            if !(lo..=hi).contains(&l) {
                return Err(KinematicsError::BoundsViolation {
                    actuator: idx + 1,
                    value: l,
                    min: lo,
                    max: hi,
                });
            }
        }
        Ok(())
    }

    /// Euclidean projection of `(l1, l2)` onto the feasible polygon
    /// `lo <= l1, l2, -(l1 + l2) <= hi`.
    pub fn project(&self, j: SectionJoints, c: &SectionConfig) -> SectionJoints {
        let (lo, hi) = self.limits(c);
        // Shrink slightly so rounding in the projection never leaves the set.
        let margin = 1e-12 * lo.abs().max(hi.abs()).min(1.0);
        if lo.is_finite() && hi.is_finite() {
            project_hexagon(j, lo + margin, hi - margin)
        } else {
            project_hexagon(j, lo, hi)
        }
    }
}

fn project_hexagon(j: SectionJoints, lo: f64, hi: f64) -> SectionJoints {
    let feasible = |x: f64, y: f64| {
        const TOL: f64 = 1e-15;
        let z = -(x + y);
        x >= lo - TOL && x <= hi + TOL && y >= lo - TOL && y <= hi + TOL && z >= lo - TOL && z <= hi + TOL
    };
    if feasible(j.l1, j.l2) {
        return j;
    }
    // Constraint lines a·x = b with unit-or-not normals a.
    let lines: [([f64; 2], f64); 6] = [
        ([1.0, 0.0], lo),
        ([1.0, 0.0], hi),
        ([0.0, 1.0], lo),
        ([0.0, 1.0], hi),
        ([1.0, 1.0], -hi),
        ([1.0, 1.0], -lo),
    ];
    let mut best = None::<(f64, SectionJoints)>;
    let mut consider = |x: f64, y: f64| {
        if x.is_finite() && y.is_finite() && feasible(x, y) {
            let d = (x - j.l1).powi(2) + (y - j.l2).powi(2);
            if best.is_none_or(|(bd, _)| d < bd) {
                best = Some((d, SectionJoints::new(x, y)));
            }
        }
    };
    for (a, b) in lines.iter() {
        let nn = a[0] * a[0] + a[1] * a[1];
        let t = (a[0] * j.l1 + a[1] * j.l2 - b) / nn;
        consider(j.l1 - t * a[0], j.l2 - t * a[1]);
    }
    for (i, (a, b)) in lines.iter().enumerate() {
        for (c, d) in lines.iter().skip(i + 1) {
            let det = a[0] * c[1] - a[1] * c[0];
            if det.abs() > 0.0 {
                let x = (b * c[1] - a[1] * d) / det;
                let y = (a[0] * d - b * c[0]) / det;
                consider(x, y);
            }
        }
    }
    best.map(|(_, p)| p).unwrap_or_default()
}

/// Recovers `(θ, φ)` from the actuator length changes.
///
/// `θ` is reported as zero for the straight section.
pub fn joints_to_bend(j: &SectionJoints, c: &SectionConfig) -> Result<BendParameters, KinematicsError> {
    let (l1, l2, l3) = (j.l1, j.l2, j.l3());
    let quad = l1 * l1 + l2 * l2 + l3 * l3 - l1 * l2 - l2 * l3 - l3 * l1;
    let angle = 2.0 / (3.0 * c.actuator_pitch_radius) * quad.max(0.0).sqrt();
    if !angle.is_finite() || angle > PI + 1e-12 {
        return Err(KinematicsError::OutOfRange {
            quantity: "bending angle",
            value: angle,
        });
    }
    if angle == 0.0 {
        return Ok(BendParameters::new(0.0, 0.0));
    }
    let direction = ((l3 - l2) / SQRT_3).atan2(-l1);
    Ok(BendParameters::new(direction, angle.min(PI)))
}

/// Actuator length changes that realize the bend `b`; exact inverse of
/// [`joints_to_bend`].
pub fn bend_to_joints(b: &BendParameters, c: &SectionConfig) -> Result<SectionJoints, KinematicsError> {
    if !(0.0..=PI).contains(&b.angle) {
        return Err(KinematicsError::OutOfRange {
            quantity: "bending angle",
            value: b.angle,
        });
    }
    if !b.direction.is_finite() {
        return Err(KinematicsError::OutOfRange {
            quantity: "bending direction",
            value: b.direction,
        });
    }
    Ok(bend_to_joints_unchecked(b, c))
}

pub(crate) fn bend_to_joints_unchecked(b: &BendParameters, c: &SectionConfig) -> SectionJoints {
    let k = -c.actuator_pitch_radius * b.angle;
    SectionJoints::new(k * b.direction.cos(), k * (b.direction - TAU / 3.0).cos())
}

/// `(1 - cos a) / a²`
#[inline]
pub(crate) fn arc_f1(a: f64) -> f64 {
    if a < SERIES_THRESHOLD {
        let a2 = a * a;
        0.5 - a2 / 24.0 + a2 * a2 / 720.0
    } else {
        let h = (0.5 * a).sin();
        2.0 * h * h / (a * a)
    }
}

/// `sin a / a`
#[inline]
pub(crate) fn arc_f2(a: f64) -> f64 {
    if a < SERIES_THRESHOLD {
        let a2 = a * a;
        1.0 - a2 / 6.0 + a2 * a2 / 120.0
    } else {
        a.sin() / a
    }
}

/// `(a - sin a) / a³`
#[inline]
fn arc_f3(a: f64) -> f64 {
    if a < DERIVATIVE_SERIES_THRESHOLD {
        let a2 = a * a;
        1.0 / 6.0 - a2 / 120.0 + a2 * a2 / 5040.0 - a2 * a2 * a2 / 362_880.0
    } else {
        (a - a.sin()) / (a * a * a)
    }
}

/// `d arc_f1 / d(a²)`
#[inline]
fn arc_f1_ds(a: f64) -> f64 {
    if a < DERIVATIVE_SERIES_THRESHOLD {
        let a2 = a * a;
        -1.0 / 24.0 + a2 / 360.0 - a2 * a2 / 13_440.0 + a2 * a2 * a2 / 907_200.0
    } else {
        let a2 = a * a;
        (a * a.sin() - 2.0 * (1.0 - a.cos())) / (2.0 * a2 * a2)
    }
}

/// `d arc_f2 / d(a²)`
#[inline]
fn arc_f2_ds(a: f64) -> f64 {
    if a < DERIVATIVE_SERIES_THRESHOLD {
        let a2 = a * a;
        -1.0 / 6.0 + a2 / 60.0 - a2 * a2 / 1680.0 + a2 * a2 * a2 / 90_720.0
    } else {
        (a * a.cos() - a.sin()) / (2.0 * a * a * a)
    }
}

#[inline]
fn skew(w: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -w.z, w.y, w.z, 0.0, -w.x, -w.y, w.x, 0.0)
}

/// Arc pose at fraction `xi` of a section bent with curvature components
/// `(u, v)`.
#[inline]
pub(crate) fn arc_pose(u: f64, v: f64, length: f64, xi: f64) -> PoseTransform {
    let a = xi * (u * u + v * v).sqrt();
    let f1 = arc_f1(a);
    let f2 = arc_f2(a);
    // Rotation about the in-plane axis (-sin θ, cos θ, 0) by ξφ.
    let w = Vector3::new(-xi * v, xi * u, 0.0);
    let k = skew(&w);
    let rotation = Matrix3::identity() + k * f2 + k * k * f1;
    let translation = Vector3::new(
        length * xi * xi * u * f1,
        length * xi * xi * v * f1,
        length * xi * f2,
    );
    PoseTransform::new(rotation, translation)
}

/// Partial derivatives of the arc position with respect to `u` and `v`.
#[inline]
pub(crate) fn arc_position_partials(u: f64, v: f64, length: f64, xi: f64) -> [Vector3<f64>; 2] {
    let a = xi * (u * u + v * v).sqrt();
    let f1 = arc_f1(a);
    let f1s = arc_f1_ds(a);
    let f2s = arc_f2_ds(a);
    let x2 = xi * xi;
    let lx2 = length * x2;
    let du = Vector3::new(
        lx2 * (f1 + u * f1s * 2.0 * x2 * u),
        lx2 * v * f1s * 2.0 * x2 * u,
        length * xi * f2s * 2.0 * x2 * u,
    );
    let dv = Vector3::new(
        lx2 * u * f1s * 2.0 * x2 * v,
        lx2 * (f1 + v * f1s * 2.0 * x2 * v),
        length * xi * f2s * 2.0 * x2 * v,
    );
    [du, dv]
}

/// Angular velocities (in the section base frame) of the tip frame per unit
/// change of `u` and `v`: `∂R/∂u · R⁻¹ = [ω_u]×`.
#[inline]
pub(crate) fn tip_angular_partials(u: f64, v: f64) -> [Vector3<f64>; 2] {
    let w = Vector3::new(-v, u, 0.0);
    let a = w.norm();
    let k = skew(&w);
    let left_jacobian = Matrix3::identity() + k * arc_f1(a) + k * k * arc_f3(a);
    [left_jacobian * Vector3::y(), left_jacobian * -Vector3::x()]
}

/// Chain rule factors `∂(u, v)/∂(l1, l2)` as `[[du/dl1, du/dl2], [dv/dl1, dv/dl2]]`.
#[inline]
pub(crate) fn curvature_partials(c: &SectionConfig) -> [[f64; 2]; 2] {
    let r = c.actuator_pitch_radius;
    [[-1.0 / r, 0.0], [-1.0 / (SQRT_3 * r), -2.0 / (SQRT_3 * r)]]
}

/// Pose of the neutral-axis point at fraction `xi ∈ [0, 1]` of the section,
/// relative to the section base frame.
///
/// Equivalent to `Rz(θ) Ry(ξφ) Rz(-θ)` with position
/// `Rz(θ) [L0/φ (1 - cos ξφ), 0, L0/φ sin ξφ]`.
pub fn section_transform(j: &SectionJoints, c: &SectionConfig, xi: f64) -> PoseTransform {
    debug_assert!((0.0..=1.0).contains(&xi), "xi = {xi} outside [0, 1]");
    let (u, v) = j.curvature(c);
    arc_pose(u, v, c.backbone_length, xi)
}

/// Pose of a skin point at fraction `xi` and angular offset `sigma` about the
/// local Z axis: the neutral-axis pose, then `Rz(sigma)`, then a shift of
/// `skin_radius` along the resulting X axis.
pub fn skin_point_transform(j: &SectionJoints, c: &SectionConfig, xi: f64, sigma: f64) -> PoseTransform {
    section_transform(j, c, xi)
        * PoseTransform::from_rotation(rot_z(sigma))
        * PoseTransform::from_translation(Vector3::new(c.skin_radius, 0.0, 0.0))
}
