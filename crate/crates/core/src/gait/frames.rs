//! Local curve frames and projection into the robot base frame.

use nalgebra::{Matrix3, Vector3};

use super::{FramedCurve, GaitError};
use crate::kinematics::PoseTransform;

/// Threshold on `|tangent · up|` above which the up reference is replaced by
/// the world Y axis.
const PARALLEL_TOL: f64 = 1e-6;
const MIN_TANGENT: f64 = 1e-12;

/// Rotation taking robot-base axes to local curve-frame axes: the robot's
/// neutral axis (Z) runs along the curve tangent (local X), robot X along the
/// local Y and robot Y along the local Z (up).
pub fn robot_alignment() -> PoseTransform {
    PoseTransform::from_rotation(Matrix3::new(0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0))
}

/// Frame with X along `tangent`, Z the world up vector made orthogonal to X,
/// and Y = Z × X (so that X × Y = Z), placed at `origin`. A tangent parallel
/// to up uses the world Y axis as reference instead.
pub fn local_frame_from_tangent(origin: Vector3<f64>, tangent: Vector3<f64>) -> Result<PoseTransform, GaitError> {
    let norm = tangent.norm();
    if !(norm > MIN_TANGENT) {
        return Err(GaitError::DegenerateFrame { norm });
    }
    let x = tangent / norm;
    let up = if x.z.abs() > 1.0 - PARALLEL_TOL {
        Vector3::y()
    } else {
        Vector3::z()
    };
    let z = (up - x * x.dot(&up)).normalize();
    let y = z.cross(&x);
    Ok(PoseTransform::new(Matrix3::from_columns(&[x, y, z]), origin))
}

/// Local frame at `points[index]` using central differences inside the curve
/// and one-sided differences at the ends.
pub fn local_frame_at(points: &[Vector3<f64>], index: usize) -> Result<PoseTransform, GaitError> {
    let n = points.len();
    if n < 2 || index >= n {
        return Err(GaitError::DegenerateCurve(format!(
            "frame index {index} on a curve of {n} points"
        )));
    }
    let tangent = if index == 0 {
        points[1] - points[0]
    } else if index == n - 1 {
        points[n - 1] - points[n - 2]
    } else {
        points[index + 1] - points[index - 1]
    };
    local_frame_from_tangent(points[index], tangent)
}

/// Expresses world-frame curve points in `body_frame`, keeping the local
/// world-frame curve frames alongside.
pub fn project_to_robot_frame(
    timestamp: f64,
    points: &[Vector3<f64>],
    body_frame: &PoseTransform,
) -> Result<FramedCurve, GaitError> {
    for (i, w) in points.windows(2).enumerate() {
        let d = (w[1] - w[0]).norm();
        if d < 1e-9 {
            return Err(GaitError::DegenerateCurve(format!(
                "points {i} and {} coincide at t = {timestamp}",
                i + 1
            )));
        }
    }
    let source_frames = (0..points.len())
        .map(|i| local_frame_at(points, i))
        .collect::<Result<Vec<_>, _>>()?;
    let inv = body_frame.inverse();
    Ok(FramedCurve {
        timestamp,
        points: points.iter().map(|p| inv.transform_point(p)).collect(),
        source_frames,
        body_frame: *body_frame,
    })
}
