use nalgebra::{Matrix3, SMatrix, SVector};

use super::{IkError, IkProblem};
use crate::kinematics::{sample_backbone_with_jacobian, JointVector, JOINT_DIM, SECTION_COUNT};

pub(crate) type Vec8 = SVector<f64, JOINT_DIM>;
pub(crate) type Mat8 = SMatrix<f64, JOINT_DIM, JOINT_DIM>;

/// Sum of squared length changes over all twelve actuators, with the
/// dependent third actuator of each section included.
pub fn actuator_penalty(x: &[f64; JOINT_DIM]) -> f64 {
    (0..SECTION_COUNT)
        .map(|i| {
            let (a, b) = (x[2 * i], x[2 * i + 1]);
            a * a + b * b + (a + b) * (a + b)
        })
        .sum()
}

/// `Σ_k ‖p_k(q) − target_k‖ + λ Σ_ij l_ij²` with the base fixed at identity.
pub fn evaluate_cost(x: &[f64; JOINT_DIM], problem: &IkProblem) -> Result<f64, IkError> {
    problem.check_dimensions()?;
    Ok(evaluate(problem, x, 0.0, false).cost)
}

/// The optimizer's objective: every distance `d` replaced by
/// `√(d² + ε²) − ε`.
pub fn smoothed_cost(x: &[f64; JOINT_DIM], problem: &IkProblem, smoothing: f64) -> Result<f64, IkError> {
    problem.check_dimensions()?;
    Ok(evaluate(problem, x, smoothing, false).smoothed)
}

/// Analytic gradient of [`smoothed_cost`].
pub fn cost_gradient(x: &[f64; JOINT_DIM], problem: &IkProblem, smoothing: f64) -> Result<[f64; JOINT_DIM], IkError> {
    problem.check_dimensions()?;
    Ok(evaluate(problem, x, smoothing, true).gradient.into())
}

/// Central-difference gradient of [`smoothed_cost`] with step `h`.
pub fn numeric_gradient(
    x: &[f64; JOINT_DIM],
    problem: &IkProblem,
    smoothing: f64,
    h: f64,
) -> Result<[f64; JOINT_DIM], IkError> {
    problem.check_dimensions()?;
    let mut g = [0.0; JOINT_DIM];
    for (k, gk) in g.iter_mut().enumerate() {
        let mut plus = *x;
        let mut minus = *x;
        plus[k] += h;
        minus[k] -= h;
        let fp = evaluate(problem, &plus, smoothing, false).smoothed;
        let fm = evaluate(problem, &minus, smoothing, false).smoothed;
        *gk = (fp - fm) / (2.0 * h);
    }
    Ok(g)
}

/// Smallest per-point distance between the backbone at `x` and the target,
/// over the samples that move with the joints (the base sample is fixed at
/// the origin).
pub fn min_point_distance(x: &[f64; JOINT_DIM], problem: &IkProblem) -> f64 {
    evaluate(problem, x, 0.0, false).min_distance
}

pub(crate) struct Evaluation {
    /// True cost (unsmoothed distances).
    pub cost: f64,
    pub smoothed: f64,
    pub mean_distance: f64,
    pub min_distance: f64,
    pub gradient: Vec8,
    /// Gauss-Newton curvature of the smoothed norms.
    pub hessian: Mat8,
    /// Reweighted least-squares curvature, `Σ JᵀJ / s_k`.
    pub hessian_irls: Mat8,
}

fn penalty_hessian() -> Mat8 {
    let mut q = Mat8::zeros();
    for i in 0..SECTION_COUNT {
        q[(2 * i, 2 * i)] = 2.0;
        q[(2 * i + 1, 2 * i + 1)] = 2.0;
        q[(2 * i, 2 * i + 1)] = 1.0;
        q[(2 * i + 1, 2 * i)] = 1.0;
    }
    q
}

pub(crate) fn evaluate(problem: &IkProblem, x: &[f64; JOINT_DIM], eps: f64, derivatives: bool) -> Evaluation {
    let q = JointVector::from_array(x);
    let (points, jac) = sample_backbone_with_jacobian(&q, &problem.config, problem.samples_per_section);
    let penalty = actuator_penalty(x);
    let mut out = Evaluation {
        cost: problem.lambda * penalty,
        smoothed: problem.lambda * penalty,
        mean_distance: 0.0,
        min_distance: f64::INFINITY,
        gradient: Vec8::zeros(),
        hessian: Mat8::zeros(),
        hessian_irls: Mat8::zeros(),
    };
    let mut total = 0.0;
    for ((p, t), row) in points.iter().zip(&problem.target).zip(&jac) {
        let r = p - t;
        let d2 = r.norm_squared();
        let d = d2.sqrt();
        let s = (d2 + eps * eps).sqrt();
        total += d;
        if row.iter().any(|c| c.norm_squared() > 0.0) {
            out.min_distance = out.min_distance.min(d);
        }
        out.smoothed += s - eps;
        if !derivatives || s == 0.0 {
            continue;
        }
        let j = SMatrix::<f64, 3, JOINT_DIM>::from_columns(row);
        out.gradient += j.transpose() * r / s;
        let jtj = j.transpose() * j;
        out.hessian_irls += jtj / s;
        let w = (Matrix3::identity() - r * r.transpose() / (s * s)) / s;
        out.hessian += j.transpose() * w * j;
    }
    out.cost += total;
    out.mean_distance = total / points.len() as f64;
    if derivatives {
        let q2 = penalty_hessian() * (2.0 * problem.lambda);
        out.gradient += q2 * Vec8::from(*x);
        out.hessian += q2;
        out.hessian_irls += q2;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::{sample_backbone, BasePose, RobotConfig};
    use nalgebra::Vector3;

    fn straight_problem(lambda: f64) -> IkProblem {
        let robot = RobotConfig::default();
        let target = sample_backbone(&BasePose::identity(), &JointVector::zero(), &robot, 15);
        IkProblem::new(target, robot, 15, lambda).unwrap()
    }

    #[test]
    fn straight_target_costs_nothing_at_zero() {
        assert_eq!(evaluate_cost(&[0.0; 8], &straight_problem(1.0)).unwrap(), 0.0);
    }

    #[test]
    fn uniform_shift_costs_count_times_offset() {
        let mut p = straight_problem(1.0);
        for t in p.target.iter_mut() {
            *t += Vector3::new(0.001, 0.0, 0.0);
        }
        let c = evaluate_cost(&[0.0; 8], &p).unwrap();
        assert!((c - 0.061).abs() < 1e-15, "{c}");
    }

    #[test]
    fn penalty_counts_dependent_actuator() {
        let x = [0.01, -0.02, 0.0, 0.0, 0.0, 0.0, 0.0, 0.005];
        // l13 = 0.01, l43 = -0.005
        let expected = 0.01f64.powi(2) * 2.0 + 0.02f64.powi(2) + 2.0 * 0.005f64.powi(2);
        assert!((actuator_penalty(&x) - expected).abs() < 1e-18);
    }

    #[test]
    fn wrong_target_count_is_rejected() {
        let mut p = straight_problem(1.0);
        p.target.pop();
        assert!(matches!(evaluate_cost(&[0.0; 8], &p), Err(IkError::DimensionMismatch { .. })));
    }

    #[test]
    fn analytic_gradient_matches_central_difference() {
        let robot = RobotConfig::default();
        let q_target = JointVector::from_array(&[0.02, -0.01, 0.03, 0.01, -0.005, 0.02, 0.01, 0.01]);
        let target = sample_backbone(&BasePose::identity(), &q_target, &robot, 15);
        let p = IkProblem::new(target, robot, 15, 0.7).unwrap();
        let x = [0.01, 0.0, -0.01, 0.02, 0.015, -0.004, 0.0, 0.03];
        let a = cost_gradient(&x, &p, 1e-9).unwrap();
        let n = numeric_gradient(&x, &p, 1e-9, 1e-7).unwrap();
        for (ai, ni) in a.iter().zip(&n) {
            assert!((ai - ni).abs() <= 1e-6 * ai.abs().max(1.0), "{ai} vs {ni}");
        }
    }

    #[test]
    fn curvature_matrices_are_symmetric_positive_semidefinite() {
        let p = straight_problem(1.0);
        let e = evaluate(&p, &[0.01, 0.02, -0.01, 0.0, 0.0, 0.01, 0.0, 0.0], 1e-9, true);
        for h in [e.hessian, e.hessian_irls] {
            assert!((h - h.transpose()).amax() < 1e-9 * h.amax());
            assert!(h.symmetric_eigenvalues().min() > -1e-9 * h.amax());
        }
    }
}
