use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::cost::{evaluate, Evaluation, Mat8, Vec8};
use super::{IkError, IkProblem, IkSettings, IkSolution, JointTrajectory, SmoothnessViolation, TrajectorySample};
use crate::gait::GaitCurveSet;
use crate::kinematics::{JointBounds, JointVector, RobotConfig, SectionJoints, JOINT_DIM, SECTION_COUNT};
use crate::parallel::map_indexed;

const MIN_DAMPING: f64 = 1e-12;
const MAX_DAMPING: f64 = 1e12;

fn project(config: &RobotConfig, x: &Vec8) -> Vec8 {
    Vec8::from(config.project(&JointVector::from_array(&(*x).into())).to_array())
}

/// Uniform sample of one section's feasible polygon by rejection from the
/// bounding box. Infinite bounds fall back to the default strain limits.
fn random_section(rng: &mut ChaCha8Rng, bounds: &JointBounds, config: &RobotConfig, i: usize) -> SectionJoints {
    let c = &config.sections[i];
    let (mut lo, mut hi) = bounds.limits(c);
    if !(lo.is_finite() && hi.is_finite()) {
        (lo, hi) = JointBounds::default().limits(c);
    }
    for _ in 0..10_000 {
        let j = SectionJoints::new(rng.gen_range(lo..=hi), rng.gen_range(lo..=hi));
        if (lo..=hi).contains(&j.l3()) {
            return j;
        }
    }
    bounds.project(SectionJoints::zero(), c)
}

fn start_points(problem: &IkProblem, warm: Option<&JointVector>, settings: &IkSettings, stream: u64) -> Vec<Vec8> {
    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
    rng.set_stream(stream);
    let mut starts = vec![Vec8::zeros()];
    if let Some(w) = warm {
        starts.push(Vec8::from(w.to_array()));
    }
    while starts.len() < settings.starts {
        let mut x = [0.0; JOINT_DIM];
        for i in 0..SECTION_COUNT {
            let j = random_section(&mut rng, &problem.config.bounds, &problem.config, i);
            x[2 * i] = j.l1;
            x[2 * i + 1] = j.l2;
        }
        starts.push(Vec8::from(x));
    }
    starts.truncate(settings.starts);
    starts
}

struct LocalResult {
    x: Vec8,
    eval: Evaluation,
    converged: bool,
    iterations: usize,
}

fn damped_step(h: &Mat8, g: &Vec8, mu: f64) -> Option<Vec8> {
    let scale = (h.trace() / JOINT_DIM as f64).max(1e-12);
    let a = h + Mat8::identity() * (mu * scale);
    a.cholesky().map(|c| -c.solve(g))
}

/// Projected Levenberg-Marquardt on the smoothed cost. Each iteration tries a
/// Gauss-Newton step and a reweighted least-squares step, keeping the better
/// one if it lowers the cost.
fn local_descent(problem: &IkProblem, start: &Vec8, settings: &IkSettings) -> LocalResult {
    let eps = settings.smoothing;
    let mut x = project(&problem.config, start);
    let mut eval = evaluate(problem, &x.into(), eps, true);
    let mut mu = 1e-6;
    for it in 0..settings.max_iterations {
        let pg = x - project(&problem.config, &(x - eval.gradient));
        if pg.norm() < settings.gradient_tolerance {
            return LocalResult { x, eval, converged: true, iterations: it };
        }
        let mut best: Option<(Vec8, Evaluation)> = None;
        let mut attempted = 0.0f64;
        for h in [&eval.hessian, &eval.hessian_irls] {
            let Some(step) = damped_step(h, &eval.gradient, mu) else {
                continue;
            };
            let candidate = project(&problem.config, &(x + step));
            attempted = attempted.max((candidate - x).norm());
            let e = evaluate(problem, &candidate.into(), eps, true);
            if e.smoothed < best.as_ref().map_or(eval.smoothed, |b| b.1.smoothed) {
                best = Some((candidate, e));
            }
        }
        match best {
            Some((candidate, e)) => {
                let step = (candidate - x).norm();
                x = candidate;
                eval = e;
                mu = (mu / 3.0).max(MIN_DAMPING);
                if step < settings.step_tolerance {
                    return LocalResult { x, eval, converged: true, iterations: it + 1 };
                }
            }
            None => {
                if attempted < settings.step_tolerance {
                    return LocalResult { x, eval, converged: true, iterations: it + 1 };
                }
                mu *= 4.0;
                if mu > MAX_DAMPING {
                    break;
                }
            }
        }
    }
    LocalResult {
        x,
        eval,
        converged: false,
        iterations: settings.max_iterations,
    }
}

/// [`solve_frame_seeded`] with random stream 0.
pub fn solve_frame(
    problem: &IkProblem,
    warm_start: Option<&JointVector>,
    settings: &IkSettings,
) -> Result<IkSolution, IkError> {
    solve_frame_seeded(problem, warm_start, settings, 0)
}

/// Multi-start bounded minimization. Starts are the zero pose, the warm
/// start if given, and random points of the feasible set drawn from
/// `settings.seed` on random stream `stream`. Returns the start with the
/// lowest true cost, ties going to the lowest start index.
pub fn solve_frame_seeded(
    problem: &IkProblem,
    warm_start: Option<&JointVector>,
    settings: &IkSettings,
    stream: u64,
) -> Result<IkSolution, IkError> {
    problem.check_dimensions()?;
    settings.validate()?;
    let starts = start_points(problem, warm_start, settings, stream);
    let results = map_indexed(starts.len(), settings.execution, |i| local_descent(problem, &starts[i], settings));
    let (index, best) = results
        .iter()
        .enumerate()
        .fold(None::<(usize, &LocalResult)>, |acc, (i, r)| match acc {
            Some((_, b)) if b.eval.cost <= r.eval.cost => acc,
            _ => Some((i, r)),
        })
        .expect("at least one start");
    Ok(IkSolution {
        joints: JointVector::from_array(&best.x.into()),
        residual: best.eval.mean_distance,
        cost: best.eval.cost,
        converged: best.converged,
        iterations: best.iterations,
        start: index,
    })
}

fn sample_from(timestamp: f64, s: &IkSolution) -> TrajectorySample {
    TrajectorySample {
        timestamp,
        joints: s.joints,
        residual: s.residual,
        cost: s.cost,
        converged: s.converged,
        iterations: s.iterations,
    }
}

/// Solves every frame of a curve set in temporal order, each warm-started
/// from the previous solution. When the jump from the last frame back to the
/// first exceeds the smoothness bound, a second pass re-solves every frame
/// warm-started from its predecessor (the first from the last) and keeps any
/// solution that is no worse.
pub fn solve_period(
    curve_set: &GaitCurveSet,
    config: &RobotConfig,
    settings: &IkSettings,
) -> Result<JointTrajectory, IkError> {
    settings.validate()?;
    let problems = curve_set
        .curves
        .iter()
        .map(|c| IkProblem::from_curve(c, config.clone(), curve_set.samples_per_section, settings.lambda))
        .collect::<Result<Vec<_>, _>>()?;

    let mut solutions: Vec<IkSolution> = Vec::with_capacity(problems.len());
    for (i, p) in problems.iter().enumerate() {
        let warm = solutions.last().map(|s| s.joints);
        solutions.push(solve_frame_seeded(p, warm.as_ref(), settings, i as u64)?);
    }

    let n = solutions.len();
    let wrap = |s: &[IkSolution]| s[n - 1].joints.max_abs_diff(&s[0].joints);
    let closure_pass = n > 1 && wrap(&solutions) > settings.smoothness_bound;
    if closure_pass {
        for i in 0..n {
            let warm = solutions[(i + n - 1) % n].joints;
            let again = solve_frame_seeded(&problems[i], Some(&warm), settings, (n + i) as u64)?;
            let old = &solutions[i];
            if again.cost <= old.cost * (1.0 + 1e-9) + 1e-12 {
                solutions[i] = again;
            }
        }
    }

    let mut violations = Vec::new();
    // With two frames the wrap pair is the same pair again.
    let pairs = if n > 2 { n } else { n.saturating_sub(1) };
    for i in 0..pairs {
        let next = (i + 1) % n;
        let change = solutions[i].joints.max_abs_diff(&solutions[next].joints);
        if change > settings.smoothness_bound {
            violations.push(SmoothnessViolation {
                from: i,
                to: next,
                max_change: change,
            });
        }
    }

    Ok(JointTrajectory {
        kind: curve_set.kind,
        period: curve_set.period,
        lambda: settings.lambda,
        samples: curve_set
            .curves
            .iter()
            .zip(&solutions)
            .map(|(c, s)| sample_from(c.timestamp, s))
            .collect(),
        closure_pass,
        smoothness_violations: violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gait::{generate_curve_set, FramedCurve, GaitKind, GaitSpec, RollingParams};
    use crate::kinematics::{sample_backbone, BasePose, PoseTransform};
    use crate::parallel::Execution;

    fn target_from(q: &JointVector, robot: &RobotConfig) -> Vec<nalgebra::Vector3<f64>> {
        sample_backbone(&BasePose::identity(), q, robot, 15)
    }

    #[test]
    fn straight_target_solves_to_zero() {
        let robot = RobotConfig::default();
        let p = IkProblem::new(target_from(&JointVector::zero(), &robot), robot, 15, 1.0).unwrap();
        let s = solve_frame(&p, None, &IkSettings::default()).unwrap();
        assert!(s.converged);
        assert!(s.joints.max_abs_diff(&JointVector::zero()) < 1e-4);
        assert!(s.residual < 1e-9);
    }

    #[test]
    fn recovers_known_rolling_joints() {
        let robot = RobotConfig::default();
        let q = crate::gait::rolling_joint_pattern(&RollingParams::default(), &robot, 0.37);
        let p = IkProblem::new(target_from(&q, &robot), robot, 15, 0.0).unwrap();
        let s = solve_frame(&p, None, &IkSettings::default()).unwrap();
        assert!(s.converged);
        assert!(s.joints.max_abs_diff(&q) < 1e-4, "{}", s.joints.max_abs_diff(&q));
    }

    #[test]
    fn solutions_stay_in_bounds() {
        let robot = RobotConfig::default();
        // A target beyond reach pushes actuators into their limits.
        let q = JointVector::from_array(&[0.2, -0.1, 0.2, -0.1, 0.2, -0.1, 0.2, -0.1]);
        let p = IkProblem::new(target_from(&q, &robot), robot.clone(), 15, 0.0).unwrap();
        let s = solve_frame(&p, None, &IkSettings::default()).unwrap();
        robot.check_joints(&s.joints).unwrap();
    }

    #[test]
    fn parallel_and_sequential_starts_agree() {
        let robot = RobotConfig::default();
        let q = crate::gait::rolling_joint_pattern(&RollingParams::default(), &robot, 0.1);
        let p = IkProblem::new(target_from(&q, &robot), robot, 15, 1.0).unwrap();
        let seq = IkSettings {
            execution: Execution::Sequential,
            ..IkSettings::default()
        };
        let par = IkSettings {
            execution: Execution::Parallel,
            ..IkSettings::default()
        };
        assert_eq!(solve_frame(&p, None, &seq).unwrap(), solve_frame(&p, None, &par).unwrap());
    }

    #[test]
    fn constant_target_gives_constant_solutions() {
        let robot = RobotConfig::default();
        let q = crate::gait::rolling_joint_pattern(&RollingParams::default(), &robot, 0.2);
        let points = target_from(&q, &robot);
        let curve = |t: f64| FramedCurve {
            timestamp: t,
            points: points.clone(),
            source_frames: vec![PoseTransform::identity(); points.len()],
            body_frame: PoseTransform::identity(),
        };
        let set = GaitCurveSet {
            kind: GaitKind::HelicalRolling,
            period: 1.0,
            samples_per_section: 15,
            curves: (0..5).map(|i| curve(i as f64 * 0.2)).collect(),
        };
        let traj = solve_period(&set, &robot, &IkSettings::default()).unwrap();
        for w in traj.samples.windows(2) {
            assert!(w[0].joints.max_abs_diff(&w[1].joints) <= 1e-9);
        }
        assert!(traj.smoothness_violations.is_empty());
        assert!(!traj.closure_pass);
    }

    #[test]
    fn helical_period_is_fitted_exactly() {
        let robot = RobotConfig::default();
        let spec = GaitSpec::Rolling(RollingParams::default());
        let set = generate_curve_set(&spec, &robot, Execution::Parallel).unwrap();
        let traj = solve_period(&set, &robot, &IkSettings::default()).unwrap();
        traj.check_convergence().unwrap();
        assert!(traj.max_residual() < 1e-6, "{}", traj.max_residual());
    }
}
