use super::*;
use approx::assert_relative_eq;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

type NoRng = ChaCha8Rng;

#[test]
fn colinear_waypoints_give_constant_velocity() {
    let path = [Point3::zeros(), Point3::new(0.25, 0.0, 0.0), Point3::new(0.5, 0.0, 0.0)];
    for t in [0.0, 0.2, 0.5, 0.7, 0.99] {
        let s = interpolate(&path, 0.5, t);
        assert_relative_eq!(s.v, Point3::new(0.5, 0.0, 0.0), epsilon = 1e-12);
        assert_relative_eq!(s.a, Point3::zeros(), epsilon = 1e-12);
    }
    let mid = interpolate(&path, 0.5, 0.5);
    assert_relative_eq!(mid.p, path[1], epsilon = 1e-12);
}

#[test]
fn single_waypoint_holds() {
    let p = Point3::new(1.0, 2.0, 3.0);
    for t in [0.0, 1.0, 100.0] {
        let s = interpolate(&[p], 0.5, t);
        assert_eq!(s.p, p);
        assert_eq!(s.v, Point3::zeros());
        assert_eq!(s.a, Point3::zeros());
    }
}

#[test]
fn right_angle_corner_curvature() {
    let path = [Point3::zeros(), Point3::new(1.0, 0.0, 0.0), Point3::new(1.0, 1.0, 0.0)];
    let s = interpolate(&path, 1.0, 1.5);
    // Quadratic through the three corners, evaluated half a step past the middle one.
    assert_relative_eq!(s.p, Point3::new(1.125, 0.375, 0.0), epsilon = 1e-12);
    assert_relative_eq!(s.a.norm(), 2f64.sqrt(), epsilon = 1e-12);
    assert_relative_eq!(s.a.normalize(), Point3::new(-1.0, 1.0, 0.0).normalize(), epsilon = 1e-12);
}

#[test]
fn past_the_end_holds_final_waypoint() {
    let path = [Point3::zeros(), Point3::new(0.25, 0.0, 0.0), Point3::new(0.25, 0.25, 0.0)];
    let s = interpolate(&path, 0.5, 1.0);
    assert_eq!(s.p, path[2]);
    assert_eq!(s.v, Point3::zeros());
    assert_eq!(s.a, Point3::zeros());
}

#[test]
fn waypoints_are_hit_and_segments_join() {
    use rand::Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..10_000 {
        let len = rng.random_range(2..8);
        let pts: Vec<Point3> = (0..len)
            .map(|_| Point3::new(rng.random(), rng.random(), rng.random()))
            .collect();
        let traj = Trajectory::new(pts.clone(), 0.5);
        for (k, p) in pts.iter().enumerate() {
            let t = k as f64 * 0.5;
            let before = traj.sample(t - 1e-12);
            let at = traj.sample(t);
            assert!((at.p - p).norm() <= 1e-9);
            assert!((before.p - at.p).norm() <= 1e-9);
        }
    }
}

/// Independent scalar value iteration for the per-axis problem.
fn value_iteration_gain(q_pos: f64, q_vel: f64, r: f64, dt: f64, iters: usize) -> (f64, f64) {
    let (b1, b2) = (0.5 * dt * dt, dt);
    let (mut p11, mut p12, mut p22) = (q_pos, 0.0, q_vel);
    let gain = |p11: f64, p12: f64, p22: f64| {
        // B'P and B'PB for A = [[1, dt], [0, 1]].
        let bp1 = b1 * p11 + b2 * p12;
        let bp2 = b1 * p12 + b2 * p22;
        let s = r + bp1 * b1 + bp2 * b2;
        let k1 = bp1 / s;
        let k2 = (bp1 * dt + bp2) / s;
        (k1, k2, s)
    };
    for _ in 0..iters {
        let (k1, k2, s) = gain(p11, p12, p22);
        // A'PA
        let a11 = p11;
        let a12 = p11 * dt + p12;
        let a22 = p11 * dt * dt + 2.0 * p12 * dt + p22;
        p11 = q_pos + a11 - s * k1 * k1;
        p12 = a12 - s * k1 * k2;
        p22 = q_vel + a22 - s * k2 * k2;
    }
    let (k1, k2, _) = gain(p11, p12, p22);
    (k1, k2)
}

#[test]
fn gains_match_value_iteration() {
    let params = ControllerParams {
        q_pos: 1.0,
        q_vel: 1.0,
        r_acc: 1.0,
        ..Default::default()
    };
    let g = derive_gains(&params).unwrap();
    let (k1, k2) = value_iteration_gain(1.0, 1.0, 1.0, 0.01, 1_000_000);
    assert!((g.k_fb[0] - k1).abs() <= 1e-8, "{} vs {k1}", g.k_fb[0]);
    assert!((g.k_fb[1] - k2).abs() <= 1e-8, "{} vs {k2}", g.k_fb[1]);
    assert!(g.closed_loop_radius() < 1.0);
}

#[test]
fn expensive_control_lowers_position_gain() {
    let base = ControllerParams::default();
    let cheap = derive_gains(&base).unwrap();
    let dear = derive_gains(&ControllerParams {
        r_acc: base.r_acc * 1e6,
        ..base
    })
    .unwrap();
    assert!(dear.k_fb[0].abs() < cheap.k_fb[0].abs());
}

#[test]
fn closed_loop_stable_over_weight_grid() {
    let scales = [1e-2, 1e-1, 1.0, 1e1, 1e2];
    for &qp in &scales {
        for &qv in &scales {
            for &r in &scales {
                let g = derive_gains(&ControllerParams {
                    q_pos: 8.0 * qp,
                    q_vel: 4.0 * qv,
                    r_acc: r,
                    ..Default::default()
                })
                .unwrap();
                assert!(g.closed_loop_radius() < 1.0, "qp {qp} qv {qv} r {r}");
            }
        }
    }
}

#[test]
fn bad_weights_are_rejected() {
    let bad = ControllerParams {
        r_acc: 0.0,
        ..Default::default()
    };
    assert!(matches!(derive_gains(&bad), Err(TrackingError::InvalidParams(_))));
}

fn ref_at(p: Point3, v: Point3, a: Point3) -> TrajectorySample {
    TrajectorySample { t: 0.0, p, v, a }
}

#[test]
fn control_law_examples() {
    let g = derive_gains(&ControllerParams::default()).unwrap();
    let s = RobotState::at_rest(Point3::new(1.0, 2.0, 3.0));
    let zero = Point3::zeros();
    assert_eq!(control_step(&s, &ref_at(s.p, zero, zero), &g), zero);
    let ff = control_step(&s, &ref_at(s.p, zero, Point3::x()), &g);
    assert_relative_eq!(ff, Point3::x(), epsilon = 1e-15);
    let far = control_step(&s, &ref_at(s.p + Point3::new(100.0, -100.0, 0.0), zero, zero), &g);
    assert_eq!(far, Point3::new(g.a_max, -g.a_max, 0.0));
}

#[test]
fn plant_examples() {
    let rest = RobotState::at_rest(Point3::zeros());
    let s = step_plant::<NoRng>(&rest, &Point3::x(), 1.0, None);
    assert_relative_eq!(s.p, Point3::new(0.5, 0.0, 0.0));
    assert_relative_eq!(s.v, Point3::x());

    let moving = RobotState {
        v: Point3::new(1.0, -2.0, 0.5),
        ..rest
    };
    let s = step_plant::<NoRng>(&moving, &Point3::zeros(), 2.0, None);
    assert_relative_eq!(s.p, moving.v * 2.0);
    assert_relative_eq!(s.v, moving.v);

    let u = Point3::new(0.3, -1.2, 2.0);
    let one = step_plant::<NoRng>(&moving, &u, 1.0, None);
    let mut many = moving;
    for _ in 0..1000 {
        many = step_plant::<NoRng>(&many, &u, 0.001, None);
    }
    assert!((one.p - many.p).norm() <= 1e-9);
    assert!((one.v - many.v).norm() <= 1e-9);
}

#[test]
fn disturbance_is_bounded_and_seeded() {
    let d = Disturbance::new(0.2);
    let mut a = ChaCha8Rng::seed_from_u64(3);
    let mut b = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..1000 {
        let x = d.sample(&mut a);
        assert_eq!(x, d.sample(&mut b));
        assert!(x.amax() <= 0.6);
    }
}

/// Tracks `path` from rest on its first waypoint; returns the max error and
/// the error 3 s after the reference stops.
fn track(path: Vec<Point3>, step_period: f64) -> (f64, f64) {
    let g = derive_gains(&ControllerParams::default()).unwrap();
    let traj = Trajectory::new(path.clone(), step_period);
    let mut s = RobotState::at_rest(path[0]);
    let ticks = ((traj.duration() + 3.0) / g.dt).round() as usize;
    let mut max_err: f64 = 0.0;
    for k in 0..ticks {
        let r = traj.sample(k as f64 * g.dt);
        max_err = max_err.max((s.p - r.p).norm());
        let u = control_step(&s, &r, &g);
        s = step_plant::<NoRng>(&s, &u, g.dt, None);
    }
    (max_err, (s.p - path[path.len() - 1]).norm())
}

#[test]
fn tracks_planner_paths_within_band() {
    use crate::planner::{solve, Budget, PlannerParams, ProblemQuery};
    use crate::workspace::{Obstacle, Shape, Workspace};
    let ws = Workspace::new(
        Point3::zeros(),
        Point3::new(6.0, 6.0, 2.0),
        vec![Obstacle::fixed(Shape::Pole {
            x: 3.0,
            y: 3.0,
            radius: 0.3,
            z_min: 0.0,
            z_max: 2.0,
        })],
    )
    .unwrap();
    let starts = vec![Point3::new(0.5, 0.5, 1.0), Point3::new(5.5, 0.5, 0.5)];
    let goals = vec![Point3::new(5.5, 5.5, 1.0), Point3::new(0.5, 5.0, 1.5)];
    let mut q = ProblemQuery::new(starts, goals, 0.2, 0.25);
    q.budget = Budget::Expansions(3000);
    let out = solve(&q, &ws, &PlannerParams::default()).unwrap();
    for i in 0..2 {
        let (max_err, final_err) = track(out.plan.path(i), 0.5);
        assert!(max_err <= 0.15, "agent {i}: {max_err}");
        assert!(final_err < 0.05, "agent {i}: {final_err}");
    }
}
