use crate::planner::{check_steps, ProblemQuery};
use crate::workspace::Workspace;
use crate::Point3;

/// A reusable tail of the previous plan.
#[derive(Debug, Clone, PartialEq)]
pub struct Reuse {
    /// Index of the matched configuration in `prev`.
    pub k: usize,
    /// `prev[k..]`, a feasible plan towards the current goals.
    pub seed: Vec<Vec<Point3>>,
}

/// Finds the first step of `prev` within `delta` (per-agent max norm) of
/// `q_new` whose suffix is still feasible for the goals, radius and
/// obstacle time of `template`. The template's starts are ignored.
pub fn try_reuse(
    q_new: &[Point3],
    prev: &[Vec<Point3>],
    delta: f64,
    template: &ProblemQuery,
    ws: &Workspace,
) -> Option<Reuse> {
    let mut query = template.clone();
    for (k, q) in prev.iter().enumerate() {
        if q.len() != q_new.len() {
            return None;
        }
        let dev = q.iter().zip(q_new).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        if dev > delta {
            continue;
        }
        query.starts = q.clone();
        let suffix = &prev[k..];
        if check_steps(suffix, &query, ws).is_empty() {
            return Some(Reuse {
                k,
                seed: suffix.to_vec(),
            });
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::workspace::{Obstacle, Shape};

    fn line(n: usize) -> Vec<Vec<Point3>> {
        (0..n)
            .map(|k| vec![Point3::new(1.0 + 0.25 * k as f64, 1.0, 1.0), Point3::new(1.0 + 0.25 * k as f64, 2.0, 1.0)])
            .collect()
    }

    fn setup() -> (Workspace, ProblemQuery, Vec<Vec<Point3>>) {
        let ws = Workspace::new(Point3::zeros(), Point3::new(6.0, 6.0, 2.0), vec![]).unwrap();
        let plan = line(9);
        let q = ProblemQuery::new(plan[0].clone(), plan[8].clone(), 0.2, 0.25);
        (ws, q, plan)
    }

    #[test]
    fn unchanged_world_reuses_everything() {
        let (ws, q, plan) = setup();
        let r = try_reuse(&plan[0], &plan, 0.125, &q, &ws).unwrap();
        assert_eq!(r.k, 0);
        assert_eq!(r.seed, plan);
    }

    #[test]
    fn far_deviation_gives_none() {
        let (ws, q, plan) = setup();
        let off: Vec<Point3> = plan[0].iter().map(|p| p + Point3::new(0.0, 0.0, 0.25)).collect();
        assert!(try_reuse(&off, &plan, 0.125, &q, &ws).is_none());
    }

    #[test]
    fn one_step_ahead_matches_k_one() {
        let (ws, q, plan) = setup();
        let r = try_reuse(&plan[1], &plan, 0.125, &q, &ws).unwrap();
        assert_eq!(r.k, 1);
        assert_eq!(r.seed.len(), plan.len() - 1);
    }

    #[test]
    fn obstacle_moved_onto_the_suffix_rejects_it() {
        let (mut ws, q, plan) = setup();
        ws.obstacles.push(Obstacle::moving(
            Shape::Sphere {
                center: Point3::new(5.0, 5.0, 1.0),
                radius: 0.2,
            },
            vec![(0.0, Point3::new(5.0, 5.0, 1.0)), (1.0, Point3::new(2.0, 1.0, 1.0))],
        ));
        assert!(try_reuse(&plan[0], &plan, 0.125, &q, &ws).is_some());
        let later = ProblemQuery { time: 1.0, ..q };
        assert!(try_reuse(&plan[0], &plan, 0.125, &later, &ws).is_none());
    }

    #[test]
    fn changed_goals_reject_the_suffix() {
        let (ws, q, plan) = setup();
        let moved = ProblemQuery {
            goals: vec![Point3::new(4.0, 4.0, 1.0), q.goals[1]],
            ..q
        };
        assert!(try_reuse(&plan[0], &plan, 0.125, &moved, &ws).is_none());
    }
}
