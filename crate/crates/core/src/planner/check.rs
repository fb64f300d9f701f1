//! Plan validator. Static clearance is evaluated with its own point-distance
//! routines minimised along each step, independent of the search's
//! closed-form segment queries.

use std::fmt;

use serde::Serialize;

use super::{Plan, ProblemQuery};
use crate::workspace::{pair_min_distance, Shape, Workspace};
use crate::Point3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    Start,
    Goal,
    StepLength,
    StaticClearance,
    Pairwise,
    OutOfBounds,
    Malformed,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub kind: ViolationKind,
    /// Step (or transition start) index.
    pub step: usize,
    pub agents: Vec<usize>,
    /// How far the condition is missed (m).
    pub margin: f64,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:?} at step {} agents {:?} margin {:.6} m",
            self.kind, self.step, self.agents, self.margin
        )
    }
}

fn point_distance(shape: &Shape, p: &Point3) -> f64 {
    match *shape {
        Shape::Sphere { center, radius } => (p - center).norm() - radius,
        Shape::Box { min, max } => {
            let outside = Point3::from_fn(|k, _| (min[k] - p[k]).max(p[k] - max[k]).max(0.0));
            outside.norm()
        }
        Shape::Pole {
            x,
            y,
            radius,
            z_min,
            z_max,
        } => {
            let radial = ((p.x - x).powi(2) + (p.y - y).powi(2)).sqrt() - radius;
            let axial = (z_min - p.z).max(p.z - z_max);
            radial.max(0.0).hypot(axial.max(0.0))
        }
    }
}

/// Minimum of `point_distance` along `a → b` by golden-section search
/// (distance to a convex body is convex along a line).
fn segment_clearance(shape: &Shape, a: &Point3, b: &Point3) -> f64 {
    let f = |s: f64| point_distance(shape, &(a + (b - a) * s));
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..100 {
        let m1 = hi - g * (hi - lo);
        let m2 = lo + g * (hi - lo);
        if f(m1) <= f(m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    f(0.5 * (lo + hi)).min(f(0.0)).min(f(1.0))
}

/// Every violated solution condition of `plan` for `query` in `ws`.
/// Returns an empty list iff the plan is feasible.
pub fn check_plan(plan: &Plan, query: &ProblemQuery, ws: &Workspace) -> Vec<Violation> {
    check_steps(&plan.steps.iter().map(|q| q.0.clone()).collect::<Vec<_>>(), query, ws)
}

pub(crate) fn check_steps(steps: &[Vec<Point3>], query: &ProblemQuery, ws: &Workspace) -> Vec<Violation> {
    let mut out = Vec::new();
    let n = query.starts.len();
    let r = query.r_agent;
    let malformed = |step: usize| Violation {
        kind: ViolationKind::Malformed,
        step,
        agents: vec![],
        margin: 0.0,
    };
    if steps.is_empty() {
        out.push(malformed(0));
        return out;
    }
    if let Some(k) = steps
        .iter()
        .position(|q| q.len() != n || q.iter().any(|p| !p.iter().all(|c| c.is_finite())))
    {
        out.push(malformed(k));
        return out;
    }

    for i in 0..n {
        let dev = (steps[0][i] - query.starts[i]).norm();
        if dev > 1e-9 {
            out.push(Violation {
                kind: ViolationKind::Start,
                step: 0,
                agents: vec![i],
                margin: dev,
            });
        }
        let last = steps.len() - 1;
        let miss = (steps[last][i] - query.goals[i]).norm() - query.r_target;
        if miss > 0.0 {
            out.push(Violation {
                kind: ViolationKind::Goal,
                step: last,
                agents: vec![i],
                margin: miss,
            });
        }
    }

    let shapes: Vec<Shape> = ws.shapes_at(query.time).collect();
    for (k, q) in steps.iter().enumerate() {
        for (i, p) in q.iter().enumerate() {
            let axes = if ws.plane_z.is_some() { 2 } else { 3 };
            let escape = (0..axes)
                .map(|a| (ws.bounds_min[a] + r - p[a]).max(p[a] - (ws.bounds_max[a] - r)))
                .fold(f64::NEG_INFINITY, f64::max);
            if escape > 0.0 {
                out.push(Violation {
                    kind: ViolationKind::OutOfBounds,
                    step: k,
                    agents: vec![i],
                    margin: escape,
                });
            }
        }
        let Some(next) = steps.get(k + 1) else {
            if steps.len() == 1 {
                for (i, p) in q.iter().enumerate() {
                    let c = shapes.iter().map(|s| point_distance(s, p)).fold(f64::INFINITY, f64::min);
                    if c <= r {
                        out.push(Violation {
                            kind: ViolationKind::StaticClearance,
                            step: k,
                            agents: vec![i],
                            margin: r - c,
                        });
                    }
                }
            }
            continue;
        };
        for i in 0..n {
            let (a, b) = (q[i], next[i]);
            let len = (b - a).norm();
            if len > query.d_travel * (1.0 + 1e-9) {
                out.push(Violation {
                    kind: ViolationKind::StepLength,
                    step: k,
                    agents: vec![i],
                    margin: len - query.d_travel,
                });
            }
            let c = shapes
                .iter()
                .map(|s| segment_clearance(s, &a, &b))
                .fold(f64::INFINITY, f64::min);
            if c <= r {
                out.push(Violation {
                    kind: ViolationKind::StaticClearance,
                    step: k,
                    agents: vec![i],
                    margin: r - c,
                });
            }
        }
        for i in 0..n {
            for j in i + 1..n {
                let d = pair_min_distance(&q[i], &next[i], &q[j], &next[j]);
                if d < 2.0 * r {
                    out.push(Violation {
                        kind: ViolationKind::Pairwise,
                        step: k,
                        agents: vec![i, j],
                        margin: 2.0 * r - d,
                    });
                }
            }
        }
    }
    if steps.len() == 1 {
        let q = &steps[0];
        for i in 0..n {
            for j in i + 1..n {
                let d = (q[i] - q[j]).norm();
                if d < 2.0 * r {
                    out.push(Violation {
                        kind: ViolationKind::Pairwise,
                        step: 0,
                        agents: vec![i, j],
                        margin: 2.0 * r - d,
                    });
                }
            }
        }
    }
    out
}
