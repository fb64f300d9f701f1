//! Geometric world model: the closed workspace box, analytic obstacles with
//! optional piecewise-linear motion, and every collision query used by the
//! roadmap, the search, path smoothing and the simulator.

mod grid;
mod shape;

pub use grid::OccupancyGrid;
pub use shape::{point_segment_distance, Shape};

use thiserror::Error;

use crate::Point3;

/// Inflation applied to moving obstacles unless configured otherwise (m).
pub const DEFAULT_DYNAMIC_MARGIN: f64 = 0.05;

#[derive(Debug, Error, PartialEq)]
pub enum WorkspaceError {
    #[error("workspace bounds must satisfy min < max on every axis, got {min:?} / {max:?}")]
    InvalidBounds { min: [f64; 3], max: [f64; 3] },
    #[error("obstacle {index}: {reason}")]
    InvalidObstacle { index: usize, reason: String },
    #[error("obstacle {index} does not intersect the workspace")]
    ObstacleOutside { index: usize },
    #[error("planar height {z} lies outside the z bounds")]
    PlaneOutside { z: f64 },
}

/// An obstacle volume, static or following a clamped piecewise-linear schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct Obstacle {
    pub shape: Shape,
    /// `(time_s, center)` waypoints; empty for static obstacles.
    pub schedule: Vec<(f64, Point3)>,
}

impl Obstacle {
    pub fn fixed(shape: Shape) -> Self {
        Self {
            shape,
            schedule: Vec::new(),
        }
    }

    pub fn moving(shape: Shape, schedule: Vec<(f64, Point3)>) -> Self {
        Self { shape, schedule }
    }

    pub fn is_dynamic(&self) -> bool {
        !self.schedule.is_empty()
    }

    /// Center at time `t`, linearly interpolated and clamped at the schedule ends.
    pub fn center_at(&self, t: f64) -> Point3 {
        let s = &self.schedule;
        match s.len() {
            0 => self.shape.center(),
            1 => s[0].1,
            _ => {
                if t <= s[0].0 {
                    return s[0].1;
                }
                let last = s[s.len() - 1];
                if t >= last.0 {
                    return last.1;
                }
                let k = s.partition_point(|(ti, _)| *ti <= t) - 1;
                let (t0, c0) = s[k];
                let (t1, c1) = s[k + 1];
                let w = (t - t0) / (t1 - t0);
                c0 + (c1 - c0) * w
            }
        }
    }

    pub fn shape_at(&self, t: f64) -> Shape {
        if self.schedule.is_empty() {
            self.shape
        } else {
            self.shape.translated(&(self.center_at(t) - self.shape.center()))
        }
    }

    fn validate(&self, index: usize) -> Result<(), WorkspaceError> {
        let bad = |reason: &str| WorkspaceError::InvalidObstacle {
            index,
            reason: reason.to_string(),
        };
        match self.shape {
            Shape::Sphere { radius, .. } | Shape::Pole { radius, .. } if !(radius > 0.0) => {
                return Err(bad("radius must be positive"))
            }
            Shape::Pole { z_min, z_max, .. } if !(z_min < z_max) => {
                return Err(bad("pole z range must be increasing"))
            }
            Shape::Box { min, max } if !(0..3).all(|k| min[k] < max[k]) => {
                return Err(bad("box min must be below max on every axis"))
            }
            _ => {}
        }
        if self.schedule.windows(2).any(|w| !(w[0].0 < w[1].0)) {
            return Err(bad("schedule times must be strictly increasing"));
        }
        Ok(())
    }
}

/// Closed axis-aligned workspace with obstacles.
#[derive(Debug, Clone, PartialEq)]
pub struct Workspace {
    pub bounds_min: Point3,
    pub bounds_max: Point3,
    pub obstacles: Vec<Obstacle>,
    /// Fixed height of every agent in planar mode.
    pub plane_z: Option<f64>,
    /// Extra radius given to moving obstacles for planning queries.
    pub dynamic_margin: f64,
}

impl Workspace {
    pub fn new(
        bounds_min: Point3,
        bounds_max: Point3,
        obstacles: Vec<Obstacle>,
    ) -> Result<Self, WorkspaceError> {
        let ws = Self {
            bounds_min,
            bounds_max,
            obstacles,
            plane_z: None,
            dynamic_margin: DEFAULT_DYNAMIC_MARGIN,
        };
        ws.validate()?;
        Ok(ws)
    }

    pub fn planar(
        bounds_min: Point3,
        bounds_max: Point3,
        z: f64,
        obstacles: Vec<Obstacle>,
    ) -> Result<Self, WorkspaceError> {
        let ws = Self {
            bounds_min,
            bounds_max,
            obstacles,
            plane_z: Some(z),
            dynamic_margin: DEFAULT_DYNAMIC_MARGIN,
        };
        ws.validate()?;
        Ok(ws)
    }

    pub fn with_dynamic_margin(mut self, margin: f64) -> Self {
        self.dynamic_margin = margin;
        self
    }

    pub fn is_planar(&self) -> bool {
        self.plane_z.is_some()
    }

    pub fn validate(&self) -> Result<(), WorkspaceError> {
        let (min, max) = (self.bounds_min, self.bounds_max);
        let z_ok = if self.is_planar() {
            min.z <= max.z
        } else {
            min.z < max.z
        };
        if !(min.x < max.x && min.y < max.y && z_ok) {
            return Err(WorkspaceError::InvalidBounds {
                min: min.into(),
                max: max.into(),
            });
        }
        if let Some(z) = self.plane_z {
            if z < min.z || z > max.z {
                return Err(WorkspaceError::PlaneOutside { z });
            }
        }
        let bounds = Shape::Box { min, max };
        for (index, ob) in self.obstacles.iter().enumerate() {
            ob.validate(index)?;
            if !ob.is_dynamic() && !shapes_overlap(&bounds, &ob.shape) {
                return Err(WorkspaceError::ObstacleOutside { index });
            }
        }
        Ok(())
    }

    /// True iff `p` lies inside the workspace (z ignored in planar mode).
    pub fn contains(&self, p: &Point3) -> bool {
        self.inside_shrunk(p, 0.0)
    }

    /// `p` lies inside W shrunk by `r` (z ignored in planar mode).
    pub fn inside_shrunk(&self, p: &Point3, r: f64) -> bool {
        let axes = if self.is_planar() { 2 } else { 3 };
        (0..axes).all(|k| p[k] - r >= self.bounds_min[k] && p[k] + r <= self.bounds_max[k])
    }

    /// Projects `p` onto the workspace shrunk by `r` (and onto the plane in planar mode).
    pub fn clamp(&self, p: &Point3, r: f64) -> Point3 {
        let mut q = *p;
        for k in 0..3 {
            let lo = self.bounds_min[k] + r;
            let hi = self.bounds_max[k] - r;
            q[k] = if lo <= hi {
                q[k].clamp(lo, hi)
            } else {
                0.5 * (self.bounds_min[k] + self.bounds_max[k])
            };
        }
        if let Some(z) = self.plane_z {
            q.z = z;
        }
        q
    }

    /// Obstacle shapes as seen by a planning query at time `t`: moving
    /// obstacles frozen at `t` and inflated by the dynamic margin.
    pub fn shapes_at(&self, t: f64) -> impl Iterator<Item = Shape> + '_ {
        self.obstacles.iter().map(move |ob| {
            if ob.is_dynamic() {
                ob.shape_at(t).inflated(self.dynamic_margin)
            } else {
                ob.shape
            }
        })
    }

    /// Sphere of radius `r` at `p` is clear of every obstacle at `t` and inside W shrunk by `r`.
    pub fn point_free(&self, p: &Point3, r: f64, t: f64) -> bool {
        self.inside_shrunk(p, r) && self.shapes_at(t).all(|s| s.distance(p) > r)
    }

    /// Swept sphere along `a..b` is clear. Tangency counts as collision.
    pub fn segment_free(&self, a: &Point3, b: &Point3, r: f64, t: f64) -> bool {
        self.inside_shrunk(a, r)
            && self.inside_shrunk(b, r)
            && self.shapes_at(t).all(|s| s.segment_clear(a, b, r))
    }

    /// Like [`Workspace::segment_free`] but only against static obstacles.
    pub fn segment_free_static(&self, a: &Point3, b: &Point3, r: f64) -> bool {
        self.inside_shrunk(a, r)
            && self.inside_shrunk(b, r)
            && self
                .obstacles
                .iter()
                .filter(|ob| !ob.is_dynamic())
                .all(|ob| ob.shape.segment_clear(a, b, r))
    }

    /// Distance from `p` to the nearest true obstacle surface at `t`, no margin.
    pub fn obstacle_clearance(&self, p: &Point3, t: f64) -> f64 {
        self.obstacles
            .iter()
            .map(|ob| ob.shape_at(t).distance(p))
            .fold(f64::INFINITY, f64::min)
    }
}

fn shapes_overlap(bounds: &Shape, shape: &Shape) -> bool {
    let Shape::Box { min, max } = *bounds else {
        unreachable!("bounds are a box")
    };
    match *shape {
        Shape::Sphere { center, .. } => shape.distance(&center.inf(&max).sup(&min)) == 0.0,
        Shape::Box {
            min: bmin,
            max: bmax,
        } => (0..3).all(|k| bmin[k] <= max[k] && bmax[k] >= min[k]),
        Shape::Pole {
            x,
            y,
            z_min,
            z_max,
            ..
        } => {
            let nearest = Point3::new(x.clamp(min.x, max.x), y.clamp(min.y, max.y), 0.0);
            let probe = Point3::new(nearest.x, nearest.y, z_min.clamp(min.z, max.z));
            z_min <= max.z && z_max >= min.z && shape.distance(&probe) == 0.0
        }
    }
}

/// Minimum distance between two points moving linearly and synchronously
/// from `a0→a1` and `b0→b1`. Their offset is linear in the shared
/// parameter, so the minimum is the clamped vertex of a parabola.
pub fn pair_min_distance(a0: &Point3, a1: &Point3, b0: &Point3, b1: &Point3) -> f64 {
    let d0 = a0 - b0;
    let e = (a1 - b1) - d0;
    let ee = e.norm_squared();
    let alpha = if ee > 0.0 {
        (-d0.dot(&e) / ee).clamp(0.0, 1.0)
    } else {
        0.0
    };
    (d0 + e * alpha).norm()
}
