use crate::Point3;

use super::Workspace;

/// Voxel occupancy of the static obstacles, conservatively inflated by a
/// query radius. An unoccupied voxel guarantees every point inside it is at
/// least `radius` away from all static obstacles.
#[derive(Debug, Clone)]
pub struct OccupancyGrid {
    origin: Point3,
    voxel: f64,
    dims: [usize; 3],
    occupied: Vec<bool>,
}

impl OccupancyGrid {
    pub fn build(ws: &Workspace, voxel: f64, radius: f64) -> Self {
        assert!(voxel > 0.0, "voxel size must be positive");
        let origin = ws.bounds_min;
        let extent = ws.bounds_max - ws.bounds_min;
        let dims = [0, 1, 2].map(|k| ((extent[k] / voxel).ceil() as usize).max(1));
        let half_diag = 0.5 * voxel * 3f64.sqrt();
        let reach = radius + half_diag;
        let statics: Vec<_> = ws
            .obstacles
            .iter()
            .filter(|ob| !ob.is_dynamic())
            .map(|ob| ob.shape)
            .collect();
        let mut occupied = vec![false; dims[0] * dims[1] * dims[2]];
        for iz in 0..dims[2] {
            for iy in 0..dims[1] {
                for ix in 0..dims[0] {
                    let c = origin
                        + Point3::new(ix as f64 + 0.5, iy as f64 + 0.5, iz as f64 + 0.5) * voxel;
                    occupied[(iz * dims[1] + iy) * dims[0] + ix] =
                        statics.iter().any(|s| s.distance(&c) <= reach);
                }
            }
        }
        Self {
            origin,
            voxel,
            dims,
            occupied,
        }
    }

    fn index(&self, p: &Point3) -> Option<usize> {
        let mut idx = [0usize; 3];
        for k in 0..3 {
            let f = ((p[k] - self.origin[k]) / self.voxel).floor();
            if f < 0.0 || f as usize >= self.dims[k] {
                return None;
            }
            idx[k] = f as usize;
        }
        Some((idx[2] * self.dims[1] + idx[1]) * self.dims[0] + idx[0])
    }

    /// Occupied, or outside the grid (treated as occupied).
    pub fn is_occupied(&self, p: &Point3) -> bool {
        self.index(p).is_none_or(|i| self.occupied[i])
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn occupied_count(&self) -> usize {
        self.occupied.iter().filter(|o| **o).count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::workspace::{Obstacle, Shape};
    use proptest::prelude::*;

    fn ws() -> Workspace {
        Workspace::new(
            Point3::new(0.0, 0.0, 0.0),
            Point3::new(4.0, 4.0, 2.0),
            vec![
                Obstacle::fixed(Shape::Pole {
                    x: 1.0,
                    y: 1.0,
                    radius: 0.2,
                    z_min: 0.0,
                    z_max: 2.0,
                }),
                Obstacle::fixed(Shape::Box {
                    min: Point3::new(2.5, 2.5, 0.5),
                    max: Point3::new(3.0, 3.5, 1.0),
                }),
            ],
        )
        .unwrap()
    }

    #[test]
    fn empty_workspace_has_no_occupied_voxels() {
        let ws = Workspace::new(Point3::new(0.0, 0.0, 0.0), Point3::new(1.0, 1.0, 1.0), vec![])
            .unwrap();
        let grid = OccupancyGrid::build(&ws, 0.1, 0.2);
        assert_eq!(grid.occupied_count(), 0);
        assert_eq!(grid.dims(), [10, 10, 10]);
    }

    proptest! {
        // The grid may over-approximate but never misses a blocked point.
        #[test]
        fn grid_never_under_approximates(
            x in 0.0f64..4.0, y in 0.0f64..4.0, z in 0.0f64..2.0, r in 0.05f64..0.4
        ) {
            let ws = ws();
            let grid = OccupancyGrid::build(&ws, 0.25, r);
            let p = Point3::new(x, y, z);
            let hits_obstacle = ws.obstacles.iter().any(|ob| ob.shape.distance(&p) <= r);
            if hits_obstacle {
                prop_assert!(grid.is_occupied(&p));
            }
        }
    }
}
