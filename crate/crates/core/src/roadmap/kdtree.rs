use crate::Point3;

/// Static 3-D k-d tree stored as an implicit balanced layout over a
/// permutation of the input points.
#[derive(Debug, Clone)]
pub struct KdTree {
    points: Vec<Point3>,
    perm: Vec<u32>,
    axis: Vec<u8>,
}

impl KdTree {
    pub fn new(points: Vec<Point3>) -> Self {
        let n = points.len();
        let mut tree = Self {
            points,
            perm: (0..n as u32).collect(),
            axis: vec![0; n],
        };
        tree.build(0, n);
        tree
    }

    fn build(&mut self, lo: usize, hi: usize) {
        if hi <= lo + 1 {
            return;
        }
        let mut min = Point3::repeat(f64::INFINITY);
        let mut max = Point3::repeat(f64::NEG_INFINITY);
        for &i in &self.perm[lo..hi] {
            let p = &self.points[i as usize];
            min = min.inf(p);
            max = max.sup(p);
        }
        let spread = max - min;
        let axis = spread.imax();
        let mid = (lo + hi) / 2;
        let points = &self.points;
        self.perm[lo..hi].select_nth_unstable_by(mid - lo, |a, b| {
            points[*a as usize][axis].total_cmp(&points[*b as usize][axis])
        });
        self.axis[mid] = axis as u8;
        self.build(lo, mid);
        self.build(mid + 1, hi);
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, i: usize) -> &Point3 {
        &self.points[i]
    }

    /// Calls `f(index, squared_distance)` for every point within `radius` of `q`.
    pub fn for_each_within<F: FnMut(usize, f64)>(&self, q: &Point3, radius: f64, mut f: F) {
        let r2 = radius * radius;
        let mut stack = [(0usize, 0usize); 64];
        let mut top = 0;
        stack[top] = (0, self.points.len());
        top += 1;
        while top > 0 {
            top -= 1;
            let (lo, hi) = stack[top];
            if lo >= hi {
                continue;
            }
            let mid = (lo + hi) / 2;
            let idx = self.perm[mid] as usize;
            let p = &self.points[idx];
            let d2 = (p - q).norm_squared();
            if d2 <= r2 {
                f(idx, d2);
            }
            if hi - lo == 1 {
                continue;
            }
            let axis = self.axis[mid] as usize;
            let diff = q[axis] - p[axis];
            let (near, far) = if diff < 0.0 {
                ((lo, mid), (mid + 1, hi))
            } else {
                ((mid + 1, hi), (lo, mid))
            };
            if diff.abs() <= radius {
                stack[top] = far;
                top += 1;
            }
            stack[top] = near;
            top += 1;
        }
    }

    /// Indices within `radius` of `q`, sorted ascending.
    pub fn within(&self, q: &Point3, radius: f64) -> Vec<usize> {
        let mut out = Vec::new();
        self.for_each_within(q, radius, |i, _| out.push(i));
        out.sort_unstable();
        out
    }
}
