use crate::Point3;

/// Analytic obstacle primitive. All shapes are closed sets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Shape {
    Sphere { center: Point3, radius: f64 },
    /// Axis-aligned box given by its two extreme corners.
    Box { min: Point3, max: Point3 },
    /// Vertical capped cylinder spanning `z_min..=z_max`.
    Pole {
        x: f64,
        y: f64,
        radius: f64,
        z_min: f64,
        z_max: f64,
    },
}

impl Shape {
    /// Reference point used to translate the shape along a motion schedule.
    pub fn center(&self) -> Point3 {
        match *self {
            Shape::Sphere { center, .. } => center,
            Shape::Box { min, max } => (min + max) * 0.5,
            Shape::Pole {
                x, y, z_min, z_max, ..
            } => Point3::new(x, y, 0.5 * (z_min + z_max)),
        }
    }

    pub fn translated(&self, offset: &Point3) -> Shape {
        match *self {
            Shape::Sphere { center, radius } => Shape::Sphere {
                center: center + offset,
                radius,
            },
            Shape::Box { min, max } => Shape::Box {
                min: min + offset,
                max: max + offset,
            },
            Shape::Pole {
                x,
                y,
                radius,
                z_min,
                z_max,
            } => Shape::Pole {
                x: x + offset.x,
                y: y + offset.y,
                radius,
                z_min: z_min + offset.z,
                z_max: z_max + offset.z,
            },
        }
    }

    /// Grows the shape by `margin` in every direction (boxes grow their extents).
    pub fn inflated(&self, margin: f64) -> Shape {
        if margin == 0.0 {
            return *self;
        }
        match *self {
            Shape::Sphere { center, radius } => Shape::Sphere {
                center,
                radius: radius + margin,
            },
            Shape::Box { min, max } => Shape::Box {
                min: min.add_scalar(-margin),
                max: max.add_scalar(margin),
            },
            Shape::Pole {
                x,
                y,
                radius,
                z_min,
                z_max,
            } => Shape::Pole {
                x,
                y,
                radius: radius + margin,
                z_min: z_min - margin,
                z_max: z_max + margin,
            },
        }
    }

    /// Euclidean distance from `p` to the shape; zero inside.
    pub fn distance(&self, p: &Point3) -> f64 {
        match *self {
            Shape::Sphere { center, radius } => ((p - center).norm() - radius).max(0.0),
            Shape::Box { min, max } => {
                let d = Point3::new(
                    (min.x - p.x).max(p.x - max.x).max(0.0),
                    (min.y - p.y).max(p.y - max.y).max(0.0),
                    (min.z - p.z).max(p.z - max.z).max(0.0),
                );
                d.norm()
            }
            Shape::Pole {
                x,
                y,
                radius,
                z_min,
                z_max,
            } => {
                let radial = ((p.x - x).hypot(p.y - y) - radius).max(0.0);
                let dz = (z_min - p.z).max(p.z - z_max).max(0.0);
                radial.hypot(dz)
            }
        }
    }

    /// Minimum distance between the segment `a..b` and the shape.
    /// The sphere of radius `r` swept along `a..b` stays strictly clear.
    pub fn segment_clear(&self, a: &Point3, b: &Point3, r: f64) -> bool {
        // Distance is 1-Lipschitz, so the start point bounds the whole segment.
        self.distance(a) > (b - a).norm() + r || self.segment_distance(a, b) > r
    }

    pub fn segment_distance(&self, a: &Point3, b: &Point3) -> f64 {
        let ab = b - a;
        if ab.norm_squared() == 0.0 {
            return self.distance(a);
        }
        match *self {
            Shape::Sphere { center, radius } => {
                (point_segment_distance(&center, a, b) - radius).max(0.0)
            }
            Shape::Box { min, max } => segment_box_distance(a, b, &min, &max),
            Shape::Pole {
                x,
                y,
                radius,
                z_min,
                z_max,
            } => segment_pole_distance(a, b, x, y, radius, z_min, z_max),
        }
    }
}

pub fn point_segment_distance(p: &Point3, a: &Point3, b: &Point3) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    if len2 == 0.0 {
        return (p - a).norm();
    }
    let alpha = ((p - a).dot(&ab) / len2).clamp(0.0, 1.0);
    (a + ab * alpha - p).norm()
}

/// Minimum of a 1-D quadratic `qa·α² + qb·α + qc` over `[lo, hi]`.
fn quadratic_min(qa: f64, qb: f64, qc: f64, lo: f64, hi: f64) -> f64 {
    let eval = |t: f64| (qa * t + qb) * t + qc;
    let mut best = eval(lo).min(eval(hi));
    if qa > 0.0 {
        let t = -qb / (2.0 * qa);
        if t > lo && t < hi {
            best = best.min(eval(t));
        }
    }
    best.max(0.0)
}

/// Exact segment/AABB distance: the squared distance is a convex piecewise
/// quadratic in the segment parameter with breakpoints at slab crossings.
fn segment_box_distance(a: &Point3, b: &Point3, min: &Point3, max: &Point3) -> f64 {
    let ab = b - a;
    let mut breaks = [0.0f64; 8];
    let mut n = 0;
    breaks[n] = 0.0;
    n += 1;
    for k in 0..3 {
        if ab[k] != 0.0 {
            for bound in [min[k], max[k]] {
                let t = (bound - a[k]) / ab[k];
                if t > 0.0 && t < 1.0 {
                    breaks[n] = t;
                    n += 1;
                }
            }
        }
    }
    breaks[n] = 1.0;
    n += 1;
    let breaks = &mut breaks[..n];
    breaks.sort_by(|x, y| x.total_cmp(y));

    let mut best = f64::INFINITY;
    for w in breaks.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let mid = 0.5 * (lo + hi);
        let (mut qa, mut qb, mut qc) = (0.0, 0.0, 0.0);
        for k in 0..3 {
            let x = a[k] + mid * ab[k];
            let (c, s) = if x < min[k] {
                (min[k] - a[k], -ab[k])
            } else if x > max[k] {
                (a[k] - max[k], ab[k])
            } else {
                continue;
            };
            qa += s * s;
            qb += 2.0 * c * s;
            qc += c * c;
        }
        best = best.min(quadratic_min(qa, qb, qc, lo, hi));
    }
    best.sqrt()
}

fn segment_pole_distance(
    a: &Point3,
    b: &Point3,
    cx: f64,
    cy: f64,
    radius: f64,
    z_min: f64,
    z_max: f64,
) -> f64 {
    let ab = b - a;
    let mut breaks = [0.0f64; 4];
    let mut n = 1;
    if ab.z != 0.0 {
        for bound in [z_min, z_max] {
            let t = (bound - a.z) / ab.z;
            if t > 0.0 && t < 1.0 {
                breaks[n] = t;
                n += 1;
            }
        }
    }
    breaks[n] = 1.0;
    n += 1;
    let breaks = &mut breaks[..n];
    breaks.sort_by(|x, y| x.total_cmp(y));

    // Horizontal offset from the axis is linear in α: d(α) = d0 + α·e.
    let d0x = a.x - cx;
    let d0y = a.y - cy;
    let (ex, ey) = (ab.x, ab.y);
    let radial_sq = |t: f64| (d0x + t * ex).powi(2) + (d0y + t * ey).powi(2);
    let dz = |t: f64| {
        let z = a.z + t * ab.z;
        (z_min - z).max(z - z_max).max(0.0)
    };
    let dist = |t: f64| {
        let radial = (radial_sq(t).sqrt() - radius).max(0.0);
        radial.hypot(dz(t))
    };

    let mut best = f64::INFINITY;
    for w in breaks.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let mid = 0.5 * (lo + hi);
        let z = a.z + mid * ab.z;
        if z >= z_min && z <= z_max {
            let qa = ex * ex + ey * ey;
            let qb = 2.0 * (d0x * ex + d0y * ey);
            let qc = d0x * d0x + d0y * d0y;
            let rho = quadratic_min(qa, qb, qc, lo, hi).sqrt();
            best = best.min((rho - radius).max(0.0));
        } else {
            best = best.min(golden_min(&dist, lo, hi));
        }
    }
    best
}

/// Golden-section minimum of a convex function on `[lo, hi]`.
pub(crate) fn golden_min<F: Fn(f64) -> f64>(f: &F, mut lo: f64, mut hi: f64) -> f64 {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..80 {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        }
        if hi - lo < 1e-14 {
            break;
        }
    }
    f(lo).min(f(hi)).min(f1).min(f2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn sampled(shape: &Shape, a: &Point3, b: &Point3) -> f64 {
        (0..=20_000)
            .map(|i| shape.distance(&(a + (b - a) * (i as f64 / 20_000.0))))
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn box_segment_matches_sampling() {
        let shape = Shape::Box {
            min: Point3::new(0.0, 0.0, 0.0),
            max: Point3::new(1.0, 2.0, 0.5),
        };
        let cases = [
            (Point3::new(-1.0, -1.0, 1.0), Point3::new(2.0, 3.0, 2.0)),
            (Point3::new(-1.0, 1.0, 0.2), Point3::new(-0.5, 1.5, 0.2)),
            (Point3::new(2.0, -1.0, -1.0), Point3::new(3.0, 4.0, 1.0)),
            (Point3::new(0.5, 1.0, 0.2), Point3::new(3.0, 1.0, 0.2)),
        ];
        for (a, b) in cases {
            let exact = shape.segment_distance(&a, &b);
            assert!((exact - sampled(&shape, &a, &b)).abs() < 1e-3, "{a:?} {b:?}");
            assert!(exact <= sampled(&shape, &a, &b) + 1e-12);
        }
    }

    #[test]
    fn pole_segment_matches_sampling() {
        let shape = Shape::Pole {
            x: 1.0,
            y: 1.0,
            radius: 0.2,
            z_min: 0.0,
            z_max: 1.0,
        };
        let cases = [
            (Point3::new(0.0, 0.0, 0.5), Point3::new(2.0, 0.5, 0.5)),
            (Point3::new(0.0, 0.0, 1.5), Point3::new(2.0, 2.0, 2.5)),
            (Point3::new(0.0, 1.0, 2.0), Point3::new(2.0, 1.0, 0.5)),
            (Point3::new(1.0, 1.0, 3.0), Point3::new(1.0, 1.0, 1.2)),
        ];
        for (a, b) in cases {
            let exact = shape.segment_distance(&a, &b);
            assert!((exact - sampled(&shape, &a, &b)).abs() < 1e-3, "{a:?} {b:?}");
        }
    }

    #[test]
    fn sphere_point_segment() {
        let shape = Shape::Sphere {
            center: Point3::new(0.0, 1.0, 0.0),
            radius: 0.5,
        };
        let d = shape.segment_distance(&Point3::new(-1.0, 0.0, 0.0), &Point3::new(1.0, 0.0, 0.0));
        assert_relative_eq!(d, 0.5);
    }

    proptest::proptest! {
        #[test]
        fn segment_clear_agrees_with_distance(
            a in proptest::array::uniform3(-3.0f64..3.0),
            b in proptest::array::uniform3(-3.0f64..3.0),
            kind in 0u8..3,
            r in 0.0f64..1.0,
        ) {
            let shape = match kind {
                0 => Shape::Sphere { center: Point3::new(0.2, -0.1, 0.3), radius: 0.6 },
                1 => Shape::Box { min: Point3::new(-0.5, -1.0, 0.0), max: Point3::new(0.7, 0.4, 1.2) },
                _ => Shape::Pole { x: 0.3, y: 0.2, radius: 0.4, z_min: -1.0, z_max: 1.5 },
            };
            let (a, b) = (Point3::from(a), Point3::from(b));
            let exact = shape.segment_distance(&a, &b) > r;
            proptest::prop_assert_eq!(shape.segment_clear(&a, &b, r), exact);
        }
    }
}
