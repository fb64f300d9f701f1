use crate::roadmap::{rotation_to, Roadmap};
use crate::Point3;
use nalgebra::Matrix3;

/// The motion primitives at `p`: the six signed unit axes rotated so that +x
/// follows the roadmap's descent direction, scaled by `d_travel`, then the
/// stay-still primitive. In planar mode the vertical pair is dropped and every
/// candidate is pinned to the plane.
pub fn successor_set(p: &Point3, rm: &Roadmap, d_travel: f64, plane_z: Option<f64>) -> Vec<Point3> {
    let frame = rm
        .frame_direction(p)
        .and_then(|dir| rotation_to(&dir).ok())
        .unwrap_or_else(Matrix3::identity);
    let axes = if plane_z.is_some() { 2 } else { 3 };
    let mut out = Vec::with_capacity(2 * axes + 1);
    for k in 0..axes {
        let e = frame.column(k) * d_travel;
        for sign in [1.0, -1.0] {
            let mut c = p + e * sign;
            if let Some(z) = plane_z {
                c.z = z;
            }
            out.push(c);
        }
    }
    out.push(*p);
    out
}
