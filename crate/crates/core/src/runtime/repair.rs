use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::RuntimeError;
use crate::workspace::Workspace;
use crate::Point3;

/// Rounds after which repair gives up.
pub const REPAIR_ROUNDS: usize = 200;

fn offenders(q: &[Point3], ws: &Workspace, r: f64, t: f64) -> Vec<usize> {
    let mut bad = vec![false; q.len()];
    for i in 0..q.len() {
        if !ws.point_free(&q[i], r, t) {
            bad[i] = true;
        }
        for j in i + 1..q.len() {
            if (q[i] - q[j]).norm() < 2.0 * r {
                bad[i] = true;
                bad[j] = true;
            }
        }
    }
    (0..q.len()).filter(|&i| bad[i]).collect()
}

/// Makes `q` feasible by jittering only the agents that collide with an
/// obstacle or each other. Noise starts at `sigma`, doubles every ten failed
/// rounds and never exceeds `d_travel`; no agent moves farther than
/// `d_travel` from its input position.
pub fn repair_query<R: Rng>(
    q: &[Point3],
    ws: &Workspace,
    r_agent: f64,
    sigma: f64,
    d_travel: f64,
    t: f64,
    rng: &mut R,
) -> Result<Vec<Point3>, RuntimeError> {
    let mut out = q.to_vec();
    let mut bad = offenders(&out, ws, r_agent, t);
    let mut scale = sigma.min(d_travel);
    for round in 0..REPAIR_ROUNDS {
        if bad.is_empty() {
            return Ok(out);
        }
        if round > 0 && round % 10 == 0 {
            scale = (scale * 2.0).min(d_travel);
        }
        let normal = Normal::new(0.0, scale).expect("finite scale");
        for &i in &bad {
            let mut noise = Point3::from_fn(|_, _| normal.sample(rng));
            let len = noise.norm();
            if len > d_travel {
                noise *= d_travel / len;
            }
            out[i] = ws.clamp(&(q[i] + noise), r_agent);
        }
        bad = offenders(&out, ws, r_agent, t);
    }
    if bad.is_empty() {
        Ok(out)
    } else {
        Err(RuntimeError::RepairFailed {
            rounds: REPAIR_ROUNDS,
            agents: bad,
        })
    }
}
