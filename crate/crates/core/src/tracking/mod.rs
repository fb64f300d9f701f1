//! Per-robot trajectory tracking: lift a discrete path to a piecewise
//! quadratic reference, regulate it with LQ feedback plus acceleration
//! feedforward, and integrate a double-integrator plant.

use nalgebra::{Matrix2, RowVector2, Vector2};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::Point3;

#[derive(Debug, Error, PartialEq)]
pub enum TrackingError {
    #[error("Riccati iteration did not converge after {0} iterations")]
    NonConvergent(usize),
    #[error("invalid controller parameters: {0}")]
    InvalidParams(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobotState {
    pub p: Point3,
    pub v: Point3,
    pub a: Point3,
    /// Always zero here; kept for parity with the flat output set.
    pub yaw: f64,
}

impl RobotState {
    pub fn at_rest(p: Point3) -> Self {
        Self {
            p,
            v: Point3::zeros(),
            a: Point3::zeros(),
            yaw: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectorySample {
    pub t: f64,
    pub p: Point3,
    pub v: Point3,
    pub a: Point3,
}

/// Reference trajectory through waypoints visited every `step_period` seconds.
///
/// On `[kΔ, (k+1)Δ]` the position is the quadratic through
/// `p[k-1], p[k], p[k+1]` (through `p[0], p[1], p[2]` on the first
/// segment), so every waypoint is hit exactly at its time and the curve is
/// continuous. Past the last waypoint it holds still.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    points: Vec<Point3>,
    step_period: f64,
}

impl Trajectory {
    pub fn new(points: Vec<Point3>, step_period: f64) -> Self {
        assert!(!points.is_empty(), "trajectory needs at least one waypoint");
        assert!(step_period > 0.0);
        Self {
            points,
            step_period,
        }
    }

    pub fn points(&self) -> &[Point3] {
        &self.points
    }

    pub fn step_period(&self) -> f64 {
        self.step_period
    }

    /// Time at which the last waypoint is reached.
    pub fn duration(&self) -> f64 {
        (self.points.len() - 1) as f64 * self.step_period
    }

    pub fn sample(&self, t: f64) -> TrajectorySample {
        let pts = &self.points;
        let dt = self.step_period;
        let last = pts.len() - 1;
        let t = t.max(0.0);
        if t >= self.duration() {
            return TrajectorySample {
                t,
                p: pts[last],
                v: Point3::zeros(),
                a: Point3::zeros(),
            };
        }
        if last == 1 {
            let vel = (pts[1] - pts[0]) / dt;
            return TrajectorySample {
                t,
                p: pts[0] + vel * t,
                v: vel,
                a: Point3::zeros(),
            };
        }
        let k = ((t / dt).floor() as usize).min(last - 1);
        let c = k.max(1);
        let s = t / dt - c as f64;
        let (prev, mid, next) = (pts[c - 1], pts[c], pts[c + 1]);
        let slope = (next - prev) * 0.5;
        let curv = next - mid * 2.0 + prev;
        TrajectorySample {
            t,
            p: mid + slope * s + curv * (0.5 * s * s),
            v: (slope + curv * s) / dt,
            a: curv / (dt * dt),
        }
    }
}

/// Convenience wrapper for one-off samples.
pub fn interpolate(path: &[Point3], step_period: f64, t: f64) -> TrajectorySample {
    Trajectory::new(path.to_vec(), step_period).sample(t)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ControllerParams {
    pub ctrl_hz: f64,
    pub q_pos: f64,
    pub q_vel: f64,
    pub r_acc: f64,
    pub k_ff: f64,
    pub a_max: f64,
}

impl Default for ControllerParams {
    fn default() -> Self {
        Self {
            ctrl_hz: 100.0,
            q_pos: 100.0,
            q_vel: 20.0,
            r_acc: 1.0,
            k_ff: 1.0,
            a_max: 6.0,
        }
    }
}

/// Per-axis LQ gains, identical on every axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlGains {
    /// `[k_p, k_v]` acting on `[p − p_ref, v − v_ref]`.
    pub k_fb: RowVector2<f64>,
    pub k_ff: f64,
    pub a_max: f64,
    pub dt: f64,
}

impl ControlGains {
    /// Spectral radius of the per-axis closed loop `A − B K`.
    pub fn closed_loop_radius(&self) -> f64 {
        let (a, b) = discretize(self.dt);
        let m = a - b * self.k_fb;
        let tr = m.trace();
        let det = m.determinant();
        let disc = tr * tr / 4.0 - det;
        if disc >= 0.0 {
            let s = disc.sqrt();
            (tr / 2.0 + s).abs().max((tr / 2.0 - s).abs())
        } else {
            det.sqrt()
        }
    }
}

fn discretize(dt: f64) -> (Matrix2<f64>, Vector2<f64>) {
    (
        Matrix2::new(1.0, dt, 0.0, 1.0),
        Vector2::new(0.5 * dt * dt, dt),
    )
}

const RICCATI_CAP: usize = 2_000_000;

/// Solves the discrete algebraic Riccati equation of the per-axis double
/// integrator by fixed-point iteration and returns the optimal feedback.
pub fn derive_gains(params: &ControllerParams) -> Result<ControlGains, TrackingError> {
    let ControllerParams {
        ctrl_hz,
        q_pos,
        q_vel,
        r_acc,
        k_ff,
        a_max,
    } = *params;
    if !(ctrl_hz > 0.0 && q_pos > 0.0 && q_vel >= 0.0 && r_acc > 0.0 && a_max > 0.0) {
        return Err(TrackingError::InvalidParams(format!("{params:?}")));
    }
    let dt = 1.0 / ctrl_hz;
    let (a, b) = discretize(dt);
    let q = Matrix2::new(q_pos, 0.0, 0.0, q_vel);
    let mut p = q;
    for _ in 0..RICCATI_CAP {
        let pb = p * b;
        let s = r_acc + b.dot(&pb);
        let k = (pb.transpose() * a) / s;
        let next = q + a.transpose() * p * a - a.transpose() * pb * k;
        let residual = (next - p).abs().max();
        p = next;
        if residual <= 1e-10 * p.abs().max().max(1.0) {
            let pb = p * b;
            let k_fb = (pb.transpose() * a) / (r_acc + b.dot(&pb));
            return Ok(ControlGains {
                k_fb,
                k_ff,
                a_max,
                dt,
            });
        }
    }
    Err(TrackingError::NonConvergent(RICCATI_CAP))
}

/// `u = −K_fb [p − p_ref; v − v_ref] + K_ff a_ref`, clamped per axis to ±a_max.
pub fn control_step(state: &RobotState, reference: &TrajectorySample, gains: &ControlGains) -> Point3 {
    let ep = state.p - reference.p;
    let ev = state.v - reference.v;
    let u = -(ep * gains.k_fb[0] + ev * gains.k_fb[1]) + reference.a * gains.k_ff;
    u.map(|c| c.clamp(-gains.a_max, gains.a_max))
}

/// Zero-mean Gaussian acceleration noise truncated at three standard deviations.
#[derive(Debug, Clone, Copy)]
pub struct Disturbance {
    normal: Normal<f64>,
    bound: f64,
}

impl Disturbance {
    pub fn new(sigma: f64) -> Self {
        Self {
            normal: Normal::new(0.0, sigma.max(0.0)).expect("finite sigma"),
            bound: 3.0 * sigma.max(0.0),
        }
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> Point3 {
        Point3::from_fn(|_, _| loop {
            let x = self.normal.sample(rng);
            if x.abs() <= self.bound {
                break x;
            }
        })
    }
}

/// Exact double-integrator update under constant acceleration `u` (plus
/// optional noise) over `dt`.
pub fn step_plant<R: Rng>(
    state: &RobotState,
    u: &Point3,
    dt: f64,
    disturbance: Option<(&Disturbance, &mut R)>,
) -> RobotState {
    let u = match disturbance {
        Some((d, rng)) => u + d.sample(rng),
        None => *u,
    };
    RobotState {
        p: state.p + state.v * dt + u * (0.5 * dt * dt),
        v: state.v + u * dt,
        a: u,
        yaw: 0.0,
    }
}

#[cfg(test)]
mod tests;
