use std::io::{self, Write};

use serde::Serialize;

use crate::Point3;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplanRecord {
    pub t: f64,
    pub reuse_hit: bool,
    /// Index into the previous plan (from the current step) that matched.
    pub reuse_k: Option<usize>,
    pub repaired: bool,
    pub missed: bool,
    pub flowtime: Option<usize>,
    pub horizon: Option<usize>,
    pub expansions: u64,
}

/// Wall-clock measurements of one replan; excluded from reproducibility checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReplanTiming {
    pub t: f64,
    pub planning_ms: f64,
    /// Time until a plan that could be published existed.
    pub publishable_ms: f64,
}

/// One goal assignment and its outcome.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TaskRecord {
    pub robot: usize,
    pub assigned_t: f64,
    pub distance: f64,
    pub arrived_t: Option<f64>,
    /// When the next goal was handed out.
    pub released_t: Option<f64>,
}

impl TaskRecord {
    pub fn duration(&self) -> Option<f64> {
        self.arrived_t.map(|a| a - self.assigned_t)
    }

    /// Idle time between arrival and the next assignment.
    pub fn wait(&self) -> Option<f64> {
        Some(self.released_t? - self.arrived_t?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrackingSummary {
    pub robot: usize,
    pub max_error: f64,
    pub mean_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub replans: usize,
    pub reuse_hits: usize,
    pub misses: usize,
    pub tasks_completed: usize,
    pub tasks_pending: usize,
    /// Pending tasks assigned more than the liveness window before the end.
    pub tasks_overdue: usize,
    pub max_tracking_error: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Timing {
    pub replans: Vec<ReplanTiming>,
    pub total_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsLog {
    pub seed: u64,
    pub mode: String,
    pub ticks: u64,
    pub end_t: f64,
    /// Ticks on which some pair or robot-obstacle distance was unsafe.
    pub collision_ticks: u64,
    pub min_pair_distance: f64,
    pub min_obstacle_clearance: f64,
    pub summary: Summary,
    pub tracking: Vec<TrackingSummary>,
    pub replans: Vec<ReplanRecord>,
    pub tasks: Vec<TaskRecord>,
    pub timing: Timing,
}

impl MetricsLog {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("metrics serialize")
    }

    /// JSON without the `timing` object, byte-stable for a fixed seed under
    /// the expansions deadline policy.
    pub fn deterministic_json(&self) -> String {
        let mut v = serde_json::to_value(self).expect("metrics serialize");
        v.as_object_mut().expect("object").remove("timing");
        serde_json::to_string_pretty(&v).expect("metrics serialize")
    }

    /// Mean publishable time over reuse hits and over cold solves.
    pub fn publishable_means(&self) -> (Option<f64>, Option<f64>) {
        let mean = |hit: bool| {
            let xs: Vec<f64> = self
                .replans
                .iter()
                .zip(&self.timing.replans)
                .filter(|(r, _)| r.reuse_hit == hit && !r.missed)
                .map(|(_, t)| t.publishable_ms)
                .collect();
            (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
        };
        (mean(true), mean(false))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajRow {
    pub tick: u64,
    pub robot: usize,
    pub p: Point3,
    pub reference: Point3,
    pub err: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Replan,
    ReuseHit,
    Repair,
    Miss,
    GoalAssigned,
    GoalReached,
    Collision,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Event {
    pub t: f64,
    pub kind: EventKind,
    pub robot: Option<usize>,
    pub detail: String,
}

pub fn write_trajectory_csv<W: Write>(rows: &[TrajRow], mut w: W) -> io::Result<()> {
    writeln!(w, "tick,robot,px,py,pz,refx,refy,refz,err")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{}",
            r.tick, r.robot, r.p.x, r.p.y, r.p.z, r.reference.x, r.reference.y, r.reference.z, r.err
        )?;
    }
    Ok(())
}

pub fn write_events_csv<W: Write>(events: &[Event], mut w: W) -> io::Result<()> {
    writeln!(w, "t,kind,robot,detail")?;
    for e in events {
        let kind = serde_json::to_value(e.kind).expect("kind serializes");
        let robot = e.robot.map(|r| r.to_string()).unwrap_or_default();
        writeln!(
            w,
            "{},{},{},{}",
            e.t,
            kind.as_str().unwrap_or_default(),
            robot,
            e.detail.replace([',', '\n'], ";")
        )?;
    }
    Ok(())
}
