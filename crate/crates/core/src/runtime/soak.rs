use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use rand_chacha::ChaCha8Rng;

use super::{formation_goals, safety, MissionState, Reference, Replanner, RuntimeError, MAX_REPLAN_HZ};
use crate::scenario::{MissionMode, Scenario};
use crate::tracking::{control_step, derive_gains, step_plant, RobotState};
use crate::Point3;

#[derive(Debug)]
pub struct Versioned<T> {
    pub version: u64,
    pub value: T,
}

/// Latest-value slot shared between the two loops. Readers get an
/// immutable `Arc` and writers replace it whole, so a reader never sees a
/// half-written value; versions only grow.
#[derive(Debug)]
pub struct Snapshot<T> {
    slot: Mutex<Arc<Versioned<T>>>,
}

impl<T> Snapshot<T> {
    pub fn new(value: T) -> Self {
        Self {
            slot: Mutex::new(Arc::new(Versioned { version: 0, value })),
        }
    }

    pub fn publish(&self, value: T) -> u64 {
        let mut slot = self.slot.lock().expect("snapshot lock");
        let version = slot.version + 1;
        *slot = Arc::new(Versioned { version, value });
        version
    }

    pub fn latest(&self) -> Arc<Versioned<T>> {
        self.slot.lock().expect("snapshot lock").clone()
    }
}

#[derive(Debug, Clone)]
struct World {
    t: f64,
    positions: Vec<Point3>,
    goals: Vec<Point3>,
    goals_version: u64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SoakReport {
    pub ticks: u64,
    pub plans_published: u64,
    /// Distinct plan versions the simulation loop picked up.
    pub plans_observed: u64,
    pub version_regressions: u64,
    pub torn_plans: u64,
    pub collision_ticks: u64,
    pub replans: u64,
    pub misses: u64,
    pub tasks_completed: usize,
}

/// Runs the planner and the simulation as two free-running threads for
/// `wall` of real time, with simulated time paced to the wall clock.
pub fn run_soak(sc: &Scenario, wall: Duration) -> Result<SoakReport, RuntimeError> {
    sc.validate()?;
    let ws = sc.workspace()?;
    let starts = sc.starts()?;
    let goals = sc.initial_goals(&starts)?;
    let gains = derive_gains(&sc.controller).expect("validated controller");
    let n = starts.len();
    let dt = gains.dt;
    let step_period = sc.step_period();
    let mut events = Vec::new();
    let mut mission = MissionState::new(sc, &starts, goals, &mut events);

    let world = Snapshot::new(World {
        t: 0.0,
        positions: starts.clone(),
        goals: mission.goals.clone(),
        goals_version: 0,
    });
    let plans = Snapshot::new(Reference::hold(&starts, 0.0, step_period));
    let stop = AtomicBool::new(false);
    let period = Duration::from_secs_f64(1.0 / sc.runtime.replan_hz);
    let min_gap = Duration::from_secs_f64(1.0 / MAX_REPLAN_HZ);

    thread::scope(|s| {
        let planner = s.spawn(|| -> Result<(u64, u64), RuntimeError> {
            let mut rp = Replanner::new(sc, ws.clone());
            let mut own = Reference::hold(&starts, 0.0, step_period);
            let mut last: Option<Instant> = None;
            let mut seen_goals = u64::MAX;
            let (mut replans, mut misses) = (0, 0);
            while !stop.load(Ordering::Relaxed) {
                let w = world.latest();
                let since = last.map(|l| l.elapsed());
                let due = since.is_none_or(|d| d >= period);
                let sporadic = w.value.goals_version != seen_goals && since.is_none_or(|d| d >= min_gap);
                if !(due || sporadic) {
                    thread::sleep(Duration::from_millis(1));
                    continue;
                }
                last = Some(Instant::now());
                seen_goals = w.value.goals_version;
                let goals = if sc.mission.mode == MissionMode::TargetFollowing {
                    formation_goals(sc, &ws, &w.value.positions, w.value.t)
                } else {
                    w.value.goals.clone()
                };
                let out = match rp.replan(w.value.t, &w.value.positions, &goals, &own) {
                    Ok(out) => out,
                    Err(e) => {
                        stop.store(true, Ordering::Relaxed);
                        return Err(e);
                    }
                };
                replans += 1;
                misses += out.record.missed as u64;
                if let Some(r) = out.reference {
                    own = r.clone();
                    plans.publish(r);
                }
            }
            Ok((replans, misses))
        });

        let mut report = SoakReport::default();
        let mut robots: Vec<RobotState> = starts.iter().map(|p| RobotState::at_rest(*p)).collect();
        let mut last_version = 0;
        let mut goals_version = 0;
        let started = Instant::now();
        let total = (wall.as_secs_f64() / dt).round() as u64;
        for tick in 0..total {
            if stop.load(Ordering::Relaxed) {
                break;
            }
            let t = tick as f64 * dt;
            if let Some(wait) = Duration::from_secs_f64(t).checked_sub(started.elapsed()) {
                thread::sleep(wait);
            }
            let plan = plans.latest();
            if plan.version < last_version {
                report.version_regressions += 1;
            } else if plan.version > last_version {
                report.plans_observed += 1;
                last_version = plan.version;
            }
            if !plan.value.is_whole(n) {
                report.torn_plans += 1;
                continue;
            }
            let positions: Vec<Point3> = robots.iter().map(|r| sc.project(r.p)).collect();
            match mission.update(t, &positions, &ws, &mut events) {
                Ok(true) => goals_version += 1,
                Ok(false) => {}
                Err(e) => {
                    stop.store(true, Ordering::Relaxed);
                    let _ = planner.join();
                    return Err(e);
                }
            }
            if safety(sc, &ws, &positions, t).2 {
                report.collision_ticks += 1;
            }
            for (i, r) in robots.iter_mut().enumerate() {
                let u = control_step(r, &plan.value.sample(i, t), &gains);
                *r = step_plant::<ChaCha8Rng>(r, &u, dt, None);
                if let Some(z) = sc.workspace.plane_z {
                    r.p.z = z;
                    r.v.z = 0.0;
                }
            }
            world.publish(World {
                t: t + dt,
                positions: robots.iter().map(|r| sc.project(r.p)).collect(),
                goals: mission.goals.clone(),
                goals_version,
            });
            report.ticks += 1;
        }
        stop.store(true, Ordering::Relaxed);
        let (replans, misses) = planner.join().expect("planner thread")?;
        report.replans = replans;
        report.misses = misses;
        report.plans_published = plans.latest().version;
        report.tasks_completed = mission.tasks.iter().filter(|k| k.arrived_t.is_some()).count();
        Ok(report)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn snapshot_versions_grow_under_contention() {
        let snap = Arc::new(Snapshot::new(vec![0u64; 64]));
        let writer = {
            let snap = snap.clone();
            thread::spawn(move || {
                for k in 1..=2000u64 {
                    snap.publish(vec![k; 64]);
                }
            })
        };
        let mut last = 0;
        for _ in 0..20_000 {
            let v = snap.latest();
            assert!(v.version >= last);
            assert!(v.value.iter().all(|&x| x == v.version), "torn value");
            last = v.version;
        }
        writer.join().unwrap();
        assert_eq!(snap.latest().version, 2000);
    }
}
