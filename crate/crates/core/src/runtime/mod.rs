//! The closed loop: a simulated clock stepping trackers and plants, a
//! replanning scheduler (periodic plus goal-triggered), query repair and
//! plan reuse, mission goal streams, an online safety checker and metrics.

mod bench;
mod metrics;
mod repair;
mod reuse;
mod soak;

pub use bench::{bench_scalability, random_instance, write_bench_csv, BenchConfig, BenchRow};
pub use metrics::{
    write_events_csv, write_trajectory_csv, Event, EventKind, MetricsLog, ReplanRecord, ReplanTiming, Summary,
    TaskRecord, Timing, TrackingSummary, TrajRow,
};
pub use repair::{repair_query, REPAIR_ROUNDS};
pub use reuse::{try_reuse, Reuse};
pub use soak::{run_soak, SoakReport, Snapshot, Versioned};

use std::sync::Arc;
use std::time::Instant;

use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::planner::{
    solve_with_roadmaps, CancelToken, Configuration, PlannerError, PlannerParams, ProblemQuery, SolveOutput,
};
use crate::rng::{stream, substream, Stream};
use crate::roadmap::{Lattice, Roadmap};
use crate::scenario::{sample_separated, GoalSource, MissionMode, PointSampler, Scenario, ScenarioError};
use crate::tracking::{control_step, derive_gains, step_plant, Disturbance, RobotState, Trajectory, TrajectorySample};
use crate::workspace::Workspace;
use crate::Point3;

/// Highest rate at which replans may be triggered (Hz).
pub const MAX_REPLAN_HZ: f64 = 20.0;
/// A pending task assigned this long before the end of a run counts as overdue (s).
pub const LIVENESS_WINDOW_S: f64 = 60.0;
/// Oneshot missions stop this long after the last arrival (s).
const ONESHOT_LINGER_S: f64 = 1.0;

#[derive(Debug, Error)]
pub enum RuntimeError {
    #[error("query repair failed after {rounds} rounds, agents {agents:?} still infeasible")]
    RepairFailed { rounds: usize, agents: Vec<usize> },
    #[error("planner missed {misses} consecutive deadlines (last at t = {t:.2} s): {last}")]
    PlannerMisses { misses: u32, t: f64, last: PlannerError },
    #[error("could not sample a free goal at t = {t:.2} s")]
    GoalSampling { t: f64 },
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
}

/// Joint reference the trackers follow: plan steps visited every
/// `step_period` seconds starting at simulation time `anchor`.
#[derive(Debug, Clone, PartialEq)]
pub struct Reference {
    pub steps: Vec<Vec<Point3>>,
    pub anchor: f64,
    step_period: f64,
    trajs: Vec<Trajectory>,
}

impl Reference {
    pub fn new(steps: Vec<Vec<Point3>>, anchor: f64, step_period: f64) -> Self {
        let n = steps[0].len();
        let trajs = (0..n)
            .map(|i| Trajectory::new(steps.iter().map(|q| q[i]).collect(), step_period))
            .collect();
        Self {
            steps,
            anchor,
            step_period,
            trajs,
        }
    }

    /// Stand still at `positions`.
    pub fn hold(positions: &[Point3], t: f64, step_period: f64) -> Self {
        Self::new(vec![positions.to_vec()], t, step_period)
    }

    pub fn len(&self) -> usize {
        self.trajs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trajs.is_empty()
    }

    /// Index of the step whose segment contains time `t`.
    pub fn cursor(&self, t: f64) -> usize {
        let k = ((t - self.anchor) / self.step_period + 1e-9).floor().max(0.0) as usize;
        k.min(self.steps.len() - 1)
    }

    pub fn sample(&self, robot: usize, t: f64) -> TrajectorySample {
        self.trajs[robot].sample(t - self.anchor)
    }

    /// Every step holds exactly `n` positions.
    pub fn is_whole(&self, n: usize) -> bool {
        self.trajs.len() == n && self.steps.iter().all(|q| q.len() == n)
    }
}

/// Position of a scripted `[t, x, y, z]` schedule at `t`, clamped at the ends.
pub fn target_position(schedule: &[[f64; 4]], t: f64) -> Point3 {
    let at = |r: &[f64; 4]| Point3::new(r[1], r[2], r[3]);
    let k = schedule.partition_point(|r| r[0] <= t);
    if k == 0 {
        return at(&schedule[0]);
    }
    if k == schedule.len() {
        return at(&schedule[k - 1]);
    }
    let (a, b) = (&schedule[k - 1], &schedule[k]);
    let w = (t - a[0]) / (b[0] - a[0]);
    at(a) + (at(b) - at(a)) * w
}

/// Goals on a horizontal circle around the scripted target at `t`, one slot
/// per robot, assigned by repeatedly matching the closest free robot-slot pair.
pub fn formation_goals(sc: &Scenario, ws: &Workspace, positions: &[Point3], t: f64) -> Vec<Point3> {
    let Some(GoalSource::Target { schedule, radius }) = &sc.mission.goals else {
        return positions.to_vec();
    };
    let n = positions.len();
    let r_plan = sc.agents.r_agent + sc.runtime.safety_margin;
    let center = sc.project(target_position(schedule, t));
    let slots: Vec<Point3> = (0..n)
        .map(|k| {
            let th = std::f64::consts::TAU * k as f64 / n as f64;
            ws.clamp(&(center + Point3::new(radius * th.cos(), radius * th.sin(), 0.0)), r_plan)
        })
        .collect();
    let mut pairs: Vec<(f64, usize, usize)> = (0..n)
        .flat_map(|i| slots.iter().enumerate().map(move |(k, s)| ((positions[i] - s).norm(), i, k)))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut goal = vec![None; n];
    let mut used = vec![false; n];
    for (_, i, k) in pairs {
        if goal[i].is_none() && !used[k] {
            goal[i] = Some(slots[k]);
            used[k] = true;
        }
    }
    goal.into_iter().map(|g| g.expect("every robot gets a slot")).collect()
}

/// Goal bookkeeping for one mission.
pub(crate) struct MissionState {
    mode: MissionMode,
    sampler: Option<PointSampler>,
    pub(crate) goals: Vec<Point3>,
    pub(crate) tasks: Vec<TaskRecord>,
    open: Vec<Option<usize>>,
    rng: ChaCha8Rng,
    r_plan: f64,
    arrive_tol: f64,
    plane_z: Option<f64>,
    pub(crate) all_arrived_t: Option<f64>,
}

impl MissionState {
    pub(crate) fn new(sc: &Scenario, starts: &[Point3], goals: Vec<Point3>, events: &mut Vec<Event>) -> Self {
        let mode = sc.mission.mode;
        let mut s = Self {
            mode,
            sampler: sc.mission.goals.as_ref().and_then(PointSampler::from_source),
            goals,
            tasks: Vec::new(),
            open: vec![None; starts.len()],
            rng: substream(sc.seed, Stream::Mission, 1),
            r_plan: sc.agents.r_agent + sc.runtime.safety_margin,
            arrive_tol: sc.planner.r_target + sc.runtime.eps_sim,
            plane_z: sc.workspace.plane_z,
            all_arrived_t: None,
        };
        if mode != MissionMode::TargetFollowing {
            for (i, p) in starts.iter().enumerate() {
                s.assign(i, s.goals[i], p, 0.0, events);
            }
        }
        s
    }

    fn assign(&mut self, robot: usize, goal: Point3, from: &Point3, t: f64, events: &mut Vec<Event>) {
        if let Some(old) = self.open[robot] {
            self.tasks[old].released_t = Some(t);
        }
        self.goals[robot] = goal;
        self.open[robot] = Some(self.tasks.len());
        self.tasks.push(TaskRecord {
            robot,
            assigned_t: t,
            distance: (goal - from).norm(),
            arrived_t: None,
            released_t: None,
        });
        events.push(Event {
            t,
            kind: EventKind::GoalAssigned,
            robot: Some(robot),
            detail: format!("{:.4} {:.4} {:.4}", goal.x, goal.y, goal.z),
        });
    }

    fn arrived(&self, robot: usize) -> bool {
        self.open[robot].is_none_or(|k| self.tasks[k].arrived_t.is_some())
    }

    /// Records arrivals at `t` and hands out new goals per the mission mode.
    /// Returns whether any goal changed.
    pub(crate) fn update(
        &mut self,
        t: f64,
        positions: &[Point3],
        ws: &Workspace,
        events: &mut Vec<Event>,
    ) -> Result<bool, RuntimeError> {
        let mut newly = Vec::new();
        for (i, p) in positions.iter().enumerate() {
            let Some(k) = self.open[i] else { continue };
            if self.tasks[k].arrived_t.is_none() && (p - self.goals[i]).norm() <= self.arrive_tol {
                self.tasks[k].arrived_t = Some(t);
                newly.push(i);
                events.push(Event {
                    t,
                    kind: EventKind::GoalReached,
                    robot: Some(i),
                    detail: format!("{:.4}", t - self.tasks[k].assigned_t),
                });
            }
        }
        let n = positions.len();
        let everyone = (0..n).all(|i| self.arrived(i));
        match self.mode {
            MissionMode::Oneshot | MissionMode::TargetFollowing => {
                if everyone && self.all_arrived_t.is_none() && self.mode == MissionMode::Oneshot {
                    self.all_arrived_t = Some(t);
                }
                Ok(false)
            }
            MissionMode::Synchronous => {
                if !everyone {
                    return Ok(false);
                }
                let sampler = self.sampler.expect("synchronous missions sample goals");
                let goals = sample_separated(ws, &sampler, n, self.r_plan, &[], t, self.plane_z, &mut self.rng)
                    .ok_or(RuntimeError::GoalSampling { t })?;
                for (i, g) in goals.into_iter().enumerate() {
                    self.assign(i, g, &positions[i], t, events);
                }
                Ok(true)
            }
            MissionMode::Asynchronous => {
                let sampler = self.sampler.expect("asynchronous missions sample goals");
                for &i in &newly {
                    let others: Vec<Point3> = (0..n).filter(|&j| j != i).map(|j| self.goals[j]).collect();
                    let g = sample_separated(ws, &sampler, 1, self.r_plan, &others, t, self.plane_z, &mut self.rng)
                        .ok_or(RuntimeError::GoalSampling { t })?;
                    self.assign(i, g[0], &positions[i], t, events);
                }
                Ok(!newly.is_empty())
            }
        }
    }
}

pub(crate) struct ReplanOutcome {
    pub(crate) reference: Option<Reference>,
    pub(crate) record: ReplanRecord,
    pub(crate) timing: ReplanTiming,
    pub(crate) events: Vec<Event>,
}

/// Builds and solves one replanning query.
pub(crate) struct Replanner<'a> {
    sc: &'a Scenario,
    ws: Workspace,
    params: PlannerParams,
    r_plan: f64,
    step_period: f64,
    repair_rng: ChaCha8Rng,
    count: u64,
    misses: u32,
    cancel: CancelToken,
}

impl<'a> Replanner<'a> {
    pub(crate) fn new(sc: &'a Scenario, ws: Workspace) -> Self {
        Self {
            sc,
            ws,
            params: sc.planner_params(),
            r_plan: sc.agents.r_agent + sc.runtime.safety_margin,
            step_period: sc.step_period(),
            repair_rng: stream(sc.seed, Stream::Repair),
            count: 0,
            misses: 0,
            cancel: CancelToken::default(),
        }
    }

    /// Goals usable at `t`: a goal covered by an obstacle is replaced by the
    /// nearest free lattice vertex that keeps clear of the other goals.
    fn effective_goals(&self, lattice: &Lattice, goals: &[Point3], t: f64) -> Vec<Point3> {
        let mut out = goals.to_vec();
        let sep = 2.0 * self.r_plan + 1e-9;
        for i in 0..goals.len() {
            if self.ws.point_free(&goals[i], self.r_plan, t) {
                continue;
            }
            let mut cands: Vec<&Point3> = lattice.vertices().iter().collect();
            cands.sort_by(|a, b| (*a - goals[i]).norm().total_cmp(&(*b - goals[i]).norm()));
            if let Some(v) = cands
                .into_iter()
                .find(|v| out.iter().enumerate().all(|(j, g)| j == i || (*v - g).norm() >= sep))
            {
                out[i] = *v;
            }
        }
        out
    }

    fn prepare(&self, goals: &[Point3], t: f64) -> Result<(Vec<Point3>, Vec<Roadmap>), PlannerError> {
        let rp = &self.params.roadmap;
        let lattice = Arc::new(
            Lattice::build(&self.ws, self.r_plan, rp, t).map_err(|source| PlannerError::Roadmap { agent: 0, source })?,
        );
        let goals = self.effective_goals(&lattice, goals, t);
        let rms = goals
            .iter()
            .enumerate()
            .map(|(agent, g)| {
                Roadmap::on_lattice(lattice.clone(), &self.ws, *g, self.r_plan, rp, t)
                    .map_err(|source| PlannerError::Roadmap { agent, source })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok((goals, rms))
    }

    pub(crate) fn replan(
        &mut self,
        t: f64,
        positions: &[Point3],
        goals: &[Point3],
        prev: &Reference,
    ) -> Result<ReplanOutcome, RuntimeError> {
        let started = Instant::now();
        let sc = self.sc;
        self.count += 1;
        let mut events = vec![Event {
            t,
            kind: EventKind::Replan,
            robot: None,
            detail: format!("#{}", self.count),
        }];
        let mut record = ReplanRecord {
            t,
            reuse_hit: false,
            reuse_k: None,
            repaired: false,
            missed: false,
            flowtime: None,
            horizon: None,
            expansions: 0,
        };
        let mut query = ProblemQuery::new(Vec::new(), Vec::new(), self.r_plan, sc.planner.d_travel);
        query.r_target = sc.planner.r_target;
        query.time = t;
        query.budget = sc.replan_budget();
        query.seed = sc.seed ^ self.count.wrapping_mul(0x9E37_79B9_7F4A_7C15);

        let result = self.attempt(&mut query, t, positions, goals, prev, started, &mut events);

        let planning_ms = |s: &Instant| s.elapsed().as_secs_f64() * 1e3;
        match result {
            Err(Failure::Abort(e)) => Err(e),
            Ok(Solved {
                out,
                steps,
                anchor,
                prep_ms,
                reuse,
                repaired,
            }) => {
                self.misses = 0;
                record.repaired = repaired;
                record.reuse_hit = reuse.is_some();
                record.reuse_k = reuse.map(|(_, k)| k);
                record.flowtime = Some(out.plan.flowtime);
                record.horizon = Some(out.plan.horizon());
                record.expansions = out.expansions;
                Ok(ReplanOutcome {
                    reference: Some(Reference::new(steps, anchor, self.step_period)),
                    record,
                    timing: ReplanTiming {
                        t,
                        planning_ms: planning_ms(&started),
                        publishable_ms: prep_ms + out.first_solution_ms,
                    },
                    events,
                })
            }
            Err(Failure::Miss(e)) => {
                self.misses += 1;
                if self.misses >= sc.runtime.max_misses {
                    return Err(RuntimeError::PlannerMisses {
                        misses: self.misses,
                        t,
                        last: e,
                    });
                }
                record.missed = true;
                if let PlannerError::NoSolutionWithinDeadline { expansions, .. } = e {
                    record.expansions = expansions;
                }
                events.push(Event {
                    t,
                    kind: EventKind::Miss,
                    robot: None,
                    detail: e.to_string(),
                });
                Ok(ReplanOutcome {
                    reference: None,
                    record,
                    timing: ReplanTiming {
                        t,
                        planning_ms: planning_ms(&started),
                        publishable_ms: planning_ms(&started),
                    },
                    events,
                })
            }
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn attempt(
        &mut self,
        query: &mut ProblemQuery,
        t: f64,
        positions: &[Point3],
        goals: &[Point3],
        prev: &Reference,
        started: Instant,
        events: &mut Vec<Event>,
    ) -> Result<Solved, Failure> {
        let sc = self.sc;
        let (goals, rms) = self.prepare(goals, t).map_err(Failure::Miss)?;
        query.goals = goals;
        let cur = prev.cursor(t);
        let delta = sc.reuse_threshold();
        // Tracking deviation: actual positions against the reference at `t`.
        let tracking = prev.is_whole(positions.len())
            && positions
                .iter()
                .enumerate()
                .all(|(i, p)| (p - prev.sample(i, t).p).norm() <= delta);
        let reuse = if tracking {
            let next = (cur + 1).min(prev.steps.len() - 1);
            try_reuse(&prev.steps[next], &prev.steps[next..], delta, query, &self.ws).map(|r| (next, r.k))
        } else {
            None
        };
        let mut prefix = Vec::new();
        let mut anchor = t;
        let mut repaired = false;
        match reuse {
            Some((next, k)) => {
                // Restart from the next waypoint so the segment being flown is kept.
                let j = next + k;
                query.starts = prev.steps[j].clone();
                query.seed_plan = Some(prev.steps[j..].iter().cloned().map(Configuration).collect());
                let keep = cur.saturating_sub(1);
                prefix = prev.steps[keep..j].to_vec();
                anchor = prev.anchor + keep as f64 * self.step_period;
                events.push(Event {
                    t,
                    kind: EventKind::ReuseHit,
                    robot: None,
                    detail: format!("k={k}"),
                });
            }
            None => {
                let q = repair_query(
                    positions,
                    &self.ws,
                    self.r_plan,
                    sc.runtime.repair_sigma,
                    sc.planner.d_travel,
                    t,
                    &mut self.repair_rng,
                )
                .map_err(Failure::Abort)?;
                if q != positions {
                    repaired = true;
                    // Fly from the actual positions to the repaired ones first.
                    prefix = vec![positions.to_vec()];
                    events.push(Event {
                        t,
                        kind: EventKind::Repair,
                        robot: None,
                        detail: String::new(),
                    });
                }
                query.starts = q;
            }
        }
        let prep_ms = started.elapsed().as_secs_f64() * 1e3;
        let out = solve_with_roadmaps(query, &self.ws, &rms, &self.params, &self.cancel).map_err(Failure::Miss)?;
        let mut steps = prefix;
        steps.extend(out.plan.steps.iter().map(|q| q.0.clone()));
        Ok(Solved {
            out,
            steps,
            anchor,
            prep_ms,
            reuse,
            repaired,
        })
    }
}

struct Solved {
    out: SolveOutput,
    steps: Vec<Vec<Point3>>,
    anchor: f64,
    prep_ms: f64,
    reuse: Option<(usize, usize)>,
    repaired: bool,
}

enum Failure {
    Abort(RuntimeError),
    Miss(PlannerError),
}

/// Online safety check of actual positions at `t`: the smallest pair
/// distance and obstacle clearance, and whether either is unsafe.
pub(crate) fn safety(sc: &Scenario, ws: &Workspace, positions: &[Point3], t: f64) -> (f64, f64, bool) {
    let r = sc.agents.r_agent;
    let eps = sc.runtime.eps_sim;
    let mut pair = f64::INFINITY;
    for i in 0..positions.len() {
        for j in i + 1..positions.len() {
            pair = pair.min((positions[i] - positions[j]).norm());
        }
    }
    let clear = positions
        .iter()
        .map(|p| ws.obstacle_clearance(p, t))
        .fold(f64::INFINITY, f64::min);
    (pair, clear, pair < 2.0 * r - eps || clear < r - eps)
}

fn mode_name(mode: MissionMode) -> String {
    serde_json::to_value(mode)
        .ok()
        .and_then(|v| v.as_str().map(str::to_string))
        .unwrap_or_default()
}

/// Everything one closed-loop run produces.
#[derive(Debug, Clone)]
pub struct MissionOutput {
    pub metrics: MetricsLog,
    pub trajectory: Vec<TrajRow>,
    pub events: Vec<Event>,
}

/// Runs the mission on a single lockstep clock: each control tick first
/// updates goals, then replans if a periodic or goal-triggered replan is
/// due (the plan is published within the tick), then checks safety, records
/// tracking error and steps every plant.
pub fn run_mission(sc: &Scenario) -> Result<MissionOutput, RuntimeError> {
    sc.validate()?;
    let wall = Instant::now();
    let ws = sc.workspace()?;
    let starts = sc.starts()?;
    let goals = sc.initial_goals(&starts)?;
    let gains = derive_gains(&sc.controller).expect("validated controller");
    let n = starts.len();
    let dt = gains.dt;
    let ticks_total = (sc.mission.duration_s * sc.controller.ctrl_hz).round() as u64;
    let period_ticks = ((sc.controller.ctrl_hz / sc.runtime.replan_hz).round() as u64).max(1);
    let min_gap = ((sc.controller.ctrl_hz / MAX_REPLAN_HZ).ceil() as u64).max(1);

    let mut events = Vec::new();
    let mut trajectory = Vec::new();
    let mut robots: Vec<RobotState> = starts.iter().map(|p| RobotState::at_rest(*p)).collect();
    let mut mission = MissionState::new(sc, &starts, goals, &mut events);
    let mut replanner = Replanner::new(sc, ws.clone());
    let mut reference = Reference::hold(&starts, 0.0, sc.step_period());
    let disturbance = (sc.runtime.disturbance_sigma > 0.0).then(|| Disturbance::new(sc.runtime.disturbance_sigma));
    let mut noise_rng = stream(sc.seed, Stream::Disturbance);

    let mut replans = Vec::new();
    let mut timing = Timing::default();
    let mut err_max = vec![0.0f64; n];
    let mut err_sum = vec![0.0f64; n];
    let mut collision_ticks = 0u64;
    let mut min_pair = f64::INFINITY;
    let mut min_clear = f64::INFINITY;
    let mut next_periodic = 0u64;
    let mut last_replan: Option<u64> = None;
    let mut pending = false;
    let mut ticks = 0u64;
    let mut end_t = 0.0;

    for tick in 0..=ticks_total {
        let t = tick as f64 * dt;
        end_t = t;
        ticks = tick + 1;
        let positions: Vec<Point3> = robots.iter().map(|s| sc.project(s.p)).collect();

        if mission.update(t, &positions, &ws, &mut events)? {
            pending = true;
        }
        if mission
            .all_arrived_t
            .is_some_and(|a| t - a >= ONESHOT_LINGER_S)
        {
            break;
        }

        let sporadic = pending && last_replan.is_none_or(|l| tick - l >= min_gap);
        if tick >= next_periodic || sporadic {
            if sc.mission.mode == MissionMode::TargetFollowing {
                mission.goals = formation_goals(sc, &ws, &positions, t);
            }
            let out = replanner.replan(t, &positions, &mission.goals, &reference)?;
            if let Some(r) = out.reference {
                reference = r;
            }
            replans.push(out.record);
            timing.replans.push(out.timing);
            events.extend(out.events);
            last_replan = Some(tick);
            next_periodic = tick + period_ticks;
            pending = false;
        }

        let (pair, clear, unsafe_now) = safety(sc, &ws, &positions, t);
        min_pair = min_pair.min(pair);
        min_clear = min_clear.min(clear);
        if unsafe_now {
            collision_ticks += 1;
            events.push(Event {
                t,
                kind: EventKind::Collision,
                robot: None,
                detail: format!("pair {pair:.4} clearance {clear:.4}"),
            });
        }

        for (i, s) in robots.iter_mut().enumerate() {
            let r = reference.sample(i, t);
            let err = (s.p - r.p).norm();
            err_max[i] = err_max[i].max(err);
            err_sum[i] += err;
            trajectory.push(TrajRow {
                tick,
                robot: i,
                p: s.p,
                reference: r.p,
                err,
            });
            let u = control_step(s, &r, &gains);
            *s = match &disturbance {
                Some(d) => step_plant(s, &u, dt, Some((d, &mut noise_rng))),
                None => step_plant::<ChaCha8Rng>(s, &u, dt, None),
            };
            if let Some(z) = sc.workspace.plane_z {
                s.p.z = z;
                s.v.z = 0.0;
            }
        }
    }

    let tracking: Vec<TrackingSummary> = (0..n)
        .map(|i| TrackingSummary {
            robot: i,
            max_error: err_max[i],
            mean_error: err_sum[i] / ticks as f64,
        })
        .collect();
    let tasks = mission.tasks;
    let pending_tasks: Vec<&TaskRecord> = tasks.iter().filter(|k| k.arrived_t.is_none()).collect();
    let summary = Summary {
        replans: replans.len(),
        reuse_hits: replans.iter().filter(|r| r.reuse_hit).count(),
        misses: replans.iter().filter(|r| r.missed).count(),
        tasks_completed: tasks.len() - pending_tasks.len(),
        tasks_pending: pending_tasks.len(),
        tasks_overdue: pending_tasks
            .iter()
            .filter(|k| end_t - k.assigned_t > LIVENESS_WINDOW_S)
            .count(),
        max_tracking_error: err_max.iter().copied().fold(0.0, f64::max),
    };
    timing.total_ms = wall.elapsed().as_secs_f64() * 1e3;
    Ok(MissionOutput {
        metrics: MetricsLog {
            seed: sc.seed,
            mode: mode_name(sc.mission.mode),
            ticks,
            end_t,
            collision_ticks,
            min_pair_distance: min_pair,
            min_obstacle_clearance: min_clear,
            summary,
            tracking,
            replans,
            tasks,
            timing,
        },
        trajectory,
        events,
    })
}
