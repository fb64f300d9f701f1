//! Declarative run description: world, agents, mission, planner, controller
//! and runtime settings. Parsing is strict (unknown keys are errors), every
//! omitted field takes a documented default, and cross-field constraints are
//! checked with named errors before anything runs.

use std::time::Duration;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::planner::{Budget, PlannerError, PlannerParams, ProblemQuery};
use crate::rng::{substream, Stream};
use crate::roadmap::RoadmapParams;
use crate::tracking::ControllerParams;
use crate::workspace::{Obstacle, Shape, Workspace, WorkspaceError, DEFAULT_DYNAMIC_MARGIN};
use crate::Point3;

pub const SCHEMA_VERSION: u32 = 1;

/// Extra gap between sampled goals (and sampled starts) beyond `2·r`.
const SAMPLE_GAP: f64 = 0.1;
const SAMPLE_TRIES: usize = 20_000;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("{path}: {message} (line {line}, column {column})")]
    Parse {
        path: String,
        message: String,
        line: usize,
        column: usize,
    },
    #[error("unsupported schema version {found} (expected {SCHEMA_VERSION})")]
    UnsupportedVersion { found: u32 },
    #[error("workspace: {0}")]
    Workspace(#[from] WorkspaceError),
    #[error("{field}: {reason}")]
    InvalidField { field: &'static str, reason: String },
    #[error("controller.ctrl_hz ({ctrl_hz}) must be at least 5 × runtime.replan_hz ({replan_hz})")]
    ControlRateTooLow { ctrl_hz: f64, replan_hz: f64 },
    #[error("runtime.replan_hz ({0}) must lie in (0, 20]")]
    ReplanRateOutOfRange(f64),
    #[error("agents.n is {n} but {starts} starts are given")]
    StartCountMismatch { n: usize, starts: usize },
    #[error("agents {i} and {j} start {distance:.4} m apart, below 2·r_agent = {min:.4} m")]
    StartsTooClose {
        i: usize,
        j: usize,
        distance: f64,
        min: f64,
    },
    #[error("agent {0} starts in collision or outside the workspace")]
    StartBlocked(usize),
    #[error("mission.goals lists {goals} goals for {n} agents")]
    GoalCountMismatch { n: usize, goals: usize },
    #[error("goal {0} is in collision or outside the workspace")]
    GoalBlocked(usize),
    #[error("mission mode {mode:?} cannot use goal source {source_kind}")]
    GoalSourceMismatch {
        mode: MissionMode,
        source_kind: &'static str,
    },
    #[error("could not sample {count} separated free points in the {what} region")]
    SamplingFailed { what: &'static str, count: usize },
    #[error("planner: {0}")]
    Planner(#[from] PlannerError),
}

fn field(field: &'static str, reason: impl Into<String>) -> ScenarioError {
    ScenarioError::InvalidField {
        field,
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub version: u32,
    #[serde(default)]
    pub seed: u64,
    pub workspace: WorkspaceSpec,
    pub agents: AgentsSpec,
    #[serde(default)]
    pub mission: MissionSpec,
    #[serde(default)]
    pub planner: PlannerSpec,
    #[serde(default)]
    pub roadmap: RoadmapParams,
    #[serde(default)]
    pub controller: ControllerParams,
    #[serde(default)]
    pub runtime: RuntimeConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkspaceSpec {
    pub min: [f64; 3],
    pub max: [f64; 3],
    /// Fixed agent height; present iff the scenario is planar.
    #[serde(default)]
    pub plane_z: Option<f64>,
    #[serde(default = "default_dynamic_margin")]
    pub dynamic_margin: f64,
    #[serde(default)]
    pub obstacles: Vec<ObstacleSpec>,
}

fn default_dynamic_margin() -> f64 {
    DEFAULT_DYNAMIC_MARGIN
}

/// Obstacle record. `schedule` rows are `[t, x, y, z]` positions of the
/// shape's center (for poles, the middle of the z span).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ObstacleSpec {
    Pole {
        xy: [f64; 2],
        radius: f64,
        z: [f64; 2],
        #[serde(default)]
        schedule: Vec<[f64; 4]>,
    },
    Sphere {
        center: [f64; 3],
        radius: f64,
        #[serde(default)]
        schedule: Vec<[f64; 4]>,
    },
    Box {
        min: [f64; 3],
        max: [f64; 3],
        #[serde(default)]
        schedule: Vec<[f64; 4]>,
    },
}

impl ObstacleSpec {
    pub fn to_obstacle(&self) -> Obstacle {
        let (shape, schedule) = match self {
            ObstacleSpec::Pole {
                xy,
                radius,
                z,
                schedule,
            } => (
                Shape::Pole {
                    x: xy[0],
                    y: xy[1],
                    radius: *radius,
                    z_min: z[0],
                    z_max: z[1],
                },
                schedule,
            ),
            ObstacleSpec::Sphere {
                center,
                radius,
                schedule,
            } => (
                Shape::Sphere {
                    center: Point3::from(*center),
                    radius: *radius,
                },
                schedule,
            ),
            ObstacleSpec::Box { min, max, schedule } => (
                Shape::Box {
                    min: Point3::from(*min),
                    max: Point3::from(*max),
                },
                schedule,
            ),
        };
        Obstacle::moving(
            shape,
            schedule
                .iter()
                .map(|r| (r[0], Point3::new(r[1], r[2], r[3])))
                .collect(),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentsSpec {
    pub n: usize,
    #[serde(default = "default_r_agent")]
    pub r_agent: f64,
    /// Explicit starts; sampled from `start_region` (default: the whole
    /// workspace) when absent.
    #[serde(default)]
    pub starts: Option<Vec<[f64; 3]>>,
    #[serde(default)]
    pub start_region: Option<Region>,
}

fn default_r_agent() -> f64 {
    0.2
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Region {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MissionMode {
    Oneshot,
    Synchronous,
    Asynchronous,
    TargetFollowing,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GoalSource {
    List {
        points: Vec<[f64; 3]>,
    },
    /// Uniform over an axis-aligned box.
    Region {
        min: [f64; 3],
        max: [f64; 3],
    },
    /// Uniform over a horizontal disc at the center's height.
    Disc {
        center: [f64; 3],
        radius: f64,
    },
    /// Formation slots on a horizontal circle around a scripted target.
    Target {
        schedule: Vec<[f64; 4]>,
        radius: f64,
    },
}

impl GoalSource {
    fn kind(&self) -> &'static str {
        match self {
            GoalSource::List { .. } => "list",
            GoalSource::Region { .. } => "region",
            GoalSource::Disc { .. } => "disc",
            GoalSource::Target { .. } => "target",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MissionSpec {
    pub mode: MissionMode,
    /// `None` means every agent's goal is its start.
    pub goals: Option<GoalSource>,
    pub duration_s: f64,
}

impl Default for MissionSpec {
    fn default() -> Self {
        Self {
            mode: MissionMode::Oneshot,
            goals: None,
            duration_s: 30.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeadlinePolicy {
    WallClock,
    /// Count expansions and refinement units instead of time; reproducible.
    Expansions,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PlannerSpec {
    pub d_travel: f64,
    pub r_target: f64,
    pub eps_dup: f64,
    pub p_skip: f64,
    pub lns_size: usize,
    pub mc_restarts: u32,
    pub slice: u64,
    pub refine: bool,
    pub deadline: DeadlinePolicy,
    /// Budget of a standalone solve under the wall-clock policy.
    pub limit_ms: u64,
    /// Budget of a standalone solve under the expansions policy.
    pub expansions: u64,
}

impl Default for PlannerSpec {
    fn default() -> Self {
        let p = PlannerParams::default();
        Self {
            d_travel: 0.25,
            r_target: 0.1,
            eps_dup: p.eps_dup,
            p_skip: p.p_skip,
            lns_size: p.lns_size,
            mc_restarts: p.mc_restarts,
            slice: p.slice,
            refine: p.refine,
            deadline: DeadlinePolicy::WallClock,
            limit_ms: 1000,
            expansions: 20_000,
        }
    }
}

/// Closed-loop settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RuntimeConfig {
    pub replan_hz: f64,
    /// Nominal cruise speed; one plan step lasts `d_travel / speed` seconds.
    pub speed: f64,
    /// Max-norm distance under which the previous plan is reused (m);
    /// `None` means half of `d_travel`.
    pub reuse_threshold: Option<f64>,
    /// Initial scale of the noise used to repair infeasible queries (m).
    pub repair_sigma: f64,
    /// Share of the replan period given to the planner.
    pub deadline_fraction: f64,
    /// Planning radius is `r_agent + safety_margin`.
    pub safety_margin: f64,
    /// Consecutive planner misses tolerated before the run aborts.
    pub max_misses: u32,
    /// Standard deviation of the acceleration disturbance (m/s²).
    pub disturbance_sigma: f64,
    /// Per-replan budget under the expansions policy.
    pub expansions_per_replan: u64,
    /// Tolerance of the online collision counter (m).
    pub eps_sim: f64,
}

impl Default for RuntimeConfig {
    fn default() -> Self {
        Self {
            replan_hz: 10.0,
            speed: 0.5,
            reuse_threshold: None,
            repair_sigma: 0.05,
            deadline_fraction: 0.8,
            safety_margin: 0.1,
            max_misses: 10,
            disturbance_sigma: 0.0,
            expansions_per_replan: 2000,
            eps_sim: 0.01,
        }
    }
}

/// Parses and validates a scenario document.
pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let sc: Scenario = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        ScenarioError::Parse {
            path,
            message: inner.to_string(),
            line: inner.line(),
            column: inner.column(),
        }
    })?;
    sc.validate()?;
    Ok(sc)
}

impl Scenario {
    /// Canonical pretty JSON with every default filled in.
    pub fn to_canonical_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.version != SCHEMA_VERSION {
            return Err(ScenarioError::UnsupportedVersion {
                found: self.version,
            });
        }
        let ws = self.workspace()?;
        let r = self.agents.r_agent;
        if !(r > 0.0) {
            return Err(field("agents.r_agent", "must be positive"));
        }
        if self.agents.n == 0 {
            return Err(field("agents.n", "at least one agent is required"));
        }
        let p = &self.planner;
        if !(p.d_travel > 0.0) {
            return Err(field("planner.d_travel", "must be positive"));
        }
        if !(p.r_target > 0.0) {
            return Err(field("planner.r_target", "must be positive"));
        }
        self.planner_params().validate(p.d_travel)?;
        let rm = &self.roadmap;
        if !(rm.lattice_h > 0.0 && rm.connect_radius > 0.0 && rm.neighbor_radius > 0.0) {
            return Err(field("roadmap", "lattice_h, connect_radius and neighbor_radius must be positive"));
        }
        let rt = &self.runtime;
        if !(rt.replan_hz > 0.0 && rt.replan_hz <= 20.0) {
            return Err(ScenarioError::ReplanRateOutOfRange(rt.replan_hz));
        }
        if !(self.controller.ctrl_hz >= 5.0 * rt.replan_hz) {
            return Err(ScenarioError::ControlRateTooLow {
                ctrl_hz: self.controller.ctrl_hz,
                replan_hz: rt.replan_hz,
            });
        }
        crate::tracking::derive_gains(&self.controller).map_err(|e| field("controller", e.to_string()))?;
        if !(rt.speed > 0.0) {
            return Err(field("runtime.speed", "must be positive"));
        }
        if !(rt.deadline_fraction > 0.0 && rt.deadline_fraction <= 1.0) {
            return Err(field("runtime.deadline_fraction", "must lie in (0, 1]"));
        }
        if !(rt.repair_sigma > 0.0) {
            return Err(field("runtime.repair_sigma", "must be positive"));
        }
        if !(rt.safety_margin >= 0.0 && rt.eps_sim >= 0.0 && rt.disturbance_sigma >= 0.0) {
            return Err(field("runtime", "margins and noise scales must be non-negative"));
        }
        if let Some(t) = rt.reuse_threshold {
            if !(t >= 0.0) {
                return Err(field("runtime.reuse_threshold", "must be non-negative"));
            }
        }
        if !(self.mission.duration_s > 0.0) {
            return Err(field("mission.duration_s", "must be positive"));
        }

        if let Some(starts) = &self.agents.starts {
            if starts.len() != self.agents.n {
                return Err(ScenarioError::StartCountMismatch {
                    n: self.agents.n,
                    starts: starts.len(),
                });
            }
            let pts: Vec<Point3> = starts.iter().map(|s| Point3::from(*s)).collect();
            for i in 0..pts.len() {
                for j in i + 1..pts.len() {
                    let distance = (pts[i] - pts[j]).norm();
                    if distance < 2.0 * r {
                        return Err(ScenarioError::StartsTooClose {
                            i,
                            j,
                            distance,
                            min: 2.0 * r,
                        });
                    }
                }
                if !ws.point_free(&self.project(pts[i]), r, 0.0) {
                    return Err(ScenarioError::StartBlocked(i));
                }
            }
        }

        let mode = self.mission.mode;
        let mismatch = |source: &GoalSource| ScenarioError::GoalSourceMismatch {
            mode,
            source_kind: source.kind(),
        };
        match (&self.mission.goals, mode) {
            (None, MissionMode::Oneshot) => {}
            (None, _) => {
                return Err(field("mission.goals", format!("required in {mode:?} mode")));
            }
            (Some(src @ GoalSource::Target { .. }), m) if m != MissionMode::TargetFollowing => {
                return Err(mismatch(src))
            }
            (Some(src), MissionMode::TargetFollowing) if !matches!(src, GoalSource::Target { .. }) => {
                return Err(mismatch(src))
            }
            (Some(src @ GoalSource::List { .. }), MissionMode::Synchronous | MissionMode::Asynchronous) => {
                return Err(mismatch(src))
            }
            _ => {}
        }
        match &self.mission.goals {
            Some(GoalSource::List { points }) => {
                if points.len() != self.agents.n {
                    return Err(ScenarioError::GoalCountMismatch {
                        n: self.agents.n,
                        goals: points.len(),
                    });
                }
                for (i, g) in points.iter().enumerate() {
                    if !ws.point_free(&self.project(Point3::from(*g)), r, 0.0) {
                        return Err(ScenarioError::GoalBlocked(i));
                    }
                }
            }
            Some(GoalSource::Region { min, max }) => {
                if !(0..3).all(|k| min[k] <= max[k]) {
                    return Err(field("mission.goals", "region min must not exceed max"));
                }
            }
            Some(GoalSource::Disc { radius, .. }) => {
                if !(*radius >= 0.0) {
                    return Err(field("mission.goals.radius", "must be non-negative"));
                }
            }
            Some(GoalSource::Target { schedule, radius }) => {
                if schedule.is_empty() {
                    return Err(field("mission.goals.schedule", "needs at least one waypoint"));
                }
                if schedule.windows(2).any(|w| !(w[0][0] < w[1][0])) {
                    return Err(field("mission.goals.schedule", "times must be strictly increasing"));
                }
                if !(*radius > 0.0) {
                    return Err(field("mission.goals.radius", "must be positive"));
                }
            }
            None => {}
        }
        Ok(())
    }

    pub fn workspace(&self) -> Result<Workspace, ScenarioError> {
        let w = &self.workspace;
        let obstacles = w.obstacles.iter().map(ObstacleSpec::to_obstacle).collect();
        let (lo, hi) = (Point3::from(w.min), Point3::from(w.max));
        let ws = match w.plane_z {
            Some(z) => Workspace::planar(lo, hi, z, obstacles)?,
            None => Workspace::new(lo, hi, obstacles)?,
        };
        if !(w.dynamic_margin >= 0.0) {
            return Err(field("workspace.dynamic_margin", "must be non-negative"));
        }
        Ok(ws.with_dynamic_margin(w.dynamic_margin))
    }

    /// Puts `p` on the plane in planar scenarios.
    pub fn project(&self, mut p: Point3) -> Point3 {
        if let Some(z) = self.workspace.plane_z {
            p.z = z;
        }
        p
    }

    pub fn planner_params(&self) -> PlannerParams {
        let p = &self.planner;
        PlannerParams {
            eps_dup: p.eps_dup,
            p_skip: p.p_skip,
            lns_size: p.lns_size,
            mc_restarts: p.mc_restarts,
            slice: p.slice,
            refine: p.refine,
            roadmap: self.roadmap,
        }
    }

    /// Budget of a standalone solve.
    pub fn plan_budget(&self) -> Budget {
        match self.planner.deadline {
            DeadlinePolicy::WallClock => Budget::WallClock(Duration::from_millis(self.planner.limit_ms)),
            DeadlinePolicy::Expansions => Budget::Expansions(self.planner.expansions),
        }
    }

    /// Budget of one closed-loop replan.
    pub fn replan_budget(&self) -> Budget {
        match self.planner.deadline {
            DeadlinePolicy::WallClock => Budget::WallClock(Duration::from_secs_f64(
                self.runtime.deadline_fraction / self.runtime.replan_hz,
            )),
            DeadlinePolicy::Expansions => Budget::Expansions(self.runtime.expansions_per_replan),
        }
    }

    pub fn reuse_threshold(&self) -> f64 {
        self.runtime
            .reuse_threshold
            .unwrap_or(0.5 * self.planner.d_travel)
    }

    /// Seconds per plan step.
    pub fn step_period(&self) -> f64 {
        self.planner.d_travel / self.runtime.speed
    }

    pub fn starts(&self) -> Result<Vec<Point3>, ScenarioError> {
        if let Some(starts) = &self.agents.starts {
            return Ok(starts.iter().map(|s| self.project(Point3::from(*s))).collect());
        }
        let ws = self.workspace()?;
        let region = self.agents.start_region.unwrap_or(Region {
            min: self.workspace.min,
            max: self.workspace.max,
        });
        let mut rng = substream(self.seed, Stream::Instances, 0);
        let sampler = PointSampler::Box {
            min: Point3::from(region.min),
            max: Point3::from(region.max),
        };
        sample_separated(&ws, &sampler, self.agents.n, self.agents.r_agent, &[], 0.0, self.workspace.plane_z, &mut rng)
            .ok_or(ScenarioError::SamplingFailed {
                what: "start",
                count: self.agents.n,
            })
    }

    /// Goals at time zero: the explicit list, one sampled set, target slots,
    /// or the starts when no source is given.
    pub fn initial_goals(&self, starts: &[Point3]) -> Result<Vec<Point3>, ScenarioError> {
        let ws = self.workspace()?;
        let r = self.agents.r_agent + self.runtime.safety_margin;
        match &self.mission.goals {
            None => Ok(starts.to_vec()),
            Some(GoalSource::List { points }) => Ok(points.iter().map(|g| self.project(Point3::from(*g))).collect()),
            Some(GoalSource::Target { .. }) => Ok(crate::runtime::formation_goals(self, &ws, starts, 0.0)),
            Some(src) => {
                let sampler = PointSampler::from_source(src).expect("sampled source");
                let mut rng = substream(self.seed, Stream::Mission, 0);
                sample_separated(&ws, &sampler, starts.len(), r, &[], 0.0, self.workspace.plane_z, &mut rng).ok_or(
                    ScenarioError::SamplingFailed {
                        what: "goal",
                        count: starts.len(),
                    },
                )
            }
        }
    }

    /// Single-shot planning query at time zero.
    pub fn plan_query(&self) -> Result<ProblemQuery, ScenarioError> {
        let starts = self.starts()?;
        let goals = self.initial_goals(&starts)?;
        let mut q = ProblemQuery::new(starts, goals, self.agents.r_agent, self.planner.d_travel);
        q.r_target = self.planner.r_target;
        q.budget = self.plan_budget();
        q.seed = self.seed;
        Ok(q)
    }
}

/// Region that random starts or goals are drawn from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PointSampler {
    Box { min: Point3, max: Point3 },
    Disc { center: Point3, radius: f64 },
}

impl PointSampler {
    pub fn from_source(src: &GoalSource) -> Option<Self> {
        match src {
            GoalSource::Region { min, max } => Some(PointSampler::Box {
                min: Point3::from(*min),
                max: Point3::from(*max),
            }),
            GoalSource::Disc { center, radius } => Some(PointSampler::Disc {
                center: Point3::from(*center),
                radius: *radius,
            }),
            _ => None,
        }
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> Point3 {
        match *self {
            PointSampler::Box { min, max } => {
                Point3::from_fn(|k, _| if max[k] > min[k] { rng.random_range(min[k]..=max[k]) } else { min[k] })
            }
            PointSampler::Disc { center, radius } => {
                let rho = radius * rng.random::<f64>().sqrt();
                let th = rng.random_range(0.0..std::f64::consts::TAU);
                center + Point3::new(rho * th.cos(), rho * th.sin(), 0.0)
            }
        }
    }
}

/// Draws `count` points that are free for radius `r` at time `t`, at least
/// `2r + gap` from each other and from every point in `avoid`.
#[allow(clippy::too_many_arguments)]
pub fn sample_separated<R: Rng>(
    ws: &Workspace,
    sampler: &PointSampler,
    count: usize,
    r: f64,
    avoid: &[Point3],
    t: f64,
    plane_z: Option<f64>,
    rng: &mut R,
) -> Option<Vec<Point3>> {
    let sep = 2.0 * r + SAMPLE_GAP;
    let mut out: Vec<Point3> = Vec::with_capacity(count);
    for _ in 0..count {
        let p = (0..SAMPLE_TRIES).find_map(|_| {
            let mut p = sampler.sample(rng);
            if let Some(z) = plane_z {
                p.z = z;
            }
            let ok = ws.point_free(&p, r, t) && out.iter().chain(avoid).all(|q| (p - q).norm() >= sep);
            ok.then_some(p)
        })?;
        out.push(p);
    }
    Some(out)
}
