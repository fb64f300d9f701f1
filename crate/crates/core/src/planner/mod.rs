//! Coupled multi-agent pathfinding over continuous space: depth-first search
//! over joint configurations with lazily generated successors, geometric
//! duplicate detection and anytime refinement.

mod check;
mod duplicate;
mod generate;
mod refine;
mod search;
mod successors;

pub use check::{check_plan, Violation, ViolationKind};
pub(crate) use check::check_steps;
pub use duplicate::{is_duplicate, DuplicateIndex};
pub use generate::{generate_configuration, Candidate, SearchContext, Stuck};
pub use refine::smooth_path;
pub use successors::successor_set;

use std::ops::Deref;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::roadmap::{Lattice, Roadmap, RoadmapError, RoadmapParams};
use crate::workspace::Workspace;
use crate::Point3;

/// Joint position of every agent at one discrete step.
#[derive(Debug, Clone, PartialEq)]
pub struct Configuration(pub Vec<Point3>);

impl Deref for Configuration {
    type Target = [Point3];

    fn deref(&self) -> &[Point3] {
        &self.0
    }
}

impl Configuration {
    /// Largest per-agent displacement between two configurations.
    pub fn max_distance(&self, other: &Configuration) -> f64 {
        self.iter()
            .zip(other.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

/// Search and refinement budget.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Budget {
    WallClock(Duration),
    /// Deterministic mode: node expansions plus refinement work units.
    Expansions(u64),
}

/// Cooperative cancellation flag checked once per expansion.
#[derive(Debug, Clone, Default)]
pub struct CancelToken(Arc<AtomicBool>);

impl CancelToken {
    pub fn cancel(&self) {
        self.0.store(true, Ordering::Relaxed);
    }

    pub fn is_cancelled(&self) -> bool {
        self.0.load(Ordering::Relaxed)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemQuery {
    pub starts: Vec<Point3>,
    pub goals: Vec<Point3>,
    pub r_agent: f64,
    pub r_target: f64,
    pub d_travel: f64,
    /// Time at which moving obstacles are frozen for this query (s).
    pub time: f64,
    pub budget: Budget,
    pub seed: u64,
    /// Feasible plan from the same start used as the initial incumbent.
    pub seed_plan: Option<Vec<Configuration>>,
}

impl ProblemQuery {
    pub fn new(starts: Vec<Point3>, goals: Vec<Point3>, r_agent: f64, d_travel: f64) -> Self {
        Self {
            starts,
            goals,
            r_agent,
            r_target: 0.1,
            d_travel,
            time: 0.0,
            budget: Budget::WallClock(Duration::from_secs(1)),
            seed: 0,
            seed_plan: None,
        }
    }

    pub fn len(&self) -> usize {
        self.starts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.starts.is_empty()
    }

    pub fn validate(&self, ws: &Workspace) -> Result<(), PlannerError> {
        let bad = |what: String| Err(PlannerError::InvalidQuery(what));
        if self.starts.is_empty() {
            return bad("at least one agent is required".into());
        }
        if self.starts.len() != self.goals.len() {
            return bad(format!(
                "{} starts but {} goals",
                self.starts.len(),
                self.goals.len()
            ));
        }
        if !(self.d_travel > 0.0 && self.r_target > 0.0 && self.r_agent > 0.0) {
            return bad("d_travel, r_target and r_agent must be positive".into());
        }
        for (i, (s, g)) in self.starts.iter().zip(&self.goals).enumerate() {
            if !ws.contains(s) || !ws.contains(g) {
                return bad(format!("agent {i}: start or goal outside the workspace"));
            }
        }
        Ok(())
    }

    /// Σ‖start − goal‖ over agents.
    pub fn total_distance(&self) -> f64 {
        self.starts
            .iter()
            .zip(&self.goals)
            .map(|(s, g)| (s - g).norm())
            .sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PlannerParams {
    /// Max-norm tolerance under which two configurations are the same state (m).
    pub eps_dup: f64,
    /// Probability of dropping an interior waypoint while smoothing.
    pub p_skip: f64,
    /// Agents replanned together in one large-neighbourhood move.
    pub lns_size: usize,
    /// Cap on Monte-Carlo restarts per solve.
    pub mc_restarts: u32,
    /// Expansions given to each refinement phase per round.
    pub slice: u64,
    /// Spend the remaining budget improving the first solution.
    pub refine: bool,
    pub roadmap: RoadmapParams,
}

impl Default for PlannerParams {
    fn default() -> Self {
        Self {
            eps_dup: 0.0625,
            p_skip: 0.25,
            lns_size: 4,
            mc_restarts: 1000,
            slice: 256,
            refine: true,
            roadmap: RoadmapParams::default(),
        }
    }
}

impl PlannerParams {
    pub fn validate(&self, d_travel: f64) -> Result<(), PlannerError> {
        if !(self.eps_dup > 0.0 && self.eps_dup < d_travel) {
            return Err(PlannerError::InvalidQuery(format!(
                "eps_dup {} must lie in (0, d_travel = {d_travel})",
                self.eps_dup
            )));
        }
        if !(0.0..1.0).contains(&self.p_skip) {
            return Err(PlannerError::InvalidQuery(format!(
                "p_skip {} must lie in [0, 1)",
                self.p_skip
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Plan {
    pub steps: Vec<Configuration>,
    /// Last step index at which each agent moves.
    pub settled: Vec<usize>,
    pub flowtime: usize,
    /// Flowtime in meters of travel over the summed start-goal distance.
    pub normalized_cost: f64,
    pub feasible: bool,
}

impl Plan {
    pub fn new(steps: Vec<Configuration>, query: &ProblemQuery) -> Self {
        let n = query.len();
        let settled: Vec<usize> = (0..n)
            .map(|i| {
                (1..steps.len())
                    .rev()
                    .find(|&k| steps[k][i] != steps[k - 1][i])
                    .unwrap_or(0)
            })
            .collect();
        let flowtime = settled.iter().sum();
        let total = query.total_distance();
        let normalized_cost = if total > 0.0 {
            flowtime as f64 * query.d_travel / total
        } else {
            1.0
        };
        Self {
            steps,
            settled,
            flowtime,
            normalized_cost,
            feasible: false,
        }
    }

    /// Number of transitions `T`.
    pub fn horizon(&self) -> usize {
        self.steps.len().saturating_sub(1)
    }

    pub fn path(&self, agent: usize) -> Vec<Point3> {
        self.steps.iter().map(|q| q[agent]).collect()
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum PlannerError {
    #[error("invalid query: {0}")]
    InvalidQuery(String),
    #[error("agent {agent}: {source}")]
    Roadmap { agent: usize, source: RoadmapError },
    #[error("no solution within the deadline ({expansions} expansions, max depth {max_depth})")]
    NoSolutionWithinDeadline { expansions: u64, max_depth: usize },
}

/// One incumbent improvement: elapsed time, flowtime and normalized cost.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TracePoint {
    pub elapsed_ms: f64,
    pub flowtime: usize,
    pub normalized_cost: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOutput {
    pub plan: Plan,
    pub trace: Vec<TracePoint>,
    pub expansions: u64,
    pub first_solution_ms: f64,
    pub first_flowtime: usize,
    /// The incumbent came from `ProblemQuery::seed_plan`.
    pub seeded: bool,
}

/// Budget accounting shared by search and refinement.
#[derive(Debug, Clone)]
pub(crate) struct Clock {
    start: Instant,
    budget: Budget,
    used: u64,
    cancel: CancelToken,
}

impl Clock {
    pub(crate) fn new(budget: Budget, cancel: CancelToken) -> Self {
        Self {
            start: Instant::now(),
            budget,
            used: 0,
            cancel,
        }
    }

    pub(crate) fn charge(&mut self, units: u64) {
        self.used += units;
    }

    pub(crate) fn used(&self) -> u64 {
        self.used
    }

    pub(crate) fn elapsed_ms(&self) -> f64 {
        self.start.elapsed().as_secs_f64() * 1e3
    }

    pub(crate) fn expired(&self) -> bool {
        if self.cancel.is_cancelled() {
            return true;
        }
        match self.budget {
            Budget::WallClock(limit) => self.start.elapsed() >= limit,
            Budget::Expansions(cap) => self.used >= cap,
        }
    }
}

/// Builds one roadmap per agent, sharing the lattice between agents.
pub fn build_roadmaps(
    ws: &Workspace,
    query: &ProblemQuery,
    params: &RoadmapParams,
) -> Result<Vec<Roadmap>, PlannerError> {
    let lattice = Arc::new(
        Lattice::build(ws, query.r_agent, params, query.time)
            .map_err(|source| PlannerError::Roadmap { agent: 0, source })?,
    );
    query
        .goals
        .iter()
        .enumerate()
        .map(|(agent, g)| {
            Roadmap::on_lattice(lattice.clone(), ws, *g, query.r_agent, params, query.time)
                .map_err(|source| PlannerError::Roadmap { agent, source })
        })
        .collect()
}

/// Builds roadmaps and runs [`solve_with_roadmaps`].
pub fn solve(
    query: &ProblemQuery,
    ws: &Workspace,
    params: &PlannerParams,
) -> Result<SolveOutput, PlannerError> {
    query.validate(ws)?;
    params.validate(query.d_travel)?;
    let rms = build_roadmaps(ws, query, &params.roadmap)?;
    solve_with_roadmaps(query, ws, &rms, params, &CancelToken::default())
}

/// Finds a first plan, then refines it until the budget runs out.
pub fn solve_with_roadmaps(
    query: &ProblemQuery,
    ws: &Workspace,
    rms: &[Roadmap],
    params: &PlannerParams,
    cancel: &CancelToken,
) -> Result<SolveOutput, PlannerError> {
    query.validate(ws)?;
    params.validate(query.d_travel)?;
    let mut clock = Clock::new(query.budget, cancel.clone());
    refine::run(query, ws, rms, params, &mut clock)
}
