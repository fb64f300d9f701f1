use std::io::{self, Write};
use std::time::{Duration, Instant};

use rand::Rng;

use crate::planner::{build_roadmaps, check_plan, solve_with_roadmaps, Budget, CancelToken, PlannerParams, ProblemQuery};
use crate::rng::{substream, Stream};
use crate::scenario::{sample_separated, PointSampler};
use crate::workspace::{Obstacle, Shape, Workspace};
use crate::Point3;

pub const ARENA: [f64; 3] = [6.0, 6.0, 2.0];
pub const POLES: usize = 5;
pub const POLE_RADIUS: f64 = 0.2;
pub const BENCH_D_TRAVEL: f64 = 0.25;

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub agents: Vec<usize>,
    pub instances: usize,
    pub budget: Budget,
    pub seed: u64,
    pub r_agent: f64,
    /// Keep improving after the first solution until the budget runs out.
    pub refine: bool,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            agents: vec![2, 4, 8, 16, 32],
            instances: 100,
            budget: Budget::WallClock(Duration::from_millis(1000)),
            seed: 0,
            r_agent: 0.2,
            refine: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub n: usize,
    pub instance: usize,
    pub success: bool,
    /// Roadmap construction plus search until the first solution (ms).
    pub t_first_ms: f64,
    /// Normalized cost of the returned plan; NaN on failure.
    pub cost: f64,
    pub flowtime: Option<usize>,
}

/// A 6×6×2 m arena with five full-height poles of radius 0.2 m at random
/// positions, plus `n` random starts and goals, each set separated by
/// more than `2·r_agent`.
pub fn random_instance(n: usize, r_agent: f64, seed: u64, instance: usize) -> (Workspace, ProblemQuery) {
    let mut rng = substream(seed, Stream::Instances, ((n as u64) << 32) | instance as u64);
    let lo = Point3::zeros();
    let hi = Point3::from(ARENA);
    loop {
        let poles = (0..POLES)
            .map(|_| {
                Obstacle::fixed(Shape::Pole {
                    x: rng.random_range(0.5..ARENA[0] - 0.5),
                    y: rng.random_range(0.5..ARENA[1] - 0.5),
                    radius: POLE_RADIUS,
                    z_min: 0.0,
                    z_max: ARENA[2],
                })
            })
            .collect();
        let ws = Workspace::new(lo, hi, poles).expect("arena is valid");
        let sampler = PointSampler::Box { min: lo, max: hi };
        let Some(starts) = sample_separated(&ws, &sampler, n, r_agent, &[], 0.0, None, &mut rng) else {
            continue;
        };
        let Some(goals) = sample_separated(&ws, &sampler, n, r_agent, &[], 0.0, None, &mut rng) else {
            continue;
        };
        let mut q = ProblemQuery::new(starts, goals, r_agent, BENCH_D_TRAVEL);
        q.seed = seed ^ instance as u64;
        return (ws, q);
    }
}

/// Solves `instances` random instances per team size and reports success,
/// time to first solution and normalized cost.
pub fn bench_scalability(cfg: &BenchConfig) -> Vec<BenchRow> {
    let params = PlannerParams {
        refine: cfg.refine,
        ..PlannerParams::default()
    };
    let mut rows = Vec::new();
    for &n in &cfg.agents {
        for instance in 0..cfg.instances {
            let (ws, mut q) = random_instance(n, cfg.r_agent, cfg.seed, instance);
            q.budget = cfg.budget;
            let started = Instant::now();
            let result = build_roadmaps(&ws, &q, &params.roadmap).and_then(|rms| {
                let build_ms = started.elapsed().as_secs_f64() * 1e3;
                solve_with_roadmaps(&q, &ws, &rms, &params, &CancelToken::default()).map(|o| (o, build_ms))
            });
            rows.push(match result {
                Ok((out, build_ms)) => BenchRow {
                    n,
                    instance,
                    success: out.plan.feasible && check_plan(&out.plan, &q, &ws).is_empty(),
                    t_first_ms: build_ms + out.first_solution_ms,
                    cost: out.plan.normalized_cost,
                    flowtime: Some(out.plan.flowtime),
                },
                Err(_) => BenchRow {
                    n,
                    instance,
                    success: false,
                    t_first_ms: started.elapsed().as_secs_f64() * 1e3,
                    cost: f64::NAN,
                    flowtime: None,
                },
            });
        }
    }
    rows
}

pub fn write_bench_csv<W: Write>(rows: &[BenchRow], mut w: W) -> io::Result<()> {
    writeln!(w, "n,instance,success,t_first_ms,cost")?;
    for r in rows {
        writeln!(w, "{},{},{},{:.3},{:.6}", r.n, r.instance, r.success, r.t_first_ms, r.cost)?;
    }
    Ok(())
}
