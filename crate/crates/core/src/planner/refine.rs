use rand::distr::{weighted::WeightedIndex, Distribution};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::check::check_steps;
use super::generate::SearchContext;
use super::search::{Search, Step};
use super::{
    Clock, Configuration, Plan, PlannerError, PlannerParams, ProblemQuery, SolveOutput, TracePoint,
};
use crate::rng::{stream, Stream};
use crate::roadmap::Roadmap;
use crate::workspace::{pair_min_distance, Workspace};
use crate::Point3;

struct Incumbent<'q> {
    query: &'q ProblemQuery,
    ws: &'q Workspace,
    plan: Option<Plan>,
    trace: Vec<TracePoint>,
}

impl Incumbent<'_> {
    fn flowtime(&self) -> Option<u64> {
        self.plan.as_ref().map(|p| p.flowtime as u64)
    }

    /// Adopts `steps` if it is feasible and strictly cheaper.
    fn offer(&mut self, steps: Vec<Vec<Point3>>, clock: &Clock) -> bool {
        let plan = Plan::new(steps.into_iter().map(Configuration).collect(), self.query);
        if self.plan.as_ref().is_some_and(|p| plan.flowtime >= p.flowtime) {
            return false;
        }
        let steps: Vec<Vec<Point3>> = plan.steps.iter().map(|q| q.0.clone()).collect();
        if !check_steps(&steps, self.query, self.ws).is_empty() {
            return false;
        }
        self.trace.push(TracePoint {
            elapsed_ms: clock.elapsed_ms(),
            flowtime: plan.flowtime,
            normalized_cost: plan.normalized_cost,
        });
        self.plan = Some(Plan {
            feasible: true,
            ..plan
        });
        true
    }
}

/// Drives the whole solve: first solution, then refinement rounds of
/// branch-and-bound, Monte-Carlo restarts, large-neighbourhood search and
/// smoothing until the budget runs out.
pub(crate) fn run(
    query: &ProblemQuery,
    ws: &Workspace,
    rms: &[Roadmap],
    params: &PlannerParams,
    clock: &mut Clock,
) -> Result<SolveOutput, PlannerError> {
    let ctx = SearchContext::new(query, ws, rms);
    let mut rng = stream(query.seed, Stream::Planner);
    let mut best = Incumbent {
        query,
        ws,
        plan: None,
        trace: Vec::new(),
    };
    let mut seeded = false;
    if let Some(seed) = &query.seed_plan {
        let steps: Vec<Vec<Point3>> = seed.iter().map(|q| q.0.clone()).collect();
        seeded = best.offer(steps, clock);
    }

    let mut main = Search::new(&ctx, params.eps_dup, fork(&mut rng), false, false, best.flowtime());
    let mut restarts = 0u32;
    let mut first_ms = if seeded { clock.elapsed_ms() } else { 0.0 };

    // The main search stays complete; jittered probes with doubling quotas
    // run beside it once it has used one slice.
    let mut main_alive = true;
    let mut probe: Option<(Search, u64)> = None;
    let mut quota = params.slice;
    while best.plan.is_none() {
        if clock.expired() {
            return Err(PlannerError::NoSolutionWithinDeadline {
                expansions: clock.used(),
                max_depth: main.max_depth,
            });
        }
        if main_alive {
            main_alive = run_slice(&mut main, &mut best, params.slice, true, clock);
            if best.plan.is_some() {
                break;
            }
        }
        if probe.is_none() && restarts < params.mc_restarts {
            restarts += 1;
            let s = Search::new(&ctx, params.eps_dup, fork(&mut rng), true, false, None);
            probe = Some((s, quota));
            quota = quota.saturating_mul(2);
        }
        let Some((s, left)) = probe.as_mut() else {
            if !main_alive {
                return Err(PlannerError::NoSolutionWithinDeadline {
                    expansions: clock.used(),
                    max_depth: main.max_depth,
                });
            }
            continue;
        };
        let before = s.expansions;
        let alive = run_slice(s, &mut best, params.slice.min(*left), true, clock);
        *left = left.saturating_sub(s.expansions - before);
        if !alive || *left == 0 {
            probe = None;
        }
    }
    if !seeded {
        first_ms = clock.elapsed_ms();
    }
    let first_flowtime = best.plan.as_ref().map_or(0, |p| p.flowtime);
    let root_bound = main.root_bound;

    if params.refine {
        let mut mc: Option<Search> = None;
        while !clock.expired() && best.flowtime().is_some_and(|f| f > root_bound) {
            if main_alive {
                main.incumbent = best.flowtime();
                main_alive = run_slice(&mut main, &mut best, params.slice, false, clock);
            }
            if mc.is_none() && restarts < params.mc_restarts {
                restarts += 1;
                mc = Some(Search::new(&ctx, params.eps_dup, fork(&mut rng), true, false, best.flowtime()));
            }
            if let Some(s) = mc.as_mut() {
                s.incumbent = best.flowtime();
                if !run_slice(s, &mut best, params.slice, false, clock) {
                    mc = None;
                }
            }
            if clock.expired() {
                break;
            }
            if let Some(plan) = best.plan.as_ref() {
                if let Some(steps) = lns(&ctx, plan, params, &mut rng, clock) {
                    best.offer(steps, clock);
                }
            }
            for agent in 0..query.len() {
                if clock.expired() {
                    break;
                }
                clock.charge(1);
                let plan = best.plan.as_ref().expect("incumbent");
                if let Some(steps) = smooth_steps(plan, agent, ws, query, params.p_skip, &mut rng) {
                    best.offer(steps, clock);
                }
            }
        }
    }

    let expansions = clock.used();
    Ok(SolveOutput {
        plan: best.plan.expect("incumbent"),
        trace: best.trace,
        expansions,
        first_solution_ms: first_ms,
        first_flowtime,
        seeded,
    })
}

fn fork(rng: &mut ChaCha8Rng) -> ChaCha8Rng {
    use rand::SeedableRng;
    ChaCha8Rng::seed_from_u64(rng.random())
}

/// Runs up to `slice` expansions, stopping early at the first adopted plan
/// when `until_found`. Returns false once the search is exhausted.
fn run_slice(search: &mut Search, best: &mut Incumbent, slice: u64, until_found: bool, clock: &mut Clock) -> bool {
    for _ in 0..slice {
        if clock.expired() {
            return true;
        }
        clock.charge(1);
        match search.step() {
            Step::Working => {}
            Step::Found(steps) => {
                let adopted = best.offer(steps, clock);
                search.incumbent = best.flowtime();
                if adopted && until_found {
                    return true;
                }
            }
            Step::Exhausted => return false,
        }
    }
    true
}

/// Replans `lns_size` agents picked by roulette on path length while every
/// other agent follows its incumbent path. Returns the merged steps when the
/// subset's flowtime strictly drops.
fn lns(
    ctx: &SearchContext,
    plan: &Plan,
    params: &PlannerParams,
    rng: &mut ChaCha8Rng,
    clock: &mut Clock,
) -> Option<Vec<Vec<Point3>>> {
    let n = ctx.len();
    let k = params.lns_size.min(n);
    if k == 0 || k >= n {
        return None;
    }
    let mut weights: Vec<f64> = (0..n)
        .map(|i| plan.steps.windows(2).map(|w| (w[1][i] - w[0][i]).norm()).sum())
        .collect();
    let mut subset = Vec::with_capacity(k);
    for _ in 0..k {
        let dist = WeightedIndex::new(&weights).ok()?;
        let i = dist.sample(rng);
        subset.push(i);
        weights[i] = 0.0;
    }
    subset.sort_unstable();

    let mut sub = ctx.clone();
    sub.rms = subset.iter().map(|&i| ctx.rms[i]).collect();
    sub.starts = subset.iter().map(|&i| ctx.starts[i]).collect();
    sub.goals = subset.iter().map(|&i| ctx.goals[i]).collect();
    sub.fixed = (0..n)
        .filter(|i| !subset.contains(i))
        .map(|i| plan.path(i))
        .collect();
    let old: u64 = subset.iter().map(|&i| plan.settled[i] as u64).sum();

    let mut search = Search::new(&sub, params.eps_dup, fork(rng), true, true, Some(old));
    let mut found = None;
    for _ in 0..params.slice {
        if clock.expired() {
            break;
        }
        clock.charge(1);
        match search.step() {
            Step::Working => {}
            Step::Found(steps) => {
                found = Some(steps);
                break;
            }
            Step::Exhausted => break,
        }
    }
    let sub_steps = found?;

    let horizon = (sub_steps.len() - 1).max(plan.horizon());
    let mut steps: Vec<Vec<Point3>> = (0..=horizon)
        .map(|t| {
            let base = &plan.steps[t.min(plan.horizon())];
            let mut q = base.0.clone();
            for (s, &i) in subset.iter().enumerate() {
                q[i] = sub_steps[t.min(sub_steps.len() - 1)][s];
            }
            q
        })
        .collect();
    while steps.len() > 1 && steps[steps.len() - 1] == steps[steps.len() - 2] {
        steps.pop();
    }
    Some(steps)
}

/// One smoothing attempt on `agent` (see [`smooth_path`]), returning the new
/// steps only when they differ and pass the acceptance checks.
fn smooth_steps<R: Rng>(
    plan: &Plan,
    agent: usize,
    ws: &Workspace,
    query: &ProblemQuery,
    p_skip: f64,
    rng: &mut R,
) -> Option<Vec<Vec<Point3>>> {
    let s = plan.settled[agent];
    if s < 2 {
        return None;
    }
    let path = plan.path(agent);
    let mut kept = vec![path[0]];
    for p in &path[1..s] {
        if !rng.random_bool(p_skip) {
            kept.push(*p);
        }
    }
    kept.push(path[s]);

    let mut cum = vec![0.0];
    for w in kept.windows(2) {
        cum.push(cum.last().unwrap() + (w[1] - w[0]).norm());
    }
    let total = *cum.last().unwrap();
    let moves = if total > 0.0 {
        ((total / query.d_travel - 1e-9).ceil() as usize).clamp(1, s)
    } else {
        0
    };
    let at = |len: f64| -> Point3 {
        let j = cum.partition_point(|&c| c < len).clamp(1, kept.len() - 1);
        let span = cum[j] - cum[j - 1];
        if span <= 0.0 {
            return kept[j];
        }
        let w = ((len - cum[j - 1]) / span).clamp(0.0, 1.0);
        kept[j - 1] + (kept[j] - kept[j - 1]) * w
    };
    let mut new_path: Vec<Point3> = (0..path.len())
        .map(|t| {
            if t >= moves {
                path[s]
            } else {
                at(total * t as f64 / moves as f64)
            }
        })
        .collect();
    new_path[0] = path[0];
    if new_path == path {
        return None;
    }

    let r = query.r_agent;
    for t in 0..new_path.len() - 1 {
        let (a, b) = (new_path[t], new_path[t + 1]);
        if (b - a).norm() > query.d_travel * (1.0 + 1e-9) || !ws.segment_free(&a, &b, r, query.time) {
            return None;
        }
        for j in (0..query.len()).filter(|&j| j != agent) {
            let (c, d) = (plan.steps[t][j], plan.steps[t + 1][j]);
            if pair_min_distance(&a, &b, &c, &d) < 2.0 * r + 1e-9 {
                return None;
            }
        }
    }
    Some(
        plan.steps
            .iter()
            .zip(&new_path)
            .map(|(q, p)| {
                let mut q = q.0.clone();
                q[agent] = *p;
                q
            })
            .collect(),
    )
}

/// Smooths one agent's path: drops each interior waypoint of its moving
/// prefix with probability `p_skip`, resamples the remaining polyline at
/// uniform arc length with as few steps as `d_travel` allows, then holds the
/// final point. The horizon is unchanged. Returns the input unchanged when
/// the result would break step length, static clearance or pairwise
/// separation.
pub fn smooth_path<R: Rng>(
    plan: &Plan,
    agent: usize,
    ws: &Workspace,
    query: &ProblemQuery,
    p_skip: f64,
    rng: &mut R,
) -> Plan {
    match smooth_steps(plan, agent, ws, query, p_skip, rng) {
        Some(steps) => Plan {
            feasible: plan.feasible,
            ..Plan::new(steps.into_iter().map(Configuration).collect(), query)
        },
        None => plan.clone(),
    }
}
