//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line.
//! Run with `cargo test -p lf-core --test acceptance -- --nocapture`.
//!
//! Every test holds one global lock so timing-sensitive criteria never share
//! the machine with another criterion.

use std::collections::HashMap;
use std::sync::{Mutex, MutexGuard, OnceLock};
use std::time::{Duration, Instant};

use lf_core::planner::{
    build_roadmaps, check_plan, solve, solve_with_roadmaps, Budget, CancelToken, PlannerParams, ProblemQuery,
    SearchContext,
};
use lf_core::roadmap::RoadmapParams;
use lf_core::runtime::{bench_scalability, random_instance, run_mission, BenchConfig, BenchRow, MetricsLog, TaskRecord};
use lf_core::scenario::{parse_scenario, Scenario};
use lf_core::workspace::{pair_min_distance, Obstacle, Shape, Workspace};
use lf_core::Point3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn serial() -> MutexGuard<'static, ()> {
    static LOCK: Mutex<()> = Mutex::new(());
    LOCK.lock().unwrap_or_else(|e| e.into_inner())
}

fn verdict(n: u32, pass: bool, detail: String) {
    println!("criterion {n}: {} | {detail}", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "criterion {n} failed: {detail}");
}

#[derive(Clone, Copy, PartialEq)]
enum Mode {
    /// The criterion's own budget policy.
    Native,
    /// Expansion budgets everywhere.
    Deterministic,
}

struct Run {
    pass: bool,
    detail: String,
    /// Reproducible record of the run (no wall-clock values).
    record: String,
}

// ---------- 1: feasibility soundness ----------

const SEED_1: u64 = 101;

fn criterion_1(_: Mode) -> Run {
    let mut returned = 0;
    let mut violations = 0;
    let mut record = String::new();
    for n in [1, 2, 4, 8] {
        for i in 0..125 {
            let (ws, mut q) = random_instance(n, 0.2, SEED_1, i);
            q.budget = Budget::Expansions(3000);
            match solve(&q, &ws, &PlannerParams::default()) {
                Ok(out) => {
                    returned += 1;
                    let v = check_plan(&out.plan, &q, &ws);
                    violations += v.len();
                    record += &format!("{n},{i},{},{}\n", out.plan.flowtime, v.len());
                }
                Err(e) => record += &format!("{n},{i},none,{e}\n"),
            }
        }
    }
    Run {
        pass: violations == 0 && returned > 0,
        detail: format!("{returned}/500 plans returned, {violations} violations"),
        record,
    }
}

// ---------- 2: scalability ----------

const SEED_2: u64 = 202;

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let m = xs.len() / 2;
    if xs.len() % 2 == 0 {
        0.5 * (xs[m - 1] + xs[m])
    } else {
        xs[m]
    }
}

fn success_rate(rows: &[BenchRow], limit_ms: f64) -> f64 {
    rows.iter().filter(|r| r.success && r.t_first_ms <= limit_ms).count() as f64 / rows.len() as f64
}

fn rows_record(rows: &[BenchRow]) -> String {
    rows.iter()
        .map(|r| format!("{},{},{},{:?}\n", r.n, r.instance, r.success, r.flowtime))
        .collect()
}

fn criterion_2(mode: Mode) -> Run {
    let (budget_32, budget_8, instances) = match mode {
        Mode::Native => (
            Budget::WallClock(Duration::from_millis(1000)),
            Budget::WallClock(Duration::from_millis(200)),
            100,
        ),
        Mode::Deterministic => (Budget::Expansions(20_000), Budget::Expansions(20_000), 20),
    };
    let bench = |n: usize, r_agent: f64, budget: Budget| {
        bench_scalability(&BenchConfig {
            agents: vec![n],
            instances,
            budget,
            seed: SEED_2,
            r_agent,
            refine: false,
        })
    };
    let big = bench(32, 0.2, budget_32);
    let small = bench(8, 0.2, budget_8);
    let thin = bench(32, 0.1, budget_32);
    let rate_32 = success_rate(&big, 1000.0);
    let rate_8 = success_rate(&small, 200.0);
    let med = |rows: &[BenchRow]| median(rows.iter().map(|r| r.t_first_ms).collect());
    let (med_02, med_01) = (med(&big), med(&thin));
    let pass = rate_32 >= 0.95 && rate_8 >= 0.95 && med_01 < med_02;
    Run {
        pass,
        detail: format!(
            "n=32 success {:.0}% within 1 s (median {med_02:.1} ms); n=8 success {:.0}% within 200 ms; \
             n=32 r=0.1 median {med_01:.1} ms",
            rate_32 * 100.0,
            rate_8 * 100.0
        ),
        record: rows_record(&big) + &rows_record(&small) + &rows_record(&thin),
    }
}

// ---------- 3: anytime refinement ----------

const SEED_3: u64 = 303;

fn criterion_3(mode: Mode) -> Run {
    let budget = match mode {
        Mode::Native => Budget::WallClock(Duration::from_millis(500)),
        Mode::Deterministic => Budget::Expansions(20_000),
    };
    let mut monotone = true;
    let mut gains = Vec::new();
    let mut record = String::new();
    for i in 0..20 {
        let (ws, mut q) = random_instance(8, 0.2, SEED_3, i);
        q.budget = budget;
        let Ok(out) = solve(&q, &ws, &PlannerParams::default()) else {
            record += &format!("{i},none\n");
            gains.push(0.0);
            continue;
        };
        let costs: Vec<f64> = out.trace.iter().map(|p| p.normalized_cost).collect();
        monotone &= costs.windows(2).all(|w| w[1] <= w[0]);
        let first = costs[0];
        let last = *costs.last().unwrap();
        gains.push((first - last) / first);
        record += &format!("{i},{},{}\n", out.first_flowtime, out.plan.flowtime);
    }
    let mean = gains.iter().sum::<f64>() / gains.len() as f64;
    Run {
        pass: monotone && mean >= 0.05,
        detail: format!(
            "traces monotone: {monotone}; mean normalized-cost improvement {:.1}% over 20 instances",
            mean * 100.0
        ),
        record,
    }
}

// ---------- 4: small-instance optimality ----------

const SEED_4: u64 = 404;

fn small_instance(i: u64) -> (Workspace, ProblemQuery) {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED_4 + i);
    let ws = Workspace::planar(
        Point3::zeros(),
        Point3::new(4.0, 4.0, 2.0),
        1.0,
        vec![Obstacle::fixed(Shape::Pole {
            x: rng.random_range(1.5..2.5),
            y: rng.random_range(1.5..2.5),
            radius: 0.2,
            z_min: 0.0,
            z_max: 2.0,
        })],
    )
    .unwrap();
    let n = 1 + (i % 2) as usize;
    let mut pick = |taken: &[Point3]| loop {
        let p = Point3::new(rng.random_range(0.3..3.7), rng.random_range(0.3..3.7), 1.0);
        if ws.point_free(&p, 0.2, 0.0) && taken.iter().all(|q| (p - q).norm() > 0.5) {
            return p;
        }
    };
    let mut starts = Vec::new();
    let mut goals = Vec::new();
    for _ in 0..n {
        let s = pick(&starts);
        starts.push(s);
        let g = pick(&goals);
        goals.push(g);
    }
    let mut q = ProblemQuery::new(starts, goals, 0.2, 0.5);
    q.r_target = 0.1;
    (ws, q)
}

fn key(q: &[Point3]) -> Vec<i64> {
    q.iter()
        .flat_map(|p| [p.x, p.y, p.z].map(|c| (c * 1e6).round() as i64))
        .collect()
}

/// Exact minimum flowtime over joint moves drawn from each agent's
/// candidate set, by A* over (configuration, finished agents). Each step
/// costs one per unfinished agent; an agent within `r_target` of its goal
/// may be declared finished and never moves again. Paths costing more than
/// `bound` are pruned, so `None` means the optimum exceeds `bound`.
/// `Err` reports that the state cap was hit.
fn oracle_flowtime(ws: &Workspace, q: &ProblemQuery, params: &RoadmapParams, bound: usize) -> Result<Option<usize>, usize> {
    use std::cmp::Reverse;
    use std::collections::BinaryHeap;
    const STATE_CAP: usize = 2_000_000;
    let rms = build_roadmaps(ws, q, params).expect("roadmaps");
    let ctx = SearchContext::new(q, ws, &rms);
    let n = q.len();
    // Every move covers at most d_travel.
    let h = |cfg: &[Point3], mask: u32| -> usize {
        (0..n)
            .filter(|i| mask & (1 << i) == 0)
            .map(|i| (((cfg[i] - q.goals[i]).norm() - q.r_target) / q.d_travel - 1e-9).ceil().max(0.0) as usize)
            .sum()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut configs: Vec<(Vec<Point3>, u32)> = Vec::new();
    let mut index: HashMap<(Vec<i64>, u32), usize> = HashMap::new();
    let mut dist: Vec<usize> = Vec::new();
    let mut heap = BinaryHeap::new();
    let mut relax = |c: Vec<Point3>, mask: u32, g: usize, configs: &mut Vec<(Vec<Point3>, u32)>, dist: &mut Vec<usize>, heap: &mut BinaryHeap<Reverse<(usize, usize)>>| {
        let f = g + h(&c, mask);
        if f > bound {
            return;
        }
        let id = *index.entry((key(&c), mask)).or_insert_with(|| {
            configs.push((c, mask));
            dist.push(usize::MAX);
            configs.len() - 1
        });
        if g < dist[id] {
            dist[id] = g;
            heap.push(Reverse((f, id)));
        }
    };
    relax(q.starts.clone(), 0, 0, &mut configs, &mut dist, &mut heap);
    let full = (1u32 << n) - 1;
    while let Some(Reverse((f, id))) = heap.pop() {
        if configs.len() > STATE_CAP {
            return Err(configs.len());
        }
        let (cfg, mask) = configs[id].clone();
        let d = dist[id];
        if f > d + h(&cfg, mask) {
            continue;
        }
        if mask == full {
            return Ok(Some(d));
        }
        for i in 0..n {
            if mask & (1 << i) == 0 && ctx.at_goal(i, &cfg[i]) {
                relax(cfg.clone(), mask | (1 << i), d, &mut configs, &mut dist, &mut heap);
            }
        }
        let moves: Vec<Vec<Point3>> = (0..n)
            .map(|i| {
                if mask & (1 << i) != 0 {
                    vec![cfg[i]]
                } else {
                    ctx.candidates(i, &cfg[i], &mut rng).into_iter().map(|c| c.pos).collect()
                }
            })
            .collect();
        if moves.iter().any(|m| m.is_empty()) {
            continue;
        }
        let g = d + (n - mask.count_ones() as usize);
        let mut pick = vec![0usize; n];
        'outer: loop {
            let next: Vec<Point3> = (0..n).map(|i| moves[i][pick[i]]).collect();
            let ok = (0..n).all(|i| {
                (i + 1..n).all(|j| pair_min_distance(&cfg[i], &next[i], &cfg[j], &next[j]) >= 2.0 * q.r_agent + 1e-9)
            });
            if ok {
                relax(next, mask, g, &mut configs, &mut dist, &mut heap);
            }
            for i in 0..n {
                pick[i] += 1;
                if pick[i] < moves[i].len() {
                    continue 'outer;
                }
                pick[i] = 0;
            }
            break;
        }
    }
    Ok(None)
}

fn criterion_4(_: Mode) -> Run {
    let params = PlannerParams::default();
    let mut worst_gap: i64 = i64::MIN;
    let mut record = String::new();
    let mut decided = 0;
    for i in 0..20 {
        let (ws, mut q) = small_instance(i);
        q.budget = Budget::Expansions(20_000);
        q.seed = i;
        let rms = build_roadmaps(&ws, &q, &params.roadmap).unwrap();
        let Ok(out) = solve_with_roadmaps(&q, &ws, &rms, &params, &CancelToken::default()) else {
            record += &format!("{i},unsolved\n");
            continue;
        };
        let flow = out.plan.flowtime;
        match oracle_flowtime(&ws, &q, &params.roadmap, flow) {
            Ok(opt) => {
                decided += 1;
                // No candidate-set plan within `flow`: the refined plan is at least as good.
                let gap = opt.map_or(0, |o| flow as i64 - o as i64);
                worst_gap = worst_gap.max(gap);
                record += &format!("{i},{flow},{opt:?}\n");
            }
            Err(states) => record += &format!("{i},{flow},cap@{states}\n"),
        }
    }
    Run {
        pass: decided == 20 && worst_gap <= 1,
        detail: format!("{decided}/20 solved and certified; worst refined-minus-optimal flowtime gap {worst_gap} steps"),
        record,
    }
}

// ---------- 5-8: closed loop ----------

fn with_policy(mut sc: Scenario, mode: Mode) -> Scenario {
    if mode == Mode::Deterministic {
        sc.planner.deadline = lf_core::scenario::DeadlinePolicy::Expansions;
    }
    sc
}

fn tracking_scenario(n: usize, sigma: f64) -> Scenario {
    let (starts, mode, goals) = if n == 1 {
        ("[[1, 1, 1]]".to_string(), "oneshot", r#"{"kind": "list", "points": [[5, 4.5, 1.4]]}"#.to_string())
    } else {
        (
            "[[1, 1, 1], [2, 1, 1], [3, 1, 1], [4, 1, 1], [5, 1, 1]]".to_string(),
            "synchronous",
            r#"{"kind": "disc", "center": [3, 3.5, 1], "radius": 2}"#.to_string(),
        )
    };
    parse_scenario(&format!(
        r#"{{
        "version": 1,
        "seed": 505,
        "workspace": {{"min": [0, 0, 0], "max": [6, 6, 2],
            "obstacles": [{{"type": "pole", "xy": [3, 3], "radius": 0.2, "z": [0, 2]}}]}},
        "agents": {{"n": {n}, "starts": {starts}}},
        "mission": {{"mode": "{mode}", "goals": {goals}, "duration_s": 40}},
        "planner": {{"deadline": "expansions"}},
        "controller": {{"ctrl_hz": 100}},
        "runtime": {{"replan_hz": 10, "speed": 0.5, "disturbance_sigma": {sigma}}}
    }}"#
    ))
    .unwrap()
}

fn criterion_5(mode: Mode) -> Run {
    let mut pass = true;
    let mut parts = Vec::new();
    let mut record = String::new();
    for (n, sigma, bound) in [(1, 0.0, 0.15), (5, 0.0, 0.15), (1, 0.2, 0.25), (5, 0.2, 0.25)] {
        let sc = with_policy(tracking_scenario(n, sigma), mode);
        match run_mission(&sc) {
            Ok(out) => {
                let m = out.metrics;
                let err = m.summary.max_tracking_error;
                let ok = err <= bound && m.collision_ticks == 0;
                pass &= ok;
                parts.push(format!("n={n} sigma={sigma}: max error {err:.3} m (bound {bound})"));
                record += &m.deterministic_json();
            }
            Err(e) => {
                pass = false;
                parts.push(format!("n={n} sigma={sigma}: aborted ({e})"));
            }
        }
    }
    Run {
        pass,
        detail: parts.join("; "),
        record,
    }
}

/// Ten robots, four poles sweeping the arena, 5 Hz replanning, two minutes.
fn dynamic_scenario(mission: &str) -> Scenario {
    parse_scenario(&format!(
        r#"{{
        "version": 1,
        "seed": 606,
        "workspace": {{"min": [0, 0, 0], "max": [6, 6, 2], "dynamic_margin": 0.1,
            "obstacles": [
                {{"type": "pole", "xy": [1, 1], "radius": 0.2, "z": [0, 2],
                  "schedule": [[0, 1, 1, 1], [25, 1, 5, 1], [50, 1, 1, 1], [75, 1, 5, 1], [100, 1, 1, 1], [125, 1, 5, 1]]}},
                {{"type": "pole", "xy": [5, 5], "radius": 0.2, "z": [0, 2],
                  "schedule": [[0, 5, 5, 1], [25, 5, 1, 1], [50, 5, 5, 1], [75, 5, 1, 1], [100, 5, 5, 1], [125, 5, 1, 1]]}},
                {{"type": "pole", "xy": [1, 5], "radius": 0.2, "z": [0, 2],
                  "schedule": [[0, 1, 5, 1], [25, 5, 5, 1], [50, 1, 5, 1], [75, 5, 5, 1], [100, 1, 5, 1], [125, 5, 5, 1]]}},
                {{"type": "pole", "xy": [5, 1], "radius": 0.2, "z": [0, 2],
                  "schedule": [[0, 5, 1, 1], [25, 1, 1, 1], [50, 5, 1, 1], [75, 1, 1, 1], [100, 5, 1, 1], [125, 1, 1, 1]]}}
            ]}},
        "agents": {{"n": 10, "starts": [[2, 2, 1], [3, 2, 1], [4, 2, 1], [2, 3, 1], [3, 3, 1],
                                      [4, 3, 1], [2, 4, 1], [3, 4, 1], [4, 4, 1], [3, 2.5, 1.6]]}},
        "mission": {{"mode": "{mission}", "goals": {{"kind": "disc", "center": [3, 3, 1], "radius": 2}},
                    "duration_s": 120}},
        "planner": {{"deadline": "expansions"}},
        "runtime": {{"replan_hz": 5, "expansions_per_replan": 1500}}
    }}"#
    ))
    .unwrap()
}

static RUNS: OnceLock<Mutex<HashMap<String, Result<MetricsLog, String>>>> = OnceLock::new();

/// Runs (or reuses) one closed-loop mission.
fn mission(name: &str, sc: &Scenario) -> Result<MetricsLog, String> {
    let cache = RUNS.get_or_init(Default::default);
    if let Some(m) = cache.lock().unwrap().get(name) {
        return m.clone();
    }
    let m = run_mission(sc).map(|o| o.metrics).map_err(|e| e.to_string());
    cache.lock().unwrap().insert(name.to_string(), m.clone());
    m
}

fn criterion_6(mode: Mode) -> Run {
    let sc = with_policy(dynamic_scenario("synchronous"), mode);
    match mission("dynamic-sync", &sc) {
        Ok(m) => {
            let s = &m.summary;
            let pending_last_round = m
                .tasks
                .iter()
                .filter(|k| k.arrived_t.is_none())
                .all(|k| m.end_t - k.assigned_t <= 60.0);
            let pass = m.collision_ticks == 0 && s.tasks_overdue == 0 && pending_last_round;
            Run {
                pass,
                detail: format!(
                    "{} collision ticks; {} goals reached, {} pending ({} overdue); min pair distance {:.3} m, \
                     min obstacle clearance {:.3} m; {} replans, {} misses",
                    m.collision_ticks,
                    s.tasks_completed,
                    s.tasks_pending,
                    s.tasks_overdue,
                    m.min_pair_distance,
                    m.min_obstacle_clearance,
                    s.replans,
                    s.misses
                ),
                record: m.deterministic_json(),
            }
        }
        Err(e) => Run {
            pass: false,
            detail: format!("run aborted: {e}"),
            record: e,
        },
    }
}

/// Spearman rank correlation with average ranks for ties.
fn spearman(x: &[f64], y: &[f64]) -> f64 {
    let rank = |v: &[f64]| {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
        let mut r = vec![0.0; v.len()];
        let mut k = 0;
        while k < idx.len() {
            let mut e = k;
            while e + 1 < idx.len() && v[idx[e + 1]] == v[idx[k]] {
                e += 1;
            }
            let avg = (k + e) as f64 / 2.0;
            for &i in &idx[k..=e] {
                r[i] = avg;
            }
            k = e + 1;
        }
        r
    };
    let (rx, ry) = (rank(x), rank(y));
    let n = x.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}

/// Mean wait (arrival to next assignment) of completed, released tasks
/// shorter than the median distance.
fn short_task_wait(tasks: &[TaskRecord]) -> Option<f64> {
    let done: Vec<&TaskRecord> = tasks.iter().filter(|k| k.wait().is_some() && k.distance > 0.0).collect();
    let med = median(done.iter().map(|k| k.distance).collect());
    let waits: Vec<f64> = done.iter().filter(|k| k.distance < med).filter_map(|k| k.wait()).collect();
    (!waits.is_empty()).then(|| waits.iter().sum::<f64>() / waits.len() as f64)
}

fn criterion_7(mode: Mode) -> Run {
    let sync = mission("dynamic-sync", &with_policy(dynamic_scenario("synchronous"), mode));
    let asy = mission("dynamic-async", &with_policy(dynamic_scenario("asynchronous"), mode));
    let (sync, asy) = match (sync, asy) {
        (Ok(s), Ok(a)) => (s, a),
        (s, a) => {
            return Run {
                pass: false,
                detail: format!("run aborted: {:?} {:?}", s.err(), a.err()),
                record: String::new(),
            }
        }
    };
    let done: Vec<&TaskRecord> = asy.tasks.iter().filter(|k| k.arrived_t.is_some() && k.distance > 0.0).collect();
    let dist: Vec<f64> = done.iter().map(|k| k.distance).collect();
    let dur: Vec<f64> = done.iter().map(|k| k.duration().unwrap()).collect();
    let rho = spearman(&dist, &dur);
    let (ws, wa) = (short_task_wait(&sync.tasks), short_task_wait(&asy.tasks));
    let pass = rho > 0.5 && matches!((ws, wa), (Some(s), Some(a)) if s > a);
    Run {
        pass,
        detail: format!(
            "async Spearman(distance, duration) = {rho:.3} over {} tasks; short-task wait sync {:.2} s vs async {:.2} s",
            done.len(),
            ws.unwrap_or(f64::NAN),
            wa.unwrap_or(f64::NAN)
        ),
        record: format!("{rho:.12}\n{}\n{}", sync.deterministic_json(), asy.deterministic_json()),
    }
}

fn reuse_scenario() -> Scenario {
    parse_scenario(
        r#"{
        "version": 1,
        "seed": 808,
        "workspace": {"min": [0, 0, 0], "max": [6, 6, 2],
            "obstacles": [{"type": "pole", "xy": [2, 2], "radius": 0.2, "z": [0, 2]},
                          {"type": "pole", "xy": [4, 4], "radius": 0.2, "z": [0, 2]},
                          {"type": "pole", "xy": [2, 4], "radius": 0.2, "z": [0, 2]}]},
        "agents": {"n": 8},
        "mission": {"mode": "asynchronous", "goals": {"kind": "region", "min": [0.5, 0.5, 0.5], "max": [5.5, 5.5, 1.5]},
                    "duration_s": 30},
        "planner": {"deadline": "expansions"},
        "runtime": {"replan_hz": 10}
    }"#,
    )
    .unwrap()
}

fn criterion_8(mode: Mode) -> Run {
    let sc = with_policy(reuse_scenario(), mode);
    let m = match run_mission(&sc) {
        Ok(o) => o.metrics,
        Err(e) => {
            return Run {
                pass: false,
                detail: format!("run aborted: {e}"),
                record: String::new(),
            }
        }
    };
    let after: Vec<_> = m.replans.iter().skip(1).collect();
    let hits = after.iter().filter(|r| r.reuse_hit).count();
    let rate = hits as f64 / after.len() as f64;
    let (hit_ms, cold_ms) = m.publishable_means();
    let faster = matches!((hit_ms, cold_ms), (Some(h), Some(c)) if h < c);
    Run {
        pass: rate >= 0.8 && faster && m.collision_ticks == 0,
        detail: format!(
            "reuse hits {hits}/{} ({:.1}%) after the first replan; mean time to publishable plan: hits {:.2} ms, cold {:.2} ms",
            after.len(),
            rate * 100.0,
            hit_ms.unwrap_or(f64::NAN),
            cold_ms.unwrap_or(f64::NAN)
        ),
        record: m.deterministic_json(),
    }
}

fn report(n: u32, f: fn(Mode) -> Run) {
    let _guard = serial();
    let started = Instant::now();
    let run = f(Mode::Native);
    verdict(n, run.pass, format!("{} [{:.1} s]", run.detail, started.elapsed().as_secs_f64()));
}

#[test]
fn criterion_1_feasibility_soundness() {
    report(1, criterion_1);
}

#[test]
fn criterion_2_scalability() {
    report(2, criterion_2);
}

#[test]
fn criterion_3_anytime_refinement() {
    report(3, criterion_3);
}

#[test]
fn criterion_4_small_instance_optimality() {
    report(4, criterion_4);
}

#[test]
fn criterion_5_closed_loop_tracking() {
    report(5, criterion_5);
}

#[test]
fn criterion_6_dynamic_obstacles() {
    report(6, criterion_6);
}

#[test]
fn criterion_7_sync_vs_async() {
    report(7, criterion_7);
}

#[test]
fn criterion_8_solution_reuse() {
    report(8, criterion_8);
}

#[test]
fn criterion_9_determinism() {
    let _guard = serial();
    let started = Instant::now();
    let runs: [(u32, fn(Mode) -> Run); 8] = [
        (1, criterion_1),
        (2, criterion_2),
        (3, criterion_3),
        (4, criterion_4),
        (5, criterion_5),
        (6, criterion_6),
        (7, criterion_7),
        (8, criterion_8),
    ];
    let mut differing = Vec::new();
    for (n, f) in runs {
        if n == 6 || n == 7 {
            // Fresh runs: the shared cache would hand back the same log.
            RUNS.get_or_init(Default::default).lock().unwrap().clear();
        }
        let a = f(Mode::Deterministic).record;
        if n == 6 || n == 7 {
            RUNS.get_or_init(Default::default).lock().unwrap().clear();
        }
        let b = f(Mode::Deterministic).record;
        if a != b || a.is_empty() {
            differing.push(n);
        }
    }
    verdict(
        9,
        differing.is_empty(),
        format!(
            "deterministic re-runs of criteria 1-8 byte-identical; differing: {differing:?} [{:.1} s]",
            started.elapsed().as_secs_f64()
        ),
    );
}
