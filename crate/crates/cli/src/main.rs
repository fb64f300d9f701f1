use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use lf_core::planner::{check_plan, solve, Budget, Configuration, Plan};
use lf_core::runtime::{
    bench_scalability, run_mission, write_bench_csv, write_events_csv, write_trajectory_csv, BenchConfig,
};
use lf_core::scenario::{parse_scenario, Scenario};
use lf_core::Point3;

#[derive(Parser)]
#[command(name = "lf", version, about = "Continuous-space multi-robot planning, tracking and simulation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the scenario's planning query once and write the plan as JSON.
    Plan {
        #[command(flatten)]
        common: ScenarioArgs,
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Write the incumbent cost trace as CSV.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Run the closed-loop mission and write metrics as JSON.
    Simulate {
        #[command(flatten)]
        common: ScenarioArgs,
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Per-tick positions, references and tracking errors as CSV.
        #[arg(long)]
        traj: Option<PathBuf>,
        /// Replans, goal assignments and reuse hits as CSV.
        #[arg(long)]
        events: Option<PathBuf>,
    },
    /// Solve random instances of the standard arena and write a results CSV.
    Bench {
        /// Comma-separated team sizes.
        #[arg(long, value_delimiter = ',', default_values_t = [2usize, 4, 8, 16, 32])]
        agents: Vec<usize>,
        #[arg(long, default_value_t = 100)]
        instances: usize,
        #[arg(long, default_value_t = 1000)]
        limit_ms: u64,
        /// Budget instances by expansions instead of time (reproducible).
        #[arg(long)]
        expansions: Option<u64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.2)]
        r_agent: f64,
        /// Keep refining after the first solution.
        #[arg(long)]
        refine: bool,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Validate a plan against a scenario; exit 1 on any violation.
    Check {
        #[command(flatten)]
        common: ScenarioArgs,
        #[arg(short, long)]
        plan: PathBuf,
    },
}

#[derive(Args)]
struct ScenarioArgs {
    #[arg(short, long)]
    scenario: PathBuf,
    /// Override the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Print the scenario with every default filled in and exit.
    #[arg(long)]
    print_config: bool,
}

/// Failure classes mapped to exit codes.
enum Failure {
    Usage(anyhow::Error),
    Domain(anyhow::Error),
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Usage(e.into())
    }
}

type Outcome = Result<(), Failure>;

fn domain(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Domain(e.into())
}

fn load(args: &ScenarioArgs) -> Result<Scenario, Failure> {
    let text = fs::read_to_string(&args.scenario).with_context(|| format!("reading {}", args.scenario.display()))?;
    let mut sc = parse_scenario(&text).with_context(|| format!("parsing {}", args.scenario.display()))?;
    if let Some(seed) = args.seed {
        sc.seed = seed;
    }
    Ok(sc)
}

fn create(path: &Path) -> anyhow::Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

fn emit(path: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn plan_json(plan: &Plan) -> serde_json::Value {
    let steps: Vec<Vec<[f64; 3]>> = plan
        .steps
        .iter()
        .map(|q| q.iter().map(|p| [p.x, p.y, p.z]).collect())
        .collect();
    serde_json::json!({
        "steps": steps,
        "flowtime": plan.flowtime,
        "normalized_cost": plan.normalized_cost,
        "feasible": plan.feasible,
    })
}

fn read_plan_steps(path: &Path) -> anyhow::Result<Vec<Configuration>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let v: serde_json::Value = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    let steps = v
        .get("steps")
        .and_then(|s| s.as_array())
        .ok_or_else(|| anyhow!("{}: missing \"steps\" array", path.display()))?;
    steps
        .iter()
        .enumerate()
        .map(|(k, q)| {
            let agents = q.as_array().ok_or_else(|| anyhow!("steps[{k}] is not an array"))?;
            agents
                .iter()
                .enumerate()
                .map(|(i, p)| {
                    let c: Vec<f64> = p
                        .as_array()
                        .filter(|a| a.len() == 3)
                        .and_then(|a| a.iter().map(|x| x.as_f64()).collect())
                        .ok_or_else(|| anyhow!("steps[{k}][{i}] is not an [x, y, z] triple"))?;
                    Ok(Point3::new(c[0], c[1], c[2]))
                })
                .collect::<anyhow::Result<Vec<_>>>()
                .map(Configuration)
        })
        .collect()
}

fn cmd_plan(common: &ScenarioArgs, output: Option<&Path>, trace: Option<&Path>) -> Outcome {
    let sc = load(common)?;
    if common.print_config {
        println!("{}", sc.to_canonical_json());
        return Ok(());
    }
    let query = sc.plan_query()?;
    let ws = sc.workspace()?;
    let out = solve(&query, &ws, &sc.planner_params()).map_err(domain)?;
    emit(output, &serde_json::to_string(&plan_json(&out.plan))?)?;
    if let Some(path) = trace {
        let mut w = create(path)?;
        writeln!(w, "time_ms,flowtime,normalized_cost")?;
        for p in &out.trace {
            writeln!(w, "{:.3},{},{:.6}", p.elapsed_ms, p.flowtime, p.normalized_cost)?;
        }
        w.flush()?;
    }
    let violations = check_plan(&out.plan, &query, &ws);
    if !violations.is_empty() {
        for v in &violations {
            eprintln!("violation: {v}");
        }
        return Err(domain(anyhow!("{} violations in the produced plan", violations.len())));
    }
    Ok(())
}

fn cmd_simulate(common: &ScenarioArgs, output: Option<&Path>, traj: Option<&Path>, events: Option<&Path>) -> Outcome {
    let sc = load(common)?;
    if common.print_config {
        println!("{}", sc.to_canonical_json());
        return Ok(());
    }
    let out = run_mission(&sc).map_err(domain)?;
    emit(output, &out.metrics.to_json())?;
    if let Some(path) = traj {
        let mut w = create(path)?;
        write_trajectory_csv(&out.trajectory, &mut w)?;
        w.flush()?;
    }
    if let Some(path) = events {
        let mut w = create(path)?;
        write_events_csv(&out.events, &mut w)?;
        w.flush()?;
    }
    let m = &out.metrics;
    if m.collision_ticks > 0 {
        return Err(domain(anyhow!("{} ticks with unsafe separation", m.collision_ticks)));
    }
    Ok(())
}

fn cmd_check(common: &ScenarioArgs, plan_path: &Path) -> Outcome {
    let sc = load(common)?;
    if common.print_config {
        println!("{}", sc.to_canonical_json());
        return Ok(());
    }
    let query = sc.plan_query()?;
    let ws = sc.workspace()?;
    let mut steps = read_plan_steps(plan_path)?;
    if steps.is_empty() {
        // An empty plan means every agent stays at its start.
        steps.push(Configuration(query.starts.clone()));
    }
    let plan = Plan::new(steps, &query);
    let violations = check_plan(&plan, &query, &ws);
    if violations.is_empty() {
        println!("ok: {} steps, flowtime {}", plan.steps.len(), plan.flowtime);
        return Ok(());
    }
    for v in &violations {
        println!("{v}");
    }
    Err(domain(anyhow!("{} violations", violations.len())))
}

fn run(cli: Cli) -> Outcome {
    match cli.command {
        Command::Plan { common, output, trace } => cmd_plan(&common, output.as_deref(), trace.as_deref()),
        Command::Simulate {
            common,
            output,
            traj,
            events,
        } => cmd_simulate(&common, output.as_deref(), traj.as_deref(), events.as_deref()),
        Command::Check { common, plan } => cmd_check(&common, &plan),
        Command::Bench {
            agents,
            instances,
            limit_ms,
            expansions,
            seed,
            r_agent,
            refine,
            output,
        } => {
            let budget = match expansions {
                Some(n) => Budget::Expansions(n),
                None => Budget::WallClock(Duration::from_millis(limit_ms)),
            };
            let rows = bench_scalability(&BenchConfig {
                agents,
                instances,
                budget,
                seed,
                r_agent,
                refine,
            });
            let mut buf = Vec::new();
            write_bench_csv(&rows, &mut buf)?;
            emit(output.as_deref(), String::from_utf8(buf)?.trim_end())?;
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Domain(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
