//! `hhc` command-line front end.
//!
//! Exit codes: 0 success, 1 internal error, 2 input or validation error,
//! 3 infeasible line.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::allocate::{allocate_all, automation_metrics, AllocationPlan, AutomationMetrics};
use crate::balance::{
    balance_line, branch_and_bound, min_stations, oracle_min_stations, takt, takt_exact,
    verify_line_plan, BalanceError, LinePlan, ORACLE_MAX_TASKS,
};
use crate::model::{parse_dataset, Dataset, ModelError, Resource, ShiftConfig};
use crate::safety::{
    allowed_speed, protective_distance, safety_checklist, SafetyChecklist, SafetyConfig, Zone,
};
use crate::scenarios::{
    batch_run, economics, feasible_fraction, generate_variants, rows_to_csv, CostConfig,
    VariantRule,
};
use crate::simulate::{
    replications_to_csv, run_replications, run_sim, trace_to_csv, Aggregate, Changeover, Charging,
    FailureModel, SimConfig, TimeModel,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INTERNAL: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_INFEASIBLE: i32 = 3;

/// Wall-clock budget for the full-instance branch-and-bound in `--verify`.
const VERIFY_BUDGET: Duration = Duration::from_secs(60);

#[derive(Debug, Parser)]
#[command(name = "hhc", version, about = "Human-humanoid assembly cell planner")]
pub struct Cli {
    /// Worker threads for replications and scenario batches.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Pin the manifest timestamp (UTC seconds) for reproducible artifacts.
    #[arg(long, global = true)]
    pub timestamp: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse and validate a dataset.
    Validate { dataset: PathBuf },
    /// Allocate tasks to robot or human.
    Allocate {
        dataset: PathBuf,
        /// JSON artifact with allocation and metrics.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Per-task CSV `task_id,assignment,failed_criteria`.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Balance the line against takt time.
    Balance {
        dataset: PathBuf,
        /// Override the takt derived from the shift.
        #[arg(long)]
        takt: Option<u64>,
        /// Attach the station safety checklist.
        #[arg(long)]
        with_safety: bool,
        /// Check the plan and its optimality with the exact search.
        #[arg(long)]
        verify: bool,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Station CSV `station,resource,tasks,load_s,idle_s`.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Simulate the balanced line.
    Simulate {
        dataset: PathBuf,
        #[command(flatten)]
        sim: SimArgs,
        /// Event trace of replication 0, columns `t_s,station,event,unit_id`.
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// One CSV row per replication.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Generate product variants and run the pipeline on each.
    Scenarios {
        dataset: PathBuf,
        #[arg(long, default_value_t = 50)]
        n: usize,
        /// Variant rule JSON; its seed is replaced by `--seed`.
        #[arg(long)]
        rule: Option<PathBuf>,
        #[command(flatten)]
        sim: SimArgs,
        /// Scenario table CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Cost model on a deterministic run of the line.
    Economics {
        dataset: PathBuf,
        /// Cost JSON; defaults apply to missing fields.
        #[arg(long)]
        cost: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Full pipeline report as one JSON document.
    Report {
        dataset: PathBuf,
        #[command(flatten)]
        sim: SimArgs,
        #[arg(long)]
        cost: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Speed governor calculator.
    SafetySpeed {
        #[arg(long)]
        distance_mm: f64,
        #[arg(long, value_enum, default_value_t = ZoneArg::Open)]
        zone: ZoneArg,
        /// Human approach speed; defaults to the config value.
        #[arg(long)]
        v_h_mm_s: Option<f64>,
        /// Safety config JSON.
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ZoneArg {
    Open,
    Collaborative,
}

impl From<ZoneArg> for Zone {
    fn from(z: ZoneArg) -> Zone {
        match z {
            ZoneArg::Open => Zone::Open,
            ZoneArg::Collaborative => Zone::Collaborative,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct SimArgs {
    /// Seed for every random stream.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub reps: Option<u32>,
    /// Shift length; defaults to the dataset shift.
    #[arg(long)]
    pub shift_s: Option<u64>,
    /// Inter-station buffer size, or `inf`.
    #[arg(long)]
    pub buffer: Option<String>,
    /// Base simulation config JSON; flags override it.
    #[arg(long)]
    pub sim_config: Option<PathBuf>,
    /// Coefficient of variation for truncated-normal task times.
    #[arg(long)]
    pub cv: Option<f64>,
    #[arg(long)]
    pub mttf: Option<f64>,
    #[arg(long)]
    pub mttr: Option<f64>,
    /// Enable humanoid charging using the dataset's charge fields.
    #[arg(long)]
    pub charging: bool,
    #[arg(long)]
    pub changeover_batch: Option<u32>,
    #[arg(long)]
    pub changeover_s: Option<f64>,
}

#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn input(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_INPUT,
            message: message.into(),
        }
    }

    fn internal(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_INTERNAL,
            message: message.into(),
        }
    }
}

impl From<ModelError> for Failure {
    fn from(e: ModelError) -> Self {
        Failure::input(e.to_string())
    }
}

impl From<BalanceError> for Failure {
    fn from(e: BalanceError) -> Self {
        let code = match e {
            BalanceError::Infeasible { .. } => EXIT_INFEASIBLE,
            _ => EXIT_INPUT,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

type CliResult<T> = Result<T, Failure>;

/// Provenance block attached to every artifact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    /// SHA-256 of the canonical dataset JSON.
    pub input_digest: String,
    pub seed: u64,
    pub subcommand: String,
    pub timestamp: u64,
}

pub fn dataset_digest(dataset: &Dataset) -> String {
    hex::encode(Sha256::digest(dataset.to_json().as_bytes()))
}

struct Ctx<'a> {
    out: &'a mut (dyn Write + Send),
    timestamp: u64,
}

impl Ctx<'_> {
    fn manifest(&self, dataset: Option<&Dataset>, seed: u64, subcommand: &str) -> RunManifest {
        RunManifest {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            input_digest: dataset.map(dataset_digest).unwrap_or_default(),
            seed,
            subcommand: subcommand.to_string(),
            timestamp: self.timestamp,
        }
    }

    fn say(&mut self, line: impl AsRef<str>) {
        let _ = writeln!(self.out, "{}", line.as_ref());
    }
}

fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    fs::write(path, contents)
        .map_err(|e| Failure::internal(format!("cannot write {}: {e}", path.display())))
}

fn write_json(path: &Path, value: &Value) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).expect("json value serializes");
    text.push('\n');
    write_file(path, &text)
}

/// CSV tables keep their exact headers; the manifest goes next to them.
fn write_csv(path: &Path, contents: &str, manifest: &RunManifest) -> CliResult<()> {
    write_file(path, contents)?;
    let mut side = path.as_os_str().to_owned();
    side.push(".manifest.json");
    write_json(Path::new(&side), &json!(manifest))
}

fn read_text(path: &Path, what: &str) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| {
        Failure::input(format!(
            "cannot read {what} {}: {e} (pass an existing file path)",
            path.display()
        ))
    })
}

fn load_dataset(path: &Path) -> CliResult<Dataset> {
    let text = read_text(path, "dataset")?;
    parse_dataset(&text).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

fn load_json<T: for<'de> Deserialize<'de>>(path: &Path, what: &str) -> CliResult<T> {
    let text = read_text(path, what)?;
    serde_json::from_str(&text)
        .map_err(|e| Failure::input(format!("{}: invalid {what}: {e}", path.display())))
}

/// Parses `argv` (program name first) and runs the command. Summaries go to
/// `out`, diagnostics to `err`.
pub fn dispatch(argv: &[String], out: &mut (dyn Write + Send), err: &mut dyn Write) -> i32 {
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let rendered = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(err, "{rendered}");
            } else {
                let _ = write!(out, "{rendered}");
            }
            return code;
        }
    };
    let timestamp = cli.timestamp.unwrap_or_else(|| {
        SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0)
    });
    let mut ctx = Ctx { out, timestamp };
    let result = match cli.jobs {
        Some(0) => Err(Failure::input("--jobs must be at least 1")),
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| run(cli.command, &mut ctx)),
            Err(e) => Err(Failure::internal(format!("thread pool: {e}"))),
        },
        None => run(cli.command, &mut ctx),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

fn run(command: Command, ctx: &mut Ctx<'_>) -> CliResult<()> {
    match command {
        Command::Validate { dataset } => cmd_validate(&dataset, ctx),
        Command::Allocate { dataset, out, csv } => cmd_allocate(&dataset, out, csv, ctx),
        Command::Balance {
            dataset,
            takt,
            with_safety,
            verify,
            out,
            csv,
        } => cmd_balance(&dataset, takt, with_safety, verify, out, csv, ctx),
        Command::Simulate {
            dataset,
            sim,
            trace,
            out,
            csv,
        } => cmd_simulate(&dataset, &sim, trace, out, csv, ctx),
        Command::Scenarios {
            dataset,
            n,
            rule,
            sim,
            out,
        } => cmd_scenarios(&dataset, n, rule, &sim, out, ctx),
        Command::Economics { dataset, cost, out } => cmd_economics(&dataset, cost, out, ctx),
        Command::Report {
            dataset,
            sim,
            cost,
            out,
        } => cmd_report(&dataset, &sim, cost, out, ctx),
        Command::SafetySpeed {
            distance_mm,
            zone,
            v_h_mm_s,
            config,
        } => cmd_safety_speed(distance_mm, zone.into(), v_h_mm_s, config, ctx),
    }
}

fn cmd_validate(path: &Path, ctx: &mut Ctx<'_>) -> CliResult<()> {
    let d = load_dataset(path)?;
    ctx.say(format!(
        "{}: {} tasks, {} s total processing time",
        d.product.name,
        d.product.tasks.len(),
        d.product.total_time_s()
    ));
    ctx.say(format!(
        "shift {} s, demand {} units, {} resource specs",
        d.shift.duration_s,
        d.shift.demand_units,
        d.resources.len()
    ));
    Ok(())
}

fn cmd_allocate(
    path: &Path,
    out: Option<PathBuf>,
    csv: Option<PathBuf>,
    ctx: &mut Ctx<'_>,
) -> CliResult<()> {
    let d = load_dataset(path)?;
    let plan = allocate_all(&d.product);
    let m = automation_metrics(&plan, &d.product);
    ctx.say(format!(
        "robot {} / human {} tasks; automated {} s ({:.1}%), manual {} s",
        m.robot_tasks,
        m.total_tasks - m.robot_tasks,
        m.automated_time_s,
        100.0 * m.time_share,
        m.manual_time_s
    ));
    let manifest = ctx.manifest(Some(&d), 0, "allocate");
    if let Some(p) = out {
        write_json(
            &p,
            &json!({ "manifest": manifest, "allocation": plan.entries, "metrics": m }),
        )?;
    }
    if let Some(p) = csv {
        write_csv(&p, &plan.to_csv(), &manifest)?;
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
struct Verification {
    structure_ok: bool,
    errors: Vec<String>,
    method: &'static str,
    optimal_stations: Option<u64>,
    proven_optimal: bool,
    heuristic_stations: usize,
}

fn verify(d: &Dataset, plan: &AllocationPlan, line: &LinePlan) -> CliResult<Verification> {
    let errors = verify_line_plan(&d.product, plan, line)
        .err()
        .unwrap_or_default();
    let (method, optimal, proven) = if d.product.tasks.len() <= ORACLE_MAX_TASKS {
        let s = oracle_min_stations(&d.product, plan, line.takt_s)?;
        ("exhaustive", Some(s), true)
    } else {
        let o = branch_and_bound(&d.product, plan, line.takt_s, Some(VERIFY_BUDGET))?;
        ("branch_and_bound", Some(o.stations), o.proven_optimal)
    };
    Ok(Verification {
        structure_ok: errors.is_empty(),
        errors,
        method,
        optimal_stations: optimal,
        proven_optimal: proven,
        heuristic_stations: line.stations.len(),
    })
}

fn plan_for(d: &Dataset, takt_override: Option<u64>) -> CliResult<(AllocationPlan, LinePlan)> {
    let plan = allocate_all(&d.product);
    let takt_s = match takt_override {
        Some(t) => t,
        None => takt(&d.shift)?,
    };
    let line = balance_line(&d.product, &plan, takt_s)?;
    Ok((plan, line))
}

fn cmd_balance(
    path: &Path,
    takt_override: Option<u64>,
    with_safety: bool,
    do_verify: bool,
    out: Option<PathBuf>,
    csv: Option<PathBuf>,
    ctx: &mut Ctx<'_>,
) -> CliResult<()> {
    let d = load_dataset(path)?;
    let (plan, line) = plan_for(&d, takt_override)?;
    ctx.say(format!(
        "takt {} s, {} stations (lower bound {}), idle {} s",
        line.takt_s,
        line.stations.len(),
        min_stations(line.total_time_s, line.takt_s)?,
        line.idle_total_s
    ));
    for s in &line.stations {
        ctx.say(format!(
            "  WS{} {:<5} load {:>4} s idle {:>4} s  tasks {:?}",
            s.index, s.resource, s.load_s, s.idle_s, s.task_ids
        ));
    }
    let mut doc = json!({ "manifest": ctx.manifest(Some(&d), 0, "balance"), "line": line });
    if with_safety {
        doc["safety"] = json!(safety_checklist(&line));
    }
    if do_verify {
        let v = verify(&d, &plan, &line)?;
        ctx.say(format!(
            "verify: structure {}, optimum {} ({}{})",
            if v.structure_ok { "ok" } else { "VIOLATED" },
            v.optimal_stations
                .map_or_else(|| "unknown".to_string(), |n| n.to_string()),
            v.method,
            if v.proven_optimal {
                ""
            } else {
                ", budget exhausted"
            }
        ));
        let bad = !v.structure_ok;
        doc["verification"] = json!(v);
        if bad {
            return Err(Failure::internal("balanced plan failed verification"));
        }
    }
    if let Some(p) = out {
        write_json(&p, &doc)?;
    }
    if let Some(p) = csv {
        write_csv(&p, &line.to_csv(), &ctx.manifest(Some(&d), 0, "balance"))?;
    }
    Ok(())
}

fn sim_config(args: &SimArgs, d: &Dataset) -> CliResult<SimConfig> {
    let mut cfg = match &args.sim_config {
        Some(p) => load_json::<SimConfig>(p, "simulation config")?,
        None => SimConfig {
            shift: d.shift,
            ..Default::default()
        },
    };
    cfg.seed = args.seed;
    if args.sim_config.is_none() || args.shift_s.is_some() {
        cfg.shift = ShiftConfig {
            duration_s: args.shift_s.unwrap_or(d.shift.duration_s),
            demand_units: d.shift.demand_units,
        };
    }
    if let Some(r) = args.reps {
        cfg.replications = r;
    }
    if let Some(b) = &args.buffer {
        cfg.buffer_capacity = if b == "inf" {
            None
        } else {
            Some(b.parse().map_err(|_| {
                Failure::input(format!("--buffer expects a count or `inf`, got `{b}`"))
            })?)
        };
    }
    if let Some(cv) = args.cv {
        cfg.time_model = TimeModel::NormalTruncated { cv };
    }
    match (args.mttf, args.mttr) {
        (Some(mttf_s), Some(mttr_s)) => cfg.failures = Some(FailureModel { mttf_s, mttr_s }),
        (None, None) => {}
        _ => return Err(Failure::input("--mttf and --mttr must be given together")),
    }
    match (args.changeover_batch, args.changeover_s) {
        (Some(batch_size), Some(duration_s)) => {
            cfg.changeover = Some(Changeover {
                batch_size,
                duration_s,
            })
        }
        (None, None) => {}
        _ => {
            return Err(Failure::input(
                "--changeover-batch and --changeover-s must be given together",
            ))
        }
    }
    if args.charging {
        let h = d
            .humanoid()
            .ok_or_else(|| Failure::input("--charging needs a Humanoid resource in the dataset"))?;
        match (h.charge_interval_s, h.charge_duration_s) {
            (Some(interval_s), Some(duration_s)) => {
                cfg.charging = Some(Charging {
                    interval_s,
                    duration_s,
                })
            }
            _ => {
                return Err(Failure::input(
                    "--charging needs charge_interval_s and charge_duration_s on the Humanoid",
                ))
            }
        }
    }
    cfg.validate().map_err(|e| Failure::input(e.to_string()))?;
    Ok(cfg)
}

fn simulate_line(
    d: &Dataset,
    line: &LinePlan,
    cfg: &SimConfig,
) -> CliResult<(Aggregate, Vec<crate::simulate::SimResult>)> {
    run_replications(&d.product, line, cfg).map_err(|e| Failure::input(e.to_string()))
}

fn cmd_simulate(
    path: &Path,
    args: &SimArgs,
    trace: Option<PathBuf>,
    out: Option<PathBuf>,
    csv: Option<PathBuf>,
    ctx: &mut Ctx<'_>,
) -> CliResult<()> {
    let d = load_dataset(path)?;
    let cfg = sim_config(args, &d)?;
    let (_, line) = plan_for(&d, None)?;
    let (agg, runs) = simulate_line(&d, &line, &cfg)?;
    ctx.say(format!(
        "{} replications: completed units mean {:.2}{}, demand {}",
        agg.replications,
        agg.completed_units.mean,
        agg.completed_units
            .stddev
            .map(|s| format!(" (sd {s:.2})"))
            .unwrap_or_default(),
        cfg.shift.demand_units
    ));
    let manifest = ctx.manifest(Some(&d), cfg.seed, "simulate");
    if let Some(p) = trace {
        let traced = SimConfig {
            record_trace: true,
            ..cfg.clone()
        };
        let r =
            run_sim(&d.product, &line, &traced, 0).map_err(|e| Failure::input(e.to_string()))?;
        write_csv(&p, &trace_to_csv(&r.trace), &manifest)?;
    }
    if let Some(p) = out {
        write_json(
            &p,
            &json!({ "manifest": manifest, "config": cfg, "aggregate": agg, "replications": runs }),
        )?;
    }
    if let Some(p) = csv {
        write_csv(&p, &replications_to_csv(&runs), &manifest)?;
    }
    Ok(())
}

fn cmd_scenarios(
    path: &Path,
    n: usize,
    rule: Option<PathBuf>,
    args: &SimArgs,
    out: Option<PathBuf>,
    ctx: &mut Ctx<'_>,
) -> CliResult<()> {
    let d = load_dataset(path)?;
    let mut rule = match rule {
        Some(p) => load_json::<VariantRule>(&p, "variant rule")?,
        None => VariantRule::default(),
    };
    rule.seed = args.seed;
    let cfg = sim_config(args, &d)?;
    let variants = generate_variants(&d, n, &rule).map_err(|e| Failure::input(e.to_string()))?;
    let rows = batch_run(&variants, &cfg.shift, &cfg);
    ctx.say(format!(
        "{} variants, {:.0}% feasible",
        rows.len(),
        100.0 * feasible_fraction(&rows)
    ));
    if let Some(p) = out {
        write_csv(
            &p,
            &rows_to_csv(&rows),
            &ctx.manifest(Some(&d), args.seed, "scenarios"),
        )?;
    }
    Ok(())
}

fn load_cost(path: Option<PathBuf>) -> CliResult<CostConfig> {
    let cost = match path {
        Some(p) => load_json::<CostConfig>(&p, "cost config")?,
        None => CostConfig::default(),
    };
    cost.validate().map_err(|e| Failure::input(e.to_string()))?;
    Ok(cost)
}

fn cmd_economics(
    path: &Path,
    cost: Option<PathBuf>,
    out: Option<PathBuf>,
    ctx: &mut Ctx<'_>,
) -> CliResult<()> {
    let d = load_dataset(path)?;
    let cost = load_cost(cost)?;
    let (plan, line) = plan_for(&d, None)?;
    let metrics = automation_metrics(&plan, &d.product);
    let cfg = SimConfig {
        shift: d.shift,
        ..Default::default()
    };
    let r = run_sim(&d.product, &line, &cfg, 0).map_err(|e| Failure::input(e.to_string()))?;
    let e = economics(r.completed_units as f64, &metrics, &d.shift, &cost);
    ctx.say(format!(
        "labor saved {:.0} s/shift, annual saving {:.2}, payback {}",
        e.labor_s_saved_per_shift,
        e.annual_saving,
        e.payback_years
            .map(|y| format!("{y:.2} years"))
            .unwrap_or_else(|| "never".into())
    ));
    if let Some(p) = out {
        write_json(
            &p,
            &json!({
                "manifest": ctx.manifest(Some(&d), 0, "economics"),
                "completed_units": r.completed_units,
                "cost": cost,
                "economics": e,
            }),
        )?;
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
struct Discrepancy {
    metric: String,
    reference: Value,
    computed: Value,
}

fn discrepancies(
    d: &Dataset,
    plan: &AllocationPlan,
    metrics: &AutomationMetrics,
    line: &LinePlan,
) -> Vec<Discrepancy> {
    let Some(r) = &d.reference else {
        return Vec::new();
    };
    let mut out = Vec::new();
    let mut check = |metric: &str, reference: Value, computed: Value| {
        if reference != computed {
            out.push(Discrepancy {
                metric: metric.into(),
                reference,
                computed,
            });
        }
    };
    if let Some(t) = r.takt_s {
        check("takt_s", json!(t), json!(line.takt_s));
    }
    if let Some(s) = r.stations {
        check("stations", json!(s), json!(line.stations.len()));
    }
    if let Some(t) = r.automated_time_s {
        check(
            "automated_time_s",
            json!(t),
            json!(metrics.automated_time_s),
        );
    }
    let share = |x: f64| json!((x * 1000.0).round() / 1000.0);
    if let Some(s) = r.task_share {
        check("task_share", share(s), share(metrics.task_share));
    }
    if let Some(s) = r.automatable_task_share {
        check(
            "automatable_task_share",
            share(s),
            share(metrics.task_share),
        );
    }
    for (id, published) in &r.assignments {
        if let Some(computed) = plan.resource_of(*id) {
            if computed != *published {
                check(
                    &format!("assignment.{id}"),
                    json!(published),
                    json!(computed),
                );
            }
        }
    }
    out
}

/// Builds the report document. The manifest sits under `manifest`.
fn build_report(
    d: &Dataset,
    cfg: &SimConfig,
    cost: &CostConfig,
    manifest: &RunManifest,
) -> CliResult<Value> {
    let (plan, line) = plan_for(d, None)?;
    let metrics = automation_metrics(&plan, &d.product);
    let checklist: SafetyChecklist = safety_checklist(&line);
    let verification = verify(d, &plan, &line)?;
    let (agg, _) = simulate_line(d, &line, cfg)?;
    let safety_cfg = SafetyConfig::default();
    let econ = economics(agg.completed_units.mean, &metrics, &cfg.shift, cost);
    let throughput = agg.completed_units.mean;
    Ok(json!({
        "manifest": manifest,
        "dataset": {
            "name": d.product.name,
            "tasks": d.product.tasks.len(),
            "total_time_s": d.product.total_time_s(),
        },
        "allocation": {
            "entries": plan.entries,
            "metrics": metrics,
            "robot_tasks": plan.count(Resource::Robot),
            "human_tasks": plan.count(Resource::Human),
        },
        "takt": {
            "takt_s": line.takt_s,
            "takt_exact_s": (takt_exact(&d.shift) * 10.0).round() / 10.0,
            "min_stations": min_stations(line.total_time_s, line.takt_s)?,
            "demand_units": d.shift.demand_units,
        },
        "line": line,
        "verification": verification,
        "safety": {
            "config": safety_cfg,
            "checklist": checklist,
            "collaborative_speed_cap_mm_s": safety_cfg.v_collab_cap_mm_s,
            "protective_distance_at_cap_mm":
                protective_distance(safety_cfg.v_collab_cap_mm_s, safety_cfg.v_h_mm_s, &safety_cfg),
        },
        "simulation": {
            "config": cfg,
            "aggregate": agg,
        },
        "takt_compliance": {
            "demand_units": d.shift.demand_units,
            "mean_completed_units": throughput,
            "compliant": throughput >= d.shift.demand_units as f64,
        },
        "economics": {
            "cost": cost,
            "result": econ,
        },
        "discrepancies": discrepancies(d, &plan, &metrics, &line),
    }))
}

fn cmd_report(
    path: &Path,
    args: &SimArgs,
    cost: Option<PathBuf>,
    out: Option<PathBuf>,
    ctx: &mut Ctx<'_>,
) -> CliResult<()> {
    let d = load_dataset(path)?;
    let cfg = sim_config(args, &d)?;
    let cost = load_cost(cost)?;
    let manifest = ctx.manifest(Some(&d), cfg.seed, "report");
    let doc = build_report(&d, &cfg, &cost, &manifest)?;
    ctx.say(format!(
        "{}: takt {} s, {} stations, automated {} s, mean output {:.2} units/shift, {} discrepancies",
        d.product.name,
        doc["takt"]["takt_s"],
        doc["line"]["stations"].as_array().map_or(0, |a| a.len()),
        doc["allocation"]["metrics"]["automated_time_s"],
        doc["simulation"]["aggregate"]["completed_units"]["mean"]
            .as_f64()
            .unwrap_or(0.0),
        doc["discrepancies"].as_array().map_or(0, |a| a.len()),
    ));
    if let Some(p) = out {
        write_json(&p, &doc)?;
    }
    Ok(())
}

fn cmd_safety_speed(
    distance_mm: f64,
    zone: Zone,
    v_h: Option<f64>,
    config: Option<PathBuf>,
    ctx: &mut Ctx<'_>,
) -> CliResult<()> {
    let cfg = match config {
        Some(p) => load_json::<SafetyConfig>(&p, "safety config")?,
        None => SafetyConfig::default(),
    };
    cfg.validate().map_err(|e| Failure::input(e.to_string()))?;
    if !(distance_mm.is_finite() && distance_mm >= 0.0) {
        return Err(Failure::input(
            "--distance-mm must be a non-negative number",
        ));
    }
    let v_h = v_h.unwrap_or(cfg.v_h_mm_s);
    let v = allowed_speed(distance_mm, v_h, &cfg, zone);
    let stop = protective_distance(0.0, v_h, &cfg);
    ctx.say(format!(
        "allowed speed {v:.0} mm/s at {distance_mm} mm ({}); monitored stop below {stop:.1} mm",
        match zone {
            Zone::Open => "open zone",
            Zone::Collaborative => "collaborative zone",
        }
    ));
    Ok(())
}
