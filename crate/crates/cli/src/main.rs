use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use mms_core::bench::{
    gen_arena, render_svg, run_benchmarks, ArenaFamily, ArenaParams, BenchConfig, Overlay, RrtParams,
};
use mms_core::ccm::{compile, parse_machine, simulate_induced, InducedError};
use mms_core::cellcover2d::{build_cover, channel_decide};
use mms_core::geometry::polygon_vertices;
use mms_core::hop::{verify_run, ViolationTarget};
use mms_core::model::{instance_to_json, load_instance, load_plan, save_plan, simulate};
use mms_core::numeric::{format_rational, parse_rational, Rational};
use mms_core::planner::{plan, Backend, PlanOutcome, SamplingConfig, SmtConfig};
use mms_core::Instance;

const DEFAULT_SMT: &str = "z3 -in";

#[derive(Parser)]
#[command(name = "mms", version, about = "Reach-avoid planning for constant-rate multi-mode systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Search for a plan with increasing waypoint count up to a bound.
    Plan(PlanArgs),
    /// Re-check a plan against an instance exactly.
    Verify(VerifyArgs),
    /// Build the 2-D cell cover and report the bound it yields.
    Cover(CoverArgs),
    /// Generate a benchmark arena.
    Gen(GenArgs),
    /// Run the planner and the RRT baseline over benchmark arenas.
    Bench(BenchArgs),
    /// Two-counter machine reduction.
    Ccm {
        #[command(subcommand)]
        command: CcmCommand,
    },
    /// Draw a 2-D instance, optionally with a plan, as SVG.
    Render(RenderArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BackendKind {
    Smt,
    Sampling,
}

#[derive(Args)]
struct SolverArgs {
    /// Solver command line reading SMT-LIB from stdin.
    #[arg(long, env = "MMS_SMT_CMD")]
    smt_cmd: Option<String>,
    /// Per-query solver timeout in seconds.
    #[arg(long, default_value_t = 60)]
    timeout: u64,
}

impl SolverArgs {
    fn config(&self) -> SmtConfig {
        let mut cfg = SmtConfig::from_template(self.smt_cmd.as_deref().unwrap_or(DEFAULT_SMT));
        cfg.timeout = Duration::from_secs(self.timeout);
        cfg
    }
}

#[derive(Args)]
struct PlanArgs {
    #[arg(long)]
    instance: PathBuf,
    /// Largest number of intermediate waypoints; defaults to the cell cover in 2-D.
    #[arg(long)]
    max_bound: Option<usize>,
    #[arg(long, value_enum, default_value = "smt")]
    backend: BackendKind,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Samples per depth for the sampling backend.
    #[arg(long, default_value_t = 10_000)]
    budget: usize,
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    instance: PathBuf,
    /// Plan JSON, as written by `plan --output`.
    #[arg(long)]
    plan: PathBuf,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct CoverArgs {
    #[arg(long)]
    instance: PathBuf,
    /// Include the cell polygons in the JSON output.
    #[arg(long)]
    cells: bool,
    /// Also run the channel decision procedure.
    #[arg(long)]
    decide: bool,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct ArenaArgs {
    #[arg(long, default_value = "lshaped")]
    family: String,
    #[arg(long, default_value_t = 2)]
    dim: usize,
    /// Longest workspace side; a per-family default when omitted.
    #[arg(long)]
    size: Option<String>,
    /// Snake walls or maze C's.
    #[arg(long)]
    obstacles: Option<usize>,
}

fn default_size(f: ArenaFamily) -> Rational {
    let v = match f {
        ArenaFamily::Snake => 350,
        ArenaFamily::Maze => 600,
        _ => 100,
    };
    Rational::from_integer(v.into())
}

impl ArenaArgs {
    fn params(&self, family: &str) -> Result<ArenaParams> {
        let f: ArenaFamily = family.parse()?;
        let size = match &self.size {
            Some(s) => parse_rational(s).map_err(|e| anyhow!("--size: {e}"))?,
            None => default_size(f),
        };
        let mut p = ArenaParams::new(f, self.dim, size);
        if let Some(n) = self.obstacles {
            p = p.with_obstacles(n);
        }
        Ok(p)
    }
}

#[derive(Args)]
struct GenArgs {
    #[command(flatten)]
    arena: ArenaArgs,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// Families to run (repeatable); the standard 2-D set when omitted.
    #[arg(long)]
    family: Vec<String>,
    #[arg(long, default_value_t = 2)]
    dim: usize,
    #[arg(long)]
    size: Option<String>,
    #[arg(long)]
    obstacles: Option<usize>,
    /// Fixed bound instead of the cell cover.
    #[arg(long)]
    max_bound: Option<usize>,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// RRT iteration cap.
    #[arg(long, default_value_t = 20_000)]
    budget: usize,
    #[arg(long)]
    no_rrt: bool,
    #[arg(long)]
    no_planner: bool,
    /// CSV destination.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum CcmCommand {
    /// Emit the compiled system and its safety clauses as JSON.
    Compile {
        machine: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Simulate the induced run and print the lemma report.
    Run {
        machine: PathBuf,
        #[arg(long, default_value_t = 100)]
        steps: usize,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RenderArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long)]
    plan: Option<PathBuf>,
    /// Destination; stdout when omitted.
    #[arg(long)]
    svg: Option<PathBuf>,
}

/// Exit 1: the question was asked properly but not answered positively.
struct Negative;

fn read_json(path: &Path) -> Result<Value> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn read_instance(path: &Path) -> Result<Instance> {
    load_instance(&read_json(path)?).with_context(|| format!("loading {}", path.display()))
}

fn write_out(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn write_json(path: &Path, v: &Value) -> Result<()> {
    write_out(path, &format!("{}\n", serde_json::to_string_pretty(v)?))
}

fn emit(output: &Option<PathBuf>, v: &Value) -> Result<()> {
    match output {
        Some(p) => write_json(p, v),
        None => {
            // A closed pipe (e.g. `| head`) is not an error.
            let _ = writeln!(std::io::stdout(), "{}", serde_json::to_string_pretty(v)?);
            Ok(())
        }
    }
}

fn cmd_plan(a: &PlanArgs) -> Result<Option<Negative>> {
    let inst = read_instance(&a.instance)?;
    let bound = match a.max_bound {
        Some(b) => b,
        None if inst.dimension() == 2 => {
            let cover = build_cover(&inst).context("building the cell cover")?;
            eprintln!("bound from cell cover: {}", cover.bound());
            cover.bound()
        }
        None => bail!(
            "--max-bound is required for dimension {} (the cell cover is 2-D only)",
            inst.dimension()
        ),
    };
    let backend = match a.backend {
        BackendKind::Smt => Backend::Smt(a.solver.config()),
        BackendKind::Sampling => Backend::Sampling(SamplingConfig {
            budget: a.budget,
            seed: a.seed,
        }),
    };
    let outcome = plan(&inst, bound, &backend);
    for d in outcome.trace() {
        println!("k={} {} ({:.3}s)", d.k, d.verdict, d.elapsed.as_secs_f64());
    }
    let trace: Vec<Value> = outcome
        .trace()
        .iter()
        .map(|d| json!({"k": d.k, "verdict": d.verdict, "elapsed_s": d.elapsed.as_secs_f64()}))
        .collect();
    let (doc, negative) = match &outcome {
        PlanOutcome::Planned {
            plan, witness_length, ..
        } => {
            println!(
                "planned: witness length {witness_length}, {} actions, verified",
                plan.schedule.len()
            );
            if let Some(svg) = &a.svg {
                write_out(svg, &render_svg(&inst, Overlay::Plan(plan))?)?;
            }
            (
                json!({"outcome": "planned", "bound": bound, "witness_length": witness_length,
                       "trace": trace, "plan": save_plan(plan)}),
                false,
            )
        }
        PlanOutcome::Unreachable { bound, .. } => {
            println!("unreachable: every depth up to {bound} is unsat");
            (json!({"outcome": "unreachable", "bound": bound, "trace": trace}), false)
        }
        PlanOutcome::Exhausted { bound, .. } => {
            println!("exhausted: no plan up to {bound}, some depths undecided");
            (json!({"outcome": "exhausted", "bound": bound, "trace": trace}), true)
        }
    };
    if let Some(p) = &a.output {
        write_json(p, &doc)?;
    }
    Ok(negative.then_some(Negative))
}

fn cmd_verify(a: &VerifyArgs) -> Result<Option<Negative>> {
    let inst = read_instance(&a.instance)?;
    let doc = read_json(&a.plan)?;
    let plan = load_plan(doc.get("plan").unwrap_or(&doc)).context("loading plan")?;
    let run = simulate(&inst.mms, &inst.start, &plan.schedule)?;
    let reaches = run.terminal() == &inst.target;
    let report = verify_run(&inst, &run);
    let mut problems: Vec<String> = report
        .violations
        .iter()
        .map(|v| {
            let what = match v.target {
                ViolationTarget::Obstacle(j) => format!("obstacle {j}"),
                ViolationTarget::Workspace => "workspace boundary".into(),
            };
            format!("segment {} meets {what} at lambda = {}", v.segment, format_rational(&v.lambda))
        })
        .collect();
    if !reaches {
        let t: Vec<String> = run.terminal().iter().map(format_rational).collect();
        problems.push(format!("terminal state ({}) is not the target", t.join(", ")));
    }
    const SHOWN: usize = 10;
    for p in problems.iter().take(SHOWN) {
        println!("violation: {p}");
    }
    if problems.len() > SHOWN {
        println!("... and {} more", problems.len() - SHOWN);
    }
    let ok = problems.is_empty();
    println!("{}", if ok { "ok" } else { "FAILED" });
    if let Some(o) = &a.output {
        write_json(o, &json!({"ok": ok, "violations": problems}))?;
    }
    Ok((!ok).then_some(Negative))
}

fn cmd_cover(a: &CoverArgs) -> Result<Option<Negative>> {
    let inst = read_instance(&a.instance)?;
    let cover = build_cover(&inst)?;
    println!("B = {} ({} cells)", cover.bound(), cover.cells.len());
    let mut doc = json!({"bound": cover.bound(), "cells": cover.cells.len()});
    if a.decide {
        let v = channel_decide(&inst, &cover);
        match v.witness_length() {
            Some(n) => println!("channel: reachable, witness length {n}"),
            None => println!("channel: unreachable"),
        }
        doc["reachable"] = json!(v.is_reachable());
        doc["witness_length"] = json!(v.witness_length());
    }
    if a.cells {
        let polys: Vec<Value> = cover
            .cells
            .iter()
            .map(|c| {
                let pts: Vec<Value> = polygon_vertices(&c.polygon)
                    .iter()
                    .map(|p| json!(p.iter().map(format_rational).collect::<Vec<_>>()))
                    .collect();
                json!({"id": c.id, "vertices": pts, "adjacent": cover.adjacency[c.id]})
            })
            .collect();
        doc["polygons"] = Value::Array(polys);
        if a.output.is_none() {
            println!("{}", serde_json::to_string_pretty(&doc)?);
        }
    }
    if let Some(o) = &a.output {
        write_json(o, &doc)?;
    }
    Ok(None)
}

fn cmd_gen(a: &GenArgs) -> Result<Option<Negative>> {
    let inst = gen_arena(&a.arena.params(&a.arena.family)?)?;
    emit(&a.output, &instance_to_json(&inst))?;
    Ok(None)
}

fn cmd_bench(a: &BenchArgs) -> Result<Option<Negative>> {
    let arena = |family: &str, obstacles: Option<usize>| {
        ArenaArgs {
            family: family.into(),
            dim: a.dim,
            size: a.size.clone(),
            obstacles: a.obstacles.or(obstacles),
        }
        .params(family)
    };
    let cases = if a.family.is_empty() {
        vec![
            arena("lshaped", None)?,
            arena("snake", Some(3))?,
            arena("snake", Some(4))?,
            arena("maze", Some(2))?,
            arena("modified-l", None)?,
            arena("unreachable-l", None)?,
        ]
    } else {
        a.family.iter().map(|f| arena(f, None)).collect::<Result<_>>()?
    };
    let mut cfg = BenchConfig::new(cases);
    cfg.timeout = Duration::from_secs(a.solver.timeout);
    cfg.max_bound = a.max_bound;
    if !a.no_planner {
        cfg.smt = Some(a.solver.config());
    }
    if !a.no_rrt {
        cfg.rrt = Some(RrtParams {
            step: Rational::from_integer(0.into()),
            max_iters: a.budget,
            seed: a.seed,
            ..RrtParams::default()
        });
    }
    let report = run_benchmarks(&cfg);
    print!("{}", report.to_text());
    if let Some(o) = &a.output {
        write_out(o, &report.to_csv())?;
    }
    Ok(None)
}

fn cmd_ccm(c: &CcmCommand) -> Result<Option<Negative>> {
    let load = |p: &Path| -> Result<_> {
        let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
        Ok(parse_machine(&text)?)
    };
    match c {
        CcmCommand::Compile { machine, output } => {
            let sys = compile(&load(machine)?);
            emit(output, &sys.to_json())?;
            Ok(None)
        }
        CcmCommand::Run {
            machine,
            steps,
            output,
        } => {
            let m = load(machine)?;
            let sys = compile(&m);
            let out = match simulate_induced(&sys, &m, *steps) {
                Ok(o) => o,
                Err(e @ InducedError::NominalUnsafe { .. }) => {
                    println!("{e}");
                    return Ok(Some(Negative));
                }
                Err(e) => return Err(e.into()),
            };
            let modes = out.modes();
            println!("modes ({}): {}", modes.len(), modes.join(" "));
            for (i, cfg) in out.machine.configs.iter().enumerate() {
                println!("config {i}: l{} c1={} c2={}", cfg.pc, cfg.counters[0], cfg.counters[1]);
            }
            for s in &out.machine.clamped {
                println!("warning: step {s} decremented a zero counter (clamped)");
            }
            println!(
                "halted: {}, target reached: {}, bisimulation: {}",
                out.halted,
                out.reached_target,
                if out.mismatches.is_empty() { "ok" } else { "MISMATCH" }
            );
            for mm in &out.mismatches {
                println!("  {mm}");
            }
            let probes: Vec<_> = out.report.probes().collect();
            let accepted = out.report.accepted();
            let used: Vec<String> = out.report.clauses_used().iter().map(|p| p.to_string()).collect();
            println!(
                "lemma report: {} probes, {} rejected; clauses used: {}",
                probes.len(),
                probes.len() - accepted.len(),
                used.join(", ")
            );
            for (step, p) in &accepted {
                println!("  step {step}: {p}");
            }
            if let Some(o) = output {
                let steps: Vec<Value> = out
                    .report
                    .steps
                    .iter()
                    .map(|s| {
                        let pr = |ps: &[mms_core::ccm::Probe]| -> Vec<Value> {
                            ps.iter()
                                .map(|p| json!({"label": p.label, "rejected": p.rejected(),
                                    "clauses": p.rejected_by.iter().map(|c| format!("phi_{}", c.letter())).collect::<Vec<_>>(),
                                    "escapes": p.escapes}))
                                .collect()
                        };
                        json!({"step": s.step, "mode": s.mode, "durations": pr(&s.durations), "successors": pr(&s.successors)})
                    })
                    .collect();
                write_json(
                    o,
                    &json!({"modes": modes, "halted": out.halted, "reached_target": out.reached_target,
                            "mismatches": out.mismatches, "all_rejected": out.report.all_rejected(),
                            "steps": steps}),
                )?;
            }
            Ok(None)
        }
    }
}

fn cmd_render(a: &RenderArgs) -> Result<Option<Negative>> {
    let inst = read_instance(&a.instance)?;
    let plan = match &a.plan {
        Some(p) => {
            let doc = read_json(p)?;
            Some(load_plan(doc.get("plan").unwrap_or(&doc))?)
        }
        None => None,
    };
    let overlay = plan.as_ref().map_or(Overlay::None, Overlay::Plan);
    let svg = render_svg(&inst, overlay)?;
    match &a.svg {
        Some(p) => write_out(p, &svg)?,
        None => print!("{svg}"),
    }
    Ok(None)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Plan(a) => cmd_plan(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Cover(a) => cmd_cover(a),
        Command::Gen(a) => cmd_gen(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Ccm { command } => cmd_ccm(command),
        Command::Render(a) => cmd_render(a),
    };
    match result {
        Ok(None) => ExitCode::SUCCESS,
        Ok(Some(Negative)) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
