use std::fmt::{self, Write as _};
use std::time::{Duration, Instant};

use super::arena::{gen_arena, ArenaFamily, ArenaParams};
use super::rrt::{path_to_plan, rrt_plan, RrtParams};
use crate::cellcover2d::build_cover;
use crate::numeric::{format_rational, Rational};
use crate::planner::{plan, Backend, PlanOutcome, SmtConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Method {
    Planner,
    Rrt,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Planner => "planner",
            Method::Rrt => "rrt",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    Planned,
    Unreachable,
    /// Bound reached with some depth undecided.
    Exhausted,
    Timeout,
    Error(String),
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Outcome::Planned => f.write_str("planned"),
            Outcome::Unreachable => f.write_str("unreachable"),
            Outcome::Exhausted => f.write_str("exhausted"),
            Outcome::Timeout => f.write_str("TO"),
            Outcome::Error(e) => write!(f, "error: {e}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub family: ArenaFamily,
    pub dim: usize,
    pub size: Rational,
    pub method: Method,
    pub outcome: Outcome,
    pub witness_length: Option<usize>,
    /// Tree size for RRT, bound for the planner.
    pub nodes: Option<usize>,
    pub time_s: f64,
    /// Whether the produced trajectory passed exact verification.
    pub verified: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
}

fn opt(v: Option<usize>) -> String {
    v.map_or_else(|| "-".into(), |v| v.to_string())
}

impl BenchReport {
    pub const CSV_HEADER: &'static str = "family,dim,size,method,outcome,witness_length,nodes,time_s";

    pub fn to_csv(&self) -> String {
        let mut s = format!("{}\n", Self::CSV_HEADER);
        for r in &self.rows {
            let outcome = match &r.outcome {
                Outcome::Error(_) => "error".to_string(),
                o => o.to_string(),
            };
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{:.3}",
                r.family,
                r.dim,
                format_rational(&r.size),
                r.method,
                outcome,
                r.witness_length.map_or(String::new(), |v| v.to_string()),
                r.nodes.map_or(String::new(), |v| v.to_string()),
                r.time_s
            );
        }
        s
    }

    pub fn to_text(&self) -> String {
        let mut s = format!(
            "{:<14} {:>3} {:>6} {:<8} {:<12} {:>7} {:>7} {:>9}\n",
            "family", "dim", "size", "method", "outcome", "witness", "nodes", "time(s)"
        );
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{:<14} {:>3} {:>6} {:<8} {:<12} {:>7} {:>7} {:>9.3}",
                r.family.to_string(),
                r.dim,
                format_rational(&r.size),
                r.method.to_string(),
                r.outcome.to_string(),
                opt(r.witness_length),
                opt(r.nodes),
                r.time_s
            );
        }
        s
    }
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub cases: Vec<ArenaParams>,
    /// `None` skips the planner rows.
    pub smt: Option<SmtConfig>,
    /// Fixed bound; otherwise the cell cover in 2-D and `default_bound` above.
    pub max_bound: Option<usize>,
    pub default_bound: usize,
    /// `None` skips the RRT rows. A step of zero is replaced by 1/50 of the
    /// longest workspace side.
    pub rrt: Option<RrtParams>,
    /// Per-row wall-clock limit.
    pub timeout: Duration,
}

impl BenchConfig {
    pub fn new(cases: Vec<ArenaParams>) -> Self {
        Self {
            cases,
            smt: None,
            max_bound: None,
            default_bound: 8,
            rrt: None,
            timeout: Duration::from_secs(60),
        }
    }
}

fn planner_row(params: &ArenaParams, cfg: &BenchConfig, smt: &SmtConfig) -> BenchRow {
    let t0 = Instant::now();
    let mut row = BenchRow {
        family: params.family,
        dim: params.dimension,
        size: params.size.clone(),
        method: Method::Planner,
        outcome: Outcome::Exhausted,
        witness_length: None,
        nodes: None,
        time_s: 0.0,
        verified: false,
    };
    let inst = match gen_arena(params) {
        Ok(i) => i,
        Err(e) => {
            row.outcome = Outcome::Error(e.to_string());
            return row;
        }
    };
    let bound = match cfg.max_bound {
        Some(b) => b,
        None if inst.dimension() == 2 => match build_cover(&inst) {
            Ok(c) => c.bound(),
            Err(e) => {
                row.outcome = Outcome::Error(e.to_string());
                return row;
            }
        },
        None => cfg.default_bound,
    };
    row.nodes = Some(bound);
    let mut smt = smt.clone();
    smt.timeout = smt.timeout.min(cfg.timeout);
    let outcome = plan(&inst, bound, &Backend::Smt(smt));
    row.outcome = match &outcome {
        PlanOutcome::Planned {
            plan, witness_length, ..
        } => {
            row.witness_length = Some(*witness_length);
            row.verified = plan.verified;
            Outcome::Planned
        }
        PlanOutcome::Unreachable { .. } => Outcome::Unreachable,
        PlanOutcome::Exhausted { trace, .. } => {
            if trace.iter().any(|d| d.verdict.contains("timeout")) {
                Outcome::Timeout
            } else {
                Outcome::Exhausted
            }
        }
    };
    row.time_s = t0.elapsed().as_secs_f64();
    row
}

fn rrt_row(params: &ArenaParams, cfg: &BenchConfig, rrt: &RrtParams) -> BenchRow {
    let t0 = Instant::now();
    let mut row = BenchRow {
        family: params.family,
        dim: params.dimension,
        size: params.size.clone(),
        method: Method::Rrt,
        outcome: Outcome::Timeout,
        witness_length: None,
        nodes: None,
        time_s: 0.0,
        verified: false,
    };
    let inst = match gen_arena(params) {
        Ok(i) => i,
        Err(e) => {
            row.outcome = Outcome::Error(e.to_string());
            return row;
        }
    };
    let mut p = rrt.clone();
    if num_traits::Zero::is_zero(&p.step) {
        p.step = RrtParams::scaled_to(&inst, 50).step;
    }
    p.time_limit = Some(p.time_limit.map_or(cfg.timeout, |t| t.min(cfg.timeout)));
    let res = rrt_plan(&inst, &p);
    row.nodes = Some(res.nodes);
    if let Some(path) = res.path {
        match path_to_plan(&inst, &path) {
            Ok(plan) => {
                row.outcome = Outcome::Planned;
                row.witness_length = Some(plan.witness_length());
                row.verified = plan.verified;
            }
            Err(e) => row.outcome = Outcome::Error(format!("path failed verification: {e}")),
        }
    }
    row.time_s = t0.elapsed().as_secs_f64();
    row
}

/// Runs every configured method on every case. Rows are sorted by family,
/// dimension, size and method.
pub fn run_benchmarks(cfg: &BenchConfig) -> BenchReport {
    let mut rows = Vec::new();
    for params in &cfg.cases {
        if let Some(smt) = &cfg.smt {
            rows.push(planner_row(params, cfg, smt));
        }
        if let Some(rrt) = &cfg.rrt {
            rows.push(rrt_row(params, cfg, rrt));
        }
    }
    rows.sort_by(|a, b| {
        (a.family, a.dim, &a.size, a.method).cmp(&(b.family, b.dim, &b.size, b.method))
    });
    BenchReport { rows }
}
