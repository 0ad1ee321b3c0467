//! Bounded motion planning: for k = 0, 1, ..., B ask a backend for k
//! intermediate waypoints whose hops are cone-reachable and obstacle-free,
//! then expand the waypoints into a verified schedule.

mod encode;
mod smt;

use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use encode::{encode_bmc, BmcLayout};
pub use smt::{
    eval_value, parse_sexps, parse_solver_output, run_solver_process, ModelValue, ProcessError,
    Sexp, SolverAnswer,
};

use crate::hop::{hop_schedule, reach_cone_times, ConeTimes};
use crate::model::{simulate, HopSpan, Instance, Plan, Point, Schedule};
use crate::numeric::Rational;
use crate::qe::{eval, obstacle_free_formula, QuadFormula};

/// Waypoints `x_0 = x_s, ..., x_{k+1} = x_t` with per-hop mode times.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WaypointWitness {
    pub waypoints: Vec<Point>,
    pub times: Vec<ConeTimes>,
}

impl WaypointWitness {
    pub fn intermediate(&self) -> &[Point] {
        let n = self.waypoints.len();
        &self.waypoints[1..n.saturating_sub(1).max(1)]
    }

    pub fn hops(&self) -> usize {
        self.waypoints.len().saturating_sub(1)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BackendVerdict {
    Sat(WaypointWitness),
    Unsat,
    Unknown(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SmtConfig {
    pub command: Vec<String>,
    pub timeout: Duration,
    /// Rounding tries denominators 10^1 .. 10^max_decimal_digits.
    pub max_decimal_digits: u32,
    /// Replaces the script's `(check-sat)`; solver-specific strategies go here.
    pub check_sat: String,
}

impl SmtConfig {
    /// Z3's default nonlinear strategy spends a long fixed budget in nlsat
    /// before falling back; its `smt` tactic answers these queries directly.
    pub fn new(command: Vec<String>) -> Self {
        let is_z3 = command
            .first()
            .and_then(|p| std::path::Path::new(p).file_name())
            .is_some_and(|f| f.to_string_lossy().starts_with("z3"));
        Self {
            command,
            timeout: Duration::from_secs(60),
            max_decimal_digits: 18,
            check_sat: if is_z3 { "(check-sat-using smt)" } else { "(check-sat)" }.into(),
        }
    }

    /// Splits a command template such as `"z3 -in"` on whitespace.
    pub fn from_template(template: &str) -> Self {
        Self::new(template.split_whitespace().map(str::to_owned).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SamplingConfig {
    pub budget: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Backend {
    Smt(SmtConfig),
    Sampling(SamplingConfig),
}

impl Backend {
    /// Whether an `Unsat` from this backend is a proof.
    pub fn is_complete(&self) -> bool {
        matches!(self, Backend::Smt(_))
    }
}

/// Per-obstacle formulas, computed once per instance.
pub struct WitnessChecker<'a> {
    instance: &'a Instance,
    formulas: Vec<QuadFormula>,
}

impl<'a> WitnessChecker<'a> {
    pub fn new(instance: &'a Instance) -> Self {
        Self {
            instance,
            formulas: instance.obstacles.iter().map(obstacle_free_formula).collect(),
        }
    }

    pub fn hop_is_free(&self, p: &[Rational], q: &[Rational]) -> bool {
        self.formulas.iter().all(|f| eval(f, p, q))
    }

    /// Checks an endpoint-complete waypoint list and solves the per-hop cone
    /// LPs, yielding a witness only if every condition holds exactly.
    pub fn complete(&self, waypoints: Vec<Point>) -> Option<WaypointWitness> {
        let inst = self.instance;
        if waypoints.first() != Some(&inst.start) || waypoints.last() != Some(&inst.target) {
            return None;
        }
        if let Some(w) = &inst.workspace {
            if !waypoints.iter().all(|x| w.contains(x, true)) {
                return None;
            }
        }
        let mut times = Vec::with_capacity(waypoints.len().saturating_sub(1));
        for pair in waypoints.windows(2) {
            if !self.hop_is_free(&pair[0], &pair[1]) {
                return None;
            }
            times.push(reach_cone_times(&inst.mms, &pair[0], &pair[1])?);
        }
        Some(WaypointWitness { waypoints, times })
    }

    /// Checks a witness as given, times included.
    pub fn accepts(&self, w: &WaypointWitness) -> bool {
        let inst = self.instance;
        if w.waypoints.first() != Some(&inst.start)
            || w.waypoints.last() != Some(&inst.target)
            || w.times.len() + 1 != w.waypoints.len()
        {
            return false;
        }
        if let Some(ws) = &inst.workspace {
            if !w.waypoints.iter().all(|x| ws.contains(x, true)) {
                return false;
            }
        }
        w.waypoints.windows(2).zip(&w.times).all(|(pair, t)| {
            t.0.len() == inst.mms.modes().len()
                && t.0.iter().all(|x| !x.is_negative())
                && t.apply(&inst.mms, &pair[0]) == pair[1]
                && self.hop_is_free(&pair[0], &pair[1])
        })
    }
}

fn round_to(v: &Rational, den: &BigInt) -> Rational {
    let d = Rational::from_integer(den.clone());
    let half = Rational::new(1.into(), 2.into());
    Rational::new((v * &d + half).floor().to_integer(), den.clone())
}

/// Turns solver model values into an exactly checked witness, rounding
/// approximate waypoints to progressively finer decimal grids.
fn extract_witness(
    instance: &Instance,
    k: usize,
    values: &std::collections::HashMap<String, ModelValue>,
    max_digits: u32,
) -> Result<WaypointWitness, String> {
    let layout = BmcLayout::for_instance(instance, k);
    let checker = WitnessChecker::new(instance);
    let mut raw: Vec<Point> = Vec::with_capacity(k);
    let mut all_exact = true;
    for i in 1..=k {
        let mut x = Vec::with_capacity(layout.dimension);
        for d in 0..layout.dimension {
            let sym = layout.waypoint_symbol(i, d);
            match values.get(&sym) {
                Some(ModelValue::Exact(v)) => x.push(v.clone()),
                Some(ModelValue::Approx(v)) => {
                    all_exact = false;
                    x.push(v.clone());
                }
                Some(ModelValue::Opaque(s)) => return Err(format!("non-rational value for {sym}: {s}")),
                None => return Err(format!("no value for {sym}")),
            }
        }
        raw.push(x);
    }
    let with_ends = |mid: Vec<Point>| {
        let mut w = Vec::with_capacity(k + 2);
        w.push(instance.start.clone());
        w.extend(mid);
        w.push(instance.target.clone());
        w
    };
    if all_exact {
        let mut times = Vec::with_capacity(k + 1);
        for hop in 0..=k {
            let t: Option<Vec<Rational>> = (0..layout.modes)
                .map(|m| match values.get(&layout.time_symbol(hop, m)) {
                    Some(ModelValue::Exact(v)) => Some(v.clone()),
                    _ => None,
                })
                .collect();
            match t {
                Some(t) => times.push(ConeTimes(t)),
                None => break,
            }
        }
        let w = WaypointWitness {
            waypoints: with_ends(raw.clone()),
            times,
        };
        if checker.accepts(&w) {
            return Ok(w);
        }
        if let Some(w) = checker.complete(with_ends(raw.clone())) {
            return Ok(w);
        }
    }
    let ten = BigInt::from(10);
    let mut den = BigInt::from(1);
    for _ in 0..=max_digits {
        let rounded: Vec<Point> = raw
            .iter()
            .map(|x| x.iter().map(|v| round_to(v, &den)).collect())
            .collect();
        if let Some(w) = checker.complete(with_ends(rounded)) {
            return Ok(w);
        }
        den *= &ten;
    }
    Err("model rounding failed".into())
}

fn needs_decimal_retry(values: &std::collections::HashMap<String, ModelValue>) -> bool {
    values.values().any(|v| matches!(v, ModelValue::Opaque(_)))
}

/// Runs one depth-`k` script through the external solver and re-verifies
/// any model exactly. Never reports `Sat` for an unchecked witness.
pub fn run_backend(instance: &Instance, k: usize, script: &str, cfg: &SmtConfig) -> BackendVerdict {
    let script = &script.replacen("(check-sat)", &cfg.check_sat, 1);
    let answer = match run_solver_process(&cfg.command, script, cfg.timeout) {
        Ok(out) => parse_solver_output(&out),
        Err(ProcessError::Timeout) => return BackendVerdict::Unknown("timeout".into()),
        Err(ProcessError::Launch(e)) => return BackendVerdict::Unknown(format!("launch failed: {e}")),
    };
    match answer {
        SolverAnswer::Unsat => BackendVerdict::Unsat,
        SolverAnswer::Unknown(r) => BackendVerdict::Unknown(r),
        SolverAnswer::Sat(mut values) => {
            if needs_decimal_retry(&values) {
                // Algebraic values: ask again for decimal approximations.
                let retry = format!(
                    "(set-option :pp.decimal true)\n(set-option :pp.decimal_precision 40)\n{script}"
                );
                match run_solver_process(&cfg.command, &retry, cfg.timeout) {
                    Ok(out) => {
                        if let SolverAnswer::Sat(v) = parse_solver_output(&out) {
                            values = v;
                        }
                    }
                    Err(_) => return BackendVerdict::Unknown("timeout".into()),
                }
            }
            match extract_witness(instance, k, &values, cfg.max_decimal_digits) {
                Ok(w) => BackendVerdict::Sat(w),
                Err(e) => BackendVerdict::Unknown(e),
            }
        }
    }
}

/// Random rational waypoints in the workspace box, checked exactly. Can only
/// answer `Sat` or `Unknown`.
pub fn sampling_backend(instance: &Instance, k: usize, budget: usize, seed: u64) -> BackendVerdict {
    let Some(ws) = &instance.workspace else {
        return BackendVerdict::Unknown("sampling needs a workspace".into());
    };
    let Some((lo, hi)) = ws.bounding_box() else {
        return BackendVerdict::Unknown("workspace is unbounded".into());
    };
    let checker = WitnessChecker::new(instance);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    const GRID: i64 = 1 << 12;
    for _ in 0..budget {
        let mut wps = Vec::with_capacity(k + 2);
        wps.push(instance.start.clone());
        for _ in 0..k {
            let x: Point = lo
                .iter()
                .zip(&hi)
                .map(|(a, b)| {
                    let u = Rational::new(rng.gen_range(1..GRID).into(), GRID.into());
                    a + (b - a) * u
                })
                .collect();
            wps.push(x);
        }
        wps.push(instance.target.clone());
        if let Some(w) = checker.complete(wps) {
            return BackendVerdict::Sat(w);
        }
    }
    BackendVerdict::Unknown("sampling budget exhausted".into())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PlanError {
    Hop(usize, String),
    Verification(String),
}

impl std::fmt::Display for PlanError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PlanError::Hop(i, e) => write!(f, "hop {i}: {e}"),
            PlanError::Verification(e) => write!(f, "{e}"),
        }
    }
}

/// Expands every hop and checks the concatenated run end to end.
pub fn assemble_plan(instance: &Instance, witness: &WaypointWitness) -> Result<Plan, PlanError> {
    let mut schedule = Schedule::default();
    let mut perhop = Vec::with_capacity(witness.hops());
    for (i, (pair, t)) in witness.waypoints.windows(2).zip(&witness.times).enumerate() {
        let s = hop_schedule(&instance.mms, &pair[0], &pair[1], instance, t)
            .map_err(|e| PlanError::Hop(i, e.to_string()))?;
        let start = schedule.len();
        schedule.extend(s);
        perhop.push(HopSpan {
            waypoint: i,
            start,
            end: schedule.len(),
        });
    }
    let run = simulate(&instance.mms, &instance.start, &schedule)
        .map_err(|e| PlanError::Verification(e.to_string()))?;
    if run.terminal() != &instance.target {
        return Err(PlanError::Verification("terminal state differs from target".into()));
    }
    // Each hop was verified piece by piece; the run is their concatenation.
    Ok(Plan {
        waypoints: witness.waypoints.clone(),
        schedule,
        perhop,
        verified: true,
    })
}

/// One depth of the planning loop.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DepthRecord {
    pub k: usize,
    pub verdict: String,
    pub elapsed: Duration,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PlanOutcome {
    Planned {
        plan: Plan,
        witness_length: usize,
        trace: Vec<DepthRecord>,
    },
    Unreachable {
        bound: usize,
        trace: Vec<DepthRecord>,
    },
    Exhausted {
        bound: usize,
        trace: Vec<DepthRecord>,
    },
}

impl PlanOutcome {
    pub fn witness_length(&self) -> Option<usize> {
        match self {
            PlanOutcome::Planned { witness_length, .. } => Some(*witness_length),
            _ => None,
        }
    }

    pub fn trace(&self) -> &[DepthRecord] {
        match self {
            PlanOutcome::Planned { trace, .. }
            | PlanOutcome::Unreachable { trace, .. }
            | PlanOutcome::Exhausted { trace, .. } => trace,
        }
    }
}

/// Asks the backend for exactly `k` intermediate waypoints.
pub fn query(instance: &Instance, k: usize, backend: &Backend) -> BackendVerdict {
    match backend {
        Backend::Smt(cfg) => run_backend(instance, k, &encode_bmc(instance, k), cfg),
        Backend::Sampling(cfg) => {
            sampling_backend(instance, k, cfg.budget, cfg.seed.wrapping_add(k as u64))
        }
    }
}

fn verdict_label(v: &BackendVerdict) -> String {
    match v {
        BackendVerdict::Sat(_) => "sat".into(),
        BackendVerdict::Unsat => "unsat".into(),
        BackendVerdict::Unknown(r) => format!("unknown ({r})"),
    }
}

/// Iterates k = 0..=bound and returns the first verified plan.
pub fn plan(instance: &Instance, bound: usize, backend: &Backend) -> PlanOutcome {
    let mut trace = Vec::new();
    let mut inconclusive = false;
    for k in 0..=bound {
        let t0 = Instant::now();
        let verdict = query(instance, k, backend);
        let verdict = match (verdict, backend.is_complete()) {
            (BackendVerdict::Unsat, false) => BackendVerdict::Unknown("incomplete backend".into()),
            (v, _) => v,
        };
        let mut label = verdict_label(&verdict);
        if let BackendVerdict::Sat(w) = &verdict {
            match assemble_plan(instance, w) {
                Ok(plan) => {
                    trace.push(DepthRecord {
                        k,
                        verdict: label,
                        elapsed: t0.elapsed(),
                    });
                    return PlanOutcome::Planned {
                        plan,
                        witness_length: k + 1,
                        trace,
                    };
                }
                Err(e) => {
                    label = format!("unknown (assembly failed: {e})");
                    inconclusive = true;
                }
            }
        }
        if matches!(verdict, BackendVerdict::Unknown(_)) {
            inconclusive = true;
        }
        trace.push(DepthRecord {
            k,
            verdict: label,
            elapsed: t0.elapsed(),
        });
    }
    if inconclusive {
        PlanOutcome::Exhausted { bound, trace }
    } else {
        PlanOutcome::Unreachable { bound, trace }
    }
}

/// Pads a witness with a repeated target waypoint and zero times; used to
/// check that satisfiability is monotone in k.
pub fn pad_witness(w: &WaypointWitness) -> WaypointWitness {
    let mut padded = w.clone();
    let last = padded.waypoints.last().cloned().expect("nonempty witness");
    let zeros = ConeTimes(vec![Rational::zero(); w.times.first().map_or(0, |t| t.0.len())]);
    padded.waypoints.push(last);
    padded.times.push(zeros);
    padded
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Polytope;
    use crate::model::Mms;
    use crate::numeric::{int, ratio};

    fn lshaped() -> Instance {
        let mms = Mms::from_rates(
            2,
            [
                ("m1", vec![int(1), int(1)]),
                ("m2", vec![int(0), int(-1)]),
                ("m3", vec![int(-1), int(1)]),
            ],
        )
        .unwrap();
        let o1 = Polytope::from_box(&[ratio(15, 100), ratio(1, 4)], &[ratio(375, 100), int(1)]);
        let o2 = Polytope::from_box(&[int(3), ratio(105, 100)], &[ratio(375, 100), ratio(395, 100)]);
        Instance::new(
            mms,
            vec![o1, o2],
            Some(Polytope::from_box(&[int(0), int(0)], &[int(4), int(4)])),
            vec![ratio(1, 10), ratio(1, 10)],
            vec![ratio(39, 10), ratio(39, 10)],
        )
        .unwrap()
    }

    #[test]
    fn encoding_shape() {
        let s0 = encode_bmc(&lshaped(), 0);
        assert_eq!(s0.matches("declare-fun").count(), 3);
        assert!(s0.starts_with("(set-logic QF_NRA)"));
        assert!(s0.contains("(assert false)"));
        let s1 = encode_bmc(&lshaped(), 1);
        assert_eq!(s1.matches("declare-fun").count(), 2 + 6);
        // Numerals are integers written `N.0`, fractions go through `(/ p q)`.
        let b = s1.as_bytes();
        for (i, _) in s1.match_indices('.') {
            assert_eq!(b[i + 1], b'0');
            assert!(!b[i + 2].is_ascii_digit());
        }
    }

    #[test]
    fn manual_witness_checks_and_assembles() {
        let inst = lshaped();
        let checker = WitnessChecker::new(&inst);
        let w = checker
            .complete(vec![
                inst.start.clone(),
                vec![ratio(39, 10), ratio(1, 10)],
                inst.target.clone(),
            ])
            .unwrap();
        assert!(checker.accepts(&w));
        assert!(checker.accepts(&pad_witness(&w)));
        let plan = assemble_plan(&inst, &w).unwrap();
        assert!(plan.verified);
        assert_eq!(plan.witness_length(), 2);
        assert!(checker
            .complete(vec![inst.start.clone(), inst.target.clone()])
            .is_none());
    }

    #[test]
    fn sampler_never_proves_unsat() {
        let inst = lshaped();
        assert!(matches!(sampling_backend(&inst, 0, 50, 1), BackendVerdict::Unknown(_)));
        assert!(matches!(sampling_backend(&inst, 1, 0, 1), BackendVerdict::Unknown(_)));
        assert!(matches!(sampling_backend(&inst, 1, 20_000, 7), BackendVerdict::Sat(_)));
    }

    #[test]
    fn rounding_recovers_decimal_models() {
        let inst = lshaped();
        let mut values = std::collections::HashMap::new();
        values.insert("x1_0".to_string(), ModelValue::Approx(ratio(3_899_999, 1_000_000)));
        values.insert("x1_1".to_string(), ModelValue::Approx(ratio(100_001, 1_000_000)));
        let w = extract_witness(&inst, 1, &values, 12).unwrap();
        assert!(WitnessChecker::new(&inst).accepts(&w));
    }
}
