//! Multi-mode systems, schedules, runs, instances and plans.

use std::collections::HashSet;

use num_traits::{One, Signed, Zero};
use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::geometry::{Halfspace, Polytope};
use crate::numeric::{format_rational, parse_rational, Rational};

pub type Point = Vec<Rational>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModelError {
    #[error("{path}: {reason}")]
    Invalid { path: String, reason: String },
    #[error("unknown mode {0:?}")]
    UnknownMode(String),
    #[error("action {index} has negative duration {duration}")]
    NegativeDuration { index: usize, duration: String },
    #[error("{0} not in safety set")]
    NotSafe(&'static str),
}

fn invalid(path: impl Into<String>, reason: impl Into<String>) -> ModelError {
    ModelError::Invalid {
        path: path.into(),
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mode {
    pub name: String,
    pub rate: Vec<Rational>,
}

/// Modes with constant rate vectors in `R^n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mms {
    dimension: usize,
    modes: Vec<Mode>,
}

impl Mms {
    pub fn new(dimension: usize, modes: Vec<Mode>) -> Result<Self, ModelError> {
        if modes.is_empty() {
            return Err(invalid("modes", "at least one mode is required"));
        }
        let mut seen = HashSet::new();
        for m in &modes {
            if !seen.insert(m.name.as_str()) {
                return Err(invalid(format!("modes.{}", m.name), "duplicate mode name"));
            }
            if m.rate.len() != dimension {
                return Err(invalid(
                    format!("modes.{}", m.name),
                    format!("rate has {} entries, expected {dimension}", m.rate.len()),
                ));
            }
        }
        Ok(Self { dimension, modes })
    }

    /// Convenience constructor from `(name, rate)` pairs.
    pub fn from_rates<S: Into<String>>(
        dimension: usize,
        rates: impl IntoIterator<Item = (S, Vec<Rational>)>,
    ) -> Result<Self, ModelError> {
        let modes = rates
            .into_iter()
            .map(|(name, rate)| Mode {
                name: name.into(),
                rate,
            })
            .collect();
        Self::new(dimension, modes)
    }

    /// The 2n modes `±e_i`, named `+x1`, `-x1`, ...
    pub fn axis_modes(dimension: usize) -> Self {
        let mut modes = Vec::with_capacity(2 * dimension);
        for i in 0..dimension {
            for (sign, v) in [("+", 1), ("-", -1)] {
                let mut rate = vec![Rational::zero(); dimension];
                rate[i] = Rational::from_integer(v.into());
                modes.push(Mode {
                    name: format!("{sign}x{}", i + 1),
                    rate,
                });
            }
        }
        Self { dimension, modes }
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.modes.iter().position(|m| m.name == name)
    }

    pub fn rate(&self, name: &str) -> Option<&[Rational]> {
        self.modes
            .iter()
            .find(|m| m.name == name)
            .map(|m| m.rate.as_slice())
    }

    /// Largest `‖R(m)‖∞` over all modes.
    pub fn max_rate_inf(&self) -> Rational {
        self.modes
            .iter()
            .map(|m| crate::numeric::norm_inf(&m.rate))
            .max()
            .unwrap_or_else(Rational::zero)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TimedAction {
    pub mode: String,
    pub duration: Rational,
}

impl TimedAction {
    pub fn new(mode: impl Into<String>, duration: Rational) -> Self {
        Self {
            mode: mode.into(),
            duration,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Schedule {
    pub actions: Vec<TimedAction>,
}

impl Schedule {
    pub fn new(actions: Vec<TimedAction>) -> Self {
        Self { actions }
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn total_time(&self) -> Rational {
        self.actions.iter().map(|a| a.duration.clone()).sum()
    }

    pub fn extend(&mut self, other: Schedule) {
        self.actions.extend(other.actions);
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Run {
    pub states: Vec<Point>,
    pub actions: Vec<TimedAction>,
}

impl Run {
    pub fn terminal(&self) -> &Point {
        self.states.last().expect("a run has at least one state")
    }
}

/// Exact state sequence `x_i = x_{i-1} + t_i R(m_i)`.
pub fn simulate(mms: &Mms, start: &[Rational], schedule: &Schedule) -> Result<Run, ModelError> {
    if start.len() != mms.dimension() {
        return Err(invalid(
            "start",
            format!("has {} coordinates, expected {}", start.len(), mms.dimension()),
        ));
    }
    let mut states = Vec::with_capacity(schedule.len() + 1);
    states.push(start.to_vec());
    for (index, a) in schedule.actions.iter().enumerate() {
        if a.duration.is_negative() {
            return Err(ModelError::NegativeDuration {
                index,
                duration: format_rational(&a.duration),
            });
        }
        let rate = mms
            .rate(&a.mode)
            .ok_or_else(|| ModelError::UnknownMode(a.mode.clone()))?;
        let next = states
            .last()
            .unwrap()
            .iter()
            .zip(rate)
            .map(|(x, r)| {
                if r.is_zero() {
                    x.clone()
                } else if r.is_one() {
                    x + &a.duration
                } else {
                    x + r * &a.duration
                }
            })
            .collect();
        states.push(next);
    }
    Ok(Run {
        states,
        actions: schedule.actions.clone(),
    })
}

/// Reach-avoid problem: an MMS, closed obstacles, an optional workspace
/// (treated as open) and start/target points.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    pub mms: Mms,
    pub obstacles: Vec<Polytope>,
    pub workspace: Option<Polytope>,
    pub start: Point,
    pub target: Point,
}

impl Instance {
    pub fn new(
        mms: Mms,
        obstacles: Vec<Polytope>,
        workspace: Option<Polytope>,
        start: Point,
        target: Point,
    ) -> Result<Self, ModelError> {
        let n = mms.dimension();
        for (i, o) in obstacles.iter().enumerate() {
            if o.dimension() != n {
                return Err(invalid(format!("obstacles[{i}]"), "dimension mismatch"));
            }
        }
        if let Some(w) = &workspace {
            if w.dimension() != n {
                return Err(invalid("workspace", "dimension mismatch"));
            }
        }
        for (name, p) in [("start", &start), ("target", &target)] {
            if p.len() != n {
                return Err(invalid(
                    name,
                    format!("has {} coordinates, expected {n}", p.len()),
                ));
            }
        }
        let inst = Self {
            mms,
            obstacles,
            workspace,
            start,
            target,
        };
        if !inst.is_safe(&inst.start) {
            return Err(ModelError::NotSafe("start"));
        }
        if !inst.is_safe(&inst.target) {
            return Err(ModelError::NotSafe("target"));
        }
        Ok(inst)
    }

    pub fn dimension(&self) -> usize {
        self.mms.dimension()
    }

    /// Membership in the open safety set: strictly inside the workspace and
    /// outside every closed obstacle.
    pub fn is_safe(&self, x: &[Rational]) -> bool {
        self.workspace.as_ref().is_none_or(|w| w.contains(x, true))
            && self.obstacles.iter().all(|o| !o.contains(x, false))
    }
}

/// Span of the expanded schedule realizing one waypoint hop.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HopSpan {
    pub waypoint: usize,
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Plan {
    pub waypoints: Vec<Point>,
    pub schedule: Schedule,
    pub perhop: Vec<HopSpan>,
    pub verified: bool,
}

impl Plan {
    /// Number of hop segments.
    pub fn witness_length(&self) -> usize {
        self.waypoints.len().saturating_sub(1)
    }
}

fn rational_at(v: &Value, path: &str) -> Result<Rational, ModelError> {
    match v {
        Value::String(s) => parse_rational(s).map_err(|e| invalid(path, e.to_string())),
        Value::Number(n) if n.is_i64() => {
            Ok(Rational::from_integer(n.as_i64().unwrap().into()))
        }
        _ => Err(invalid(path, "expected a rational string")),
    }
}

fn vector_at(v: &Value, path: &str, len: Option<usize>) -> Result<Vec<Rational>, ModelError> {
    let arr = v
        .as_array()
        .ok_or_else(|| invalid(path, "expected an array"))?;
    if let Some(n) = len {
        if arr.len() != n {
            return Err(invalid(
                path,
                format!("has {} entries, expected {n}", arr.len()),
            ));
        }
    }
    arr.iter()
        .enumerate()
        .map(|(i, x)| rational_at(x, &format!("{path}[{i}]")))
        .collect()
}

fn polytope_at(v: &Value, path: &str, n: usize) -> Result<Polytope, ModelError> {
    let a = v
        .get("A")
        .and_then(Value::as_array)
        .ok_or_else(|| invalid(format!("{path}.A"), "expected an array of rows"))?;
    let b = v
        .get("b")
        .ok_or_else(|| invalid(format!("{path}.b"), "missing"))?;
    let b = vector_at(b, &format!("{path}.b"), Some(a.len()))?;
    let mut rows = Vec::with_capacity(a.len());
    for (i, (row, off)) in a.iter().zip(b).enumerate() {
        let normal = vector_at(row, &format!("{path}.A[{i}]"), Some(n))?;
        rows.push(Halfspace::new(normal, off));
    }
    Polytope::new(n, rows).map_err(|e| invalid(path, e.to_string()))
}

/// Parses the instance document and validates it.
pub fn load_instance(doc: &Value) -> Result<Instance, ModelError> {
    let n = doc
        .get("dimension")
        .and_then(Value::as_u64)
        .ok_or_else(|| invalid("dimension", "expected a positive integer"))? as usize;
    if n == 0 {
        return Err(invalid("dimension", "must be positive"));
    }
    let modes_obj = doc
        .get("modes")
        .and_then(Value::as_object)
        .ok_or_else(|| invalid("modes", "expected an object"))?;
    let mut modes = Vec::with_capacity(modes_obj.len());
    for (name, rate) in modes_obj {
        modes.push(Mode {
            name: name.clone(),
            rate: vector_at(rate, &format!("modes.{name}"), Some(n))?,
        });
    }
    let mms = Mms::new(n, modes)?;
    let mut obstacles = Vec::new();
    if let Some(obs) = doc.get("obstacles") {
        let arr = obs
            .as_array()
            .ok_or_else(|| invalid("obstacles", "expected an array"))?;
        for (i, o) in arr.iter().enumerate() {
            obstacles.push(polytope_at(o, &format!("obstacles[{i}]"), n)?);
        }
    }
    let workspace = match doc.get("workspace") {
        None | Some(Value::Null) => None,
        Some(w) => Some(polytope_at(w, "workspace", n)?),
    };
    let start = vector_at(
        doc.get("start").ok_or_else(|| invalid("start", "missing"))?,
        "start",
        Some(n),
    )?;
    let target = vector_at(
        doc.get("target").ok_or_else(|| invalid("target", "missing"))?,
        "target",
        Some(n),
    )?;
    Instance::new(mms, obstacles, workspace, start, target)
}

fn vector_json(v: &[Rational]) -> Value {
    Value::Array(v.iter().map(|x| Value::String(format_rational(x))).collect())
}

fn polytope_json(p: &Polytope) -> Value {
    json!({
        "A": p.rows().iter().map(|r| vector_json(&r.normal)).collect::<Vec<_>>(),
        "b": p.rows().iter().map(|r| Value::String(format_rational(&r.offset))).collect::<Vec<_>>(),
    })
}

pub fn instance_to_json(inst: &Instance) -> Value {
    let mut modes = Map::new();
    for m in inst.mms.modes() {
        modes.insert(m.name.clone(), vector_json(&m.rate));
    }
    let mut doc = Map::new();
    doc.insert("dimension".into(), json!(inst.dimension()));
    doc.insert("modes".into(), Value::Object(modes));
    doc.insert(
        "obstacles".into(),
        Value::Array(inst.obstacles.iter().map(polytope_json).collect()),
    );
    if let Some(w) = &inst.workspace {
        doc.insert("workspace".into(), polytope_json(w));
    }
    doc.insert("start".into(), vector_json(&inst.start));
    doc.insert("target".into(), vector_json(&inst.target));
    Value::Object(doc)
}

pub fn save_plan(plan: &Plan) -> Value {
    json!({
        "waypoints": plan.waypoints.iter().map(|w| vector_json(w)).collect::<Vec<_>>(),
        "schedule": plan.schedule.actions.iter()
            .map(|a| json!([a.mode, format_rational(&a.duration)]))
            .collect::<Vec<_>>(),
        "perhop": plan.perhop.iter()
            .map(|h| json!([h.waypoint, h.start, h.end]))
            .collect::<Vec<_>>(),
        "verified": plan.verified,
    })
}

pub fn load_plan(doc: &Value) -> Result<Plan, ModelError> {
    let wps = doc
        .get("waypoints")
        .and_then(Value::as_array)
        .ok_or_else(|| invalid("waypoints", "expected an array"))?;
    let waypoints = wps
        .iter()
        .enumerate()
        .map(|(i, w)| vector_at(w, &format!("waypoints[{i}]"), None))
        .collect::<Result<Vec<_>, _>>()?;
    let sched = doc
        .get("schedule")
        .and_then(Value::as_array)
        .ok_or_else(|| invalid("schedule", "expected an array"))?;
    let mut actions = Vec::with_capacity(sched.len());
    for (i, a) in sched.iter().enumerate() {
        let path = format!("schedule[{i}]");
        let pair = a
            .as_array()
            .filter(|p| p.len() == 2)
            .ok_or_else(|| invalid(&path, "expected [mode, duration]"))?;
        let mode = pair[0]
            .as_str()
            .ok_or_else(|| invalid(format!("{path}[0]"), "expected a mode name"))?;
        let duration = rational_at(&pair[1], &format!("{path}[1]"))?;
        actions.push(TimedAction::new(mode, duration));
    }
    // Optional: [waypoint, start, end] per hop.
    let mut perhop = Vec::new();
    if let Some(spans) = doc.get("perhop").and_then(Value::as_array) {
        for (i, h) in spans.iter().enumerate() {
            let f: Option<Vec<usize>> = h
                .as_array()
                .filter(|a| a.len() == 3)
                .and_then(|a| a.iter().map(|v| v.as_u64().map(|v| v as usize)).collect());
            let Some(f) = f.filter(|f| f[1] <= f[2] && f[2] <= actions.len()) else {
                return Err(invalid(format!("perhop[{i}]"), "expected [waypoint, start, end]"));
            };
            perhop.push(HopSpan {
                waypoint: f[0],
                start: f[1],
                end: f[2],
            });
        }
    }
    let verified = doc.get("verified").and_then(Value::as_bool).unwrap_or(false);
    Ok(Plan {
        waypoints,
        schedule: Schedule::new(actions),
        perhop,
        verified,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::{int, ratio};

    fn three_mode_mms() -> Mms {
        Mms::from_rates(
            2,
            [
                ("m1", vec![int(1), int(1)]),
                ("m2", vec![int(0), int(-1)]),
                ("m3", vec![int(-1), int(1)]),
            ],
        )
        .unwrap()
    }

    #[test]
    fn update_rule() {
        let s = Schedule::new(vec![
            TimedAction::new("m1", int(1)),
            TimedAction::new("m2", int(1)),
        ]);
        let run = simulate(&three_mode_mms(), &[int(0), int(0)], &s).unwrap();
        assert_eq!(
            run.states,
            vec![vec![int(0), int(0)], vec![int(1), int(1)], vec![int(1), int(0)]]
        );
    }

    #[test]
    fn empty_and_zero_duration() {
        let run = simulate(&three_mode_mms(), &[int(2), int(3)], &Schedule::default()).unwrap();
        assert_eq!(run.states, vec![vec![int(2), int(3)]]);
        let s = Schedule::new(vec![TimedAction::new("m1", int(0))]);
        let run = simulate(&three_mode_mms(), &[int(2), int(3)], &s).unwrap();
        assert_eq!(run.terminal(), &vec![int(2), int(3)]);
    }

    #[test]
    fn bad_actions() {
        let s = Schedule::new(vec![TimedAction::new("m9", int(1))]);
        assert_eq!(
            simulate(&three_mode_mms(), &[int(0), int(0)], &s),
            Err(ModelError::UnknownMode("m9".into()))
        );
        let s = Schedule::new(vec![TimedAction::new("m1", ratio(-1, 2))]);
        assert!(matches!(
            simulate(&three_mode_mms(), &[int(0), int(0)], &s),
            Err(ModelError::NegativeDuration { index: 0, .. })
        ));
    }

    #[test]
    fn mms_validation() {
        assert!(Mms::from_rates::<&str>(2, []).is_err());
        assert!(Mms::from_rates(2, [("a", vec![int(1)])]).is_err());
        assert!(Mms::from_rates(1, [("a", vec![int(1)]), ("a", vec![int(2)])]).is_err());
        assert_eq!(Mms::axis_modes(3).modes().len(), 6);
    }

    #[test]
    fn json_errors_carry_paths() {
        let doc = json!({
            "dimension": 2,
            "modes": {"m1": ["1", "x"]},
            "start": ["0", "0"], "target": ["1", "1"]
        });
        let err = load_instance(&doc).unwrap_err().to_string();
        assert!(err.starts_with("modes.m1[1]"), "{err}");
    }
}
