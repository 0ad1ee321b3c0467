//! Cone reachability, convex-set scheduling and clearance-based hop
//! expansion, plus the exact run verifier.

use std::cmp::Ordering;

use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use thiserror::Error;

use crate::geometry::{segment_clearance, segment_hit, Halfspace, Polytope, Segment};
use crate::model::{simulate, Instance, Mms, Point, Run, Schedule, TimedAction};
use crate::numeric::{
    dot, lp_optimize, one, sub, to_f64, Direction, Extended, LinearConstraint, LpOutcome, Rational,
};

/// Doublings tried before a slicing is declared hopeless.
const MAX_DOUBLINGS: usize = 40;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum HopError {
    #[error("point is not strictly inside the convex set")]
    NotInterior,
    #[error("no clearance: the segment touches an obstacle or the workspace boundary")]
    NoClearance,
    #[error("times do not realize the hop exactly")]
    BadTimes,
    #[error("slicing failed to verify after {0} doublings")]
    SlicingFailed(usize),
}

/// Per-mode dwell times, in mode order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConeTimes(pub Vec<Rational>);

impl ConeTimes {
    pub fn total(&self) -> Rational {
        self.0.iter().cloned().sum()
    }

    /// `p + Σ t_m R(m)`.
    pub fn apply(&self, mms: &Mms, p: &[Rational]) -> Point {
        let mut x = p.to_vec();
        for (m, t) in mms.modes().iter().zip(&self.0) {
            if t.is_zero() {
                continue;
            }
            for (xi, r) in x.iter_mut().zip(&m.rate) {
                *xi += t * r;
            }
        }
        x
    }
}

/// Nonnegative times with `p + Σ t_m R(m) = q`, minimizing total time.
pub fn reach_cone_times(mms: &Mms, p: &[Rational], q: &[Rational]) -> Option<ConeTimes> {
    let k = mms.modes().len();
    let delta = sub(q, p);
    let mut cons = Vec::with_capacity(mms.dimension() + k);
    for (i, d) in delta.iter().enumerate() {
        let row = mms.modes().iter().map(|m| m.rate[i].clone()).collect();
        cons.push(LinearConstraint::eq(row, d.clone()));
    }
    for j in 0..k {
        let mut row = vec![Rational::zero(); k];
        row[j] = -one();
        cons.push(LinearConstraint::le(row, Rational::zero()));
    }
    let obj = vec![one(); k];
    match lp_optimize(&obj, &cons, Direction::Minimize) {
        Ok(LpOutcome::Bounded { witness, .. }) => {
            let t = ConeTimes(witness);
            debug_assert_eq!(t.apply(mms, p), q);
            Some(t)
        }
        _ => None,
    }
}

/// Least over modes of the supremum dwell time keeping `x + τR(m)` in the
/// closure of the open set `s`.
pub fn t_safe(mms: &Mms, s: &Polytope, x: &[Rational]) -> Result<Extended, HopError> {
    if !s.contains(x, true) {
        return Err(HopError::NotInterior);
    }
    let mut best = Extended::Infinity;
    for m in mms.modes() {
        for row in s.rows() {
            let ar = dot(&row.normal, &m.rate);
            if ar.is_positive() {
                best = best.min_with(Extended::Finite(row.slack(x) / ar));
            }
        }
    }
    Ok(best)
}

/// `l` rounds; each round runs every mode with positive time for `t_m / l`.
pub fn round_robin(mms: &Mms, times: &ConeTimes, l: usize) -> Schedule {
    let lr = Rational::from_integer(BigInt::from(l));
    let slices: Vec<TimedAction> = mms
        .modes()
        .iter()
        .zip(&times.0)
        .filter(|(_, t)| t.is_positive())
        .map(|(m, t)| TimedAction::new(m.name.clone(), t / &lr))
        .collect();
    let mut actions = Vec::with_capacity(slices.len() * l);
    for _ in 0..l {
        actions.extend(slices.iter().cloned());
    }
    Schedule::new(actions)
}

fn rounds_for(total: &Rational, per_round_cap: &Extended) -> usize {
    match per_round_cap {
        Extended::Infinity => 1,
        // Strictly below the cap: floor(total / cap) + 1.
        Extended::Finite(cap) => {
            let q = (total / cap).floor().to_integer();
            usize::try_from(q).unwrap_or(usize::MAX / 4) + 1
        }
    }
}

/// Schedules a move from `p` to `q` inside the open convex set `s`.
pub fn reach_convex(
    mms: &Mms,
    p: &[Rational],
    q: &[Rational],
    s: &Polytope,
) -> Result<Option<Schedule>, HopError> {
    let ts = t_safe(mms, s, p)?.min_with(t_safe(mms, s, q)?);
    let Some(times) = reach_cone_times(mms, p, q) else {
        return Ok(None);
    };
    if p == q {
        return Ok(Some(Schedule::default()));
    }
    let mut l = rounds_for(&times.total(), &ts);
    for _ in 0..MAX_DOUBLINGS {
        let sched = round_robin(mms, &times, l);
        let run = simulate(mms, p, &sched).expect("schedule built from mms modes");
        if run.terminal() == q && run.states.iter().all(|x| s.contains(x, true)) {
            return Ok(Some(sched));
        }
        l *= 2;
    }
    Err(HopError::SlicingFailed(MAX_DOUBLINGS))
}

/// Expands one obstacle-free hop into a verified round-robin schedule whose
/// round boundaries lie on the segment.
pub fn hop_schedule(
    mms: &Mms,
    p: &[Rational],
    q: &[Rational],
    instance: &Instance,
    times: &ConeTimes,
) -> Result<Schedule, HopError> {
    if times.apply(mms, p) != q || times.0.iter().any(Signed::is_negative) {
        return Err(HopError::BadTimes);
    }
    if p == q {
        return Ok(Schedule::default());
    }
    let seg = Segment::new(p.to_vec(), q.to_vec());
    let eps = segment_clearance(&seg, instance);
    if eps == Extended::Finite(Rational::zero()) {
        return Err(HopError::NoClearance);
    }
    let mut l = match &eps {
        Extended::Infinity => 1,
        Extended::Finite(e) => {
            let need = (times.total() * mms.max_rate_inf() / e).ceil().to_integer();
            usize::try_from(need).unwrap_or(usize::MAX / 4) + 1
        }
    };
    for _ in 0..MAX_DOUBLINGS {
        let sched = round_robin(mms, times, l);
        let run = simulate(mms, p, &sched).expect("schedule built from mms modes");
        if run.terminal() == q && verify_run(instance, &run).ok {
            return Ok(sched);
        }
        l *= 2;
    }
    Err(HopError::SlicingFailed(MAX_DOUBLINGS))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ViolationTarget {
    Obstacle(usize),
    Workspace,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub segment: usize,
    pub target: ViolationTarget,
    /// Parameter on `λ·x_{i} + (1−λ)·x_{i+1}` where the violation occurs.
    pub lambda: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerificationReport {
    pub ok: bool,
    pub violations: Vec<Violation>,
}

/// A row with a floating-point shadow for fast sign tests.
struct FilteredRow<'a> {
    row: &'a Halfspace,
    normal: Vec<f64>,
    offset: f64,
}

impl<'a> FilteredRow<'a> {
    fn new(row: &'a Halfspace) -> Self {
        Self {
            row,
            normal: row.normal.iter().map(to_f64).collect(),
            offset: to_f64(&row.offset),
        }
    }

    /// Sign of `b - a·x`. The float result is trusted only when it clears
    /// a generous rounding bound; otherwise the sign is computed exactly.
    fn slack_sign(&self, x: &[Rational], xf: &[f64]) -> Ordering {
        let mut s = self.offset;
        let mut mag = self.offset.abs();
        for (a, v) in self.normal.iter().zip(xf) {
            s -= a * v;
            mag += (a * v).abs();
        }
        let err = 1e-12 * mag + 1e-290;
        if s.is_finite() && mag.is_finite() && s.abs() > err {
            return s.partial_cmp(&0.0).unwrap();
        }
        self.row.slack(x).cmp(&Rational::zero())
    }
}

/// Checks every linear piece against every obstacle and every breakpoint
/// against the open workspace. A run with no actions is checked as a point.
pub fn verify_run(instance: &Instance, run: &Run) -> VerificationReport {
    let states = &run.states;
    let approx: Vec<Vec<f64>> = states.iter().map(|x| x.iter().map(to_f64).collect()).collect();
    let pieces: Vec<(usize, usize)> = if states.len() == 1 {
        vec![(0, 0)]
    } else {
        (0..states.len() - 1).map(|i| (i, i + 1)).collect()
    };
    let mut violations = Vec::new();
    for (j, o) in instance.obstacles.iter().enumerate() {
        let rows: Vec<FilteredRow> = o.rows().iter().map(FilteredRow::new).collect();
        let k = rows.len();
        // States strictly outside each row, computed once per state.
        let outside: Vec<bool> = states
            .iter()
            .zip(&approx)
            .flat_map(|(x, xf)| rows.iter().map(move |r| r.slack_sign(x, xf) == Ordering::Less))
            .collect();
        for &(a, b) in &pieces {
            if (0..k).any(|r| outside[a * k + r] && outside[b * k + r]) {
                continue;
            }
            let seg = Segment::new(states[a].clone(), states[b].clone());
            if let Some(lambda) = segment_hit(&seg, o) {
                violations.push(Violation {
                    segment: a,
                    target: ViolationTarget::Obstacle(j),
                    lambda,
                });
            }
        }
    }
    if let Some(w) = &instance.workspace {
        let rows: Vec<FilteredRow> = w.rows().iter().map(FilteredRow::new).collect();
        let inside: Vec<bool> = states
            .iter()
            .zip(&approx)
            .map(|(x, xf)| rows.iter().all(|r| r.slack_sign(x, xf) == Ordering::Greater))
            .collect();
        for &(a, b) in &pieces {
            let lambda = if !inside[a] {
                Some(one())
            } else if !inside[b] {
                Some(Rational::zero())
            } else {
                None
            };
            if let Some(lambda) = lambda {
                violations.push(Violation {
                    segment: a,
                    target: ViolationTarget::Workspace,
                    lambda,
                });
            }
        }
    }
    violations.sort_by_key(|v| v.segment);
    VerificationReport {
        ok: violations.is_empty(),
        violations,
    }
}
