use std::time::{Duration, Instant};

use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geometry::{segment_intersects, Segment};
use crate::hop::reach_cone_times;
use crate::model::{Instance, Mms, Plan, Point};
use crate::numeric::{
    add, int, lp_optimize, norm_inf, scale, sub, to_f64, Direction, LinearConstraint, LpOutcome,
    Rational,
};
use crate::planner::{assemble_plan, PlanError, WaypointWitness};

#[derive(Debug, Clone, PartialEq)]
pub struct RrtParams {
    /// Probability of sampling the target.
    pub goal_bias: f64,
    /// Longest extension, in the max norm.
    pub step: Rational,
    pub max_iters: usize,
    pub seed: u64,
    /// Wall-clock cap on top of `max_iters`.
    pub time_limit: Option<Duration>,
}

impl Default for RrtParams {
    fn default() -> Self {
        Self {
            goal_bias: 0.05,
            step: int(1),
            max_iters: 20_000,
            seed: 0,
            time_limit: None,
        }
    }
}

impl RrtParams {
    /// Step of `1/divisions` of the longest workspace side.
    pub fn scaled_to(instance: &Instance, divisions: i64) -> Self {
        let side = instance
            .workspace
            .as_ref()
            .and_then(|w| w.bounding_box())
            .map(|(lo, hi)| norm_inf(&sub(&hi, &lo)))
            .unwrap_or_else(Rational::one);
        Self {
            step: side / int(divisions),
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RrtResult {
    /// Tree path from start to target, if found.
    pub path: Option<Vec<Point>>,
    pub nodes: usize,
    pub iterations: usize,
}

struct Steer<'a> {
    mms: &'a Mms,
    full: bool,
}

impl<'a> Steer<'a> {
    fn new(mms: &'a Mms) -> Self {
        let n = mms.dimension();
        let origin = vec![Rational::zero(); n];
        let full = (0..n).all(|i| {
            [int(1), int(-1)].into_iter().all(|s| {
                let mut e = origin.clone();
                e[i] = s;
                reach_cone_times(mms, &origin, &e).is_some()
            })
        });
        Self { mms, full }
    }

    /// The displacement in the rate cone closest to `d` in the L1 norm,
    /// shortened to at most `step` and truncated onto multiples of `grid`
    /// (coordinates for a full cone, mode times otherwise). Without the
    /// truncation, node denominators grow with tree depth.
    fn extend(&self, d: &[Rational], step: &Rational, grid: &Rational) -> Point {
        let snap = |v: &Rational| (v / grid).trunc() * grid;
        if self.full {
            let len = norm_inf(d);
            let v = if len > *step { scale(d, &(step / &len)) } else { d.to_vec() };
            return v.iter().map(snap).collect();
        }
        let n = d.len();
        let k = self.mms.modes().len();
        // Variables: t (k mode times), then e (n slacks) with |R t - d| <= e.
        let mut cons = Vec::with_capacity(2 * n + k + n);
        for i in 0..n {
            let mut row: Vec<Rational> = self.mms.modes().iter().map(|m| m.rate[i].clone()).collect();
            row.resize(k + n, Rational::zero());
            row[k + i] = -Rational::one();
            cons.push(LinearConstraint::le(row.clone(), d[i].clone()));
            let neg: Vec<Rational> = row[..k].iter().map(|v| -v).chain(row[k..].iter().cloned()).collect();
            cons.push(LinearConstraint::le(neg, -d[i].clone()));
        }
        for j in 0..k + n {
            let mut row = vec![Rational::zero(); k + n];
            row[j] = -Rational::one();
            cons.push(LinearConstraint::le(row, Rational::zero()));
        }
        let mut obj = vec![Rational::zero(); k];
        obj.extend(std::iter::repeat_n(Rational::one(), n));
        let Ok(LpOutcome::Bounded { witness, .. }) = lp_optimize(&obj, &cons, Direction::Minimize) else {
            return vec![Rational::zero(); n];
        };
        let combine = |t: &[Rational]| {
            let mut v = vec![Rational::zero(); n];
            for (m, tm) in self.mms.modes().iter().zip(t) {
                v = add(&v, &scale(&m.rate, tm));
            }
            v
        };
        let mut t = witness[..k].to_vec();
        let len = norm_inf(&combine(&t));
        if len > *step {
            t = scale(&t, &(step / &len));
        }
        combine(&t.iter().map(snap).collect::<Vec<_>>())
    }
}

fn segment_free(instance: &Instance, p: &[Rational], q: &[Rational]) -> bool {
    let seg = Segment::new(p.to_vec(), q.to_vec());
    instance.obstacles.iter().all(|o| !segment_intersects(&seg, o))
        && instance
            .workspace
            .as_ref()
            .is_none_or(|w| w.contains(q, true))
}

/// Standard RRT with cone-projected steering. Samples lie on a dyadic grid
/// over the workspace box so that every node is rational; nearest-neighbour
/// search runs in floating point, every accepted edge is checked exactly.
pub fn rrt_plan(instance: &Instance, params: &RrtParams) -> RrtResult {
    let mut out = RrtResult {
        path: None,
        nodes: 1,
        iterations: 0,
    };
    let Some((lo, hi)) = instance.workspace.as_ref().and_then(|w| w.bounding_box()) else {
        return out;
    };
    let steer = Steer::new(&instance.mms);
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let target = &instance.target;
    let mut nodes: Vec<Point> = vec![instance.start.clone()];
    let mut approx: Vec<Vec<f64>> = vec![nodes[0].iter().map(to_f64).collect()];
    let mut parent: Vec<usize> = vec![0];
    const GRID: i64 = 1 << 12;
    let grid = norm_inf(&sub(&hi, &lo)) / int(1 << 16);

    let closes = |x: &Point| {
        norm_inf(&sub(target, x)) <= params.step
            && segment_free(instance, x, target)
            && (steer.full || reach_cone_times(&instance.mms, x, target).is_some())
    };
    let trace = |mut i: usize, parent: &[usize], nodes: &[Point]| {
        let mut path = vec![target.clone()];
        loop {
            path.push(nodes[i].clone());
            if i == 0 {
                break;
            }
            i = parent[i];
        }
        path.reverse();
        path
    };
    if closes(&nodes[0]) {
        out.path = Some(trace(0, &parent, &nodes));
        return out;
    }
    let t0 = Instant::now();
    for it in 1..=params.max_iters {
        if params.time_limit.is_some_and(|l| t0.elapsed() >= l) {
            break;
        }
        out.iterations = it;
        let sample: Point = if rng.gen_bool(params.goal_bias.clamp(0.0, 1.0)) {
            target.clone()
        } else {
            lo.iter()
                .zip(&hi)
                .map(|(a, b)| a + (b - a) * Rational::new(rng.gen_range(1..GRID).into(), GRID.into()))
                .collect()
        };
        let sf: Vec<f64> = sample.iter().map(to_f64).collect();
        let near = approx
            .iter()
            .enumerate()
            .map(|(i, p)| (i, p.iter().zip(&sf).map(|(a, b)| (a - b) * (a - b)).sum::<f64>()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(i, _)| i)
            .unwrap();
        let from = &nodes[near];
        let v = steer.extend(&sub(&sample, from), &params.step, &grid);
        if v.iter().all(Zero::is_zero) {
            continue;
        }
        let new = add(from, &v);
        if !segment_free(instance, from, &new) {
            continue;
        }
        approx.push(new.iter().map(to_f64).collect());
        nodes.push(new);
        parent.push(near);
        out.nodes = nodes.len();
        let last = nodes.len() - 1;
        if closes(&nodes[last]) {
            out.path = Some(trace(last, &parent, &nodes));
            return out;
        }
    }
    out
}

/// Turns an RRT path into a schedule that passes exact verification.
pub fn path_to_plan(instance: &Instance, path: &[Point]) -> Result<Plan, PlanError> {
    let mut times = Vec::with_capacity(path.len().saturating_sub(1));
    for (i, w) in path.windows(2).enumerate() {
        let t = reach_cone_times(&instance.mms, &w[0], &w[1])
            .ok_or_else(|| PlanError::Hop(i, "segment outside the rate cone".into()))?;
        debug_assert!(t.0.iter().all(|v| !v.is_negative()));
        times.push(t);
    }
    assemble_plan(
        instance,
        &WaypointWitness {
            waypoints: path.to_vec(),
            times,
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::{gen_arena, ArenaFamily, ArenaParams};
    use crate::geometry::Polytope;
    use crate::numeric::ratio;

    fn open_box() -> Instance {
        Instance::new(
            Mms::axis_modes(2),
            vec![],
            Some(Polytope::from_box(&[int(0), int(0)], &[int(10), int(10)])),
            vec![int(1), int(1)],
            vec![int(9), int(8)],
        )
        .unwrap()
    }

    #[test]
    fn finds_and_verifies_in_open_box() {
        let inst = open_box();
        let r = rrt_plan(&inst, &RrtParams::default());
        let path = r.path.expect("path");
        assert_eq!(path.first(), Some(&inst.start));
        assert_eq!(path.last(), Some(&inst.target));
        assert!(path_to_plan(&inst, &path).unwrap().verified);
    }

    #[test]
    fn full_goal_bias_grows_straight() {
        let inst = open_box();
        let params = RrtParams {
            goal_bias: 1.0,
            ..RrtParams::default()
        };
        let r = rrt_plan(&inst, &params);
        assert!(r.path.is_some());
        // Distance 8 in the max norm at step 1.
        assert!(r.iterations <= 8, "{}", r.iterations);
    }

    #[test]
    fn seed_determinism() {
        let inst = gen_arena(&ArenaParams::new(ArenaFamily::LShaped, 2, int(4))).unwrap();
        let p = RrtParams {
            step: ratio(1, 5),
            seed: 7,
            ..RrtParams::default()
        };
        assert_eq!(rrt_plan(&inst, &p), rrt_plan(&inst, &p));
    }

    #[test]
    fn steering_stays_in_cone() {
        // Only +x and +y: a move towards the lower left is impossible.
        let mms = Mms::from_rates(2, [("e", vec![int(1), int(0)]), ("n", vec![int(0), int(1)])]).unwrap();
        let s = Steer::new(&mms);
        assert!(!s.full);
        let g = ratio(1, 8);
        assert_eq!(s.extend(&[int(3), int(-2)], &int(5), &g), vec![int(3), int(0)]);
        assert_eq!(s.extend(&[int(3), int(-2)], &int(2), &g), vec![int(2), int(0)]);
        assert_eq!(s.extend(&[int(-1), int(-1)], &int(5), &g), vec![int(0), int(0)]);
        let axes = Mms::axis_modes(2);
        let full = Steer::new(&axes);
        // (1, -1/3) truncated towards zero onto eighths.
        assert_eq!(full.extend(&[int(3), int(-1)], &int(1), &g), vec![int(1), ratio(-1, 4)]);
    }
}
