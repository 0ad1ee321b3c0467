//! Vertical decomposition of a 2-D box workspace, an open convex cell cover
//! of the safety set, and a complete channel-enumeration decision procedure.

use std::collections::BTreeSet;

use num_traits::{Signed, Zero};
use rayon::prelude::*;
use thiserror::Error;

use crate::geometry::{polygon_vertices, Halfspace, Polytope, Segment};
use crate::hop::{reach_cone_times, ConeTimes};
use crate::model::{Instance, Point};
use crate::numeric::{
    lp_feasible, one, Extended, LinearConstraint, LpOutcome, Rational,
};
use crate::planner::WitnessChecker;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CoverError {
    #[error("cell covers are only computed in dimension 2 (got {0})")]
    Dimension(usize),
    #[error("an axis-aligned box workspace is required")]
    Workspace,
    #[error("obstacle {0} has empty interior")]
    FlatObstacle(usize),
}

/// An open convex cell, stored by its closure's rows.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cell {
    pub id: usize,
    pub polygon: Polytope,
    pub kind: CellKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellKind {
    Trapezoid,
    /// Fattened free piece of the vertical line through a slab boundary.
    Edge,
}

impl Cell {
    pub fn contains(&self, x: &[Rational]) -> bool {
        self.polygon.contains(x, true)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cover {
    pub cells: Vec<Cell>,
    pub adjacency: Vec<Vec<usize>>,
}

impl Cover {
    /// The completeness bound on intermediate waypoints.
    pub fn bound(&self) -> usize {
        self.cells.len()
    }

    pub fn adjacent(&self, i: usize, j: usize) -> bool {
        self.adjacency[i].contains(&j)
    }

    pub fn cells_containing(&self, x: &[Rational]) -> Vec<usize> {
        self.cells
            .iter()
            .filter(|c| c.contains(x))
            .map(|c| c.id)
            .collect()
    }
}

/// Workspace box `[x0, x1] × [y0, y1]`.
#[derive(Debug, Clone, PartialEq, Eq)]
struct Frame {
    x0: Rational,
    x1: Rational,
    y0: Rational,
    y1: Rational,
}

fn frame_of(instance: &Instance) -> Result<Frame, CoverError> {
    let n = instance.dimension();
    if n != 2 {
        return Err(CoverError::Dimension(n));
    }
    let ws = instance.workspace.as_ref().ok_or(CoverError::Workspace)?;
    let axis_aligned = ws
        .rows()
        .iter()
        .all(|r| r.normal.iter().filter(|a| !a.is_zero()).count() == 1);
    if !axis_aligned {
        return Err(CoverError::Workspace);
    }
    let (lo, hi) = ws.bounding_box().ok_or(CoverError::Workspace)?;
    if lo[0] >= hi[0] || lo[1] >= hi[1] {
        return Err(CoverError::Workspace);
    }
    Ok(Frame {
        x0: lo[0].clone(),
        x1: hi[0].clone(),
        y0: lo[1].clone(),
        y1: hi[1].clone(),
    })
}

fn frame_box(f: &Frame) -> Polytope {
    Polytope::from_box(&[f.x0.clone(), f.y0.clone()], &[f.x1.clone(), f.y1.clone()])
}

/// Obstacles clipped to the workspace box; those missing it are dropped.
fn clipped_obstacles(instance: &Instance, f: &Frame) -> Result<Vec<Polytope>, CoverError> {
    let bx = frame_box(f);
    let mut out = Vec::new();
    for (i, o) in instance.obstacles.iter().enumerate() {
        if !o.has_interior() {
            return Err(CoverError::FlatObstacle(i));
        }
        let mut rows = o.rows().to_vec();
        rows.extend(bx.rows().iter().cloned());
        let clipped = Polytope::new(2, rows).expect("2-D rows");
        if clipped.is_empty() {
            continue;
        }
        out.push(clipped);
    }
    Ok(out)
}

/// Vertical extent of a closed convex polygon on the line `x = c`.
fn extent_at(o: &Polytope, x: &Rational) -> Option<(Rational, Rational)> {
    let mut lo: Option<Rational> = None;
    let mut hi: Option<Rational> = None;
    for r in o.rows() {
        let (ax, ay) = (&r.normal[0], &r.normal[1]);
        let rest = &r.offset - ax * x;
        if ay.is_zero() {
            if rest.is_negative() {
                return None;
            }
            continue;
        }
        let v = rest / ay;
        if ay.is_positive() {
            hi = Some(match hi {
                Some(h) if h < v => h,
                _ => v,
            });
        } else {
            lo = Some(match lo {
                Some(l) if l > v => l,
                _ => v,
            });
        }
    }
    match (lo, hi) {
        (Some(l), Some(h)) if l <= h => Some((l, h)),
        _ => None,
    }
}

/// The active facet row bounding `o` from above (or below) at `x`.
fn active_row(o: &Polytope, x: &Rational, upper: bool) -> Halfspace {
    o.rows()
        .iter()
        .filter(|r| {
            if upper {
                r.normal[1].is_positive()
            } else {
                r.normal[1].is_negative()
            }
        })
        .min_by(|a, b| {
            let va = (&a.offset - &a.normal[0] * x) / &a.normal[1];
            let vb = (&b.offset - &b.normal[0] * x) / &b.normal[1];
            if upper {
                va.cmp(&vb)
            } else {
                vb.cmp(&va)
            }
        })
        .cloned()
        .expect("bounded polygon has upper and lower facets")
}

fn breakpoints(f: &Frame, obstacles: &[Polytope]) -> Vec<Rational> {
    let mut xs: BTreeSet<Rational> = BTreeSet::new();
    xs.insert(f.x0.clone());
    xs.insert(f.x1.clone());
    let mut edges: Vec<(usize, Point, Point)> = Vec::new();
    for (i, o) in obstacles.iter().enumerate() {
        let vs = polygon_vertices(o);
        for v in &vs {
            xs.insert(v[0].clone());
        }
        for k in 0..vs.len() {
            let (a, b) = (&vs[k], &vs[(k + 1) % vs.len()]);
            if a[0] != b[0] {
                edges.push((i, a.clone(), b.clone()));
            }
        }
    }
    // Crossings between edges of different obstacles.
    for (ei, (oi, a, b)) in edges.iter().enumerate() {
        for (oj, c, d) in edges.iter().skip(ei + 1) {
            if oi == oj {
                continue;
            }
            let r = [&b[0] - &a[0], &b[1] - &a[1]];
            let s = [&d[0] - &c[0], &d[1] - &c[1]];
            let den = &r[0] * &s[1] - &r[1] * &s[0];
            if den.is_zero() {
                continue;
            }
            let w = [&c[0] - &a[0], &c[1] - &a[1]];
            let t = (&w[0] * &s[1] - &w[1] * &s[0]) / &den;
            let u = (&w[0] * &r[1] - &w[1] * &r[0]) / &den;
            let unit = |v: &Rational| !v.is_negative() && *v <= one();
            if unit(&t) && unit(&u) {
                xs.insert(&a[0] + &t * &r[0]);
            }
        }
    }
    xs.into_iter().filter(|x| *x >= f.x0 && *x <= f.x1).collect()
}

/// Merged closed intervals of obstacle extents on the vertical line `x`,
/// each tagged with the obstacles realizing its bottom and top.
fn blocked_at(obstacles: &[Polytope], x: &Rational) -> Vec<(Rational, Rational, usize, usize)> {
    let mut spans: Vec<(Rational, Rational, usize)> = obstacles
        .iter()
        .enumerate()
        .filter_map(|(i, o)| extent_at(o, x).map(|(l, h)| (l, h, i)))
        .collect();
    spans.sort_by(|a, b| a.0.cmp(&b.0));
    let mut merged: Vec<(Rational, Rational, usize, usize)> = Vec::new();
    for (l, h, i) in spans {
        match merged.last_mut() {
            Some(m) if l <= m.1 => {
                if h > m.1 {
                    m.1 = h;
                    m.3 = i;
                }
            }
            _ => merged.push((l, h, i, i)),
        }
    }
    merged
}

/// Closed trapezoids (as row sets) of the free space, slab by slab.
pub fn vertical_decomposition(instance: &Instance) -> Result<Vec<Polytope>, CoverError> {
    let f = frame_of(instance)?;
    let obstacles = clipped_obstacles(instance, &f)?;
    let xs = breakpoints(&f, &obstacles);
    let two = Rational::from_integer(2.into());
    let mut cells = Vec::new();
    for w in xs.windows(2) {
        let (xa, xb) = (&w[0], &w[1]);
        let xm = (xa + xb) / &two;
        let slab = [
            Halfspace::new(vec![one(), Rational::zero()], xb.clone()),
            Halfspace::new(vec![-one(), Rational::zero()], -xa.clone()),
        ];
        let blocked = blocked_at(&obstacles, &xm);
        // Walk gaps bottom to top; `below` is the obstacle under the gap.
        let mut below: Option<usize> = None;
        let mut bottom = f.y0.clone();
        let mut gaps = Vec::new();
        for (l, h, first, last) in &blocked {
            if *l > bottom {
                gaps.push((below, Some(*first)));
            }
            if *h > bottom {
                bottom = h.clone();
            }
            below = Some(*last);
        }
        if bottom < f.y1 {
            gaps.push((below, None));
        }
        for (lo_obs, hi_obs) in gaps {
            let mut rows = slab.to_vec();
            match lo_obs {
                Some(i) => {
                    let r = active_row(&obstacles[i], &xm, true);
                    rows.push(Halfspace::new(r.normal.iter().map(|a| -a).collect(), -r.offset));
                }
                None => rows.push(Halfspace::new(vec![Rational::zero(), -one()], -f.y0.clone())),
            }
            match hi_obs {
                Some(i) => {
                    let r = active_row(&obstacles[i], &xm, false);
                    rows.push(Halfspace::new(r.normal.iter().map(|a| -a).collect(), -r.offset));
                }
                None => rows.push(Halfspace::new(vec![Rational::zero(), one()], f.y1.clone())),
            }
            let cell = Polytope::new(2, rows).expect("2-D rows");
            if cell.has_interior() {
                cells.push(cell);
            }
        }
    }
    Ok(cells)
}

/// Halfspace rows of a convex polygon from its counter-clockwise vertices.
fn polygon_from_ccw(vs: &[Point]) -> Polytope {
    let mut rows = Vec::with_capacity(vs.len());
    for k in 0..vs.len() {
        let (u, v) = (&vs[k], &vs[(k + 1) % vs.len()]);
        let normal = vec![&v[1] - &u[1], &u[0] - &v[0]];
        let offset = &normal[0] * &u[0] + &normal[1] * &u[1];
        rows.push(Halfspace::new(normal, offset));
    }
    Polytope::new(2, rows).expect("2-D rows")
}

fn open_meets_closed(open: &Polytope, closed: &Polytope) -> bool {
    let mut cons = open.constraints(true);
    cons.extend(closed.constraints(false));
    matches!(lp_feasible(&cons, 2), Ok(LpOutcome::Feasible(_)))
}

fn open_meets_open(a: &Polytope, b: &Polytope) -> bool {
    let mut cons: Vec<LinearConstraint> = a.constraints(true);
    cons.extend(b.constraints(true));
    matches!(lp_feasible(&cons, 2), Ok(LpOutcome::Feasible(_)))
}

/// L∞ clearance of a point to the obstacles and the box boundary.
fn point_clearance(x: &[Rational], obstacles: &[Polytope], f: &Frame) -> Rational {
    let seg = Segment::new(x.to_vec(), x.to_vec());
    let mut best = [&x[0] - &f.x0, &f.x1 - &x[0], &x[1] - &f.y0, &f.y1 - &x[1]]
        .into_iter()
        .min()
        .unwrap();
    for o in obstacles {
        if let Extended::Finite(d) = crate::geometry::segment_obstacle_distance(&seg, o) {
            if d < best {
                best = d;
            }
        }
    }
    best
}

/// Fattened cells for the free open pieces of interior slab boundaries.
fn edge_cells(f: &Frame, obstacles: &[Polytope], xs: &[Rational]) -> Vec<Polytope> {
    let two = Rational::from_integer(2.into());
    let mut out = Vec::new();
    for x in xs.iter().filter(|x| **x > f.x0 && **x < f.x1) {
        let blocked = blocked_at(obstacles, x);
        let mut bottom = f.y0.clone();
        let mut pieces = Vec::new();
        for (l, h, _, _) in &blocked {
            if *l > bottom {
                pieces.push((bottom.clone(), l.clone()));
            }
            if *h > bottom {
                bottom = h.clone();
            }
        }
        if bottom < f.y1 {
            pieces.push((bottom, f.y1.clone()));
        }
        for (y1, y2) in pieces {
            let ym = (&y1 + &y2) / &two;
            let mid = vec![x.clone(), ym.clone()];
            let mut delta = point_clearance(&mid, obstacles, f) / &two;
            let half_len = (&y2 - &y1) / &two;
            if delta >= half_len {
                delta = &half_len / &two;
            }
            loop {
                let hull = polygon_from_ccw(&[
                    vec![x.clone(), y1.clone()],
                    vec![x + &delta, &ym - &delta],
                    vec![x + &delta, &ym + &delta],
                    vec![x.clone(), y2.clone()],
                    vec![x - &delta, &ym + &delta],
                    vec![x - &delta, &ym - &delta],
                ]);
                let inside_box = polygon_vertices(&hull).iter().all(|v| frame_box(f).contains(v, false));
                if inside_box && !obstacles.iter().any(|o| open_meets_closed(&hull, o)) {
                    out.push(hull);
                    break;
                }
                delta /= &two;
            }
        }
    }
    out
}

fn x_range(p: &Polytope) -> (Rational, Rational) {
    p.axis_range(0).expect("bounded cell")
}

/// Open trapezoids plus fattened slab-boundary cells, with LP adjacency.
pub fn build_cover(instance: &Instance) -> Result<Cover, CoverError> {
    let f = frame_of(instance)?;
    let obstacles = clipped_obstacles(instance, &f)?;
    let xs = breakpoints(&f, &obstacles);
    let mut polys = vertical_decomposition(instance)?;
    let n_trap = polys.len();
    polys.extend(edge_cells(&f, &obstacles, &xs));
    let cells: Vec<Cell> = polys
        .into_iter()
        .enumerate()
        .map(|(id, polygon)| {
            let kind = if id < n_trap { CellKind::Trapezoid } else { CellKind::Edge };
            Cell { id, polygon, kind }
        })
        .collect();
    let ranges: Vec<_> = cells.iter().map(|c| x_range(&c.polygon)).collect();
    let pairs: Vec<(usize, usize)> = (0..cells.len())
        .flat_map(|i| (i + 1..cells.len()).map(move |j| (i, j)))
        .filter(|&(i, j)| ranges[i].0 < ranges[j].1 && ranges[j].0 < ranges[i].1)
        .collect();
    let edges: Vec<(usize, usize)> = pairs
        .into_par_iter()
        .filter(|&(i, j)| open_meets_open(&cells[i].polygon, &cells[j].polygon))
        .collect();
    let mut adjacency = vec![Vec::new(); cells.len()];
    for (i, j) in edges {
        adjacency[i].push(j);
        adjacency[j].push(i);
    }
    for a in adjacency.iter_mut() {
        a.sort_unstable();
    }
    Ok(Cover { cells, adjacency })
}

/// Strict constraints placing waypoints and times for a channel. Variables:
/// intermediate waypoints `x_1..x_{N-1}` (2 each), then `N·|M|` times.
fn channel_system(instance: &Instance, cover: &Cover, channel: &[usize], open_end: bool) -> (Vec<LinearConstraint>, usize) {
    let n = 2;
    let m = instance.mms.modes().len();
    let hops = channel.len();
    // With an open end the last point is a free variable inside the last cell.
    let n_way = if open_end { channel.len() } else { channel.len() - 1 };
    let nvars = n * n_way + m * hops;
    let t_off = n * n_way;
    let mut cons = Vec::new();
    for (i, &c) in channel.iter().enumerate() {
        // Waypoint i+1 sits in cell c and, unless it is the open end, also the next cell.
        if i < n_way {
            let poly = &cover.cells[c].polygon;
            cons.extend(poly.constraints_embedded(true, nvars, n * i));
            if i + 1 < channel.len() {
                let next = &cover.cells[channel[i + 1]].polygon;
                cons.extend(next.constraints_embedded(true, nvars, n * i));
            }
        }
    }
    for hop in 0..hops {
        for j in 0..m {
            let mut row = vec![Rational::zero(); nvars];
            row[t_off + hop * m + j] = -one();
            cons.push(LinearConstraint::le(row, Rational::zero()));
        }
        // x_{hop+1} - x_hop - Σ R t = 0
        for d in 0..n {
            let mut row = vec![Rational::zero(); nvars];
            let mut rhs = Rational::zero();
            if hop < n_way {
                row[n * hop + d] += one();
            } else {
                rhs += &instance.target[d];
            }
            if hop == 0 {
                rhs -= &instance.start[d];
            } else {
                row[n * (hop - 1) + d] -= one();
            }
            for (j, mode) in instance.mms.modes().iter().enumerate() {
                row[t_off + hop * m + j] = -mode.rate[d].clone();
            }
            // Move constants to the right-hand side.
            cons.push(LinearConstraint::eq(row, -rhs));
        }
    }
    (cons, nvars)
}

fn solve_channel(instance: &Instance, cover: &Cover, channel: &[usize], open_end: bool) -> Option<Vec<Rational>> {
    let (cons, nvars) = channel_system(instance, cover, channel, open_end);
    match lp_feasible(&cons, nvars) {
        Ok(LpOutcome::Feasible(w)) => Some(w),
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ChannelVerdict {
    Reachable {
        channel: Vec<usize>,
        /// `x_s, x_1, ..., x_t` after shortcutting.
        waypoints: Vec<Point>,
        times: Vec<ConeTimes>,
    },
    Unreachable,
}

impl ChannelVerdict {
    pub fn is_reachable(&self) -> bool {
        matches!(self, ChannelVerdict::Reachable { .. })
    }

    pub fn witness_length(&self) -> Option<usize> {
        match self {
            ChannelVerdict::Reachable { waypoints, .. } => Some(waypoints.len() - 1),
            ChannelVerdict::Unreachable => None,
        }
    }
}

fn reaches_target(cover: &Cover, from: usize, goals: &[bool], banned: &[bool]) -> bool {
    let mut seen = banned.to_vec();
    let mut stack = vec![from];
    seen[from] = true;
    while let Some(c) = stack.pop() {
        if goals[c] {
            return true;
        }
        for &d in &cover.adjacency[c] {
            if !seen[d] {
                seen[d] = true;
                stack.push(d);
            }
        }
    }
    false
}

struct Search<'a> {
    instance: &'a Instance,
    cover: &'a Cover,
    goals: Vec<bool>,
    on_path: Vec<bool>,
    path: Vec<usize>,
    allow_repeat: bool,
}

impl Search<'_> {
    fn dfs(&mut self) -> Option<(Vec<usize>, Vec<Rational>)> {
        let last = *self.path.last().unwrap();
        if self.goals[last] {
            if let Some(w) = solve_channel(self.instance, self.cover, &self.path, false) {
                return Some((self.path.clone(), w));
            }
        }
        if self.path.len() >= self.cover.cells.len() + usize::from(self.allow_repeat) {
            return None;
        }
        let next: Vec<usize> = self.cover.adjacency[last].clone();
        for c in next {
            let repeat = self.on_path[c];
            if repeat && !(self.allow_repeat && self.path.iter().filter(|&&p| p == c).count() < 2) {
                continue;
            }
            if !repeat && !reaches_target(self.cover, c, &self.goals, &self.on_path) {
                continue;
            }
            self.path.push(c);
            // The prefix must admit some reachable point in the newest cell.
            if solve_channel(self.instance, self.cover, &self.path, true).is_some() {
                let was = self.on_path[c];
                self.on_path[c] = true;
                if let Some(found) = self.dfs() {
                    return Some(found);
                }
                self.on_path[c] = was;
            }
            self.path.pop();
        }
        None
    }
}

/// Shortest subsequence of waypoints whose hops stay obstacle-free and in the cone.
fn shortcut(instance: &Instance, pts: &[Point]) -> (Vec<Point>, Vec<ConeTimes>) {
    let checker = WitnessChecker::new(instance);
    let n = pts.len();
    let mut best: Vec<Option<(usize, usize)>> = vec![None; n];
    best[0] = Some((0, 0));
    for j in 1..n {
        for i in 0..j {
            let Some((cost, _)) = best[i] else { continue };
            if checker.hop_is_free(&pts[i], &pts[j])
                && reach_cone_times(&instance.mms, &pts[i], &pts[j]).is_some()
                && best[j].is_none_or(|(c, _)| cost + 1 < c)
            {
                best[j] = Some((cost + 1, i));
            }
        }
    }
    let mut idx = vec![n - 1];
    while *idx.last().unwrap() != 0 {
        idx.push(best[*idx.last().unwrap()].expect("consecutive hops are valid").1);
    }
    idx.reverse();
    let wps: Vec<Point> = idx.iter().map(|&i| pts[i].clone()).collect();
    let times = wps
        .windows(2)
        .map(|w| reach_cone_times(&instance.mms, &w[0], &w[1]).expect("checked"))
        .collect();
    (wps, times)
}

/// Depth-first search over repeat-free channels from a start cell to a
/// target cell, deciding each by an exact LP.
pub fn channel_decide(instance: &Instance, cover: &Cover) -> ChannelVerdict {
    channel_decide_with(instance, cover, false)
}

/// As [`channel_decide`]; `allow_repeat` lets each cell appear twice.
pub fn channel_decide_with(instance: &Instance, cover: &Cover, allow_repeat: bool) -> ChannelVerdict {
    let starts = cover.cells_containing(&instance.start);
    let mut goals = vec![false; cover.cells.len()];
    for c in cover.cells_containing(&instance.target) {
        goals[c] = true;
    }
    for s in starts {
        let mut on_path = vec![false; cover.cells.len()];
        on_path[s] = true;
        if !reaches_target(cover, s, &goals, &vec![false; cover.cells.len()]) {
            continue;
        }
        let mut search = Search {
            instance,
            cover,
            goals: goals.clone(),
            on_path,
            path: vec![s],
            allow_repeat,
        };
        if let Some((channel, w)) = search.dfs() {
            let mut pts = vec![instance.start.clone()];
            for i in 0..channel.len() - 1 {
                pts.push(vec![w[2 * i].clone(), w[2 * i + 1].clone()]);
            }
            pts.push(instance.target.clone());
            let (waypoints, times) = shortcut(instance, &pts);
            return ChannelVerdict::Reachable {
                channel,
                waypoints,
                times,
            };
        }
    }
    ChannelVerdict::Unreachable
}

/// Area of a bounded convex polygon.
pub fn polygon_area(p: &Polytope) -> Rational {
    let vs = polygon_vertices(p);
    let mut acc = Rational::zero();
    for k in 0..vs.len() {
        let (a, b) = (&vs[k], &vs[(k + 1) % vs.len()]);
        acc += &a[0] * &b[1] - &b[0] * &a[1];
    }
    (acc / Rational::from_integer(2.into())).abs()
}

#[cfg(test)]
mod tests {
    use super::*;
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

    fn boxed(obstacles: Vec<Polytope>) -> Instance {
        Instance::new(
            Mms::axis_modes(2),
            obstacles,
            Some(Polytope::from_box(&[int(0), int(0)], &[int(4), int(4)])),
            vec![ratio(1, 10), ratio(1, 10)],
            vec![ratio(39, 10), ratio(39, 10)],
        )
        .unwrap()
    }

    #[test]
    fn lshaped_has_seven_trapezoids() {
        let inst = lshaped();
        let cells = vertical_decomposition(&inst).unwrap();
        assert_eq!(cells.len(), 7);
        let free: Rational = cells.iter().map(polygon_area).sum();
        let blocked = ratio(36, 10) * ratio(75, 100) + ratio(75, 100) * ratio(29, 10);
        assert_eq!(free, int(16) - blocked);
    }

    #[test]
    fn empty_and_single_box() {
        assert_eq!(vertical_decomposition(&boxed(vec![])).unwrap().len(), 1);
        assert_eq!(build_cover(&boxed(vec![])).unwrap().bound(), 1);
        let center = Polytope::from_box(&[int(1), int(1)], &[int(3), int(3)]);
        assert_eq!(vertical_decomposition(&boxed(vec![center])).unwrap().len(), 4);
    }

    #[test]
    fn lshaped_cover_is_connected_and_decides() {
        let inst = lshaped();
        let cover = build_cover(&inst).unwrap();
        assert!(cover.bound() > 7);
        let starts = cover.cells_containing(&inst.start);
        let mut goals = vec![false; cover.cells.len()];
        for (i, g) in goals.iter_mut().enumerate() {
            *g = i != starts[0];
        }
        assert!(reaches_target(&cover, starts[0], &goals, &vec![false; cover.cells.len()]));
        let v = channel_decide(&inst, &cover);
        assert!(v.is_reachable());
        assert!(v.witness_length().unwrap() <= 7);
    }

    #[test]
    fn cover_contains_every_safe_grid_point() {
        let inst = lshaped();
        let cover = build_cover(&inst).unwrap();
        for i in 1..80 {
            for j in 1..80 {
                let x = vec![ratio(i, 20), ratio(j, 20)];
                if inst.is_safe(&x) {
                    assert!(!cover.cells_containing(&x).is_empty(), "{x:?}");
                }
            }
        }
    }

    #[test]
    fn wall_separates() {
        let wall = Polytope::from_box(&[ratio(19, 10), int(0)], &[ratio(21, 10), int(4)]);
        let inst = boxed(vec![wall]);
        let cover = build_cover(&inst).unwrap();
        assert_eq!(channel_decide(&inst, &cover), ChannelVerdict::Unreachable);
    }

    #[test]
    fn same_cell_is_one_hop() {
        let inst = boxed(vec![]);
        let cover = build_cover(&inst).unwrap();
        match channel_decide(&inst, &cover) {
            ChannelVerdict::Reachable { channel, waypoints, .. } => {
                assert_eq!(channel.len(), 1);
                assert_eq!(waypoints.len(), 2);
            }
            v => panic!("{v:?}"),
        }
    }

    #[test]
    fn three_dimensions_refused() {
        let inst = Instance::new(Mms::axis_modes(3), vec![], None, vec![int(0); 3], vec![int(1); 3]).unwrap();
        assert_eq!(build_cover(&inst), Err(CoverError::Dimension(3)));
    }
}
