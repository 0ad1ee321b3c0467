//! H-polytopes, fixed-endpoint segment tests and L∞ clearance.

use num_traits::{Signed, Zero};
use thiserror::Error;

use crate::model::{Instance, Point};
use crate::numeric::{
    dot, interval_emptiness_1d, lp_feasible, lp_optimize, norm_1, one, sub, Direction, Extended,
    Interval1d, LinearConstraint, LpOutcome, Rational, Relation, SlopeAtom,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GeometryError {
    #[error("row {row} has {found} coefficients, expected {expected}")]
    DimensionMismatch {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("row {0} has a zero normal with a negative offset")]
    UnsatisfiableRow(usize),
}

/// One closed halfspace `normal · x ≤ offset`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Halfspace {
    pub normal: Vec<Rational>,
    pub offset: Rational,
}

impl Halfspace {
    pub fn new(normal: Vec<Rational>, offset: Rational) -> Self {
        Self { normal, offset }
    }

    /// `offset - normal · x`; positive strictly inside.
    pub fn slack(&self, x: &[Rational]) -> Rational {
        &self.offset - dot(&self.normal, x)
    }
}

/// `{x : A x ≤ b}`, or its interior when used as an open set.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Polytope {
    dimension: usize,
    rows: Vec<Halfspace>,
}

impl Polytope {
    /// Validates dimensions and drops vacuous zero rows.
    pub fn new(dimension: usize, rows: Vec<Halfspace>) -> Result<Self, GeometryError> {
        let mut kept = Vec::with_capacity(rows.len());
        for (i, row) in rows.into_iter().enumerate() {
            if row.normal.len() != dimension {
                return Err(GeometryError::DimensionMismatch {
                    row: i,
                    expected: dimension,
                    found: row.normal.len(),
                });
            }
            if row.normal.iter().all(Zero::is_zero) {
                if row.offset.is_negative() {
                    return Err(GeometryError::UnsatisfiableRow(i));
                }
                continue;
            }
            kept.push(row);
        }
        Ok(Self {
            dimension,
            rows: kept,
        })
    }

    /// Axis-aligned box `[lo, hi]`.
    pub fn from_box(lo: &[Rational], hi: &[Rational]) -> Self {
        let n = lo.len();
        let mut rows = Vec::with_capacity(2 * n);
        for i in 0..n {
            let mut up = vec![Rational::zero(); n];
            up[i] = one();
            rows.push(Halfspace::new(up, hi[i].clone()));
            let mut down = vec![Rational::zero(); n];
            down[i] = -one();
            rows.push(Halfspace::new(down, -lo[i].clone()));
        }
        Self { dimension: n, rows }
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn rows(&self) -> &[Halfspace] {
        &self.rows
    }

    pub fn contains(&self, x: &[Rational], strictly: bool) -> bool {
        self.rows.iter().all(|r| {
            let s = r.slack(x);
            if strictly {
                s.is_positive()
            } else {
                !s.is_negative()
            }
        })
    }

    /// Constraints `A x ≤ b` (or `<` when `strict`) over exactly `n` variables.
    pub fn constraints(&self, strict: bool) -> Vec<LinearConstraint> {
        let rel = if strict { Relation::Lt } else { Relation::Le };
        self.rows
            .iter()
            .map(|r| LinearConstraint::new(r.normal.clone(), rel, r.offset.clone()))
            .collect()
    }

    /// Same constraints embedded into a wider variable vector at `offset`.
    pub fn constraints_embedded(
        &self,
        strict: bool,
        nvars: usize,
        offset: usize,
    ) -> Vec<LinearConstraint> {
        let rel = if strict { Relation::Lt } else { Relation::Le };
        self.rows
            .iter()
            .map(|r| {
                let mut c = vec![Rational::zero(); nvars];
                c[offset..offset + self.dimension].clone_from_slice(&r.normal);
                LinearConstraint::new(c, rel, r.offset.clone())
            })
            .collect()
    }

    pub fn is_empty(&self) -> bool {
        matches!(
            lp_feasible(&self.constraints(false), self.dimension),
            Ok(LpOutcome::Infeasible)
        )
    }

    pub fn has_interior(&self) -> bool {
        matches!(
            lp_feasible(&self.constraints(true), self.dimension),
            Ok(LpOutcome::Feasible(_))
        )
    }

    /// Exact coordinate range `[min, max]` along axis `i`; `None` if unbounded or empty.
    pub fn axis_range(&self, i: usize) -> Option<(Rational, Rational)> {
        let mut obj = vec![Rational::zero(); self.dimension];
        obj[i] = one();
        let cons = self.constraints(false);
        let lo = lp_optimize(&obj, &cons, Direction::Minimize).ok()?;
        let hi = lp_optimize(&obj, &cons, Direction::Maximize).ok()?;
        match (lo, hi) {
            (LpOutcome::Bounded { value: a, .. }, LpOutcome::Bounded { value: b, .. }) => {
                Some((a, b))
            }
            _ => None,
        }
    }

    pub fn bounding_box(&self) -> Option<(Point, Point)> {
        let mut lo = Vec::with_capacity(self.dimension);
        let mut hi = Vec::with_capacity(self.dimension);
        for i in 0..self.dimension {
            let (a, b) = self.axis_range(i)?;
            lo.push(a);
            hi.push(b);
        }
        Some((lo, hi))
    }
}

/// The segment `{λ p + (1-λ) q : λ ∈ [0,1]}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segment {
    pub p: Point,
    pub q: Point,
}

impl Segment {
    pub fn new(p: Point, q: Point) -> Self {
        Self { p, q }
    }

    pub fn at(&self, lambda: &Rational) -> Point {
        self.p
            .iter()
            .zip(&self.q)
            .map(|(p, q)| q + lambda * (p - q))
            .collect()
    }
}

/// Per-row atoms `α_j λ ≤ β_j` with `α_j = a_j·(p−q)`, `β_j = b_j − a_j·q`.
pub fn segment_atoms(seg: &Segment, poly: &Polytope) -> Vec<SlopeAtom> {
    let d = sub(&seg.p, &seg.q);
    poly.rows
        .iter()
        .map(|r| SlopeAtom::new(dot(&r.normal, &d), Relation::Le, r.slack(&seg.q)))
        .collect()
}

/// A parameter `λ` at which the segment meets the closed obstacle, if any.
pub fn segment_hit(seg: &Segment, obstacle: &Polytope) -> Option<Rational> {
    // Both endpoints strictly outside one row: no contact.
    if obstacle
        .rows
        .iter()
        .any(|r| r.slack(&seg.p).is_negative() && r.slack(&seg.q).is_negative())
    {
        return None;
    }
    let atoms = segment_atoms(seg, obstacle);
    match interval_emptiness_1d(&atoms, &Rational::zero(), &one()) {
        Ok(Interval1d::NonEmpty(l)) => Some(l),
        _ => None,
    }
}

pub fn segment_intersects(seg: &Segment, obstacle: &Polytope) -> bool {
    segment_hit(seg, obstacle).is_some()
}

/// Exact L∞ distance between the segment and a closed polytope; `Infinity`
/// when the polytope is empty.
pub fn segment_obstacle_distance(seg: &Segment, obstacle: &Polytope) -> Extended {
    // Variables: λ, y_1..y_n, d.
    let n = seg.p.len();
    let nvars = n + 2;
    let d_idx = n + 1;
    let dir = sub(&seg.p, &seg.q);
    let mut cons = obstacle.constraints_embedded(false, nvars, 1);
    for i in 0..n {
        // x(λ)_i - y_i <= d and y_i - x(λ)_i <= d, with x(λ)_i = q_i + λ dir_i.
        let mut up = vec![Rational::zero(); nvars];
        up[0] = dir[i].clone();
        up[1 + i] = -one();
        up[d_idx] = -one();
        cons.push(LinearConstraint::le(up, -seg.q[i].clone()));
        let mut down = vec![Rational::zero(); nvars];
        down[0] = -dir[i].clone();
        down[1 + i] = one();
        down[d_idx] = -one();
        cons.push(LinearConstraint::le(down, seg.q[i].clone()));
    }
    let mut lam_lo = vec![Rational::zero(); nvars];
    lam_lo[0] = -one();
    cons.push(LinearConstraint::le(lam_lo, Rational::zero()));
    let mut lam_hi = vec![Rational::zero(); nvars];
    lam_hi[0] = one();
    cons.push(LinearConstraint::le(lam_hi, one()));
    let mut obj = vec![Rational::zero(); nvars];
    obj[d_idx] = one();
    match lp_optimize(&obj, &cons, Direction::Minimize) {
        Ok(LpOutcome::Bounded { value, .. }) => Extended::Finite(value),
        _ => Extended::Infinity,
    }
}

/// L∞ distance from `x` to the outside `{a·y > b}` of one facet.
pub fn facet_distance(row: &Halfspace, x: &[Rational]) -> Rational {
    row.slack(x) / norm_1(&row.normal)
}

/// Minimum L∞ clearance of the segment to all obstacles and to the outside of
/// the workspace. Zero means the segment grazes (or leaves) the safety set.
pub fn segment_clearance(seg: &Segment, instance: &Instance) -> Extended {
    let mut eps = Extended::Infinity;
    for o in &instance.obstacles {
        eps = eps.min_with(segment_obstacle_distance(seg, o));
    }
    if let Some(w) = &instance.workspace {
        for row in w.rows() {
            // Linear in λ, so the minimum sits at an endpoint.
            let a = facet_distance(row, &seg.p);
            let b = facet_distance(row, &seg.q);
            let m = if a < b { a } else { b };
            let m = if m.is_negative() { Rational::zero() } else { m };
            eps = eps.min_with(Extended::Finite(m));
        }
    }
    eps
}

/// Vertices of a bounded 2-D polytope in counter-clockwise order.
pub fn polygon_vertices(poly: &Polytope) -> Vec<Point> {
    assert_eq!(poly.dimension(), 2, "polygon_vertices needs a 2-D polytope");
    let rows = poly.rows();
    let mut pts: Vec<Point> = Vec::new();
    for i in 0..rows.len() {
        for j in i + 1..rows.len() {
            let (a, b) = (&rows[i], &rows[j]);
            let det = &a.normal[0] * &b.normal[1] - &a.normal[1] * &b.normal[0];
            if det.is_zero() {
                continue;
            }
            let x = (&a.offset * &b.normal[1] - &b.offset * &a.normal[1]) / &det;
            let y = (&a.normal[0] * &b.offset - &b.normal[0] * &a.offset) / &det;
            let p = vec![x, y];
            if poly.contains(&p, false) && !pts.contains(&p) {
                pts.push(p);
            }
        }
    }
    if pts.len() < 3 {
        return pts;
    }
    let cx: Rational = pts.iter().map(|p| p[0].clone()).sum::<Rational>()
        / Rational::from_integer(pts.len().into());
    let cy: Rational = pts.iter().map(|p| p[1].clone()).sum::<Rational>()
        / Rational::from_integer(pts.len().into());
    pts.sort_by(|a, b| {
        let angle = |p: &Point| {
            (crate::numeric::to_f64(&(&p[1] - &cy))).atan2(crate::numeric::to_f64(&(&p[0] - &cx)))
        };
        angle(a).total_cmp(&angle(b))
    });
    pts
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::{int, ratio};

    fn unit_square() -> Polytope {
        Polytope::from_box(&[int(1), int(1)], &[int(2), int(2)])
    }

    fn pt(c: &[(i64, i64)]) -> Point {
        c.iter().map(|&(n, d)| ratio(n, d)).collect()
    }

    #[test]
    fn membership() {
        let s = unit_square();
        assert!(s.contains(&pt(&[(3, 2), (3, 2)]), true));
        assert!(!s.contains(&pt(&[(1, 1), (3, 2)]), true));
        assert!(s.contains(&pt(&[(1, 1), (3, 2)]), false));
        assert!(!s.contains(&pt(&[(0, 1), (0, 1)]), false));
    }

    #[test]
    fn diagonal_crosses_square() {
        let seg = Segment::new(pt(&[(0, 1), (0, 1)]), pt(&[(3, 1), (3, 1)]));
        assert!(segment_intersects(&seg, &unit_square()));
        let hit = segment_hit(&seg, &unit_square()).unwrap();
        assert!(hit >= ratio(1, 3) && hit <= ratio(2, 3));
    }

    #[test]
    fn segment_above_square_misses() {
        let seg = Segment::new(pt(&[(0, 1), (3, 1)]), pt(&[(3, 1), (3, 1)]));
        assert!(!segment_intersects(&seg, &unit_square()));
    }

    #[test]
    fn degenerate_segments() {
        let inside = pt(&[(3, 2), (3, 2)]);
        let outside = pt(&[(5, 1), (3, 2)]);
        assert!(segment_intersects(&Segment::new(inside.clone(), inside), &unit_square()));
        assert!(!segment_intersects(&Segment::new(outside.clone(), outside), &unit_square()));
    }

    #[test]
    fn zero_rows_dropped_or_rejected() {
        let ok = Polytope::new(2, vec![Halfspace::new(vec![int(0), int(0)], int(1))]).unwrap();
        assert!(ok.rows().is_empty());
        assert_eq!(
            Polytope::new(2, vec![Halfspace::new(vec![int(0), int(0)], int(-1))]),
            Err(GeometryError::UnsatisfiableRow(0))
        );
    }

    #[test]
    fn distance_to_square() {
        let seg = Segment::new(pt(&[(1, 2), (1, 2)]), pt(&[(1, 2), (7, 2)]));
        assert_eq!(
            segment_obstacle_distance(&seg, &unit_square()),
            Extended::Finite(ratio(1, 2))
        );
        let touching = Segment::new(pt(&[(0, 1), (0, 1)]), pt(&[(1, 1), (1, 1)]));
        assert_eq!(
            segment_obstacle_distance(&touching, &unit_square()),
            Extended::Finite(int(0))
        );
    }

    #[test]
    fn square_vertices() {
        let v = polygon_vertices(&unit_square());
        assert_eq!(v.len(), 4);
        assert!(v.contains(&pt(&[(1, 1), (2, 1)])));
    }

    #[test]
    fn empty_and_interior() {
        assert!(!unit_square().is_empty());
        assert!(unit_square().has_interior());
        let flat = Polytope::from_box(&[int(0), int(1)], &[int(2), int(1)]);
        assert!(!flat.is_empty());
        assert!(!flat.has_interior());
        let bad = Polytope::from_box(&[int(3), int(0)], &[int(2), int(1)]);
        assert!(bad.is_empty());
    }
}
