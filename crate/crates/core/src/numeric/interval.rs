use num_traits::{One, Signed, Zero};

use super::{NumericError, Rational, Relation};

/// One-variable atom `slope · λ  relation  bound`.
#[derive(Debug, Clone, PartialEq)]
pub struct SlopeAtom {
    pub slope: Rational,
    pub bound: Rational,
    pub relation: Relation,
}

impl SlopeAtom {
    pub fn new(slope: Rational, relation: Relation, bound: Rational) -> Self {
        Self {
            slope,
            bound,
            relation,
        }
    }

    pub fn holds_at(&self, lambda: &Rational) -> bool {
        let lhs = &self.slope * lambda;
        match self.relation {
            Relation::Le => lhs <= self.bound,
            Relation::Lt => lhs < self.bound,
            Relation::Eq => lhs == self.bound,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Interval1d {
    Empty,
    NonEmpty(Rational),
}

impl Interval1d {
    pub fn is_empty(&self) -> bool {
        matches!(self, Interval1d::Empty)
    }
}

/// An interval endpoint; `open` means the endpoint itself is excluded.
#[derive(Clone)]
struct End {
    at: Rational,
    open: bool,
}

fn tighten_lower(cur: &mut End, at: Rational, open: bool) {
    if at > cur.at || (at == cur.at && open && !cur.open) {
        *cur = End { at, open };
    }
}

fn tighten_upper(cur: &mut End, at: Rational, open: bool) {
    if at < cur.at || (at == cur.at && open && !cur.open) {
        *cur = End { at, open };
    }
}

/// Decides whether `{λ ∈ [lo, hi] : every atom holds}` is empty by intersecting
/// the half-lines cut out at each breakpoint `bound / slope`. Returns the
/// midpoint of the surviving interval as witness.
pub fn interval_emptiness_1d(
    atoms: &[SlopeAtom],
    lo: &Rational,
    hi: &Rational,
) -> Result<Interval1d, NumericError> {
    if lo > hi {
        return Err(NumericError::EmptyDomain);
    }
    let mut lower = End {
        at: lo.clone(),
        open: false,
    };
    let mut upper = End {
        at: hi.clone(),
        open: false,
    };
    for atom in atoms {
        if atom.slope.is_zero() {
            if !atom.holds_at(&Rational::zero()) {
                return Ok(Interval1d::Empty);
            }
            continue;
        }
        let at = &atom.bound / &atom.slope;
        match atom.relation {
            Relation::Eq => {
                tighten_lower(&mut lower, at.clone(), false);
                tighten_upper(&mut upper, at, false);
            }
            Relation::Le | Relation::Lt => {
                let open = atom.relation == Relation::Lt;
                if atom.slope.is_positive() {
                    tighten_upper(&mut upper, at, open);
                } else {
                    tighten_lower(&mut lower, at, open);
                }
            }
        }
    }
    if lower.at < upper.at {
        let mid = (&lower.at + &upper.at) / (Rational::one() + Rational::one());
        Ok(Interval1d::NonEmpty(mid))
    } else if lower.at == upper.at && !lower.open && !upper.open {
        Ok(Interval1d::NonEmpty(lower.at))
    } else {
        Ok(Interval1d::Empty)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::{int, ratio};

    fn atom(s: i64, rel: Relation, b: i64) -> SlopeAtom {
        SlopeAtom::new(int(s), rel, int(b))
    }

    #[test]
    fn breakpoint_scan_finds_middle_third() {
        let atoms = [atom(3, Relation::Le, 2), atom(-3, Relation::Le, -1)];
        let out = interval_emptiness_1d(&atoms, &int(0), &int(1)).unwrap();
        assert_eq!(out, Interval1d::NonEmpty(ratio(1, 2)));
    }

    #[test]
    fn outside_domain_is_empty() {
        let atoms = [atom(1, Relation::Le, -1)];
        assert!(interval_emptiness_1d(&atoms, &int(0), &int(1)).unwrap().is_empty());
    }

    #[test]
    fn unsatisfiable_constant_row() {
        let atoms = [atom(0, Relation::Le, -1)];
        assert!(interval_emptiness_1d(&atoms, &int(0), &int(1)).unwrap().is_empty());
    }

    #[test]
    fn touching_strict_endpoints() {
        // λ ≤ 1/2 and λ > 1/2: empty; λ ≤ 1/2 and λ ≥ 1/2: the single point.
        let a = [atom(2, Relation::Le, 1), atom(-2, Relation::Lt, -1)];
        assert!(interval_emptiness_1d(&a, &int(0), &int(1)).unwrap().is_empty());
        let b = [atom(2, Relation::Le, 1), atom(-2, Relation::Le, -1)];
        assert_eq!(
            interval_emptiness_1d(&b, &int(0), &int(1)).unwrap(),
            Interval1d::NonEmpty(ratio(1, 2))
        );
    }

    #[test]
    fn equality_pins_the_point() {
        let a = [atom(4, Relation::Eq, 1)];
        assert_eq!(
            interval_emptiness_1d(&a, &int(0), &int(1)).unwrap(),
            Interval1d::NonEmpty(ratio(1, 4))
        );
        let b = [atom(4, Relation::Eq, 8)];
        assert!(interval_emptiness_1d(&b, &int(0), &int(1)).unwrap().is_empty());
    }

    #[test]
    fn bad_domain() {
        assert_eq!(
            interval_emptiness_1d(&[], &int(1), &int(0)),
            Err(NumericError::EmptyDomain)
        );
    }
}
