//! Dense two-phase primal simplex over exact rationals with Bland's rule.

use num_traits::{One, Signed, Zero};

use super::{NumericError, Rational};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Relation {
    Le,
    Lt,
    Eq,
}

/// `coefficients · x  relation  bound`
#[derive(Debug, Clone, PartialEq)]
pub struct LinearConstraint {
    pub coefficients: Vec<Rational>,
    pub relation: Relation,
    pub bound: Rational,
}

impl LinearConstraint {
    pub fn new(coefficients: Vec<Rational>, relation: Relation, bound: Rational) -> Self {
        Self {
            coefficients,
            relation,
            bound,
        }
    }

    pub fn le(coefficients: Vec<Rational>, bound: Rational) -> Self {
        Self::new(coefficients, Relation::Le, bound)
    }

    pub fn lt(coefficients: Vec<Rational>, bound: Rational) -> Self {
        Self::new(coefficients, Relation::Lt, bound)
    }

    pub fn eq(coefficients: Vec<Rational>, bound: Rational) -> Self {
        Self::new(coefficients, Relation::Eq, bound)
    }

    /// `coefficients · x ≥ bound`, stored as its negation.
    pub fn ge(coefficients: Vec<Rational>, bound: Rational) -> Self {
        Self::le(coefficients.into_iter().map(|c| -c).collect(), -bound)
    }

    /// `coefficients · x > bound`, stored as its negation.
    pub fn gt(coefficients: Vec<Rational>, bound: Rational) -> Self {
        Self::lt(coefficients.into_iter().map(|c| -c).collect(), -bound)
    }

    pub fn is_satisfied_by(&self, point: &[Rational]) -> bool {
        let lhs: Rational = self
            .coefficients
            .iter()
            .zip(point)
            .map(|(a, x)| a * x)
            .sum();
        match self.relation {
            Relation::Le => lhs <= self.bound,
            Relation::Lt => lhs < self.bound,
            Relation::Eq => lhs == self.bound,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Feasible(Vec<Rational>),
    Infeasible,
    Bounded {
        value: Rational,
        witness: Vec<Rational>,
    },
    Unbounded,
}

impl LpOutcome {
    pub fn witness(&self) -> Option<&[Rational]> {
        match self {
            LpOutcome::Feasible(w) | LpOutcome::Bounded { witness: w, .. } => Some(w),
            _ => None,
        }
    }

    pub fn is_feasible(&self) -> bool {
        matches!(
            self,
            LpOutcome::Feasible(_) | LpOutcome::Bounded { .. } | LpOutcome::Unbounded
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Maximize,
    Minimize,
}

/// Work counters, exposed so degenerate-LP regressions can bound them.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LpStats {
    pub pivots: usize,
    pub rows: usize,
    pub columns: usize,
}

fn check_dims(constraints: &[LinearConstraint], nvars: usize) -> Result<(), NumericError> {
    for (index, c) in constraints.iter().enumerate() {
        if c.coefficients.len() != nvars {
            return Err(NumericError::DimensionMismatch {
                index,
                expected: nvars,
                found: c.coefficients.len(),
            });
        }
    }
    Ok(())
}

/// Decides feasibility exactly. Strict rows are handled by maximizing a
/// shared slack `s ≤ 1` subtracted from every strict row; the system is
/// strictly feasible iff the optimum has `s > 0`.
pub fn lp_feasible(
    constraints: &[LinearConstraint],
    nvars: usize,
) -> Result<LpOutcome, NumericError> {
    lp_feasible_with_stats(constraints, nvars).map(|(o, _)| o)
}

pub fn lp_feasible_with_stats(
    constraints: &[LinearConstraint],
    nvars: usize,
) -> Result<(LpOutcome, LpStats), NumericError> {
    check_dims(constraints, nvars)?;
    let has_strict = constraints.iter().any(|c| c.relation == Relation::Lt);
    if !has_strict {
        let (core, stats) = solve(None, constraints, nvars);
        let outcome = match core {
            Core::Optimal(_, x) => LpOutcome::Feasible(x),
            Core::Infeasible => LpOutcome::Infeasible,
            Core::Unbounded => unreachable!("zero objective cannot be unbounded"),
        };
        return Ok((outcome, stats));
    }

    // Extra variable `s` sits at index `nvars`.
    let mut rows = Vec::with_capacity(constraints.len() + 1);
    for c in constraints {
        let mut coefficients = c.coefficients.clone();
        let relation = match c.relation {
            Relation::Lt => {
                coefficients.push(Rational::one());
                Relation::Le
            }
            r => {
                coefficients.push(Rational::zero());
                r
            }
        };
        rows.push(LinearConstraint::new(coefficients, relation, c.bound.clone()));
    }
    let mut cap = vec![Rational::zero(); nvars + 1];
    cap[nvars] = Rational::one();
    rows.push(LinearConstraint::le(cap, Rational::one()));

    let mut objective = vec![Rational::zero(); nvars + 1];
    objective[nvars] = -Rational::one();
    let (core, stats) = solve(Some(&objective), &rows, nvars + 1);
    let outcome = match core {
        Core::Optimal(_, mut x) => {
            let s = x.pop().expect("slack variable present");
            if s.is_positive() {
                LpOutcome::Feasible(x)
            } else {
                LpOutcome::Infeasible
            }
        }
        Core::Infeasible => LpOutcome::Infeasible,
        Core::Unbounded => unreachable!("slack is capped at one"),
    };
    Ok((outcome, stats))
}

/// Optimizes a linear objective over non-strict constraints.
pub fn lp_optimize(
    objective: &[Rational],
    constraints: &[LinearConstraint],
    direction: Direction,
) -> Result<LpOutcome, NumericError> {
    lp_optimize_with_stats(objective, constraints, direction).map(|(o, _)| o)
}

pub fn lp_optimize_with_stats(
    objective: &[Rational],
    constraints: &[LinearConstraint],
    direction: Direction,
) -> Result<(LpOutcome, LpStats), NumericError> {
    let nvars = objective.len();
    check_dims(constraints, nvars)?;
    if let Some(i) = constraints.iter().position(|c| c.relation == Relation::Lt) {
        return Err(NumericError::StrictObjective(i));
    }
    let costs: Vec<Rational> = match direction {
        Direction::Minimize => objective.to_vec(),
        Direction::Maximize => objective.iter().map(|c| -c).collect(),
    };
    let (core, stats) = solve(Some(&costs), constraints, nvars);
    let outcome = match core {
        Core::Optimal(value, witness) => LpOutcome::Bounded {
            value: match direction {
                Direction::Minimize => value,
                Direction::Maximize => -value,
            },
            witness,
        },
        Core::Infeasible => LpOutcome::Infeasible,
        Core::Unbounded => LpOutcome::Unbounded,
    };
    Ok((outcome, stats))
}

enum Core {
    Optimal(Rational, Vec<Rational>),
    Infeasible,
    Unbounded,
}

/// How an original variable maps onto nonnegative tableau columns.
#[derive(Clone, Copy)]
enum VarColumns {
    NonNeg(usize),
    Split(usize, usize),
}

struct Tableau {
    rows: Vec<Vec<Rational>>,
    basis: Vec<usize>,
    /// Reduced costs; the last entry holds minus the objective value.
    z: Vec<Rational>,
    allowed: Vec<bool>,
    pivots: usize,
}

impl Tableau {
    fn rhs(&self) -> usize {
        self.z.len() - 1
    }

    fn pivot(&mut self, r: usize, c: usize) {
        self.pivots += 1;
        let p = self.rows[r][c].clone();
        if !p.is_one() {
            for v in self.rows[r].iter_mut() {
                if !v.is_zero() {
                    *v /= &p;
                }
            }
        }
        let pivot_row = self.rows[r].clone();
        let nonzero: Vec<usize> = (0..pivot_row.len())
            .filter(|&j| !pivot_row[j].is_zero())
            .collect();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r || row[c].is_zero() {
                continue;
            }
            let f = row[c].clone();
            for &j in &nonzero {
                row[j] -= &f * &pivot_row[j];
            }
        }
        if !self.z[c].is_zero() {
            let f = self.z[c].clone();
            for &j in &nonzero {
                self.z[j] -= &f * &pivot_row[j];
            }
        }
        self.basis[r] = c;
    }

    fn set_costs(&mut self, costs: &[Rational]) {
        let rhs = self.rhs();
        self.z = costs.to_vec();
        self.z.push(Rational::zero());
        for (i, &b) in self.basis.iter().enumerate() {
            if costs[b].is_zero() {
                continue;
            }
            let f = costs[b].clone();
            for j in 0..=rhs {
                if !self.rows[i][j].is_zero() {
                    let t = &f * &self.rows[i][j];
                    self.z[j] -= t;
                }
            }
        }
    }

    /// Bland's rule: lowest-index improving column, lowest-index leaving
    /// variable among ratio ties. Returns false when unbounded.
    fn run(&mut self) -> bool {
        let rhs = self.rhs();
        loop {
            let entering = (0..rhs).find(|&j| self.allowed[j] && self.z[j].is_negative());
            let Some(c) = entering else { return true };
            let mut best: Option<(usize, Rational)> = None;
            for (i, row) in self.rows.iter().enumerate() {
                if !row[c].is_positive() {
                    continue;
                }
                let ratio = &row[rhs] / &row[c];
                let better = match &best {
                    None => true,
                    Some((bi, br)) => ratio < *br || (ratio == *br && self.basis[i] < self.basis[*bi]),
                };
                if better {
                    best = Some((i, ratio));
                }
            }
            match best {
                Some((r, _)) => self.pivot(r, c),
                None => return false,
            }
        }
    }
}

/// Minimizes `costs · x` (or just finds a feasible point when `costs` is
/// `None`) subject to non-strict rows over free variables.
fn solve(
    costs: Option<&[Rational]>,
    constraints: &[LinearConstraint],
    nvars: usize,
) -> (Core, LpStats) {
    // Rows of the form `-a x_j <= 0` (a > 0) only say x_j >= 0.
    let mut nonneg = vec![false; nvars];
    let mut kept: Vec<&LinearConstraint> = Vec::with_capacity(constraints.len());
    for c in constraints {
        if c.relation == Relation::Le && c.bound.is_zero() {
            let mut nz = c.coefficients.iter().enumerate().filter(|(_, a)| !a.is_zero());
            if let (Some((j, a)), None) = (nz.next(), nz.next()) {
                if a.is_negative() {
                    nonneg[j] = true;
                    continue;
                }
            }
        }
        kept.push(c);
    }

    let mut map = Vec::with_capacity(nvars);
    let mut ncols = 0;
    for &nn in &nonneg {
        if nn {
            map.push(VarColumns::NonNeg(ncols));
            ncols += 1;
        } else {
            map.push(VarColumns::Split(ncols, ncols + 1));
            ncols += 2;
        }
    }
    let structural = ncols;
    let slack_of: Vec<Option<usize>> = kept
        .iter()
        .map(|c| {
            (c.relation == Relation::Le).then(|| {
                ncols += 1;
                ncols - 1
            })
        })
        .collect();

    // Artificial columns for rows whose slack cannot start basic.
    let m = kept.len();
    let mut needs_artificial = vec![false; m];
    for (i, c) in kept.iter().enumerate() {
        needs_artificial[i] = slack_of[i].is_none() || c.bound.is_negative();
    }
    let first_artificial = ncols;
    let n_art = needs_artificial.iter().filter(|&&b| b).count();
    let total = ncols + n_art;

    let mut rows = Vec::with_capacity(m);
    let mut basis = Vec::with_capacity(m);
    let mut next_art = first_artificial;
    for (i, c) in kept.iter().enumerate() {
        let mut row = vec![Rational::zero(); total + 1];
        for (j, a) in c.coefficients.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            match map[j] {
                VarColumns::NonNeg(k) => row[k] = a.clone(),
                VarColumns::Split(p, q) => {
                    row[p] = a.clone();
                    row[q] = -a.clone();
                }
            }
        }
        if let Some(s) = slack_of[i] {
            row[s] = Rational::one();
        }
        row[total] = c.bound.clone();
        if c.bound.is_negative() {
            for v in row.iter_mut() {
                *v = -v.clone();
            }
        }
        if needs_artificial[i] {
            row[next_art] = Rational::one();
            basis.push(next_art);
            next_art += 1;
        } else {
            basis.push(slack_of[i].expect("slack-basic row"));
        }
        rows.push(row);
    }

    let mut t = Tableau {
        rows,
        basis,
        z: vec![Rational::zero(); total + 1],
        allowed: vec![true; total],
        pivots: 0,
    };

    if n_art > 0 {
        let mut phase1 = vec![Rational::zero(); total];
        for c in phase1.iter_mut().skip(first_artificial) {
            *c = Rational::one();
        }
        t.set_costs(&phase1);
        let bounded = t.run();
        debug_assert!(bounded);
        if !t.z[total].is_zero() {
            let stats = LpStats {
                pivots: t.pivots,
                rows: m,
                columns: total,
            };
            return (Core::Infeasible, stats);
        }
        // Drive zero-level artificials out of the basis; drop redundant rows.
        let mut i = 0;
        while i < t.rows.len() {
            if t.basis[i] >= first_artificial {
                match (0..first_artificial).find(|&j| !t.rows[i][j].is_zero()) {
                    Some(j) => {
                        t.pivot(i, j);
                        i += 1;
                    }
                    None => {
                        t.rows.remove(i);
                        t.basis.remove(i);
                    }
                }
            } else {
                i += 1;
            }
        }
        for a in t.allowed.iter_mut().skip(first_artificial) {
            *a = false;
        }
    }

    let mut column_costs = vec![Rational::zero(); total];
    if let Some(costs) = costs {
        for (j, cj) in costs.iter().enumerate() {
            match map[j] {
                VarColumns::NonNeg(k) => column_costs[k] = cj.clone(),
                VarColumns::Split(p, q) => {
                    column_costs[p] = cj.clone();
                    column_costs[q] = -cj.clone();
                }
            }
        }
    }
    t.set_costs(&column_costs);
    let bounded = t.run();
    let stats = LpStats {
        pivots: t.pivots,
        rows: m,
        columns: total,
    };
    if !bounded {
        return (Core::Unbounded, stats);
    }

    let mut column_values = vec![Rational::zero(); total];
    for (i, &b) in t.basis.iter().enumerate() {
        column_values[b] = t.rows[i][total].clone();
    }
    let x: Vec<Rational> = map
        .iter()
        .map(|vc| match *vc {
            VarColumns::NonNeg(k) => column_values[k].clone(),
            VarColumns::Split(p, q) => &column_values[p] - &column_values[q],
        })
        .collect();
    let _ = structural;
    let value = -t.z[total].clone();
    debug_assert!(constraints.iter().all(|c| c.is_satisfied_by(&x)));
    (Core::Optimal(value, x), stats)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::{int, ratio};

    fn row(c: &[i64]) -> Vec<Rational> {
        c.iter().map(|&v| int(v)).collect()
    }

    #[test]
    fn three_variable_system_is_feasible() {
        let cons = vec![
            LinearConstraint::eq(row(&[1, 0, -1]), int(3)),
            LinearConstraint::eq(row(&[1, -1, 1]), int(1)),
            LinearConstraint::ge(row(&[1, 0, 0]), int(0)),
            LinearConstraint::ge(row(&[0, 1, 0]), int(0)),
            LinearConstraint::ge(row(&[0, 0, 1]), int(0)),
        ];
        let out = lp_feasible(&cons, 3).unwrap();
        let w = out.witness().unwrap();
        assert!(cons.iter().all(|c| c.is_satisfied_by(w)));
    }

    #[test]
    fn contradictory_bounds_are_infeasible() {
        let cons = vec![
            LinearConstraint::ge(row(&[1]), int(1)),
            LinearConstraint::le(row(&[1]), int(0)),
        ];
        assert_eq!(lp_feasible(&cons, 1).unwrap(), LpOutcome::Infeasible);
    }

    #[test]
    fn empty_system_is_vacuously_feasible() {
        assert_eq!(lp_feasible(&[], 0).unwrap(), LpOutcome::Feasible(vec![]));
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let cons = vec![LinearConstraint::le(row(&[1, 2]), int(0))];
        assert!(matches!(
            lp_feasible(&cons, 3),
            Err(NumericError::DimensionMismatch { index: 0, expected: 3, found: 2 })
        ));
    }

    #[test]
    fn max_step_inside_square() {
        // max tau s.t. (1,1) + tau (1,1) in [0,4]^2
        let cons = vec![
            LinearConstraint::le(row(&[1]), int(3)),
            LinearConstraint::le(row(&[-1]), int(1)),
            LinearConstraint::le(row(&[1]), int(3)),
            LinearConstraint::le(row(&[-1]), int(1)),
        ];
        match lp_optimize(&row(&[1]), &cons, Direction::Maximize).unwrap() {
            LpOutcome::Bounded { value, .. } => assert_eq!(value, int(3)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unbounded_and_min_examples() {
        let cons = vec![LinearConstraint::ge(row(&[1]), int(0))];
        assert_eq!(
            lp_optimize(&row(&[1]), &cons, Direction::Maximize).unwrap(),
            LpOutcome::Unbounded
        );
        let cons = vec![
            LinearConstraint::ge(row(&[1]), int(0)),
            LinearConstraint::ge(row(&[1]), int(1)),
        ];
        match lp_optimize(&row(&[1]), &cons, Direction::Minimize).unwrap() {
            LpOutcome::Bounded { value, witness } => {
                assert_eq!(value, int(1));
                assert_eq!(witness, vec![int(1)]);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn strict_rows() {
        // 0 < x < 1 is feasible, x < 0 and x > 0 is not, x <= 0 and x > 0 neither.
        let open = vec![
            LinearConstraint::gt(row(&[1]), int(0)),
            LinearConstraint::lt(row(&[1]), int(1)),
        ];
        let w = lp_feasible(&open, 1).unwrap();
        let x = &w.witness().unwrap()[0];
        assert!(*x > int(0) && *x < int(1));
        let touching = vec![
            LinearConstraint::le(row(&[1]), int(0)),
            LinearConstraint::gt(row(&[1]), int(0)),
        ];
        assert_eq!(lp_feasible(&touching, 1).unwrap(), LpOutcome::Infeasible);
        let tiny = vec![
            LinearConstraint::gt(row(&[1]), int(0)),
            LinearConstraint::lt(row(&[1000]), ratio(1, 1000)),
        ];
        assert!(lp_feasible(&tiny, 1).unwrap().is_feasible());
    }

    #[test]
    fn strict_rows_rejected_by_optimize() {
        let cons = vec![LinearConstraint::lt(row(&[1]), int(1))];
        assert_eq!(
            lp_optimize(&row(&[1]), &cons, Direction::Maximize),
            Err(NumericError::StrictObjective(0))
        );
    }

    #[test]
    fn redundant_equalities() {
        let cons = vec![
            LinearConstraint::eq(row(&[1, 1]), int(2)),
            LinearConstraint::eq(row(&[2, 2]), int(4)),
            LinearConstraint::ge(row(&[1, 0]), int(0)),
            LinearConstraint::ge(row(&[0, 1]), int(0)),
        ];
        match lp_optimize(&row(&[1, 0]), &cons, Direction::Maximize).unwrap() {
            LpOutcome::Bounded { value, .. } => assert_eq!(value, int(2)),
            other => panic!("{other:?}"),
        }
    }
}
