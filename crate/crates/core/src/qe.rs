//! Elimination of the segment parameter from "the segment p–q misses the
//! obstacle", leaving a quadratic formula over the endpoint coordinates.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_traits::{One, Signed, Zero};

use crate::geometry::Polytope;
use crate::numeric::{lp_feasible, LpOutcome, Rational};

/// Affine form `Σ c_i v_i + constant` over the variables `(p_1..p_n, q_1..q_n)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinExpr {
    pub coefficients: Vec<Rational>,
    pub constant: Rational,
}

impl LinExpr {
    pub fn constant(nvars: usize, c: Rational) -> Self {
        Self {
            coefficients: vec![Rational::zero(); nvars],
            constant: c,
        }
    }

    pub fn eval(&self, vars: &[Rational]) -> Rational {
        let mut acc = self.constant.clone();
        for (c, v) in self.coefficients.iter().zip(vars) {
            if !c.is_zero() {
                acc += c * v;
            }
        }
        acc
    }

    pub fn is_constant(&self) -> bool {
        self.coefficients.iter().all(Zero::is_zero)
    }

    /// Substitutes the `Some` entries of `fixed` and folds them into the constant.
    pub fn partial(&self, fixed: &[Option<Rational>]) -> LinExpr {
        let mut out = self.clone();
        for (c, f) in out.coefficients.iter_mut().zip(fixed) {
            if let Some(v) = f {
                if !c.is_zero() {
                    out.constant += &*c * v;
                    *c = Rational::zero();
                }
            }
        }
        out
    }

    fn scaled(mut self, k: &Rational) -> LinExpr {
        for c in self.coefficients.iter_mut() {
            *c *= k;
        }
        self.constant *= k;
        self
    }

    /// SMT-LIB term given one term string per variable.
    pub fn to_smt(&self, vars: &[String]) -> String {
        let mut parts = Vec::new();
        for (c, v) in self.coefficients.iter().zip(vars) {
            if c.is_zero() {
                continue;
            }
            if c.is_one() {
                parts.push(v.clone());
            } else {
                parts.push(format!("(* {} {v})", smt_numeral(c)));
            }
        }
        if !self.constant.is_zero() || parts.is_empty() {
            parts.push(smt_numeral(&self.constant));
        }
        if parts.len() == 1 {
            parts.pop().unwrap()
        } else {
            format!("(+ {})", parts.join(" "))
        }
    }
}

/// `(/ p q)` with negation written as `(- ...)`; never a decimal.
pub fn smt_numeral(r: &Rational) -> String {
    let num = r.numer().abs();
    let den = r.denom();
    let body = if den.is_one() {
        format!("{num}.0")
    } else {
        format!("(/ {num}.0 {den}.0)")
    };
    if r.is_negative() {
        format!("(- {body})")
    } else {
        body
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Term {
    Lin(LinExpr),
    Product(LinExpr, LinExpr),
}

impl Term {
    pub fn eval(&self, vars: &[Rational]) -> Rational {
        match self {
            Term::Lin(e) => e.eval(vars),
            Term::Product(a, b) => a.eval(vars) * b.eval(vars),
        }
    }

    pub fn partial(&self, fixed: &[Option<Rational>]) -> Term {
        match self {
            Term::Lin(e) => Term::Lin(e.partial(fixed)),
            Term::Product(a, b) => {
                let (a, b) = (a.partial(fixed), b.partial(fixed));
                if a.is_constant() {
                    let k = a.constant.clone();
                    Term::Lin(b.scaled(&k))
                } else if b.is_constant() {
                    let k = b.constant.clone();
                    Term::Lin(a.scaled(&k))
                } else {
                    Term::Product(a, b)
                }
            }
        }
    }

    pub fn degree(&self) -> usize {
        match self {
            Term::Lin(e) => usize::from(!e.is_constant()),
            Term::Product(a, b) => {
                usize::from(!a.is_constant()) + usize::from(!b.is_constant())
            }
        }
    }

    pub fn to_smt(&self, vars: &[String]) -> String {
        match self {
            Term::Lin(e) => e.to_smt(vars),
            Term::Product(a, b) => format!("(* {} {})", a.to_smt(vars), b.to_smt(vars)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cmp {
    Lt,
    Le,
    Eq,
    Gt,
}

impl Cmp {
    fn smt(self) -> &'static str {
        match self {
            Cmp::Lt => "<",
            Cmp::Le => "<=",
            Cmp::Eq => "=",
            Cmp::Gt => ">",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Atom {
    pub lhs: Term,
    pub cmp: Cmp,
    pub rhs: Term,
}

impl Atom {
    pub fn eval(&self, vars: &[Rational]) -> bool {
        let l = self.lhs.eval(vars);
        let r = self.rhs.eval(vars);
        match self.cmp {
            Cmp::Lt => l < r,
            Cmp::Le => l <= r,
            Cmp::Eq => l == r,
            Cmp::Gt => l > r,
        }
    }

    pub fn degree(&self) -> usize {
        self.lhs.degree().max(self.rhs.degree())
    }

    pub fn to_smt(&self, vars: &[String]) -> String {
        format!(
            "({} {} {})",
            self.cmp.smt(),
            self.lhs.to_smt(vars),
            self.rhs.to_smt(vars)
        )
    }
}

// Atoms dominate in practice; boxing them would cost more than the padding.
#[allow(clippy::large_enum_variant)]
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum QuadFormula {
    True,
    False,
    Atom(Atom),
    And(Vec<QuadFormula>),
    Or(Vec<QuadFormula>),
}

impl QuadFormula {
    pub fn to_smt(&self, vars: &[String]) -> String {
        match self {
            QuadFormula::True => "true".into(),
            QuadFormula::False => "false".into(),
            QuadFormula::Atom(a) => a.to_smt(vars),
            QuadFormula::And(v) | QuadFormula::Or(v) if v.is_empty() => {
                if matches!(self, QuadFormula::And(_)) { "true" } else { "false" }.into()
            }
            QuadFormula::And(v) => {
                let mut s = String::from("(and");
                for f in v {
                    let _ = write!(s, " {}", f.to_smt(vars));
                }
                s.push(')');
                s
            }
            QuadFormula::Or(v) => {
                let mut s = String::from("(or");
                for f in v {
                    let _ = write!(s, " {}", f.to_smt(vars));
                }
                s.push(')');
                s
            }
        }
    }

    /// Substitutes fixed variables and simplifies: atoms that become ground
    /// are decided, and `True`/`False` are absorbed by their connectives.
    pub fn partial(&self, fixed: &[Option<Rational>]) -> QuadFormula {
        match self {
            QuadFormula::True | QuadFormula::False => self.clone(),
            QuadFormula::Atom(a) => {
                let atom = Atom {
                    lhs: a.lhs.partial(fixed),
                    cmp: a.cmp,
                    rhs: a.rhs.partial(fixed),
                };
                if atom.degree() == 0 {
                    if atom.eval(&[]) {
                        QuadFormula::True
                    } else {
                        QuadFormula::False
                    }
                } else {
                    QuadFormula::Atom(atom)
                }
            }
            QuadFormula::And(v) => {
                let mut out = Vec::with_capacity(v.len());
                for f in v {
                    match f.partial(fixed) {
                        QuadFormula::False => return QuadFormula::False,
                        QuadFormula::True => {}
                        g => out.push(g),
                    }
                }
                match out.len() {
                    0 => QuadFormula::True,
                    1 => out.pop().unwrap(),
                    _ => QuadFormula::And(out),
                }
            }
            QuadFormula::Or(v) => {
                let mut out = Vec::with_capacity(v.len());
                for f in v {
                    match f.partial(fixed) {
                        QuadFormula::True => return QuadFormula::True,
                        QuadFormula::False => {}
                        g => out.push(g),
                    }
                }
                match out.len() {
                    0 => QuadFormula::False,
                    1 => out.pop().unwrap(),
                    _ => QuadFormula::Or(out),
                }
            }
        }
    }

    pub fn max_degree(&self) -> usize {
        match self {
            QuadFormula::True | QuadFormula::False => 0,
            QuadFormula::Atom(a) => a.degree(),
            QuadFormula::And(v) | QuadFormula::Or(v) => {
                v.iter().map(QuadFormula::max_degree).max().unwrap_or(0)
            }
        }
    }
}

/// `lhs − rhs` expanded into monomials: degree-2 part keyed by `(i, j)`
/// with `i ≤ j`, plus an affine part.
fn expand(atom: &Atom) -> (BTreeMap<(usize, usize), Rational>, LinExpr) {
    let mut quad = BTreeMap::new();
    let mut affine = LinExpr::constant(0, Rational::zero());
    let mut add = |t: &Term, sign: &Rational| match t {
        Term::Lin(e) => {
            if affine.coefficients.len() < e.coefficients.len() {
                affine.coefficients.resize(e.coefficients.len(), Rational::zero());
            }
            for (a, c) in affine.coefficients.iter_mut().zip(&e.coefficients) {
                *a += c * sign;
            }
            affine.constant += &e.constant * sign;
        }
        Term::Product(a, b) => {
            let n = a.coefficients.len().max(b.coefficients.len());
            if affine.coefficients.len() < n {
                affine.coefficients.resize(n, Rational::zero());
            }
            for (i, ai) in a.coefficients.iter().enumerate() {
                for (j, bj) in b.coefficients.iter().enumerate() {
                    if ai.is_zero() || bj.is_zero() {
                        continue;
                    }
                    let key = (i.min(j), i.max(j));
                    *quad.entry(key).or_insert_with(Rational::zero) += ai * bj * sign;
                }
                affine.coefficients[i] += ai * &b.constant * sign;
            }
            for (j, bj) in b.coefficients.iter().enumerate() {
                affine.coefficients[j] += bj * &a.constant * sign;
            }
            affine.constant += &a.constant * &b.constant * sign;
        }
    };
    add(&atom.lhs, &Rational::one());
    add(&atom.rhs, &-Rational::one());
    quad.retain(|_, c: &mut Rational| !c.is_zero());
    (quad, affine)
}

/// `e > 0` scaled so the first nonzero coefficient has magnitude one.
fn normalized_positive(mut e: LinExpr) -> LinExpr {
    if let Some(c) = e.coefficients.iter().find(|c| !c.is_zero()).map(Rational::abs) {
        e = e.scaled(&c.recip());
    }
    e
}

impl QuadFormula {
    /// Expands every atom, decides the constant ones, rewrites atoms whose
    /// products cancel as linear `e > 0`, and drops conjunctions holding two
    /// linear atoms with opposite directions and no common solution.
    pub fn simplify(&self) -> QuadFormula {
        match self {
            QuadFormula::True | QuadFormula::False => self.clone(),
            QuadFormula::Atom(a) => {
                let (quad, affine) = expand(a);
                if !quad.is_empty() {
                    return self.clone();
                }
                let (e, cmp) = match a.cmp {
                    Cmp::Gt => (affine, Cmp::Gt),
                    Cmp::Lt => (affine.scaled(&-Rational::one()), Cmp::Gt),
                    c => (affine, c),
                };
                if e.is_constant() {
                    let holds = Atom {
                        lhs: Term::Lin(e),
                        cmp,
                        rhs: Term::Lin(LinExpr::constant(0, Rational::zero())),
                    }
                    .eval(&[]);
                    return if holds { QuadFormula::True } else { QuadFormula::False };
                }
                let e = if cmp == Cmp::Gt { normalized_positive(e) } else { e };
                let n = e.coefficients.len();
                QuadFormula::Atom(Atom {
                    lhs: Term::Lin(e),
                    cmp,
                    rhs: zero_term(n),
                })
            }
            QuadFormula::And(v) => {
                let mut out: Vec<QuadFormula> = Vec::with_capacity(v.len());
                for f in v {
                    match f.simplify() {
                        QuadFormula::False => return QuadFormula::False,
                        QuadFormula::True => {}
                        QuadFormula::And(inner) => out.extend(inner),
                        g => out.push(g),
                    }
                }
                out.dedup();
                let linear: Vec<&LinExpr> = out
                    .iter()
                    .filter_map(|f| match f {
                        QuadFormula::Atom(Atom {
                            lhs: Term::Lin(e),
                            cmp: Cmp::Gt,
                            rhs: Term::Lin(z),
                        }) if z.is_constant() && z.constant.is_zero() => Some(e),
                        _ => None,
                    })
                    .collect();
                for (i, x) in linear.iter().enumerate() {
                    for y in &linear[i + 1..] {
                        let opposite = x
                            .coefficients
                            .iter()
                            .zip(&y.coefficients)
                            .all(|(a, b)| (a + b).is_zero());
                        if opposite && !(&x.constant + &y.constant).is_positive() {
                            return QuadFormula::False;
                        }
                    }
                }
                match out.len() {
                    0 => QuadFormula::True,
                    1 => out.pop().unwrap(),
                    _ => QuadFormula::And(out),
                }
            }
            QuadFormula::Or(v) => {
                let mut out = Vec::with_capacity(v.len());
                for f in v {
                    match f.simplify() {
                        QuadFormula::True => return QuadFormula::True,
                        QuadFormula::False => {}
                        QuadFormula::Or(inner) => out.extend(inner),
                        g => out.push(g),
                    }
                }
                match out.len() {
                    0 => QuadFormula::False,
                    1 => out.pop().unwrap(),
                    _ => QuadFormula::Or(out),
                }
            }
        }
    }
}

/// `α_j = a_j·(p − q)` as a form over `(p, q)`.
fn alpha(normal: &[Rational]) -> LinExpr {
    let mut coefficients: Vec<Rational> = normal.to_vec();
    coefficients.extend(normal.iter().map(|a| -a));
    LinExpr {
        coefficients,
        constant: Rational::zero(),
    }
}

/// `β_j = b_j − a_j·q`.
fn beta(normal: &[Rational], offset: &Rational) -> LinExpr {
    let mut coefficients = vec![Rational::zero(); normal.len()];
    coefficients.extend(normal.iter().map(|a| -a));
    LinExpr {
        coefficients,
        constant: offset.clone(),
    }
}

fn lin(e: LinExpr) -> Term {
    Term::Lin(e)
}

fn zero_term(nvars: usize) -> Term {
    Term::Lin(LinExpr::constant(nvars, Rational::zero()))
}

/// Exact quantifier-free form of `¬∃λ∈[0,1] ∀j: α_j λ ≤ β_j`:
/// some facet has both endpoints strictly outside it, or two facets with
/// opposite slope signs cut the λ-interval empty.
pub fn obstacle_free_formula(obstacle: &Polytope) -> QuadFormula {
    let n = obstacle.dimension();
    let nvars = 2 * n;
    let rows = obstacle.rows();
    if rows.is_empty() {
        return QuadFormula::False;
    }
    if matches!(
        lp_feasible(&obstacle.constraints(false), n),
        Ok(LpOutcome::Infeasible)
    ) {
        return QuadFormula::True;
    }
    let mut disjuncts = Vec::with_capacity(rows.len() * rows.len());
    for r in rows {
        // a·p > b and a·q > b.
        let mut ap = r.normal.clone();
        ap.extend(std::iter::repeat_n(Rational::zero(), n));
        let mut aq = vec![Rational::zero(); n];
        aq.extend(r.normal.iter().cloned());
        let b = || lin(LinExpr::constant(nvars, r.offset.clone()));
        disjuncts.push(QuadFormula::And(vec![
            QuadFormula::Atom(Atom {
                lhs: lin(LinExpr {
                    coefficients: ap,
                    constant: Rational::zero(),
                }),
                cmp: Cmp::Gt,
                rhs: b(),
            }),
            QuadFormula::Atom(Atom {
                lhs: lin(LinExpr {
                    coefficients: aq,
                    constant: Rational::zero(),
                }),
                cmp: Cmp::Gt,
                rhs: b(),
            }),
        ]));
    }
    for (j, rj) in rows.iter().enumerate() {
        for (k, rk) in rows.iter().enumerate() {
            if j == k {
                continue;
            }
            let (aj, ak) = (alpha(&rj.normal), alpha(&rk.normal));
            let (bj, bk) = (beta(&rj.normal, &rj.offset), beta(&rk.normal, &rk.offset));
            disjuncts.push(QuadFormula::And(vec![
                QuadFormula::Atom(Atom {
                    lhs: lin(aj.clone()),
                    cmp: Cmp::Gt,
                    rhs: zero_term(nvars),
                }),
                QuadFormula::Atom(Atom {
                    lhs: lin(ak.clone()),
                    cmp: Cmp::Lt,
                    rhs: zero_term(nvars),
                }),
                QuadFormula::Atom(Atom {
                    lhs: Term::Product(bj, ak),
                    cmp: Cmp::Gt,
                    rhs: Term::Product(bk, aj),
                }),
            ]));
        }
    }
    QuadFormula::Or(disjuncts)
}

pub fn eval_vars(formula: &QuadFormula, vars: &[Rational]) -> bool {
    match formula {
        QuadFormula::True => true,
        QuadFormula::False => false,
        QuadFormula::Atom(a) => a.eval(vars),
        QuadFormula::And(v) => v.iter().all(|f| eval_vars(f, vars)),
        QuadFormula::Or(v) => v.iter().any(|f| eval_vars(f, vars)),
    }
}

pub fn eval(formula: &QuadFormula, p: &[Rational], q: &[Rational]) -> bool {
    let mut vars = p.to_vec();
    vars.extend_from_slice(q);
    eval_vars(formula, &vars)
}

/// Disjunctive normal form as a list of conjunctions. A constant-true formula
/// yields one empty clause, constant-false yields none.
pub fn emit_atoms(formula: &QuadFormula) -> Vec<Vec<Atom>> {
    match formula {
        QuadFormula::True => vec![vec![]],
        QuadFormula::False => vec![],
        QuadFormula::Atom(a) => vec![vec![a.clone()]],
        QuadFormula::Or(v) => v.iter().flat_map(emit_atoms).collect(),
        QuadFormula::And(v) => {
            let mut acc: Vec<Vec<Atom>> = vec![vec![]];
            for f in v {
                let part = emit_atoms(f);
                let mut next = Vec::with_capacity(acc.len() * part.len());
                for a in &acc {
                    for b in &part {
                        let mut c = a.clone();
                        c.extend(b.iter().cloned());
                        next.push(c);
                    }
                }
                acc = next;
            }
            acc
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{segment_intersects, Halfspace, Segment};
    use crate::numeric::{int, ratio};

    fn square() -> Polytope {
        Polytope::from_box(&[int(1), int(1)], &[int(2), int(2)])
    }

    #[test]
    fn diagonal_is_blocked() {
        let f = obstacle_free_formula(&square());
        assert!(!eval(&f, &[int(0), int(0)], &[int(3), int(3)]));
    }

    #[test]
    fn shared_violated_facet() {
        let f = obstacle_free_formula(&square());
        assert!(eval(&f, &[int(0), int(3)], &[int(3), int(3)]));
    }

    #[test]
    fn degenerate_outside_point() {
        let f = obstacle_free_formula(&square());
        assert!(eval(&f, &[int(5), int(0)], &[int(5), int(0)]));
        assert!(!eval(&f, &[ratio(3, 2), int(2)], &[ratio(3, 2), int(2)]));
    }

    #[test]
    fn clause_counts() {
        assert_eq!(emit_atoms(&obstacle_free_formula(&square())).len(), 16);
        let half = Polytope::new(2, vec![Halfspace::new(vec![int(1), int(0)], int(0))]).unwrap();
        assert_eq!(emit_atoms(&obstacle_free_formula(&half)).len(), 1);
        let empty = Polytope::from_box(&[int(3), int(0)], &[int(2), int(1)]);
        assert_eq!(obstacle_free_formula(&empty), QuadFormula::True);
    }

    #[test]
    fn degree_is_two() {
        assert_eq!(obstacle_free_formula(&square()).max_degree(), 2);
    }

    #[test]
    fn grid_agrees_with_fixed_endpoint_test() {
        let sq = square();
        let f = obstacle_free_formula(&sq);
        let coords: Vec<Rational> = (0..=6).map(|i| ratio(i, 2)).collect();
        for px in &coords {
            for py in &coords {
                for qx in coords.iter().step_by(2) {
                    for qy in coords.iter().step_by(2) {
                        let p = vec![px.clone(), py.clone()];
                        let q = vec![qx.clone(), qy.clone()];
                        let seg = Segment::new(p.clone(), q.clone());
                        assert_eq!(eval(&f, &p, &q), !segment_intersects(&seg, &sq));
                        assert_eq!(eval(&f, &p, &q), eval(&f, &q, &p));
                    }
                }
            }
        }
    }

    #[test]
    fn partial_evaluation_agrees() {
        let f = obstacle_free_formula(&square());
        let coords: Vec<Rational> = (0..=6).map(|i| ratio(i, 2)).collect();
        for qx in &coords {
            for qy in &coords {
                let fixed = [None, None, Some(qx.clone()), Some(qy.clone())];
                let g = f.partial(&fixed);
                assert!(g.max_degree() <= 1);
                for px in &coords {
                    for py in &coords {
                        let vars = [px.clone(), py.clone(), qx.clone(), qy.clone()];
                        assert_eq!(eval_vars(&g, &vars), eval_vars(&f, &vars));
                    }
                }
            }
        }
        let all: Vec<_> = [0, 0, 3, 3].iter().map(|&v| Some(int(v))).collect();
        assert_eq!(f.partial(&all), QuadFormula::False);
    }

    #[test]
    fn simplification_agrees() {
        let f = obstacle_free_formula(&square());
        let coords: Vec<Rational> = (0..=6).map(|i| ratio(i, 2)).collect();
        let s = f.simplify();
        assert!(emit_atoms(&s).len() < emit_atoms(&f).len());
        for qx in coords.iter().step_by(2) {
            for qy in coords.iter().step_by(3) {
                let fixed = [None, None, Some(qx.clone()), Some(qy.clone())];
                let g = f.partial(&fixed).simplify();
                for px in &coords {
                    for py in &coords {
                        let vars = [px.clone(), py.clone(), qx.clone(), qy.clone()];
                        assert_eq!(eval_vars(&g, &vars), eval_vars(&f, &vars));
                        assert_eq!(eval_vars(&s, &vars), eval_vars(&f, &vars));
                    }
                }
            }
        }
    }

    #[test]
    fn smt_terms() {
        assert_eq!(smt_numeral(&ratio(-7, 2)), "(- (/ 7.0 2.0))");
        assert_eq!(smt_numeral(&int(3)), "3.0");
        let e = LinExpr {
            coefficients: vec![int(1), int(-2)],
            constant: int(0),
        };
        assert_eq!(e.to_smt(&["a".into(), "b".into()]), "(+ a (* (- 2.0) b))");
    }
}
