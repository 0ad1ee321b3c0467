use std::fmt;

use num_traits::{One, Signed, Zero};

use crate::numeric::{interval_emptiness_1d, Interval1d, Rational, Relation, SlopeAtom};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Phi {
    Init,
    MutexX,
    MutexWZ,
    MutexZW,
    MutexSX,
    MutexHalt,
    SumHalt,
}

impl Phi {
    pub const ALL: [Phi; 7] = [
        Phi::Init,
        Phi::MutexX,
        Phi::MutexWZ,
        Phi::MutexZW,
        Phi::MutexSX,
        Phi::MutexHalt,
        Phi::SumHalt,
    ];

    pub fn letter(self) -> char {
        match self {
            Phi::Init => 'a',
            Phi::MutexX => 'b',
            Phi::MutexWZ => 'c',
            Phi::MutexZW => 'd',
            Phi::MutexSX => 'e',
            Phi::MutexHalt => 'f',
            Phi::SumHalt => 'g',
        }
    }

    pub fn title(self) -> &'static str {
        match self {
            Phi::Init => "Init",
            Phi::MutexX => "Mutex(X)",
            Phi::MutexWZ => "Mutex(W,Z)",
            Phi::MutexZW => "Mutex(Z,W)",
            Phi::MutexSX => "Mutex(S,X)",
            Phi::MutexHalt => "Mutex(w_halt)",
            Phi::SumHalt => "Sum(X_halt,w_halt)",
        }
    }
}

impl fmt::Display for Phi {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "phi_{} {}", self.letter(), self.title())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rel {
    Lt,
    Le,
    Eq,
    Ge,
    Gt,
}

impl Rel {
    fn symbol(self) -> &'static str {
        match self {
            Rel::Lt => "<",
            Rel::Le => "<=",
            Rel::Eq => "=",
            Rel::Ge => ">=",
            Rel::Gt => ">",
        }
    }

    fn holds(self, lhs: &Rational, rhs: &Rational) -> bool {
        match self {
            Rel::Lt => lhs < rhs,
            Rel::Le => lhs <= rhs,
            Rel::Eq => lhs == rhs,
            Rel::Ge => lhs >= rhs,
            Rel::Gt => lhs > rhs,
        }
    }

    /// The complement as a disjunction of relations.
    fn negated(self) -> &'static [Rel] {
        match self {
            Rel::Lt => &[Rel::Ge],
            Rel::Le => &[Rel::Gt],
            Rel::Eq => &[Rel::Lt, Rel::Gt],
            Rel::Ge => &[Rel::Lt],
            Rel::Gt => &[Rel::Le],
        }
    }
}

/// Sparse `Σ c_i v_i  rel  bound`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinAtom {
    pub terms: Vec<(usize, Rational)>,
    pub rel: Rel,
    pub bound: Rational,
}

impl LinAtom {
    pub fn var(v: usize, rel: Rel, bound: Rational) -> Self {
        Self {
            terms: vec![(v, Rational::one())],
            rel,
            bound,
        }
    }

    pub fn sum(vars: &[usize], rel: Rel, bound: Rational) -> Self {
        Self {
            terms: vars.iter().map(|&v| (v, Rational::one())).collect(),
            rel,
            bound,
        }
    }

    fn lhs(&self, x: &[Rational]) -> Rational {
        self.terms.iter().map(|(v, c)| c * &x[*v]).sum()
    }

    pub fn holds(&self, x: &[Rational]) -> bool {
        self.rel.holds(&self.lhs(x), &self.bound)
    }

    /// `lhs(x + τ r) rel bound` as a constraint on `τ`.
    fn along(&self, rel: Rel, x: &[Rational], r: &[Rational]) -> SlopeAtom {
        let slope: Rational = self.terms.iter().map(|(v, c)| c * &r[*v]).sum();
        let bound = &self.bound - self.lhs(x);
        match rel {
            Rel::Lt => SlopeAtom::new(slope, Relation::Lt, bound),
            Rel::Le => SlopeAtom::new(slope, Relation::Le, bound),
            Rel::Eq => SlopeAtom::new(slope, Relation::Eq, bound),
            Rel::Ge => SlopeAtom::new(-slope, Relation::Le, -bound),
            Rel::Gt => SlopeAtom::new(-slope, Relation::Lt, -bound),
        }
    }

    pub fn render(&self, names: &[String]) -> String {
        let mut s = String::new();
        for (i, (v, c)) in self.terms.iter().enumerate() {
            let name = &names[*v];
            if i > 0 {
                s.push_str(if c.is_negative() { " - " } else { " + " });
            } else if c.is_negative() {
                s.push('-');
            }
            let a = c.abs();
            if a.is_one() {
                s.push_str(name);
            } else {
                s.push_str(&format!("{a}*{name}"));
            }
        }
        format!("{s} {} {}", self.rel.symbol(), self.bound)
    }
}

/// `guard ⟹ ⋀ body`; an absent guard always applies.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Clause {
    pub phi: Phi,
    pub guard: Option<LinAtom>,
    pub body: Vec<LinAtom>,
}

impl Clause {
    pub fn holds(&self, x: &[Rational]) -> bool {
        self.guard.as_ref().is_some_and(|g| !g.holds(x)) || self.body.iter().all(|a| a.holds(x))
    }

    /// Each way the clause can fail along `x + τ r`, as a conjunction of
    /// one-variable atoms.
    fn violation_sets(&self, x: &[Rational], r: &[Rational]) -> Vec<Vec<SlopeAtom>> {
        let mut out = Vec::new();
        for atom in &self.body {
            for &rel in atom.rel.negated() {
                let mut set = Vec::with_capacity(2);
                if let Some(g) = &self.guard {
                    set.push(g.along(g.rel, x, r));
                }
                set.push(atom.along(rel, x, r));
                out.push(set);
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SafetyPredicate {
    pub clauses: Vec<Clause>,
}

fn breakpoints(set: &[SlopeAtom]) -> impl Iterator<Item = Rational> + '_ {
    set.iter()
        .filter(|a| !a.slope.is_zero())
        .map(|a| &a.bound / &a.slope)
}

impl SafetyPredicate {
    pub fn holds(&self, x: &[Rational]) -> bool {
        self.clauses.iter().all(|c| c.holds(x))
    }

    /// Every clause family violated at `x`, in order.
    pub fn violated(&self, x: &[Rational]) -> Vec<Phi> {
        let mut out: Vec<Phi> = self
            .clauses
            .iter()
            .filter(|c| !c.holds(x))
            .map(|c| c.phi)
            .collect();
        out.sort();
        out.dedup();
        out
    }

    /// First clause violated somewhere on `{x + τ r : τ ∈ [0, duration]}`,
    /// with a violating `τ`.
    pub fn segment_violation(
        &self,
        x: &[Rational],
        r: &[Rational],
        duration: &Rational,
    ) -> Option<(Phi, Rational)> {
        for c in &self.clauses {
            for set in c.violation_sets(x, r) {
                if let Ok(Interval1d::NonEmpty(tau)) =
                    interval_emptiness_1d(&set, &Rational::zero(), duration)
                {
                    return Some((c.phi, tau));
                }
            }
        }
        None
    }

    /// A clause violated at every `τ ∈ (0, ε)` for every `ε > 0`, i.e. no
    /// positive dwell along `r` is safe.
    ///
    /// A violation set is an interval whose left end is one of its own
    /// breakpoints, so probing `[0, δ]` with δ below the smallest positive
    /// breakpoint decides whether it starts at zero.
    pub fn immediate_violation(&self, x: &[Rational], r: &[Rational]) -> Option<Phi> {
        let two = Rational::from_integer(2.into());
        for c in &self.clauses {
            for set in c.violation_sets(x, r) {
                let delta = breakpoints(&set)
                    .filter(|b| b.is_positive())
                    .min()
                    .map_or_else(Rational::one, |b| b / &two);
                if let Ok(Interval1d::NonEmpty(_)) =
                    interval_emptiness_1d(&set, &Rational::zero(), &delta)
                {
                    return Some(c.phi);
                }
            }
        }
        None
    }
}
