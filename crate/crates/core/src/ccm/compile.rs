use std::collections::HashMap;

use num_traits::{One, Zero};
use serde_json::{json, Map, Value};

use super::safety::{Clause, LinAtom, Phi, Rel, SafetyPredicate};
use super::{Counter, CounterMachine, Instruction};
use crate::model::{Mms, Mode, Point};
use crate::numeric::{format_rational, Rational};

/// Variable and mode names. Indices are concatenated (`x01`, `M12`) while
/// every instruction index is a single digit, and joined with `_` beyond.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Naming {
    wide: bool,
}

impl Naming {
    fn for_machine(m: &CounterMachine) -> Self {
        Self { wide: m.len() > 10 }
    }

    fn pair(&self, i: usize, j: usize) -> String {
        if self.wide {
            format!("{i}_{j}")
        } else {
            format!("{i}{j}")
        }
    }

    pub fn x(&self, i: usize, j: usize) -> String {
        format!("x{}", self.pair(i, j))
    }

    pub fn w(&self, i: usize, j: usize) -> String {
        format!("w{}", self.pair(i, j))
    }

    pub fn z(&self, i: usize) -> String {
        format!("z{i}#")
    }

    pub fn step_mode(&self, i: usize) -> String {
        format!("M{i}")
    }

    pub fn branch_mode(&self, i: usize, positive: bool) -> String {
        format!("M{i}^{}", if positive { 1 } else { 2 })
    }

    pub fn edge_mode(&self, i: usize, j: usize) -> String {
        format!("M{}", self.pair(i, j))
    }

    pub fn halt_mode(&self, h: usize) -> String {
        format!("M{h}")
    }

    pub fn halt_counter_mode(&self, h: usize, c: Counter) -> String {
        format!("M{h}^{c}")
    }
}

pub const INITIAL_MODE: &str = "I";

/// The multi-mode system and safety predicate built from a machine.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompiledSystem {
    pub mms: Mms,
    pub variables: Vec<String>,
    pub safety: SafetyPredicate,
    pub start: Point,
    pub target: Point,
    pub naming: Naming,
    index: HashMap<String, usize>,
}

impl CompiledSystem {
    pub fn var(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn dimension(&self) -> usize {
        self.variables.len()
    }

    /// Named nonzero coordinates of `x`.
    pub fn describe(&self, x: &[Rational]) -> String {
        let parts: Vec<String> = self
            .variables
            .iter()
            .zip(x)
            .filter(|(_, v)| !v.is_zero())
            .map(|(n, v)| format!("{n}={v}"))
            .collect();
        if parts.is_empty() {
            "all zero".into()
        } else {
            parts.join(" ")
        }
    }

    pub fn to_json(&self) -> Value {
        let mut modes = Map::new();
        for m in self.mms.modes() {
            let mut rates = Map::new();
            for (name, r) in self.variables.iter().zip(&m.rate) {
                if !r.is_zero() {
                    rates.insert(name.clone(), Value::String(format_rational(r)));
                }
            }
            modes.insert(m.name.clone(), Value::Object(rates));
        }
        let point = |x: &Point| {
            let mut o = Map::new();
            for (name, v) in self.variables.iter().zip(x) {
                if !v.is_zero() {
                    o.insert(name.clone(), Value::String(format_rational(v)));
                }
            }
            Value::Object(o)
        };
        let clauses: Vec<Value> = self
            .safety
            .clauses
            .iter()
            .map(|c| {
                json!({
                    "clause": format!("phi_{}", c.phi.letter()),
                    "name": c.phi.title(),
                    "if": c.guard.as_ref().map(|g| g.render(&self.variables)),
                    "then": c.body.iter().map(|a| a.render(&self.variables)).collect::<Vec<_>>(),
                })
            })
            .collect();
        json!({
            "dimension": self.dimension(),
            "variables": self.variables,
            "modes": modes,
            "start": point(&self.start),
            "target": point(&self.target),
            "safety": clauses,
        })
    }
}

struct Builder {
    names: Vec<String>,
    index: HashMap<String, usize>,
}

impl Builder {
    fn add(&mut self, name: String) -> usize {
        if let Some(&i) = self.index.get(&name) {
            return i;
        }
        let i = self.names.len();
        self.index.insert(name.clone(), i);
        self.names.push(name);
        i
    }
}

/// Successors of instruction `i` in program order, without repeats.
fn edges(m: &CounterMachine, i: usize) -> Vec<usize> {
    match m.instructions()[i] {
        Instruction::Inc(_, j) | Instruction::Dec(_, j) => vec![j],
        Instruction::IfZero { pos, zero, .. } if pos == zero => vec![pos],
        Instruction::IfZero { pos, zero, .. } => vec![pos, zero],
        Instruction::Halt => vec![],
    }
}

/// Builds the reduction's modes, rates and the clauses `φ_a .. φ_g`.
///
/// Variables are ordered `s0, c1, c2`, then `X`, `W`, `Z`, then `w_halt`.
/// `φ_g` is stated as `x_{i,h} > 0 ⟹ x_{i,h} + w_halt + f = 1` where `f`
/// is the variable that feeds `x_{i,h}` (`w_{i,h}` or `z_{i#}`): without
/// `f` the clause already fails while `x_{i,h}` is being filled, before
/// `w_halt` has moved, and no halting run is safe.
pub fn compile(machine: &CounterMachine) -> CompiledSystem {
    let nm = Naming::for_machine(machine);
    let ins = machine.instructions();
    let h = machine.halt_index();
    let mut b = Builder {
        names: Vec::new(),
        index: HashMap::new(),
    };
    let s0 = b.add("s0".into());
    let counters = [b.add("c1".into()), b.add("c2".into())];
    let mut xs = Vec::new();
    for i in 0..ins.len() {
        for j in edges(machine, i) {
            xs.push(b.add(nm.x(i, j)));
        }
    }
    let mut ws = Vec::new();
    for (i, instr) in ins.iter().enumerate() {
        if let Instruction::Inc(_, j) | Instruction::Dec(_, j) = instr {
            ws.push(b.add(nm.w(i, *j)));
        }
    }
    let mut zs = Vec::new();
    for (i, instr) in ins.iter().enumerate() {
        if matches!(instr, Instruction::IfZero { .. }) {
            zs.push(b.add(nm.z(i)));
        }
    }
    let w_halt = b.add("w_halt".into());
    let n = b.names.len();
    let v = |name: String| b.index[&name];

    // Variable that grows while control sits at instruction `j`.
    let entry = |j: usize| -> usize {
        match ins[j] {
            Instruction::Inc(_, k) | Instruction::Dec(_, k) => v(nm.w(j, k)),
            Instruction::IfZero { .. } => v(nm.z(j)),
            Instruction::Halt => w_halt,
        }
    };

    let mut modes: Vec<Mode> = Vec::new();
    let mut push = |name: String, rates: &[(usize, i64)]| {
        let mut rate = vec![Rational::zero(); n];
        for &(var, r) in rates {
            rate[var] += Rational::from_integer(r.into());
        }
        modes.push(Mode { name, rate });
    };
    push(INITIAL_MODE.into(), &[(s0, -1), (entry(0), 1)]);
    for (i, instr) in ins.iter().enumerate() {
        match *instr {
            Instruction::Inc(c, j) | Instruction::Dec(c, j) => {
                let dc = if matches!(instr, Instruction::Inc(..)) { 1 } else { -1 };
                push(
                    nm.step_mode(i),
                    &[(v(nm.w(i, j)), -1), (v(nm.x(i, j)), 1), (counters[c.index()], dc)],
                );
            }
            Instruction::IfZero { pos, zero, .. } => {
                push(nm.branch_mode(i, true), &[(v(nm.z(i)), -1), (v(nm.x(i, pos)), 1)]);
                push(nm.branch_mode(i, false), &[(v(nm.z(i)), -1), (v(nm.x(i, zero)), 1)]);
            }
            Instruction::Halt => continue,
        }
        for j in edges(machine, i) {
            push(nm.edge_mode(i, j), &[(v(nm.x(i, j)), -1), (entry(j), 1)]);
        }
    }
    push(nm.halt_mode(h), &[(w_halt, -1)]);
    for c in [Counter::C1, Counter::C2] {
        push(nm.halt_counter_mode(h, c), &[(counters[c.index()], -1), (w_halt, 1)]);
    }

    let zero = Rational::zero;
    let one = Rational::one;
    let is_zero = |var: usize| LinAtom::var(var, Rel::Eq, zero());
    let positive = |var: usize| Some(LinAtom::var(var, Rel::Gt, zero()));
    let mut clauses = Vec::new();

    let mut init = Vec::new();
    for &y in ws.iter().chain([s0].iter()).chain(&xs).chain(&zs) {
        init.push(LinAtom::var(y, Rel::Ge, zero()));
        init.push(LinAtom::var(y, Rel::Le, one()));
    }
    for y in [w_halt, counters[0], counters[1]] {
        init.push(LinAtom::var(y, Rel::Ge, zero()));
    }
    clauses.push(Clause {
        phi: Phi::Init,
        guard: None,
        body: init,
    });
    let others = |set: &[usize], me: usize| -> Vec<LinAtom> {
        set.iter().filter(|&&y| y != me).map(|&y| is_zero(y)).collect()
    };
    let mut add = |phi: Phi, guard: Option<LinAtom>, body: Vec<LinAtom>| {
        if !body.is_empty() {
            clauses.push(Clause { phi, guard, body });
        }
    };
    for &x in &xs {
        add(Phi::MutexX, positive(x), others(&xs, x));
    }
    for &w in &ws {
        let mut body = others(&ws, w);
        body.extend(zs.iter().map(|&z| is_zero(z)));
        add(Phi::MutexWZ, positive(w), body);
    }
    for &z in &zs {
        let mut body = others(&zs, z);
        body.extend(ws.iter().map(|&w| is_zero(w)));
        add(Phi::MutexZW, positive(z), body);
    }
    add(Phi::MutexSX, positive(s0), xs.iter().map(|&x| is_zero(x)).collect());
    let x_halt: Vec<(usize, usize)> = (0..ins.len())
        .filter(|&i| edges(machine, i).contains(&h))
        .map(|i| (i, v(nm.x(i, h))))
        .collect();
    let quiet: Vec<LinAtom> = (0..n)
        .filter(|y| {
            *y != w_halt && !counters.contains(y) && !x_halt.iter().any(|(_, x)| x == y)
        })
        .map(is_zero)
        .collect();
    add(Phi::MutexHalt, positive(w_halt), quiet);
    for &(i, x) in &x_halt {
        let feeder = match ins[i] {
            Instruction::IfZero { .. } => v(nm.z(i)),
            _ => v(nm.w(i, h)),
        };
        add(
            Phi::SumHalt,
            positive(x),
            vec![LinAtom::sum(&[x, w_halt, feeder], Rel::Eq, one())],
        );
    }

    let mut start = vec![Rational::zero(); n];
    start[s0] = Rational::one();
    let mut target = vec![Rational::zero(); n];
    target[w_halt] = Rational::one();
    CompiledSystem {
        mms: Mms::new(n, modes).expect("mode names are distinct"),
        variables: b.names,
        safety: SafetyPredicate { clauses },
        start,
        target,
        naming: nm,
        index: b.index,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::int;

    #[test]
    fn looping_machine_modes_and_rates() {
        let sys = compile(&CounterMachine::looping_example());
        let names: Vec<&str> = sys.mms.modes().iter().map(|m| m.name.as_str()).collect();
        assert_eq!(
            names,
            ["I", "M0", "M01", "M1", "M12", "M2^1", "M2^2", "M23", "M20", "M3", "M3^c1", "M3^c2"]
        );
        let r = |mode: &str, var: &str| sys.mms.rate(mode).unwrap()[sys.var(var).unwrap()].clone();
        assert_eq!(r("I", "s0"), int(-1));
        assert_eq!(r("I", "w01"), int(1));
        assert_eq!(r("M0", "c1"), int(1));
        assert_eq!(r("M0", "w01"), int(-1));
        assert_eq!(r("M0", "x01"), int(1));
        assert_eq!(r("M1", "c1"), int(-1));
        assert_eq!(r("M2^1", "x23"), int(1));
        assert_eq!(r("M2^2", "x20"), int(1));
        assert_eq!(r("M12", "z2#"), int(1));
        assert_eq!(r("M20", "w01"), int(1));
        assert_eq!(r("M23", "w_halt"), int(1));
        assert_eq!(r("M3^c2", "c2"), int(-1));
        assert_eq!(sys.variables[0], "s0");
        assert_eq!(sys.variables.last().unwrap(), "w_halt");
    }

    #[test]
    fn start_and_target_are_safe() {
        let sys = compile(&CounterMachine::looping_example());
        assert!(sys.safety.holds(&sys.start));
        assert!(sys.safety.holds(&sys.target));
        let mut bad = sys.start.clone();
        bad[sys.var("w01").unwrap()] = crate::numeric::ratio(-1, 10);
        assert_eq!(sys.safety.violated(&bad), vec![Phi::Init]);
    }

    #[test]
    fn json_lists_every_clause() {
        let sys = compile(&CounterMachine::looping_example());
        let doc = sys.to_json();
        assert_eq!(doc["modes"].as_object().unwrap().len(), 12);
        assert_eq!(doc["safety"].as_array().unwrap().len(), sys.safety.clauses.len());
        assert_eq!(doc["start"]["s0"], "1");
        assert_eq!(doc["target"]["w_halt"], "1");
    }
}
