//! Two-counter machines, their compilation into a multi-mode system with a
//! guarded-linear safety predicate, and the induced unit-step simulation.

mod compile;
mod induced;
mod safety;

use std::fmt;

use thiserror::Error;

pub use compile::{compile, CompiledSystem, Naming};
pub use induced::{simulate_induced, InducedError, InducedRun, LemmaReport, Probe, StepReport};
pub use safety::{Clause, LinAtom, Phi, Rel, SafetyPredicate};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Counter {
    C1,
    C2,
}

impl Counter {
    pub fn index(self) -> usize {
        match self {
            Counter::C1 => 0,
            Counter::C2 => 1,
        }
    }
}

impl fmt::Display for Counter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Counter::C1 => "c1",
            Counter::C2 => "c2",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Instruction {
    Inc(Counter, usize),
    Dec(Counter, usize),
    /// `if counter > 0 goto pos else goto zero`.
    IfZero { counter: Counter, pos: usize, zero: usize },
    Halt,
}

impl fmt::Display for Instruction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Instruction::Inc(c, j) => write!(f, "inc {c} goto {j}"),
            Instruction::Dec(c, j) => write!(f, "dec {c} goto {j}"),
            Instruction::IfZero { counter, pos, zero } => {
                write!(f, "ifz {counter} pos {pos} zero {zero}")
            }
            Instruction::Halt => f.write_str("halt"),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CcmError {
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("machine has no instructions")]
    Empty,
    #[error("instruction 0 must be an increment")]
    FirstNotIncrement,
    #[error("instruction {at} jumps to {target}, but there are only {len} instructions")]
    TargetOutOfRange { at: usize, target: usize, len: usize },
    #[error("expected exactly one halt instruction, found {0}")]
    HaltCount(usize),
}

/// A Minsky machine with instructions `ℓ_0 .. ℓ_{n-1}`, one of them `halt`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CounterMachine {
    instructions: Vec<Instruction>,
}

impl CounterMachine {
    pub fn new(instructions: Vec<Instruction>) -> Result<Self, CcmError> {
        let len = instructions.len();
        let Some(first) = instructions.first() else {
            return Err(CcmError::Empty);
        };
        if !matches!(first, Instruction::Inc(..)) {
            return Err(CcmError::FirstNotIncrement);
        }
        for (at, ins) in instructions.iter().enumerate() {
            let targets: &[usize] = match ins {
                Instruction::Inc(_, j) | Instruction::Dec(_, j) => std::slice::from_ref(j),
                Instruction::IfZero { pos, zero, .. } => &[*pos, *zero],
                Instruction::Halt => &[],
            };
            if let Some(&target) = targets.iter().find(|&&t| t >= len) {
                return Err(CcmError::TargetOutOfRange { at, target, len });
            }
        }
        let halts = instructions
            .iter()
            .filter(|i| matches!(i, Instruction::Halt))
            .count();
        if halts != 1 {
            return Err(CcmError::HaltCount(halts));
        }
        Ok(Self { instructions })
    }

    pub fn instructions(&self) -> &[Instruction] {
        &self.instructions
    }

    pub fn len(&self) -> usize {
        self.instructions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instructions.is_empty()
    }

    pub fn halt_index(&self) -> usize {
        self.instructions
            .iter()
            .position(|i| matches!(i, Instruction::Halt))
            .expect("validated machine has a halt")
    }

    /// `inc c1; dec c1; if c2 > 0 goto 3 else 0; halt`. Loops forever since c2 stays 0.
    pub fn looping_example() -> Self {
        Self::new(vec![
            Instruction::Inc(Counter::C1, 1),
            Instruction::Dec(Counter::C1, 2),
            Instruction::IfZero {
                counter: Counter::C2,
                pos: 3,
                zero: 0,
            },
            Instruction::Halt,
        ])
        .unwrap()
    }

    pub fn to_text(&self) -> String {
        self.instructions
            .iter()
            .map(|i| format!("{i}\n"))
            .collect()
    }
}

fn parse_counter(tok: Option<&str>, line: usize) -> Result<Counter, CcmError> {
    match tok {
        Some("c1") => Ok(Counter::C1),
        Some("c2") => Ok(Counter::C2),
        other => Err(CcmError::Parse {
            line,
            reason: format!("expected c1 or c2, got {other:?}"),
        }),
    }
}

fn parse_target(keyword: &str, toks: &mut std::str::SplitWhitespace<'_>, line: usize) -> Result<usize, CcmError> {
    let bad = |reason: String| CcmError::Parse { line, reason };
    match toks.next() {
        Some(k) if k == keyword => {}
        other => return Err(bad(format!("expected {keyword:?}, got {other:?}"))),
    }
    let t = toks
        .next()
        .ok_or_else(|| bad(format!("missing target after {keyword:?}")))?;
    t.parse()
        .map_err(|_| bad(format!("bad instruction index {t:?}")))
}

/// One instruction per non-blank line; `#` starts a comment.
///
/// ```text
/// inc c1 goto 1
/// dec c1 goto 2
/// ifz c2 pos 3 zero 0
/// halt
/// ```
pub fn parse_machine(text: &str) -> Result<CounterMachine, CcmError> {
    let mut instructions = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let mut toks = body.split_whitespace();
        let op = toks.next().unwrap();
        let ins = match op {
            "inc" | "dec" => {
                let c = parse_counter(toks.next(), line)?;
                let j = parse_target("goto", &mut toks, line)?;
                if op == "inc" {
                    Instruction::Inc(c, j)
                } else {
                    Instruction::Dec(c, j)
                }
            }
            "ifz" => {
                let counter = parse_counter(toks.next(), line)?;
                let pos = parse_target("pos", &mut toks, line)?;
                let zero = parse_target("zero", &mut toks, line)?;
                Instruction::IfZero { counter, pos, zero }
            }
            "halt" => Instruction::Halt,
            other => {
                return Err(CcmError::Parse {
                    line,
                    reason: format!("unknown instruction {other:?}"),
                })
            }
        };
        if let Some(extra) = toks.next() {
            return Err(CcmError::Parse {
                line,
                reason: format!("unexpected token {extra:?}"),
            });
        }
        instructions.push(ins);
    }
    CounterMachine::new(instructions)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Config {
    pub pc: usize,
    pub counters: [u64; 2],
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MachineTrace {
    pub configs: Vec<Config>,
    pub halted: bool,
    /// Steps that decremented a zero counter (clamped at 0).
    pub clamped: Vec<usize>,
}

/// Executes one instruction; `None` at `halt`. The flag reports a clamped
/// decrement.
pub fn step(machine: &CounterMachine, cfg: Config) -> Option<(Config, bool)> {
    let mut next = cfg;
    let mut clamped = false;
    match machine.instructions[cfg.pc] {
        Instruction::Inc(c, j) => {
            next.counters[c.index()] += 1;
            next.pc = j;
        }
        Instruction::Dec(c, j) => {
            let v = &mut next.counters[c.index()];
            if *v == 0 {
                clamped = true;
            } else {
                *v -= 1;
            }
            next.pc = j;
        }
        Instruction::IfZero { counter, pos, zero } => {
            next.pc = if cfg.counters[counter.index()] > 0 { pos } else { zero };
        }
        Instruction::Halt => return None,
    }
    Some((next, clamped))
}

/// The unique run from `(ℓ_0, 0, 0)`, cut after `max_steps` transitions.
pub fn simulate_machine(machine: &CounterMachine, max_steps: usize) -> MachineTrace {
    let mut cfg = Config {
        pc: 0,
        counters: [0, 0],
    };
    let mut trace = MachineTrace {
        configs: vec![cfg],
        halted: false,
        clamped: Vec::new(),
    };
    for n in 0..max_steps {
        match step(machine, cfg) {
            Some((next, clamped)) => {
                if clamped {
                    trace.clamped.push(n);
                }
                cfg = next;
                trace.configs.push(cfg);
            }
            None => break,
        }
    }
    trace.halted = matches!(machine.instructions[cfg.pc], Instruction::Halt);
    trace
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(pc: usize, a: u64, b: u64) -> Config {
        Config {
            pc,
            counters: [a, b],
        }
    }

    #[test]
    fn parses_and_prints() {
        let text = "inc c1 goto 1\ndec c1 goto 2  # down\n\nifz c2 pos 3 zero 0\nhalt\n";
        let m = parse_machine(text).unwrap();
        assert_eq!(m, CounterMachine::looping_example());
        assert_eq!(parse_machine(&m.to_text()).unwrap(), m);
    }

    #[test]
    fn rejects_malformed() {
        assert_eq!(parse_machine("halt\n"), Err(CcmError::FirstNotIncrement));
        assert_eq!(parse_machine(""), Err(CcmError::Empty));
        assert_eq!(
            parse_machine("inc c1 goto 5\nhalt"),
            Err(CcmError::TargetOutOfRange {
                at: 0,
                target: 5,
                len: 2
            })
        );
        assert_eq!(parse_machine("inc c1 goto 0"), Err(CcmError::HaltCount(0)));
        assert!(matches!(parse_machine("inc c3 goto 0\nhalt"), Err(CcmError::Parse { line: 1, .. })));
        assert!(matches!(parse_machine("inc c1 goto 1\njump 0"), Err(CcmError::Parse { line: 2, .. })));
        assert!(matches!(parse_machine("inc c1 goto 1 now\nhalt"), Err(CcmError::Parse { .. })));
    }

    #[test]
    fn looping_machine_has_period_three() {
        let t = simulate_machine(&CounterMachine::looping_example(), 9);
        assert!(!t.halted);
        assert_eq!(&t.configs[..4], &[cfg(0, 0, 0), cfg(1, 1, 0), cfg(2, 0, 0), cfg(0, 0, 0)]);
        assert_eq!(t.configs.len(), 10);
        assert_eq!(t.configs[9], cfg(0, 0, 0));
        assert!(t.clamped.is_empty());
    }

    #[test]
    fn trivial_halts() {
        let m = parse_machine("inc c1 goto 1\nhalt").unwrap();
        let t = simulate_machine(&m, 10);
        assert!(t.halted);
        assert_eq!(t.configs, vec![cfg(0, 0, 0), cfg(1, 1, 0)]);
        let z = simulate_machine(&m, 0);
        assert_eq!(z.configs, vec![cfg(0, 0, 0)]);
        assert!(!z.halted);
    }

    #[test]
    fn zero_decrement_is_clamped() {
        let m = parse_machine("inc c1 goto 1\ndec c2 goto 2\nhalt").unwrap();
        let t = simulate_machine(&m, 10);
        assert!(t.halted);
        assert_eq!(t.clamped, vec![1]);
        assert_eq!(t.configs.last().unwrap().counters, [1, 0]);
    }
}
