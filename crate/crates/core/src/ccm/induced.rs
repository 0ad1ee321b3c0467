use std::collections::{BTreeSet, VecDeque};
use std::fmt;

use num_traits::{One, Zero};
use thiserror::Error;

use super::compile::{CompiledSystem, INITIAL_MODE};
use super::safety::Phi;
use super::{step, Config, Counter, CounterMachine, Instruction, MachineTrace};
use crate::model::{Run, TimedAction};
use crate::numeric::{add, ratio, scale, Rational};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum InducedError {
    #[error("compiled system has no mode {0:?}")]
    MissingMode(String),
    #[error("step {step} ({mode}) leaves the safety set: {clause} at t = {at}")]
    NominalUnsafe {
        step: usize,
        mode: String,
        clause: Phi,
        at: Rational,
    },
}

/// One deviation from the nominal schedule. It is rejected when no
/// continuation escapes the safety predicate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Probe {
    pub label: String,
    pub rejected_by: Vec<Phi>,
    pub escapes: Vec<String>,
}

impl Probe {
    pub fn rejected(&self) -> bool {
        self.escapes.is_empty()
    }
}

impl fmt::Display for Probe {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.rejected() {
            let names: Vec<String> = self.rejected_by.iter().map(|p| format!("phi_{}", p.letter())).collect();
            write!(f, "{}: rejected by {}", self.label, names.join(","))
        } else {
            write!(f, "{}: ACCEPTED via {}", self.label, self.escapes.join(","))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepReport {
    pub step: usize,
    pub mode: String,
    pub durations: Vec<Probe>,
    pub successors: Vec<Probe>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LemmaReport {
    /// Every first mode other than `I`.
    pub start: Vec<Probe>,
    pub steps: Vec<StepReport>,
}

impl LemmaReport {
    pub fn probes(&self) -> impl Iterator<Item = (usize, &Probe)> {
        self.start.iter().map(|p| (0, p)).chain(
            self.steps
                .iter()
                .flat_map(|s| s.durations.iter().chain(&s.successors).map(move |p| (s.step, p))),
        )
    }

    pub fn accepted(&self) -> Vec<(usize, &Probe)> {
        self.probes().filter(|(_, p)| !p.rejected()).collect()
    }

    pub fn all_rejected(&self) -> bool {
        self.probes().all(|(_, p)| p.rejected())
    }

    pub fn clauses_used(&self) -> BTreeSet<Phi> {
        self.probes().flat_map(|(_, p)| p.rejected_by.iter().copied()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InducedRun {
    pub run: Run,
    pub machine: MachineTrace,
    pub halted: bool,
    pub reached_target: bool,
    /// Boundaries where the state does not encode the machine configuration.
    pub mismatches: Vec<String>,
    pub report: LemmaReport,
}

impl InducedRun {
    pub fn modes(&self) -> Vec<&str> {
        self.run.actions.iter().map(|a| a.mode.as_str()).collect()
    }
}

struct Sim<'a> {
    sys: &'a CompiledSystem,
    machine: &'a CounterMachine,
}

impl Sim<'_> {
    fn rate(&self, mode: &str) -> Result<&[Rational], InducedError> {
        self.sys
            .mms
            .rate(mode)
            .ok_or_else(|| InducedError::MissingMode(mode.to_owned()))
    }

    /// The two modes that execute the instruction at `cfg`.
    fn pair(&self, cfg: Config) -> Option<[String; 2]> {
        let nm = &self.sys.naming;
        let i = cfg.pc;
        match self.machine.instructions()[i] {
            Instruction::Inc(_, j) | Instruction::Dec(_, j) => Some([nm.step_mode(i), nm.edge_mode(i, j)]),
            Instruction::IfZero { counter, pos, zero } => {
                let positive = cfg.counters[counter.index()] > 0;
                let j = if positive { pos } else { zero };
                Some([nm.branch_mode(i, positive), nm.edge_mode(i, j)])
            }
            Instruction::Halt => None,
        }
    }

    fn halt_modes(&self) -> Vec<String> {
        let nm = &self.sys.naming;
        let h = self.machine.halt_index();
        vec![
            nm.halt_mode(h),
            nm.halt_counter_mode(h, Counter::C1),
            nm.halt_counter_mode(h, Counter::C2),
        ]
    }

    /// The variable that holds 1 while control is at `pc`.
    fn marker(&self, pc: usize) -> usize {
        let nm = &self.sys.naming;
        let name = match self.machine.instructions()[pc] {
            Instruction::Inc(_, k) | Instruction::Dec(_, k) => nm.w(pc, k),
            Instruction::IfZero { .. } => nm.z(pc),
            Instruction::Halt => "w_halt".into(),
        };
        self.sys.var(&name).expect("compiled from this machine")
    }

    fn encodes(&self, x: &[Rational], cfg: Config) -> Result<(), String> {
        let c = [self.sys.var("c1").unwrap(), self.sys.var("c2").unwrap()];
        let mark = self.marker(cfg.pc);
        for (v, val) in x.iter().enumerate() {
            let want = if let Some(k) = c.iter().position(|&cv| cv == v) {
                Rational::from_integer(cfg.counters[k].into())
            } else if v == mark {
                Rational::one()
            } else {
                Rational::zero()
            };
            if *val != want {
                return Err(format!(
                    "at l{} {:?}: {} = {val}, expected {want}",
                    cfg.pc, cfg.counters, self.sys.variables[v]
                ));
            }
        }
        Ok(())
    }

    /// Successor probes at `x`: every mode outside `allowed` must be unsafe
    /// for any positive dwell.
    fn successors(&self, x: &[Rational], allowed: &[String]) -> Vec<Probe> {
        self.sys
            .mms
            .modes()
            .iter()
            .filter(|m| !allowed.contains(&m.name))
            .map(|m| match self.sys.safety.immediate_violation(x, &m.rate) {
                Some(phi) => Probe {
                    label: m.name.clone(),
                    rejected_by: vec![phi],
                    escapes: vec![],
                },
                None => Probe {
                    label: m.name.clone(),
                    rejected_by: vec![],
                    escapes: vec![m.name.clone()],
                },
            })
            .collect()
    }

    /// Dwell `t ≠ 1` in `mode` from `x`: a longer dwell must leave the set
    /// on the way, a shorter one must leave no safe switch.
    fn duration_probe(&self, x: &[Rational], mode: &str, t: Rational) -> Result<Probe, InducedError> {
        let r = self.rate(mode)?;
        let label = format!("t={t}");
        if let Some((phi, _)) = self.sys.safety.segment_violation(x, r, &t) {
            return Ok(Probe {
                label,
                rejected_by: vec![phi],
                escapes: vec![],
            });
        }
        let y = add(x, &scale(r, &t));
        if y == self.sys.target {
            return Ok(Probe {
                label,
                rejected_by: vec![],
                escapes: vec!["target".into()],
            });
        }
        let mut probe = Probe {
            label,
            rejected_by: vec![],
            escapes: vec![],
        };
        for m in self.sys.mms.modes().iter().filter(|m| m.name != mode) {
            match self.sys.safety.immediate_violation(&y, &m.rate) {
                Some(phi) => {
                    if !probe.rejected_by.contains(&phi) {
                        probe.rejected_by.push(phi);
                    }
                }
                None => probe.escapes.push(m.name.clone()),
            }
        }
        probe.rejected_by.sort();
        Ok(probe)
    }
}

/// Drives the compiled system through the schedule that mirrors the
/// machine's run, one time unit per mode, for at most `max_mode_steps`
/// modes; appends the halt phase if the machine halts in that horizon.
///
/// Each unit step is checked exactly against the safety predicate, the
/// state is compared with the machine configuration after `I` and after
/// each instruction, and the report records how each dwell of 1/2 or 3/2
/// and each other successor mode is rejected.
pub fn simulate_induced(
    sys: &CompiledSystem,
    machine: &CounterMachine,
    max_mode_steps: usize,
) -> Result<InducedRun, InducedError> {
    let sim = Sim { sys, machine };
    let one = Rational::one();
    let mut x = sys.start.clone();
    let mut run = Run {
        states: vec![x.clone()],
        actions: vec![],
    };
    let mut report = LemmaReport {
        start: sim.successors(&x, &[INITIAL_MODE.to_owned()]),
        steps: vec![],
    };
    let mut trace = MachineTrace {
        configs: vec![Config {
            pc: 0,
            counters: [0, 0],
        }],
        halted: false,
        clamped: vec![],
    };
    let mut mismatches = Vec::new();
    // The configuration whose instruction the queued modes execute.
    let mut cfg = trace.configs[0];
    let mut queue: VecDeque<String> = VecDeque::from([INITIAL_MODE.to_owned()]);
    let mut n = 0;
    while n < max_mode_steps {
        if queue.is_empty() {
            match sim.pair(cfg) {
                Some(p) => queue.extend(p),
                None => break,
            }
        }
        let mode = queue.pop_front().unwrap();
        n += 1;
        let r = sim.rate(&mode)?.to_vec();
        if let Some((clause, at)) = sys.safety.segment_violation(&x, &r, &one) {
            return Err(InducedError::NominalUnsafe {
                step: n,
                mode,
                clause,
                at,
            });
        }
        let durations = vec![
            sim.duration_probe(&x, &mode, ratio(1, 2))?,
            sim.duration_probe(&x, &mode, ratio(3, 2))?,
        ];
        x = add(&x, &r);
        run.states.push(x.clone());
        run.actions.push(TimedAction::new(mode.clone(), one.clone()));

        if queue.is_empty() {
            if mode != INITIAL_MODE {
                let (next, clamped) = step(machine, cfg).expect("queued modes execute an instruction");
                if clamped {
                    trace.clamped.push(trace.configs.len() - 1);
                }
                cfg = next;
                trace.configs.push(cfg);
            }
            if let Err(e) = sim.encodes(&x, cfg) {
                mismatches.push(format!("after step {n} ({mode}): {e}"));
            }
        }
        let allowed = match queue.front() {
            Some(next) => vec![next.clone()],
            None => match sim.pair(cfg) {
                Some(p) => vec![p[0].clone()],
                None => sim.halt_modes(),
            },
        };
        report.steps.push(StepReport {
            step: n,
            mode,
            durations,
            successors: sim.successors(&x, &allowed),
        });
    }
    let in_halt = queue.is_empty() && sim.pair(cfg).is_none();
    if in_halt {
        trace.halted = true;
        let nm = &sys.naming;
        let h = machine.halt_index();
        let mut phase = Vec::new();
        for c in [Counter::C1, Counter::C2] {
            for _ in 0..cfg.counters[c.index()] {
                phase.push(nm.halt_counter_mode(h, c));
                phase.push(nm.halt_mode(h));
            }
        }
        for mode in phase {
            n += 1;
            let r = sim.rate(&mode)?.to_vec();
            if let Some((clause, at)) = sys.safety.segment_violation(&x, &r, &one) {
                return Err(InducedError::NominalUnsafe {
                    step: n,
                    mode,
                    clause,
                    at,
                });
            }
            x = add(&x, &r);
            run.states.push(x.clone());
            run.actions.push(TimedAction::new(mode, one.clone()));
        }
    }
    let reached_target = x == sys.target;
    Ok(InducedRun {
        run,
        halted: trace.halted,
        machine: trace,
        reached_target,
        mismatches,
        report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ccm::{compile, parse_machine};

    #[test]
    fn looping_run_cycles_and_never_halts() {
        let m = CounterMachine::looping_example();
        let sys = compile(&m);
        let out = simulate_induced(&sys, &m, 100).unwrap();
        let modes = out.modes();
        assert_eq!(modes.len(), 100);
        assert_eq!(modes[0], "I");
        let cycle = ["M0", "M01", "M1", "M12", "M2^2", "M20"];
        for (i, m) in modes[1..].iter().enumerate() {
            assert_eq!(*m, cycle[i % 6]);
        }
        assert!(!out.halted);
        assert!(!out.reached_target);
        assert!(out.mismatches.is_empty(), "{:?}", out.mismatches);
        for s in &out.report.steps {
            assert!(s.durations.iter().all(Probe::rejected), "step {}: {:?}", s.step, s.durations);
        }
        assert!(out.report.start.iter().all(Probe::rejected));
    }

    #[test]
    fn halting_machine_reaches_target() {
        let m = parse_machine("inc c1 goto 1\ndec c1 goto 2\nifz c1 pos 0 zero 3\nhalt").unwrap();
        let sys = compile(&m);
        let out = simulate_induced(&sys, &m, 50).unwrap();
        assert!(out.halted);
        assert!(out.reached_target);
        assert_eq!(out.modes(), ["I", "M0", "M01", "M1", "M12", "M2^2", "M23"]);
        assert!(out.mismatches.is_empty(), "{:?}", out.mismatches);
    }

    #[test]
    fn halt_phase_drains_counters() {
        let m = parse_machine("inc c1 goto 1\ninc c2 goto 2\ninc c1 goto 3\nhalt").unwrap();
        let sys = compile(&m);
        let out = simulate_induced(&sys, &m, 50).unwrap();
        assert!(out.reached_target, "{:?}", out.run.states.last());
        let tail: Vec<&str> = out.modes()[7..].to_vec();
        assert_eq!(tail, ["M3^c1", "M3", "M3^c1", "M3", "M3^c2", "M3"]);
    }

    #[test]
    fn short_initial_dwell_is_rejected() {
        let m = CounterMachine::looping_example();
        let sys = compile(&m);
        let out = simulate_induced(&sys, &m, 1).unwrap();
        let half = &out.report.steps[0].durations[0];
        assert_eq!(half.label, "t=1/2");
        assert!(half.rejected());
    }
}
