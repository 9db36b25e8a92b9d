//! Operational engine: an abstract machine with one monolithic memory and a
//! reorder buffer per processor, explored exhaustively.
//!
//! GAM and GAM0 run the out-of-order machine; SC runs the atomic machine that
//! executes one whole instruction of some processor per step.

mod explore;

use std::collections::BTreeMap;
use std::fmt;

pub use explore::{explore, explore_with, ExploreOptions, ExploreResult, FrontierOrder, Stats, DEFAULT_STATE_BUDGET};

use crate::error::{Error, Result};
use crate::litmus::{Access, AddressLayout, Instruction, Location, Program, Reg};
use crate::model::{Model, ModelConfig};
use crate::outcome::Outcome;

/// One reorder-buffer slot. The instruction is `code[proc][pc]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RobEntry {
    /// Fetch PC.
    pub pc: usize,
    pub done: bool,
    /// Load value or register-op result; for branches the resolved next PC.
    pub result: i64,
    /// Resolved address of a load or store.
    pub addr: Option<i64>,
    /// Computed data of a store.
    pub data: Option<i64>,
    /// Predicted next PC of a branch.
    pub predicted: Option<usize>,
}

impl RobEntry {
    fn fetched(pc: usize, predicted: Option<usize>) -> RobEntry {
        RobEntry { pc, done: false, result: 0, addr: None, data: None, predicted }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Processor {
    pub pc: usize,
    /// Oldest first; killed entries are removed.
    pub rob: Vec<RobEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MachineState {
    pub memory: BTreeMap<i64, i64>,
    pub procs: Vec<Processor>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Rule {
    Fetch,
    ExecRegToReg,
    ExecBranch,
    ExecFence,
    ExecLoad,
    ComputeStoreData,
    ExecStore,
    ComputeMemAddr,
    /// SC: execute the next instruction of a processor atomically.
    Commit,
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Transition {
    pub proc: usize,
    pub rule: Rule,
    /// Target ROB index (for Fetch and Commit, the index of the new entry).
    pub rob: usize,
    /// Predicted next PC for the fetch of a branch.
    pub prediction: Option<usize>,
}

/// What a transition did, for traces.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Effect {
    Fetched {
        pc: usize,
        predicted: Option<usize>,
    },
    Computed(i64),
    Branch {
        next: usize,
        killed: bool,
    },
    FenceDone,
    Stalled,
    Forwarded {
        from: usize,
        value: i64,
    },
    Read {
        addr: i64,
        value: i64,
    },
    Wrote {
        addr: i64,
        value: i64,
    },
    DataReady(i64),
    Address {
        addr: i64,
        killed_from: Option<(usize, usize)>,
    },
    /// SC commit; the inner effect describes what the instruction did.
    Committed(Box<Effect>),
}

pub struct Step {
    pub state: MachineState,
    pub effect: Effect,
}

/// The abstract machine of one program under one model.
pub struct Machine {
    code: Vec<Vec<Instruction>>,
    names: Vec<String>,
    init: BTreeMap<i64, i64>,
    layout: AddressLayout,
    model: Model,
}

impl Machine {
    pub fn new(program: &Program, cfg: &ModelConfig) -> Result<Machine> {
        if !cfg.model().has_operational_engine() {
            return Err(Error::UnsupportedModel(cfg.model()));
        }
        let layout = program.layout()?;
        Ok(Machine {
            code: program.bound_code(&layout),
            names: program.threads.iter().map(|t| t.name.clone()).collect(),
            init: program.initial_memory(&layout),
            layout,
            model: cfg.model(),
        })
    }

    pub fn model(&self) -> Model {
        self.model
    }

    pub fn layout(&self) -> &AddressLayout {
        &self.layout
    }

    pub fn initial_state(&self) -> MachineState {
        MachineState {
            memory: self.init.clone(),
            procs: self.code.iter().map(|_| Processor { pc: 0, rob: Vec::new() }).collect(),
        }
    }

    fn instr(&self, p: usize, e: &RobEntry) -> &Instruction {
        &self.code[p][e.pc]
    }

    /// Value of `r` as seen by ROB entry `i`: the youngest older writer's result,
    /// `None` while that writer is not done, 0 if there is none.
    fn operand(&self, p: usize, rob: &[RobEntry], i: usize, r: Reg) -> Option<i64> {
        match rob[..i].iter().rev().find(|e| self.instr(p, e).dest() == Some(r)) {
            Some(w) => w.done.then_some(w.result),
            None => Some(0),
        }
    }

    fn eval(&self, p: usize, rob: &[RobEntry], i: usize, e: &crate::litmus::Expr) -> Option<i64> {
        e.try_eval(&self.layout, &mut |r| self.operand(p, rob, i, r))
    }

    /// Whether every ROB is quiesced and every thread fully fetched.
    pub fn is_final(&self, s: &MachineState) -> bool {
        s.procs.iter().zip(&self.code).all(|(proc, code)| proc.pc >= code.len() && proc.rob.iter().all(|e| e.done))
    }

    /// Outcome of a final state over the program condition's locations.
    pub fn outcome(&self, program: &Program, s: &MachineState) -> Outcome {
        Outcome(
            program
                .condition
                .locations()
                .into_iter()
                .map(|loc| {
                    let v = match &loc {
                        Location::Reg { thread, reg } => {
                            let proc = &s.procs[*thread];
                            proc.rob
                                .iter()
                                .rev()
                                .find(|e| self.instr(*thread, e).dest() == Some(*reg))
                                .map_or(0, |e| e.result)
                        }
                        Location::Mem(l) => {
                            self.layout.address_of(l).and_then(|a| s.memory.get(&a).copied()).unwrap_or(0)
                        }
                    };
                    (loc, v)
                })
                .collect(),
        )
    }

    /// Transitions whose guards hold, in processor then ROB order.
    pub fn enabled_transitions(&self, s: &MachineState) -> Vec<Transition> {
        let mut out = Vec::new();
        for p in 0..s.procs.len() {
            if self.model == Model::Sc {
                if s.procs[p].pc < self.code[p].len() {
                    out.push(Transition { proc: p, rule: Rule::Commit, rob: s.procs[p].rob.len(), prediction: None });
                }
            } else {
                self.enabled_ooo(s, p, &mut out);
            }
        }
        out
    }

    fn enabled_ooo(&self, s: &MachineState, p: usize, out: &mut Vec<Transition>) {
        let proc = &s.procs[p];
        let rob = &proc.rob;
        let t = |rule, rob| Transition { proc: p, rule, rob, prediction: None };
        if proc.pc < self.code[p].len() {
            let next = rob.len();
            match &self.code[p][proc.pc] {
                Instruction::Branch { target, .. } => {
                    out.push(Transition { prediction: Some(proc.pc + 1), ..t(Rule::Fetch, next) });
                    if target.index != proc.pc + 1 {
                        out.push(Transition { prediction: Some(target.index), ..t(Rule::Fetch, next) });
                    }
                }
                _ => out.push(t(Rule::Fetch, next)),
            }
        }
        for (i, e) in rob.iter().enumerate() {
            let instr = self.instr(p, e);
            let older = &rob[..i];
            match instr {
                Instruction::RegOp { rhs, .. } if !e.done && self.eval(p, rob, i, rhs).is_some() => {
                    out.push(t(Rule::ExecRegToReg, i));
                }
                Instruction::Branch { cond, .. } if !e.done && self.eval(p, rob, i, cond).is_some() => {
                    out.push(t(Rule::ExecBranch, i));
                }
                Instruction::Fence(f)
                    if !e.done && older.iter().all(|o| o.done || self.instr(p, o).access() != Some(f.from)) =>
                {
                    out.push(t(Rule::ExecFence, i));
                }
                _ => {}
            }
            if let Some(addr_expr) = instr.address_expr() {
                if e.addr.is_none() && self.eval(p, rob, i, addr_expr).is_some() {
                    out.push(t(Rule::ComputeMemAddr, i));
                }
            }
            let fences_done = |to: Access| {
                older.iter().all(|o| o.done || !matches!(self.instr(p, o), Instruction::Fence(f) if f.to == to))
            };
            match instr {
                Instruction::Load { .. } if !e.done && e.addr.is_some() && fences_done(Access::Load) => {
                    out.push(t(Rule::ExecLoad, i));
                }
                Instruction::Store { data, .. } => {
                    if e.data.is_none() && self.eval(p, rob, i, data).is_some() {
                        out.push(t(Rule::ComputeStoreData, i));
                    }
                    if !e.done
                        && e.addr.is_some()
                        && e.data.is_some()
                        && older.iter().all(|o| !self.instr(p, o).is_branch() || o.done)
                        && older.iter().all(|o| !self.instr(p, o).is_memory() || o.addr.is_some())
                        && older.iter().all(|o| !self.instr(p, o).is_memory() || o.addr != e.addr || o.done)
                        && fences_done(Access::Store)
                    {
                        out.push(t(Rule::ExecStore, i));
                    }
                }
                _ => {}
            }
        }
    }

    /// Fires `t`, which must be enabled in `s`.
    pub fn apply_transition(&self, s: &MachineState, t: &Transition) -> Step {
        let mut next = s.clone();
        let effect = if t.rule == Rule::Commit {
            Effect::Committed(Box::new(self.commit(&mut next, t.proc)))
        } else {
            self.apply_ooo(&mut next, t)
        };
        Step { state: next, effect }
    }

    fn commit(&self, s: &mut MachineState, p: usize) -> Effect {
        let pc = s.procs[p].pc;
        let rob = &s.procs[p].rob;
        let i = rob.len();
        let instr = &self.code[p][pc];
        let mut entry = RobEntry::fetched(pc, None);
        entry.done = true;
        let eval = |e| self.eval(p, rob, i, e).expect("all older entries are done under SC");
        let mut next_pc = pc + 1;
        let effect = match instr {
            Instruction::RegOp { rhs, .. } => {
                entry.result = eval(rhs);
                Effect::Computed(entry.result)
            }
            Instruction::Branch { kind, cond, target } => {
                if kind.taken(eval(cond)) {
                    next_pc = target.index;
                }
                entry.result = next_pc as i64;
                Effect::Branch { next: next_pc, killed: false }
            }
            Instruction::Fence(_) => Effect::FenceDone,
            Instruction::Load { addr, .. } => {
                let a = eval(addr);
                entry.addr = Some(a);
                entry.result = s.memory.get(&a).copied().unwrap_or(0);
                Effect::Read { addr: a, value: entry.result }
            }
            Instruction::Store { addr, data } => {
                let (a, d) = (eval(addr), eval(data));
                entry.addr = Some(a);
                entry.data = Some(d);
                s.memory.insert(a, d);
                Effect::Wrote { addr: a, value: d }
            }
        };
        s.procs[p].rob.push(entry);
        s.procs[p].pc = next_pc;
        effect
    }

    fn apply_ooo(&self, s: &mut MachineState, t: &Transition) -> Effect {
        let p = t.proc;
        let i = t.rob;
        if t.rule == Rule::Fetch {
            let proc = &mut s.procs[p];
            let pc = proc.pc;
            proc.rob.push(RobEntry::fetched(pc, t.prediction));
            proc.pc = t.prediction.unwrap_or(pc + 1);
            return Effect::Fetched { pc, predicted: t.prediction };
        }
        let instr = self.instr(p, &s.procs[p].rob[i]).clone();
        match (t.rule, &instr) {
            (Rule::ExecRegToReg, Instruction::RegOp { rhs, .. }) => {
                let v = self.eval(p, &s.procs[p].rob, i, rhs).expect("guard: operands ready");
                let e = &mut s.procs[p].rob[i];
                e.result = v;
                e.done = true;
                Effect::Computed(v)
            }
            (Rule::ExecBranch, Instruction::Branch { kind, cond, target }) => {
                let v = self.eval(p, &s.procs[p].rob, i, cond).expect("guard: operands ready");
                let entry_pc = s.procs[p].rob[i].pc;
                let actual = if kind.taken(v) { target.index } else { entry_pc + 1 };
                let proc = &mut s.procs[p];
                let e = &mut proc.rob[i];
                e.result = actual as i64;
                e.done = true;
                let killed = e.predicted != Some(actual);
                if killed {
                    e.predicted = Some(actual);
                    proc.rob.truncate(i + 1);
                    proc.pc = actual;
                }
                Effect::Branch { next: actual, killed }
            }
            (Rule::ExecFence, Instruction::Fence(_)) => {
                s.procs[p].rob[i].done = true;
                Effect::FenceDone
            }
            (Rule::ComputeStoreData, Instruction::Store { data, .. }) => {
                let v = self.eval(p, &s.procs[p].rob, i, data).expect("guard: operands ready");
                s.procs[p].rob[i].data = Some(v);
                Effect::DataReady(v)
            }
            (Rule::ExecStore, Instruction::Store { .. }) => {
                let e = &mut s.procs[p].rob[i];
                let (a, d) = (e.addr.unwrap(), e.data.unwrap());
                e.done = true;
                s.memory.insert(a, d);
                Effect::Wrote { addr: a, value: d }
            }
            (Rule::ExecLoad, Instruction::Load { .. }) => self.exec_load(s, p, i),
            (Rule::ComputeMemAddr, _) => self.compute_mem_addr(s, p, i, &instr),
            _ => panic!("transition {t:?} does not match instruction {instr}"),
        }
    }

    fn exec_load(&self, s: &mut MachineState, p: usize, i: usize) -> Effect {
        let rob = &s.procs[p].rob;
        let addr = rob[i].addr.expect("guard: address available");
        let gam0 = self.model == Model::Gam0;
        let blocker = rob[..i].iter().enumerate().rev().find(|(_, o)| {
            let instr = self.instr(p, o);
            !o.done && o.addr == Some(addr) && (instr.is_store() || (instr.is_load() && !gam0))
        });
        let (value, effect) = match blocker {
            Some((_, o)) if self.instr(p, o).is_load() => return Effect::Stalled,
            Some((j, o)) => match o.data {
                Some(d) => (d, Effect::Forwarded { from: j, value: d }),
                None => return Effect::Stalled,
            },
            None => {
                let v = s.memory.get(&addr).copied().unwrap_or(0);
                (v, Effect::Read { addr, value: v })
            }
        };
        let e = &mut s.procs[p].rob[i];
        e.result = value;
        e.done = true;
        effect
    }

    fn compute_mem_addr(&self, s: &mut MachineState, p: usize, i: usize, instr: &Instruction) -> Effect {
        let addr_expr = instr.address_expr().expect("guard: memory instruction");
        let a = self.eval(p, &s.procs[p].rob, i, addr_expr).expect("guard: operands ready");
        s.procs[p].rob[i].addr = Some(a);
        let gam0 = self.model == Model::Gam0;
        if gam0 && instr.is_load() {
            return Effect::Address { addr: a, killed_from: None };
        }
        let rob = &s.procs[p].rob;
        // Under GAM0 younger loads are not ordered among themselves, so a store
        // looks past not-done loads for a stale done one.
        let hit = rob.iter().enumerate().skip(i + 1).find(|(_, y)| {
            let yi = self.instr(p, y);
            yi.is_memory() && y.addr == Some(a) && !(gam0 && yi.is_load() && !y.done)
        });
        let killed_from = match hit {
            Some((j, y)) if self.instr(p, y).is_load() && y.done => {
                let pc = y.pc;
                let proc = &mut s.procs[p];
                proc.rob.truncate(j);
                proc.pc = pc;
                Some((j, pc))
            }
            _ => None,
        };
        Effect::Address { addr: a, killed_from }
    }

    /// No done store was executed speculatively: every older branch is done and
    /// every older memory instruction has its address.
    pub fn stores_not_speculative(&self, s: &MachineState) -> bool {
        s.procs.iter().enumerate().all(|(p, proc)| {
            proc.rob.iter().enumerate().all(|(i, e)| {
                !(self.instr(p, e).is_store() && e.done)
                    || proc.rob[..i].iter().all(|o| {
                        let oi = self.instr(p, o);
                        (!oi.is_branch() || o.done) && (!oi.is_memory() || o.addr.is_some())
                    })
            })
        })
    }

    /// One trace line, e.g. `P1 ExecLoad rob[2] -> read m[0x100]=0`.
    pub fn describe(&self, t: &Transition, effect: &Effect) -> String {
        format!("{} {} rob[{}] -> {}", self.names[t.proc], t.rule, t.rob, self.describe_effect(effect))
    }

    fn describe_effect(&self, effect: &Effect) -> String {
        match effect {
            Effect::Fetched { pc, predicted: None } => format!("fetch pc={pc}"),
            Effect::Fetched { pc, predicted: Some(n) } => format!("fetch pc={pc} predict {n}"),
            Effect::Computed(v) => format!("result {v}"),
            Effect::Branch { next, killed: false } => format!("next pc={next}"),
            Effect::Branch { next, killed: true } => format!("mispredict; kill younger; pc={next}"),
            Effect::FenceDone => "done".to_string(),
            Effect::Stalled => "stall".to_string(),
            Effect::Forwarded { from, value } => format!("forward rob[{from}]={value}"),
            Effect::Read { addr, value } => format!("read m[{addr:#x}]={value}"),
            Effect::Wrote { addr, value } => format!("write m[{addr:#x}]={value}"),
            Effect::DataReady(v) => format!("data {v}"),
            Effect::Address { addr, killed_from: None } => format!("addr {addr:#x}"),
            Effect::Address { addr, killed_from: Some((j, pc)) } => {
                format!("addr {addr:#x}; kill rob[{j}..]; pc={pc}")
            }
            Effect::Committed(inner) => self.describe_effect(inner),
        }
    }
}
