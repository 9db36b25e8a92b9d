//! Candidate-execution enumeration: committed paths, read-from maps and value
//! propagation.

use std::collections::{BTreeMap, HashMap};

use super::CandidateExecution;
use crate::deps::{InstId, InstrInstance, RfSource};
use crate::error::Result;
use crate::litmus::{AddressLayout, Instruction, Program, Reg, RegisterFile};

/// One branch-resolved walk through a thread: `(pc, branch decision)` per step.
pub(crate) type PathShape = Vec<(usize, Option<bool>)>;

/// Every walk through forward-branching code, taking each branch both ways.
pub(crate) fn thread_paths(code: &[Instruction]) -> Vec<PathShape> {
    fn walk(code: &[Instruction], pc: usize, prefix: &mut PathShape, out: &mut Vec<PathShape>) {
        if pc >= code.len() {
            out.push(prefix.clone());
            return;
        }
        match &code[pc] {
            Instruction::Branch { target, .. } => {
                for taken in [false, true] {
                    prefix.push((pc, Some(taken)));
                    let next = if taken { target.index } else { pc + 1 };
                    walk(code, next, prefix, out);
                    prefix.pop();
                }
            }
            _ => {
                prefix.push((pc, None));
                walk(code, pc + 1, prefix, out);
                prefix.pop();
            }
        }
    }
    let mut out = Vec::new();
    walk(code, 0, &mut Vec::new(), &mut out);
    out
}

/// Flat view of one combination of thread paths.
struct Skeleton<'a> {
    code: &'a [Vec<Instruction>],
    shapes: Vec<&'a PathShape>,
    /// Flat index of the first instance of each thread.
    offsets: Vec<usize>,
    /// Instance id of each flat index.
    flat_ids: Vec<InstId>,
    total: usize,
}

impl Skeleton<'_> {
    fn instr(&self, t: usize, i: usize) -> &Instruction {
        &self.code[t][self.shapes[t][i].0]
    }

    fn flat(&self, id: InstId) -> usize {
        self.offsets[id.thread] + id.index
    }

    fn instr_flat(&self, k: usize) -> &Instruction {
        let id = self.flat_ids[k];
        self.instr(id.thread, id.index)
    }
}

/// Values known so far for one read-from assignment, indexed by flat instance.
#[derive(Clone)]
struct Valuation {
    addr: Vec<Option<i64>>,
    value: Vec<Option<i64>>,
}

struct Propagator<'a> {
    sk: &'a Skeleton<'a>,
    layout: &'a AddressLayout,
    init: &'a BTreeMap<i64, i64>,
    rf: &'a HashMap<usize, RfSource>,
    domain: &'a [i64],
}

impl Propagator<'_> {
    fn source_value(&self, v: &Valuation, load: usize, addr: Option<i64>) -> Option<i64> {
        match self.rf[&load] {
            RfSource::Init => addr.map(|a| self.init.get(&a).copied().unwrap_or(0)),
            RfSource::Store(s) => v.value[self.sk.flat(s)],
        }
    }

    /// One evaluation pass over every thread; returns whether anything changed.
    fn pass(&self, v: &mut Valuation, guessed: &HashMap<usize, i64>) -> bool {
        let mut changed = false;
        for (t, shape) in self.sk.shapes.iter().enumerate() {
            let mut regs: HashMap<Reg, Option<i64>> = HashMap::new();
            for i in 0..shape.len() {
                let k = self.sk.offsets[t] + i;
                let mut read = |r: Reg| regs.get(&r).copied().unwrap_or(Some(0));
                let (addr, value) = match self.sk.instr(t, i) {
                    Instruction::Load { addr, .. } => {
                        let a = addr.try_eval(self.layout, &mut read);
                        let val = guessed.get(&k).copied().or_else(|| self.source_value(v, k, a));
                        (a, val)
                    }
                    Instruction::Store { addr, data } => {
                        (addr.try_eval(self.layout, &mut read), data.try_eval(self.layout, &mut read))
                    }
                    Instruction::RegOp { rhs, .. } => (None, rhs.try_eval(self.layout, &mut read)),
                    Instruction::Branch { cond, .. } => (None, cond.try_eval(self.layout, &mut read)),
                    Instruction::Fence(_) => (None, None),
                };
                if let Some(d) = self.sk.instr(t, i).dest() {
                    regs.insert(d, value);
                }
                if v.addr[k] != addr || v.value[k] != value {
                    v.addr[k] = addr;
                    v.value[k] = value;
                    changed = true;
                }
            }
        }
        changed
    }

    /// Propagates to a fixpoint; `None` when the iteration cap is hit.
    fn fixpoint(&self, guessed: &HashMap<usize, i64>) -> Option<Valuation> {
        let n = self.sk.total;
        let mut v = Valuation { addr: vec![None; n], value: vec![None; n] };
        let cap = (n * n).max(2);
        for _ in 0..cap {
            if !self.pass(&mut v, guessed) {
                return Some(v);
            }
        }
        None
    }

    /// All consistent valuations, guessing values for loads caught in value cycles.
    fn solve(&self, guessed: &mut HashMap<usize, i64>, out: &mut Vec<Valuation>) {
        let Some(v) = self.fixpoint(guessed) else { return };
        let unknown = (0..self.sk.total).find(|&k| self.sk.instr_flat(k).is_load() && v.value[k].is_none());
        match unknown {
            Some(k) => {
                for &d in self.domain {
                    guessed.insert(k, d);
                    self.solve(guessed, out);
                }
                guessed.remove(&k);
            }
            None => {
                if guessed.iter().all(|(&k, &g)| self.source_value(&v, k, v.addr[k]) == Some(g)) {
                    out.push(v);
                }
            }
        }
    }
}

/// Every value-consistent candidate execution of `program`.
pub fn enumerate_executions(program: &Program) -> Result<Vec<CandidateExecution>> {
    let layout = program.layout()?;
    let code = program.bound_code(&layout);
    let init = program.initial_memory(&layout);
    let domain: Vec<i64> = program.value_domain(&layout).into_iter().collect();
    let per_thread: Vec<Vec<PathShape>> = code.iter().map(|c| thread_paths(c)).collect();

    let mut out = Vec::new();
    for_each_combination(&per_thread, &mut |shapes| {
        let mut offsets = Vec::new();
        let mut total = 0;
        for s in &shapes {
            offsets.push(total);
            total += s.len();
        }
        let flat_ids = shapes
            .iter()
            .enumerate()
            .flat_map(|(thread, s)| (0..s.len()).map(move |index| InstId { thread, index }))
            .collect();
        let sk = Skeleton { code: &code, shapes, offsets, flat_ids, total };
        enumerate_for_skeleton(&sk, &layout, &init, &domain, &mut out);
    });
    Ok(out)
}

fn for_each_combination<'a>(per_thread: &'a [Vec<PathShape>], f: &mut impl FnMut(Vec<&'a PathShape>)) {
    let mut idx = vec![0usize; per_thread.len()];
    loop {
        f(idx.iter().enumerate().map(|(t, &i)| &per_thread[t][i]).collect());
        let mut t = per_thread.len();
        loop {
            if t == 0 {
                return;
            }
            t -= 1;
            idx[t] += 1;
            if idx[t] < per_thread[t].len() {
                break;
            }
            idx[t] = 0;
        }
    }
}

fn enumerate_for_skeleton(
    sk: &Skeleton<'_>,
    layout: &AddressLayout,
    init: &BTreeMap<i64, i64>,
    domain: &[i64],
    out: &mut Vec<CandidateExecution>,
) {
    let ids = &sk.flat_ids;
    let loads: Vec<InstId> = ids.iter().copied().filter(|&id| sk.instr(id.thread, id.index).is_load()).collect();
    let stores: Vec<InstId> = ids.iter().copied().filter(|&id| sk.instr(id.thread, id.index).is_store()).collect();
    let constant_addr =
        |id: InstId| sk.instr(id.thread, id.index).address_expr().and_then(|e| e.constant_value(layout));

    // Candidate sources per load, dropping stores whose constant address differs.
    let candidates: Vec<Vec<RfSource>> = loads
        .iter()
        .map(|&l| {
            let la = constant_addr(l);
            std::iter::once(RfSource::Init)
                .chain(
                    stores
                        .iter()
                        .filter(|&&s| match (la, constant_addr(s)) {
                            (Some(x), Some(y)) => x == y,
                            _ => true,
                        })
                        .map(|&s| RfSource::Store(s)),
                )
                .collect()
        })
        .collect();

    let mut choice = vec![0usize; loads.len()];
    loop {
        let rf: HashMap<usize, RfSource> =
            loads.iter().zip(&choice).enumerate().map(|(i, (&l, &c))| (sk.flat(l), candidates[i][c])).collect();
        let prop = Propagator { sk, layout, init, rf: &rf, domain };
        let mut solutions = Vec::new();
        prop.solve(&mut HashMap::new(), &mut solutions);
        for v in solutions {
            if let Some(exec) = build(sk, &rf, &v, init) {
                out.push(exec);
            }
        }
        let mut i = loads.len();
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            choice[i] += 1;
            if choice[i] < candidates[i].len() {
                break;
            }
            choice[i] = 0;
        }
    }
}

/// Checks addresses and branch decisions of a complete valuation and assembles the execution.
fn build(
    sk: &Skeleton<'_>,
    rf: &HashMap<usize, RfSource>,
    v: &Valuation,
    init: &BTreeMap<i64, i64>,
) -> Option<CandidateExecution> {
    let mut paths = Vec::new();
    let mut registers = Vec::new();
    for (t, shape) in sk.shapes.iter().enumerate() {
        let mut path = Vec::new();
        let mut regs = RegisterFile::new();
        for (i, &(pc, decision)) in shape.iter().enumerate() {
            let k = sk.offsets[t] + i;
            let instr = sk.instr(t, i).clone();
            let id = InstId { thread: t, index: i };
            let mut load_rf = None;
            match &instr {
                Instruction::Load { .. } => {
                    let src = rf[&k];
                    if let RfSource::Store(s) = src {
                        if v.addr[sk.flat(s)] != v.addr[k] {
                            return None;
                        }
                    }
                    load_rf = Some(src);
                }
                Instruction::Branch { kind, .. } if kind.taken(v.value[k]?) != decision? => return None,
                _ => {}
            }
            if let Some(d) = instr.dest() {
                regs.insert(d, v.value[k]?);
            }
            let addr = if instr.is_memory() { Some(v.addr[k]?) } else { None };
            let value = match instr {
                Instruction::Fence(_) => None,
                _ => Some(v.value[k]?),
            };
            path.push(InstrInstance { id, pc, instr, addr, value, rf: load_rf });
        }
        paths.push(path);
        registers.push(regs);
    }
    Some(CandidateExecution { paths, registers, init: init.clone() })
}
