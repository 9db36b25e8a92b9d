//! Helpers shared by the integration tests, including an independent
//! generate-and-test oracle for the axiomatic semantics.

#![allow(dead_code, clippy::needless_range_loop)]

use std::collections::{BTreeMap, BTreeSet};

use gamkit::litmus::{parse_litmus, resolve_addresses, Access, Instruction, Location, Program, Reg};
use gamkit::{Model, Outcome};

pub fn program(source: &str) -> Program {
    resolve_addresses(parse_litmus(source).expect("test program parses")).expect("test program resolves")
}

pub fn corpus_program(stem: &str) -> Program {
    gamkit::harness::corpus_entry(stem).unwrap_or_else(|| panic!("no corpus test {stem}")).program
}

/// One executed instruction of a thread under guessed load values.
#[derive(Clone, Debug)]
struct Step {
    instr: Instruction,
    addr: i64,
    value: i64,
}

#[derive(Clone, Debug)]
struct ThreadRun {
    steps: Vec<Step>,
    regs: BTreeMap<Reg, i64>,
}

/// Every straight-line run of one thread, guessing each load's value from `domain`
/// and following branches by the computed condition.
fn thread_runs(code: &[Instruction], domain: &[i64], layout: &gamkit::litmus::AddressLayout) -> Vec<ThreadRun> {
    fn go(
        code: &[Instruction],
        pc: usize,
        run: ThreadRun,
        domain: &[i64],
        layout: &gamkit::litmus::AddressLayout,
        out: &mut Vec<ThreadRun>,
    ) {
        if pc >= code.len() {
            out.push(run);
            return;
        }
        let instr = code[pc].clone();
        let regs = run.regs.clone();
        let ev = |e: &gamkit::litmus::Expr| e.eval(layout, &mut |r| regs.get(&r).copied().unwrap_or(0));
        match &instr {
            Instruction::Load { dest, addr } => {
                let a = ev(addr);
                for &v in domain {
                    let mut next = run.clone();
                    next.steps.push(Step { instr: instr.clone(), addr: a, value: v });
                    next.regs.insert(*dest, v);
                    go(code, pc + 1, next, domain, layout, out);
                }
            }
            Instruction::Store { addr, data } => {
                let mut next = run.clone();
                next.steps.push(Step { instr: instr.clone(), addr: ev(addr), value: ev(data) });
                go(code, pc + 1, next, domain, layout, out);
            }
            Instruction::RegOp { dest, rhs } => {
                let v = ev(rhs);
                let mut next = run.clone();
                next.steps.push(Step { instr: instr.clone(), addr: 0, value: v });
                next.regs.insert(*dest, v);
                go(code, pc + 1, next, domain, layout, out);
            }
            Instruction::Branch { kind, cond, target } => {
                let v = ev(cond);
                let mut next = run.clone();
                next.steps.push(Step { instr: instr.clone(), addr: 0, value: v });
                let to = if kind.taken(v) { target.index } else { pc + 1 };
                go(code, to, next, domain, layout, out);
            }
            Instruction::Fence(_) => {
                let mut next = run.clone();
                next.steps.push(Step { instr: instr.clone(), addr: 0, value: 0 });
                go(code, pc + 1, next, domain, layout, out);
            }
        }
    }
    let mut out = Vec::new();
    go(code, 0, ThreadRun { steps: Vec::new(), regs: BTreeMap::new() }, domain, layout, &mut out);
    out
}

fn regs_read(i: &Instruction) -> Vec<Reg> {
    match i {
        Instruction::Load { addr, .. } => addr.registers(),
        Instruction::Store { addr, data } => {
            let mut r = addr.registers();
            r.extend(data.registers());
            r
        }
        Instruction::RegOp { rhs, .. } => rhs.registers(),
        Instruction::Branch { cond, .. } => cond.registers(),
        Instruction::Fence(_) => vec![],
    }
}

fn regs_addr(i: &Instruction) -> Vec<Reg> {
    match i {
        Instruction::Load { addr, .. } | Instruction::Store { addr, .. } => addr.registers(),
        _ => vec![],
    }
}

fn written(i: &Instruction) -> Option<Reg> {
    match i {
        Instruction::Load { dest, .. } | Instruction::RegOp { dest, .. } => Some(*dest),
        _ => None,
    }
}

/// `dep[i][j]`: some register `j` reads through `reads` was last written by `i`.
fn dep_matrix(steps: &[Step], reads: fn(&Instruction) -> Vec<Reg>) -> Vec<Vec<bool>> {
    let n = steps.len();
    let mut m = vec![vec![false; n]; n];
    for j in 0..n {
        for r in reads(&steps[j].instr) {
            if let Some(i) = (0..j).rev().find(|&i| written(&steps[i].instr) == Some(r)) {
                m[i][j] = true;
            }
        }
    }
    m
}

/// Preserved program order of one run, written directly from the ordering rules.
/// `rf` gives each load's source as an opaque key (equal keys mean the same store).
fn naive_ppo(steps: &[Step], model: Model, rf: &[Option<(usize, usize)>]) -> Vec<Vec<bool>> {
    let n = steps.len();
    let mem = |k: usize| matches!(steps[k].instr, Instruction::Load { .. } | Instruction::Store { .. });
    let load = |k: usize| matches!(steps[k].instr, Instruction::Load { .. });
    let store = |k: usize| matches!(steps[k].instr, Instruction::Store { .. });
    let same = |x: usize, y: usize| mem(x) && mem(y) && steps[x].addr == steps[y].addr;
    let mut r = vec![vec![false; n]; n];
    if model == Model::Sc {
        for i in 0..n {
            for j in i + 1..n {
                r[i][j] = mem(i) && mem(j);
            }
        }
        return r;
    }
    let ddep = dep_matrix(steps, regs_read);
    let adep = dep_matrix(steps, regs_addr);
    for i in 0..n {
        for j in i + 1..n {
            let store_between = (i + 1..j).any(|k| store(k) && same(k, j));
            let c1 = mem(i) && store(j) && same(i, j);
            let c2 = load(j) && (0..j).rev().find(|&s| store(s) && same(s, j)).is_some_and(|s| i < s && ddep[i][s]);
            let c3 = load(i)
                && load(j)
                && same(i, j)
                && match model {
                    Model::Gam0 => false,
                    Model::Gam | Model::Sc => !store_between,
                    Model::GamArm => !store_between && rf[i] != rf[j],
                };
            let c4 = ddep[i][j];
            let c5 = matches!(steps[i].instr, Instruction::Branch { .. }) && store(j);
            let c6 = store(j) && (i + 1..j).any(|k| mem(k) && adep[i][k]);
            let class = |k: usize| match steps[k].instr {
                Instruction::Load { .. } => Some(Access::Load),
                Instruction::Store { .. } => Some(Access::Store),
                _ => None,
            };
            let c7 = matches!(steps[i].instr, Instruction::Fence(f) if class(j) == Some(f.to));
            let c8 = matches!(steps[j].instr, Instruction::Fence(f) if class(i) == Some(f.from));
            r[i][j] = c1 || c2 || c3 || c4 || c5 || c6 || c7 || c8;
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if r[i][k] && r[k][j] {
                    r[i][j] = true;
                }
            }
        }
    }
    r
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn go(rest: &mut Vec<usize>, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if rest.is_empty() {
            out.push(prefix.clone());
            return;
        }
        for k in 0..rest.len() {
            let x = rest.remove(k);
            prefix.push(x);
            go(rest, prefix, out);
            prefix.pop();
            rest.insert(k, x);
        }
    }
    let mut out = Vec::new();
    go(&mut (0..n).collect(), &mut Vec::new(), &mut out);
    out
}

/// Outcomes by blind generate-and-test: guess every load value, try every
/// read-from map consistent with the guesses and every memory order.
pub fn oracle_outcomes(p: &Program, model: Model) -> BTreeSet<Outcome> {
    let layout = p.layout().unwrap();
    let code = p.bound_code(&layout);
    let init = p.initial_memory(&layout);
    let domain: Vec<i64> = p.value_domain(&layout).into_iter().collect();
    let per_thread: Vec<Vec<ThreadRun>> = code.iter().map(|c| thread_runs(c, &domain, &layout)).collect();
    let locations = p.condition.locations();
    let mut outcomes = BTreeSet::new();

    let mut pick = vec![0usize; per_thread.len()];
    'combos: loop {
        let runs: Vec<&ThreadRun> = pick.iter().enumerate().map(|(t, &k)| &per_thread[t][k]).collect();
        // Memory events as (thread, step).
        let events: Vec<(usize, usize)> = runs
            .iter()
            .enumerate()
            .flat_map(|(t, r)| {
                r.steps
                    .iter()
                    .enumerate()
                    .filter(|(_, s)| matches!(s.instr, Instruction::Load { .. } | Instruction::Store { .. }))
                    .map(move |(i, _)| (t, i))
            })
            .collect();
        let step = |e: (usize, usize)| &runs[e.0].steps[e.1];
        let loads: Vec<usize> =
            (0..events.len()).filter(|&k| matches!(step(events[k]).instr, Instruction::Load { .. })).collect();
        // Candidate sources: None for Init, Some(event) for a store.
        let sources: Vec<Vec<Option<usize>>> = loads
            .iter()
            .map(|&l| {
                let s = step(events[l]);
                let mut c = Vec::new();
                if init.get(&s.addr).copied().unwrap_or(0) == s.value {
                    c.push(None);
                }
                for (k, &e) in events.iter().enumerate() {
                    let st = step(e);
                    if matches!(st.instr, Instruction::Store { .. }) && st.addr == s.addr && st.value == s.value {
                        c.push(Some(k));
                    }
                }
                c
            })
            .collect();
        let perms = permutations(events.len());
        let mut choice = vec![0usize; loads.len()];
        if sources.iter().all(|c| !c.is_empty()) {
            loop {
                let rf_of: BTreeMap<usize, Option<usize>> =
                    loads.iter().zip(&choice).enumerate().map(|(i, (&l, &c))| (l, sources[i][c])).collect();
                let ppo: Vec<Vec<Vec<bool>>> = runs
                    .iter()
                    .enumerate()
                    .map(|(t, r)| {
                        let keys: Vec<Option<(usize, usize)>> = (0..r.steps.len())
                            .map(|i| {
                                let k = events.iter().position(|&e| e == (t, i))?;
                                rf_of.get(&k).map(|src| src.map_or((usize::MAX, 0), |s| events[s]))
                            })
                            .collect();
                        naive_ppo(&r.steps, model, &keys)
                    })
                    .collect();
                for perm in &perms {
                    let mut pos = vec![0; events.len()];
                    for (p, &k) in perm.iter().enumerate() {
                        pos[k] = p;
                    }
                    let inst_ord = (0..events.len()).all(|x| {
                        (0..events.len()).all(|y| {
                            let (ex, ey) = (events[x], events[y]);
                            ex.0 != ey.0 || !ppo[ex.0][ex.1][ey.1] || pos[x] < pos[y]
                        })
                    });
                    if !inst_ord {
                        continue;
                    }
                    let load_value = loads.iter().all(|&l| {
                        let ls = step(events[l]);
                        let best = (0..events.len())
                            .filter(|&s| {
                                let st = step(events[s]);
                                matches!(st.instr, Instruction::Store { .. })
                                    && st.addr == ls.addr
                                    && (pos[s] < pos[l]
                                        || (model != Model::Sc
                                            && events[s].0 == events[l].0
                                            && events[s].1 < events[l].1))
                            })
                            .max_by_key(|&s| pos[s]);
                        best == rf_of[&l]
                    });
                    if !load_value {
                        continue;
                    }
                    let mut memory = init.clone();
                    for &k in perm {
                        let st = step(events[k]);
                        if matches!(st.instr, Instruction::Store { .. }) {
                            memory.insert(st.addr, st.value);
                        }
                    }
                    let outcome = locations
                        .iter()
                        .map(|loc| {
                            let v = match loc {
                                Location::Reg { thread, reg } => runs[*thread].regs.get(reg).copied().unwrap_or(0),
                                Location::Mem(l) => memory.get(&layout.address_of(l).unwrap()).copied().unwrap_or(0),
                            };
                            (loc.clone(), v)
                        })
                        .collect();
                    outcomes.insert(Outcome(outcome));
                }
                let mut i = loads.len();
                loop {
                    if i == 0 {
                        break;
                    }
                    i -= 1;
                    choice[i] += 1;
                    if choice[i] < sources[i].len() {
                        break;
                    }
                    choice[i] = 0;
                    if i == 0 {
                        i = usize::MAX;
                        break;
                    }
                }
                if i == usize::MAX || loads.is_empty() {
                    break;
                }
            }
        }
        let mut t = per_thread.len();
        loop {
            if t == 0 {
                break 'combos;
            }
            t -= 1;
            pick[t] += 1;
            if pick[t] < per_thread[t].len() {
                break;
            }
            pick[t] = 0;
        }
    }
    outcomes
}

/// Outcomes of every sequential interleaving of the threads' instructions.
pub fn interleaving_outcomes(p: &Program) -> BTreeSet<Outcome> {
    type State = (Vec<usize>, Vec<BTreeMap<Reg, i64>>, BTreeMap<i64, i64>);
    let layout = p.layout().unwrap();
    let code = p.bound_code(&layout);
    let locations = p.condition.locations();
    let start: State = (vec![0; code.len()], vec![BTreeMap::new(); code.len()], p.initial_memory(&layout));
    let mut seen = std::collections::HashSet::new();
    let mut stack = vec![start];
    let mut outcomes = BTreeSet::new();
    while let Some(state) = stack.pop() {
        if !seen.insert(state.clone()) {
            continue;
        }
        let (pcs, regs, memory) = &state;
        if pcs.iter().zip(&code).all(|(&pc, c)| pc >= c.len()) {
            let outcome = locations
                .iter()
                .map(|loc| {
                    let v = match loc {
                        Location::Reg { thread, reg } => regs[*thread].get(reg).copied().unwrap_or(0),
                        Location::Mem(l) => memory.get(&layout.address_of(l).unwrap()).copied().unwrap_or(0),
                    };
                    (loc.clone(), v)
                })
                .collect();
            outcomes.insert(Outcome(outcome));
            continue;
        }
        for t in 0..code.len() {
            let pc = pcs[t];
            if pc >= code[t].len() {
                continue;
            }
            let mut next = state.clone();
            let ev = |e: &gamkit::litmus::Expr| e.eval(&layout, &mut |r| regs[t].get(&r).copied().unwrap_or(0));
            next.0[t] = pc + 1;
            match &code[t][pc] {
                Instruction::Load { dest, addr } => {
                    let v = memory.get(&ev(addr)).copied().unwrap_or(0);
                    next.1[t].insert(*dest, v);
                }
                Instruction::Store { addr, data } => {
                    next.2.insert(ev(addr), ev(data));
                }
                Instruction::RegOp { dest, rhs } => {
                    next.1[t].insert(*dest, ev(rhs));
                }
                Instruction::Branch { kind, cond, target } => {
                    if kind.taken(ev(cond)) {
                        next.0[t] = target.index;
                    }
                }
                Instruction::Fence(_) => {}
            }
            stack.push(next);
        }
    }
    outcomes
}
