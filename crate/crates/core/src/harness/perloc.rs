//! Outcomes consistent with per-location sequential consistency.

use std::collections::{BTreeSet, HashSet};

use crate::axiomatic::{enumerate_executions, CandidateExecution, DEFAULT_MAX_MEMORY_INSTANCES};
use crate::deps::{InstId, RfSource};
use crate::error::{Error, Result};
use crate::litmus::{Location, Program};
use crate::outcome::Outcome;

/// Outcomes of executions where, for every address, the accesses to it can be
/// interleaved respecting each thread's program order with every load reading
/// the latest preceding store (or the initial value).
pub fn per_location_sc_outcomes(program: &Program) -> Result<BTreeSet<Outcome>> {
    let count = program.memory_instruction_count();
    if count > DEFAULT_MAX_MEMORY_INSTANCES {
        return Err(Error::EnumerationBound { count, bound: DEFAULT_MAX_MEMORY_INSTANCES });
    }
    let layout = program.layout()?;
    let tracked: Vec<i64> = program
        .condition
        .locations()
        .into_iter()
        .filter_map(|l| match l {
            Location::Mem(label) => layout.address_of(&label),
            Location::Reg { .. } => None,
        })
        .collect();

    let mut outcomes = BTreeSet::new();
    'exec: for exec in enumerate_executions(program)? {
        let mut finals_per_tracked = vec![Vec::new(); tracked.len()];
        for addr in exec.addresses() {
            let finals = final_stores_at(&exec, addr);
            if finals.is_empty() {
                continue 'exec;
            }
            if let Some(k) = tracked.iter().position(|&a| a == addr) {
                finals_per_tracked[k] = finals.into_iter().collect();
            }
        }
        for (k, f) in finals_per_tracked.iter_mut().enumerate() {
            if f.is_empty() && !exec.addresses().contains(&tracked[k]) {
                f.push(None);
            }
        }
        for_each_product(&finals_per_tracked, &mut |choice| {
            let mut memory = exec.init.clone();
            for (a, s) in tracked.iter().zip(choice) {
                if let Some(id) = s {
                    memory.insert(*a, exec.instance(*id).value.unwrap());
                }
            }
            outcomes.insert(exec.outcome(program, &layout, &memory));
        });
    }
    Ok(outcomes)
}

/// Final stores of `addr` over every valid per-address interleaving; empty if none exists.
fn final_stores_at(exec: &CandidateExecution, addr: i64) -> BTreeSet<Option<InstId>> {
    let seqs: Vec<Vec<InstId>> = exec
        .paths
        .iter()
        .map(|p| p.iter().filter(|i| i.instr.is_memory() && i.addr == Some(addr)).map(|i| i.id).collect())
        .collect();
    let mut finals = BTreeSet::new();
    let mut seen = HashSet::new();
    interleave(exec, &seqs, &mut vec![0; seqs.len()], None, &mut seen, &mut finals);
    finals
}

fn interleave(
    exec: &CandidateExecution,
    seqs: &[Vec<InstId>],
    pos: &mut Vec<usize>,
    last: Option<InstId>,
    seen: &mut HashSet<(Vec<usize>, Option<InstId>)>,
    finals: &mut BTreeSet<Option<InstId>>,
) {
    if !seen.insert((pos.clone(), last)) {
        return;
    }
    if pos.iter().zip(seqs).all(|(&p, s)| p == s.len()) {
        finals.insert(last);
        return;
    }
    for t in 0..seqs.len() {
        let Some(&id) = seqs[t].get(pos[t]) else { continue };
        let inst = exec.instance(id);
        let next_last = match inst.rf {
            Some(src) => {
                let expected = last.map_or(RfSource::Init, RfSource::Store);
                if src != expected {
                    continue;
                }
                last
            }
            None => Some(id),
        };
        pos[t] += 1;
        interleave(exec, seqs, pos, next_last, seen, finals);
        pos[t] -= 1;
    }
}

fn for_each_product<T: Clone>(choices: &[Vec<T>], f: &mut impl FnMut(&[T])) {
    fn go<T: Clone>(choices: &[Vec<T>], prefix: &mut Vec<T>, f: &mut impl FnMut(&[T])) {
        match choices.split_first() {
            None => f(prefix),
            Some((first, rest)) => {
                for c in first {
                    prefix.push(c.clone());
                    go(rest, prefix, f);
                    prefix.pop();
                }
            }
        }
    }
    go(choices, &mut Vec::new(), f);
}
