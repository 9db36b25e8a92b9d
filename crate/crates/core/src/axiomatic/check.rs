//! The two axioms, checked against an explicit memory order.

use std::collections::HashMap;

use super::CandidateExecution;
use crate::deps::{InstId, PpoRelation, RfSource};
use crate::model::ModelConfig;

/// One event of a global memory order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum MoEvent {
    /// The implicit initialising store of an address.
    Init(i64),
    Inst(InstId),
}

/// Total order over an execution's memory instances, Init stores first.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct MemoryOrder(pub Vec<MoEvent>);

impl MemoryOrder {
    /// Prefixes one Init store per address the execution touches, in address order.
    pub fn with_init(exec: &CandidateExecution, order: impl IntoIterator<Item = InstId>) -> MemoryOrder {
        let mut events: Vec<MoEvent> = exec.addresses().into_iter().map(MoEvent::Init).collect();
        events.extend(order.into_iter().map(MoEvent::Inst));
        MemoryOrder(events)
    }

    fn positions(&self) -> HashMap<MoEvent, usize> {
        self.0.iter().enumerate().map(|(i, e)| (*e, i)).collect()
    }

    /// Whether the order is Init-first and covers exactly `exec`'s memory instances.
    pub fn is_well_formed(&self, exec: &CandidateExecution) -> bool {
        let first_inst = self.0.iter().position(|e| matches!(e, MoEvent::Inst(_))).unwrap_or(self.0.len());
        if self.0[first_inst..].iter().any(|e| matches!(e, MoEvent::Init(_))) {
            return false;
        }
        let mut listed: Vec<InstId> = self.0[first_inst..]
            .iter()
            .filter_map(|e| match e {
                MoEvent::Inst(id) => Some(*id),
                MoEvent::Init(_) => None,
            })
            .collect();
        listed.sort();
        let mut expected = exec.memory_instances();
        expected.sort();
        listed == expected
    }
}

/// Every ppo pair whose endpoints are both loads or stores is respected by `mo`.
pub fn check_inst_order(exec: &CandidateExecution, mo: &MemoryOrder, ppo: &PpoRelation) -> bool {
    let pos = mo.positions();
    ppo.pairs().all(|(t, i, j, _)| {
        let a = InstId { thread: t, index: i };
        let b = InstId { thread: t, index: j };
        if !(exec.instance(a).instr.is_memory() && exec.instance(b).instr.is_memory()) {
            return true;
        }
        match (pos.get(&MoEvent::Inst(a)), pos.get(&MoEvent::Inst(b))) {
            (Some(x), Some(y)) => x < y,
            _ => false,
        }
    })
}

/// Every load reads from the mo-latest same-address store among those before it
/// in mo or (outside SC) in program order; Init stores count as mo-first.
pub fn check_load_value(exec: &CandidateExecution, mo: &MemoryOrder, cfg: &ModelConfig) -> bool {
    let pos = mo.positions();
    let rank = |e: MoEvent| -> Option<isize> {
        match e {
            MoEvent::Init(a) => Some(pos.get(&MoEvent::Init(a)).map_or(-1, |&p| p as isize)),
            MoEvent::Inst(_) => pos.get(&e).map(|&p| p as isize),
        }
    };
    for load in exec.instances().filter(|i| i.instr.is_load()) {
        let Some(addr) = load.addr else { return false };
        let Some(load_rank) = rank(MoEvent::Inst(load.id)) else { return false };
        let mut best = (rank(MoEvent::Init(addr)).unwrap(), RfSource::Init);
        for s in exec.instances().filter(|s| s.instr.is_store() && s.addr == Some(addr)) {
            let Some(r) = rank(MoEvent::Inst(s.id)) else { return false };
            let po_before = !cfg.sc_total_order() && s.id.thread == load.id.thread && s.id.index < load.id.index;
            if (r < load_rank || po_before) && r > best.0 {
                best = (r, RfSource::Store(s.id));
            }
        }
        if load.rf != Some(best.1) {
            return false;
        }
    }
    true
}
