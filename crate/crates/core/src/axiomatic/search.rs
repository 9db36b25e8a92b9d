//! Memory-order search: a placement DFS that respects ppo, checks the load-value
//! axiom as each load is placed, and memoises the final stores each partial order
//! can still reach.

use std::collections::{BTreeSet, HashMap};
use std::rc::Rc;

use super::CandidateExecution;
use crate::deps::{InstId, PpoRelation, RfSource};
use crate::model::ModelConfig;

/// Last store per address, `0` for Init and `k + 1` for memory event `k`.
type LastStores = Vec<u8>;
type Finals = Rc<BTreeSet<LastStores>>;

pub(crate) struct MoSearch {
    events: Vec<InstId>,
    preds: Vec<u64>,
    addr: Vec<usize>,
    /// For loads, the required source encoded like [`LastStores`] entries.
    rf: Vec<Option<u8>>,
    /// For loads, the nearest po-earlier same-address store.
    nearest_po_store: Vec<Option<usize>>,
    addresses: Vec<i64>,
    tracked: Vec<usize>,
    sc: bool,
    memo: HashMap<(u64, LastStores), Finals>,
}

impl MoSearch {
    /// `tracked` lists the addresses whose final store the caller needs.
    pub(crate) fn new(exec: &CandidateExecution, ppo: &PpoRelation, cfg: &ModelConfig, tracked: &[i64]) -> MoSearch {
        let events = exec.memory_instances();
        assert!(events.len() < 64, "too many memory instances for the memory-order search");
        let index: HashMap<InstId, usize> = events.iter().enumerate().map(|(k, id)| (*id, k)).collect();
        let mut addresses: Vec<i64> = exec.addresses().into_iter().collect();
        for a in tracked {
            if !addresses.contains(a) {
                addresses.push(*a);
            }
        }
        let addr_index = |a: i64| addresses.iter().position(|&x| x == a).unwrap();
        let addr: Vec<usize> = events.iter().map(|&id| addr_index(exec.instance(id).addr.unwrap())).collect();
        let preds = events
            .iter()
            .map(|&b| events.iter().enumerate().filter(|(_, &a)| ppo.contains(a, b)).fold(0u64, |m, (k, _)| m | 1 << k))
            .collect();
        let rf = events
            .iter()
            .map(|&id| {
                exec.instance(id).rf.map(|src| match src {
                    RfSource::Init => 0,
                    RfSource::Store(s) => index[&s] as u8 + 1,
                })
            })
            .collect();
        let nearest_po_store = events
            .iter()
            .enumerate()
            .map(|(k, &id)| {
                if !exec.instance(id).instr.is_load() {
                    return None;
                }
                (0..k).rev().find(|&j| {
                    events[j].thread == id.thread
                        && events[j].index < id.index
                        && exec.instance(events[j]).instr.is_store()
                        && addr[j] == addr[k]
                })
            })
            .collect();
        let tracked = tracked.iter().map(|&a| addr_index(a)).collect();
        MoSearch {
            events,
            preds,
            addr,
            rf,
            nearest_po_store,
            addresses,
            tracked,
            sc: cfg.sc_total_order(),
            memo: HashMap::new(),
        }
    }

    fn full(&self) -> u64 {
        if self.events.len() == 64 {
            u64::MAX
        } else {
            (1u64 << self.events.len()) - 1
        }
    }

    fn can_place(&self, k: usize, mask: u64, last: &LastStores) -> bool {
        if mask >> k & 1 == 1 || self.preds[k] & !mask != 0 {
            return false;
        }
        match self.rf[k] {
            None => true,
            Some(required) => {
                let expected = match self.nearest_po_store[k] {
                    Some(s) if !self.sc && mask >> s & 1 == 0 => s as u8 + 1,
                    _ => last[self.addr[k]],
                };
                required == expected
            }
        }
    }

    fn place(&self, k: usize, last: &LastStores) -> LastStores {
        let mut next = last.clone();
        if self.rf[k].is_none() {
            next[self.addr[k]] = k as u8 + 1;
        }
        next
    }

    fn finals(&mut self, mask: u64, last: LastStores) -> Finals {
        if mask == self.full() {
            return Rc::new(BTreeSet::from([self.tracked.iter().map(|&a| last[a]).collect()]));
        }
        let key = (mask, last);
        if let Some(f) = self.memo.get(&key) {
            return f.clone();
        }
        let (mask, last) = key;
        let mut out = BTreeSet::new();
        for k in 0..self.events.len() {
            if self.can_place(k, mask, &last) {
                let next = self.place(k, &last);
                out.extend(self.finals(mask | 1 << k, next).iter().cloned());
                if self.tracked.is_empty() && !out.is_empty() {
                    break;
                }
            }
        }
        let f = Rc::new(out);
        self.memo.insert((mask, last), f.clone());
        f
    }

    fn start(&self) -> LastStores {
        vec![0; self.addresses.len()]
    }

    /// The reachable final stores of the tracked addresses, one vector per
    /// distinct combination; empty when no memory order satisfies the axioms.
    pub(crate) fn final_stores(&mut self) -> Vec<Vec<Option<InstId>>> {
        let start = self.start();
        let finals = self.finals(0, start);
        finals.iter().map(|v| v.iter().map(|&e| self.decode(e)).collect()).collect()
    }

    fn decode(&self, e: u8) -> Option<InstId> {
        (e > 0).then(|| self.events[e as usize - 1])
    }

    /// A memory order ending with the given tracked final stores.
    pub(crate) fn witness(&mut self, goal: &[Option<InstId>]) -> Option<Vec<InstId>> {
        let goal: LastStores = goal
            .iter()
            .map(|g| g.map_or(0, |id| self.events.iter().position(|&e| e == id).unwrap() as u8 + 1))
            .collect();
        let mut mask = 0u64;
        let mut last = self.start();
        let mut order = Vec::new();
        while mask != self.full() {
            let k = (0..self.events.len()).find(|&k| {
                self.can_place(k, mask, &last) && self.finals(mask | 1 << k, self.place(k, &last)).contains(&goal)
            })?;
            last = self.place(k, &last);
            mask |= 1 << k;
            order.push(self.events[k]);
        }
        Some(order)
    }
}
