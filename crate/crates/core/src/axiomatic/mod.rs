//! Axiomatic engine: enumerate candidate executions and keep the outcomes for
//! which some memory order satisfies instruction ordering and load value.

mod check;
mod enumerate;
mod search;

use std::collections::{BTreeMap, BTreeSet};

pub use check::{check_inst_order, check_load_value, MemoryOrder, MoEvent};
pub use enumerate::enumerate_executions;

use crate::deps::{build_ppo, InstId, InstrInstance, RfSource};
use crate::error::{Error, Result};
use crate::litmus::{AddressLayout, Location, Program, Reg, RegisterFile};
use crate::model::ModelConfig;
use crate::outcome::{Engine, Outcome, Verdict, Witness};
use search::MoSearch;

/// Default bound on the number of memory instructions a program may contain.
pub const DEFAULT_MAX_MEMORY_INSTANCES: usize = 10;

/// One value-consistent execution: committed paths with resolved operands and
/// read-from sources.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CandidateExecution {
    pub paths: Vec<Vec<InstrInstance>>,
    /// Final register values per thread; registers never written are absent.
    pub registers: Vec<RegisterFile>,
    /// Initial memory by address.
    pub init: BTreeMap<i64, i64>,
}

impl CandidateExecution {
    pub fn instance(&self, id: InstId) -> &InstrInstance {
        &self.paths[id.thread][id.index]
    }

    pub fn instances(&self) -> impl Iterator<Item = &InstrInstance> {
        self.paths.iter().flatten()
    }

    /// Loads and stores in thread-then-path order.
    pub fn memory_instances(&self) -> Vec<InstId> {
        self.instances().filter(|i| i.instr.is_memory()).map(|i| i.id).collect()
    }

    /// Addresses accessed by memory instances.
    pub fn addresses(&self) -> BTreeSet<i64> {
        self.instances().filter_map(|i| i.addr).collect()
    }

    /// Read-from source of every load.
    pub fn rf(&self) -> Vec<(InstId, RfSource)> {
        self.instances().filter_map(|i| i.rf.map(|src| (i.id, src))).collect()
    }

    pub fn register(&self, thread: usize, reg: Reg) -> i64 {
        self.registers[thread].get(&reg).copied().unwrap_or(0)
    }

    /// Memory after `mo`: the mo-last store per address, else the initial value.
    pub fn final_memory(&self, mo: &MemoryOrder) -> BTreeMap<i64, i64> {
        let mut mem = self.init.clone();
        for e in &mo.0 {
            if let MoEvent::Inst(id) = e {
                let i = self.instance(*id);
                if i.instr.is_store() {
                    mem.insert(i.addr.unwrap(), i.value.unwrap());
                }
            }
        }
        mem
    }

    /// Outcome over the condition's locations given final memory.
    pub fn outcome(&self, program: &Program, layout: &AddressLayout, memory: &BTreeMap<i64, i64>) -> Outcome {
        Outcome(
            program
                .condition
                .locations()
                .into_iter()
                .map(|loc| {
                    let v = match &loc {
                        Location::Reg { thread, reg } => self.register(*thread, *reg),
                        Location::Mem(l) => layout.address_of(l).and_then(|a| memory.get(&a).copied()).unwrap_or(0),
                    };
                    (loc, v)
                })
                .collect(),
        )
    }
}

/// An execution together with a memory order that satisfies the axioms.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AxiomaticWitness {
    pub execution: CandidateExecution,
    pub mo: MemoryOrder,
    thread_names: Vec<String>,
    layout: AddressLayout,
}

impl AxiomaticWitness {
    fn name(&self, id: InstId) -> String {
        format!("{}:{}", self.thread_names[id.thread], id.index)
    }

    fn init_name(&self, addr: i64) -> String {
        format!("init:{}", self.layout.describe(addr))
    }

    /// `{"rf":[{"load":"P2:1","from":"P1:0"}],"mo":["init:a","P1:0",...]}`
    pub fn to_json(&self) -> serde_json::Value {
        let rf: Vec<serde_json::Value> = self
            .execution
            .rf()
            .into_iter()
            .map(|(load, src)| {
                let from = match src {
                    RfSource::Init => self.init_name(self.execution.instance(load).addr.unwrap_or(0)),
                    RfSource::Store(s) => self.name(s),
                };
                serde_json::json!({ "load": self.name(load), "from": from })
            })
            .collect();
        let mo: Vec<String> = self
            .mo
            .0
            .iter()
            .map(|e| match e {
                MoEvent::Init(a) => self.init_name(*a),
                MoEvent::Inst(id) => self.name(*id),
            })
            .collect();
        serde_json::json!({ "rf": rf, "mo": mo })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AxiomaticOptions {
    /// Programs with more memory instructions are rejected as a resource limit.
    pub max_memory_instances: usize,
}

impl Default for AxiomaticOptions {
    fn default() -> AxiomaticOptions {
        AxiomaticOptions { max_memory_instances: DEFAULT_MAX_MEMORY_INSTANCES }
    }
}

/// Outcomes the model allows, with default options.
pub fn allowed_axiomatic(program: &Program, cfg: &ModelConfig) -> Result<Verdict> {
    allowed_axiomatic_with(program, cfg, &AxiomaticOptions::default())
}

pub fn allowed_axiomatic_with(program: &Program, cfg: &ModelConfig, opts: &AxiomaticOptions) -> Result<Verdict> {
    let count = program.memory_instruction_count();
    if count > opts.max_memory_instances {
        return Err(Error::EnumerationBound { count, bound: opts.max_memory_instances });
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
    let mut witness = None;
    for exec in enumerate_executions(program)? {
        let ppo = build_ppo(&exec.paths, cfg);
        let mut search = MoSearch::new(&exec, &ppo, cfg, &tracked);
        for stores in search.final_stores() {
            let mut memory = exec.init.clone();
            for (a, s) in tracked.iter().zip(&stores) {
                if let Some(id) = s {
                    memory.insert(*a, exec.instance(*id).value.unwrap());
                }
            }
            let outcome = exec.outcome(program, &layout, &memory);
            if witness.is_none() && outcome.is_target(program, &layout) {
                let order = search.witness(&stores).expect("a reachable final state has a memory order");
                witness = Some(AxiomaticWitness {
                    mo: MemoryOrder::with_init(&exec, order),
                    execution: exec.clone(),
                    thread_names: program.threads.iter().map(|t| t.name.clone()).collect(),
                    layout: layout.clone(),
                });
            }
            outcomes.insert(outcome);
        }
    }
    let mut verdict = Verdict::new(program, &layout, cfg.model(), Engine::Axiomatic, outcomes);
    verdict.witness = witness.map(Witness::Axiomatic);
    Ok(verdict)
}
