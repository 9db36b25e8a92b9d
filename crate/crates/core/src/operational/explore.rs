//! Exhaustive exploration of the abstract machine.

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Effect, Machine, MachineState, Rule, Transition};
use crate::error::{Error, Result};
use crate::litmus::Program;
use crate::model::ModelConfig;
use crate::outcome::{Engine, Verdict, Witness};

/// Default cap on distinct states visited.
pub const DEFAULT_STATE_BUDGET: usize = 5_000_000;

/// Order in which pending states are expanded. The outcome set never depends on it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrontierOrder {
    Dfs,
    Bfs,
    /// Pops a pseudo-random pending state each step.
    Shuffled(u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExploreOptions {
    pub state_budget: usize,
    /// Fire processor-local steps eagerly, one at a time, and interleave only
    /// loads and stores. Disable to explore every interleaving.
    pub reduction: bool,
    pub order: FrontierOrder,
    /// Record a transition trace to the target outcome as the witness.
    pub trace: bool,
}

impl Default for ExploreOptions {
    fn default() -> ExploreOptions {
        ExploreOptions { state_budget: DEFAULT_STATE_BUDGET, reduction: true, order: FrontierOrder::Dfs, trace: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Stats {
    pub states: usize,
    pub transitions: usize,
    pub branch_kills: usize,
    pub memaddr_kills: usize,
}

impl Stats {
    /// `{"states":N,"kills":{"branch":x,"memaddr":y}}`
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "states": self.states,
            "kills": { "branch": self.branch_kills, "memaddr": self.memaddr_kills },
        })
    }
}

#[derive(Debug, Clone)]
pub struct ExploreResult {
    pub verdict: Verdict,
    pub stats: Stats,
}

struct Frontier {
    order: FrontierOrder,
    items: VecDeque<MachineState>,
    rng: ChaCha8Rng,
}

impl Frontier {
    fn new(order: FrontierOrder) -> Frontier {
        let seed = match order {
            FrontierOrder::Shuffled(s) => s,
            _ => 0,
        };
        Frontier { order, items: VecDeque::new(), rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    fn push(&mut self, s: MachineState) {
        self.items.push_back(s);
    }

    fn pop(&mut self) -> Option<MachineState> {
        match self.order {
            FrontierOrder::Dfs => self.items.pop_back(),
            FrontierOrder::Bfs => self.items.pop_front(),
            FrontierOrder::Shuffled(_) => {
                if self.items.is_empty() {
                    return None;
                }
                let k = self.rng.gen_range(0..self.items.len());
                self.items.swap_remove_back(k)
            }
        }
    }
}

fn is_local(rule: Rule) -> bool {
    !matches!(rule, Rule::ExecLoad | Rule::ExecStore | Rule::Commit)
}

/// The transitions to expand from a state: under reduction, the first enabled
/// local step (both predictions when it fetches a branch), otherwise every one.
fn selected(machine: &Machine, s: &MachineState, reduction: bool) -> Vec<Transition> {
    let all = machine.enabled_transitions(s);
    if !reduction {
        return all;
    }
    match all.iter().position(|t| is_local(t.rule)) {
        Some(k) => {
            let first = all[k];
            all.into_iter().filter(|t| t.proc == first.proc && t.rule == first.rule && t.rob == first.rob).collect()
        }
        None => all,
    }
}

/// Explores with default options.
pub fn explore(program: &Program, cfg: &ModelConfig) -> Result<ExploreResult> {
    explore_with(program, cfg, &ExploreOptions::default())
}

pub fn explore_with(program: &Program, cfg: &ModelConfig, opts: &ExploreOptions) -> Result<ExploreResult> {
    let machine = Machine::new(program, cfg)?;
    let layout = machine.layout().clone();
    let init = machine.initial_state();

    let mut stats = Stats::default();
    let mut visited: HashSet<MachineState> = HashSet::new();
    let mut parents: HashMap<MachineState, (MachineState, Transition, Effect)> = HashMap::new();
    let mut frontier = Frontier::new(opts.order);
    let mut outcomes = BTreeSet::new();
    let mut witness_state = None;

    visited.insert(init.clone());
    frontier.push(init);
    while let Some(s) = frontier.pop() {
        stats.states += 1;
        if machine.is_final(&s) {
            let outcome = machine.outcome(program, &s);
            if opts.trace && witness_state.is_none() && outcome.is_target(program, &layout) {
                witness_state = Some(s.clone());
            }
            outcomes.insert(outcome);
            continue;
        }
        for t in selected(&machine, &s, opts.reduction) {
            let step = machine.apply_transition(&s, &t);
            if step.state == s {
                continue;
            }
            stats.transitions += 1;
            match step.effect {
                Effect::Branch { killed: true, .. } => stats.branch_kills += 1,
                Effect::Address { killed_from: Some(_), .. } => stats.memaddr_kills += 1,
                _ => {}
            }
            if visited.contains(&step.state) {
                continue;
            }
            if visited.len() >= opts.state_budget {
                return Err(Error::StateBudget { budget: opts.state_budget });
            }
            visited.insert(step.state.clone());
            if opts.trace {
                parents.insert(step.state.clone(), (s.clone(), t, step.effect));
            }
            frontier.push(step.state);
        }
    }

    let mut verdict = Verdict::new(program, &layout, cfg.model(), Engine::Operational, outcomes);
    if let Some(mut s) = witness_state {
        let mut lines = Vec::new();
        while let Some((prev, t, effect)) = parents.get(&s) {
            lines.push(machine.describe(t, effect));
            s = prev.clone();
        }
        lines.reverse();
        verdict.witness = Some(Witness::Operational(lines));
    }
    Ok(ExploreResult { verdict, stats })
}
