//! Random small litmus programs and the property suite run over them.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::crosscheck::{cross_check_with, CheckOptions, CheckStatus};
use super::perloc::per_location_sc_outcomes;
use crate::axiomatic::{allowed_axiomatic_with, DEFAULT_MAX_MEMORY_INSTANCES};
use crate::litmus::{parse_litmus, resolve_addresses, Program};
use crate::model::{Model, ModelConfig};

const LABELS: [&str; 8] = ["a", "b", "c", "d", "e", "f", "g", "h"];
const FENCES: [&str; 4] = ["FenceLL", "FenceLS", "FenceSL", "FenceSS"];

#[derive(Debug, Clone, PartialEq)]
pub struct FuzzBounds {
    pub max_threads: usize,
    pub max_instructions: usize,
    pub max_addresses: usize,
    /// Values stores write and conditions test.
    pub values: Vec<i64>,
    pub fence_probability: f64,
    pub branch_probability: f64,
    /// Cap on loads and stores over all threads.
    pub max_memory_instances: usize,
    pub seed: u64,
}

impl Default for FuzzBounds {
    fn default() -> FuzzBounds {
        FuzzBounds {
            max_threads: 3,
            max_instructions: 5,
            max_addresses: 2,
            values: vec![0, 1, 2],
            fence_probability: 0.15,
            branch_probability: 0.1,
            max_memory_instances: DEFAULT_MAX_MEMORY_INSTANCES,
            seed: 0,
        }
    }
}

/// A program within `bounds`, determined entirely by `bounds.seed`. The condition
/// fixes every load's destination register, so outcomes are full load-value vectors.
pub fn fuzz_program(bounds: &FuzzBounds) -> Program {
    let mut rng = ChaCha8Rng::seed_from_u64(bounds.seed);
    let mut bounds = bounds.clone();
    for attempt in 0.. {
        if attempt == 3 && bounds.max_instructions == 0 {
            bounds.max_instructions = 1;
        }
        let source = generate(&bounds, &mut rng);
        if let Ok(p) = parse_litmus(&source) {
            return resolve_addresses(p).expect("fuzzed programs bind few labels");
        }
    }
    unreachable!()
}

fn generate(bounds: &FuzzBounds, rng: &mut ChaCha8Rng) -> String {
    let addresses = &LABELS[..bounds.max_addresses.clamp(1, LABELS.len())];
    let values: &[i64] = if bounds.values.is_empty() { &[0] } else { &bounds.values };
    let threads = if bounds.max_threads >= 2 { rng.gen_range(2..=bounds.max_threads) } else { 1 };
    let mut memory_budget = bounds.max_memory_instances.min(DEFAULT_MAX_MEMORY_INSTANCES);
    let mut load_dests: Vec<(String, String)> = Vec::new();
    let mut bodies = Vec::new();

    for t in 0..threads {
        let name = format!("P{}", t + 1);
        let n = if bounds.max_instructions == 0 { 0 } else { rng.gen_range(1..=bounds.max_instructions) };
        let mut loaded: Vec<String> = Vec::new();
        let mut next_reg = 1;
        let mut labels: BTreeMap<usize, String> = BTreeMap::new();
        let mut items: Vec<String> = Vec::new();
        for i in 0..n {
            let roll: f64 = rng.gen();
            let instr = if roll < bounds.fence_probability {
                FENCES.choose(rng).unwrap().to_string()
            } else if roll < bounds.fence_probability + bounds.branch_probability && i + 1 < n && !loaded.is_empty() {
                let target = rng.gen_range(i + 2..=n);
                let count = labels.len();
                let label = labels.entry(target).or_insert_with(|| format!("L{}", count + 1)).clone();
                let op = if rng.gen_bool(0.5) { "bnez" } else { "beqz" };
                format!("{op} {}, {label}", loaded.choose(rng).unwrap())
            } else if memory_budget > 0 {
                memory_budget -= 1;
                let mut addr = addresses.choose(rng).unwrap().to_string();
                if !loaded.is_empty() && rng.gen_bool(0.25) {
                    let r = loaded.choose(rng).unwrap();
                    addr = format!("{addr} + {r} - {r}");
                }
                if rng.gen_bool(0.5) {
                    let dest = format!("r{next_reg}");
                    next_reg += 1;
                    load_dests.push((name.clone(), dest.clone()));
                    loaded.push(dest.clone());
                    format!("{dest} = Ld [{addr}]")
                } else {
                    let v = *values.choose(rng).unwrap();
                    let data = match (loaded.choose(rng), rng.gen_range(0..10)) {
                        (Some(r), 0..=1) => format!("({v} + {r} - {r})"),
                        (Some(r), 2) => r.clone(),
                        _ => v.to_string(),
                    };
                    format!("St [{addr}] {data}")
                }
            } else {
                let dest = format!("r{next_reg}");
                next_reg += 1;
                format!("{dest} = {}", values.choose(rng).unwrap())
            };
            items.push(instr);
        }
        let mut body = Vec::new();
        for (i, instr) in items.iter().enumerate() {
            match labels.get(&i) {
                Some(l) => body.push(format!("{l}: {instr}")),
                None => body.push(instr.clone()),
            }
        }
        if let Some(l) = labels.get(&n) {
            body.push(format!("{l}:"));
        }
        bodies.push((name, body.join(" ; ")));
    }

    let mut src = String::new();
    writeln!(src, "test \"fuzz-{}\"", bounds.seed).unwrap();
    let init: Vec<String> = addresses.iter().map(|a| format!("[{a}]=0")).collect();
    writeln!(src, "init {{ {} }}", init.join("; ")).unwrap();
    for (name, body) in &bodies {
        writeln!(src, "thread {name} {{ {body} }}").unwrap();
    }
    let atoms: Vec<String> = if load_dests.is_empty() {
        addresses.iter().map(|a| format!("[{a}]={}", values.choose(rng).unwrap())).collect()
    } else {
        load_dests.iter().map(|(t, r)| format!("{t}:{r}={}", values.choose(rng).unwrap())).collect()
    };
    writeln!(src, "exists ({})", atoms.join(" /\\ ")).unwrap();
    src
}

/// Property results for one fuzzed program.
#[derive(Debug, Clone)]
pub struct FuzzCase {
    pub seed: u64,
    pub program: Program,
    /// Engine agreement for each model with an operational engine.
    pub equivalence: Vec<(Model, CheckStatus)>,
    /// allowed(SC) ⊆ allowed(GAM) ⊆ allowed(GAM-ARM) ⊆ allowed(GAM0).
    pub monotonic: bool,
    /// Every GAM outcome is per-location SC.
    pub per_location_sc: bool,
    /// Engine errors, rendered.
    pub errors: Vec<String>,
}

impl FuzzCase {
    pub fn passed(&self) -> bool {
        self.errors.is_empty()
            && self.monotonic
            && self.per_location_sc
            && self.equivalence.iter().all(|(_, s)| *s == CheckStatus::Pass)
    }
}

#[derive(Debug, Clone, Default)]
pub struct FuzzSummary {
    pub cases: Vec<FuzzCase>,
}

impl FuzzSummary {
    pub fn equivalence_failures(&self) -> usize {
        self.cases.iter().filter(|c| c.equivalence.iter().any(|(_, s)| *s == CheckStatus::Fail)).count()
    }

    pub fn inconclusive(&self) -> usize {
        self.cases
            .iter()
            .filter(|c| !c.errors.is_empty() || c.equivalence.iter().any(|(_, s)| *s == CheckStatus::Inconclusive))
            .count()
    }

    pub fn monotonicity_failures(&self) -> usize {
        self.cases.iter().filter(|c| !c.monotonic).count()
    }

    pub fn per_location_failures(&self) -> usize {
        self.cases.iter().filter(|c| !c.per_location_sc).count()
    }

    pub fn all_pass(&self) -> bool {
        self.cases.iter().all(FuzzCase::passed)
    }
}

/// Checks `count` programs generated from seeds `bounds.seed, bounds.seed + 1, ...`.
pub fn run_fuzz_suite(bounds: &FuzzBounds, count: usize, opts: &CheckOptions) -> FuzzSummary {
    let cases = (0..count as u64)
        .into_par_iter()
        .map(|i| {
            let seed = bounds.seed.wrapping_add(i);
            let program = fuzz_program(&FuzzBounds { seed, ..bounds.clone() });
            check_case(seed, program, opts)
        })
        .collect();
    FuzzSummary { cases }
}

fn check_case(seed: u64, program: Program, opts: &CheckOptions) -> FuzzCase {
    let mut errors = Vec::new();
    let mut equivalence = Vec::new();
    for m in Model::OPERATIONAL {
        match cross_check_with(&program, &ModelConfig::new(m), opts) {
            Ok(r) => {
                for e in [&r.axiomatic_error, &r.operational_error].into_iter().flatten() {
                    errors.push(format!("{m}: {e}"));
                }
                equivalence.push((m, r.status));
            }
            Err(e) => errors.push(format!("{m}: {e}")),
        }
    }
    let mut allowed = BTreeMap::new();
    for m in Model::ALL {
        match allowed_axiomatic_with(&program, &ModelConfig::new(m), &opts.axiomatic) {
            Ok(v) => {
                allowed.insert(m, v.outcomes);
            }
            Err(e) => errors.push(format!("{m}: {e}")),
        }
    }
    let chain = [Model::Sc, Model::Gam, Model::GamArm, Model::Gam0];
    let monotonic = chain.windows(2).all(|w| match (allowed.get(&w[0]), allowed.get(&w[1])) {
        (Some(strong), Some(weak)) => strong.is_subset(weak),
        _ => true,
    });
    let per_location_sc = match (per_location_sc_outcomes(&program), allowed.get(&Model::Gam)) {
        (Ok(plsc), Some(gam)) => gam.is_subset(&plsc),
        (Err(e), _) => {
            errors.push(format!("per-location SC: {e}"));
            true
        }
        _ => true,
    };
    FuzzCase { seed, program, equivalence, monotonic, per_location_sc, errors }
}
