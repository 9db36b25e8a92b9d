mod common;

use std::collections::BTreeMap;

use gamkit::axiomatic::{
    allowed_axiomatic, allowed_axiomatic_with, check_inst_order, check_load_value, enumerate_executions,
    AxiomaticOptions, CandidateExecution, MemoryOrder,
};
use gamkit::deps::{build_ppo, InstId, RfSource};
use gamkit::harness::{fuzz_program, FuzzBounds};
use gamkit::litmus::{Instruction, Reg};
use gamkit::{Error, Model, ModelConfig, Program, Witness};
use proptest::prelude::*;

fn id(thread: usize, index: usize) -> InstId {
    InstId { thread, index }
}

fn reg(name: &str) -> Reg {
    Reg::from_name(name).unwrap()
}

fn target_allowed(stem: &str, model: Model) -> bool {
    allowed_axiomatic(&common::corpus_program(stem), &ModelConfig::new(model)).unwrap().target_allowed
}

#[test]
fn dekker_has_four_executions() {
    let execs = enumerate_executions(&common::corpus_program("dekker")).unwrap();
    assert_eq!(execs.len(), 4);
    let rfs: std::collections::BTreeSet<_> = execs.iter().map(|e| e.rf()).collect();
    assert_eq!(rfs.len(), 4);
}

#[test]
fn store_then_load_has_two_executions() {
    let p = common::program("test \"t\"\nthread P1 { St [a] 1 ; r1 = Ld [a] }\nexists (P1:r1=1)\n");
    let sources: Vec<RfSource> = enumerate_executions(&p).unwrap().iter().map(|e| e.rf()[0].1).collect();
    assert_eq!(sources.len(), 2);
    assert!(sources.contains(&RfSource::Init));
    assert!(sources.contains(&RfSource::Store(id(0, 0))));
}

#[test]
fn out_of_thin_air_value_is_enumerated_then_rejected() {
    let p = common::corpus_program("oota");
    let execs = enumerate_executions(&p).unwrap();
    assert!(execs.iter().any(|e| e.register(0, reg("r1")) == 42 && e.register(1, reg("r2")) == 42));
    for model in Model::ALL {
        assert!(!allowed_axiomatic(&p, &ModelConfig::new(model)).unwrap().target_allowed, "{model}");
    }
}

fn corr_execution() -> CandidateExecution {
    let p = common::corpus_program("corr");
    enumerate_executions(&p)
        .unwrap()
        .into_iter()
        .find(|e| e.register(1, reg("r1")) == 1 && e.register(1, reg("r2")) == 0)
        .unwrap()
}

#[test]
fn corr_memory_order_violates_instruction_order_only_under_gam() {
    let exec = corr_execution();
    let mo = MemoryOrder::with_init(&exec, [id(1, 1), id(0, 0), id(1, 0)]);
    assert!(mo.is_well_formed(&exec));
    assert!(!check_inst_order(&exec, &mo, &build_ppo(&exec.paths, &ModelConfig::new(Model::Gam))));
    assert!(check_inst_order(&exec, &mo, &build_ppo(&exec.paths, &ModelConfig::new(Model::Gam0))));
    assert!(check_load_value(&exec, &mo, &ModelConfig::new(Model::Gam0)));
}

#[test]
fn single_instruction_execution_satisfies_instruction_order() {
    let p = common::program("test \"t\"\nthread P1 { St [a] 1 }\nexists ([a]=1)\n");
    let exec = &enumerate_executions(&p).unwrap()[0];
    let mo = MemoryOrder::with_init(exec, [id(0, 0)]);
    for model in Model::ALL {
        let cfg = ModelConfig::new(model);
        assert!(check_inst_order(exec, &mo, &build_ppo(&exec.paths, &cfg)));
        assert!(check_load_value(exec, &mo, &cfg));
    }
}

#[test]
fn load_forwards_from_the_youngest_older_store() {
    // I1 = St [a] 1, S = St [a] r1 (writes 2), I2 = r2 = Ld [a], with I2 before S in memory order.
    let p =
        common::program("test \"t\"\nthread P1 { r1 = 2 ; St [a] 1 ; St [a] r1 ; r2 = Ld [a] }\nexists (P1:r2=2)\n");
    let execs = enumerate_executions(&p).unwrap();
    assert_eq!(execs.len(), 3);
    let order = [id(0, 1), id(0, 3), id(0, 2)];
    let passing: Vec<RfSource> = execs
        .iter()
        .filter(|e| check_load_value(e, &MemoryOrder::with_init(e, order), &ModelConfig::new(Model::Gam)))
        .map(|e| e.rf()[0].1)
        .collect();
    assert_eq!(passing, vec![RfSource::Store(id(0, 2))]);
    let sc = execs
        .iter()
        .filter(|e| check_load_value(e, &MemoryOrder::with_init(e, order), &ModelConfig::new(Model::Sc)))
        .map(|e| e.rf()[0].1)
        .collect::<Vec<_>>();
    assert_eq!(sc, vec![RfSource::Store(id(0, 1))], "without forwarding only the mo-earlier store is visible");
}

#[test]
fn init_is_not_visible_past_an_earlier_store() {
    let p = common::program("test \"t\"\nthread P1 { St [a] 1 }\nthread P2 { r1 = Ld [a] }\nexists (P2:r1=0)\n");
    let exec = enumerate_executions(&p).unwrap().into_iter().find(|e| e.rf()[0].1 == RfSource::Init).unwrap();
    let cfg = ModelConfig::new(Model::Gam);
    assert!(!check_load_value(&exec, &MemoryOrder::with_init(&exec, [id(0, 0), id(1, 0)]), &cfg));
    assert!(check_load_value(&exec, &MemoryOrder::with_init(&exec, [id(1, 0), id(0, 0)]), &cfg));
}

#[test]
fn lone_load_reads_init() {
    let p = common::program("test \"t\"\ninit { [a]=5 }\nthread P1 { r1 = Ld [a] }\nexists (P1:r1=5)\n");
    let execs = enumerate_executions(&p).unwrap();
    assert_eq!(execs.len(), 1);
    let mo = MemoryOrder::with_init(&execs[0], [id(0, 0)]);
    assert!(check_load_value(&execs[0], &mo, &ModelConfig::new(Model::Sc)));
    assert!(allowed_axiomatic(&p, &ModelConfig::new(Model::Sc)).unwrap().target_allowed);
}

#[test]
fn dekker_is_forbidden_under_sc_and_allowed_under_gam() {
    let p = common::corpus_program("dekker");
    let sc = allowed_axiomatic(&p, &ModelConfig::new(Model::Sc)).unwrap();
    assert!(!sc.target_allowed);
    assert_eq!(sc.outcomes.len(), 3);
    assert!(target_allowed("dekker", Model::Gam));
}

#[test]
fn dekker_gam_witness_is_the_expected_order() {
    let p = common::corpus_program("dekker");
    let exec =
        enumerate_executions(&p).unwrap().into_iter().find(|e| e.rf().iter().all(|r| r.1 == RfSource::Init)).unwrap();
    // Both loads before both stores.
    let cfg = ModelConfig::new(Model::Gam);
    let mo = MemoryOrder::with_init(&exec, [id(0, 1), id(1, 1), id(0, 0), id(1, 0)]);
    assert!(check_inst_order(&exec, &mo, &build_ppo(&exec.paths, &cfg)));
    assert!(check_load_value(&exec, &mo, &cfg));
}

#[test]
fn rsw_separates_gam_arm_from_gam() {
    assert!(target_allowed("rsw", Model::GamArm));
    assert!(!target_allowed("rsw", Model::Gam));
    assert!(!target_allowed("rnsw", Model::GamArm));
    assert!(!target_allowed("rnsw", Model::Gam));
}

#[test]
fn every_corpus_expectation_holds() {
    for e in gamkit::harness::corpus() {
        for x in &e.program.expectations {
            let v = allowed_axiomatic(&e.program, &ModelConfig::new(x.model)).unwrap();
            assert_eq!(v.verdict(), x.verdict, "{} under {}", e.program.name, x.model);
        }
    }
}

#[test]
fn gam0_regression_program_forbids_the_stale_load() {
    let p = common::program(
        "test \"stale\"\nthread P1 { r1 = Ld [b] ; St [a + r1 - r1] 1 ; r2 = Ld [a] ; r3 = Ld [a] }\nexists (P1:r2=1 /\\ P1:r3=0)\n",
    );
    assert!(!allowed_axiomatic(&p, &ModelConfig::new(Model::Gam0)).unwrap().target_allowed);
}

#[test]
fn too_many_memory_instructions_is_a_resource_limit() {
    let p = common::corpus_program("rsw");
    let err = allowed_axiomatic_with(&p, &ModelConfig::new(Model::Gam), &AxiomaticOptions { max_memory_instances: 3 })
        .unwrap_err();
    assert!(matches!(err, Error::EnumerationBound { bound: 3, .. }));
    assert!(err.is_resource_limit());
}

#[test]
fn witness_json_lists_rf_then_mo() {
    let v = allowed_axiomatic(&common::corpus_program("corr"), &ModelConfig::new(Model::Gam0)).unwrap();
    let json = v.witness.as_ref().unwrap().to_json();
    let keys: Vec<&String> = json.as_object().unwrap().keys().collect();
    assert_eq!(keys, ["rf", "mo"]);
    assert_eq!(json["mo"][0], "init:a");
    assert_eq!(json["rf"].as_array().unwrap().len(), 2);
}

/// Re-derives every value of an execution from its rf map alone.
fn value_consistent(exec: &CandidateExecution, p: &Program) -> bool {
    let layout = p.layout().unwrap();
    exec.paths.iter().enumerate().all(|(t, path)| {
        let mut regs = BTreeMap::new();
        let ok = path.iter().all(|inst| {
            let ev = |e: &gamkit::litmus::Expr, regs: &BTreeMap<Reg, i64>| {
                e.eval(&layout, &mut |r| regs.get(&r).copied().unwrap_or(0))
            };
            match &inst.instr {
                Instruction::Load { dest, addr } => {
                    let a = ev(addr, &regs);
                    let v = match inst.rf.unwrap() {
                        RfSource::Init => exec.init.get(&a).copied().unwrap_or(0),
                        RfSource::Store(s) => {
                            let st = exec.instance(s);
                            if st.addr != Some(a) {
                                return false;
                            }
                            st.value.unwrap()
                        }
                    };
                    regs.insert(*dest, v);
                    inst.addr == Some(a) && inst.value == Some(v)
                }
                Instruction::Store { addr, data } => {
                    inst.addr == Some(ev(addr, &regs)) && inst.value == Some(ev(data, &regs))
                }
                Instruction::RegOp { dest, rhs } => {
                    let v = ev(rhs, &regs);
                    regs.insert(*dest, v);
                    inst.value == Some(v)
                }
                Instruction::Branch { cond, .. } => inst.value == Some(ev(cond, &regs)),
                Instruction::Fence(_) => true,
            }
        });
        ok && regs == exec.registers[t]
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn enumerated_executions_are_value_consistent(seed in any::<u64>()) {
        let p = fuzz_program(&FuzzBounds { seed, ..FuzzBounds::default() });
        for exec in enumerate_executions(&p).unwrap() {
            prop_assert!(value_consistent(&exec, &p), "{}", p);
        }
    }

    #[test]
    fn witnesses_satisfy_both_axioms(seed in any::<u64>()) {
        let p = fuzz_program(&FuzzBounds { seed, ..FuzzBounds::default() });
        for model in Model::ALL {
            let cfg = ModelConfig::new(model);
            let v = allowed_axiomatic(&p, &cfg).unwrap();
            prop_assert_eq!(v.witness.is_some(), v.target_allowed);
            if let Some(Witness::Axiomatic(w)) = &v.witness {
                prop_assert!(w.mo.is_well_formed(&w.execution));
                prop_assert!(check_inst_order(&w.execution, &w.mo, &build_ppo(&w.execution.paths, &cfg)));
                prop_assert!(check_load_value(&w.execution, &w.mo, &cfg));
            }
        }
    }

    #[test]
    fn sc_outcomes_are_the_interleavings(seed in any::<u64>()) {
        let p = fuzz_program(&FuzzBounds { seed, ..FuzzBounds::default() });
        let sc = allowed_axiomatic(&p, &ModelConfig::new(Model::Sc)).unwrap().outcomes;
        prop_assert_eq!(sc, common::interleaving_outcomes(&p), "{}", p);
    }

    #[test]
    fn single_thread_programs_have_one_outcome(seed in any::<u64>()) {
        let p = fuzz_program(&FuzzBounds { seed, max_threads: 1, ..FuzzBounds::default() });
        let expected = common::interleaving_outcomes(&p);
        prop_assert_eq!(expected.len(), 1);
        for model in Model::ALL {
            prop_assert_eq!(&allowed_axiomatic(&p, &ModelConfig::new(model)).unwrap().outcomes, &expected);
        }
    }
}
