mod common;

use gamkit::harness::{corpus, fuzz_program, FuzzBounds};
use gamkit::litmus::{
    eval_expr, parse_litmus, resolve_addresses, Access, AddressLayout, Expr, Fence, Instruction, Location,
    ParseErrorKind, Predicate, Reg, RegisterFile, Value,
};
use proptest::prelude::*;

fn parse_err(src: &str) -> ParseErrorKind {
    parse_litmus(src).expect_err("source should be rejected").kind
}

#[test]
fn dekker_has_two_threads_of_two_instructions() {
    let p = parse_litmus(corpus().iter().find(|e| e.file == "dekker.litmus").unwrap().source).unwrap();
    assert_eq!(p.name, "Dekker");
    assert_eq!(p.threads.len(), 2);
    assert!(p.threads.iter().all(|t| t.code.len() == 2));
    assert!(matches!(p.threads[0].code[0], Instruction::Store { .. }));
    assert!(matches!(p.threads[0].code[1], Instruction::Load { .. }));
    let r1 = Location::Reg { thread: 0, reg: Reg::from_name("r1").unwrap() };
    let r2 = Location::Reg { thread: 1, reg: Reg::from_name("r2").unwrap() };
    assert_eq!(
        p.condition.predicate,
        Predicate::And(vec![Predicate::Eq(r1, Value::Int(0)), Predicate::Eq(r2, Value::Int(0))])
    );
}

#[test]
fn program_without_threads_is_rejected() {
    assert_eq!(parse_err("test \"t\"\ninit { [a]=0 }\nexists ([a]=0)\n"), ParseErrorKind::NoThreads);
}

#[test]
fn unknown_fence_class_is_rejected() {
    let kind = parse_err("test \"t\"\nthread P1 { FenceXQ }\nexists ([a]=0)\n");
    assert_eq!(kind, ParseErrorKind::UnknownFenceClass("FenceXQ".into()));
}

#[test]
fn duplicate_label_is_rejected() {
    let src = "test \"t\"\nthread P1 { r1 = Ld [a] ; bnez r1, L ; L: St [a] 1 ; L: St [a] 2 }\nexists ([a]=0)\n";
    assert_eq!(parse_err(src), ParseErrorKind::DuplicateLabel("L".into()));
}

#[test]
fn backward_branch_is_rejected() {
    let src = "test \"t\"\nthread P1 { L: r1 = Ld [a] ; bnez r1, L }\nexists ([a]=0)\n";
    assert_eq!(parse_err(src), ParseErrorKind::BackwardBranch("L".into()));
}

#[test]
fn syntax_errors_carry_a_position() {
    let e = parse_litmus("test \"t\"\nthread P1 { St [a] 1 ;\n  r1 = Ld ( }\nexists ([a]=0)\n").unwrap_err();
    assert!(matches!(e.kind, ParseErrorKind::Syntax(_)));
    assert_eq!(e.line, 3);
    assert!(e.col > 1);
}

#[test]
fn fence_macros_expand_to_basic_fences() {
    let p = parse_litmus("test \"t\"\nthread P1 { FenceAcq ; FenceRel ; FenceFull }\nexists ([a]=0)\n").unwrap();
    let fence = |from, to| Instruction::Fence(Fence { from, to });
    use Access::{Load as L, Store as S};
    assert_eq!(
        p.threads[0].code,
        vec![fence(L, L), fence(L, S), fence(L, S), fence(S, S), fence(L, L), fence(L, S), fence(S, L), fence(S, S)]
    );
}

#[test]
fn labels_bind_lexicographically_from_0x100() {
    let two = AddressLayout::assign(["b".to_string(), "a".to_string()]).unwrap();
    assert_eq!(two.address_of("a"), Some(0x100));
    assert_eq!(two.address_of("b"), Some(0x108));
    let one = AddressLayout::assign(["a".to_string()]).unwrap();
    assert_eq!(one.address_of("a"), Some(0x100));
    let p = common::program("test \"t\"\nthread P1 { St [b] 1 ; r1 = Ld [a] }\nexists (P1:r1=0)\n");
    let layout = p.layout().unwrap();
    assert_eq!((layout.address_of("a"), layout.address_of("b")), (Some(0x100), Some(0x108)));
}

#[test]
fn unresolved_programs_have_no_layout_until_resolved() {
    let p = parse_litmus("test \"t\"\nthread P1 { St [a] 1 }\nexists ([a]=1)\n").unwrap();
    assert!(!p.is_resolved());
    assert!(resolve_addresses(p).unwrap().is_resolved());
}

#[test]
fn expressions_evaluate_with_zero_default_registers() {
    let layout = AddressLayout::assign(["a".to_string()]).unwrap();
    let r1 = Reg::from_name("r1").unwrap();
    let e = Expr::Label("a".into()) + Expr::Reg(r1) - Expr::Reg(r1);
    let regs: RegisterFile = [(r1, 7)].into_iter().collect();
    assert_eq!(eval_expr(&e, &regs, &layout), 0x100);
    assert_eq!(eval_expr(&Expr::Lit(42), &regs, &layout), 42);
    assert_eq!(eval_expr(&Expr::Reg(Reg::from_name("r9").unwrap()), &regs, &layout), 0);
}

#[test]
fn missing_init_entries_default_to_zero() {
    let p = common::program("test \"t\"\ninit { [a]=3 }\nthread P1 { St [b] 1 }\nexists ([a]=3)\n");
    assert_eq!(p.init.get("b"), Some(&Value::Int(0)));
    assert_eq!(p.init.get("a"), Some(&Value::Int(3)));
}

#[test]
fn every_corpus_file_round_trips_through_the_printer() {
    for e in corpus() {
        let printed = e.program.to_string();
        let reparsed = common::program(&printed);
        assert_eq!(reparsed, e.program, "{} round trip:\n{printed}", e.file);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn print_then_parse_is_identity(seed in any::<u64>()) {
        let p = fuzz_program(&FuzzBounds { seed, ..FuzzBounds::default() });
        let printed = p.to_string();
        prop_assert_eq!(common::program(&printed), p);
    }

    #[test]
    fn label_addresses_are_injective_and_evaluate_to_themselves(n in 1usize..8) {
        let labels: Vec<String> = (0..n).map(|i| format!("l{i}")).collect();
        let layout = AddressLayout::assign(labels.clone()).unwrap();
        let addrs: std::collections::BTreeSet<i64> = labels.iter().map(|l| layout.address_of(l).unwrap()).collect();
        prop_assert_eq!(addrs.len(), n);
        for l in &labels {
            prop_assert_eq!(eval_expr(&Expr::Label(l.clone()), &RegisterFile::new(), &layout), layout.address_of(l).unwrap());
        }
    }

    #[test]
    fn evaluation_is_total_and_deterministic(a in -1000i64..1000, b in -1000i64..1000) {
        let layout = AddressLayout::assign(["x".to_string()]).unwrap();
        let (r1, r2) = (Reg::from_name("r1").unwrap(), Reg::from_name("r2").unwrap());
        let regs: RegisterFile = [(r1, a), (r2, b)].into_iter().collect();
        let e = Expr::Reg(r1) + Expr::Label("x".into()) - Expr::Reg(r2);
        prop_assert_eq!(eval_expr(&e, &regs, &layout), a + 0x100 - b);
        prop_assert_eq!(eval_expr(&e, &regs, &layout), eval_expr(&e, &regs, &layout));
    }
}
