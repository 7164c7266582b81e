//! Parsing, error reporting, emission, and behaviour of the bundled corpus.

use std::sync::Arc;

use tea_asm::corpus::{self, meltdown, primality, spectre};
use tea_asm::*;
use tea_isa::*;
use tea_ma::*;
use tea_variants::{init_h, is_entangled};

fn one(src: &str) -> Instr {
    let p = parse(src).unwrap();
    assert_eq!(p.instrs.len(), 1);
    p.instrs[0]
}

fn run_isa(mut s: IsaState, budget: usize) -> IsaState {
    for _ in 0..budget {
        if s.halt {
            break;
        }
        det_step_mut(&mut s);
    }
    s
}

fn run_ma(mut s: MaState, budget: usize) -> MaState {
    for _ in 0..budget {
        if s.halted() {
            break;
        }
        s = ma_step(&s);
    }
    s
}

fn ma(p: &Program) -> MaState {
    emit_ma(p, Arc::new(MaParams::default()))
}

#[test]
fn single_instructions() {
    assert_eq!(one("loadi r1 7"), Instr::Loadi { rd: Reg(1), c: 7 });
    assert_eq!(one("ldri r0 r2 0x10"), Instr::Ldri { rd: Reg(0), r1: Reg(2), c: 16 });
    assert_eq!(one("ldri r0 r2 0x10").to_string(), "ldri r0 r2 16");
    assert_eq!(one("  add r1, r2, r3 ; sum"), Instr::Add { rd: Reg(1), r1: Reg(2), r2: Reg(3) });
    assert_eq!(one("jge r9 -5"), Instr::Jge { r1: Reg(9), c: (-5i32) as Word });
}

#[test]
fn unknown_register_is_located() {
    let e = parse("noop\nloadi r99 1").unwrap_err();
    assert_eq!((e.line, e.column), (2, 7));
    assert!(matches!(e.kind, AsmErrorKind::Instr(ParseErrorKind::UnknownRegister(_))), "{e}");
}

#[test]
fn syntax_errors_carry_positions() {
    let e = parse("  frob r1").unwrap_err();
    assert_eq!((e.line, e.column), (1, 3));
    assert!(matches!(e.kind, AsmErrorKind::Instr(ParseErrorKind::UnknownOp(_))));

    let e = parse("loadi r1 0x1_0000_0000").unwrap_err();
    assert!(matches!(e.kind, AsmErrorKind::Instr(ParseErrorKind::BadImmediate(_))));
    let e = parse("loadi r1 0x100000000").unwrap_err();
    assert_eq!(e.column, 10);
    assert!(matches!(e.kind, AsmErrorKind::Instr(ParseErrorKind::ImmediateOverflow(_))));

    let e = parse("noop\n.org 4").unwrap_err();
    assert_eq!(e.kind, AsmErrorKind::OrgAfterCode);
    assert_eq!(parse(".access 5 4").unwrap_err().kind, AsmErrorKind::EmptyRange { lo: 5, hi: 4 });
    assert!(matches!(parse(".data 1").unwrap_err().kind, AsmErrorKind::DirectiveArity { .. }));
    assert!(matches!(parse(".bss 1").unwrap_err().kind, AsmErrorKind::UnknownDirective(_)));
    assert!(matches!(parse("jg r1 nowhere").unwrap_err().kind, AsmErrorKind::UndefinedSymbol(_)));
    assert!(matches!(parse("a:\na:").unwrap_err().kind, AsmErrorKind::DuplicateSymbol(_)));
    assert!(matches!(parse(".data 1 2\n.data 1 3").unwrap_err().kind, AsmErrorKind::DuplicateData(1)));
}

#[test]
fn symbols_resolve_against_the_origin() {
    let p = parse(
        "\
.equ TOP 0x30
.org 0x40
.entry go
.data TOP 9
back:  noop
go:    ldri r1 r0 TOP
       jg r1 back
       tsx-start back
",
    )
    .unwrap();
    assert_eq!(p.base, 0x40);
    assert_eq!(p.entry, 0x41);
    assert_eq!(p.data, vec![(0x30, 9)]);
    assert_eq!(p.instrs[1], Instr::Ldri { rd: Reg(1), r1: Reg(0), c: 0x30 });
    assert_eq!(p.instrs[2], Instr::Jg { r1: Reg(1), c: (-2i32) as Word });
    assert_eq!(p.instrs[3], Instr::TsxStart { c: 0x40 });
}

#[test]
fn access_defaults() {
    assert_eq!(parse("halt").unwrap().access, vec![(0, Word::MAX)]);
    let p = parse(".access none").unwrap();
    assert!(p.access.is_empty());
    assert!(!p.access_predicate().contains(0));
    assert_eq!(parse(&render(&p)).unwrap(), p);
}

#[test]
fn render_prints_signed_offsets() {
    let p = parse("top: noop\njge r9 top").unwrap();
    assert!(render(&p).contains("jge r9 -1"), "{}", render(&p));
    assert_eq!(parse(&render(&p)).unwrap(), p);
}

#[test]
fn emitted_states_are_initial() {
    let p = corpus::meltdown();
    let isa = emit_isa(&p);
    assert_eq!(isa.pc, p.entry);
    assert!(!isa.halt && !isa.tsx.active && isa.cache.is_empty());
    assert!(isa.rf.iter().all(|&v| v == 0));
    let m = ma(&p);
    assert_eq!((m.fetch_pc, m.cyc), (p.entry, 0));
    assert!(m.rob.is_empty() && m.reg_st.is_empty());
    assert_eq!(m.arch, isa);
    for name in corpus::NAMES {
        let s = ma(&corpus::by_name(name).unwrap());
        assert!(is_entangled(&s, &init_h(&s)), "{name}");
    }
}

#[test]
fn empty_program_spins_on_noops() {
    let p = parse("").unwrap();
    assert!(p.instrs.is_empty());
    let s = run_isa(emit_isa(&p), 100);
    assert!(!s.halt);
    assert_eq!(s.pc, 100);
    assert!(!run_ma(ma(&p), 100).halted());
}

#[test]
fn corpus_round_trips_and_matches_its_layout() {
    for name in corpus::NAMES {
        let p = corpus::by_name(name).unwrap();
        assert_eq!(parse(&render(&p)).unwrap(), p, "{name}");
    }
    let m = corpus::meltdown();
    assert_eq!(m.dmem().get(&meltdown::KERNEL), Some(&meltdown::SECRET));
    assert!(!m.access_predicate().contains(meltdown::KERNEL));
    assert!(m.access_predicate().contains(meltdown::PROBE + meltdown::SLOTS));
    const { assert!(meltdown::SECRET < meltdown::SLOTS) };

    let s = corpus::spectre();
    assert_eq!(s.dmem().get(&(spectre::ARRAY + spectre::INDEX)), Some(&spectre::SECRET));
    assert!(s.access_predicate().contains(spectre::PROBE + spectre::SECRET));

    assert_eq!(corpus::primality().dmem().get(&primality::N_ADDR), Some(&primality::N));
}

#[test]
fn meltdown_leaks_on_the_pipeline_only() {
    let p = corpus::meltdown();
    let m = run_ma(ma(&p), 20_000);
    assert!(m.halted());
    assert_eq!(m.arch.rf[meltdown::RESULT_REG], meltdown::SECRET);
    assert_eq!(m.arch.rf[meltdown::KERNEL_HIT_REG], 1);

    let i = run_isa(emit_isa(&p), 20_000);
    assert!(i.halt);
    assert_eq!(i.rf[meltdown::RESULT_REG], meltdown::SLOTS);
    assert_eq!(i.rf[meltdown::KERNEL_HIT_REG], 0);
    assert_eq!(i.pc, m.arch.pc);
}

#[test]
fn spectre_fills_out_of_bounds_lines_transiently() {
    let p = corpus::spectre();
    let m = run_ma(ma(&p), 1000);
    assert!(m.halted());
    assert!(m.arch.cache.contains_key(&(spectre::ARRAY + spectre::INDEX)));
    let i = run_isa(emit_isa(&p), 1000);
    assert!(i.cache.is_empty());
    assert_eq!((i.pc, &i.rf), (m.arch.pc, &m.arch.rf));

    // enough stations for the dependent probe load to complete in time
    let mut params = MaParams::default();
    params.rs_count = 6;
    let wide = run_ma(emit_ma(&p, Arc::new(params)), 1000);
    assert!(wide.arch.cache.contains_key(&(spectre::PROBE + spectre::SECRET)));
}

fn is_prime(n: Word) -> bool {
    n >= 2 && (2..n).take_while(|d| d * d <= n).all(|d| !n.is_multiple_of(d))
}

#[test]
fn primality_matches_trial_division() {
    for n in (0..60).chain([97, 121, 169, 997, 1001]) {
        let p = corpus::primality_of(n);
        let i = run_isa(emit_isa(&p), 1_000_000);
        assert!(i.halt, "n={n}");
        assert_eq!(i.rf[primality::RESULT_REG], is_prime(n) as Word, "n={n}");
        if n < 40 || n == 97 {
            let m = run_ma(ma(&p), 1_000_000);
            assert!(m.halted(), "n={n}");
            assert_eq!((m.arch.pc, &m.arch.rf), (i.pc, &i.rf), "n={n}");
        }
    }
}
