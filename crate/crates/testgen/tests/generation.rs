use tea_asm::parse;
use tea_isa::Instr;
use tea_ma::ma_step_events;
use tea_testgen::{gen_entangled, gen_program, gen_sample, trial_rng, GenConfig, InstrMix};
use tea_variants::is_entangled;

#[test]
fn same_seed_same_program() {
    let cfg = GenConfig::with_seed(11);
    let a = gen_program(&cfg, &mut trial_rng(11, 4));
    let b = gen_program(&cfg, &mut trial_rng(11, 4));
    assert_eq!(a, b);
    assert_ne!(a, gen_program(&cfg, &mut trial_rng(11, 5)));
}

#[test]
fn length_one_programs_hold_one_instruction() {
    let cfg = GenConfig { min_len: 1, max_len: 1, ..GenConfig::with_seed(3) };
    for t in 0..50 {
        let p = gen_program(&cfg, &mut trial_rng(3, t));
        assert_eq!(p.instrs.len(), 1);
        assert_eq!(p, gen_program(&cfg, &mut trial_rng(3, t)));
    }
}

#[test]
fn generated_programs_assemble() {
    let mut cfgs = vec![GenConfig::with_seed(5)];
    cfgs.push(GenConfig { sparse: true, ..GenConfig::with_seed(6) });
    cfgs.push(GenConfig { terminating: true, ..GenConfig::with_seed(7) });
    for cfg in cfgs {
        for t in 0..300 {
            let p = gen_program(&cfg, &mut trial_rng(cfg.seed, t));
            let text = p.to_string();
            let q = parse(&text).unwrap_or_else(|e| panic!("{e}\n{text}"));
            assert_eq!(q.imem(), p.imem());
            assert_eq!(q.dmem(), p.dmem());
            assert_eq!(q.entry, p.entry);
            assert_eq!(q.access_predicate(), p.access_predicate());
        }
    }
}

#[test]
fn contiguous_programs_start_near_their_code() {
    let cfg = GenConfig::with_seed(8);
    for t in 0..300 {
        let p = gen_program(&cfg, &mut trial_rng(8, t));
        // up to two slots before the block, wrapping below address 0
        let from_base = p.entry.wrapping_sub(p.base).wrapping_add(2);
        assert!(from_base as usize <= p.instrs.len() + 2, "entry {} for block {}..{}", p.entry, p.base, p.end());
    }
}

#[test]
fn terminating_programs_jump_forward_and_end_in_halt() {
    let cfg = GenConfig { terminating: true, ..GenConfig::with_seed(9) };
    for t in 0..300 {
        let p = gen_program(&cfg, &mut trial_rng(9, t));
        assert_eq!(p.instrs.last(), Some(&Instr::Halt));
        for (i, x) in p.instrs.iter().enumerate() {
            match *x {
                Instr::Jg { c, .. } | Instr::Jge { c, .. } => assert!((c as i32) > 0),
                Instr::TsxStart { c } => assert!(c > p.base + i as tea_isa::Word),
                _ => {}
            }
        }
    }
}

#[test]
fn kernel_bias_reaches_inaccessible_memory() {
    let measure = |kernel_bias| {
        let cfg = GenConfig { kernel_bias, ..GenConfig::with_seed(21) };
        let (mut loads, mut inaccessible) = (0u64, 0u64);
        for t in 0..1000 {
            let (mut s, _) = gen_entangled(&cfg, &mut trial_rng(21, t));
            for _ in 0..cfg.horizon {
                if s.halted() {
                    break;
                }
                let (u, ev) = ma_step_events(&s);
                for c in ev.completed.iter().filter(|c| c.mop.memory_op()) {
                    let a = c.addr.expect("loads carry an address");
                    loads += 1;
                    inaccessible += !s.arch.ga.contains(a) as u64;
                }
                s = u;
            }
        }
        inaccessible as f64 / loads as f64
    };
    let biased = measure(true);
    eprintln!("inaccessible load fraction: biased {biased:.3}, unbiased {:.3}", measure(false));
    assert!(biased >= 0.10, "{biased}");
}

#[test]
fn generated_states_are_entangled_and_often_mid_flight() {
    let cfg = GenConfig::with_seed(2);
    let (mut busy, mut running) = (0, 0);
    for t in 0..1000 {
        let (s, h) = gen_entangled(&cfg, &mut trial_rng(2, t));
        assert!(is_entangled(&s, &h));
        if !s.halted() {
            running += 1;
            busy += !s.rob.is_empty() as u32;
        }
    }
    eprintln!("nonempty ROB in {busy} of {running} running states");
    assert!(busy * 2 > running);
}

#[test]
fn zero_forward_steps_leave_the_invalidated_state() {
    let cfg = GenConfig { max_forward_steps: 0, ..GenConfig::with_seed(4) };
    for t in 0..100 {
        let sample = gen_sample(&cfg, &mut trial_rng(4, t));
        assert_eq!(sample.forward, 0);
        let (s, h) = gen_entangled(&cfg, &mut trial_rng(4, t));
        assert!(s.rob.is_empty() && is_entangled(&s, &h));
    }
}

#[test]
fn stripping_in_cache_keeps_the_rest_of_the_stream() {
    let a = GenConfig::with_seed(13);
    let b = GenConfig { strip_in_cache: true, ..a.clone() };
    for t in 0..100 {
        let p = gen_program(&a, &mut trial_rng(13, t));
        let q = gen_program(&b, &mut trial_rng(13, t));
        assert!(q.instrs.iter().all(|i| !i.is_in_cache()));
        for (x, y) in p.instrs.iter().zip(&q.instrs) {
            assert!(x == y || (x.is_in_cache() && *y == Instr::Noop));
        }
    }
}

#[test]
fn an_empty_mix_generates_noops() {
    let mix = InstrMix { alu: 0, mul: 0, cmp: 0, jump: 0, load: 0, tsx: 0, in_cache: 0, halt: 0, noop: 0 };
    let cfg = GenConfig { mix, ..GenConfig::with_seed(1) };
    let p = gen_program(&cfg, &mut trial_rng(1, 0));
    assert!(p.instrs.iter().all(|i| *i == Instr::Noop));
}
