//! Random programs, arbitrary machine states, and entangled states.
//!
//! Entangled states come from the recipe "take an arbitrary state,
//! invalidate it, run the history machine forward a bounded number of
//! steps", which yields entangled states by construction.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tea_asm::{emit_ma, Program};
use tea_isa::{Instr, Reg, TsxState, Word};
use tea_ma::{MaState, RobTag};
use tea_variants::{init_h, invl, is_entangled, mah_step, History};

use crate::config::GenConfig;

/// The sample stream of one trial. Streams of different trials are
/// independent, so trials can run in any order or in parallel.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

fn reg(cfg: &GenConfig, rng: &mut impl Rng) -> Reg {
    // small registers are favoured so that operands collide often
    let n = cfg.reg_count.max(1) as u8;
    if rng.random_bool(0.5) {
        Reg(rng.random_range(0..n.min(3)))
    } else {
        Reg(rng.random_range(0..n))
    }
}

/// A value usable as an address or an address offset.
fn addr_value(cfg: &GenConfig, rng: &mut impl Rng) -> Word {
    let b = cfg.boundary();
    if cfg.kernel_bias && rng.random_bool(0.5) {
        b.wrapping_add(rng.random_range(0..6)).wrapping_sub(2)
    } else {
        rng.random_range(0..cfg.addr_span.max(1))
    }
}

fn small(rng: &mut impl Rng) -> Word {
    rng.random_range(0..8)
}

fn jump_offset(cfg: &GenConfig, rng: &mut impl Rng, i: usize, len: usize) -> Word {
    if cfg.terminating {
        rng.random_range(1..=(len - i) as Word)
    } else {
        let back = i.min(4) as i32;
        let fwd = (len - i).min(6) as i32;
        rng.random_range(-back..=fwd) as Word
    }
}

/// Operands of the latest `ldr`, which a later `in-cache` may reuse so that
/// probes often hit lines loads have just touched.
type LastLoad = Option<(Reg, Reg)>;

fn instr(cfg: &GenConfig, rng: &mut impl Rng, i: usize, len: usize, base: Word, last: &mut LastLoad) -> Instr {
    let m = &cfg.mix;
    let total = m.total();
    if total == 0 {
        return Instr::Noop;
    }
    let mut pick = rng.random_range(0..total);
    let mut take = |w: u32| {
        if pick < w {
            true
        } else {
            pick -= w;
            false
        }
    };
    let (rd, r1, r2) = (reg(cfg, rng), reg(cfg, rng), reg(cfg, rng));
    if take(m.alu) {
        match rng.random_range(0..4) {
            0 => Instr::Loadi { rd, c: if rng.random_bool(0.5) { small(rng) } else { addr_value(cfg, rng) } },
            1 => Instr::Addi { rd, r1, c: small(rng) },
            2 => Instr::Add { rd, r1, r2 },
            _ => Instr::And { rd, r1, r2 },
        }
    } else if take(m.mul) {
        Instr::Mul { rd, r1, r2 }
    } else if take(m.cmp) {
        Instr::Cmp { rd, r1, r2 }
    } else if take(m.jump) {
        let c = jump_offset(cfg, rng, i, len);
        if rng.random_bool(0.5) {
            Instr::Jg { r1, c }
        } else {
            Instr::Jge { r1, c }
        }
    } else if take(m.load) {
        if rng.random_bool(0.5) {
            Instr::Ldri { rd, r1, c: addr_value(cfg, rng) }
        } else {
            *last = Some((r1, r2));
            Instr::Ldr { rd, r1, r2 }
        }
    } else if take(m.tsx) {
        if rng.random_bool(0.7) {
            let lo = if cfg.terminating { i + 1 } else { 0 };
            Instr::TsxStart { c: base.wrapping_add(rng.random_range(lo..=len) as Word) }
        } else {
            Instr::TsxEnd
        }
    } else if take(m.in_cache) {
        match *last {
            Some((r1, r2)) if rng.random_bool(0.5) => Instr::InCache { rd, r1, r2 },
            _ => Instr::InCache { rd, r1, r2 },
        }
    } else if take(m.halt) {
        Instr::Halt
    } else {
        Instr::Noop
    }
}

/// A random program: a contiguous block with a nearby entry point, or a
/// scattered one with a far entry point when `cfg.sparse` is set.
pub fn gen_program(cfg: &GenConfig, rng: &mut impl Rng) -> Program {
    let len = rng.random_range(cfg.min_len.max(1)..=cfg.max_len.max(cfg.min_len.max(1)));
    let base: Word = if cfg.sparse { rng.random_range(0..1024) } else { rng.random_range(0..8) * 4 };
    let mut instrs: Vec<Instr> = Vec::with_capacity(len + 1);
    let mut last = None;
    for i in 0..len {
        let x = instr(cfg, rng, i, len, base, &mut last);
        if cfg.sparse {
            for _ in 0..rng.random_range(0..3) {
                instrs.push(Instr::Noop);
            }
        }
        instrs.push(x);
    }
    if cfg.terminating {
        instrs.push(Instr::Halt);
    }
    aim_fallbacks(cfg, rng, base, &mut instrs);
    let entry = if cfg.sparse {
        rng.random_range(0..1024)
    } else if rng.random_bool(0.5) {
        base
    } else {
        // anywhere in the block, or a couple of slots before it
        base.wrapping_add(rng.random_range(0..instrs.len() as Word + 2)).wrapping_sub(2)
    };

    let span = cfg.addr_span.max(1);
    let mut data: Vec<(Word, Word)> = Vec::new();
    for _ in 0..rng.random_range(0..10) {
        let a = rng.random_range(0..span + 8);
        if !data.iter().any(|d| d.0 == a) {
            data.push((a, rng.random_range(0..span)));
        }
    }
    let b = cfg.boundary();
    let access = if b == 0 { vec![] } else { vec![(0, b - 1)] };
    let mut p = Program { base, instrs, data, access, entry };
    if cfg.strip_in_cache {
        strip_in_cache(&mut p);
    }
    p
}

/// Points some `tsx-start` fallbacks at `in-cache` instructions, the shape
/// of a probe that runs after an aborted transaction.
fn aim_fallbacks(cfg: &GenConfig, rng: &mut impl Rng, base: Word, instrs: &mut [Instr]) {
    let probes: Vec<usize> = (0..instrs.len()).filter(|&i| instrs[i].is_in_cache()).collect();
    for (i, x) in instrs.iter_mut().enumerate() {
        if !matches!(x, Instr::TsxStart { .. }) || !rng.random_bool(0.5) {
            continue;
        }
        let ok: Vec<usize> = probes.iter().copied().filter(|&j| !cfg.terminating || j > i).collect();
        if !ok.is_empty() {
            let j = ok[rng.random_range(0..ok.len())];
            *x = Instr::TsxStart { c: base.wrapping_add(j as Word) };
        }
    }
}

/// Replaces every `in-cache` by `noop`.
pub fn strip_in_cache(p: &mut Program) {
    for i in &mut p.instrs {
        if i.is_in_cache() {
            *i = Instr::Noop;
        }
    }
}

/// An arbitrary MA state with an empty pipeline over `p`: registers,
/// transaction record, cache, cycle counter and ROB origin are random.
/// Cache lines are accessible and hold the memory's values.
pub fn gen_ma_state(cfg: &GenConfig, p: &Program, rng: &mut impl Rng) -> MaState {
    let mut s = emit_ma(p, Arc::new(cfg.params.clone()));
    let regs = s.arch.reg_count();
    for r in s.arch.rf.iter_mut().take(cfg.reg_count.min(regs)) {
        if rng.random_bool(0.6) {
            *r = if rng.random_bool(0.5) { small(rng) } else { addr_value(cfg, rng) };
        }
    }
    if rng.random_bool(0.2) {
        // half the time the transaction has just started
        let fallback_rf = if rng.random_bool(0.5) { s.arch.rf.clone() } else { (0..regs).map(|_| small(rng)).collect() };
        let probes: Vec<usize> = (0..p.instrs.len()).filter(|&i| p.instrs[i].is_in_cache()).collect();
        let at = if !probes.is_empty() && rng.random_bool(0.5) {
            probes[rng.random_range(0..probes.len())]
        } else {
            rng.random_range(0..=p.instrs.len())
        };
        let fallback_pc = p.base.wrapping_add(at as Word);
        s.arch.tsx = TsxState { active: true, fallback_rf, fallback_pc };
    }
    let dmem = p.dmem();
    let ga = p.access_predicate();
    for _ in 0..rng.random_range(0..6) {
        let a = rng.random_range(0..cfg.addr_span.max(1));
        if ga.contains(a) {
            s.arch.cache.insert(a, dmem.get(&a).copied().unwrap_or(0));
        }
    }
    s.cyc = rng.random_range(0..1000);
    s.rob_next = RobTag(rng.random_range(0..cfg.params.rob_tag_count()));
    s
}

/// The entangled pair reached from `seed` by invalidating it and taking
/// `k` history-machine steps.
pub fn entangle(seed: &MaState, k: u32) -> (MaState, History) {
    let h0 = init_h(seed);
    let mut s = invl(seed, &h0);
    let mut h = h0;
    for _ in 0..k {
        let (t, h2) = mah_step(&s, &h);
        s = t;
        h = h2;
    }
    (s, h)
}

/// A generated seed state and forward step count.
#[derive(Clone, Debug)]
pub struct Sample {
    pub seed: MaState,
    pub forward: u32,
}

pub fn gen_sample(cfg: &GenConfig, rng: &mut impl Rng) -> Sample {
    let p = gen_program(cfg, rng);
    let seed = gen_ma_state(cfg, &p, rng);
    let forward = rng.random_range(0..=cfg.max_forward_steps);
    Sample { seed, forward }
}

/// An entangled state and its history. Entanglement holds by
/// construction and is asserted.
pub fn gen_entangled(cfg: &GenConfig, rng: &mut impl Rng) -> (MaState, History) {
    let sample = gen_sample(cfg, rng);
    let (s, h) = entangle(&sample.seed, sample.forward);
    assert!(is_entangled(&s, &h), "generated state is not entangled");
    (s, h)
}
