//! Greedy counterexample shrinking.
//!
//! Candidates are tried in a fixed order and the first one that still
//! fails the same way is taken, until no candidate applies. Failing "the
//! same way" means violating the same obligation with the same leak
//! classification.

use std::sync::Arc;

use tea_isa::{Imem, Instr, Word};
use tea_refine::Violation;

use crate::case::Case;
use crate::config::GenConfig;
use crate::property::Property;

/// Upper bound on accepted shrink steps, so shrinking always terminates
/// quickly even on large cases.
const MAX_ROUNDS: usize = 500;

/// A shrunk counterexample and the violation it still exhibits.
#[derive(Clone, Debug)]
pub struct Shrunk {
    pub case: Case,
    pub violation: Violation,
    /// Accepted shrink steps.
    pub steps: usize,
}

fn same_failure(a: &Violation, b: &Violation) -> bool {
    a.obligation == b.obligation && a.tea == b.tea
}

/// Shrinks `case`, which must fail `prop` with `v`.
pub fn shrink(prop: Property, cfg: &GenConfig, case: &Case, v: &Violation) -> Shrunk {
    let fails = |c: &Case| prop.check(c, cfg).err().filter(|w| same_failure(w, v));
    // For these properties the horizon only needs to reach the failing
    // step; for the others it is a budget and stays put.
    let tighten = matches!(
        prop,
        Property::Refinement
            | Property::CacheAction
            | Property::StutterWit
            | Property::MaSubsetMan
            | Property::MahProjection
            | Property::Closure
    );
    let settle = |c: Case, w: Violation| -> (Case, Violation) {
        if tighten && c.horizon > w.step + 1 {
            let t = Case { horizon: w.step + 1, ..c.clone() };
            if let Some(w2) = fails(&t) {
                return (t, w2);
            }
        }
        (c, w)
    };

    let (mut best, mut best_v) = settle(case.clone(), v.clone());
    let mut steps = 0;
    'outer: while steps < MAX_ROUNDS {
        for cand in candidates(&best) {
            if let Some(w) = fails(&cand) {
                (best, best_v) = settle(cand, w);
                steps += 1;
                continue 'outer;
            }
        }
        break;
    }
    Shrunk { case: best, violation: best_v, steps }
}

/// Smaller variants of `c`, most aggressive first.
fn candidates(c: &Case) -> Vec<Case> {
    let mut out = Vec::new();
    let with_seed = |f: &dyn Fn(&mut tea_ma::MaState)| {
        let mut d = c.clone();
        f(&mut d.seed);
        d
    };

    if c.forward > 0 {
        out.push(Case { forward: 0, ..c.clone() });
        if c.forward > 1 {
            out.push(Case { forward: c.forward / 2, ..c.clone() });
        }
        out.push(Case { forward: c.forward - 1, ..c.clone() });
    }

    let addrs: Vec<Word> = c.seed.arch.imem.keys().copied().collect();
    // deleting from the back first keeps earlier addresses stable
    for &a in addrs.iter().rev() {
        out.push(with_seed(&|s| delete_instr(s, a)));
    }
    for &a in &addrs {
        if c.seed.arch.imem[&a] != Instr::Noop {
            out.push(with_seed(&|s| set_instr(s, a, Instr::Noop)));
        }
    }
    for &a in &addrs {
        for smaller in smaller_instrs(c.seed.arch.imem[&a]) {
            out.push(with_seed(&|s| set_instr(s, a, smaller)));
        }
    }

    for &a in c.seed.arch.dmem.keys() {
        out.push(with_seed(&|s| {
            let mut d = (*s.arch.dmem).clone();
            d.remove(&a);
            s.arch.dmem = Arc::new(d);
            s.arch.cache.retain(|&k, v| k != a || *v == 0);
        }));
    }
    for &a in c.seed.arch.cache.keys() {
        out.push(with_seed(&|s| {
            s.arch.cache.remove(&a);
        }));
    }
    for (i, &v) in c.seed.arch.rf.iter().enumerate() {
        if v != 0 {
            out.push(with_seed(&|s| s.arch.rf[i] = 0));
            if v > 1 {
                out.push(with_seed(&|s| s.arch.rf[i] = v / 2));
            }
        }
    }
    if c.seed.arch.tsx.active {
        out.push(with_seed(&|s| s.arch.tsx = tea_isa::TsxState::inactive(s.arch.reg_count())));
    }
    if c.seed.cyc != 0 {
        out.push(with_seed(&|s| s.cyc = 0));
    }
    out
}

/// Immediate-shrunk variants of `i`. Jump offsets and fallback addresses
/// are control flow, not magnitudes, and are left alone.
fn smaller_instrs(i: Instr) -> Vec<Instr> {
    let shrink = |c: Word| -> Vec<Word> {
        match c {
            0 => vec![],
            1 => vec![0],
            _ => vec![0, c / 2, c - 1],
        }
    };
    match i {
        Instr::Loadi { rd, c } => shrink(c).into_iter().map(|c| Instr::Loadi { rd, c }).collect(),
        Instr::Addi { rd, r1, c } => shrink(c).into_iter().map(|c| Instr::Addi { rd, r1, c }).collect(),
        Instr::Ldri { rd, r1, c } => shrink(c).into_iter().map(|c| Instr::Ldri { rd, r1, c }).collect(),
        _ => vec![],
    }
}

fn set_instr(s: &mut tea_ma::MaState, a: Word, i: Instr) {
    let mut m = (*s.arch.imem).clone();
    m.insert(a, i);
    s.arch.imem = Arc::new(m);
}

/// Removes the instruction at `a` and closes the gap, moving every later
/// instruction down by one and retargeting jumps, fallback addresses and
/// the pc so control flow still reaches the same instructions.
pub fn delete_instr(s: &mut tea_ma::MaState, a: Word) {
    let f = |x: Word| if x > a { x - 1 } else { x };
    let mut m = Imem::new();
    for (&p, &i) in s.arch.imem.iter() {
        if p == a {
            continue;
        }
        let i = match i {
            Instr::Jg { r1, c } => Instr::Jg { r1, c: f(p.wrapping_add(c)).wrapping_sub(f(p)) },
            Instr::Jge { r1, c } => Instr::Jge { r1, c: f(p.wrapping_add(c)).wrapping_sub(f(p)) },
            Instr::TsxStart { c } => Instr::TsxStart { c: f(c) },
            other => other,
        };
        m.insert(f(p), i);
    }
    s.arch.imem = Arc::new(m);
    s.arch.pc = f(s.arch.pc);
    s.fetch_pc = f(s.fetch_pc);
    s.arch.tsx.fallback_pc = f(s.arch.tsx.fallback_pc);
}
