//! The registered properties: how each one samples a case and checks it.

use std::fmt;

use rand::Rng;
use serde::Serialize;
use tea_isa::{det_step_mut, AccessPredicate, Instr, IsaState, Reg, Word};
use tea_ma::{ma_step, ma_step_events, MaState};
use tea_refine::{
    check_closure, check_in_cache_constraint, check_init_entangled, check_ma_subset, check_projection,
    check_trajectory, commit_count, r_ic, stutter_wit, MapKind, Obligation, TrajectoryConfig, Violation,
};
use tea_variants::{invl, mah_step, steps_to_take, step_using_h};

use crate::case::Case;
use crate::config::GenConfig;
use crate::gen::{gen_program, gen_sample, gen_ma_state};

/// A checkable property over generated cases.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Property {
    /// The deterministic step equals the maximal-choice step.
    MaSubsetMan,
    /// The history machine's MA component steps like the MA.
    MahProjection,
    /// Every emitted initial state is entangled with its initial history.
    InitEntangled,
    /// History-machine steps keep states entangled.
    Closure,
    /// Invalidate-and-replay reproduces every state along a run.
    Replay,
    /// On programs that never touch inaccessible memory or the cache, the
    /// MA halts in the same architectural state as the ISA.
    ArchOracle,
    /// The stutter witness decreases on every non-retiring step.
    StutterWit,
    /// Witness-skipping refinement under the in-cache commitment map.
    Refinement,
    /// Every cache change is authorised by the configured action spec.
    CacheAction,
    /// The ISA's `in-cache` answers 0 on inaccessible addresses.
    InCacheInaccessible,
}

impl Property {
    pub const ALL: [Property; 10] = [
        Property::MaSubsetMan,
        Property::MahProjection,
        Property::InitEntangled,
        Property::Closure,
        Property::Replay,
        Property::ArchOracle,
        Property::StutterWit,
        Property::Refinement,
        Property::CacheAction,
        Property::InCacheInaccessible,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Property::MaSubsetMan => "ma-subset-man",
            Property::MahProjection => "mah-projection",
            Property::InitEntangled => "init-entangled",
            Property::Closure => "closure",
            Property::Replay => "replay",
            Property::ArchOracle => "arch-oracle",
            Property::StutterWit => "stutter-wit",
            Property::Refinement => "refinement",
            Property::CacheAction => "cache-action",
            Property::InCacheInaccessible => "in-cache-inaccessible",
        }
    }

    pub fn from_name(s: &str) -> Option<Property> {
        Property::ALL.into_iter().find(|p| p.name() == s)
    }

    /// Samples one case for this property.
    pub fn gen_case(self, cfg: &GenConfig, rng: &mut impl Rng) -> Case {
        match self {
            Property::InitEntangled => {
                let s = gen_sample(cfg, rng);
                Case { seed: s.seed, forward: 0, horizon: 0 }
            }
            Property::ArchOracle => {
                let mut oracle = GenConfig { terminating: true, kernel_bias: false, ..cfg.clone() };
                oracle.mix.in_cache = 0;
                let mut p = gen_program(&oracle, rng);
                p.access = vec![(0, Word::MAX)];
                let seed = gen_ma_state(&oracle, &p, rng);
                Case { seed, forward: 0, horizon: ORACLE_BUDGET }
            }
            Property::InCacheInaccessible => Case { seed: in_cache_probe(cfg, rng), forward: 0, horizon: 1 },
            _ => {
                let s = gen_sample(cfg, rng);
                Case { seed: s.seed, forward: s.forward, horizon: cfg.horizon }
            }
        }
    }

    /// Checks `case`. Deterministic, so shrinking can re-run it.
    pub fn check(self, case: &Case, cfg: &GenConfig) -> Result<Counts, Violation> {
        let mut counts = Counts::default();
        match self {
            Property::MaSubsetMan | Property::MahProjection | Property::Closure => {
                let (mut s, mut h) = case.start();
                for i in 0..=case.horizon {
                    let r = match self {
                        Property::MaSubsetMan => check_ma_subset(&s),
                        Property::MahProjection => check_projection(&s, &h),
                        _ => check_closure(&s, &h),
                    };
                    r.map_err(|v| Violation { step: i, ..v })?;
                    counts.states += 1;
                    if s.halted() || i == case.horizon {
                        break;
                    }
                    (s, h) = mah_step(&s, &h);
                }
            }
            Property::InitEntangled => {
                check_init_entangled(&case.seed)?;
                counts.states += 1;
            }
            Property::Replay => {
                let h0 = tea_variants::init_h(&case.seed);
                let mut s = invl(&case.seed, &h0);
                let mut h = h0;
                for i in 0..=case.forward as usize {
                    let mut r = invl(&s, &h);
                    for _ in 0..steps_to_take(&s, &h) {
                        r = step_using_h(&r, &h)
                            .map_err(|e| fail(Obligation::Closure, i, &s, format!("replay step rejected: {e}")))?
                            .0;
                    }
                    if r != s {
                        return Err(fail(Obligation::Closure, i, &s, "replay did not reproduce the state"));
                    }
                    counts.states += 1;
                    if i < case.forward as usize {
                        (s, h) = mah_step(&s, &h);
                    }
                }
            }
            Property::ArchOracle => arch_oracle(case, &mut counts)?,
            Property::StutterWit => {
                let (mut s, _) = case.start();
                let cap = s.params.replay_bound();
                let wit = |x: &MaState, i| {
                    stutter_wit(x, cap).map_err(|e| fail(Obligation::WskStep, i, x, format!("liveness: {e}")))
                };
                let mut ws = wit(&s, 0)?;
                for i in 0..case.horizon {
                    if s.halted() {
                        break;
                    }
                    let (u, ev) = ma_step_events(&s);
                    let wu = wit(&u, i + 1)?;
                    if commit_count(&s, &ev) == 0 {
                        if wu >= ws {
                            return Err(fail(
                                Obligation::WskStep,
                                i,
                                &s,
                                format!("stutter witness went from {ws} to {wu} on a non-retiring step"),
                            ));
                        }
                        counts.stutter_transitions += 1;
                    } else {
                        counts.commit_transitions += 1;
                    }
                    counts.states += 1;
                    s = u;
                    ws = wu;
                }
            }
            Property::Refinement | Property::CacheAction => {
                let (s, h) = case.start();
                let tc = if self == Property::Refinement {
                    TrajectoryConfig { horizon: case.horizon, map: Some(MapKind::Ic), auth: None, entanglement: false }
                } else {
                    TrajectoryConfig { horizon: case.horizon, map: None, auth: Some(cfg.auth), entanglement: false }
                };
                let st = check_trajectory(&s, &h, &tc)?;
                counts.states += st.steps as u64;
                counts.stutter_transitions += st.stutter_steps as u64;
                counts.commit_transitions += st.commit_steps as u64;
                counts.in_cache_checked += st.in_cache_checked as u64;
                counts.isa_steps += st.isa_steps as u64;
            }
            Property::InCacheInaccessible => {
                check_in_cache_constraint(&case.seed.arch)
                    .map_err(|d| fail(Obligation::InCacheInaccessible, 0, &case.seed, d))?;
                counts.in_cache_checked += 1;
                counts.states += 1;
            }
        }
        Ok(counts)
    }
}

impl fmt::Display for Property {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Cycle budget for one oracle run.
const ORACLE_BUDGET: usize = 20_000;

fn fail(obligation: Obligation, step: usize, s: &MaState, detail: impl Into<String>) -> Violation {
    Violation { obligation, step, cyc: s.cyc, tea: false, detail: detail.into() }
}

fn arch_oracle(case: &Case, counts: &mut Counts) -> Result<(), Violation> {
    let start = invl(&case.seed, &tea_variants::init_h(&case.seed));
    let mut isa: IsaState = r_ic(&start);
    let mut ma = start;
    for _ in 0..case.horizon {
        if ma.halted() {
            break;
        }
        ma = ma_step(&ma);
        counts.states += 1;
    }
    for _ in 0..case.horizon {
        if isa.halt {
            break;
        }
        det_step_mut(&mut isa);
        counts.isa_steps += 1;
    }
    if !ma.halted() || !isa.halt {
        return Err(fail(Obligation::WskStep, case.horizon, &ma, "a terminating program did not halt"));
    }
    let w = r_ic(&ma);
    if (w.pc, &w.rf, w.halt, w.tsx.active) != (isa.pc, &isa.rf, isa.halt, isa.tsx.active) {
        return Err(fail(
            Obligation::WskStep,
            counts.states as usize,
            &ma,
            format!("final states differ: MA pc {:#x} rf {:x?}, ISA pc {:#x} rf {:x?}", w.pc, w.rf, isa.pc, isa.rf),
        ));
    }
    Ok(())
}

/// An ISA state about to execute `in-cache` on an inaccessible address.
/// The cache sometimes holds that very line, which no sound ISA cache can.
fn in_cache_probe(cfg: &GenConfig, rng: &mut impl Rng) -> MaState {
    let mut p = gen_program(cfg, rng);
    if p.instrs.is_empty() {
        p.instrs.push(Instr::Noop);
    }
    let n = cfg.reg_count.clamp(1, tea_isa::DEFAULT_REG_COUNT) as u8;
    let (rd, r1, r2) = (Reg(rng.random_range(0..n)), Reg(rng.random_range(0..n)), Reg(rng.random_range(0..n)));
    let at = rng.random_range(0..p.instrs.len());
    p.instrs[at] = Instr::InCache { rd, r1, r2 };
    p.entry = p.base.wrapping_add(at as Word);
    if rng.random_bool(0.25) {
        p.access = vec![];
    }
    let mut s = gen_ma_state(cfg, &p, rng);
    let ga: AccessPredicate = p.access_predicate();
    let a = loop {
        let a = if rng.random_bool(0.5) { cfg.boundary().wrapping_add(rng.random_range(0..16)) } else { rng.random() };
        // r1 + r1 can only reach even addresses
        if !ga.contains(a) && (r1 != r2 || a % 2 == 0) {
            break a;
        }
    };
    if r1 == r2 {
        s.arch.rf[r1.index()] = a / 2;
    } else {
        let x = rng.random_range(0..=a);
        s.arch.rf[r1.index()] = x;
        s.arch.rf[r2.index()] = a - x;
    }
    if rng.random_bool(0.5) {
        s.arch.cache.insert(a, tea_isa::read_word(&s.arch.dmem, a));
    }
    s
}

/// What a successful check covered.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Counts {
    /// MA states visited by the check.
    pub states: u64,
    /// Non-retiring transitions checked.
    pub stutter_transitions: u64,
    /// Retiring transitions matched by an ISA run.
    pub commit_transitions: u64,
    /// `in-cache` answers compared or constrained.
    pub in_cache_checked: u64,
    pub isa_steps: u64,
}

impl Counts {
    pub fn add(&mut self, o: &Counts) {
        self.states += o.states;
        self.stutter_transitions += o.stutter_transitions;
        self.commit_transitions += o.commit_transitions;
        self.in_cache_checked += o.in_cache_checked;
        self.isa_steps += o.isa_steps;
    }
}
