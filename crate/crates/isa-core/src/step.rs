//! Transition rules of the ISA: the deterministic sub-system, the
//! nondeterministic cache sub-system, and the action-labelled variant.

use std::collections::BTreeSet;

use crate::instr::Instr;
use crate::state::{fetch_instr, read_word, IsaState, PartialMem};
use crate::Word;

/// `1` if `a = b`, `2` if `a > b`, `0` otherwise.
pub fn compare(a: Word, b: Word) -> Word {
    match a.cmp(&b) {
        std::cmp::Ordering::Equal => 1,
        std::cmp::Ordering::Greater => 2,
        std::cmp::Ordering::Less => 0,
    }
}

/// Applies one deterministic step in place.
pub fn det_step_mut(s: &mut IsaState) {
    if s.halt {
        return;
    }
    let rf = |s: &IsaState, r: crate::Reg| s.rf[r.index()];
    let next = s.pc.wrapping_add(1);
    match fetch_instr(&s.imem, s.pc) {
        Instr::Halt => {
            s.halt = true;
            s.pc = next;
        }
        Instr::Noop => s.pc = next,
        Instr::Loadi { rd, c } => {
            s.rf[rd.index()] = c;
            s.pc = next;
        }
        Instr::Addi { rd, r1, c } => {
            s.rf[rd.index()] = rf(s, r1).wrapping_add(c);
            s.pc = next;
        }
        Instr::Add { rd, r1, r2 } => {
            s.rf[rd.index()] = rf(s, r1).wrapping_add(rf(s, r2));
            s.pc = next;
        }
        Instr::Mul { rd, r1, r2 } => {
            s.rf[rd.index()] = rf(s, r1).wrapping_mul(rf(s, r2));
            s.pc = next;
        }
        Instr::And { rd, r1, r2 } => {
            s.rf[rd.index()] = rf(s, r1) & rf(s, r2);
            s.pc = next;
        }
        Instr::Cmp { rd, r1, r2 } => {
            s.rf[rd.index()] = compare(rf(s, r1), rf(s, r2));
            s.pc = next;
        }
        Instr::Jg { r1, c } => {
            s.pc = if rf(s, r1) == 2 { s.pc.wrapping_add(c) } else { next };
        }
        Instr::Jge { r1, c } => {
            s.pc = if matches!(rf(s, r1), 1 | 2) { s.pc.wrapping_add(c) } else { next };
        }
        Instr::Ldri { rd, r1, c } => {
            let a = rf(s, r1).wrapping_add(c);
            load(s, rd, a);
        }
        Instr::Ldr { rd, r1, r2 } => {
            let a = rf(s, r1).wrapping_add(rf(s, r2));
            load(s, rd, a);
        }
        Instr::TsxStart { c } => {
            s.tsx.active = true;
            s.tsx.fallback_rf.clone_from(&s.rf);
            s.tsx.fallback_pc = c;
            s.pc = next;
        }
        Instr::TsxEnd => {
            s.tsx.active = false;
            s.pc = next;
        }
        Instr::InCache { rd, r1, r2 } => {
            let a = rf(s, r1).wrapping_add(rf(s, r2));
            let hit = s.ga.contains(a) && s.cache.contains_key(&a);
            s.rf[rd.index()] = hit as Word;
            s.pc = next;
        }
    }
}

fn load(s: &mut IsaState, rd: crate::Reg, a: Word) {
    if s.ga.contains(a) {
        let v = read_word(&s.dmem, a);
        s.rf[rd.index()] = v;
        s.cache.insert(a, v);
        s.pc = s.pc.wrapping_add(1);
    } else if s.tsx.active {
        s.rf.clone_from(&s.tsx.fallback_rf);
        s.pc = s.tsx.fallback_pc;
        s.tsx.active = false;
    } else {
        s.halt = true;
    }
}

/// The deterministic sub-system: returns the unique successor of `s`.
pub fn isa_det_step(s: &IsaState) -> IsaState {
    let mut t = s.clone();
    det_step_mut(&mut t);
    t
}

/// A nondeterministic cache choice: lines to add, then lines to remove.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CacheChoice {
    pub add: BTreeSet<(Word, Word)>,
    pub rem: BTreeSet<(Word, Word)>,
}

impl CacheChoice {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn is_empty(&self) -> bool {
        self.add.is_empty() && self.rem.is_empty()
    }

    /// The minimal choice turning `cache` into `target`: add what is
    /// missing or stale, remove what is extra.
    pub fn towards(cache: &PartialMem, target: &PartialMem) -> Self {
        let add = target
            .iter()
            .filter(|(a, d)| cache.get(a) != Some(d))
            .map(|(&a, &d)| (a, d))
            .collect();
        let rem = cache
            .iter()
            .filter(|(a, _)| !target.contains_key(a))
            .map(|(&a, &d)| (a, d))
            .collect();
        CacheChoice { add, rem }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum IsaError {
    #[error("cache choice names inaccessible address {0:#x}")]
    InaccessibleChoice(Word),
    #[error("cache choice pairs address {addr:#x} with {found:#x}, memory holds {expected:#x}")]
    WrongDatum { addr: Word, found: Word, expected: Word },
    #[error("instruction memory contains in-cache at {0:#x}")]
    InCachePresent(Word),
}

/// The cache sub-system: `cache' = (cache ∪ add) \ rem`.
pub fn isa_cache_step(s: &IsaState, choice: &CacheChoice) -> Result<IsaState, IsaError> {
    let mut t = s.clone();
    cache_step_mut(&mut t, choice)?;
    Ok(t)
}

pub fn cache_step_mut(s: &mut IsaState, choice: &CacheChoice) -> Result<(), IsaError> {
    for &(a, d) in choice.add.iter().chain(&choice.rem) {
        if !s.ga.contains(a) {
            return Err(IsaError::InaccessibleChoice(a));
        }
        let expected = read_word(&s.dmem, a);
        if d != expected {
            return Err(IsaError::WrongDatum { addr: a, found: d, expected });
        }
    }
    for &(a, d) in &choice.add {
        s.cache.insert(a, d);
    }
    for (a, _) in &choice.rem {
        s.cache.remove(a);
    }
    Ok(())
}

/// One full ISA-IC step: cache choice, deterministic step, cache choice.
pub fn isa_step(s: &IsaState, pre: &CacheChoice, post: &CacheChoice) -> Result<IsaState, IsaError> {
    let mut t = s.clone();
    cache_step_mut(&mut t, pre)?;
    det_step_mut(&mut t);
    cache_step_mut(&mut t, post)?;
    Ok(t)
}

/// An authorised cache action.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CacheAction {
    Prefetch(Word),
    Cache(Word),
}

impl CacheAction {
    pub fn addr(self) -> Word {
        match self {
            CacheAction::Prefetch(a) | CacheAction::Cache(a) => a,
        }
    }
}

impl std::fmt::Display for CacheAction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CacheAction::Prefetch(a) => write!(f, "prefetch {a:#x}"),
            CacheAction::Cache(a) => write!(f, "cache {a:#x}"),
        }
    }
}

/// A sequence of authorised actions labelling one transition.
pub type AuthAction = Vec<CacheAction>;

/// Folds the actions over `cache`, inserting `(x, dmem(x))` for every
/// accessible `x`; actions on inaccessible addresses are ignored.
pub fn apply_prefetches(
    actions: &[CacheAction],
    dmem: &PartialMem,
    ga: &crate::AccessPredicate,
    cache: &PartialMem,
) -> PartialMem {
    let mut out = cache.clone();
    for act in actions {
        let a = act.addr();
        if ga.contains(a) {
            out.insert(a, read_word(dmem, a));
        }
    }
    out
}

/// One ISA-IC-A step: deterministic step, then the given actions.
/// Programs for this machine may not contain `in-cache`.
pub fn isa_a_step(s: &IsaState, actions: &[CacheAction]) -> Result<IsaState, IsaError> {
    if let Some((&a, _)) = s.imem.iter().find(|(_, i)| i.is_in_cache()) {
        return Err(IsaError::InCachePresent(a));
    }
    let mut t = isa_det_step(s);
    t.cache = apply_prefetches(actions, &t.dmem, &t.ga, &t.cache);
    Ok(t)
}
