//! Refinement maps, labels and the witness relation.

use tea_isa::{IsaState, PartialMem};
use tea_ma::MaState;
use tea_variants::History;

/// Committed architectural state with the cache discarded.
pub fn r_ic(s: &MaState) -> IsaState {
    let mut w = s.arch.clone();
    w.cache = PartialMem::new();
    w
}

/// Committed architectural state including the cache.
pub fn r_a(s: &MaState) -> IsaState {
    s.arch.clone()
}

/// Observable part of an ISA state: everything except the cache.
pub fn label(s: &IsaState) -> IsaState {
    let mut l = s.clone();
    l.cache = PartialMem::new();
    l
}

/// Label equality without cloning either state.
pub fn same_label(a: &IsaState, b: &IsaState) -> bool {
    a.pc == b.pc
        && a.rf == b.rf
        && a.tsx == b.tsx
        && a.halt == b.halt
        && a.imem == b.imem
        && a.dmem == b.dmem
        && a.ga == b.ga
}

/// A state of either machine in the combined transition system.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DisjState {
    Ma(MaState, History),
    Isa(IsaState),
}

/// The witness relation used for the Meltdown obligations: equality
/// within a machine, label agreement through `r_ic` across machines.
pub fn b_ic(x: &DisjState, y: &DisjState) -> bool {
    match (x, y) {
        (DisjState::Ma(..), DisjState::Ma(..)) | (DisjState::Isa(_), DisjState::Isa(_)) => x == y,
        (DisjState::Ma(s, _), DisjState::Isa(w)) | (DisjState::Isa(w), DisjState::Ma(s, _)) => same_label(&s.arch, w),
    }
}

/// The relation used with `r_a`: across machines the caches must agree too.
pub fn b_a(x: &DisjState, y: &DisjState) -> bool {
    match (x, y) {
        (DisjState::Ma(s, _), DisjState::Isa(w)) | (DisjState::Isa(w), DisjState::Ma(s, _)) => {
            same_label(&s.arch, w) && s.arch.cache == w.cache
        }
        _ => x == y,
    }
}

/// Which map and relation a check runs under.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MapKind {
    /// Cache hidden: `r_ic`, `b_ic`, `run_ic`.
    Ic,
    /// Cache visible: `r_a`, `b_a`, `run_ic_c`.
    A,
}

impl MapKind {
    pub fn map(self, s: &MaState) -> IsaState {
        match self {
            MapKind::Ic => r_ic(s),
            MapKind::A => r_a(s),
        }
    }

    /// Cross-machine relation between an MA state and an ISA state.
    pub fn related(self, s: &MaState, w: &IsaState) -> bool {
        match self {
            MapKind::Ic => same_label(&s.arch, w),
            MapKind::A => same_label(&s.arch, w) && s.arch.cache == w.cache,
        }
    }
}
