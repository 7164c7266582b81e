//! Architectural state.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::instr::Instr;
use crate::Word;

/// Partial map from addresses. An unmapped address is distinct from one
/// mapped to zero; reads that need a default use [`read_word`].
pub type PartialMem<T = Word> = BTreeMap<Word, T>;

/// Instruction memory.
pub type Imem = PartialMem<Instr>;

/// Reads `mem(a)`, defaulting to 0 for unmapped addresses.
pub fn read_word(mem: &PartialMem, a: Word) -> Word {
    mem.get(&a).copied().unwrap_or(0)
}

/// Returns `imem(a)`, or `noop` when `a` is unmapped.
pub fn fetch_instr(imem: &Imem, a: Word) -> Instr {
    imem.get(&a).copied().unwrap_or(Instr::Noop)
}

/// Accessibility predicate `ga`: a sorted list of disjoint inclusive ranges.
/// Everything outside the ranges is kernel memory.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct AccessPredicate {
    ranges: Vec<(Word, Word)>,
}

impl AccessPredicate {
    /// Builds the predicate from arbitrary inclusive ranges, normalising
    /// them into sorted, disjoint, non-adjacent form.
    pub fn from_ranges<I: IntoIterator<Item = (Word, Word)>>(ranges: I) -> Self {
        let mut rs: Vec<(Word, Word)> = ranges
            .into_iter()
            .map(|(a, b)| if a <= b { (a, b) } else { (b, a) })
            .collect();
        rs.sort_unstable();
        let mut merged: Vec<(Word, Word)> = Vec::with_capacity(rs.len());
        for (lo, hi) in rs {
            match merged.last_mut() {
                Some(last) if lo <= last.1.saturating_add(1) => last.1 = last.1.max(hi),
                _ => merged.push((lo, hi)),
            }
        }
        AccessPredicate { ranges: merged }
    }

    /// Every address accessible.
    pub fn all() -> Self {
        AccessPredicate { ranges: vec![(0, Word::MAX)] }
    }

    /// No address accessible.
    pub fn none() -> Self {
        AccessPredicate { ranges: vec![] }
    }

    pub fn ranges(&self) -> &[(Word, Word)] {
        &self.ranges
    }

    pub fn contains(&self, a: Word) -> bool {
        let i = self.ranges.partition_point(|&(lo, _)| lo <= a);
        i > 0 && a <= self.ranges[i - 1].1
    }
}

/// TSX bookkeeping: whether a region is active, plus the register file and
/// fallback address saved by `tsx-start`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TsxState {
    pub active: bool,
    pub fallback_rf: Vec<Word>,
    pub fallback_pc: Word,
}

impl TsxState {
    pub fn inactive(reg_count: usize) -> Self {
        TsxState { active: false, fallback_rf: vec![0; reg_count], fallback_pc: 0 }
    }
}

/// An ISA-IC state. `imem`, `dmem` and `ga` are never modified by any
/// transition, so they are shared.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IsaState {
    pub pc: Word,
    pub rf: Vec<Word>,
    pub tsx: TsxState,
    pub halt: bool,
    pub imem: Arc<Imem>,
    pub dmem: Arc<PartialMem>,
    pub ga: Arc<AccessPredicate>,
    pub cache: PartialMem,
}

impl IsaState {
    /// Initial state: zeroed registers, inactive TSX, empty cache.
    pub fn new(
        pc: Word,
        reg_count: usize,
        imem: Arc<Imem>,
        dmem: Arc<PartialMem>,
        ga: Arc<AccessPredicate>,
    ) -> Self {
        IsaState {
            pc,
            rf: vec![0; reg_count],
            tsx: TsxState::inactive(reg_count),
            halt: false,
            imem,
            dmem,
            ga,
            cache: PartialMem::new(),
        }
    }

    pub fn reg_count(&self) -> usize {
        self.rf.len()
    }

    /// True when `(a, d)` may legally sit in the cache.
    pub fn cache_entry_valid(&self, a: Word, d: Word) -> bool {
        self.ga.contains(a) && d == read_word(&self.dmem, a)
    }

    /// Checks the cache invariant: only accessible, value-correct lines.
    pub fn cache_sound(&self) -> bool {
        self.cache.iter().all(|(&a, &d)| self.cache_entry_valid(a, d))
    }

    /// Structural well-formedness: register file sizes agree and every
    /// instruction names valid registers.
    pub fn well_formed(&self) -> bool {
        let n = self.rf.len();
        n > 0
            && self.tsx.fallback_rf.len() == n
            && self.imem.values().all(|i| i.regs_valid(n))
            && self.cache_sound()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges_normalise() {
        let ga = AccessPredicate::from_ranges([(10, 20), (0, 3), (4, 5), (19, 25)]);
        assert_eq!(ga.ranges(), &[(0, 5), (10, 25)]);
        assert!(ga.contains(0) && ga.contains(5) && ga.contains(25));
        assert!(!ga.contains(6) && !ga.contains(26));
        assert!(AccessPredicate::all().contains(Word::MAX));
        assert!(!AccessPredicate::none().contains(0));
    }
}
