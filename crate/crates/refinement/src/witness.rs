//! Witness functions: how many ISA steps an MA step stands for, how long
//! the MA may stutter, and the ISA run that matches a committing step.

use tea_isa::{cache_step_mut, det_step_mut, fetch_instr, CacheChoice, Instr, IsaError, IsaState, PartialMem, Word};
use tea_ma::{ma_step_events, MaState, RobLine, RobTag, StepEvents};
use tea_variants::{History, Status};
use thiserror::Error;

use crate::maps::MapKind;

/// Committed ROB lines grouped into ISA instructions. An access check that
/// commits together with its load belongs to the load; a check committing
/// alone counts only when it raises the exception.
pub fn committed_instructions<'a>(s: &MaState, committed: &'a [RobLine]) -> Vec<&'a RobLine> {
    committed
        .iter()
        .filter(|l| {
            if !l.mop.is_check() {
                return true;
            }
            let load = s.params.next_rob(l.id);
            l.excep && !committed.iter().any(|m| m.id == load)
        })
        .collect()
}

/// Number of ISA instructions retired by the step described by `ev`.
pub fn commit_count(s: &MaState, ev: &StepEvents) -> usize {
    committed_instructions(s, &ev.committed).len()
}

/// ISA steps matching the MA step `s → u`. Non-committing steps map to one
/// step so the value stays positive; such steps are matched by stuttering.
pub fn skip_wit(s: &MaState, ev: &StepEvents) -> usize {
    commit_count(s, ev).max(1)
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("no instruction retired within {0} cycles")]
pub struct NoProgress(pub u32);

/// Steps the MA takes from `s` before a step that retires an instruction.
/// Halted states and states about to retire give 0.
pub fn stutter_wit(s: &MaState, cap: u32) -> Result<u32, NoProgress> {
    let mut cur = s.clone();
    for n in 0..=cap {
        if cur.halted() {
            return Ok(n);
        }
        let (next, ev) = ma_step_events(&cur);
        if commit_count(&cur, &ev) > 0 {
            return Ok(n);
        }
        cur = next;
    }
    Err(NoProgress(cap))
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum RunError {
    #[error("no conforming cache choice for instruction {index} at {pc:#x}: {source}")]
    Choice { index: usize, pc: Word, source: IsaError },
}

/// One ISA instruction executed by a run, with what each machine produced.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunStep {
    pub pc: Word,
    pub instr: Instr,
    /// The MA's committed result for this instruction, when it has one.
    pub ma_val: Word,
    /// The destination register after the ISA step, when the instruction
    /// writes one.
    pub isa_val: Option<Word>,
}

impl RunStep {
    /// An `in-cache` whose answer differs between the two machines.
    pub fn in_cache_mismatch(&self) -> bool {
        self.instr.is_in_cache() && self.isa_val != Some(self.ma_val)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Run {
    pub state: IsaState,
    pub steps: Vec<RunStep>,
}

fn accessible(w: &IsaState, c: &PartialMem) -> PartialMem {
    c.iter().filter(|(a, _)| w.ga.contains(**a)).map(|(a, v)| (*a, *v)).collect()
}

fn last_wrb(h: &History, tag: RobTag) -> Option<&PartialMem> {
    let line = h.lines.iter().find(|l| l.id == tag)?;
    line.statuses.iter().rev().find_map(|st| match st {
        Status::WrB(c) => Some(c),
        _ => None,
    })
}

fn dest(i: &Instr) -> Option<tea_isa::Reg> {
    match *i {
        Instr::Loadi { rd, .. }
        | Instr::Addi { rd, .. }
        | Instr::Add { rd, .. }
        | Instr::Mul { rd, .. }
        | Instr::And { rd, .. }
        | Instr::Cmp { rd, .. }
        | Instr::Ldri { rd, .. }
        | Instr::Ldr { rd, .. }
        | Instr::InCache { rd, .. } => Some(rd),
        _ => None,
    }
}

/// Steps `w` once per instruction retired by `s → u` (once if none),
/// resolving the ISA's cache choices from the MA. With `MapKind::Ic` the
/// cache before each instruction is set to what the MA saw when that
/// instruction wrote back; with `MapKind::A` only the cache after the
/// last instruction is chosen.
pub fn run_with(
    kind: MapKind,
    w: &IsaState,
    s: &MaState,
    h: &History,
    ev: &StepEvents,
    u: &MaState,
) -> Result<Run, RunError> {
    let instrs = committed_instructions(s, &ev.committed);
    let count = instrs.len().max(1);
    let mut cur = w.clone();
    let mut steps = Vec::with_capacity(count);
    for i in 0..count {
        let line = instrs.get(i);
        let pre = match (kind, line) {
            (MapKind::Ic, Some(l)) => match last_wrb(h, l.id) {
                Some(c) => CacheChoice::towards(&cur.cache, &accessible(&cur, c)),
                None => CacheChoice::empty(),
            },
            _ => CacheChoice::empty(),
        };
        let pc = cur.pc;
        let instr = fetch_instr(&cur.imem, pc);
        let err = |source| RunError::Choice { index: i, pc, source };
        let mut next = cur.clone();
        cache_step_mut(&mut next, &pre).map_err(err)?;
        det_step_mut(&mut next);
        if i + 1 == count {
            // the post choice is resolved against the cache after execution
            let post = CacheChoice::towards(&next.cache, &accessible(&next, &u.arch.cache));
            cache_step_mut(&mut next, &post).map_err(err)?;
        }
        cur = next;
        steps.push(RunStep {
            pc,
            instr,
            ma_val: line.map_or(0, |l| l.val),
            isa_val: dest(&instr).filter(|_| line.is_some_and(|l| !l.excep)).map(|r| cur.rf[r.index()]),
        });
    }
    Ok(Run { state: cur, steps })
}

pub fn run_ic(w: &IsaState, s: &MaState, h: &History, ev: &StepEvents, u: &MaState) -> Result<Run, RunError> {
    run_with(MapKind::Ic, w, s, h, ev, u)
}

pub fn run_ic_c(w: &IsaState, s: &MaState, h: &History, ev: &StepEvents, u: &MaState) -> Result<Run, RunError> {
    run_with(MapKind::A, w, s, h, ev, u)
}
