//! The history-carrying machine and its per-micro-instruction timelines.

use std::collections::{BTreeMap, BTreeSet};

use tea_isa::{PartialMem, Word};
use tea_ma::{ma_step_events, will_commit, MaState, RobTag, RsTag, StepEvents};

/// What a micro-instruction did during one cycle.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Status {
    /// Fetched and issued from `pc`, into station `rsi` when it needs one.
    /// `exec` records that the station also began executing that cycle.
    Fetch { pc: Word, rsi: Option<RsTag>, exec: bool },
    Exec,
    /// Wrote back; holds the cache as it was during that cycle.
    WrB(PartialMem),
    Delay,
    /// An access check that committed ahead of its load.
    PostComm,
}

/// Timeline of one in-flight micro-instruction, one status per live cycle.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StatusLine {
    pub id: RobTag,
    pub pc: Word,
    pub statuses: Vec<Status>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct History {
    /// Last cycle on which the ROB head was ready.
    pub comm_cy: Word,
    /// Issue cycle of the oldest tracked line.
    pub start_cy: Word,
    /// Cache as determined by committed work only.
    pub comm_cache: PartialMem,
    /// Cache lines brought in by each written-back, uncommitted load.
    pub ch_eff: BTreeMap<RobTag, PartialMem>,
    pub lines: Vec<StatusLine>,
}

/// Fresh history for a state with an empty pipeline.
pub fn init_h(s: &MaState) -> History {
    History {
        comm_cy: s.cyc,
        start_cy: s.cyc,
        comm_cache: s.arch.cache.clone(),
        ch_eff: BTreeMap::new(),
        lines: Vec::new(),
    }
}

/// New `start-cy` after removing line `id` from `lines`.
pub fn sc_rem_rb(lines: &[StatusLine], id: RobTag, cy: Word) -> Word {
    match lines {
        [first, ..] if first.id != id => cy,
        [] => cy,
        [_] => 0,
        [first, second, ..] => cy.wrapping_add((first.statuses.len() - second.statuses.len()) as Word),
    }
}

/// One MA-IC-H step.
pub fn mah_step(s: &MaState, h: &History) -> (MaState, History) {
    if s.halted() {
        return (s.clone(), h.clone());
    }
    let (t, ev) = ma_step_events(s);
    let h2 = update_history(s, &t, h, &ev);
    (t, h2)
}

/// History after the step `s → t` described by `ev`.
pub fn update_history(s: &MaState, t: &MaState, h: &History, ev: &StepEvents) -> History {
    let c = s.cyc;
    let comm_cy = if will_commit(s) { c } else { h.comm_cy };
    if ev.invalidated {
        return History {
            comm_cy,
            start_cy: c.wrapping_add(1),
            comm_cache: t.arch.cache.clone(),
            ch_eff: BTreeMap::new(),
            lines: Vec::new(),
        };
    }
    let p = &s.params;

    let mut comm_cache = h.comm_cache.clone();
    let mut ch_eff = h.ch_eff.clone();
    for l in &ev.committed {
        if let Some(eff) = ch_eff.remove(&l.id) {
            if l.mop.memory_op() {
                comm_cache.extend(eff);
            }
        }
    }
    for done in ev.completed.iter().filter(|d| d.mop.memory_op()) {
        ch_eff.insert(done.dst, done.cached.iter().copied().collect());
    }

    // removals in commit order; a check whose load stays in flight is kept
    let committed: BTreeSet<RobTag> = ev.committed.iter().map(|l| l.id).collect();
    let mut removals = Vec::new();
    for l in &ev.committed {
        if l.mop.is_check() {
            if committed.contains(&p.next_rob(l.id)) {
                removals.push(l.id);
            }
        } else if l.mop.memory_op() {
            removals.push(p.prev_rob(l.id));
            removals.push(l.id);
        } else {
            removals.push(l.id);
        }
    }
    let mut lines = h.lines.clone();
    let mut start_cy = h.start_cy;
    for id in removals {
        if let Some(pos) = lines.iter().position(|sl| sl.id == id) {
            start_cy = sc_rem_rb(&lines, id, start_cy);
            lines.remove(pos);
        }
    }

    for sl in lines.iter_mut() {
        let status = if committed.contains(&sl.id) || s.rob_line(sl.id).is_none() {
            Status::PostComm
        } else if ev.completed.iter().any(|d| d.dst == sl.id) {
            Status::WrB(s.arch.cache.clone())
        } else {
            match s.rs.iter().find(|r| r.busy && r.dst == sl.id) {
                Some(r) if r.exec || ev.started.contains(&r.id) => Status::Exec,
                _ => Status::Delay,
            }
        };
        sl.statuses.push(status);
    }

    if lines.is_empty() && !ev.issued.is_empty() {
        start_cy = c;
    }
    for iu in &ev.issued {
        lines.push(StatusLine { id: iu.tag, pc: iu.pc, statuses: vec![Status::Fetch { pc: iu.pc, rsi: iu.rs, exec: iu.started }] });
    }

    debug_assert!(
        lines.first().is_none_or(|l| start_cy == t.cyc.wrapping_sub(l.statuses.len() as Word)),
        "start-cy drifted from the oldest line's issue cycle"
    );
    History { comm_cy, start_cy, comm_cache, ch_eff, lines }
}

/// Steps needed to replay from the invalidated state back to `s`.
pub fn steps_to_take(s: &MaState, h: &History) -> Word {
    if h.lines.is_empty() {
        0
    } else {
        s.cyc.wrapping_sub(h.start_cy)
    }
}

/// Statuses recorded for cycle `cyc`, as `(tag, pc, status)`.
pub fn get_h(h: &History, cyc: Word) -> Vec<(RobTag, Word, &Status)> {
    let Some(first) = h.lines.first() else {
        return Vec::new();
    };
    let base = first.statuses.len();
    h.lines
        .iter()
        .filter_map(|sl| {
            let issue = h.start_cy.wrapping_add((base - sl.statuses.len()) as Word);
            let off = cyc.wrapping_sub(issue) as usize;
            sl.statuses.get(off).map(|st| (sl.id, sl.pc, st))
        })
        .collect()
}
