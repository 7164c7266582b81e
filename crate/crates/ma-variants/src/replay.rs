//! Rebuilding a pipeline state from its history.
//!
//! A state is *entangled* with a history when squashing its pipeline and
//! re-running the recorded resource choices reproduces it exactly.

use std::collections::BTreeSet;

use tea_isa::Word;
use tea_ma::{MaState, RsTag, StepError};

use crate::choice::{man_step, Choice};
use crate::history::{get_h, steps_to_take, History, Status};

/// Squashes the pipeline and rewinds to the issue cycle of the oldest
/// tracked line, with the cache that committed work alone produced.
pub fn invl(s: &MaState, h: &History) -> MaState {
    let mut t = s.clone();
    t.fetch_pc = t.arch.pc;
    t.rob.clear();
    t.reg_st.clear();
    for r in &mut t.rs {
        r.busy = false;
        r.exec = false;
    }
    t.arch.cache = h.comm_cache.clone();
    if let Some(first) = h.lines.first() {
        t.cyc = h.start_cy;
        t.rob_next = first.id;
    }
    t
}

/// The choice that makes `s` repeat what the history recorded at `s.cyc`.
pub fn derive_choice(s: &MaState, h: &History) -> Choice {
    let now = get_h(h, s.cyc);
    let mut pcs = BTreeSet::new();
    let mut fetched_rs = BTreeSet::new();
    let mut allow_start = BTreeSet::new();
    let mut active = BTreeSet::new();
    for &(id, _, st) in &now {
        if !matches!(st, Status::PostComm) {
            active.insert(id);
        }
        if let Status::Fetch { pc, rsi, exec } = *st {
            pcs.insert(pc);
            if let Some(r) = rsi {
                fetched_rs.insert(r);
                if exec {
                    allow_start.insert(r);
                }
            }
        }
    }
    for r in s.rs.iter().filter(|r| r.busy) {
        if now.iter().any(|&(id, _, st)| id == r.dst && matches!(st, Status::Exec)) {
            allow_start.insert(r.id);
        }
    }
    Choice {
        n: pcs.len(),
        allow_commit: s.params.rob_tags().filter(|t| !active.contains(t)).collect(),
        allow_start,
        busy_rs: s.params.rs_tags().filter(|r: &RsTag| !fetched_rs.contains(r)).collect(),
    }
}

/// One replay step; the history is left as is.
pub fn step_using_h(s: &MaState, h: &History) -> Result<(MaState, History), StepError> {
    let c = derive_choice(s, h);
    Ok((man_step(s, &c)?, h.clone()))
}

/// Replays `h` from the invalidated state and returns every state visited,
/// starting with `invl(s, h)`.
pub fn replay(s: &MaState, h: &History) -> Result<Vec<MaState>, StepError> {
    let k = steps_to_take(s, h);
    let mut out = Vec::with_capacity(k as usize + 1);
    let mut r = invl(s, h);
    for _ in 0..k {
        let next = man_step(&r, &derive_choice(&r, h))?;
        out.push(std::mem::replace(&mut r, next));
    }
    out.push(r);
    Ok(out)
}

pub fn is_entangled(s: &MaState, h: &History) -> bool {
    // a replay longer than the bound cannot come from a real history
    if steps_to_take(s, h) > s.params.replay_bound() as Word {
        return false;
    }
    match replay(s, h) {
        Ok(states) => states.last() == Some(s),
        Err(_) => false,
    }
}

