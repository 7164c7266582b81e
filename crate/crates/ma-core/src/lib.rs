//! Cycle-accurate model of a superscalar out-of-order core.
//!
//! Instructions are fetched several per cycle, decoded into
//! micro-instructions, issued in order into a reorder buffer and a pool of
//! reservation stations, executed out of order with operand forwarding,
//! and committed in order. Loads are split into an access check and the
//! load proper; the load fills the cache (and the prefetcher's lines) when
//! it executes, whether or not it is later squashed. `in-cache` and loads
//! are ordered against each other by a barrier.

pub mod params;
pub mod snapshot;
pub mod state;
pub mod step;
pub mod uop;

use std::fmt::Write as _;

pub use params::{MaParams, ParamError, Prefetch, RobTag, RsTag};
pub use state::{MaState, RegStatus, ResStation, RobLine};
pub use step::{
    comp_exc, comp_val, decode, detect_raw, fetch_n, issuable, ma_step, ma_step_events, max_fetch_n, rob_ids,
    step_with, sub_step_cache, sub_step_pc, sub_step_regstat, sub_step_rf, sub_step_rob, sub_step_rsf, sub_step_tsx,
    will_commit, Completion, Control, IssuedUop, StepError, StepEvents, TagFilter,
};
pub use uop::{decode_one, MicroInstr, MicroOp};

/// Renders one cycle's events as indented trace lines.
pub fn format_events(cyc: tea_isa::Word, ev: &StepEvents) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "cycle {cyc:#x} fetched {}", ev.fetched);
    for iu in &ev.issued {
        let rs = iu.rs.map_or_else(|| "-".into(), |r| r.to_string());
        let _ = writeln!(out, "  issue {} {} @{:#x} rs={}{}", iu.tag, iu.uop, iu.pc, rs, if iu.started { " start" } else { "" });
    }
    for r in &ev.started {
        if !ev.issued.iter().any(|iu| iu.rs == Some(*r) && iu.started) {
            let _ = writeln!(out, "  start {r}");
        }
    }
    for c in &ev.completed {
        let _ = writeln!(out, "  writeback {} {} {} val={:#x} exc={}", c.rs, c.dst, c.mop, c.val, c.excep as u8);
        for (a, d) in &c.cached {
            let _ = writeln!(out, "  cache +{a:#x}={d:#x}");
        }
    }
    for l in &ev.committed {
        let _ = writeln!(out, "  commit {} {}{}", l.id, l.mop, if l.excep { " exception" } else { "" });
    }
    if ev.invalidated {
        let _ = writeln!(out, "  invalidate");
    }
    out
}
