//! Executable one-step obligations and a trajectory driver that checks
//! them along an MA run.

use std::fmt;

use tea_isa::{det_step_mut, fetch_instr, Instr, IsaState, Word};
use tea_ma::{ma_step, ma_step_events, MaState, StepEvents};
use tea_variants::{init_h, is_entangled, mah_step, man_step, update_history, Choice, History};

use crate::actions::{apply_action, auth_actions_for, AuthSpec};
use crate::maps::MapKind;
use crate::witness::{commit_count, run_with, RunStep};

/// The obligations this crate can check.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Obligation {
    /// The deterministic step is the maximal-choice nondeterministic step.
    MaSubsetN,
    /// The history machine steps its MA component exactly like the MA.
    HistProjection,
    /// Initial states are entangled with their initial history.
    InitEntangled,
    /// Entanglement is preserved by history-machine steps.
    Closure,
    /// Every MA state is related to its image under the refinement map.
    WskRefl,
    /// The ISA can take the matching run.
    WskRun,
    /// Each MA step either stutters with a decreasing witness or is
    /// matched by the ISA run.
    WskStep,
    /// The MA changes its cache only as the emitted actions authorise.
    CacheAction,
    /// `in-cache` on an inaccessible address yields 0 on the ISA.
    InCacheInaccessible,
}

impl Obligation {
    pub const ALL: [Obligation; 9] = [
        Obligation::MaSubsetN,
        Obligation::HistProjection,
        Obligation::InitEntangled,
        Obligation::Closure,
        Obligation::WskRefl,
        Obligation::WskRun,
        Obligation::WskStep,
        Obligation::CacheAction,
        Obligation::InCacheInaccessible,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Obligation::MaSubsetN => "ma-subset-man",
            Obligation::HistProjection => "mah-projection",
            Obligation::InitEntangled => "init-entangled",
            Obligation::Closure => "closure",
            Obligation::WskRefl => "wsk-refl",
            Obligation::WskRun => "wsk-run",
            Obligation::WskStep => "wsk-step",
            Obligation::CacheAction => "cache-action",
            Obligation::InCacheInaccessible => "in-cache-inaccessible",
        }
    }

    pub fn from_name(s: &str) -> Option<Obligation> {
        Obligation::ALL.into_iter().find(|o| o.name() == s)
    }
}

impl fmt::Display for Obligation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A failed obligation. Failures are data: they carry enough to explain
/// and to re-run the check.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub obligation: Obligation,
    /// Index of the failing step along the checked trajectory.
    pub step: usize,
    /// Cycle of the MA state the failing step started from.
    pub cyc: Word,
    /// An `in-cache` answered differently by the two machines: the
    /// signature of a transient-execution leak.
    pub tea: bool,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} violated at step {} (cycle {:#x})", self.obligation, self.step, self.cyc)?;
        if self.tea {
            write!(f, " [transient leak]")?;
        }
        write!(f, ": {}", self.detail)
    }
}

fn violation(obligation: Obligation, step: usize, s: &MaState, detail: impl Into<String>) -> Violation {
    Violation { obligation, step, cyc: s.cyc, tea: false, detail: detail.into() }
}

pub fn check_ma_subset(s: &MaState) -> Result<(), Violation> {
    if s.halted() {
        return Ok(());
    }
    match man_step(s, &Choice::maximal(s)) {
        Ok(t) if t == ma_step(s) => Ok(()),
        Ok(_) => Err(violation(Obligation::MaSubsetN, 0, s, "maximal choice diverges from the deterministic step")),
        Err(e) => Err(violation(Obligation::MaSubsetN, 0, s, format!("maximal choice rejected: {e}"))),
    }
}

pub fn check_projection(s: &MaState, h: &History) -> Result<(), Violation> {
    if mah_step(s, h).0 == ma_step(s) {
        Ok(())
    } else {
        Err(violation(Obligation::HistProjection, 0, s, "history machine diverges from the MA"))
    }
}

pub fn check_init_entangled(s: &MaState) -> Result<(), Violation> {
    if is_entangled(s, &init_h(s)) {
        Ok(())
    } else {
        Err(violation(Obligation::InitEntangled, 0, s, "initial state not entangled with its initial history"))
    }
}

/// Checks closure for one entangled pair; non-entangled inputs pass vacuously.
pub fn check_closure(s: &MaState, h: &History) -> Result<(), Violation> {
    if !is_entangled(s, h) {
        return Ok(());
    }
    let (t, h2) = mah_step(s, h);
    if is_entangled(&t, &h2) {
        Ok(())
    } else {
        Err(violation(Obligation::Closure, 0, s, "successor lost entanglement"))
    }
}

/// All four entanglement obligations on one pair.
pub fn check_entangled_obligations(s: &MaState, h: &History) -> Result<(), Violation> {
    check_ma_subset(s)?;
    check_projection(s, h)?;
    check_closure(s, h)
}

pub fn check_wsk1(kind: MapKind, s: &MaState) -> Result<(), Violation> {
    if kind.related(s, &kind.map(s)) {
        Ok(())
    } else {
        Err(violation(Obligation::WskRefl, 0, s, "state not related to its own image"))
    }
}

/// Checks the audit of one transition against `spec`.
pub fn check_cache_action(spec: AuthSpec, s: &MaState, u: &MaState, ev: &StepEvents) -> Result<(), Violation> {
    let a = auth_actions_for(spec, s, ev);
    let expected = apply_action(s, &s.arch.cache, &a);
    if u.arch.cache == expected {
        return Ok(());
    }
    let extra: Vec<String> = u
        .arch
        .cache
        .iter()
        .filter(|(k, v)| expected.get(k) != Some(v))
        .map(|(k, v)| format!("{k:#x}={v:#x}"))
        .collect();
    let acts: Vec<String> = a.iter().map(|x| x.to_string()).collect();
    Err(violation(
        Obligation::CacheAction,
        0,
        s,
        format!("unauthorised cache lines [{}] under actions [{}]", extra.join(", "), acts.join(", ")),
    ))
}

/// Checks that the ISA's `in-cache` at `w.pc` answers 0 when its address
/// is inaccessible, whatever the cache holds. States whose next
/// instruction is something else pass.
pub fn check_in_cache_constraint(w: &IsaState) -> Result<(), String> {
    let Instr::InCache { rd, r1, r2 } = fetch_instr(&w.imem, w.pc) else {
        return Ok(());
    };
    let a = w.rf[r1.index()].wrapping_add(w.rf[r2.index()]);
    if w.ga.contains(a) || w.halt {
        return Ok(());
    }
    let mut t = w.clone();
    det_step_mut(&mut t);
    match t.rf[rd.index()] {
        0 => Ok(()),
        v => Err(format!("in-cache on inaccessible {a:#x} returned {v}")),
    }
}

/// What a trajectory check covers.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TrajectoryConfig {
    /// MA steps to check.
    pub horizon: usize,
    /// Run the refinement witnesses under this map; `None` skips them.
    pub map: Option<MapKind>,
    /// Audit every transition against this action spec.
    pub auth: Option<AuthSpec>,
    /// Also check the entanglement obligations at every step.
    pub entanglement: bool,
}

/// Counts gathered while checking a trajectory.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct TrajectoryStats {
    pub steps: usize,
    /// Steps matched by stuttering (no instruction retired).
    pub stutter_steps: usize,
    /// Steps matched by an ISA run.
    pub commit_steps: usize,
    /// ISA instructions executed by matching runs.
    pub isa_steps: usize,
    /// `in-cache` instructions whose answers were compared.
    pub in_cache_checked: usize,
}

struct Step {
    s: MaState,
    h: History,
    ev: StepEvents,
    count: usize,
}

/// Runs the history machine from `(s0, h0)` for `cfg.horizon` steps and
/// checks the configured obligations at each step. The ISA side starts at
/// the image of `s0` and follows the matching runs.
pub fn check_trajectory(s0: &MaState, h0: &History, cfg: &TrajectoryConfig) -> Result<TrajectoryStats, Violation> {
    let mut path: Vec<Step> = Vec::with_capacity(cfg.horizon);
    let mut s = s0.clone();
    let mut h = h0.clone();
    for _ in 0..cfg.horizon {
        if s.halted() {
            break;
        }
        let (t, ev) = ma_step_events(&s);
        let h2 = update_history(&s, &t, &h, &ev);
        let count = commit_count(&s, &ev);
        path.push(Step { s: std::mem::replace(&mut s, t), h: std::mem::replace(&mut h, h2), ev, count });
    }
    let last = s;

    let mut stats = TrajectoryStats::default();
    let Some(kind) = cfg.map else {
        for (i, st) in path.iter().enumerate() {
            let u = path.get(i + 1).map_or(&last, |n| &n.s);
            check_step_side(cfg, i, st, u)?;
            stats.steps += 1;
        }
        return Ok(stats);
    };

    // stutter witnesses, computed backwards; the tail is simulated forward
    let cap = last.params.replay_bound();
    let tail = crate::witness::stutter_wit(&last, cap).map_err(|e| {
        violation(Obligation::WskStep, path.len(), &last, format!("liveness: {e}"))
    })?;
    let mut wit = vec![0u32; path.len() + 1];
    wit[path.len()] = tail;
    for i in (0..path.len()).rev() {
        wit[i] = if path[i].count > 0 { 0 } else { wit[i + 1] + 1 };
        if wit[i] > cap {
            return Err(violation(Obligation::WskStep, i, &path[i].s, format!("liveness: no instruction retired within {cap} cycles")));
        }
    }

    let mut w = kind.map(s0);
    for (i, st) in path.iter().enumerate() {
        let u = path.get(i + 1).map_or(&last, |n| &n.s);
        check_step_side(cfg, i, st, u)?;
        check_wsk1(kind, &st.s).map_err(|v| Violation { step: i, ..v })?;
        if !kind.related(&st.s, &w) {
            return Err(violation(Obligation::WskStep, i, &st.s, "ISA run drifted from the MA"));
        }
        stats.steps += 1;
        // first disjunct: stutter with a decreasing witness
        if st.count == 0 && kind.related(u, &w) && wit[i + 1] < wit[i] {
            stats.stutter_steps += 1;
            continue;
        }
        let run = run_with(kind, &w, &st.s, &st.h, &st.ev, u)
            .map_err(|e| violation(Obligation::WskRun, i, &st.s, e.to_string()))?;
        stats.commit_steps += 1;
        stats.isa_steps += run.steps.len();
        stats.in_cache_checked += run.steps.iter().filter(|r| r.instr.is_in_cache()).count();
        if !kind.related(u, &run.state) {
            let tea = run.steps.iter().any(RunStep::in_cache_mismatch);
            let detail = describe_mismatch(u, &run.state, &run.steps);
            return Err(Violation { tea, ..violation(Obligation::WskStep, i, &st.s, detail) });
        }
        w = run.state;
    }
    Ok(stats)
}

fn check_step_side(cfg: &TrajectoryConfig, i: usize, st: &Step, u: &MaState) -> Result<(), Violation> {
    let at = |v: Violation| Violation { step: i, ..v };
    if cfg.entanglement {
        check_ma_subset(&st.s).map_err(at)?;
        check_projection(&st.s, &st.h).map_err(at)?;
        if !is_entangled(u, &update_history(&st.s, u, &st.h, &st.ev)) {
            return Err(violation(Obligation::Closure, i, &st.s, "successor lost entanglement"));
        }
    }
    if let Some(spec) = cfg.auth {
        check_cache_action(spec, &st.s, u, &st.ev).map_err(at)?;
    }
    Ok(())
}

fn describe_mismatch(u: &MaState, w: &IsaState, steps: &[RunStep]) -> String {
    if let Some(r) = steps.iter().find(|r| r.in_cache_mismatch()) {
        return format!(
            "in-cache at {:#x} ({}) returned {} on the MA but {} on the ISA",
            r.pc,
            r.instr,
            r.ma_val,
            r.isa_val.map_or_else(|| "nothing".to_string(), |v| v.to_string())
        );
    }
    let mut parts = Vec::new();
    if u.arch.pc != w.pc {
        parts.push(format!("pc {:#x} vs {:#x}", u.arch.pc, w.pc));
    }
    for (i, (a, b)) in u.arch.rf.iter().zip(&w.rf).enumerate() {
        if a != b {
            parts.push(format!("r{i} {a:#x} vs {b:#x}"));
        }
    }
    if u.arch.halt != w.halt {
        parts.push(format!("halt {} vs {}", u.arch.halt, w.halt));
    }
    if u.arch.tsx != w.tsx {
        parts.push("transaction state differs".into());
    }
    if u.arch.cache != w.cache {
        parts.push("cache differs".into());
    }
    format!("MA and ISA disagree after the step: {}", parts.join(", "))
}
