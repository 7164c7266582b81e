//! The cycle step.
//!
//! Every component of the successor is computed from the pre-state by its
//! own sub-system, each a left fold over a worklist (the decoded batch, the
//! ROB, or the reservation stations). [`step_with`] runs them all under a
//! resource [`Control`]; the deterministic machine always uses the maximal
//! control.

use std::collections::{BTreeMap, BTreeSet};

use tea_isa::{compare, fetch_instr, read_word, Imem, Instr, Reg, TsxState, Word};

use crate::params::{RobTag, RsTag};
use crate::state::{MaState, RegStatus, ResStation, RobLine};
use crate::uop::{decode_one, MicroInstr, MicroOp};

/// Either every tag, or only the listed ones.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TagFilter<T: Ord> {
    All,
    Only(BTreeSet<T>),
}

impl<T: Ord> TagFilter<T> {
    pub fn allows(&self, t: &T) -> bool {
        match self {
            TagFilter::All => true,
            TagFilter::Only(set) => set.contains(t),
        }
    }
}

/// Resource decisions for one cycle.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Control {
    /// Instructions to fetch.
    pub n: usize,
    /// ROB lines permitted to commit; the in-order scan stops at the first
    /// line that is not ready or not permitted.
    pub allow_commit: TagFilter<RobTag>,
    /// Stations permitted to start executing.
    pub allow_start: TagFilter<RsTag>,
    /// Stations that issue must skip.
    pub busy_rs: BTreeSet<RsTag>,
}

impl Control {
    /// The choices the deterministic machine always makes.
    pub fn maximal(s: &MaState) -> Self {
        Control { n: max_fetch_n(s), allow_commit: TagFilter::All, allow_start: TagFilter::All, busy_rs: BTreeSet::new() }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum StepError {
    #[error("fetch count {n} exceeds the issuable maximum {max}")]
    FetchCount { n: usize, max: usize },
    #[error("no idle reservation station outside busy-rs for `{0}`")]
    RsExhausted(MicroOp),
    #[error("{needed} micro-instructions do not fit in {free} free ROB slots")]
    RobFull { needed: usize, free: usize },
}

/// A micro-instruction issued this cycle.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IssuedUop {
    pub uop: MicroInstr,
    pub tag: RobTag,
    /// Address of the parent instruction.
    pub pc: Word,
    /// Same-batch producers of the two source operands.
    pub deps: (Option<RobTag>, Option<RobTag>),
    /// Station assigned at issue, if the operation needs one.
    pub rs: Option<RsTag>,
    /// Whether that station also started executing this cycle.
    pub started: bool,
}

/// A station finishing this cycle.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Completion {
    pub rs: RsTag,
    pub dst: RobTag,
    pub mop: MicroOp,
    pub val: Word,
    pub excep: bool,
    /// For loads, the effective address.
    pub addr: Option<Word>,
    /// Cache lines this completion inserted, in insertion order.
    pub cached: Vec<(Word, Word)>,
}

/// What happened during one cycle, for traces, histories and auditing.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct StepEvents {
    pub fetched: usize,
    pub issued: Vec<IssuedUop>,
    /// Every station that started executing, newly issued ones included.
    pub started: Vec<RsTag>,
    pub completed: Vec<Completion>,
    pub committed: Vec<RobLine>,
    pub invalidated: bool,
}

/// `n` consecutive instructions from `pc`, with their addresses.
pub fn fetch_n(imem: &Imem, pc: Word, n: usize) -> Vec<(Word, Instr)> {
    (0..n as Word).map(|i| pc.wrapping_add(i)).map(|a| (a, fetch_instr(imem, a))).collect()
}

/// Decodes a fetched sequence, keeping each micro-op's parent address.
pub fn decode(instrs: &[(Word, Instr)]) -> Vec<(MicroInstr, Word)> {
    instrs.iter().flat_map(|&(pc, i)| decode_one(i).into_iter().map(move |u| (u, pc))).collect()
}

/// Consecutive tags for `count` new micro-instructions.
pub fn rob_ids(count: usize, s: &MaState) -> Result<Vec<RobTag>, StepError> {
    if count > s.free_rob() {
        return Err(StepError::RobFull { needed: count, free: s.free_rob() });
    }
    let mut t = s.issue_origin();
    Ok((0..count)
        .map(|_| {
            let cur = t;
            t = s.params.next_rob(t);
            cur
        })
        .collect())
}

/// Whether the micro-instructions fit in the idle stations and free ROB.
pub fn issuable(uops: &[MicroInstr], s: &MaState) -> bool {
    uops.is_empty()
        || (uops.iter().filter(|u| u.op.rs_needed()).count() <= s.idle_rs_count() && uops.len() <= s.free_rob())
}

/// Largest `n ≤ FETCH-NUM` whose fetched instructions are issuable.
pub fn max_fetch_n(s: &MaState) -> usize {
    if s.halted() {
        return 0;
    }
    let all = fetch_n(&s.arch.imem, s.fetch_pc, s.params.fetch_num);
    (0..=s.params.fetch_num)
        .rev()
        .find(|&n| {
            let uops: Vec<MicroInstr> = decode(&all[..n]).into_iter().map(|(u, _)| u).collect();
            issuable(&uops, s)
        })
        .unwrap_or(0)
}

/// For each micro-instruction, the tag of the latest earlier one in the
/// batch writing each of its source registers.
pub fn detect_raw(decoded: &[(MicroInstr, RobTag)]) -> Vec<(Option<RobTag>, Option<RobTag>)> {
    let writer = |upto: usize, r: Option<Reg>| {
        let r = r?;
        decoded[..upto].iter().rev().find(|(u, _)| u.reg_dst() == Some(r)).map(|&(_, t)| t)
    };
    decoded
        .iter()
        .enumerate()
        .map(|(i, (u, _))| {
            let (a, b) = u.sources();
            (writer(i, a), writer(i, b))
        })
        .collect()
}

/// Result of a station's operation.
pub fn comp_val(rs: &ResStation, s: &MaState) -> Word {
    let ea = rs.vj.wrapping_add(rs.vk);
    match rs.mop {
        MicroOp::Mldri | MicroOp::Mldr => read_word(&s.arch.dmem, ea),
        MicroOp::Mand => rs.vj & rs.vk,
        MicroOp::Maddi | MicroOp::Madd => ea,
        MicroOp::Mmul => rs.vj.wrapping_mul(rs.vk),
        MicroOp::Mloadi => rs.vk,
        MicroOp::MinCache => s.arch.cache.contains_key(&ea) as Word,
        MicroOp::Mcmp => compare(rs.vj, rs.vk),
        MicroOp::Mjg if rs.vj == 2 => rs.rb_pc.wrapping_add(rs.vk),
        MicroOp::Mjge if matches!(rs.vj, 1 | 2) => rs.rb_pc.wrapping_add(rs.vk),
        MicroOp::Mjg | MicroOp::Mjge => rs.rb_pc.wrapping_add(1),
        _ => 0,
    }
}

/// Whether a station's operation raises an access exception.
pub fn comp_exc(rs: &ResStation, s: &MaState) -> bool {
    rs.mop.is_check() && !s.arch.ga.contains(rs.vj.wrapping_add(rs.vk))
}

/// The decoded, tagged batch a fetch count produces.
#[derive(Clone, Debug)]
pub struct Batch {
    pub uops: Vec<(MicroInstr, Word, RobTag)>,
    pub deps: Vec<(Option<RobTag>, Option<RobTag>)>,
    pub fetched: usize,
}

impl Batch {
    pub fn build(s: &MaState, n: usize) -> Result<Batch, StepError> {
        let decoded = decode(&fetch_n(&s.arch.imem, s.fetch_pc, n));
        let tags = rob_ids(decoded.len(), s)?;
        let tagged: Vec<(MicroInstr, RobTag)> = decoded.iter().zip(&tags).map(|(&(u, _), &t)| (u, t)).collect();
        let deps = detect_raw(&tagged);
        let uops = decoded.into_iter().zip(tags).map(|((u, pc), t)| (u, pc, t)).collect();
        Ok(Batch { uops, deps, fetched: n })
    }
}

/// Lines the commit scan takes this cycle, from the pre-state ROB.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CommitPlan {
    pub count: usize,
    pub invalidates: bool,
}

pub fn commit_plan(rob: &[RobLine], allow: &TagFilter<RobTag>) -> CommitPlan {
    let mut count = 0;
    for l in rob {
        if !l.rdy || !allow.allows(&l.id) {
            break;
        }
        count += 1;
        if ends_commit(l) {
            return CommitPlan { count, invalidates: true };
        }
    }
    CommitPlan { count, invalidates: false }
}

/// Lines after which nothing more commits and the pipeline is squashed.
fn ends_commit(l: &RobLine) -> bool {
    l.excep || l.mop.is_jump() || l.mop == MicroOp::Mhalt
}

/// Architectural components after committing.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Committed {
    pub pc: Word,
    pub rf: Vec<Word>,
    pub tsx: TsxState,
    pub halt: bool,
}

/// Commit fold over the pre-state ROB for pc, rf, tsx and halt. Later
/// lines observe the effects of earlier lines committed in the same cycle.
pub fn commit_arch(s: &MaState, plan: CommitPlan) -> Committed {
    let mut c = Committed { pc: s.arch.pc, rf: s.arch.rf.clone(), tsx: s.arch.tsx.clone(), halt: s.arch.halt };
    for l in &s.rob[..plan.count] {
        if l.excep {
            if c.tsx.active {
                c.rf.clone_from(&c.tsx.fallback_rf);
                c.pc = c.tsx.fallback_pc;
            } else {
                c.halt = true;
            }
            c.tsx.active = false;
            continue;
        }
        match l.mop {
            MicroOp::MemiCheck | MicroOp::MemCheck => {}
            MicroOp::Mjg | MicroOp::Mjge => c.pc = l.val,
            MicroOp::Mhalt => {
                c.halt = true;
                c.pc = c.pc.wrapping_add(1);
            }
            MicroOp::MtsxStart => {
                c.tsx.active = true;
                c.tsx.fallback_rf.clone_from(&c.rf);
                c.tsx.fallback_pc = l.val;
                c.pc = c.pc.wrapping_add(1);
            }
            MicroOp::MtsxEnd => {
                c.tsx.active = false;
                c.pc = c.pc.wrapping_add(1);
            }
            op => {
                if op.reg_write() {
                    if let Some(r) = l.rdst {
                        c.rf[r.index()] = l.val;
                    }
                }
                c.pc = c.pc.wrapping_add(1);
            }
        }
    }
    c
}

/// Register-status sub-system: issue then commit.
pub fn step_regstat(s: &MaState, batch: &Batch, plan: CommitPlan) -> BTreeMap<Reg, RegStatus> {
    if plan.invalidates {
        return BTreeMap::new();
    }
    let mut st = s.reg_st.clone();
    for (u, _, tag) in &batch.uops {
        if let Some(r) = u.reg_dst() {
            st.insert(r, RegStatus { busy: true, reorder: *tag });
        }
    }
    for l in &s.rob[..plan.count] {
        if let Some(r) = l.rdst {
            if st.get(&r).is_some_and(|e| e.reorder == l.id) {
                st.remove(&r);
            }
        }
    }
    st
}

fn issue_line(u: &MicroInstr, tag: RobTag) -> RobLine {
    let (rdy, val, rdst) = match u.op {
        MicroOp::Mjg | MicroOp::Mjge => (false, 0, None),
        MicroOp::MtsxEnd | MicroOp::Mhalt => (true, 0, None),
        MicroOp::MtsxStart => (true, u.c, None),
        _ => (false, 0, u.reg_dst()),
    };
    RobLine { id: tag, mop: u.op, rdst, rdy, val, excep: false }
}

/// ROB sub-system: issue, writeback, commit.
pub fn step_rob(s: &MaState, batch: &Batch, completions: &[Completion], plan: CommitPlan) -> Vec<RobLine> {
    if plan.invalidates {
        return Vec::new();
    }
    let mut rob = s.rob.clone();
    rob.extend(batch.uops.iter().map(|(u, _, t)| issue_line(u, *t)));
    for c in completions {
        if let Some(l) = rob.iter_mut().find(|l| l.id == c.dst) {
            l.val = c.val;
            l.excep = c.excep;
            l.rdy = true;
        }
    }
    rob.drain(..plan.count);
    rob
}

/// Operand resolution at issue.
fn setup_operand(
    s: &MaState,
    reg: Option<Reg>,
    dep: Option<RobTag>,
    q: &mut Option<RobTag>,
    v: &mut Word,
) {
    let Some(r) = reg else {
        *q = None;
        *v = 0;
        return;
    };
    if dep.is_some() {
        *q = dep;
        return;
    }
    match s.reg_st.get(&r) {
        Some(st) if st.busy => match s.rob_line(st.reorder) {
            Some(line) if line.rdy => {
                *q = None;
                *v = line.val;
            }
            _ => *q = Some(st.reorder),
        },
        _ => {
            *q = None;
            *v = s.arch.rf[r.index()];
        }
    }
}

fn setup_rs(rs: &mut ResStation, s: &MaState, u: &MicroInstr, pc: Word, tag: RobTag, deps: (Option<RobTag>, Option<RobTag>)) {
    rs.mop = u.op;
    rs.busy = true;
    rs.exec = false;
    rs.dst = tag;
    rs.rb_pc = pc;
    if u.op == MicroOp::Mnoop {
        rs.qj = None;
        rs.qk = None;
        rs.vj = 0;
        rs.vk = 0;
        return;
    }
    let (r1, r2) = u.sources();
    setup_operand(s, r1, deps.0, &mut rs.qj, &mut rs.vj);
    if u.op.const_operand() {
        rs.qk = None;
        rs.vk = u.c;
    } else {
        setup_operand(s, r2, deps.1, &mut rs.qk, &mut rs.vk);
    }
}

/// Whether ordering constraints allow `rs` to start: `in-cache` waits for
/// older uncommitted loads and loads wait for older uncommitted `in-cache`.
fn ordering_allows(rs: &ResStation, rob_order: &[(RobTag, MicroOp)]) -> bool {
    let before = rob_order.iter().take_while(|(t, _)| *t != rs.dst);
    if rs.mop.barrier_op() {
        before.clone().all(|(_, op)| !op.memory_op())
    } else if rs.mop.memory_op() {
        before.clone().all(|(_, op)| !op.barrier_op())
    } else {
        true
    }
}

/// Reservation-station sub-system: issue, execute, writeback. Returns the
/// stations and the completions in station order.
pub fn step_rsf(
    s: &MaState,
    batch: &Batch,
    ctl: &Control,
    plan: CommitPlan,
    ev: &mut StepEvents,
) -> Result<(Vec<ResStation>, Vec<Completion>), StepError> {
    let mut rs = s.rs.clone();
    let mut claimed = vec![false; rs.len()];
    for ((u, pc, tag), &deps) in batch.uops.iter().zip(&batch.deps) {
        let mut slot = None;
        if u.op.rs_needed() {
            let i = (0..rs.len())
                .find(|&i| !rs[i].busy && !claimed[i] && !ctl.busy_rs.contains(&rs[i].id))
                .ok_or(StepError::RsExhausted(u.op))?;
            claimed[i] = true;
            setup_rs(&mut rs[i], s, u, *pc, *tag, deps);
            slot = Some(rs[i].id);
        }
        ev.issued.push(IssuedUop { uop: *u, tag: *tag, pc: *pc, deps, rs: slot, started: false });
    }

    let rob_order: Vec<(RobTag, MicroOp)> =
        s.rob.iter().map(|l| (l.id, l.mop)).chain(batch.uops.iter().map(|(u, _, t)| (*t, u.op))).collect();
    for r in rs.iter_mut() {
        if r.busy && !r.exec && r.operands_ready() && ctl.allow_start.allows(&r.id) && ordering_allows(r, &rob_order) {
            r.exec = true;
            r.cpc = s.cyc.wrapping_add(s.params.mop_time(r.mop));
            ev.started.push(r.id);
            if let Some(iu) = ev.issued.iter_mut().find(|iu| iu.rs == Some(r.id)) {
                iu.started = true;
            }
        }
    }

    let mut completions = Vec::new();
    for i in 0..rs.len() {
        let r = &rs[i];
        if !(r.busy && r.exec && r.cpc == s.cyc) {
            continue;
        }
        let val = comp_val(r, s);
        let excep = comp_exc(r, s);
        let (addr, cached) = if r.mop.memory_op() {
            let a = r.vj.wrapping_add(r.vk);
            let mut lines = vec![(a, read_word(&s.arch.dmem, a))];
            lines.extend(s.params.prefetch.targets(a, &s.arch.ga).into_iter().map(|x| (x, read_word(&s.arch.dmem, x))));
            (Some(a), lines)
        } else {
            (None, vec![])
        };
        let dst = r.dst;
        completions.push(Completion { rs: r.id, dst, mop: r.mop, val, excep, addr, cached });
        for other in rs.iter_mut() {
            if other.qj == Some(dst) {
                other.qj = None;
                other.vj = val;
            }
            if other.qk == Some(dst) {
                other.qk = None;
                other.vk = val;
            }
        }
        rs[i].busy = false;
        rs[i].exec = false;
    }

    if plan.invalidates {
        for r in rs.iter_mut() {
            r.busy = false;
            r.exec = false;
        }
    }
    Ok((rs, completions))
}

/// Cache sub-system: completed loads insert their line and prefetch set.
pub fn step_cache(s: &MaState, completions: &[Completion]) -> tea_isa::PartialMem {
    let mut cache = s.arch.cache.clone();
    for c in completions {
        for &(a, d) in &c.cached {
            cache.insert(a, d);
        }
    }
    cache
}

/// One cycle under `ctl`, optionally recording events.
pub fn step_with(s: &MaState, ctl: &Control, events: Option<&mut StepEvents>) -> Result<MaState, StepError> {
    if s.halted() {
        return Ok(s.clone());
    }
    let max = max_fetch_n(s);
    if ctl.n > max {
        return Err(StepError::FetchCount { n: ctl.n, max });
    }
    let mut local = StepEvents::default();
    let ev = match events {
        Some(e) => {
            *e = StepEvents::default();
            e
        }
        None => &mut local,
    };
    let batch = Batch::build(s, ctl.n)?;
    let plan = commit_plan(&s.rob, &ctl.allow_commit);
    ev.fetched = ctl.n;
    ev.committed = s.rob[..plan.count].to_vec();
    ev.invalidated = plan.invalidates;

    let (rs, completions) = step_rsf(s, &batch, ctl, plan, ev)?;
    let committed = commit_arch(s, plan);
    let reg_st = step_regstat(s, &batch, plan);
    let rob = step_rob(s, &batch, &completions, plan);
    let cache = step_cache(s, &completions);
    let fetch_pc = if plan.invalidates { committed.pc } else { s.fetch_pc.wrapping_add(ctl.n as Word) };
    let rob_next = batch.uops.last().map_or(s.rob_next, |&(_, _, t)| s.params.next_rob(t));
    ev.completed = completions;

    let mut arch = s.arch.clone();
    arch.pc = committed.pc;
    arch.rf = committed.rf;
    arch.tsx = committed.tsx;
    arch.halt = committed.halt;
    arch.cache = cache;
    Ok(MaState { arch, rob, rs, reg_st, cyc: s.cyc.wrapping_add(1), fetch_pc, rob_next, params: s.params.clone() })
}

/// The deterministic MA-IC step.
pub fn ma_step(s: &MaState) -> MaState {
    step_with(s, &Control::maximal(s), None).expect("the maximal control is always valid")
}

/// The deterministic step, also returning its events.
pub fn ma_step_events(s: &MaState) -> (MaState, StepEvents) {
    let mut ev = StepEvents::default();
    let t = step_with(s, &Control::maximal(s), Some(&mut ev)).expect("the maximal control is always valid");
    (t, ev)
}

/// Whether the ROB head is ready, so this cycle commits something.
pub fn will_commit(s: &MaState) -> bool {
    !s.halted() && s.rob.first().is_some_and(|l| l.rdy)
}

macro_rules! sub_step {
    ($(#[$doc:meta])* $name:ident -> $ty:ty, |$s:ident, $batch:ident, $plan:ident, $ctl:ident| $body:expr) => {
        $(#[$doc])*
        pub fn $name($s: &MaState, $ctl: &Control) -> Result<$ty, StepError> {
            let $batch = Batch::build($s, $ctl.n)?;
            let $plan = commit_plan(&$s.rob, &$ctl.allow_commit);
            Ok($body)
        }
    };
}

sub_step!(
    /// Register status after issue and commit.
    sub_step_regstat -> BTreeMap<Reg, RegStatus>, |s, batch, plan, _ctl| step_regstat(s, &batch, plan));
sub_step!(
    /// Program counter after commit.
    sub_step_pc -> Word, |s, _batch, plan, _ctl| commit_arch(s, plan).pc);
sub_step!(
    /// TSX record after commit.
    sub_step_tsx -> TsxState, |s, _batch, plan, _ctl| commit_arch(s, plan).tsx);
sub_step!(
    /// Register file after commit.
    sub_step_rf -> Vec<Word>, |s, _batch, plan, _ctl| commit_arch(s, plan).rf);
sub_step!(
    /// ROB after issue, writeback and commit.
    sub_step_rob -> Vec<RobLine>, |s, batch, plan, ctl| {
        let (_, done) = step_rsf(s, &batch, ctl, plan, &mut StepEvents::default())?;
        step_rob(s, &batch, &done, plan)
    });
sub_step!(
    /// Reservation stations after issue, execution and writeback.
    sub_step_rsf -> Vec<ResStation>, |s, batch, plan, ctl| step_rsf(s, &batch, ctl, plan, &mut StepEvents::default())?.0);
sub_step!(
    /// Cache after load completions.
    sub_step_cache -> tea_isa::PartialMem, |s, batch, plan, ctl| {
        let (_, done) = step_rsf(s, &batch, ctl, plan, &mut StepEvents::default())?;
        step_cache(s, &done)
    });
