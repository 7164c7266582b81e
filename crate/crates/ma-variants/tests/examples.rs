//! Worked examples for the nondeterministic and history-carrying machines.

mod common;

use std::collections::BTreeSet;

use common::*;
use tea_isa::*;
use tea_ma::*;
use tea_variants::*;

fn sample() -> MaState {
    machine(&sample_program(), &[(5, 3), (8, 9)], AccessPredicate::all(), MaParams::default())
}

#[test]
fn maximal_choice_matches_deterministic_step() {
    let mut s = sample();
    while !s.halted() {
        let c = Choice::maximal(&s);
        assert_eq!(man_step(&s, &c).unwrap(), ma_step(&s));
        s = ma_step(&s);
    }
}

#[test]
fn empty_allow_commit_freezes_architecture() {
    let mut s = sample();
    for _ in 0..6 {
        let mut c = Choice::maximal(&s);
        c.allow_commit.clear();
        let t = man_step(&s, &c).unwrap();
        assert_eq!((t.arch.pc, &t.arch.rf, &t.arch.tsx), (s.arch.pc, &s.arch.rf, &s.arch.tsx));
        s = t;
    }
}

#[test]
fn all_stations_busy_blocks_issue() {
    let s = sample();
    let mut c = Choice::maximal(&s);
    c.busy_rs = s.params.rs_tags().collect();
    assert!(man_step(&s, &c).is_err(), "loadi needs a station");
    c.n = 0;
    let t = man_step(&s, &c).unwrap();
    assert!(t.rob.is_empty());
    assert!(t.rs.iter().all(|r| !r.busy));
}

#[test]
fn oversized_fetch_is_rejected() {
    let s = sample();
    let mut c = Choice::maximal(&s);
    c.n += 1;
    assert!(matches!(man_step(&s, &c), Err(StepError::FetchCount { .. })));
}

#[test]
fn init_h_is_empty_at_current_cycle() {
    let mut s = sample();
    let h = init_h(&s);
    assert_eq!((h.comm_cy, h.start_cy), (0, 0));
    assert!(h.comm_cache.is_empty() && h.ch_eff.is_empty() && h.lines.is_empty());
    s.cyc = 42;
    let h = init_h(&s);
    assert_eq!((h.comm_cy, h.start_cy), (42, 42));
    assert_eq!(steps_to_take(&s, &h), 0);
}

#[test]
fn halted_pair_is_fixed() {
    let mut s = sample();
    s.arch.halt = true;
    let h = init_h(&s);
    assert_eq!(mah_step(&s, &h), (s.clone(), h));
}

#[test]
fn first_issue_starts_a_status_line() {
    let mut s = sample();
    s.cyc = 7;
    let h = init_h(&s);
    let (t, h1) = mah_step(&s, &h);
    assert_eq!(h1.start_cy, 7);
    let first = &h1.lines[0];
    assert_eq!(first.statuses.len(), 1);
    assert!(matches!(first.statuses[0], Status::Fetch { pc: 0, rsi: Some(RsTag(0)), exec: true }));
    assert_eq!(h1.lines.len(), t.rob.len());
    assert_eq!(steps_to_take(&t, &h1), 1);
}

#[test]
fn taken_branch_resets_history() {
    let mut s = sample();
    let mut h = init_h(&s);
    loop {
        let (t, ev) = ma_step_events(&s);
        let h2 = update_history(&s, &t, &h, &ev);
        if ev.invalidated {
            assert_eq!(h2.start_cy, s.cyc + 1);
            assert!(h2.lines.is_empty() && h2.ch_eff.is_empty());
            assert_eq!(h2.comm_cache, t.arch.cache);
            assert!(is_entangled(&t, &h2));
            return;
        }
        (s, h) = (t, h2);
        assert!(!s.halted(), "expected the jg to be taken");
    }
}

#[test]
fn get_h_reports_statuses_by_cycle() {
    let s = sample();
    let h0 = init_h(&s);
    let (s1, h1) = mah_step(&s, &h0);
    let (s2, h2) = mah_step(&s1, &h1);
    let at0 = get_h(&h2, 0);
    // both micro-ops of the first fetch were issued in cycle 0
    assert!(at0.len() >= 2);
    assert!(at0.iter().all(|(_, _, st)| matches!(st, Status::Fetch { .. })));
    assert!(get_h(&h2, 1).len() > at0.len() - 1);
    assert!(get_h(&h2, s2.cyc).is_empty());
    let mut before = h2.clone();
    before.start_cy = 5;
    assert!(get_h(&before, 4).is_empty());
}

#[test]
fn derive_choice_complements_fetched_stations() {
    let s = sample();
    let (_, h1) = mah_step(&s, &init_h(&s));
    let c = derive_choice(&invl(&s, &h1), &h1);
    let fetched: BTreeSet<RsTag> = get_h(&h1, 0)
        .into_iter()
        .filter_map(|(_, _, st)| match st {
            Status::Fetch { rsi, .. } => *rsi,
            _ => None,
        })
        .collect();
    assert!(!fetched.is_empty());
    assert!(fetched.iter().all(|r| !c.busy_rs.contains(r)));
    assert_eq!(c.busy_rs.len() + fetched.len(), s.params.rs_count);
    assert_eq!(c.n, ma_step_events(&s).1.fetched);
}

#[test]
fn quiet_cycle_derives_an_idle_choice() {
    let s = sample();
    let c = derive_choice(&s, &init_h(&s));
    assert_eq!(c.n, 0);
    assert!(c.allow_start.is_empty());
    assert_eq!(c.busy_rs.len(), s.params.rs_count);
}

#[test]
fn single_line_replay_reissues_identically() {
    let mut p = MaParams::default();
    p.fetch_num = 1;
    let s = machine(&[Instr::Mul { rd: r(1), r1: r(2), r2: r(3) }, Instr::Halt], &[], AccessPredicate::all(), p);
    let (t, h) = mah_step(&s, &init_h(&s));
    assert_eq!(t.rob.len(), 1);
    let states = replay(&t, &h).unwrap();
    assert_eq!(states.len(), 2);
    assert_eq!(states[1], t);
}

#[test]
fn invl_of_quiet_state_only_resets_cache() {
    let mut s = sample();
    s.arch.cache.insert(5, 3);
    let mut h = init_h(&s);
    h.comm_cache.clear();
    let t = invl(&s, &h);
    assert!(t.arch.cache.is_empty());
    let mut back = t.clone();
    back.arch.cache = s.arch.cache.clone();
    assert_eq!(back, s);
    // idempotent once the committed cache matches
    let h2 = init_h(&t);
    assert_eq!(invl(&t, &h2), t);
}

#[test]
fn mid_flight_invl_rewinds() {
    let s = sample();
    let mut pair = (s.clone(), init_h(&s));
    for _ in 0..4 {
        pair = mah_step(&pair.0, &pair.1);
    }
    let (s4, h4) = &pair;
    assert!(!s4.rob.is_empty());
    let t = invl(s4, h4);
    assert!(t.rob.is_empty() && t.reg_st.is_empty());
    assert!(t.rs.iter().all(|r| !r.busy && !r.exec));
    assert_eq!(t.cyc, h4.start_cy);
    assert_eq!(t.fetch_pc, t.arch.pc);
    assert_eq!(t.arch.rf, s4.arch.rf);
    assert!(is_entangled(s4, h4));
}

#[test]
fn unexplained_rob_line_breaks_entanglement() {
    let s = sample();
    let (mut t, h) = mah_step(&s, &init_h(&s));
    let extra = RobLine { id: s.params.next_rob(t.rob.last().unwrap().id), mop: MicroOp::Mnoop, rdst: None, rdy: true, val: 0, excep: false };
    t.rob.push(extra);
    assert!(!is_entangled(&t, &h));
    assert!(!is_entangled(&t, &init_h(&t)));
}

#[test]
fn history_snapshot_round_trips() {
    let s = sample();
    let mut pair = (s.clone(), init_h(&s));
    for _ in 0..9 {
        pair = mah_step(&pair.0, &pair.1);
        let text = tea_variants::snapshot::mah_to_snapshot(&pair.0, &pair.1);
        let back = tea_variants::snapshot::mah_from_snapshot(&text).unwrap();
        assert_eq!(back, pair);
    }
}
