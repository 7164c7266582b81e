//! Microarchitectural state.

use std::collections::BTreeMap;
use std::sync::Arc;

use tea_isa::{IsaState, Reg, Word};

use crate::params::{MaParams, RobTag, RsTag};
use crate::uop::MicroOp;

/// One reorder-buffer entry.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RobLine {
    pub id: RobTag,
    pub mop: MicroOp,
    pub rdst: Option<Reg>,
    pub rdy: bool,
    pub val: Word,
    pub excep: bool,
}

/// One reservation station.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ResStation {
    pub id: RsTag,
    pub mop: MicroOp,
    pub qj: Option<RobTag>,
    pub qk: Option<RobTag>,
    pub vj: Word,
    pub vk: Word,
    /// Cycle on which the result becomes available.
    pub cpc: Word,
    pub busy: bool,
    pub exec: bool,
    pub dst: RobTag,
    /// Address of the instruction this micro-op came from.
    pub rb_pc: Word,
}

impl ResStation {
    pub fn idle(id: RsTag) -> Self {
        ResStation {
            id,
            mop: MicroOp::Mnoop,
            qj: None,
            qk: None,
            vj: 0,
            vk: 0,
            cpc: 0,
            busy: false,
            exec: false,
            dst: RobTag(0),
            rb_pc: 0,
        }
    }

    pub fn operands_ready(&self) -> bool {
        self.qj.is_none() && self.qk.is_none()
    }
}

/// Register status entry: the ROB line that will produce the register.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct RegStatus {
    pub busy: bool,
    pub reorder: RobTag,
}

/// An MA-IC state: the architectural (committed) state plus the pipeline.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MaState {
    pub arch: IsaState,
    pub rob: Vec<RobLine>,
    pub rs: Vec<ResStation>,
    pub reg_st: BTreeMap<Reg, RegStatus>,
    pub cyc: Word,
    pub fetch_pc: Word,
    /// Tag handed to the next issued micro-instruction when the ROB is
    /// empty. Kept so that a replay from an invalidated state can reissue
    /// in-flight work under its original tags.
    pub rob_next: RobTag,
    pub params: Arc<MaParams>,
}

impl MaState {
    /// A state with an empty pipeline on top of `arch`, at cycle 0.
    pub fn new(arch: IsaState, params: Arc<MaParams>) -> Self {
        let rs = params.rs_tags().map(ResStation::idle).collect();
        MaState {
            fetch_pc: arch.pc,
            arch,
            rob: Vec::new(),
            rs,
            reg_st: BTreeMap::new(),
            cyc: 0,
            rob_next: RobTag(0),
            params,
        }
    }

    pub fn halted(&self) -> bool {
        self.arch.halt
    }

    pub fn rob_line(&self, id: RobTag) -> Option<&RobLine> {
        self.rob.iter().find(|l| l.id == id)
    }

    pub fn idle_rs_count(&self) -> usize {
        self.rs.iter().filter(|r| !r.busy).count()
    }

    pub fn free_rob(&self) -> usize {
        self.params.max_rob.saturating_sub(self.rob.len())
    }

    /// True when nothing is in flight.
    pub fn pipeline_empty(&self) -> bool {
        self.rob.is_empty() && self.reg_st.is_empty() && self.rs.iter().all(|r| !r.busy && !r.exec)
    }

    /// Tag that the next issued micro-instruction receives.
    pub fn issue_origin(&self) -> RobTag {
        match self.rob.last() {
            Some(l) => self.params.next_rob(l.id),
            None => self.rob_next,
        }
    }

    /// Structural invariants that every reachable state satisfies.
    pub fn check_invariants(&self) -> Result<(), String> {
        let p = &self.params;
        if self.rob.len() > p.max_rob {
            return Err(format!("rob holds {} lines, max {}", self.rob.len(), p.max_rob));
        }
        let mut seen = std::collections::BTreeSet::new();
        for l in &self.rob {
            if !seen.insert(l.id) {
                return Err(format!("duplicate rob tag {}", l.id));
            }
        }
        if self.rs.len() != p.rs_count || self.rs.iter().enumerate().any(|(i, r)| r.id.0 as usize != i) {
            return Err("reservation stations are not indexed by their tags".into());
        }
        for r in &self.rs {
            if r.exec && !r.busy {
                return Err(format!("{} executing while idle", r.id));
            }
            if r.busy && self.rob_line(r.dst).is_none() {
                return Err(format!("{} targets missing rob line {}", r.id, r.dst));
            }
        }
        for (reg, st) in &self.reg_st {
            if st.busy && self.rob_line(st.reorder).is_none() {
                return Err(format!("{reg} waits on missing rob line {}", st.reorder));
            }
        }
        Ok(())
    }
}
