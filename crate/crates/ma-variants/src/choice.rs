//! The resource-nondeterministic machine.

use std::collections::BTreeSet;

use tea_ma::{max_fetch_n, step_with, Control, MaState, RobTag, RsTag, StepError, StepEvents, TagFilter};

/// Resource selections for one step.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Choice {
    pub n: usize,
    pub allow_commit: BTreeSet<RobTag>,
    pub allow_start: BTreeSet<RsTag>,
    pub busy_rs: BTreeSet<RsTag>,
}

impl Choice {
    /// The choice the deterministic machine always makes.
    pub fn maximal(s: &MaState) -> Choice {
        Choice {
            n: max_fetch_n(s),
            allow_commit: s.params.rob_tags().collect(),
            allow_start: s.params.rs_tags().collect(),
            busy_rs: BTreeSet::new(),
        }
    }

    pub fn control(&self) -> Control {
        Control {
            n: self.n,
            allow_commit: TagFilter::Only(self.allow_commit.clone()),
            allow_start: TagFilter::Only(self.allow_start.clone()),
            busy_rs: self.busy_rs.clone(),
        }
    }
}

/// One MA-IC-N step. Fails when `c.n` exceeds the issuable maximum or the
/// stations left outside `busy-rs` cannot hold the fetched work.
pub fn man_step(s: &MaState, c: &Choice) -> Result<MaState, StepError> {
    step_with(s, &c.control(), None)
}

pub fn man_step_events(s: &MaState, c: &Choice) -> Result<(MaState, StepEvents), StepError> {
    let mut ev = StepEvents::default();
    let t = step_with(s, &c.control(), Some(&mut ev))?;
    Ok((t, ev))
}
