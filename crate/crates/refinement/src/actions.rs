//! Authorised cache actions: the designer's statement of which cache
//! changes a transition may make, and the audit of the actual change.

use std::fmt;
use std::str::FromStr;

use tea_isa::{apply_prefetches, AuthAction, CacheAction, PartialMem};
use tea_ma::{ma_step_events, MaState, MicroOp, StepEvents};

/// Which cache effects the designer declares as authorised.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum AuthSpec {
    /// Every load that writes back authorises its line and its prefetches.
    #[default]
    Mirror,
    /// Only loads that are certain to commit authorise anything: every
    /// older ROB line must be free of jumps and halts, and every older
    /// access check must have passed.
    NonSpeculative,
}

impl fmt::Display for AuthSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AuthSpec::Mirror => "mirror",
            AuthSpec::NonSpeculative => "non-speculative",
        })
    }
}

impl FromStr for AuthSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "mirror" => Ok(AuthSpec::Mirror),
            "non-speculative" => Ok(AuthSpec::NonSpeculative),
            _ => Err(format!("unknown action spec `{s}` (expected mirror or non-speculative)")),
        }
    }
}

/// Whether a load with ROB tag `dst` can no longer be squashed, judged on
/// `s` with this step's writebacks applied.
fn non_speculative(s: &MaState, ev: &StepEvents, dst: tea_ma::RobTag) -> bool {
    s.rob.iter().take_while(|l| l.id != dst).all(|l| {
        let (rdy, excep) = match ev.completed.iter().find(|c| c.dst == l.id) {
            Some(c) => (true, c.excep),
            None => (l.rdy, l.excep),
        };
        !l.mop.is_jump() && l.mop != MicroOp::Mhalt && (!l.mop.is_check() || (rdy && !excep))
    })
}

/// Actions emitted by the step described by `ev`, in station scan order.
pub fn auth_actions_for(spec: AuthSpec, s: &MaState, ev: &StepEvents) -> AuthAction {
    let mut out = Vec::new();
    for c in &ev.completed {
        let Some(a) = c.addr.filter(|_| c.mop.memory_op()) else { continue };
        if spec == AuthSpec::NonSpeculative && !non_speculative(s, ev, c.dst) {
            continue;
        }
        out.push(CacheAction::Cache(a));
        out.extend(s.params.prefetch.targets(a, &s.arch.ga).into_iter().map(CacheAction::Prefetch));
    }
    out
}

/// Actions for the transition `s → u`, where `u` is the MA successor of `s`.
pub fn auth_actions(spec: AuthSpec, s: &MaState, u: &MaState) -> AuthAction {
    let (t, ev) = ma_step_events(s);
    debug_assert_eq!(&t, u, "auth_actions expects u to be the successor of s");
    auth_actions_for(spec, s, &ev)
}

/// The cache obtained by applying `a` to `cache` with the memory of `s`.
/// Actions naming inaccessible addresses have no effect.
pub fn apply_action(s: &MaState, cache: &PartialMem, a: &[CacheAction]) -> PartialMem {
    apply_prefetches(a, &s.arch.dmem, &s.arch.ga, cache)
}
