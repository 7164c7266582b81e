//! Refinement checking between the pipeline model and the ISA.
//!
//! The MA is related to the ISA through a commitment map that keeps only
//! retired state. [`maps`] holds the maps and relations, [`witness`] the
//! witness functions (stutter count, skip count and the matching ISA run),
//! [`actions`] the authorised-cache-action audit, and [`obligations`] the
//! executable checks together with a driver that applies them along a run.

pub mod actions;
pub mod maps;
pub mod obligations;
pub mod witness;

pub use actions::{apply_action, auth_actions, auth_actions_for, AuthSpec};
pub use maps::{b_a, b_ic, label, r_a, r_ic, same_label, DisjState, MapKind};
pub use obligations::{
    check_cache_action, check_closure, check_entangled_obligations, check_in_cache_constraint, check_init_entangled,
    check_ma_subset, check_projection, check_trajectory, check_wsk1, Obligation, TrajectoryConfig, TrajectoryStats,
    Violation,
};
pub use witness::{
    commit_count, committed_instructions, run_ic, run_ic_c, run_with, skip_wit, stutter_wit, NoProgress, Run,
    RunError, RunStep,
};
