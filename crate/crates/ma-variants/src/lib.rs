//! Nondeterministic and history-carrying variants of the pipeline model.
//!
//! [`man_step`] lets the caller pick how many instructions to fetch, which
//! ROB lines may commit, which stations may start and which stations to
//! treat as occupied. [`mah_step`] runs the deterministic pipeline while
//! recording a per-cycle timeline for every in-flight micro-instruction;
//! that timeline is enough to squash the pipeline with [`invl`] and rebuild
//! it step by step with [`derive_choice`].

pub mod choice;
pub mod history;
pub mod replay;
pub mod snapshot;

pub use choice::{man_step, man_step_events, Choice};
pub use history::{get_h, init_h, mah_step, sc_rem_rb, steps_to_take, update_history, History, Status, StatusLine};
pub use replay::{derive_choice, invl, is_entangled, replay, step_using_h};
