//! Property-based testing of the refinement obligations.
//!
//! Samples are arbitrary machine states that are invalidated and run
//! forward a bounded number of steps, which makes them entangled by
//! construction ([`gen`]). Each registered [`Property`] samples and checks
//! [`Case`]s; the [`runner`] spreads trials over threads, shrinks
//! counterexamples ([`shrink`]) and assembles a deterministic [`Report`].

pub mod case;
pub mod config;
pub mod gen;
pub mod property;
pub mod runner;
pub mod shrink;

pub use case::{Bundle, Case};
pub use config::{GenConfig, InstrMix};
pub use gen::{entangle, gen_entangled, gen_ma_state, gen_program, gen_sample, strip_in_cache, trial_rng, Sample};
pub use property::{Counts, Property};
pub use runner::{
    replay_bundle, run_job, run_property, run_suite, suite_jobs, CorpusCase, FailureReport, Job, PropertyReport,
    Report, RunError, ShrunkReport, REPORT_SCHEMA, SUITES,
};
pub use shrink::{shrink, Shrunk};
