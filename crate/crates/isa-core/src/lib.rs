//! Architectural semantics of a small load/compute ISA with an `in-cache`
//! probe instruction, TSX-style transactional regions, and a cache whose
//! contents are chosen nondeterministically.
//!
//! A step of the full machine is a cache choice, one deterministic step,
//! and a second cache choice ([`isa_step`]). The action-labelled variant
//! ([`isa_a_step`]) replaces the free choices with an explicit list of
//! authorised `prefetch`/`cache` actions.

pub mod instr;
pub mod snapshot;
pub mod state;
pub mod step;

pub use instr::{Instr, InstrParseError, ParseErrorKind, Reg, DEFAULT_REG_COUNT};
pub use state::{fetch_instr, read_word, AccessPredicate, Imem, IsaState, PartialMem, TsxState};
pub use step::{
    apply_prefetches, cache_step_mut, compare, det_step_mut, isa_a_step, isa_cache_step, isa_det_step,
    isa_step, AuthAction, CacheAction, CacheChoice, IsaError,
};

/// Machine word. All arithmetic wraps modulo 2^32.
pub type Word = u32;
