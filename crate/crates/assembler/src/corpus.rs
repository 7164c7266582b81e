//! Bundled programs: two transient-execution attacks and a benchmark.
//!
//! The constants below restate the memory layout each program declares
//! with `.equ`, for callers that inspect the final machine state.

use crate::{parse, Program};
use tea_isa::Word;

pub const MELTDOWN_SRC: &str = include_str!("../corpus/meltdown.asm");
pub const SPECTRE_SRC: &str = include_str!("../corpus/spectre.asm");
pub const PRIMALITY_SRC: &str = include_str!("../corpus/primality.asm");

/// Layout of `meltdown.asm`.
pub mod meltdown {
    use tea_isa::Word;

    /// Inaccessible word holding the secret.
    pub const KERNEL: Word = 0x1000;
    pub const SECRET: Word = 42;
    /// First line of the probe array.
    pub const PROBE: Word = 0x100;
    /// Probe slots scanned by the fallback handler.
    pub const SLOTS: Word = 64;
    /// Register holding the recovered value (`SLOTS` when nothing was found).
    pub const RESULT_REG: usize = 10;
    /// Register holding the in-cache answer for the kernel line.
    pub const KERNEL_HIT_REG: usize = 6;
}

/// Layout of `spectre.asm`.
pub mod spectre {
    use tea_isa::Word;

    pub const ARRAY: Word = 0x200;
    pub const INDEX: Word = 40;
    pub const SECRET: Word = 7;
    pub const PROBE: Word = 0x400;
}

/// Layout of `primality.asm`.
pub mod primality {
    use tea_isa::Word;

    /// Data address of the number under test.
    pub const N_ADDR: Word = 0x10;
    pub const N: Word = 997;
    /// 1 when the input is prime, 0 otherwise.
    pub const RESULT_REG: usize = 10;
}

/// Names of the bundled programs, as accepted by [`by_name`].
pub const NAMES: [&str; 3] = ["meltdown", "spectre", "primality"];

pub fn source(name: &str) -> Option<&'static str> {
    match name {
        "meltdown" => Some(MELTDOWN_SRC),
        "spectre" => Some(SPECTRE_SRC),
        "primality" => Some(PRIMALITY_SRC),
        _ => None,
    }
}

/// Parses a bundled program. The sources are checked by the test suite,
/// so parsing cannot fail.
pub fn by_name(name: &str) -> Option<Program> {
    source(name).map(|s| parse(s).expect("bundled program assembles"))
}

pub fn meltdown() -> Program {
    parse(MELTDOWN_SRC).expect("bundled program assembles")
}

pub fn spectre() -> Program {
    parse(SPECTRE_SRC).expect("bundled program assembles")
}

pub fn primality() -> Program {
    parse(PRIMALITY_SRC).expect("bundled program assembles")
}

/// `primality.asm` with `n` in place of the bundled input.
pub fn primality_of(n: Word) -> Program {
    let mut p = primality();
    for d in &mut p.data {
        if d.0 == primality::N_ADDR {
            d.1 = n;
        }
    }
    p
}
