//! Generator configuration.

use tea_isa::Word;
use tea_ma::MaParams;
use tea_refine::AuthSpec;

/// Relative weights of instruction kinds in generated programs. A weight of
/// zero removes the kind.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InstrMix {
    /// `loadi`, `addi`, `add`, `and`.
    pub alu: u32,
    pub mul: u32,
    pub cmp: u32,
    /// `jg`, `jge`.
    pub jump: u32,
    /// `ldri`, `ldr`.
    pub load: u32,
    /// `tsx-start`, `tsx-end`.
    pub tsx: u32,
    pub in_cache: u32,
    pub halt: u32,
    pub noop: u32,
}

impl Default for InstrMix {
    fn default() -> Self {
        InstrMix { alu: 6, mul: 2, cmp: 2, jump: 2, load: 5, tsx: 1, in_cache: 2, halt: 1, noop: 1 }
    }
}

impl InstrMix {
    pub fn total(&self) -> u32 {
        self.alu + self.mul + self.cmp + self.jump + self.load + self.tsx + self.in_cache + self.halt + self.noop
    }
}

/// Everything that shapes a sample stream. Two runs with equal configs
/// produce equal samples.
#[derive(Clone, Debug, PartialEq)]
pub struct GenConfig {
    pub seed: u64,
    /// Upper bound on history-machine steps taken after invalidation.
    pub max_forward_steps: u32,
    /// Steps checked from the generated state onward.
    pub horizon: usize,
    pub min_len: usize,
    pub max_len: usize,
    /// Operands use registers `r0..reg_count`.
    pub reg_count: usize,
    /// Data addresses are drawn from `0..addr_span` and a little beyond.
    pub addr_span: Word,
    /// Fraction of `0..addr_span` that is accessible, from address 0 up.
    pub access_density: f64,
    /// Bias load addresses toward the accessible boundary.
    pub kernel_bias: bool,
    /// Scatter instructions and start far from them instead of generating a
    /// contiguous block with a nearby pc.
    pub sparse: bool,
    /// Only forward jumps and a trailing `halt`, so every program stops.
    pub terminating: bool,
    pub mix: InstrMix,
    /// Turn every generated `in-cache` into `noop` after generation, so
    /// the sample stream is otherwise unchanged.
    pub strip_in_cache: bool,
    pub params: MaParams,
    /// Action spec for the cache-action property.
    pub auth: AuthSpec,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            seed: 0,
            max_forward_steps: 50,
            horizon: 120,
            min_len: 1,
            max_len: 24,
            reg_count: 6,
            addr_span: 64,
            access_density: 0.75,
            kernel_bias: true,
            sparse: false,
            terminating: false,
            mix: InstrMix::default(),
            strip_in_cache: false,
            params: MaParams::default(),
            auth: AuthSpec::Mirror,
        }
    }
}

impl GenConfig {
    pub fn with_seed(seed: u64) -> Self {
        GenConfig { seed, ..GenConfig::default() }
    }

    /// First inaccessible address of the data window.
    pub fn boundary(&self) -> Word {
        ((self.addr_span as f64) * self.access_density.clamp(0.0, 1.0)).round() as Word
    }
}
