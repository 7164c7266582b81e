//! Library behind the `tea` command.
//!
//! Each subcommand is a function that writes its human-readable output to a
//! caller-supplied sink and returns an exit [`code`], so the binary stays a
//! thin dispatcher and the commands can be driven from tests.

pub mod args;
pub mod bench;
pub mod check;
pub mod demo;
pub mod run;

use std::path::Path;

use anyhow::{bail, Context};
use tea_asm::{corpus, Program};
use tea_ma::MaParams;

/// Process exit codes.
pub mod code {
    /// Halted, passed, or demonstrated as expected.
    pub const OK: i32 = 0;
    /// A counterexample was found or reproduced.
    pub const COUNTEREXAMPLE: i32 = 1;
    /// Bad input or an internal failure.
    pub const ERROR: i32 = 2;
    /// The step budget ran out before the machine halted.
    pub const BUDGET: i32 = 3;
}

/// Loads a program from an assembly file, or a bundled one by name
/// (`meltdown`, `spectre`, `primality`) when no such file exists.
pub fn load_program(spec: &str) -> anyhow::Result<Program> {
    let path = Path::new(spec);
    if !path.exists() {
        if let Some(p) = corpus::by_name(spec) {
            return Ok(p);
        }
    }
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {spec}"))?;
    tea_asm::parse(&text).with_context(|| format!("assembling {spec}"))
}

/// Machine parameters: defaults, then the `key=value` file, then each
/// `key=value` override in order.
pub fn load_params(file: Option<&Path>, overrides: &[String]) -> anyhow::Result<MaParams> {
    let mut p = MaParams::default();
    if let Some(f) = file {
        let text = std::fs::read_to_string(f).with_context(|| format!("reading {}", f.display()))?;
        p.apply_kv(&text).with_context(|| format!("in {}", f.display()))?;
    }
    for o in overrides {
        let Some((k, v)) = o.split_once('=') else { bail!("expected key=value, got `{o}`") };
        p.set(k, v)?;
    }
    p.validate()?;
    Ok(p)
}
