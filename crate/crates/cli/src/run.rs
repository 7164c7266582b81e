//! `run`, `trace` and `asm`.

use std::fmt::Write as _;
use std::io::Write;
use std::sync::Arc;

use tea_asm::{emit_isa, emit_ma, Program};
use tea_isa::snapshot::isa_to_snapshot;
use tea_isa::{det_step_mut, fetch_instr, IsaState, Word};
use tea_ma::snapshot::ma_to_snapshot;
use tea_ma::{format_events, ma_step, ma_step_events, MaParams};
use tea_refine::r_ic;
use tea_variants::{init_h, mah_step, update_history};

use crate::args::{AsmArgs, Machine, RunArgs};
use crate::{code, load_params, load_program};

/// Where a simulation stopped.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunOutcome {
    pub machine: Machine,
    /// Steps taken: instructions on the ISA, cycles on the pipeline.
    pub steps: u64,
    pub halted: bool,
    /// Final architectural state; committed state for the pipeline.
    pub arch: IsaState,
}

impl RunOutcome {
    pub fn exit_code(&self) -> i32 {
        if self.halted {
            code::OK
        } else {
            code::BUDGET
        }
    }
}

/// Runs `p` on `machine` for at most `max_steps` steps, writing one record
/// per step to `trace` if given.
pub fn simulate(
    p: &Program,
    machine: Machine,
    params: MaParams,
    max_steps: u64,
    mut trace: Option<&mut dyn Write>,
) -> std::io::Result<RunOutcome> {
    let mut steps = 0;
    let arch = match machine {
        Machine::Isa => {
            let mut s = emit_isa(p);
            while !s.halt && steps < max_steps {
                if let Some(t) = trace.as_mut() {
                    writeln!(t, "step {steps} pc {:#x} {}", s.pc, fetch_instr(&s.imem, s.pc))?;
                }
                det_step_mut(&mut s);
                steps += 1;
            }
            s
        }
        Machine::Ma => {
            let mut s = emit_ma(p, Arc::new(params));
            while !s.halted() && steps < max_steps {
                s = match trace.as_mut() {
                    Some(t) => {
                        let (u, ev) = ma_step_events(&s);
                        t.write_all(format_events(s.cyc, &ev).as_bytes())?;
                        u
                    }
                    None => ma_step(&s),
                };
                steps += 1;
            }
            r_ic(&s)
        }
        Machine::MaH => {
            let mut s = emit_ma(p, Arc::new(params));
            let mut h = init_h(&s);
            while !s.halted() && steps < max_steps {
                (s, h) = match trace.as_mut() {
                    Some(t) => {
                        let (u, ev) = ma_step_events(&s);
                        let h2 = update_history(&s, &u, &h, &ev);
                        t.write_all(format_events(s.cyc, &ev).as_bytes())?;
                        writeln!(t, "  history comm-cy {:#x} start-cy {:#x}", h2.comm_cy, h2.start_cy)?;
                        (u, h2)
                    }
                    None => mah_step(&s, &h),
                };
                steps += 1;
            }
            r_ic(&s)
        }
    };
    Ok(RunOutcome { machine, steps, halted: arch.halt, arch })
}

/// Multi-line rendering of an architectural state.
pub fn format_arch(s: &IsaState) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "pc {:#x}{}", s.pc, if s.halt { " (halted)" } else { "" });
    for (i, chunk) in s.rf.chunks(4).enumerate() {
        let regs: Vec<String> = chunk.iter().enumerate().map(|(j, v)| format!("r{:<2} {v:#010x}", i * 4 + j)).collect();
        let _ = writeln!(out, "{}", regs.join("  "));
    }
    if s.tsx.active {
        let _ = writeln!(out, "transaction active, fallback {:#x}", s.tsx.fallback_pc);
    }
    let lines: Vec<String> = s.cache.iter().map(|(a, d): (&Word, &Word)| format!("{a:#x}={d:#x}")).collect();
    let _ = writeln!(out, "cache [{}]", lines.join(", "));
    out
}

fn machine_name(m: Machine) -> &'static str {
    match m {
        Machine::Isa => "isa",
        Machine::Ma => "ma",
        Machine::MaH => "ma-h",
    }
}

pub fn cmd_run(args: &RunArgs, force_trace: bool, out: &mut dyn Write) -> anyhow::Result<i32> {
    let p = load_program(&args.program)?;
    let params = load_params(args.params.params.as_deref(), &args.params.set)?;
    let r = match (&args.trace, force_trace) {
        (Some(Some(path)), _) => {
            let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
            let r = simulate(&p, args.machine, params, args.max_steps, Some(&mut f))?;
            f.flush()?;
            r
        }
        (Some(None), _) | (None, true) => simulate(&p, args.machine, params, args.max_steps, Some(&mut *out))?,
        (None, false) => simulate(&p, args.machine, params, args.max_steps, None)?,
    };
    let unit = if args.machine == Machine::Isa { "steps" } else { "cycles" };
    let how = if r.halted { "halted after" } else { "step budget exhausted after" };
    writeln!(out, "{} {how} {} {unit}", machine_name(r.machine), r.steps)?;
    out.write_all(format_arch(&r.arch).as_bytes())?;
    Ok(r.exit_code())
}

pub fn cmd_asm(args: &AsmArgs, out: &mut dyn Write) -> anyhow::Result<i32> {
    let p = load_program(&args.program)?;
    let params = load_params(args.params.params.as_deref(), &args.params.set)?;
    let text = match args.snapshot {
        None => p.to_string(),
        Some(Machine::Isa) => isa_to_snapshot(&emit_isa(&p)),
        Some(Machine::Ma) => ma_to_snapshot(&emit_ma(&p, Arc::new(params))),
        Some(Machine::MaH) => {
            let s = emit_ma(&p, Arc::new(params));
            tea_variants::snapshot::mah_to_snapshot(&s, &init_h(&s))
        }
    };
    out.write_all(text.as_bytes())?;
    Ok(code::OK)
}
