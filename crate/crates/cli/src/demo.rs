//! `demo`: the two bundled attacks, run on both machines.

use std::io::Write;
use std::sync::Arc;

use tea_asm::corpus::{self, meltdown, spectre};
use tea_asm::{emit_isa, emit_ma};
use tea_isa::{det_step_mut, Word};
use tea_ma::{ma_step_events, MaParams};
use tea_refine::{
    apply_action, auth_actions_for, check_trajectory, r_ic, AuthSpec, MapKind, TrajectoryConfig, Violation,
};
use tea_variants::init_h;

use crate::args::{Attack, DemoArgs};
use crate::run::simulate;
use crate::{code, load_params};

/// Enough steps for either attack program to halt.
const DEMO_BUDGET: u64 = 100_000;

#[derive(Clone, Debug)]
pub struct MeltdownDemo {
    /// Kernel word placed in memory by the program.
    pub planted: Word,
    /// Probe slot found by the fallback handler; `SLOTS` means none.
    pub recovered_ma: Word,
    pub recovered_isa: Word,
    /// The handler's `in-cache` on the kernel line itself.
    pub kernel_probe_ma: Word,
    pub kernel_probe_isa: Word,
    pub cycles: u64,
    pub isa_steps: u64,
    /// The refinement failure the leak causes.
    pub violation: Option<Violation>,
}

impl MeltdownDemo {
    /// The pipeline recovered the secret and the ISA learned nothing.
    pub fn reproduced(&self) -> bool {
        self.recovered_ma == self.planted
            && self.recovered_isa == meltdown::SLOTS
            && self.kernel_probe_isa == 0
            && self.violation.as_ref().is_some_and(|v| v.tea)
    }
}

pub fn meltdown_demo(params: MaParams) -> MeltdownDemo {
    let p = corpus::meltdown();
    let reg = |s: &tea_isa::IsaState, r: usize| s.rf[r];
    let ma = simulate(&p, crate::args::Machine::Ma, params.clone(), DEMO_BUDGET, None).expect("no trace sink");
    let isa = simulate(&p, crate::args::Machine::Isa, params.clone(), DEMO_BUDGET, None).expect("no trace sink");
    let s0 = emit_ma(&p, Arc::new(params));
    let tc = TrajectoryConfig { horizon: ma.steps as usize + 1, map: Some(MapKind::Ic), auth: None, entanglement: false };
    MeltdownDemo {
        planted: meltdown::SECRET,
        recovered_ma: reg(&ma.arch, meltdown::RESULT_REG),
        recovered_isa: reg(&isa.arch, meltdown::RESULT_REG),
        kernel_probe_ma: reg(&ma.arch, meltdown::KERNEL_HIT_REG),
        kernel_probe_isa: reg(&isa.arch, meltdown::KERNEL_HIT_REG),
        cycles: ma.steps,
        isa_steps: isa.steps,
        violation: check_trajectory(&s0, &init_h(&s0), &tc).err(),
    }
}

#[derive(Clone, Debug)]
pub struct SpectreDemo {
    /// Cycle whose cache change the non-speculative spec rejects.
    pub cycle: Option<Word>,
    /// Lines present after that cycle but not authorised by it.
    pub unauthorised: Vec<(Word, Word)>,
    /// Whether the pipeline ever cached the out-of-bounds line.
    pub ma_cached_secret_line: bool,
    /// Whether the architectural run ever read the out-of-bounds line.
    pub isa_read_secret_line: bool,
    /// Transitions rejected by the mirror spec (expected none).
    pub mirror_rejections: usize,
    pub cycles: u64,
}

impl SpectreDemo {
    pub fn reproduced(&self) -> bool {
        !self.unauthorised.is_empty() && self.ma_cached_secret_line && !self.isa_read_secret_line && self.mirror_rejections == 0
    }
}

pub fn spectre_demo(params: MaParams) -> SpectreDemo {
    let p = corpus::spectre();
    let secret_line = spectre::ARRAY + spectre::INDEX;
    let mut s = emit_ma(&p, Arc::new(params));
    let mut d = SpectreDemo {
        cycle: None,
        unauthorised: Vec::new(),
        ma_cached_secret_line: false,
        isa_read_secret_line: false,
        mirror_rejections: 0,
        cycles: 0,
    };
    while !s.halted() && d.cycles < DEMO_BUDGET {
        let (u, ev) = ma_step_events(&s);
        let lawful = |spec| apply_action(&s, &s.arch.cache, &auth_actions_for(spec, &s, &ev));
        if d.cycle.is_none() {
            let expected = lawful(AuthSpec::NonSpeculative);
            if u.arch.cache != expected {
                d.cycle = Some(s.cyc);
                d.unauthorised =
                    u.arch.cache.iter().filter(|(a, v)| expected.get(a) != Some(v)).map(|(&a, &v)| (a, v)).collect();
            }
        }
        d.mirror_rejections += (u.arch.cache != lawful(AuthSpec::Mirror)) as usize;
        d.ma_cached_secret_line |= u.arch.cache.contains_key(&secret_line);
        s = u;
        d.cycles += 1;
    }

    let mut w = emit_isa(&p);
    while !w.halt {
        if let tea_isa::Instr::Ldr { r1, r2, .. } = tea_isa::fetch_instr(&w.imem, w.pc) {
            d.isa_read_secret_line |= w.rf[r1.index()].wrapping_add(w.rf[r2.index()]) == secret_line;
        }
        det_step_mut(&mut w);
    }
    debug_assert_eq!(r_ic(&s).rf, w.rf);
    d
}

pub fn cmd_demo(args: &DemoArgs, out: &mut dyn Write) -> anyhow::Result<i32> {
    let params = load_params(args.params.params.as_deref(), &args.params.set)?;
    let ok = match args.attack {
        Attack::Meltdown => {
            let d = meltdown_demo(params);
            writeln!(out, "planted kernel word at {:#x}: {}", meltdown::KERNEL, d.planted)?;
            writeln!(out, "pipeline ({} cycles): probe recovered {}, kernel line cached: {}", d.cycles, d.recovered_ma, d.kernel_probe_ma)?;
            let none = if d.recovered_isa == meltdown::SLOTS { "nothing".to_string() } else { d.recovered_isa.to_string() };
            writeln!(out, "isa ({} steps): probe recovered {none}, kernel line cached: {}", d.isa_steps, d.kernel_probe_isa)?;
            if let Some(v) = &d.violation {
                writeln!(out, "refinement check: {v}")?;
            }
            d.reproduced()
        }
        Attack::Spectre => {
            let d = spectre_demo(params);
            let lines: Vec<String> = d.unauthorised.iter().map(|(a, v)| format!("{a:#x}={v:#x}")).collect();
            match d.cycle {
                Some(c) => writeln!(out, "cycle {c:#x}: cache gained [{}] not authorised by non-speculative loads", lines.join(", "))?,
                None => writeln!(out, "every cache change was authorised")?,
            }
            writeln!(
                out,
                "out-of-bounds line {:#x} cached by the pipeline: {}; read by the isa: {}",
                spectre::ARRAY + spectre::INDEX,
                d.ma_cached_secret_line,
                d.isa_read_secret_line
            )?;
            writeln!(out, "transitions rejected under the mirror spec: {}", d.mirror_rejections)?;
            d.reproduced()
        }
    };
    writeln!(out, "{}", if ok { "attack reproduced" } else { "attack NOT reproduced" })?;
    Ok(if ok { code::OK } else { code::ERROR })
}
