//! Program and state builders shared by the variant tests.
#![allow(dead_code)]

use std::sync::Arc;

use tea_isa::*;
use tea_ma::*;

pub const REGS: u8 = DEFAULT_REG_COUNT as u8;

pub fn machine(prog: &[Instr], dmem: &[(Word, Word)], ga: AccessPredicate, params: MaParams) -> MaState {
    let imem: Imem = prog.iter().enumerate().map(|(i, &x)| (i as Word, x)).collect();
    let isa = IsaState::new(0, REGS as usize, Arc::new(imem), Arc::new(dmem.iter().copied().collect()), Arc::new(ga));
    MaState::new(isa, Arc::new(params))
}

pub fn r(i: u8) -> Reg {
    Reg(i)
}

/// A short program exercising loads, a taken branch and a multiply.
pub fn sample_program() -> Vec<Instr> {
    vec![
        Instr::Loadi { rd: r(1), c: 4 },
        Instr::Ldri { rd: r(2), r1: r(1), c: 1 },
        Instr::Mul { rd: r(3), r1: r(2), r2: r(2) },
        Instr::Addi { rd: r(4), r1: r(3), c: 1 },
        Instr::Jg { r1: r(4), c: 2 },
        Instr::Noop,
        Instr::Ldr { rd: r(5), r1: r(1), r2: r(1) },
        Instr::Halt,
    ]
}
