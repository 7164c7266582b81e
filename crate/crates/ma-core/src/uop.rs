//! Micro-operations and decoding.

use std::fmt;

use tea_isa::{Instr, Reg, Word};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum MicroOp {
    Mhalt,
    Mnoop,
    Mloadi,
    Maddi,
    Madd,
    Mmul,
    Mand,
    Mcmp,
    Mjg,
    Mjge,
    Mldri,
    Mldr,
    MemiCheck,
    MemCheck,
    MtsxStart,
    MtsxEnd,
    MinCache,
}

impl MicroOp {
    pub const ALL: [MicroOp; 17] = [
        MicroOp::Mhalt,
        MicroOp::Mnoop,
        MicroOp::Mloadi,
        MicroOp::Maddi,
        MicroOp::Madd,
        MicroOp::Mmul,
        MicroOp::Mand,
        MicroOp::Mcmp,
        MicroOp::Mjg,
        MicroOp::Mjge,
        MicroOp::Mldri,
        MicroOp::Mldr,
        MicroOp::MemiCheck,
        MicroOp::MemCheck,
        MicroOp::MtsxStart,
        MicroOp::MtsxEnd,
        MicroOp::MinCache,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MicroOp::Mhalt => "mhalt",
            MicroOp::Mnoop => "mnoop",
            MicroOp::Mloadi => "mloadi",
            MicroOp::Maddi => "maddi",
            MicroOp::Madd => "madd",
            MicroOp::Mmul => "mmul",
            MicroOp::Mand => "mand",
            MicroOp::Mcmp => "mcmp",
            MicroOp::Mjg => "mjg",
            MicroOp::Mjge => "mjge",
            MicroOp::Mldri => "mldri",
            MicroOp::Mldr => "mldr",
            MicroOp::MemiCheck => "memi-check",
            MicroOp::MemCheck => "mem-check",
            MicroOp::MtsxStart => "mtsx-start",
            MicroOp::MtsxEnd => "mtsx-end",
            MicroOp::MinCache => "min-cache",
        }
    }

    pub fn from_name(name: &str) -> Option<MicroOp> {
        MicroOp::ALL.iter().copied().find(|m| m.name() == name)
    }

    /// Needs a reservation station. Everything except `mhalt` and the TSX
    /// markers, which are ready as soon as they are issued.
    pub fn rs_needed(self) -> bool {
        !matches!(self, MicroOp::Mhalt | MicroOp::MtsxStart | MicroOp::MtsxEnd)
    }

    pub fn reg_write(self) -> bool {
        matches!(
            self,
            MicroOp::Mloadi
                | MicroOp::Maddi
                | MicroOp::Madd
                | MicroOp::Mmul
                | MicroOp::Mand
                | MicroOp::Mcmp
                | MicroOp::Mldri
                | MicroOp::Mldr
                | MicroOp::MinCache
        )
    }

    pub fn barrier_op(self) -> bool {
        self == MicroOp::MinCache
    }

    pub fn memory_op(self) -> bool {
        matches!(self, MicroOp::Mldri | MicroOp::Mldr)
    }

    pub fn is_check(self) -> bool {
        matches!(self, MicroOp::MemiCheck | MicroOp::MemCheck)
    }

    pub fn is_jump(self) -> bool {
        matches!(self, MicroOp::Mjg | MicroOp::Mjge)
    }

    /// Second source operand is the instruction constant rather than a
    /// register.
    pub fn const_operand(self) -> bool {
        matches!(
            self,
            MicroOp::Mloadi | MicroOp::Maddi | MicroOp::Mldri | MicroOp::MemiCheck | MicroOp::Mjg | MicroOp::Mjge
        )
    }
}

impl fmt::Display for MicroOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A micro-instruction: operation plus the operands of its parent
/// instruction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct MicroInstr {
    pub op: MicroOp,
    pub rd: Option<Reg>,
    pub r1: Option<Reg>,
    pub r2: Option<Reg>,
    pub c: Word,
}

impl MicroInstr {
    fn new(op: MicroOp, rd: Option<Reg>, r1: Option<Reg>, r2: Option<Reg>, c: Word) -> Self {
        MicroInstr { op, rd, r1, r2, c }
    }

    /// Destination register, for register-writing operations.
    pub fn reg_dst(&self) -> Option<Reg> {
        if self.op.reg_write() {
            self.rd
        } else {
            None
        }
    }

    /// Register source operands `(op1, op2)`.
    pub fn sources(&self) -> (Option<Reg>, Option<Reg>) {
        match self.op {
            MicroOp::Mnoop | MicroOp::Mhalt | MicroOp::MtsxStart | MicroOp::MtsxEnd | MicroOp::Mloadi => (None, None),
            _ => (self.r1, self.r2),
        }
    }
}

impl fmt::Display for MicroInstr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.op)?;
        for r in [self.rd, self.r1, self.r2].into_iter().flatten() {
            write!(f, " {r}")?;
        }
        if self.op.const_operand() || self.op == MicroOp::MtsxStart {
            write!(f, " {}", self.c)?;
        }
        Ok(())
    }
}

/// Decodes one instruction. Loads split into an access check followed by
/// the load proper; everything else maps one to one.
pub fn decode_one(i: Instr) -> Vec<MicroInstr> {
    use MicroOp::*;
    let m = MicroInstr::new;
    match i {
        Instr::Ldri { rd, r1, c } => vec![m(MemiCheck, None, Some(r1), None, c), m(Mldri, Some(rd), Some(r1), None, c)],
        Instr::Ldr { rd, r1, r2 } => vec![m(MemCheck, None, Some(r1), Some(r2), 0), m(Mldr, Some(rd), Some(r1), Some(r2), 0)],
        Instr::Halt => vec![m(Mhalt, None, None, None, 0)],
        Instr::Noop => vec![m(Mnoop, None, None, None, 0)],
        Instr::Loadi { rd, c } => vec![m(Mloadi, Some(rd), None, None, c)],
        Instr::Addi { rd, r1, c } => vec![m(Maddi, Some(rd), Some(r1), None, c)],
        Instr::Add { rd, r1, r2 } => vec![m(Madd, Some(rd), Some(r1), Some(r2), 0)],
        Instr::Mul { rd, r1, r2 } => vec![m(Mmul, Some(rd), Some(r1), Some(r2), 0)],
        Instr::And { rd, r1, r2 } => vec![m(Mand, Some(rd), Some(r1), Some(r2), 0)],
        Instr::Cmp { rd, r1, r2 } => vec![m(Mcmp, Some(rd), Some(r1), Some(r2), 0)],
        Instr::Jg { r1, c } => vec![m(Mjg, None, Some(r1), None, c)],
        Instr::Jge { r1, c } => vec![m(Mjge, None, Some(r1), None, c)],
        Instr::TsxStart { c } => vec![m(MtsxStart, None, None, None, c)],
        Instr::TsxEnd => vec![m(MtsxEnd, None, None, None, 0)],
        Instr::InCache { rd, r1, r2 } => vec![m(MinCache, Some(rd), Some(r1), Some(r2), 0)],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn predicates_are_consistent() {
        for op in MicroOp::ALL {
            assert!(!(op.barrier_op() && op.memory_op()));
            assert_eq!(MicroOp::from_name(op.name()), Some(op));
        }
        assert!(MicroOp::Mnoop.rs_needed());
        assert!(!MicroOp::MtsxStart.rs_needed());
    }
}
