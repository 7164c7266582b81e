//! Instruction set: registers, instructions, and their textual form.

use std::fmt;

use crate::Word;

/// Default size of the register file (`r0`..`r11`).
pub const DEFAULT_REG_COUNT: usize = 12;

/// A register specifier. Validity against a register count is checked by
/// whoever builds instructions for a particular machine.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Reg(pub u8);

impl Reg {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for Reg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "r{}", self.0)
    }
}

/// One architectural instruction.
///
/// Jumps are relative (`pc ⊕ c` when taken); `tsx-start c` takes an absolute
/// fallback address.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Instr {
    Halt,
    Noop,
    Loadi { rd: Reg, c: Word },
    Addi { rd: Reg, r1: Reg, c: Word },
    Add { rd: Reg, r1: Reg, r2: Reg },
    Mul { rd: Reg, r1: Reg, r2: Reg },
    And { rd: Reg, r1: Reg, r2: Reg },
    Cmp { rd: Reg, r1: Reg, r2: Reg },
    Jg { r1: Reg, c: Word },
    Jge { r1: Reg, c: Word },
    Ldri { rd: Reg, r1: Reg, c: Word },
    Ldr { rd: Reg, r1: Reg, r2: Reg },
    TsxStart { c: Word },
    TsxEnd,
    InCache { rd: Reg, r1: Reg, r2: Reg },
}

impl Instr {
    pub fn mnemonic(&self) -> &'static str {
        match self {
            Instr::Halt => "halt",
            Instr::Noop => "noop",
            Instr::Loadi { .. } => "loadi",
            Instr::Addi { .. } => "addi",
            Instr::Add { .. } => "add",
            Instr::Mul { .. } => "mul",
            Instr::And { .. } => "and",
            Instr::Cmp { .. } => "cmp",
            Instr::Jg { .. } => "jg",
            Instr::Jge { .. } => "jge",
            Instr::Ldri { .. } => "ldri",
            Instr::Ldr { .. } => "ldr",
            Instr::TsxStart { .. } => "tsx-start",
            Instr::TsxEnd => "tsx-end",
            Instr::InCache { .. } => "in-cache",
        }
    }

    /// All register operands, destination first.
    pub fn regs(&self) -> Vec<Reg> {
        match *self {
            Instr::Halt | Instr::Noop | Instr::TsxStart { .. } | Instr::TsxEnd => vec![],
            Instr::Loadi { rd, .. } => vec![rd],
            Instr::Addi { rd, r1, .. } | Instr::Ldri { rd, r1, .. } => vec![rd, r1],
            Instr::Add { rd, r1, r2 }
            | Instr::Mul { rd, r1, r2 }
            | Instr::And { rd, r1, r2 }
            | Instr::Cmp { rd, r1, r2 }
            | Instr::Ldr { rd, r1, r2 }
            | Instr::InCache { rd, r1, r2 } => vec![rd, r1, r2],
            Instr::Jg { r1, .. } | Instr::Jge { r1, .. } => vec![r1],
        }
    }

    pub fn is_load(&self) -> bool {
        matches!(self, Instr::Ldri { .. } | Instr::Ldr { .. })
    }

    pub fn is_in_cache(&self) -> bool {
        matches!(self, Instr::InCache { .. })
    }

    /// True when every register operand is below `reg_count`.
    pub fn regs_valid(&self, reg_count: usize) -> bool {
        self.regs().iter().all(|r| r.index() < reg_count)
    }

    /// Parses one instruction written as `op operand...`, separated by
    /// whitespace. Registers are checked against `reg_count`.
    pub fn parse(text: &str, reg_count: usize) -> Result<Instr, InstrParseError> {
        let tokens = tokenize(text);
        let Some(&(op_col, op)) = tokens.first() else {
            return Err(InstrParseError::new(1, ParseErrorKind::Empty));
        };
        let operands = &tokens[1..];
        let shape: &[Operand] = match op {
            "halt" | "noop" | "tsx-end" => &[],
            "loadi" => &[Operand::Reg, Operand::Imm],
            "addi" | "ldri" => &[Operand::Reg, Operand::Reg, Operand::Imm],
            "add" | "mul" | "and" | "cmp" | "ldr" | "in-cache" => {
                &[Operand::Reg, Operand::Reg, Operand::Reg]
            }
            "jg" | "jge" => &[Operand::Reg, Operand::Imm],
            "tsx-start" => &[Operand::Imm],
            other => {
                return Err(InstrParseError::new(
                    op_col,
                    ParseErrorKind::UnknownOp(other.to_string()),
                ))
            }
        };
        if operands.len() != shape.len() {
            let col = operands.get(shape.len()).map_or(op_col, |t| t.0);
            return Err(InstrParseError::new(
                col,
                ParseErrorKind::Arity { op: op.to_string(), expected: shape.len(), found: operands.len() },
            ));
        }
        let mut regs = Vec::with_capacity(3);
        let mut imm = 0;
        for (&(col, tok), kind) in operands.iter().zip(shape) {
            match kind {
                Operand::Reg => regs.push(parse_reg(tok, reg_count).map_err(|k| InstrParseError::new(col, k))?),
                Operand::Imm => imm = parse_imm(tok).map_err(|k| InstrParseError::new(col, k))?,
            }
        }
        let r = |i: usize| regs[i];
        Ok(match op {
            "halt" => Instr::Halt,
            "noop" => Instr::Noop,
            "tsx-end" => Instr::TsxEnd,
            "loadi" => Instr::Loadi { rd: r(0), c: imm },
            "addi" => Instr::Addi { rd: r(0), r1: r(1), c: imm },
            "ldri" => Instr::Ldri { rd: r(0), r1: r(1), c: imm },
            "add" => Instr::Add { rd: r(0), r1: r(1), r2: r(2) },
            "mul" => Instr::Mul { rd: r(0), r1: r(1), r2: r(2) },
            "and" => Instr::And { rd: r(0), r1: r(1), r2: r(2) },
            "cmp" => Instr::Cmp { rd: r(0), r1: r(1), r2: r(2) },
            "ldr" => Instr::Ldr { rd: r(0), r1: r(1), r2: r(2) },
            "in-cache" => Instr::InCache { rd: r(0), r1: r(1), r2: r(2) },
            "jg" => Instr::Jg { r1: r(0), c: imm },
            "jge" => Instr::Jge { r1: r(0), c: imm },
            "tsx-start" => Instr::TsxStart { c: imm },
            _ => unreachable!("mnemonic matched above"),
        })
    }
}

impl fmt::Display for Instr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let m = self.mnemonic();
        match *self {
            Instr::Halt | Instr::Noop | Instr::TsxEnd => write!(f, "{m}"),
            Instr::Loadi { rd, c } => write!(f, "{m} {rd} {c}"),
            Instr::Addi { rd, r1, c } | Instr::Ldri { rd, r1, c } => write!(f, "{m} {rd} {r1} {c}"),
            Instr::Add { rd, r1, r2 }
            | Instr::Mul { rd, r1, r2 }
            | Instr::And { rd, r1, r2 }
            | Instr::Cmp { rd, r1, r2 }
            | Instr::Ldr { rd, r1, r2 }
            | Instr::InCache { rd, r1, r2 } => write!(f, "{m} {rd} {r1} {r2}"),
            // offsets are relative, so show them signed
            Instr::Jg { r1, c } | Instr::Jge { r1, c } => write!(f, "{m} {r1} {}", c as i32),
            Instr::TsxStart { c } => write!(f, "{m} {c}"),
        }
    }
}

#[derive(Clone, Copy)]
enum Operand {
    Reg,
    Imm,
}

/// Splits on whitespace and commas, keeping 1-based columns.
fn tokenize(text: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, ch) in text.char_indices() {
        let sep = ch.is_whitespace() || ch == ',';
        match (sep, start) {
            (true, Some(s)) => {
                out.push((s + 1, &text[s..i]));
                start = None;
            }
            (false, None) => start = Some(i),
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push((s + 1, &text[s..]));
    }
    out
}

/// Parses `r<k>` with `k < reg_count`.
pub fn parse_reg(tok: &str, reg_count: usize) -> Result<Reg, ParseErrorKind> {
    let idx = tok
        .strip_prefix('r')
        .filter(|d| !d.is_empty() && d.bytes().all(|b| b.is_ascii_digit()))
        .and_then(|d| d.parse::<usize>().ok())
        .ok_or_else(|| ParseErrorKind::BadRegister(tok.to_string()))?;
    if idx >= reg_count || idx > u8::MAX as usize {
        return Err(ParseErrorKind::UnknownRegister(tok.to_string()));
    }
    Ok(Reg(idx as u8))
}

/// Parses a decimal, `0x` hexadecimal, or negative decimal immediate.
/// Negative values wrap to their two's-complement word.
pub fn parse_imm(tok: &str) -> Result<Word, ParseErrorKind> {
    let bad = || ParseErrorKind::BadImmediate(tok.to_string());
    let overflow = || ParseErrorKind::ImmediateOverflow(tok.to_string());
    let (neg, body) = match tok.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, tok),
    };
    let (digits, radix) = match body.strip_prefix("0x").or_else(|| body.strip_prefix("0X")) {
        Some(h) => (h, 16),
        None => (body, 10),
    };
    if digits.is_empty() || !digits.chars().all(|c| c.is_digit(radix)) {
        return Err(bad());
    }
    let mag = u64::from_str_radix(digits, radix).map_err(|_| overflow())?;
    if neg {
        if mag > 1 << 31 {
            return Err(overflow());
        }
        Ok((mag as u32).wrapping_neg())
    } else {
        u32::try_from(mag).map_err(|_| overflow())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum ParseErrorKind {
    #[error("empty instruction")]
    Empty,
    #[error("unknown instruction `{0}`")]
    UnknownOp(String),
    #[error("`{op}` takes {expected} operand(s), found {found}")]
    Arity { op: String, expected: usize, found: usize },
    #[error("malformed register `{0}`")]
    BadRegister(String),
    #[error("unknown register `{0}`")]
    UnknownRegister(String),
    #[error("malformed immediate `{0}`")]
    BadImmediate(String),
    #[error("immediate `{0}` does not fit in 32 bits")]
    ImmediateOverflow(String),
}

/// Instruction parse error with the 1-based column of the offending token.
#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("column {column}: {kind}")]
pub struct InstrParseError {
    pub column: usize,
    pub kind: ParseErrorKind,
}

impl InstrParseError {
    fn new(column: usize, kind: ParseErrorKind) -> Self {
        InstrParseError { column, kind }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn immediates() {
        assert_eq!(parse_imm("16"), Ok(16));
        assert_eq!(parse_imm("0x10"), Ok(16));
        assert_eq!(parse_imm("-1"), Ok(u32::MAX));
        assert_eq!(parse_imm("-2147483648"), Ok(0x8000_0000));
        assert!(matches!(parse_imm("-2147483649"), Err(ParseErrorKind::ImmediateOverflow(_))));
        assert!(matches!(parse_imm("4294967296"), Err(ParseErrorKind::ImmediateOverflow(_))));
        assert!(matches!(parse_imm("0x"), Err(ParseErrorKind::BadImmediate(_))));
        assert!(matches!(parse_imm("12a"), Err(ParseErrorKind::BadImmediate(_))));
    }

    #[test]
    fn error_columns() {
        let e = Instr::parse("add r1 r2 r99", 12).unwrap_err();
        assert_eq!(e.column, 11);
        assert!(matches!(e.kind, ParseErrorKind::UnknownRegister(_)));
        let e = Instr::parse("  frob r1", 12).unwrap_err();
        assert_eq!(e.column, 3);
        let e = Instr::parse("loadi r1", 12).unwrap_err();
        assert!(matches!(e.kind, ParseErrorKind::Arity { expected: 2, found: 1, .. }));
    }

    #[test]
    fn display_parses_back() {
        let i = Instr::Ldri { rd: Reg(0), r1: Reg(2), c: 16 };
        assert_eq!(i.to_string(), "ldri r0 r2 16");
        assert_eq!(Instr::parse(&i.to_string(), 12), Ok(i));
        assert_eq!(Instr::parse("in-cache r1, r2, r3", 12).unwrap().to_string(), "in-cache r1 r2 r3");
    }
}
