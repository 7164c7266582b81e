//! Text assembly for TEA programs.
//!
//! A source file is a sequence of lines. Each line holds at most one
//! directive, label or instruction, optionally followed by a `;` comment:
//!
//! ```text
//! .equ KERNEL 0x1000      ; named constant
//! .org 0x40               ; address of the first instruction (default 0)
//! .entry start            ; initial pc (default: the .org address)
//! .access 0 0xfff         ; accessible range, inclusive; repeatable
//! .data KERNEL 42         ; one data word
//! start:
//!         loadi r1 KERNEL
//!         jge r9 start    ; jump operands are relative; labels resolve to pc offsets
//! ```
//!
//! Without any `.access` directive the whole address space is accessible;
//! `.access none` makes nothing accessible. The full grammar lives in
//! `GRAMMAR.md` next to this crate's manifest.
//!
//! [`render`] prints a [`Program`] back as source that parses to the same
//! value, and [`emit_isa`] / [`emit_ma`] build initial machine states.

pub mod corpus;

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::sync::Arc;

use tea_isa::instr::parse_imm;
use tea_isa::{AccessPredicate, Imem, Instr, IsaState, ParseErrorKind, Word, DEFAULT_REG_COUNT};
use tea_ma::{MaParams, MaState};

/// An assembled program: code, data and the memory layout it expects.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Program {
    /// Address of `instrs[0]`.
    pub base: Word,
    pub instrs: Vec<Instr>,
    /// Initial data memory, in source order. Addresses are distinct.
    pub data: Vec<(Word, Word)>,
    /// Inclusive accessible ranges. Empty means nothing is accessible.
    pub access: Vec<(Word, Word)>,
    pub entry: Word,
}

impl Program {
    /// A program with the given code at address 0, no data, and everything
    /// accessible.
    pub fn from_instrs(instrs: Vec<Instr>) -> Program {
        Program { base: 0, instrs, data: Vec::new(), access: vec![(0, Word::MAX)], entry: 0 }
    }

    pub fn imem(&self) -> Imem {
        self.instrs.iter().enumerate().map(|(i, &x)| (self.base.wrapping_add(i as Word), x)).collect()
    }

    pub fn dmem(&self) -> BTreeMap<Word, Word> {
        self.data.iter().copied().collect()
    }

    pub fn access_predicate(&self) -> AccessPredicate {
        AccessPredicate::from_ranges(self.access.iter().copied())
    }

    /// Address one past the last instruction.
    pub fn end(&self) -> Word {
        self.base.wrapping_add(self.instrs.len() as Word)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum AsmErrorKind {
    #[error(transparent)]
    Instr(#[from] ParseErrorKind),
    #[error("unknown directive `{0}`")]
    UnknownDirective(String),
    #[error("`{directive}` takes {expected} operand(s), found {found}")]
    DirectiveArity { directive: &'static str, expected: usize, found: usize },
    #[error("`.org` must come before the first instruction")]
    OrgAfterCode,
    #[error("`{0}` given more than once")]
    Duplicate(&'static str),
    #[error("symbol `{0}` defined more than once")]
    DuplicateSymbol(String),
    #[error("undefined symbol `{0}`")]
    UndefinedSymbol(String),
    #[error("malformed label `{0}`")]
    BadLabel(String),
    #[error("data address {0:#x} given more than once")]
    DuplicateData(Word),
    #[error("empty range {lo:#x}..{hi:#x}")]
    EmptyRange { lo: Word, hi: Word },
}

/// An assembly error at a 1-based line and column.
#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("line {line}, column {column}: {kind}")]
pub struct AsmError {
    pub line: usize,
    pub column: usize,
    pub kind: AsmErrorKind,
}

/// A whitespace- or comma-separated token and its 1-based column.
#[derive(Clone, Copy, Debug)]
struct Tok<'a> {
    col: usize,
    text: &'a str,
}

fn tokens(line: &str) -> Vec<Tok<'_>> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, ch) in line.char_indices() {
        if ch.is_whitespace() || ch == ',' {
            if let Some(s) = start.take() {
                out.push(Tok { col: s + 1, text: &line[s..i] });
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        out.push(Tok { col: s + 1, text: &line[s..] });
    }
    out
}

fn is_symbol(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '.')
}

enum Line<'a> {
    Instr { line: usize, pc: Word, toks: Vec<Tok<'a>> },
    Directive { line: usize, toks: Vec<Tok<'a>> },
}

struct Assembler {
    symbols: BTreeMap<String, Word>,
}

impl Assembler {
    /// Resolves a numeric literal or a symbol.
    fn value(&self, line: usize, t: Tok<'_>) -> Result<Word, AsmError> {
        let err = |kind| AsmError { line, column: t.col, kind };
        if is_symbol(t.text) {
            return self.symbols.get(t.text).copied().ok_or_else(|| err(AsmErrorKind::UndefinedSymbol(t.text.into())));
        }
        parse_imm(t.text).map_err(|k| err(k.into()))
    }

    fn instr(&self, line: usize, pc: Word, toks: &[Tok<'_>]) -> Result<Instr, AsmError> {
        let op = toks[0].text;
        // Substitute symbols, then hand the canonical text to the instruction
        // parser. Each rewritten token remembers its source column.
        let mut text = String::from(op);
        let mut cols = vec![(1, toks[0].col)];
        for (i, t) in toks.iter().enumerate().skip(1) {
            let sym = is_symbol(t.text) && !looks_like_reg(t.text);
            let word = if sym {
                let v = self.value(line, *t)?;
                // a label operand of a jump means "jump to the label"
                if matches!(op, "jg" | "jge") && i == 2 {
                    v.wrapping_sub(pc).to_string()
                } else {
                    v.to_string()
                }
            } else {
                t.text.to_string()
            };
            text.push(' ');
            cols.push((text.len() + 1, t.col));
            text.push_str(&word);
        }
        Instr::parse(&text, DEFAULT_REG_COUNT).map_err(|e| {
            let column = cols.iter().rev().find(|&&(c, _)| c <= e.column).map_or(toks[0].col, |&(_, src)| src);
            AsmError { line, column, kind: e.kind.into() }
        })
    }
}

fn looks_like_reg(s: &str) -> bool {
    s.strip_prefix('r').is_some_and(|d| !d.is_empty() && d.bytes().all(|b| b.is_ascii_digit()))
}

/// Parses assembly source into a [`Program`].
pub fn parse(text: &str) -> Result<Program, AsmError> {
    let mut asm = Assembler { symbols: BTreeMap::new() };
    let mut base: Option<Word> = None;
    let mut lines = Vec::new();
    let mut count: Word = 0;
    let mut labels: Vec<(&str, usize, usize, Word)> = Vec::new();

    // First pass: symbols, `.org`, and instruction addresses.
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let body = raw.split(';').next().unwrap_or("");
        let mut toks = tokens(body);
        if let Some(first) = toks.first().copied() {
            if let Some(name) = first.text.strip_suffix(':') {
                if !is_symbol(name) || looks_like_reg(name) {
                    return Err(AsmError { line, column: first.col, kind: AsmErrorKind::BadLabel(name.into()) });
                }
                if labels.iter().any(|(n, ..)| *n == name) {
                    return Err(AsmError { line, column: first.col, kind: AsmErrorKind::DuplicateSymbol(name.into()) });
                }
                labels.push((name, line, first.col, count));
                toks.remove(0);
            }
        }
        let Some(first) = toks.first().copied() else { continue };
        match first.text {
            ".org" => {
                expect_arity(line, &toks, ".org", 1)?;
                if count > 0 {
                    return Err(AsmError { line, column: first.col, kind: AsmErrorKind::OrgAfterCode });
                }
                if base.is_some() {
                    return Err(AsmError { line, column: first.col, kind: AsmErrorKind::Duplicate(".org") });
                }
                base = Some(asm.value(line, toks[1])?);
            }
            ".equ" => {
                expect_arity(line, &toks, ".equ", 2)?;
                let name = toks[1];
                if !is_symbol(name.text) || looks_like_reg(name.text) {
                    return Err(AsmError { line, column: name.col, kind: AsmErrorKind::BadLabel(name.text.into()) });
                }
                let v = asm.value(line, toks[2])?;
                define(&mut asm, line, name.col, name.text, v)?;
            }
            d if d.starts_with('.') => lines.push(Line::Directive { line, toks }),
            _ => {
                let pc = base.unwrap_or(0).wrapping_add(count);
                count = count.wrapping_add(1);
                lines.push(Line::Instr { line, pc, toks });
            }
        }
    }

    // Second pass: everything that may refer to a label.
    let base = base.unwrap_or(0);
    for (name, line, col, off) in labels {
        define(&mut asm, line, col, name, base.wrapping_add(off))?;
    }
    let mut p = Program { base, instrs: Vec::new(), data: Vec::new(), access: Vec::new(), entry: base };
    let mut entry_seen = false;
    let mut access_seen = false;
    for l in &lines {
        match l {
            Line::Instr { line, pc, toks } => p.instrs.push(asm.instr(*line, *pc, toks)?),
            Line::Directive { line, toks } => {
                let line = *line;
                let at = |t: &Tok<'_>, kind| AsmError { line, column: t.col, kind };
                match toks[0].text {
                    ".entry" => {
                        expect_arity(line, toks, ".entry", 1)?;
                        if entry_seen {
                            return Err(at(&toks[0], AsmErrorKind::Duplicate(".entry")));
                        }
                        entry_seen = true;
                        p.entry = asm.value(line, toks[1])?;
                    }
                    ".data" => {
                        expect_arity(line, toks, ".data", 2)?;
                        let a = asm.value(line, toks[1])?;
                        let v = asm.value(line, toks[2])?;
                        if p.data.iter().any(|&(b, _)| b == a) {
                            return Err(at(&toks[1], AsmErrorKind::DuplicateData(a)));
                        }
                        p.data.push((a, v));
                    }
                    ".access" if toks.len() == 2 && toks[1].text == "none" => {
                        access_seen = true;
                    }
                    ".access" => {
                        expect_arity(line, toks, ".access", 2)?;
                        let lo = asm.value(line, toks[1])?;
                        let hi = asm.value(line, toks[2])?;
                        if lo > hi {
                            return Err(at(&toks[1], AsmErrorKind::EmptyRange { lo, hi }));
                        }
                        access_seen = true;
                        p.access.push((lo, hi));
                    }
                    other => return Err(at(&toks[0], AsmErrorKind::UnknownDirective(other.into()))),
                }
            }
        }
    }
    if !access_seen {
        p.access.push((0, Word::MAX));
    }
    Ok(p)
}

fn define(asm: &mut Assembler, line: usize, column: usize, name: &str, v: Word) -> Result<(), AsmError> {
    if asm.symbols.insert(name.to_string(), v).is_some() {
        return Err(AsmError { line, column, kind: AsmErrorKind::DuplicateSymbol(name.into()) });
    }
    Ok(())
}

fn expect_arity(line: usize, toks: &[Tok<'_>], directive: &'static str, expected: usize) -> Result<(), AsmError> {
    let found = toks.len() - 1;
    if found == expected {
        return Ok(());
    }
    let column = toks.get(expected + 1).unwrap_or(&toks[0]).col;
    Err(AsmError { line, column, kind: AsmErrorKind::DirectiveArity { directive, expected, found } })
}

/// Prints `p` as assembly source. `parse(&render(p)) == Ok(p)` for every
/// program whose data addresses are distinct and whose ranges are nonempty.
pub fn render(p: &Program) -> String {
    let mut out = String::new();
    let _ = writeln!(out, ".org {:#x}", p.base);
    let _ = writeln!(out, ".entry {:#x}", p.entry);
    if p.access.is_empty() {
        out.push_str(".access none\n");
    }
    for &(lo, hi) in &p.access {
        let _ = writeln!(out, ".access {lo:#x} {hi:#x}");
    }
    for &(a, v) in &p.data {
        let _ = writeln!(out, ".data {a:#x} {v}");
    }
    for i in &p.instrs {
        let _ = writeln!(out, "    {i}");
    }
    out
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&render(self))
    }
}

/// Initial ISA state for `p`: zeroed registers, empty cache, pc at the entry.
pub fn emit_isa(p: &Program) -> IsaState {
    IsaState::new(p.entry, DEFAULT_REG_COUNT, Arc::new(p.imem()), Arc::new(p.dmem()), Arc::new(p.access_predicate()))
}

/// Initial MA state for `p`: the ISA state of [`emit_isa`] with an empty
/// pipeline and `fetch-pc` at the entry.
pub fn emit_ma(p: &Program, params: Arc<MaParams>) -> MaState {
    MaState::new(emit_isa(p), params)
}
