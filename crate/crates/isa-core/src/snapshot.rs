//! Line-delimited snapshot format.
//!
//! Every field is one line, `key value`. Words are lowercase hex with a
//! `0x` prefix; maps are written `{k=v; k=v}` with keys sorted ascending.
//! The same helpers serialise the pipeline and history records of the
//! other crates, so whole machine states can be diffed line by line.

use std::fmt::Write as _;
use std::sync::Arc;

use crate::instr::{Instr, Reg};
use crate::state::{AccessPredicate, IsaState, PartialMem, TsxState};
use crate::Word;

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("snapshot line {line}: {msg}")]
pub struct SnapshotError {
    pub line: usize,
    pub msg: String,
}

/// Accumulates records.
#[derive(Default)]
pub struct SnapshotWriter {
    out: String,
}

impl SnapshotWriter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn field(&mut self, key: &str, value: impl std::fmt::Display) {
        let _ = writeln!(self.out, "{key} {value}");
    }

    pub fn word(&mut self, key: &str, w: Word) {
        self.field(key, hex(w));
    }

    pub fn flag(&mut self, key: &str, b: bool) {
        self.field(key, b);
    }

    /// Writes a map; the iterator must already be sorted by key.
    pub fn map<I, V>(&mut self, key: &str, entries: I)
    where
        I: IntoIterator<Item = (Word, V)>,
        V: std::fmt::Display,
    {
        let body: Vec<String> = entries.into_iter().map(|(k, v)| format!("{}={v}", hex(k))).collect();
        self.field(key, format_args!("{{{}}}", body.join("; ")));
    }

    pub fn words(&mut self, key: &str, ws: &[Word]) {
        self.map(key, ws.iter().enumerate().map(|(i, &w)| (i as Word, hex(w))));
    }

    pub fn finish(self) -> String {
        self.out
    }
}

pub fn hex(w: Word) -> String {
    format!("{w:#x}")
}

/// Sequential reader over records.
pub struct SnapshotReader<'a> {
    lines: Vec<(usize, &'a str, &'a str)>,
    pos: usize,
}

impl<'a> SnapshotReader<'a> {
    pub fn new(text: &'a str) -> Self {
        let lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
            .map(|(i, l)| {
                let l = l.trim();
                let (k, v) = l.split_once(' ').unwrap_or((l, ""));
                (i + 1, k, v.trim())
            })
            .collect();
        SnapshotReader { lines, pos: 0 }
    }

    pub fn line(&self) -> usize {
        self.lines.get(self.pos).map_or(0, |l| l.0)
    }

    pub fn error(&self, msg: impl Into<String>) -> SnapshotError {
        SnapshotError { line: self.line(), msg: msg.into() }
    }

    pub fn peek_key(&self) -> Option<&'a str> {
        self.lines.get(self.pos).map(|l| l.1)
    }

    pub fn at_end(&self) -> bool {
        self.pos >= self.lines.len()
    }

    /// Consumes the next record, which must carry `key`.
    pub fn take(&mut self, key: &str) -> Result<&'a str, SnapshotError> {
        match self.lines.get(self.pos) {
            Some(&(_, k, v)) if k == key => {
                self.pos += 1;
                Ok(v)
            }
            Some(&(_, k, _)) => Err(self.error(format!("expected `{key}`, found `{k}`"))),
            None => Err(self.error(format!("expected `{key}`, found end of snapshot"))),
        }
    }

    pub fn word(&mut self, key: &str) -> Result<Word, SnapshotError> {
        let v = self.take(key)?;
        parse_hex(v).ok_or_else(|| self.prev_error(format!("bad word `{v}`")))
    }

    pub fn flag(&mut self, key: &str) -> Result<bool, SnapshotError> {
        let v = self.take(key)?;
        v.parse().map_err(|_| self.prev_error(format!("bad flag `{v}`")))
    }

    pub fn map(&mut self, key: &str) -> Result<Vec<(Word, &'a str)>, SnapshotError> {
        let v = self.take(key)?;
        parse_map(v).ok_or_else(|| self.prev_error(format!("bad map for `{key}`")))
    }

    pub fn word_map(&mut self, key: &str) -> Result<PartialMem, SnapshotError> {
        let entries = self.map(key)?;
        entries
            .into_iter()
            .map(|(k, v)| parse_hex(v).map(|v| (k, v)).ok_or_else(|| self.prev_error(format!("bad word `{v}`"))))
            .collect()
    }

    pub fn words(&mut self, key: &str) -> Result<Vec<Word>, SnapshotError> {
        let m = self.word_map(key)?;
        if m.keys().copied().ne(0..m.len() as Word) {
            return Err(self.prev_error(format!("`{key}` must be indexed densely from 0")));
        }
        Ok(m.into_values().collect())
    }

    /// Error located at the record just consumed.
    pub fn prev_error(&self, msg: impl Into<String>) -> SnapshotError {
        let line = self.pos.checked_sub(1).and_then(|p| self.lines.get(p)).map_or(0, |l| l.0);
        SnapshotError { line, msg: msg.into() }
    }
}

pub fn parse_hex(s: &str) -> Option<Word> {
    let digits = s.strip_prefix("0x")?;
    Word::from_str_radix(digits, 16).ok()
}

fn parse_map(v: &str) -> Option<Vec<(Word, &str)>> {
    let body = v.strip_prefix('{')?.strip_suffix('}')?.trim();
    if body.is_empty() {
        return Some(vec![]);
    }
    body.split(';')
        .map(|e| {
            let (k, v) = e.trim().split_once('=')?;
            Some((parse_hex(k.trim())?, v.trim()))
        })
        .collect()
}

/// Writes the architectural fields of `s`.
pub fn write_isa(w: &mut SnapshotWriter, s: &IsaState) {
    w.word("pc", s.pc);
    w.words("rf", &s.rf);
    w.flag("tsx.active", s.tsx.active);
    w.words("tsx.rf", &s.tsx.fallback_rf);
    w.word("tsx.fb", s.tsx.fallback_pc);
    w.flag("halt", s.halt);
    w.map("imem", s.imem.iter().map(|(&a, i)| (a, i)));
    w.map("dmem", s.dmem.iter().map(|(&a, &d)| (a, hex(d))));
    w.field(
        "ga",
        s.ga.ranges().iter().map(|&(lo, hi)| format!("{}..{}", hex(lo), hex(hi))).collect::<Vec<_>>().join(" "),
    );
    w.map("cache", s.cache.iter().map(|(&a, &d)| (a, hex(d))));
}

/// Reads the fields written by [`write_isa`].
pub fn read_isa(r: &mut SnapshotReader<'_>) -> Result<IsaState, SnapshotError> {
    let pc = r.word("pc")?;
    let rf = r.words("rf")?;
    let active = r.flag("tsx.active")?;
    let fallback_rf = r.words("tsx.rf")?;
    let fallback_pc = r.word("tsx.fb")?;
    let halt = r.flag("halt")?;
    let reg_count = rf.len();
    if fallback_rf.len() != reg_count || reg_count == 0 {
        return Err(r.prev_error("register file sizes disagree"));
    }
    let mut imem = PartialMem::<Instr>::new();
    for (a, text) in r.map("imem")? {
        let i = Instr::parse(text, reg_count).map_err(|e| r.prev_error(format!("imem {}: {e}", hex(a))))?;
        imem.insert(a, i);
    }
    let dmem = r.word_map("dmem")?;
    let ga_text = r.take("ga")?;
    let mut ranges = Vec::new();
    for part in ga_text.split_whitespace() {
        let (lo, hi) = part
            .split_once("..")
            .and_then(|(lo, hi)| Some((parse_hex(lo)?, parse_hex(hi)?)))
            .ok_or_else(|| r.prev_error(format!("bad range `{part}`")))?;
        ranges.push((lo, hi));
    }
    let cache = r.word_map("cache")?;
    Ok(IsaState {
        pc,
        rf,
        tsx: TsxState { active, fallback_rf, fallback_pc },
        halt,
        imem: Arc::new(imem),
        dmem: Arc::new(dmem),
        ga: Arc::new(AccessPredicate::from_ranges(ranges)),
        cache,
    })
}

/// Serialises an ISA state on its own.
pub fn isa_to_snapshot(s: &IsaState) -> String {
    let mut w = SnapshotWriter::new();
    write_isa(&mut w, s);
    w.finish()
}

pub fn isa_from_snapshot(text: &str) -> Result<IsaState, SnapshotError> {
    let mut r = SnapshotReader::new(text);
    let s = read_isa(&mut r)?;
    if !r.at_end() {
        return Err(r.error("trailing records"));
    }
    Ok(s)
}

/// Renders an optional register as `rN` or `-`.
pub fn opt_reg(r: Option<Reg>) -> String {
    r.map_or_else(|| "-".to_string(), |r| r.to_string())
}
