//! Snapshot records for the pipeline, following the ISA snapshot format.

use std::collections::BTreeMap;
use std::sync::Arc;

use tea_isa::snapshot::{hex, opt_reg, parse_hex, read_isa, write_isa, SnapshotError, SnapshotReader, SnapshotWriter};
use tea_isa::{instr::parse_reg, Reg, Word};

use crate::params::{MaParams, RobTag, RsTag};
use crate::state::{MaState, RegStatus, ResStation, RobLine};
use crate::uop::MicroOp;

fn bit(b: bool) -> u8 {
    b as u8
}

fn opt_tag(t: Option<RobTag>) -> String {
    t.map_or_else(|| "-".to_string(), |t| t.to_string())
}

pub fn parse_rob_tag(s: &str) -> Option<RobTag> {
    s.strip_prefix('b')?.parse().ok().map(RobTag)
}

pub fn parse_rs_tag(s: &str) -> Option<RsTag> {
    s.strip_prefix('s')?.parse().ok().map(RsTag)
}

fn parse_opt_tag(s: &str) -> Option<Option<RobTag>> {
    if s == "-" {
        Some(None)
    } else {
        parse_rob_tag(s).map(Some)
    }
}

fn parse_bit(s: &str) -> Option<bool> {
    match s {
        "0" => Some(false),
        "1" => Some(true),
        _ => None,
    }
}

fn rob_line_text(l: &RobLine) -> String {
    format!("{} {} {} rdy={} val={} exc={}", l.id, l.mop, opt_reg(l.rdst), bit(l.rdy), hex(l.val), bit(l.excep))
}

fn rs_text(r: &ResStation) -> String {
    format!(
        "{} qj={} qk={} vj={} vk={} cpc={} busy={} exec={} dst={} pc={}",
        r.mop,
        opt_tag(r.qj),
        opt_tag(r.qk),
        hex(r.vj),
        hex(r.vk),
        hex(r.cpc),
        bit(r.busy),
        bit(r.exec),
        r.dst,
        hex(r.rb_pc)
    )
}

/// Splits `k=v` tokens after a fixed number of positional tokens.
fn fields(text: &str, positional: usize) -> Option<(Vec<&str>, BTreeMap<&str, &str>)> {
    let mut toks = text.split_whitespace();
    let pos: Vec<&str> = toks.by_ref().take(positional).collect();
    if pos.len() != positional {
        return None;
    }
    let mut kv = BTreeMap::new();
    for t in toks {
        let (k, v) = t.split_once('=')?;
        kv.insert(k, v);
    }
    Some((pos, kv))
}

fn parse_rob_line(text: &str, reg_count: usize) -> Option<RobLine> {
    let (pos, kv) = fields(text, 3)?;
    Some(RobLine {
        id: parse_rob_tag(pos[0])?,
        mop: MicroOp::from_name(pos[1])?,
        rdst: if pos[2] == "-" { None } else { Some(parse_reg(pos[2], reg_count).ok()?) },
        rdy: parse_bit(kv.get("rdy")?)?,
        val: parse_hex(kv.get("val")?)?,
        excep: parse_bit(kv.get("exc")?)?,
    })
}

fn parse_rs(id: RsTag, text: &str) -> Option<ResStation> {
    let (pos, kv) = fields(text, 1)?;
    Some(ResStation {
        id,
        mop: MicroOp::from_name(pos[0])?,
        qj: parse_opt_tag(kv.get("qj")?)?,
        qk: parse_opt_tag(kv.get("qk")?)?,
        vj: parse_hex(kv.get("vj")?)?,
        vk: parse_hex(kv.get("vk")?)?,
        cpc: parse_hex(kv.get("cpc")?)?,
        busy: parse_bit(kv.get("busy")?)?,
        exec: parse_bit(kv.get("exec")?)?,
        dst: parse_rob_tag(kv.get("dst")?)?,
        rb_pc: parse_hex(kv.get("pc")?)?,
    })
}

/// Writes the full MA state: architectural fields, then the pipeline.
pub fn write_ma(w: &mut SnapshotWriter, s: &MaState) {
    write_isa(w, &s.arch);
    w.map("rob", s.rob.iter().enumerate().map(|(i, l)| (i as Word, rob_line_text(l))));
    w.map("rs", s.rs.iter().map(|r| (r.id.0 as Word, rs_text(r))));
    w.map(
        "reg-st",
        s.reg_st.iter().map(|(r, st)| (r.0 as Word, format!("busy={} reorder={}", bit(st.busy), st.reorder))),
    );
    w.word("cyc", s.cyc);
    w.word("fetch-pc", s.fetch_pc);
    w.field("rob-next", s.rob_next);
    w.field("params", s.params.to_kv().trim_end().replace('\n', ","));
}

pub fn read_ma(r: &mut SnapshotReader<'_>) -> Result<MaState, SnapshotError> {
    let arch = read_isa(r)?;
    let n = arch.reg_count();
    let rob = r
        .map("rob")?
        .into_iter()
        .map(|(_, t)| parse_rob_line(t, n).ok_or_else(|| r.prev_error(format!("bad rob line `{t}`"))))
        .collect::<Result<Vec<_>, _>>()?;
    let rs = r
        .map("rs")?
        .into_iter()
        .map(|(i, t)| parse_rs(RsTag(i as u16), t).ok_or_else(|| r.prev_error(format!("bad station `{t}`"))))
        .collect::<Result<Vec<_>, _>>()?;
    let mut reg_st = BTreeMap::new();
    for (i, t) in r.map("reg-st")? {
        let (_, kv) = fields(t, 0).ok_or_else(|| r.prev_error("bad reg-st entry"))?;
        let busy = kv.get("busy").and_then(|b| parse_bit(b));
        let reorder = kv.get("reorder").and_then(|b| parse_rob_tag(b));
        match (busy, reorder) {
            (Some(busy), Some(reorder)) if (i as usize) < n => {
                reg_st.insert(Reg(i as u8), RegStatus { busy, reorder });
            }
            _ => return Err(r.prev_error(format!("bad reg-st entry `{t}`"))),
        }
    }
    let cyc = r.word("cyc")?;
    let fetch_pc = r.word("fetch-pc")?;
    let next = r.take("rob-next")?;
    let rob_next = parse_rob_tag(next).ok_or_else(|| r.prev_error("bad rob-next"))?;
    let params_text = r.take("params")?.replace(',', "\n");
    let params = MaParams::from_kv(&params_text).map_err(|e| r.prev_error(e.to_string()))?;
    if rs.len() != params.rs_count {
        return Err(r.prev_error("station count disagrees with rs-count"));
    }
    Ok(MaState { arch, rob, rs, reg_st, cyc, fetch_pc, rob_next, params: Arc::new(params) })
}

pub fn ma_to_snapshot(s: &MaState) -> String {
    let mut w = SnapshotWriter::new();
    write_ma(&mut w, s);
    w.finish()
}

pub fn ma_from_snapshot(text: &str) -> Result<MaState, SnapshotError> {
    let mut r = SnapshotReader::new(text);
    let s = read_ma(&mut r)?;
    if !r.at_end() {
        return Err(r.error("trailing records"));
    }
    Ok(s)
}
