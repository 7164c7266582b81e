//! Snapshot records for histories, appended after an MA snapshot.

use tea_isa::snapshot::{hex, parse_hex, SnapshotError, SnapshotReader, SnapshotWriter};
use tea_isa::{PartialMem, Word};
use tea_ma::snapshot::{parse_rob_tag, parse_rs_tag, read_ma, write_ma};
use tea_ma::MaState;

use crate::history::{History, Status, StatusLine};

fn cache_text(c: &PartialMem) -> String {
    c.iter().map(|(a, v)| format!("{}:{}", hex(*a), hex(*v))).collect::<Vec<_>>().join(",")
}

fn parse_cache(s: &str) -> Option<PartialMem> {
    if s.is_empty() {
        return Some(PartialMem::new());
    }
    s.split(',')
        .map(|e| {
            let (a, v) = e.split_once(':')?;
            Some((parse_hex(a)?, parse_hex(v)?))
        })
        .collect()
}

fn status_text(st: &Status) -> String {
    match st {
        Status::Fetch { pc, rsi, exec } => {
            let rs = rsi.map_or_else(|| "-".to_string(), |r| r.to_string());
            format!("fetch:{}:{rs}:{}", hex(*pc), *exec as u8)
        }
        Status::Exec => "exec".into(),
        Status::WrB(c) => format!("wr-b[{}]", cache_text(c)),
        Status::Delay => "delay".into(),
        Status::PostComm => "post-comm".into(),
    }
}

fn parse_status(s: &str) -> Option<Status> {
    match s {
        "exec" => return Some(Status::Exec),
        "delay" => return Some(Status::Delay),
        "post-comm" => return Some(Status::PostComm),
        _ => {}
    }
    if let Some(body) = s.strip_prefix("wr-b[") {
        return parse_cache(body.strip_suffix(']')?).map(Status::WrB);
    }
    let mut parts = s.strip_prefix("fetch:")?.split(':');
    let pc = parse_hex(parts.next()?)?;
    let rsi = match parts.next()? {
        "-" => None,
        t => Some(parse_rs_tag(t)?),
    };
    let exec = match parts.next()? {
        "0" => false,
        "1" => true,
        _ => return None,
    };
    parts.next().is_none().then_some(Status::Fetch { pc, rsi, exec })
}

fn line_text(l: &StatusLine) -> String {
    let sts: Vec<String> = l.statuses.iter().map(status_text).collect();
    format!("{} {} {}", l.id, hex(l.pc), sts.join(" "))
}

fn parse_line(s: &str) -> Option<StatusLine> {
    let mut toks = s.split_whitespace();
    let id = parse_rob_tag(toks.next()?)?;
    let pc = parse_hex(toks.next()?)?;
    let statuses = toks.map(parse_status).collect::<Option<Vec<_>>>()?;
    (!statuses.is_empty()).then_some(StatusLine { id, pc, statuses })
}

pub fn write_history(w: &mut SnapshotWriter, h: &History) {
    w.word("h.comm-cy", h.comm_cy);
    w.word("h.start-cy", h.start_cy);
    w.map("h.comm-cache", h.comm_cache.iter().map(|(a, v)| (*a, hex(*v))));
    w.map("h.ch-eff", h.ch_eff.iter().map(|(t, c)| (t.0 as Word, cache_text(c))));
    w.map("h.lines", h.lines.iter().enumerate().map(|(i, l)| (i as Word, line_text(l))));
}

pub fn read_history(r: &mut SnapshotReader<'_>) -> Result<History, SnapshotError> {
    let comm_cy = r.word("h.comm-cy")?;
    let start_cy = r.word("h.start-cy")?;
    let comm_cache = r.word_map("h.comm-cache")?;
    let mut ch_eff = std::collections::BTreeMap::new();
    for (t, text) in r.map("h.ch-eff")? {
        let c = parse_cache(text).ok_or_else(|| r.prev_error(format!("bad cache effect `{text}`")))?;
        ch_eff.insert(tea_ma::RobTag(t as u16), c);
    }
    let lines = r
        .map("h.lines")?
        .into_iter()
        .map(|(_, t)| parse_line(t).ok_or_else(|| r.prev_error(format!("bad history line `{t}`"))))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(History { comm_cy, start_cy, comm_cache, ch_eff, lines })
}

/// A pipeline state together with its history.
pub fn mah_to_snapshot(s: &MaState, h: &History) -> String {
    let mut w = SnapshotWriter::new();
    write_ma(&mut w, s);
    write_history(&mut w, h);
    w.finish()
}

pub fn mah_from_snapshot(text: &str) -> Result<(MaState, History), SnapshotError> {
    let mut r = SnapshotReader::new(text);
    let s = read_ma(&mut r)?;
    let h = read_history(&mut r)?;
    if !r.at_end() {
        return Err(r.error("trailing records"));
    }
    Ok((s, h))
}
