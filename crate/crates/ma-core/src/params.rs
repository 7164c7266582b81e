//! Machine parameters, cyclic tag spaces, and prefetch policies.

use std::fmt;

use tea_isa::{AccessPredicate, Word};

use crate::uop::MicroOp;

/// Reorder-buffer tag. Tags live in a cyclic space of `MAX-ROB + 1`
/// elements; arithmetic on them goes through [`MaParams`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RobTag(pub u16);

/// Reservation-station tag; doubles as the station's index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RsTag(pub u16);

impl fmt::Display for RobTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "b{}", self.0)
    }
}

impl fmt::Display for RsTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "s{}", self.0)
    }
}

/// Prefetcher attached to the load path.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Prefetch {
    /// No prefetching.
    Null,
    /// The next `lines` consecutive addresses.
    NextLine { lines: u32 },
    /// `degree` addresses at multiples of `stride`.
    Stride { stride: Word, degree: u32 },
}

impl Prefetch {
    /// Prefetch set for a load of `a`, restricted to accessible addresses,
    /// ascending.
    pub fn targets(self, a: Word, ga: &AccessPredicate) -> Vec<Word> {
        let mut out: Vec<Word> = match self {
            Prefetch::Null => vec![],
            Prefetch::NextLine { lines } => (1..=lines).map(|i| a.wrapping_add(i)).collect(),
            Prefetch::Stride { stride, degree } => {
                (1..=degree).map(|i| a.wrapping_add(stride.wrapping_mul(i))).collect()
            }
        };
        out.retain(|&x| ga.contains(x));
        out.sort_unstable();
        out.dedup();
        out
    }
}

impl fmt::Display for Prefetch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Prefetch::Null => write!(f, "null"),
            Prefetch::NextLine { lines } => write!(f, "next-line:{lines}"),
            Prefetch::Stride { stride, degree } => write!(f, "stride:{stride}:{degree}"),
        }
    }
}

impl std::str::FromStr for Prefetch {
    type Err = ParamError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || ParamError::BadValue { key: "prefetch".into(), value: s.into() };
        let parts: Vec<&str> = s.split(':').collect();
        let num = |t: &str| t.parse::<u32>().map_err(|_| bad());
        match parts.as_slice() {
            ["null"] => Ok(Prefetch::Null),
            ["next-line"] => Ok(Prefetch::NextLine { lines: 1 }),
            ["next-line", n] => Ok(Prefetch::NextLine { lines: num(n)? }),
            ["stride", st, d] => Ok(Prefetch::Stride { stride: num(st)?, degree: num(d)? }),
            _ => Err(bad()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum ParamError {
    #[error("unknown parameter `{0}`")]
    UnknownKey(String),
    #[error("bad value `{value}` for `{key}`")]
    BadValue { key: String, value: String },
    #[error("invalid parameters: {0}")]
    Invalid(String),
}

/// Static configuration of the microarchitecture.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MaParams {
    /// Instructions fetched per cycle, at most.
    pub fetch_num: usize,
    /// Largest number of micro-instructions one instruction decodes into.
    pub max_decode: usize,
    pub max_rob: usize,
    pub rs_count: usize,
    mop_time: [u32; MicroOp::ALL.len()],
    pub prefetch: Prefetch,
}

impl Default for MaParams {
    fn default() -> Self {
        let mut mop_time = [1; MicroOp::ALL.len()];
        mop_time[MicroOp::Mmul as usize] = 3;
        mop_time[MicroOp::Mldri as usize] = 2;
        mop_time[MicroOp::Mldr as usize] = 2;
        MaParams {
            fetch_num: 3,
            max_decode: 2,
            max_rob: 19,
            rs_count: 4,
            mop_time,
            prefetch: Prefetch::NextLine { lines: 1 },
        }
    }
}

impl MaParams {
    pub fn mop_time(&self, op: MicroOp) -> u32 {
        self.mop_time[op as usize]
    }

    pub fn set_mop_time(&mut self, op: MicroOp, cycles: u32) {
        self.mop_time[op as usize] = cycles;
    }

    pub fn max_mop_time(&self) -> u32 {
        self.mop_time.iter().copied().max().unwrap_or(1)
    }

    pub fn rob_tag_count(&self) -> u16 {
        (self.max_rob + 1) as u16
    }

    pub fn next_rob(&self, t: RobTag) -> RobTag {
        RobTag((t.0 + 1) % self.rob_tag_count())
    }

    pub fn prev_rob(&self, t: RobTag) -> RobTag {
        let n = self.rob_tag_count();
        RobTag((t.0 + n - 1) % n)
    }

    pub fn rob_tags(&self) -> impl Iterator<Item = RobTag> {
        (0..self.rob_tag_count()).map(RobTag)
    }

    pub fn rs_tags(&self) -> impl Iterator<Item = RsTag> {
        (0..self.rs_count as u16).map(RsTag)
    }

    /// Upper bound on how long any micro-instruction stays in flight:
    /// each ROB slot ahead of it can hold the head for at most one
    /// longest operation plus the issue and commit cycles.
    pub fn replay_bound(&self) -> u32 {
        self.max_rob as u32 * (self.max_mop_time() + 2) + 4
    }

    pub fn validate(&self) -> Result<(), ParamError> {
        let fail = |m: &str| Err(ParamError::Invalid(m.to_string()));
        if self.fetch_num == 0 {
            return fail("fetch-num must be at least 1");
        }
        if self.max_decode < 2 {
            return fail("max-decode must be at least 2 (loads decode into two micro-instructions)");
        }
        if self.max_rob < self.max_decode {
            return fail("max-rob must be at least max-decode");
        }
        if self.max_rob >= u16::MAX as usize {
            return fail("max-rob too large");
        }
        if self.rs_count == 0 || self.rs_count > u16::MAX as usize {
            return fail("rs-count must be positive");
        }
        if self.mop_time.contains(&0) {
            return fail("every mop-time must be positive");
        }
        Ok(())
    }

    /// Applies one `key=value` setting. Keys: `fetch-num`, `max-decode`,
    /// `max-rob`, `rs-count`, `prefetch`, and `mop-time.<micro-op>`.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ParamError> {
        let bad = || ParamError::BadValue { key: key.into(), value: value.into() };
        let num = || value.trim().parse::<usize>().map_err(|_| bad());
        match key.trim() {
            "fetch-num" => self.fetch_num = num()?,
            "max-decode" => self.max_decode = num()?,
            "max-rob" => self.max_rob = num()?,
            "rs-count" => self.rs_count = num()?,
            "prefetch" => self.prefetch = value.trim().parse()?,
            k => {
                let op = k
                    .strip_prefix("mop-time.")
                    .and_then(MicroOp::from_name)
                    .ok_or_else(|| ParamError::UnknownKey(k.to_string()))?;
                let t = u32::try_from(num()?).map_err(|_| bad())?;
                self.set_mop_time(op, t);
            }
        }
        Ok(())
    }

    /// Parses a `key=value` file layered over the defaults. Blank lines and
    /// `#` comments are skipped.
    pub fn from_kv(text: &str) -> Result<Self, ParamError> {
        let mut p = MaParams::default();
        p.apply_kv(text)?;
        Ok(p)
    }

    pub fn apply_kv(&mut self, text: &str) -> Result<(), ParamError> {
        for line in text.lines() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| ParamError::BadValue { key: line.into(), value: String::new() })?;
            self.set(k, v)?;
        }
        self.validate()
    }

    /// Renders every parameter in `key=value` form.
    pub fn to_kv(&self) -> String {
        let mut out = format!(
            "fetch-num={}\nmax-decode={}\nmax-rob={}\nrs-count={}\nprefetch={}\n",
            self.fetch_num, self.max_decode, self.max_rob, self.rs_count, self.prefetch
        );
        for op in MicroOp::ALL {
            out.push_str(&format!("mop-time.{}={}\n", op.name(), self.mop_time(op)));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tag_arithmetic() {
        let p = MaParams::default();
        assert_eq!(p.rob_tag_count(), 20);
        for t in p.rob_tags() {
            assert_eq!(p.next_rob(p.prev_rob(t)), t);
            assert_eq!(p.prev_rob(p.next_rob(t)), t);
        }
        assert_eq!(p.next_rob(RobTag(19)), RobTag(0));
    }

    #[test]
    fn kv_round_trip() {
        let mut p = MaParams::default();
        p.set("rs-count", "6").unwrap();
        p.set("mop-time.mmul", "5").unwrap();
        p.set("prefetch", "stride:4:2").unwrap();
        assert_eq!(MaParams::from_kv(&p.to_kv()).unwrap(), p);
        assert!(matches!(p.set("bogus", "1"), Err(ParamError::UnknownKey(_))));
        assert!(MaParams::from_kv("max-rob=1").is_err());
    }

    #[test]
    fn prefetch_targets() {
        let ga = AccessPredicate::from_ranges([(0, 9)]);
        assert_eq!(Prefetch::NextLine { lines: 1 }.targets(3, &ga), vec![4]);
        assert_eq!(Prefetch::NextLine { lines: 1 }.targets(9, &ga), Vec::<Word>::new());
        assert_eq!(Prefetch::Stride { stride: 4, degree: 3 }.targets(0, &ga), vec![4, 8]);
        assert!(Prefetch::Null.targets(0, &ga).is_empty());
    }
}
