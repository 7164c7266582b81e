//! Test cases and their replay bundles.
//!
//! A case is everything needed to re-run one trial: the seed state (which
//! carries the program, data and access layout), how many history-machine
//! steps to take after invalidating it, and how many steps to check from
//! there. A bundle is a case written in the snapshot line format, preceded
//! by the property it was checked against and the obligation it violated.

use tea_isa::snapshot::{SnapshotError, SnapshotReader, SnapshotWriter};
use tea_ma::snapshot::{read_ma, write_ma};
use tea_ma::MaState;
use tea_refine::{AuthSpec, Obligation};
use tea_variants::History;

use crate::gen::entangle;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Case {
    pub seed: MaState,
    pub forward: u32,
    pub horizon: usize,
}

impl Case {
    /// The entangled state the checks start from.
    pub fn start(&self) -> (MaState, History) {
        entangle(&self.seed, self.forward)
    }

    /// Instructions in the program.
    pub fn program_len(&self) -> usize {
        self.seed.arch.imem.len()
    }
}

const MAGIC: &str = "tea-bundle";
const VERSION: u32 = 1;

/// A counterexample bundle.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Bundle {
    pub property: String,
    pub auth: AuthSpec,
    pub obligation: Obligation,
    pub tea: bool,
    pub case: Case,
}

impl Bundle {
    pub fn to_text(&self) -> String {
        let mut w = SnapshotWriter::new();
        w.field(MAGIC, VERSION);
        w.field("property", &self.property);
        w.field("auth", self.auth);
        w.field("obligation", self.obligation);
        w.flag("tea", self.tea);
        w.field("forward", self.case.forward);
        w.field("horizon", self.case.horizon);
        write_ma(&mut w, &self.case.seed);
        w.finish()
    }

    pub fn from_text(text: &str) -> Result<Bundle, SnapshotError> {
        let mut r = SnapshotReader::new(text);
        let version = r.take(MAGIC)?;
        if version != VERSION.to_string() {
            return Err(r.prev_error(format!("unsupported bundle version {version}")));
        }
        let property = r.take("property")?.to_string();
        let auth = r.take("auth")?.parse().map_err(|e: String| r.prev_error(e))?;
        let ob = r.take("obligation")?;
        let obligation = Obligation::from_name(ob).ok_or_else(|| r.prev_error(format!("unknown obligation `{ob}`")))?;
        let tea = r.flag("tea")?;
        let forward = r.take("forward")?.parse().map_err(|_| r.prev_error("bad forward count"))?;
        let horizon = r.take("horizon")?.parse().map_err(|_| r.prev_error("bad horizon"))?;
        let seed = read_ma(&mut r)?;
        if !r.at_end() {
            return Err(r.error("trailing records"));
        }
        Ok(Bundle { property, auth, obligation, tea, case: Case { seed, forward, horizon } })
    }
}
