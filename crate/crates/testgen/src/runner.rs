//! Trial runner, suites, and reports.
//!
//! Trials run in parallel, each on its own random stream split from the
//! root seed, and results are gathered in trial order, so a report depends
//! only on its configuration. Reports carry no timings.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;
use tea_asm::{corpus, emit_ma, Program};
use tea_refine::{AuthSpec, Violation};

use crate::case::{Bundle, Case};
use crate::config::GenConfig;
use crate::gen::{strip_in_cache, trial_rng};
use crate::property::{Counts, Property};
use crate::shrink::shrink;

/// Version of the report layout.
pub const REPORT_SCHEMA: u32 = 1;

/// Generated cases per property when no budget is given.
pub const DEFAULT_TRIALS: u64 = 5000;

/// Failures shrunk and reported in full per property; further failures
/// are only counted.
pub const MAX_REPORTED_FAILURES: usize = 3;

/// Steps checked for the bundled attack programs, enough to reach their
/// `halt`.
const CORPUS_HORIZON: usize = 4000;

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum RunError {
    #[error("unknown property `{0}`")]
    UnknownProperty(String),
    #[error("unknown suite `{0}`")]
    UnknownSuite(String),
}

/// A fixed case checked alongside the generated ones.
#[derive(Clone, Debug)]
pub struct CorpusCase {
    pub name: String,
    pub case: Case,
}

impl CorpusCase {
    /// A bundled program from its initial state.
    pub fn from_program(name: &str, p: &Program, cfg: &GenConfig) -> CorpusCase {
        let seed = emit_ma(p, Arc::new(cfg.params.clone()));
        CorpusCase { name: name.to_string(), case: Case { seed, forward: 0, horizon: CORPUS_HORIZON } }
    }
}

/// One property checked over `trials` generated cases plus a corpus.
#[derive(Clone, Debug)]
pub struct Job {
    /// Suite the job belongs to.
    pub suite: String,
    pub property: Property,
    pub cfg: GenConfig,
    pub trials: u64,
    pub corpus: Vec<CorpusCase>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Report {
    pub schema: u32,
    pub suite: String,
    pub seed: u64,
    pub trials: u64,
    pub properties: Vec<PropertyReport>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PropertyReport {
    pub suite: String,
    pub property: String,
    pub auth: String,
    pub strip_in_cache: bool,
    pub trials: u64,
    pub corpus: Vec<String>,
    pub passed: u64,
    pub failed: u64,
    /// Failures classified as transient-execution leaks.
    pub tea: u64,
    pub counts: Counts,
    pub failures: Vec<FailureReport>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FailureReport {
    /// `trial N` or `corpus NAME`.
    pub source: String,
    pub obligation: String,
    pub tea: bool,
    pub step: usize,
    pub detail: String,
    pub program_len: usize,
    pub shrunk: ShrunkReport,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ShrunkReport {
    pub program_len: usize,
    pub forward: u32,
    pub horizon: usize,
    pub shrink_steps: usize,
    pub step: usize,
    pub detail: String,
    /// Replay bundle for the shrunk case.
    pub bundle: String,
}

impl Report {
    pub fn failed(&self) -> u64 {
        self.properties.iter().map(|p| p.failed).sum()
    }

    pub fn tea(&self) -> u64 {
        self.properties.iter().map(|p| p.tea).sum()
    }

    /// 0 when every check passed, 1 when a counterexample was found.
    pub fn exit_code(&self) -> i32 {
        if self.failed() == 0 {
            0
        } else {
            1
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialise")
    }

    pub fn property(&self, name: &str) -> Option<&PropertyReport> {
        self.properties.iter().find(|p| p.property == name)
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "suite {} (seed {}, {} trials per property)", self.suite, self.seed, self.trials)?;
        for p in &self.properties {
            let mut tags = vec![format!("auth {}", p.auth)];
            if p.strip_in_cache {
                tags.push("in-cache removed".into());
            }
            if !p.corpus.is_empty() {
                tags.push(format!("corpus {}", p.corpus.join(",")));
            }
            let label = if p.suite == self.suite {
                p.property.clone()
            } else {
                format!("{}/{}", p.suite, p.property)
            };
            writeln!(
                f,
                "  {:<36} {:>6} passed {:>5} failed {:>5} leaks  [{}]",
                label,
                p.passed,
                p.failed,
                p.tea,
                tags.join("; ")
            )?;
            let c = &p.counts;
            writeln!(
                f,
                "  {:<36} states {} stutter {} commit {} in-cache {} isa-steps {}",
                "",
                c.states,
                c.stutter_transitions,
                c.commit_transitions,
                c.in_cache_checked,
                c.isa_steps
            )?;
            for x in &p.failures {
                writeln!(f, "    {}: {}{} at step {}: {}", x.source, x.obligation, if x.tea { " [leak]" } else { "" }, x.step, x.detail)?;
                writeln!(
                    f,
                    "      shrunk to {} instructions (from {}), {} forward steps: {}",
                    x.shrunk.program_len, x.program_len, x.shrunk.forward, x.shrunk.detail
                )?;
            }
        }
        let verdict = if self.failed() == 0 { "PASS".to_string() } else { format!("{} counterexample(s)", self.failed()) };
        writeln!(f, "result: {verdict}")
    }
}

enum Outcome {
    Pass(Counts),
    Fail { source: String, case: Box<Case>, violation: Violation },
}

/// Runs one job.
pub fn run_job(job: &Job) -> PropertyReport {
    let cfg = &job.cfg;
    let prop = job.property;
    let mut outcomes: Vec<Outcome> = (0..job.trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(cfg.seed, t);
            let case = prop.gen_case(cfg, &mut rng);
            match prop.check(&case, cfg) {
                Ok(c) => Outcome::Pass(c),
                Err(violation) => Outcome::Fail { source: format!("trial {t}"), case: Box::new(case), violation },
            }
        })
        .collect();
    outcomes.extend(job.corpus.par_iter().map(|cc| match prop.check(&cc.case, cfg) {
        Ok(c) => Outcome::Pass(c),
        Err(violation) => Outcome::Fail { source: format!("corpus {}", cc.name), case: Box::new(cc.case.clone()), violation },
    }).collect::<Vec<_>>());

    let mut counts = Counts::default();
    let (mut passed, mut failed, mut tea) = (0, 0, 0);
    let mut to_report = Vec::new();
    for o in &outcomes {
        match o {
            Outcome::Pass(c) => {
                passed += 1;
                counts.add(c);
            }
            Outcome::Fail { source, case, violation } => {
                failed += 1;
                tea += violation.tea as u64;
                if to_report.len() < MAX_REPORTED_FAILURES {
                    to_report.push((source, case, violation));
                }
            }
        }
    }
    // corpus failures are the most instructive, so they are reported first
    // even when generated trials already filled the quota
    if let Some(pos) = outcomes.iter().position(|o| matches!(o, Outcome::Fail { source, .. } if source.starts_with("corpus"))) {
        if let Outcome::Fail { source, case, violation } = &outcomes[pos] {
            if !to_report.iter().any(|(s, ..)| *s == source) {
                to_report.insert(0, (source, case, violation));
                to_report.truncate(MAX_REPORTED_FAILURES);
            }
        }
    }

    let failures = to_report
        .par_iter()
        .map(|&(source, case, v)| {
            let s = shrink(prop, cfg, case, v);
            // re-verify before reporting
            let again = prop.check(&s.case, cfg).expect_err("shrunk case no longer fails");
            assert!(again.obligation == v.obligation && again.tea == v.tea);
            let bundle = Bundle {
                property: prop.name().to_string(),
                auth: cfg.auth,
                obligation: again.obligation,
                tea: again.tea,
                case: s.case.clone(),
            };
            FailureReport {
                source: source.clone(),
                obligation: v.obligation.name().to_string(),
                tea: v.tea,
                step: v.step,
                detail: v.detail.clone(),
                program_len: case.program_len(),
                shrunk: ShrunkReport {
                    program_len: s.case.program_len(),
                    forward: s.case.forward,
                    horizon: s.case.horizon,
                    shrink_steps: s.steps,
                    step: again.step,
                    detail: again.detail,
                    bundle: bundle.to_text(),
                },
            }
        })
        .collect();

    PropertyReport {
        suite: job.suite.clone(),
        property: prop.name().to_string(),
        auth: cfg.auth.to_string(),
        strip_in_cache: cfg.strip_in_cache,
        trials: job.trials,
        corpus: job.corpus.iter().map(|c| c.name.clone()).collect(),
        passed,
        failed,
        tea,
        counts,
        failures,
    }
}

/// Checks property `name` over `trials` generated cases.
pub fn run_property(name: &str, cfg: &GenConfig, trials: u64) -> Result<Report, RunError> {
    let property = Property::from_name(name).ok_or_else(|| RunError::UnknownProperty(name.to_string()))?;
    let suite = format!("property:{name}");
    let job = Job { suite: suite.clone(), property, cfg: cfg.clone(), trials, corpus: Vec::new() };
    Ok(Report { schema: REPORT_SCHEMA, suite, seed: cfg.seed, trials, properties: vec![run_job(&job)] })
}

/// Suite names accepted by [`suite_jobs`].
pub const SUITES: [&str; 6] = ["entangled", "meltdown-buggy", "meltdown-safe", "spectre-buggy", "architecture", "all"];

/// The jobs making up a suite.
pub fn suite_jobs(name: &str, base: &GenConfig, trials: u64) -> Result<Vec<Job>, RunError> {
    let job = |property, cfg: GenConfig, corpus| Job { suite: name.to_string(), property, cfg, trials, corpus };
    Ok(match name {
        "entangled" => [Property::MaSubsetMan, Property::MahProjection, Property::InitEntangled, Property::Closure, Property::Replay]
            .into_iter()
            .map(|p| job(p, base.clone(), vec![]))
            .collect(),
        "meltdown-buggy" => {
            let cfg = GenConfig { strip_in_cache: false, ..base.clone() };
            let melt = CorpusCase::from_program("meltdown", &corpus::meltdown(), &cfg);
            vec![job(Property::Refinement, cfg, vec![melt])]
        }
        "meltdown-safe" => {
            let cfg = GenConfig { strip_in_cache: true, ..base.clone() };
            let mut p = corpus::meltdown();
            strip_in_cache(&mut p);
            let melt = CorpusCase::from_program("meltdown", &p, &cfg);
            vec![job(Property::Refinement, cfg.clone(), vec![melt]), job(Property::StutterWit, cfg, vec![])]
        }
        "spectre-buggy" => {
            let cfg = GenConfig { auth: AuthSpec::NonSpeculative, ..base.clone() };
            let spec = CorpusCase::from_program("spectre", &corpus::spectre(), &cfg);
            vec![job(Property::CacheAction, cfg, vec![spec])]
        }
        "architecture" => vec![
            job(Property::ArchOracle, base.clone(), vec![]),
            job(Property::InCacheInaccessible, base.clone(), vec![]),
        ],
        "all" => {
            let mut v = Vec::new();
            for s in SUITES.iter().filter(|&&s| s != "all") {
                v.extend(suite_jobs(s, base, trials)?);
            }
            v
        }
        other => return Err(RunError::UnknownSuite(other.to_string())),
    })
}

/// Runs a suite.
pub fn run_suite(name: &str, base: &GenConfig, trials: u64) -> Result<Report, RunError> {
    let jobs = suite_jobs(name, base, trials)?;
    let properties = jobs.iter().map(run_job).collect();
    Ok(Report { schema: REPORT_SCHEMA, suite: name.to_string(), seed: base.seed, trials, properties })
}

/// Re-checks a bundle. Returns the violation when the bundle still fails
/// the way it records, and `Ok(None)` when it passes.
pub fn replay_bundle(b: &Bundle, base: &GenConfig) -> Result<Option<Violation>, RunError> {
    let property = Property::from_name(&b.property).ok_or_else(|| RunError::UnknownProperty(b.property.clone()))?;
    let cfg = GenConfig { auth: b.auth, params: (*b.case.seed.params).clone(), ..base.clone() };
    Ok(property.check(&b.case, &cfg).err())
}
