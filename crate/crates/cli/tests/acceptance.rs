//! End-to-end acceptance checks, one verdict line per criterion.
//!
//! Verdicts are written straight to stderr so they show up in test logs
//! without `--nocapture`. The test fails if any criterion fails.

use std::io::Write as _;
use std::process::Command;
use std::time::Duration;

use serde_json::Value;
use tea_cli::bench::bench;
use tea_ma::MaParams;
use tea_testgen::{run_property, GenConfig, Report};

const SEED: u64 = 2024;

fn tea(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_tea")).args(args).env_remove("TEA_SEED").output().expect("run tea");
    (out.status.code().unwrap_or(-1), String::from_utf8(out.stdout).expect("utf-8 output"))
}

fn check_json(suite: &str) -> Value {
    let seed = SEED.to_string();
    let (code, out) = tea(&["check", "--suite", suite, "--seed", &seed, "--json"]);
    assert!(code == 0 || code == 1, "check --suite {suite} exited {code}");
    serde_json::from_str(&out).expect("json report")
}

fn sum(r: &Value, field: &str) -> u64 {
    r["properties"].as_array().unwrap().iter().map(|p| p[field].as_u64().unwrap()).sum()
}

fn prop<'a>(r: &'a Value, name: &str) -> &'a Value {
    r["properties"].as_array().unwrap().iter().find(|p| p["property"] == name).unwrap()
}

fn zero_failures(names: &[&str], trials: u64, cfg: &GenConfig) -> (bool, String) {
    let mut ok = true;
    let mut parts = Vec::new();
    for n in names {
        let r: Report = run_property(n, cfg, trials).unwrap();
        let p = &r.properties[0];
        ok &= p.failed == 0 && p.passed == trials;
        parts.push(format!("{n} {}/{}", p.passed, trials));
    }
    (ok, parts.join(", "))
}

struct Verdicts(Vec<bool>);

impl Verdicts {
    fn record(&mut self, n: usize, ok: bool, what: &str) {
        let _ = writeln!(std::io::stderr(), "{} criterion {n}: {what}", if ok { "PASS" } else { "FAIL" });
        self.0.push(ok);
    }
}

#[test]
fn acceptance_criteria() {
    let mut v = Verdicts(Vec::new());

    // 1: the buggy machine leaks, the safe one does not
    let buggy = check_json("meltdown-buggy");
    let spectre = check_json("spectre-buggy");
    let safe = check_json("meltdown-safe");
    let trials = buggy["trials"].as_u64().unwrap();
    let cache_fails = prop(&spectre, "cache-action")["failed"].as_u64().unwrap();
    v.record(
        1,
        trials <= 5000 && sum(&buggy, "tea") >= 1 && cache_fails >= 1 && sum(&safe, "tea") == 0,
        &format!(
            "{trials} trials: meltdown-buggy {} leak(s), spectre-buggy {cache_fails} cache-action violation(s), meltdown-safe {} leak(s)",
            sum(&buggy, "tea"),
            sum(&safe, "tea")
        ),
    );

    // 2: entangled-state obligations
    let cfg = GenConfig::with_seed(SEED);
    let (ok, what) = zero_failures(&["ma-subset-man", "mah-projection", "init-entangled", "closure"], 1000, &cfg);
    v.record(2, ok, &what);

    // 3: invalidate-and-replay over runs of up to 50 steps
    let replay_cfg = GenConfig { max_forward_steps: 50, ..cfg.clone() };
    let (ok, what) = zero_failures(&["replay"], 1000, &replay_cfg);
    v.record(3, ok, &what);

    // 4: kernel-free, in-cache-free programs end in the same state
    let (ok, what) = zero_failures(&["arch-oracle"], 500, &cfg);
    v.record(4, ok, &what);

    // 5: witnesses on the safe configuration
    let stutter = prop(&safe, "stutter-wit");
    let refine = prop(&safe, "refinement");
    let stutters = stutter["counts"]["stutter_transitions"].as_u64().unwrap();
    let commits = refine["counts"]["commit_transitions"].as_u64().unwrap();
    v.record(
        5,
        sum(&safe, "failed") == 0 && stutters >= 10_000 && commits >= 1_000,
        &format!("{stutters} non-retiring transitions decreased the witness, {commits} retiring transitions matched"),
    );

    // 6: in-cache on inaccessible addresses
    let r = run_property("in-cache-inaccessible", &cfg, 10_000).unwrap();
    let p = &r.properties[0];
    v.record(
        6,
        p.failed == 0 && p.counts.in_cache_checked >= 10_000,
        &format!("{} (state, address) pairs, {} failures", p.counts.in_cache_checked, p.failed),
    );

    // 7: throughput
    let b = bench(tea_asm::corpus::primality::N, MaParams::default(), Duration::from_millis(1500));
    let (ma, isa) = (b.ma.per_second(), b.isa.per_second());
    v.record(
        7,
        ma >= 10_000.0 && isa >= 200_000.0 && b.ratio() >= 10.0,
        &format!("ma {ma:.0} steps/s, isa {isa:.0} steps/s, ratio {:.1}", b.ratio()),
    );

    // 8: reports are byte-identical across runs
    let args = ["check", "--suite", "all", "--trials", "300", "--seed", "7", "--json"];
    let (a, b) = (tea(&args), tea(&args));
    let text_args = ["check", "--suite", "spectre-buggy", "--trials", "300", "--seed", "7"];
    let (c, d) = (tea(&text_args), tea(&text_args));
    v.record(8, a == b && c == d && !a.1.is_empty(), &format!("{} JSON bytes and {} text bytes identical", a.1.len(), c.1.len()));

    let failed: Vec<usize> = v.0.iter().enumerate().filter(|(_, ok)| !**ok).map(|(i, _)| i + 1).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
