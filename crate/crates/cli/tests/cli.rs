use std::path::PathBuf;
use std::process::Command;

use tea_asm::corpus::{self, meltdown, primality};
use tea_cli::args::Machine;
use tea_cli::demo::{meltdown_demo, spectre_demo};
use tea_cli::run::simulate;
use tea_cli::{code, load_params};
use tea_ma::MaParams;

fn tea(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_tea")).args(args).env_remove("TEA_SEED").output().unwrap();
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

fn scratch(name: &str, text: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("tea-cli-tests-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn is_prime(n: u32) -> bool {
    n >= 2 && (2..n).take_while(|d| d * d <= n).all(|d| !n.is_multiple_of(d))
}

#[test]
fn primality_agrees_across_machines() {
    for n in [2, 9, 91, 97, 121, 997] {
        let p = corpus::primality_of(n);
        let isa = simulate(&p, Machine::Isa, MaParams::default(), 1 << 24, None).unwrap();
        let ma = simulate(&p, Machine::Ma, MaParams::default(), 1 << 24, None).unwrap();
        let mah = simulate(&p, Machine::MaH, MaParams::default(), 1 << 24, None).unwrap();
        assert!(isa.halted && ma.halted);
        assert_eq!(isa.arch.rf[primality::RESULT_REG], is_prime(n) as u32, "n = {n}");
        assert_eq!((ma.arch.pc, &ma.arch.rf, ma.arch.halt), (isa.arch.pc, &isa.arch.rf, isa.arch.halt));
        assert_eq!((mah.steps, &mah.arch), (ma.steps, &ma.arch));
    }
}

#[test]
fn run_reports_the_final_state() {
    let (c, out, _) = tea(&["run", "--machine", "isa", "primality"]);
    assert_eq!(c, code::OK);
    assert!(out.starts_with("isa halted after "), "{out}");
    assert!(out.contains("r10 0x00000001"), "{out}");
}

#[test]
fn spinning_programs_exhaust_the_budget() {
    let f = scratch("spin.asm", "loop: loadi r1 1\n jge r1 loop\n");
    for m in ["isa", "ma", "ma-h"] {
        let (c, out, _) = tea(&["run", "--machine", m, "--max-steps", "100", f.to_str().unwrap()]);
        assert_eq!(c, code::BUDGET, "{m}: {out}");
        assert!(out.contains("step budget exhausted after 100"));
    }
    let (c, _, err) = tea(&["run", "--max-steps", "0", f.to_str().unwrap()]);
    assert_eq!(c, 2, "{err}");
}

#[test]
fn assembly_errors_name_the_position() {
    let f = scratch("bad.asm", "noop\nloadi r99 1\n");
    let (c, _, err) = tea(&["run", f.to_str().unwrap()]);
    assert_eq!(c, code::ERROR);
    assert!(err.contains("line 2, column 7"), "{err}");
    let (c, _, err) = tea(&["run", "no-such-file.asm"]);
    assert_eq!(c, code::ERROR);
    assert!(err.contains("no-such-file.asm"));
}

#[test]
fn traces_have_one_record_per_cycle() {
    let (c, out, _) = tea(&["trace", "--max-steps", "20", "spectre"]);
    assert_eq!(c, code::OK);
    let cycles = out.lines().filter(|l| l.starts_with("cycle ")).count();
    let (_, summary, _) = tea(&["run", "spectre"]);
    let n: usize = summary.split_whitespace().nth(3).unwrap().parse().unwrap();
    assert_eq!(cycles, n);
    assert!(out.contains("writeback") && out.contains("commit"));

    let path = std::env::temp_dir().join(format!("tea-trace-{}.txt", std::process::id()));
    let (c, out, _) = tea(&["run", "--machine", "isa", "--trace", path.to_str().unwrap(), "meltdown"]);
    assert_eq!(c, code::OK);
    let trace = std::fs::read_to_string(&path).unwrap();
    let steps: usize = out.split_whitespace().nth(3).unwrap().parse().unwrap();
    assert_eq!(trace.lines().count(), steps);
    assert!(trace.starts_with("step 0 pc 0x0 tsx-start"));
}

#[test]
fn parameters_layer_file_then_flags() {
    let f = scratch("params.kv", "# wider core\nrs-count=6\nfetch-num=4\n");
    let p = load_params(Some(&f), &["fetch-num=2".into()]).unwrap();
    assert_eq!((p.rs_count, p.fetch_num), (6, 2));
    assert!(load_params(None, &["bogus=1".into()]).is_err());
    assert!(load_params(None, &["rs-count".into()]).is_err());
    assert!(load_params(None, &["max-rob=0".into()]).is_err());

    let (c, _, err) = tea(&["run", "--set", "rs-count=x", "primality"]);
    assert_eq!(c, code::ERROR, "{err}");
}

#[test]
fn assembled_text_reassembles() {
    let (c, text, _) = tea(&["asm", "meltdown"]);
    assert_eq!(c, code::OK);
    assert_eq!(tea_asm::parse(&text).unwrap().imem(), corpus::meltdown().imem());
    let (c, snap, _) = tea(&["asm", "--snapshot", "ma", "spectre"]);
    assert_eq!(c, code::OK);
    let s = tea_ma::snapshot::ma_from_snapshot(&snap).unwrap();
    assert_eq!(s.arch.imem, corpus::spectre().imem().into());
}

#[test]
fn meltdown_demo_recovers_the_planted_word() {
    let d = meltdown_demo(MaParams::default());
    assert_eq!(d.recovered_ma, meltdown::SECRET);
    assert_eq!(d.recovered_isa, meltdown::SLOTS);
    assert_eq!((d.kernel_probe_ma, d.kernel_probe_isa), (1, 0));
    assert!(d.reproduced());
    let (c, out, _) = tea(&["demo", "meltdown"]);
    assert_eq!(c, code::OK);
    assert!(out.contains("probe recovered 42"));
}

#[test]
fn spectre_demo_shows_an_unauthorised_line() {
    let d = spectre_demo(MaParams::default());
    let oob = corpus::spectre::ARRAY + corpus::spectre::INDEX;
    assert!(d.unauthorised.contains(&(oob, corpus::spectre::SECRET)), "{:?}", d.unauthorised);
    assert!(d.reproduced());
    let (c, out, _) = tea(&["demo", "spectre"]);
    assert_eq!(c, code::OK);
    assert!(out.contains("0x228=0x7"));
}

#[test]
fn check_exit_codes_follow_the_verdict() {
    let (c, out, _) = tea(&["check", "--suite", "entangled", "--trials", "1000", "--seed", "7"]);
    assert_eq!(c, code::OK, "{out}");
    assert!(out.ends_with("result: PASS\n"));
    let (c, _, _) = tea(&["check", "--suite", "meltdown-buggy", "--trials", "20"]);
    assert_eq!(c, code::COUNTEREXAMPLE);
    let (c, _, err) = tea(&["check", "--suite", "nope"]);
    assert_eq!(c, code::ERROR);
    assert!(err.contains("unknown suite"));
}

#[test]
fn seed_comes_from_the_environment() {
    let run = |env: Option<&str>, extra: &[&str]| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_tea"));
        cmd.args(["check", "--suite", "architecture", "--trials", "30", "--json"]).args(extra).env_remove("TEA_SEED");
        if let Some(s) = env {
            cmd.env("TEA_SEED", s);
        }
        String::from_utf8(cmd.output().unwrap().stdout).unwrap()
    };
    let from_env = run(Some("31"), &[]);
    assert!(from_env.contains("\"seed\": 31"));
    assert_eq!(from_env, run(None, &["--seed", "31"]));
    assert_ne!(from_env, run(None, &[]));
}

#[test]
fn written_bundles_replay() {
    let dir = std::env::temp_dir().join(format!("tea-bundles-{}", std::process::id()));
    let (c, _, _) = tea(&["check", "--suite", "meltdown-buggy", "--trials", "20", "--bundles", dir.to_str().unwrap()]);
    assert_eq!(c, code::COUNTEREXAMPLE);
    let mut files: Vec<_> = std::fs::read_dir(&dir).unwrap().map(|e| e.unwrap().path()).collect();
    files.sort();
    assert!(!files.is_empty());
    for f in files {
        let (c, out, _) = tea(&["check", "--replay", f.to_str().unwrap()]);
        assert_eq!(c, code::COUNTEREXAMPLE);
        assert!(out.contains("reproduced"), "{out}");
    }
    let (c, _, err) = tea(&["check", "--replay", "/nonexistent.bundle"]);
    assert_eq!(c, code::ERROR, "{err}");
}

#[test]
fn bench_reports_positive_rates() {
    let (c, out, _) = tea(&["bench", "--seconds", "0.2", "--n", "89"]);
    assert_eq!(c, code::OK);
    assert!(out.contains("primality of 89") && out.contains("isa/ma"));
}
