//! `check`: obligation suites, single properties, and bundle replay.

use std::io::Write;
use std::path::Path;

use anyhow::Context;
use tea_testgen::{replay_bundle, run_property, run_suite, Bundle, GenConfig, Report};

use crate::args::CheckArgs;
use crate::{code, load_params};

/// Generator configuration for `args`.
pub fn gen_config(args: &CheckArgs) -> anyhow::Result<GenConfig> {
    let mut cfg = GenConfig::with_seed(args.seed);
    cfg.params = load_params(args.params.params.as_deref(), &args.params.set)?;
    if let Some(h) = args.horizon {
        cfg.horizon = h;
    }
    cfg.sparse = args.sparse;
    Ok(cfg)
}

/// The report for a suite or property run; `all` when neither is named.
pub fn report(args: &CheckArgs) -> anyhow::Result<Report> {
    let cfg = gen_config(args)?;
    Ok(match (&args.suite, &args.property) {
        (_, Some(p)) => run_property(p, &cfg, args.trials)?,
        (s, None) => run_suite(s.as_deref().unwrap_or("all"), &cfg, args.trials)?,
    })
}

fn write_bundles(r: &Report, dir: &Path) -> anyhow::Result<Vec<String>> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut written = Vec::new();
    for p in &r.properties {
        for (i, f) in p.failures.iter().enumerate() {
            let path = dir.join(format!("{}-{}-{i}.bundle", r.suite.replace(':', "-"), p.property));
            std::fs::write(&path, &f.shrunk.bundle).with_context(|| format!("writing {}", path.display()))?;
            written.push(path.display().to_string());
        }
    }
    Ok(written)
}

fn replay(path: &Path, args: &CheckArgs, out: &mut dyn Write) -> anyhow::Result<i32> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let b = Bundle::from_text(&text).with_context(|| format!("parsing {}", path.display()))?;
    let cfg = gen_config(args)?;
    writeln!(
        out,
        "bundle: property {}, expected {}{}",
        b.property,
        b.obligation,
        if b.tea { " [leak]" } else { "" }
    )?;
    Ok(match replay_bundle(&b, &cfg)? {
        None => {
            writeln!(out, "passes: the recorded failure no longer occurs")?;
            code::OK
        }
        Some(v) => {
            let same = v.obligation == b.obligation && v.tea == b.tea;
            writeln!(out, "{}: {v}", if same { "reproduced" } else { "fails differently" })?;
            code::COUNTEREXAMPLE
        }
    })
}

pub fn cmd_check(args: &CheckArgs, out: &mut dyn Write) -> anyhow::Result<i32> {
    if let Some(path) = &args.replay {
        return replay(path, args, out);
    }
    let r = report(args)?;
    if args.json {
        writeln!(out, "{}", r.to_json())?;
    } else {
        write!(out, "{r}")?;
    }
    if let Some(dir) = &args.bundles {
        for path in write_bundles(&r, dir)? {
            eprintln!("wrote {path}");
        }
    }
    Ok(r.exit_code())
}
