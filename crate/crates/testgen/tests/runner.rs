use std::sync::Arc;

use tea_asm::{corpus, emit_ma, parse};
use tea_refine::{AuthSpec, Obligation};
use tea_testgen::{
    replay_bundle, run_property, run_suite, shrink, Bundle, Case, GenConfig, Property, RunError, REPORT_SCHEMA,
};

/// The bundled Meltdown program with sixteen instructions of busy work in
/// front of it, forty instructions in all.
fn padded_meltdown() -> Case {
    let filler = ["addi r5 r5 1", "mul r11 r5 r5", "cmp r7 r5 r11", "noop"].repeat(4).join("\n");
    let src = corpus::MELTDOWN_SRC.replacen("        tsx-start recover", &format!("{filler}\ntsx-start recover"), 1);
    let p = parse(&src).unwrap();
    assert_eq!(p.instrs.len(), 40);
    Case { seed: emit_ma(&p, Arc::default()), forward: 0, horizon: 4000 }
}

#[test]
fn closure_holds_over_a_thousand_trials() {
    let r = run_property("closure", &GenConfig::with_seed(17), 1000).unwrap();
    let p = &r.properties[0];
    assert_eq!((p.passed, p.failed), (1000, 0));
    assert!(p.counts.states > 1000);
    assert_eq!(r.exit_code(), 0);
}

#[test]
fn non_speculative_spec_catches_spectre() {
    let r = run_suite("spectre-buggy", &GenConfig::with_seed(3), 200).unwrap();
    let p = r.property("cache-action").unwrap();
    assert_eq!(p.auth, "non-speculative");
    assert!(p.failed >= 1);
    assert_eq!(p.failures[0].source, "corpus spectre");
    assert!(p.failures.iter().all(|f| f.obligation == "cache-action"));
    assert_eq!(r.exit_code(), 1);
}

#[test]
fn mirror_spec_only_objects_to_kernel_lines() {
    // every fill mirrors a load that wrote back, except that the MA also
    // caches lines the program may not access
    let cfg = GenConfig { auth: AuthSpec::Mirror, ..GenConfig::with_seed(3) };
    let mut failures = 0;
    for t in 0..300 {
        let case = Property::CacheAction.gen_case(&cfg, &mut tea_testgen::trial_rng(3, t));
        let Err(v) = Property::CacheAction.check(&case, &cfg) else { continue };
        let (s, h) = case.start();
        let mut cur = (s, h);
        for _ in 0..v.step {
            cur = tea_variants::mah_step(&cur.0, &cur.1);
        }
        let next = tea_ma::ma_step(&cur.0);
        let new_lines: Vec<_> = next.arch.cache.keys().filter(|a| !cur.0.arch.cache.contains_key(a)).collect();
        assert!(new_lines.iter().any(|&&a| !cur.0.arch.ga.contains(a)), "trial {t}: {}", v.detail);
        failures += 1;
    }
    assert!(failures > 0);
}

#[test]
fn padded_meltdown_shrinks_to_a_handful_of_instructions() {
    let cfg = GenConfig::default();
    let case = padded_meltdown();
    let v = Property::Refinement.check(&case, &cfg).unwrap_err();
    assert!(v.tea && v.obligation == Obligation::WskStep, "{v:?}");

    let s = shrink(Property::Refinement, &cfg, &case, &v);
    assert!(s.case.program_len() <= 10, "{} instructions left", s.case.program_len());
    let again = Property::Refinement.check(&s.case, &cfg).unwrap_err();
    assert!(again.tea && again.obligation == v.obligation);
    assert_eq!(again, s.violation);
}

#[test]
fn meltdown_suites_split_on_in_cache() {
    let cfg = GenConfig::with_seed(5);
    let buggy = run_suite("meltdown-buggy", &cfg, 500).unwrap();
    let melt = buggy.properties[0].failures.iter().find(|f| f.source == "corpus meltdown").unwrap();
    assert!(melt.tea);
    assert!(melt.shrunk.program_len < melt.program_len);

    let safe = run_suite("meltdown-safe", &cfg, 500).unwrap();
    assert_eq!(safe.failed(), 0);
    assert_eq!(safe.tea(), 0);
    assert!(safe.properties.iter().all(|p| p.strip_in_cache));
}

#[test]
fn bundles_replay_their_failure() {
    let r = run_suite("meltdown-buggy", &GenConfig::with_seed(5), 50).unwrap();
    let f = &r.properties[0].failures[0];
    let b = Bundle::from_text(&f.shrunk.bundle).unwrap();
    assert_eq!(b.to_text(), f.shrunk.bundle);
    assert_eq!(b.property, "refinement");
    assert!(b.tea);
    let v = replay_bundle(&b, &GenConfig::default()).unwrap().expect("bundle still fails");
    assert_eq!(v.obligation, b.obligation);
    assert_eq!(v.detail, f.shrunk.detail);
}

#[test]
fn bundle_text_survives_a_round_trip() {
    let b = Bundle {
        property: "cache-action".into(),
        auth: AuthSpec::NonSpeculative,
        obligation: Obligation::CacheAction,
        tea: false,
        case: Case { seed: emit_ma(&corpus::spectre(), Arc::default()), forward: 7, horizon: 33 },
    };
    let text = b.to_text();
    assert_eq!(Bundle::from_text(&text).unwrap(), b);
    assert!(Bundle::from_text(&text.replace("tea-bundle 1", "tea-bundle 9")).is_err());
    assert!(Bundle::from_text(&format!("{text}extra 1\n")).is_err());
}

#[test]
fn reports_depend_only_on_the_config() {
    let cfg = GenConfig::with_seed(99);
    let a = run_suite("all", &cfg, 60).unwrap();
    let b = run_suite("all", &cfg, 60).unwrap();
    assert_eq!(a.to_json(), b.to_json());
    assert_eq!(a.to_string(), b.to_string());
    assert_eq!(a.schema, REPORT_SCHEMA);
    let c = run_suite("all", &GenConfig::with_seed(100), 60).unwrap();
    assert_ne!(a.to_json(), c.to_json());
}

#[test]
fn unknown_names_are_errors() {
    let cfg = GenConfig::default();
    assert_eq!(run_property("nope", &cfg, 1).unwrap_err(), RunError::UnknownProperty("nope".into()));
    assert_eq!(run_suite("nope", &cfg, 1).unwrap_err(), RunError::UnknownSuite("nope".into()));
    for p in Property::ALL {
        assert_eq!(Property::from_name(p.name()), Some(p));
    }
}

#[test]
fn architecture_suite_passes() {
    let r = run_suite("architecture", &GenConfig::with_seed(8), 500).unwrap();
    assert_eq!(r.failed(), 0);
    assert_eq!(r.property("in-cache-inaccessible").unwrap().counts.in_cache_checked, 500);
}
