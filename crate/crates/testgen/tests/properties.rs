use proptest::prelude::*;
use tea_isa::Word;
use tea_testgen::shrink::delete_instr;
use tea_testgen::{gen_entangled, trial_rng, Bundle, GenConfig, Property};
use tea_refine::{AuthSpec, Obligation};
use tea_variants::is_entangled;

fn property() -> impl Strategy<Value = Property> {
    prop::sample::select(Property::ALL.to_vec())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn cases_are_a_function_of_seed_and_trial(seed: u64, trial in 0u64..1 << 20, p in property()) {
        let cfg = GenConfig::with_seed(seed);
        let a = p.gen_case(&cfg, &mut trial_rng(seed, trial));
        let b = p.gen_case(&cfg, &mut trial_rng(seed, trial));
        prop_assert_eq!(a, b);
    }

    #[test]
    fn generated_pairs_are_entangled(seed: u64, trial in 0u64..1000, sparse: bool, forward in 0u32..80) {
        let cfg = GenConfig { sparse, max_forward_steps: forward, ..GenConfig::with_seed(seed) };
        let (s, h) = gen_entangled(&cfg, &mut trial_rng(seed, trial));
        prop_assert!(is_entangled(&s, &h));
    }

    #[test]
    fn bundles_round_trip(seed: u64, trial in 0u64..1000, p in property(), tea: bool) {
        let cfg = GenConfig::with_seed(seed);
        let case = p.gen_case(&cfg, &mut trial_rng(seed, trial));
        let b = Bundle { property: p.name().into(), auth: AuthSpec::NonSpeculative, obligation: Obligation::WskRun, tea, case };
        prop_assert_eq!(Bundle::from_text(&b.to_text()).unwrap(), b);
    }

    #[test]
    fn deleting_an_instruction_keeps_the_block_contiguous(seed: u64, pick in 0usize..64) {
        let cfg = GenConfig::with_seed(seed);
        let case = Property::Refinement.gen_case(&cfg, &mut trial_rng(seed, 0));
        let mut s = case.seed.clone();
        let addrs: Vec<Word> = s.arch.imem.keys().copied().collect();
        let a = addrs[pick % addrs.len()];
        delete_instr(&mut s, a);
        let after: Vec<Word> = s.arch.imem.keys().copied().collect();
        prop_assert_eq!(after.len(), addrs.len() - 1);
        prop_assert!(after.windows(2).all(|w| w[1] == w[0] + 1));
        prop_assert_eq!(after.first().copied(), if addrs.len() > 1 { Some(addrs[0]) } else { None });
    }

    #[test]
    fn correct_obligations_hold_on_generated_cases(seed: u64, trial in 0u64..1000) {
        let cfg = GenConfig::with_seed(seed);
        for p in [Property::MaSubsetMan, Property::MahProjection, Property::Closure, Property::Replay] {
            let case = p.gen_case(&cfg, &mut trial_rng(seed, trial));
            prop_assert!(p.check(&case, &cfg).is_ok(), "{} failed", p);
        }
    }
}
