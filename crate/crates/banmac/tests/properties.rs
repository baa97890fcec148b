//! Property tests: scenario file round-trips, cross-scheme determinism,
//! trace validity on arbitrary configurations, and grid-parser behavior.

use banmac::baselines::{run_pure_slotted_aloha, run_pure_tdma};
use banmac::engine;
use banmac::model::{preset_scenario_relaxed, ScenarioConfig, SensorGroup};
use banmac::sweep::{parse_load_grid, parse_seeds};
use banmac::trace::{validate_trace, write_trace};
use proptest::prelude::*;

fn arb_group() -> impl Strategy<Value = SensorGroup> {
    prop_oneof![
        Just(SensorGroup::Group1),
        Just(SensorGroup::Group2),
        Just(SensorGroup::Group3),
    ]
}

/// Structurally valid scenarios over the whole movable-boundary range, not
/// just the standard sweep points.
fn arb_scenario() -> impl Strategy<Value = ScenarioConfig> {
    (
        arb_group(),
        1u32..=35,
        prop_oneof![Just(8u32), Just(4), Just(2), Just(13)],
        0.0..=1.0f64,
        any::<u16>(),
        400u64..2_500,
        0.0..=0.3f64,
    )
        .prop_map(|(group, dat, dl, load, seed, sim_slots, error_prob)| {
            let mut scenario =
                preset_scenario_relaxed(group, dat, dl, load, u64::from(seed)).unwrap();
            scenario.sim_slots = sim_slots;
            scenario.frame.packet_error_prob = error_prob;
            scenario
        })
}

fn dump(trace: &banmac::trace::SimTrace) -> Vec<u8> {
    let mut out = Vec::new();
    write_trace(trace, &mut out).unwrap();
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn scenario_files_round_trip(mut scenario in arb_scenario(), warmup in 0u64..300) {
        scenario.warmup_slots = warmup.min(scenario.sim_slots - 1);
        let text = scenario.to_toml_string();
        let parsed = ScenarioConfig::from_toml_str(&text).unwrap();
        prop_assert_eq!(parsed, scenario);
    }

    #[test]
    fn hybrid_runs_are_deterministic_and_valid(scenario in arb_scenario()) {
        let (report_a, trace_a) = engine::run(&scenario).unwrap();
        let (report_b, trace_b) = engine::run(&scenario).unwrap();
        prop_assert_eq!(report_a, report_b);
        prop_assert_eq!(dump(&trace_a), dump(&trace_b));

        validate_trace(&trace_a, &scenario).unwrap();
        let c = report_a.counters;
        prop_assert_eq!(
            c.arrivals,
            c.messages_completed + c.messages_in_flight + c.arrivals_discarded
        );
        prop_assert!((0.0..=1.0).contains(&report_a.throughput_s));
        prop_assert!(report_a.offered_load_g >= 0.0);
        if let Some(delay) = report_a.mean_delay_slots {
            prop_assert!(delay >= 1.0);
        }
    }

    #[test]
    fn baselines_are_deterministic(scenario in arb_scenario()) {
        let aloha_a = run_pure_slotted_aloha(&scenario).unwrap();
        let aloha_b = run_pure_slotted_aloha(&scenario).unwrap();
        prop_assert_eq!(aloha_a, aloha_b);
        prop_assert!((0.0..=1.0).contains(&aloha_a.throughput_s));

        let tdma_a = run_pure_tdma(&scenario).unwrap();
        let tdma_b = run_pure_tdma(&scenario).unwrap();
        prop_assert_eq!(tdma_a, tdma_b);
        prop_assert_eq!(tdma_a.counters.collisions, 0);
    }
}

proptest! {
    #[test]
    fn generated_grids_hit_exact_endpoints(
        min in 1e-6..=0.5f64,
        span in 0.0..=0.5f64,
        n in 2usize..=40,
        geometric in any::<bool>(),
    ) {
        let max = min + span;
        let kind = if geometric { "geom" } else { "lin" };
        let grid = parse_load_grid(&format!("{kind}:{min}:{max}:{n}")).unwrap();
        prop_assert_eq!(grid.len(), n);
        prop_assert_eq!(grid[0], min);
        prop_assert_eq!(grid[n - 1], max);
        prop_assert!(grid.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn load_lists_parse_verbatim(loads in prop::collection::vec(0.0..=1.0f64, 1..8)) {
        let spec = loads.iter().map(f64::to_string).collect::<Vec<_>>().join(",");
        prop_assert_eq!(parse_load_grid(&spec).unwrap(), loads);
    }

    #[test]
    fn seed_counts_expand_to_ranges(n in 0u64..200) {
        let seeds = parse_seeds(&n.to_string()).unwrap();
        prop_assert_eq!(seeds, (0..n).collect::<Vec<_>>());
    }

    #[test]
    fn seed_lists_parse_verbatim(seeds in prop::collection::vec(any::<u32>(), 2..8)) {
        let expected: Vec<u64> = seeds.iter().map(|&s| u64::from(s)).collect();
        let spec = seeds.iter().map(u32::to_string).collect::<Vec<_>>().join(",");
        prop_assert_eq!(parse_seeds(&spec).unwrap(), expected);
    }
}
