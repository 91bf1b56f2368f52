use gazekit::classify::{ClassifierConfig, OutcomeClass};
use gazekit::geometry::{
    angle_to_extent, dmm_to_meters, make_ring_layout, visual_angle_deg, TargetLayout, INTER_TARGET_DISTANCES_M,
    TARGET_SIZES_DEG,
};
use gazekit::io::{classify_session, read_session, write_log, SessionManifest};
use gazekit::metrics::{mean_throughput, SessionMetrics};
use gazekit::reticle::{replay_stream, GazeSample, HeuristicConfig, ReticleState};
use gazekit::session::replay;
use gazekit::sim::{simulate_session, simulate_session_with, PinchAnchor, SimConfig, TrialPlan};
use gazekit::stats::{paired_t, rm_anova};
use gazekit::task::{BlockConfig, Condition, RingSchedule};
use proptest::prelude::*;

fn layout_for(round: usize) -> TargetLayout {
    RingSchedule::default().layout(round).unwrap()
}

prop_compose! {
    fn gaze_stream(max_len: usize)(steps in prop::collection::vec(
        (1.0f64..40.0, -0.4f64..0.4, -0.4f64..0.4, prop::bool::weighted(0.9)), 1..max_len,
    )) -> Vec<GazeSample> {
        let mut t = 0.0;
        steps.into_iter().map(|(dt, x, y, valid)| {
            t += dt;
            GazeSample { valid, ..GazeSample::new(t, x, y) }
        }).collect()
    }
}

fn heuristics() -> impl Strategy<Value = HeuristicConfig> {
    (any::<bool>(), 0.0f64..120.0, any::<bool>(), 0.0f64..60.0).prop_map(|(s, hold, m, margin)| HeuristicConfig {
        sticky_enabled: s,
        sticky_hold_ms: hold,
        magnetic_enabled: m,
        magnetic_margin_dmm: margin,
    })
}

fn condition() -> impl Strategy<Value = Condition> {
    prop::sample::select(Condition::ALL.to_vec())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn angle_and_extent_are_inverse(a in 0.01f64..170.0, d in 0.05f64..20.0) {
        let back = visual_angle_deg(angle_to_extent(a, d).unwrap(), d).unwrap();
        prop_assert!((back - a).abs() < 1e-9);
    }

    #[test]
    fn dmm_conversion_is_linear(v in 0.0f64..500.0, d in 0.1f64..10.0, k in 0.01f64..100.0) {
        let base = dmm_to_meters(v, d).unwrap();
        prop_assert!((dmm_to_meters(k * v, d).unwrap() - k * base).abs() <= 1e-12 * (1.0 + k * base));
        prop_assert!((dmm_to_meters(v, k * d).unwrap() - k * base).abs() <= 1e-12 * (1.0 + k * base));
    }

    #[test]
    fn ring_neighbours_sit_at_the_requested_spacing(n in 3usize..24, inter in 0.02f64..1.0, size in 0.5f64..6.0) {
        let l = make_ring_layout(n, inter, size, 1.3).unwrap();
        for k in 0..n {
            let d = l.targets[k].center.distance(l.targets[(k + 1) % n].center);
            prop_assert!((d - inter).abs() < 1e-9);
        }
    }

    #[test]
    fn baseline_effective_equals_raw(stream in gaze_stream(120), round in 0usize..10) {
        let l = layout_for(round);
        for r in replay_stream(&stream, &l, &HeuristicConfig::none()).unwrap() {
            prop_assert_eq!(r.effective_target, r.raw_target);
            prop_assert!(!r.snapped && !r.stuck);
        }
    }

    #[test]
    fn flags_follow_enabled_heuristics(stream in gaze_stream(120), round in 0usize..10, cfg in heuristics()) {
        let l = layout_for(round);
        for (s, r) in stream.iter().zip(replay_stream(&stream, &l, &cfg).unwrap()) {
            prop_assert!(!r.snapped || cfg.magnetic_enabled);
            prop_assert!(!r.stuck || cfg.sticky_enabled);
            if r.raw_target.is_some() {
                prop_assert_eq!(r.effective_target, r.raw_target);
                prop_assert!(!r.snapped && !r.stuck);
            }
            if !s.valid {
                prop_assert_eq!(r.raw_target, None);
            }
        }
    }

    #[test]
    fn hover_cancels_a_pending_stick(stream in gaze_stream(120), round in 0usize..10, margin in 0.0f64..40.0) {
        let l = layout_for(round);
        let cfg = HeuristicConfig { magnetic_margin_dmm: margin, ..HeuristicConfig::sticky_magnetic() };
        let mut state = ReticleState::new();
        for s in &stream {
            let r = state.step(s, &l, &cfg).unwrap();
            if s.valid && (r.raw_target.is_some() || r.snapped) {
                prop_assert!(state.stick.is_none());
                prop_assert!(!r.stuck);
            }
        }
    }

    #[test]
    fn larger_margins_never_lose_a_hover(stream in gaze_stream(120), round in 0usize..10, m in 0.0f64..40.0, extra in 0.0f64..40.0) {
        let l = layout_for(round);
        let small = HeuristicConfig { magnetic_margin_dmm: m, ..HeuristicConfig::magnetic() };
        let large = HeuristicConfig { magnetic_margin_dmm: m + extra, ..HeuristicConfig::magnetic() };
        let a = replay_stream(&stream, &l, &small).unwrap();
        let b = replay_stream(&stream, &l, &large).unwrap();
        for (x, y) in a.iter().zip(&b) {
            prop_assert!(x.effective_target.is_none() || y.effective_target.is_some());
        }
    }

    #[test]
    fn replay_is_deterministic(stream in gaze_stream(200), round in 0usize..10, cfg in heuristics()) {
        let l = layout_for(round);
        prop_assert_eq!(replay_stream(&stream, &l, &cfg).unwrap(), replay_stream(&stream, &l, &cfg).unwrap());
    }

    #[test]
    fn two_condition_t_squared_is_f(rows in prop::collection::vec((-50.0f64..50.0, -50.0f64..50.0), 3..20)) {
        let x: Vec<f64> = rows.iter().map(|r| r.0).collect();
        let y: Vec<f64> = rows.iter().map(|r| r.1).collect();
        let matrix: Vec<Vec<f64>> = rows.iter().map(|r| vec![r.0, r.1]).collect();
        if let (Ok(t), Ok(f)) = (paired_t(&x, &y), rm_anova(&matrix)) {
            if f.statistic > 0.0 {
                prop_assert!((t.statistic * t.statistic - f.statistic).abs() <= 1e-9 * f.statistic.max(1.0));
                prop_assert!((t.p_value - f.p_value).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn anova_ignores_subject_offsets(
        rows in prop::collection::vec(prop::collection::vec(0.0f64..10.0, 3), 3..12),
        shift in prop::collection::vec(-100.0f64..100.0, 12),
    ) {
        let shifted: Vec<Vec<f64>> = rows.iter().zip(&shift).map(|(r, s)| r.iter().map(|v| v + s).collect()).collect();
        if let (Ok(a), Ok(b)) = (rm_anova(&rows), rm_anova(&shifted)) {
            prop_assert!((a.statistic - b.statistic).abs() <= 1e-6 * a.statistic.max(1.0));
            prop_assert!((0.0..=1.0).contains(&a.p_value));
            prop_assert!((0.0..=1.0).contains(&a.effect));
        }
    }

    #[test]
    fn throughput_units_agree(trials in prop::collection::vec((0.05f64..1.0, 0.01f64..0.2, 20.0f64..2000.0), 1..30)) {
        let tp = mean_throughput(trials.iter().map(|&(a, w, mt)| (a, w, Some(mt)))).unwrap().bits_per_s;
        let in_seconds = trials.iter().map(|&(a, w, mt)| (a / w + 1.0).log2() / (mt / 1000.0)).sum::<f64>() / trials.len() as f64;
        prop_assert!((tp - in_seconds).abs() <= 1e-12 * tp.max(1.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn sessions_round_trip_through_disk(seed in any::<u64>(), c in condition(), dropout in 0.0f64..0.2, sd in 0.0f64..250.0) {
        let sim = SimConfig { dropout_rate: dropout, pinch_offset_sd_ms: sd, ..SimConfig::with_seed(seed) };
        let log = simulate_session(&BlockConfig::new(c).with_rounds(2), &sim).unwrap().log;
        let tmp = tempfile::tempdir().unwrap();
        write_log(&log, tmp.path()).unwrap();
        let back = read_session(tmp.path()).unwrap();
        prop_assert_eq!(&back, &log);
        let cls = ClassifierConfig::default();
        prop_assert_eq!(classify_session(&back, &cls).unwrap(), log.selections.clone());
        prop_assert_eq!(SessionMetrics::compute(&back).ok(), SessionMetrics::compute(&log).ok());
    }

    #[test]
    fn outcome_partition_and_reduction(seed in any::<u64>(), c in condition(), mean in -250.0f64..250.0, sd in 0.0f64..250.0) {
        let sim = SimConfig { pinch_offset_mean_ms: mean, pinch_offset_sd_ms: sd, dropout_rate: 0.02, ..SimConfig::with_seed(seed) };
        let log = simulate_session(&BlockConfig::new(c).with_rounds(3), &sim).unwrap().log;
        let m = SessionMetrics::compute(&log).unwrap();
        prop_assert_eq!(m.late_errors + m.early_errors + m.other_errors, m.errors_observed);
        prop_assert!(m.error_reduction >= 0);
        if m.errors_observed > 0 {
            prop_assert!((m.late_rate_pct + m.early_rate_pct + m.other_rate_pct - 100.0).abs() <= 0.01);
        }
        if c == Condition::None {
            prop_assert_eq!(m.error_reduction, 0);
            prop_assert!(log.selections.iter().all(|s| !s.corrected_by_heuristic));
        }
    }

    #[test]
    fn raw_outcome_ignores_the_condition(seed in any::<u64>(), mean in -250.0f64..250.0) {
        let sim = SimConfig { pinch_offset_mean_ms: mean, pinch_offset_sd_ms: 150.0, ..SimConfig::with_seed(seed) };
        let block = BlockConfig::new(Condition::None).with_rounds(2);
        let run = simulate_session(&block, &sim).unwrap();
        let (samples, pinches) = (run.log.samples(), run.log.pinch_times());
        for c in Condition::ALL {
            let manifest = SessionManifest::new("x", "s", 0, &BlockConfig::new(c).with_rounds(2));
            let log = replay(&manifest, &samples, &pinches).unwrap().finish(&ClassifierConfig::default()).unwrap();
            let raw: Vec<OutcomeClass> = log.selections.iter().map(|s| s.outcome_raw).collect();
            let base: Vec<OutcomeClass> = run.log.selections.iter().map(|s| s.outcome_raw).collect();
            prop_assert_eq!(raw, base);
        }
    }

    #[test]
    fn shrinking_the_window_keeps_other_errors(seed in any::<u64>(), w in 20.0f64..480.0, cut in 0.0f64..1.0) {
        let sim = SimConfig { pinch_offset_mean_ms: -50.0, pinch_offset_sd_ms: 250.0, ..SimConfig::with_seed(seed) };
        let log = simulate_session(&BlockConfig::new(Condition::Sticky).with_rounds(2), &sim).unwrap().log;
        let wide = classify_session(&log, &ClassifierConfig { window_ms: w }).unwrap();
        let narrow = classify_session(&log, &ClassifierConfig { window_ms: w * cut + 1.0 }).unwrap();
        for (a, b) in wide.iter().zip(&narrow) {
            if a.outcome_raw == OutcomeClass::OtherError {
                prop_assert_eq!(b.outcome_raw, OutcomeClass::OtherError);
            }
            if a.outcome_effective == OutcomeClass::OtherError {
                prop_assert_eq!(b.outcome_effective, OutcomeClass::OtherError);
            }
        }
    }

    #[test]
    fn labels_agree_with_truth_away_from_the_window_edge(
        seed in any::<u64>(),
        offsets in prop::collection::vec(prop_oneof![-1000.0f64..-400.0, -300.0f64..300.0, 400.0f64..1000.0], 18),
    ) {
        let sim = SimConfig::noise_free(seed);
        let block = BlockConfig::new(Condition::None).with_rounds(2);
        let run = simulate_session_with(&block, &sim, |spec, sim, _| TrialPlan {
            landing: spec.target().center,
            pinch: PinchAnchor::Arrival(offsets[spec.index]),
            dwell_ms: sim.dwell_ms,
        })
        .unwrap();
        for (r, t) in run.log.selections.iter().zip(&run.truth) {
            prop_assert_eq!(r.outcome_raw, t.label(350.0));
        }
    }
}

#[test]
fn schedule_sizes_never_overlap() {
    for &inter in &INTER_TARGET_DISTANCES_M {
        for &size in &TARGET_SIZES_DEG {
            let l = make_ring_layout(9, inter, size, 1.3).unwrap();
            for (i, a) in l.targets.iter().enumerate() {
                for b in &l.targets[i + 1..] {
                    assert!(a.center.distance(b.center) > a.radius + b.radius, "{inter} m, {size} deg");
                }
            }
        }
    }
}
