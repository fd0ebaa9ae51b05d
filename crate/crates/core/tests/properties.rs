use dynacc_core::accessibility::{accessibility_from_row, peak_gap, relative, DecayParams};
use dynacc_core::clustering::{classify, euclidean, kmeans_longitudinal, ReferenceProfileSet};
use dynacc_core::network::{fifo_check, fifo_repair, Link, RoadClass, PROFILE_LEN};
use dynacc_core::{SpeedProfile, TravelTimeFunction};
use proptest::prelude::*;

fn link(length_m: f64, kmh: f64) -> Link {
    Link {
        id: "l".into(),
        source_id: "l".into(),
        from: 0,
        to: 1,
        length_m,
        freeflow_kmh: kmh,
        road_class: RoadClass::new(2).unwrap(),
        profile: Some(0),
        is_loop: false,
    }
}

fn profile_values() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.05f64..=1.0, PROFILE_LEN)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn repaired_arrivals_never_decrease(values in profile_values(), len in 100.0f64..8000.0, kmh in 10.0f64..130.0) {
        let l = link(len, kmh);
        let p = SpeedProfile::new("p", values).unwrap();
        let f = fifo_repair(&TravelTimeFunction::new(&l, Some(&p)));
        prop_assert!(fifo_check(&f, 1e-9).is_empty());
        let mut prev = f64::NEG_INFINITY;
        let mut t = 200.0;
        while t < 1400.0 {
            let a = f.arrival(t);
            prop_assert!(a >= prev - 1e-9, "t={t}: {a} < {prev}");
            prev = prev.max(a);
            t += 0.37;
        }
    }

    #[test]
    fn repair_only_lowers_and_respects_free_flow(values in profile_values(), t in 0.0f64..1440.0) {
        let l = link(2500.0, 50.0);
        let p = SpeedProfile::new("p", values).unwrap();
        let raw = TravelTimeFunction::new(&l, Some(&p));
        let f = fifo_repair(&raw);
        prop_assert!(f.arrival(t) <= raw.arrival(t) + 1e-12);
        prop_assert!(f.travel_time(t) >= l.freeflow_minutes() - 1e-9);
    }

    #[test]
    fn accessibility_is_linear_in_opportunities(
        row in prop::collection::vec(prop_oneof![0.0f64..120.0, Just(f64::INFINITY)], 1..20),
        scale in 1u32..5,
    ) {
        let d: Vec<f64> = (0..row.len()).map(|j| (j as f64 + 1.0) * 10.0).collect();
        let scaled: Vec<f64> = d.iter().map(|v| v * scale as f64).collect();
        let p = DecayParams::default();
        let a = accessibility_from_row(&row, &d, &p);
        let b = accessibility_from_row(&row, &scaled, &p);
        prop_assert!((b - a * scale as f64).abs() <= 1e-9 * b.max(1.0));
        prop_assert!(a >= 0.0);
    }

    #[test]
    fn relative_series_peaks_at_one(values in prop::collection::vec(0.0f64..1e6, 1..96)) {
        let r = relative(&values);
        let max = r.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        prop_assert_eq!(max, 1.0);
        prop_assert!(r.iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn peak_gap_is_a_fraction(a in 0.01f64..1.0, b in 0.01f64..1.0) {
        let g = peak_gap(a, b);
        prop_assert!((0.0..=1.0).contains(&g));
        prop_assert_eq!(g, peak_gap(b, a));
        prop_assert_eq!(g == 0.0, a == b);
    }

    #[test]
    fn classification_ignores_insertion_order(
        refs in prop::collection::vec(prop::collection::vec(0.0f64..1.0, 8), 1..6),
        x in prop::collection::vec(0.0f64..1.0, 8),
    ) {
        let mut forward = ReferenceProfileSet::new();
        let mut backward = ReferenceProfileSet::new();
        for (i, r) in refs.iter().enumerate() {
            forward.insert(format!("r{i}"), r.clone()).unwrap();
        }
        for (i, r) in refs.iter().enumerate().rev() {
            backward.insert(format!("r{i}"), r.clone()).unwrap();
        }
        let (label, dist) = classify(&x, &forward).unwrap();
        prop_assert_eq!(classify(&x, &backward).unwrap(), (label.clone(), dist));
        let min = refs.iter().map(|r| euclidean(&x, r)).fold(f64::INFINITY, f64::min);
        prop_assert_eq!(dist, min);
    }

    #[test]
    fn kmeans_distortion_never_increases(
        series in prop::collection::vec(prop::collection::vec(0.0f64..1.0, 6), 4..20),
        k in 1usize..4,
        seed in any::<u64>(),
    ) {
        let km = kmeans_longitudinal(&series, k, seed, 50).unwrap();
        for w in km.distortion_history.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-12);
        }
        prop_assert_eq!(km.assignment.len(), series.len());
        prop_assert!(km.assignment.iter().all(|&c| c < k));
    }
}
