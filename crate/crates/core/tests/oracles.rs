mod common;

use std::collections::BTreeMap;

use proptest::prelude::*;

use common::*;
use gazescope::aoi::{self, Alphabet, Collapse, ContextClass, TransitionKind};
use gazescope::metrics::{self, aggregate_group, AoiTarget, MetricValue, PctDenominator, StatKind, Unit};
use gazescope::model::{Dimension, GazePoint, Scope, Selector};
use gazescope::session::time_fraction_filter;
use gazescope::similarity::{self, NwScoring};

fn parse_labels(s: &str) -> Vec<Option<usize>> {
    s.split_whitespace()
        .map(|t| SYMBOLS.iter().position(|x| *x == t))
        .collect()
}

fn stream_strategy() -> impl Strategy<Value = Vec<GazePoint>> {
    prop::collection::vec((1.0f64..60.0, -40.0f64..40.0, -40.0f64..40.0, prop::bool::weighted(0.15)), 0..300).prop_map(
        |steps| {
            let (mut t, mut x, mut y) = (0.0, 500.0, 500.0);
            steps
                .into_iter()
                .map(|(dt, dx, dy, jump)| {
                    t += dt;
                    if jump {
                        x += dx * 20.0;
                        y += dy * 20.0;
                    } else {
                        x += dx / 8.0;
                        y += dy / 8.0;
                    }
                    GazePoint::new(t, x, y)
                })
                .collect()
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn detection_matches_reference_sweep(pts in stream_strategy(), thr in 1.0f64..80.0, min in 0.0f64..300.0) {
        let got: Vec<(usize, usize)> = detect(&pts, thr, min)
            .iter()
            .map(|f| (f.point_span.start, f.point_span.end))
            .collect();
        prop_assert_eq!(got, idt_reference(&pts, thr, min));
    }

    #[test]
    fn saccade_count_is_one_less_than_fixations(pts in stream_strategy()) {
        let fs = detect(&pts, 25.0, 100.0);
        prop_assert_eq!(gazescope::fixation::derive_saccades(&fs).len(), fs.len().saturating_sub(1));
    }

    #[test]
    fn nw_is_symmetric_and_bounded(a in prop::collection::vec(0u8..4, 0..12), b in prop::collection::vec(0u8..4, 0..12)) {
        let s = NwScoring::default();
        let ab = similarity::nw_score(&a, &b, &s);
        let ba = similarity::nw_score(&b, &a, &s);
        prop_assert_eq!(ab.raw, ba.raw);
        prop_assert!(ab.normalized <= 1.0);
        prop_assert_eq!(ab.normalized == 1.0, a == b);
    }

    #[test]
    fn stats_ignore_input_order(mut durations in prop::collection::vec(1.0f64..1000.0, 0..40), seed in any::<u64>()) {
        let aois = abc_aois();
        let make = |d: &[f64]| {
            let mut l = labels_from(&vec![Some(0); d.len()]);
            for (x, v) in l.iter_mut().zip(d) {
                x.fixation.duration = *v;
            }
            metrics::fixation_aoi_stats(&l, &AoiTarget::Aoi("A".into()), &aois, 1e5, PctDenominator::ScopedSpan)
        };
        let before = make(&durations);
        let mut r = rng(seed);
        rand::seq::SliceRandom::shuffle(durations.as_mut_slice(), &mut r);
        let after = make(&durations);
        prop_assert_eq!(before.count, after.count);
        prop_assert!((before.total_dur - after.total_dur).abs() <= 1e-9);
        prop_assert_eq!(before.median_dur, after.median_dur);
    }

    #[test]
    fn time_fraction_is_monotone(seed in any::<u64>(), f in 0.0f64..1.0, g in 0.0f64..1.0) {
        let s = random_session(&mut rng(seed));
        let view = s.resolve_scope(&Scope::all()).unwrap();
        let (lo, hi) = if f <= g { (f, g) } else { (g, f) };
        let a = time_fraction_filter(&view, lo);
        let b = time_fraction_filter(&view, hi);
        prop_assert!(a.fixation_count() <= b.fixation_count());
        prop_assert_eq!(time_fraction_filter(&view, 1.0).fixation_count(), view.fixation_count());
        prop_assert_eq!(time_fraction_filter(&view, 0.0).fixation_count(), 0);
    }

    #[test]
    fn one_twi_scopes_partition_the_windowed_events(seed in any::<u64>()) {
        let s = random_session(&mut rng(seed));
        for sample in &s.dataset().samples {
            let mut seen = BTreeMap::new();
            for t in s.dataset().twis.iter().filter(|t| t.applies_to(&sample.id)) {
                let v = s.resolve_scope(&Scope::new(Selector::One(sample.id.clone()), Selector::One(t.id.clone()))).unwrap();
                for l in &v.samples[0].fixations {
                    prop_assert!(t.contains(l.fixation.t_start));
                    prop_assert!(seen.insert(l.fixation.index, t.id.clone()).is_none());
                }
            }
        }
    }
}

#[test]
fn greedy_sweep_is_not_monotone_in_threshold() {
    // a wider threshold lets the first window swallow the start of the dwell
    // cluster and then end short of the minimum duration
    let pts: Vec<GazePoint> = [0.0, 3.0, 5.0, 3.0, 5.0]
        .iter()
        .enumerate()
        .map(|(i, &x)| GazePoint::new(i as f64 * 50.0, x, 0.0))
        .collect();
    let narrow = detect(&pts, 2.0, 100.0);
    let wide = detect(&pts, 3.0, 100.0);
    assert_eq!(covered(&narrow), 4);
    assert_eq!(covered(&wide), 3);
    assert_eq!(idt_reference(&pts, 3.0, 100.0), vec![(2, 5)]);
}

#[test]
fn coincident_and_alternating_streams() {
    let still: Vec<GazePoint> = (0..=50).map(|i| GazePoint::new(i as f64 * 10.0, 7.0, 7.0)).collect();
    let fs = detect(&still, 25.0, 100.0);
    assert_eq!(fs.len(), 1);
    assert_eq!((fs[0].t_start, fs[0].t_end), (0.0, 500.0));

    let flicker: Vec<GazePoint> = (0..100)
        .map(|i| {
            let v = if i % 2 == 0 { 0.0 } else { 1000.0 };
            GazePoint::new(i as f64 * 10.0, v, v)
        })
        .collect();
    assert!(detect(&flicker, 5.0, 100.0).is_empty());
}

#[test]
fn transition_examples_match_the_oracle() {
    let aois = abc_aois();
    let l = parse_labels("A B - A C A");
    let labels = labels_from(&l);
    let count = |kind: TransitionKind, from: &str, to: &str| {
        aoi::transition_counts(&labels, &kind, Alphabet::Aoi, &aois).unwrap().get(from, to)
    };
    assert_eq!(count(TransitionKind::Direct, "A", "B"), 1);
    assert_eq!(count(TransitionKind::Direct, "A", "C"), 1);
    assert_eq!(count(TransitionKind::Direct, "C", "A"), 1);
    assert_eq!(count(TransitionKind::Indirect, "B", "A"), 1);
    assert_eq!(count(TransitionKind::Glance, "A", "C"), 1);
    assert_eq!(count(TransitionKind::Through("C".into()), "A", "A"), 1);
    let o = transition_oracle(&l);
    assert_eq!(o.direct[0][1] + o.direct[0][2] + o.direct[2][0], 3);

    let abab = labels_from(&parse_labels("A B A B"));
    let d = aoi::transition_counts(&abab, &TransitionKind::Direct, Alphabet::Aoi, &aois).unwrap();
    assert_eq!((d.get("A", "B"), d.get("B", "A")), (2, 1));
    let g = aoi::transition_counts(&abab, &TransitionKind::Glance, Alphabet::Aoi, &aois).unwrap();
    assert_eq!((g.get("A", "B"), g.get("B", "A")), (1, 1));

    let single = labels_from(&parse_labels("A A A"));
    for kind in [TransitionKind::Direct, TransitionKind::Indirect, TransitionKind::Glance] {
        assert_eq!(aoi::transition_counts(&single, &kind, Alphabet::Aoi, &aois).unwrap().total(), 0);
    }
    assert!(aoi::transition_counts(&single, &TransitionKind::Through("Z".into()), Alphabet::Aoi, &aois).is_err());
}

#[test]
fn sequences_and_group_alphabet() {
    let mut aois = abc_aois();
    let labels = labels_from(&parse_labels("A A B A"));
    assert_eq!(aoi::aoi_sequence(&labels, Alphabet::Aoi, Collapse::PerVisit, &aois), ["A", "B", "A"]);
    assert_eq!(aoi::aoi_sequence(&labels, Alphabet::Aoi, Collapse::PerFixation, &aois), ["A", "A", "B", "A"]);
    aois[0].group_id = 7;
    aois[1].group_id = 7;
    let ab = labels_from(&parse_labels("A B"));
    assert_eq!(aoi::aoi_sequence(&ab, Alphabet::AoiGroup, Collapse::PerVisit, &aois), ["7"]);
}

#[test]
fn focus_context_examples() {
    let aois = abc_aois();
    use ContextClass::*;
    let c = aoi::focus_context(&labels_from(&parse_labels("B A A C")), "A", &aois).unwrap();
    assert_eq!(c, [Unrelated, Entering, Inside, Leaving]);
    let c = aoi::focus_context(&labels_from(&parse_labels("A B A")), "A", &aois).unwrap();
    assert_eq!(c[1], GlancingOut);
    let c = aoi::focus_context(&labels_from(&parse_labels("A A A")), "A", &aois).unwrap();
    assert!(c.iter().all(|x| *x == Inside));
}

#[test]
fn visit_example() {
    let l = parse_labels("A A B - A");
    let v = aoi::visits(&labels_from(&l));
    let lens: Vec<(String, usize)> = v.iter().map(|x| (x.aoi_id.clone(), x.len())).collect();
    assert_eq!(lens, [("A".into(), 2), ("B".into(), 1), ("A".into(), 1)]);
    assert_eq!(visits_oracle(&l).len(), 3);
}

#[test]
fn metric_examples() {
    let aois = abc_aois();
    let mut labels = labels_from(&parse_labels("A A A"));
    for (x, d) in labels.iter_mut().zip([100.0, 200.0, 300.0]) {
        x.fixation.duration = d;
    }
    let s = metrics::fixation_aoi_stats(&labels, &AoiTarget::Aoi("A".into()), &aois, 1000.0, PctDenominator::ScopedSpan);
    assert_eq!((s.count, s.total_dur, s.mean_dur, s.median_dur, s.pct_time), (3, 600.0, 200.0, 200.0, 0.6));
    let none = metrics::fixation_aoi_stats(&labels, &AoiTarget::Aoi("B".into()), &aois, 1000.0, PctDenominator::ScopedSpan);
    assert_eq!((none.count, none.total_dur, none.support()), (0, 0.0, 0));
    assert_eq!(metrics::median(&[100.0, 200.0]), 150.0);

    let m = |v: f64, n: u64| MetricValue::new("mean_duration", v, Unit::Ms, StatKind::Mean, n);
    let g = aggregate_group(&[m(200.0, 10), m(300.0, 14)]).unwrap();
    assert!((g.value - 6200.0 / 24.0).abs() < 1e-12);
    let c = |v: f64| MetricValue::new("fixation_count", v, Unit::Count, StatKind::Sum, v as u64);
    assert_eq!(aggregate_group(&[c(10.0), c(14.0)]).unwrap().value, 24.0);
    assert!(aggregate_group(&[c(1.0), m(1.0, 1)]).is_err());

    let h = metrics::histogram(&[1.0, 2.0, 3.0, 4.0], 2);
    assert_eq!((h.bin_edges, h.counts), (vec![1.0, 2.5, 4.0], vec![2, 2]));
    assert!(metrics::histogram(&[], 3).counts.is_empty());
    assert_eq!(metrics::histogram(&[5.0; 4], 3).counts.iter().filter(|c| **c > 0).count(), 1);
}

#[test]
fn pct_time_sums_to_at_most_one_over_disjoint_aois() {
    let mut r = rng(44);
    let aois = abc_aois();
    for _ in 0..500 {
        let l: Vec<Option<usize>> = (0..rand::Rng::gen_range(&mut r, 0..40))
            .map(|_| rand::Rng::gen_range(&mut r, 0..4))
            .map(|k| (k < 3).then_some(k))
            .collect();
        let labels = labels_from(&l);
        let span = labels.last().map_or(1.0, |x| x.fixation.t_end);
        let sum: f64 = SYMBOLS
            .iter()
            .map(|a| metrics::fixation_aoi_stats(&labels, &AoiTarget::Aoi(a.to_string()), &aois, span, PctDenominator::ScopedSpan).pct_time)
            .sum();
        assert!(sum <= 1.0 + 1e-12, "{sum}");
    }
}

#[test]
fn group_edits_reject_unknown_ids() {
    let s = random_session(&mut rng(3));
    let bad: BTreeMap<String, u32> = [("nope".to_string(), 2)].into();
    assert!(s.edit_groups(Dimension::Sample, &bad).is_err());
    assert!(s.resolve_scope(&Scope::new(Selector::One("nope".into()), Selector::All)).is_err());
}
