use proptest::prelude::*;

use vizlab_core::analytics::{compare, summarize, threshold_report, small_multiples, TimeWindow, Winner};
use vizlab_core::metrics::MetricKind;
use vizlab_core::telemetry::{session_from_json, session_to_json, FrameSample, Session};
use vizlab_core::templates::{build_schedule, camera_at, SceneFrame, TemplateId};
use vizlab_core::DVec3;

fn session_strategy(max_len: usize) -> impl Strategy<Value = Session> {
    prop::collection::vec((1e-4f64..0.05, 0.5f64..120.0, 0.0f64..100.0, 1.0f64..4096.0, 0.0f64..30.0), 1..max_len).prop_map(
        |rows| {
            let mut s = Session::new("p", "synth-1");
            let mut t = 0.0;
            s.samples = rows
                .into_iter()
                .map(|(gap, ft, cpu, ram, gpu)| {
                    t += gap;
                    FrameSample { t, fps: 1000.0 / ft, frame_time_ms: ft, cpu_load_pct: cpu, ram_mb: ram, gpu_frame_time_ms: gpu }
                })
                .collect();
            s
        },
    )
}

fn metric() -> impl Strategy<Value = MetricKind> {
    prop::sample::select(MetricKind::ALL.to_vec())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn summary_bounds(s in session_strategy(300)) {
        let sum = summarize(&s, None).unwrap();
        for m in MetricKind::ALL {
            let st = sum.metrics[&m];
            prop_assert!(st.min <= st.mean * (1.0 + 1e-12) && st.mean <= st.max * (1.0 + 1e-12));
        }
        prop_assert!(sum.one_pct_low_fps <= sum.mean(MetricKind::Fps) * (1.0 + 1e-12));
        let full = TimeWindow::new(0.0, s.samples.last().unwrap().t).unwrap();
        prop_assert_eq!(summarize(&s, Some(full)).unwrap(), sum);
    }

    #[test]
    fn compare_antisymmetric(a in session_strategy(80), b in session_strategy(80), m in metric()) {
        let ab = compare(&a, &b, m, None).unwrap();
        let ba = compare(&b, &a, m, None).unwrap();
        let swapped = match ab.winner { Winner::A => Winner::B, Winner::B => Winner::A, Winner::Tie => Winner::Tie };
        prop_assert_eq!(ba.winner, swapped);
        prop_assert_eq!(ab.means, (ba.means.1, ba.means.0));
    }

    #[test]
    fn common_window_uses_same_rule(a in session_strategy(80), b in session_strategy(80), m in metric(), f in 0.0f64..1.0) {
        let end = a.samples.last().unwrap().t.min(b.samples.last().unwrap().t);
        let w = TimeWindow::new(0.0, end * f.max(0.5)).unwrap();
        let mut ta = a.clone();
        let mut tb = b.clone();
        ta.samples.retain(|s| w.contains(s.t));
        tb.samples.retain(|s| w.contains(s.t));
        if !ta.samples.is_empty() && !tb.samples.is_empty() {
            prop_assert_eq!(compare(&a, &b, m, Some(w)).unwrap(), compare(&ta, &tb, m, None).unwrap());
        }
    }

    #[test]
    fn threshold_fraction_in_unit_interval(s in session_strategy(200), m in metric(), thr in 0.0f64..200.0) {
        let r = threshold_report(std::slice::from_ref(&s), m, thr).unwrap();
        let f = r.sessions[0].fraction_meeting;
        prop_assert!((0.0..=1.0).contains(&f));
        prop_assert_eq!(r.sessions[0].meeting as f64 / s.samples.len() as f64, f);
    }

    #[test]
    fn multiples_bounded(s in session_strategy(400), m in metric(), points in 2usize..64) {
        let series = small_multiples(std::slice::from_ref(&s), m, points).unwrap();
        let pts = &series[0].points;
        prop_assert!(pts.len() <= points.max(s.samples.len().min(points)));
        prop_assert!(pts.windows(2).all(|w| w[0].t < w[1].t));
        let lo = s.samples.iter().map(|x| x.value(m)).fold(f64::INFINITY, f64::min);
        let hi = s.samples.iter().map(|x| x.value(m)).fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(pts.iter().all(|p| p.value >= lo * (1.0 - 1e-12) && p.value <= hi * (1.0 + 1e-12)));
    }

    #[test]
    fn json_identity(s in session_strategy(50)) {
        let back = session_from_json(&session_to_json(&s).unwrap()).unwrap();
        prop_assert_eq!(&back, &s);
        for x in &back.samples {
            prop_assert!(((x.fps * x.frame_time_ms) - 1000.0).abs() <= 1e-6 * 1000.0);
        }
    }

    #[test]
    fn camera_at_total_and_pure(
        pts in prop::collection::vec((-50.0f64..50.0, -50.0f64..50.0, -50.0f64..50.0), 4..40),
        which in 0usize..3,
        u in 0.0f64..=1.0,
    ) {
        let pts: Vec<DVec3> = pts.into_iter().map(|(x, y, z)| DVec3::new(x, y, z)).collect();
        let frame = SceneFrame::from_points(&pts);
        prop_assume!(frame.radius() > 1e-6);
        let template = TemplateId::ALL[which];
        let s = build_schedule(template, &frame).unwrap();
        let t = u * s.total;
        let a = camera_at(&s, t).unwrap();
        prop_assert!(a.position.is_finite() && a.forward.is_finite());
        prop_assert!((a.forward.length() - 1.0).abs() < 1e-9);
        prop_assert_eq!(a, camera_at(&s, t).unwrap());
    }
}
