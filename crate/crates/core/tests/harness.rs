use vizlab_core::catalog::{technique, validate_profile, RunProfile, ValidatedProfile};
use vizlab_core::synthetic::{synthetic_scene, with_scaled_params};
use vizlab_core::telemetry::{session_to_json, CostModelProbe, ProbeReading, ScheduledProbe};
use vizlab_core::templates::{run_template, run_template_observed, CameraController, HarnessConfig, TemplateId};
use vizlab_core::templates::{build_schedule, SceneFrame};

fn no_render() -> HarnessConfig {
    HarnessConfig { render: None, ..Default::default() }
}

#[test]
fn t1_has_1800_samples_and_labels() {
    let scene = synthetic_scene(500, 1).unwrap();
    let p = validate_profile(RunProfile::new("lod").with(technique::LOD)).unwrap();
    let s = run_template(&scene, &p, TemplateId::T1Spawn, &HarnessConfig::default(), &mut CostModelProbe::default()).unwrap();
    assert_eq!(s.samples.len(), 1800);
    assert_eq!(s.template.as_deref(), Some("T1"));
    assert_eq!(s.optimizations, vec!["lod".to_string()]);
    assert_eq!(s.dataset, "synth-500");
    assert!((s.sample_interval_ms - 1000.0 / 60.0).abs() < 1e-12);
    assert!(s.samples.windows(2).all(|w| w[1].t > w[0].t));
    // a static camera gives identical frames
    assert!(s.samples.iter().all(|x| x.fps == s.samples[0].fps));
}

#[test]
fn t3_spans_phases() {
    let scene = synthetic_scene(300, 2).unwrap();
    let frame = SceneFrame::from_scene(&scene);
    let schedule = build_schedule(TemplateId::T3Stress, &frame).unwrap();
    let mut kinds = Vec::new();
    let s = run_template_observed(&scene, &ValidatedProfile::baseline(), TemplateId::T3Stress, &no_render(), &mut CostModelProbe::default(), |f| {
        let k = match schedule.phase_at(f.t).unwrap().controller {
            CameraController::Static(_) => 0,
            CameraController::Orbit { .. } => 1,
            CameraController::Spline { .. } => 2,
        };
        kinds.push((f.t, k));
    })
    .unwrap();
    assert_eq!(s.samples.len(), 10_800);
    assert_eq!(kinds.iter().filter(|k| k.1 == 0).count(), 3600);
    assert_eq!(kinds.iter().filter(|k| k.1 == 1).count(), 2400);
    assert_eq!(kinds.iter().filter(|k| k.1 == 2).count(), 4800);
    let first_spline = kinds.iter().find(|k| k.1 == 2).unwrap().0;
    assert!((first_spline - 100.0).abs() < 1e-9);
}

#[test]
fn scheduled_probe_values_land_in_samples() {
    let scene = synthetic_scene(200, 3).unwrap();
    let mut probe = ScheduledProbe::new(vec![
        ProbeReading { cpu_load_pct: 37.0, ram_mb: 640.0, render_stage_ms: 2.0 },
        ProbeReading { cpu_load_pct: 41.0, ram_mb: 650.0, render_stage_ms: 3.0 },
    ]);
    let config = HarnessConfig { timestep: 0.5, ..no_render() };
    let s = run_template(&scene, &ValidatedProfile::baseline(), TemplateId::T2Lookaround, &config, &mut probe).unwrap();
    assert_eq!(s.samples.len(), 60);
    for (k, x) in s.samples.iter().enumerate() {
        assert_eq!(x.cpu_load_pct, if k % 2 == 0 { 37.0 } else { 41.0 });
    }
}

#[test]
fn optimized_profile_runs_cheaper_frames() {
    let scene = synthetic_scene(20_000, 4).unwrap();
    let mut p = RunProfile::new("opt");
    for t in [technique::FRUSTUM_CULLING, technique::LOD, technique::INSTANCING, technique::LEVEL_STREAMING] {
        p = p.with(t);
    }
    let p = validate_profile(with_scaled_params(p, &scene)).unwrap();
    let config = HarnessConfig { timestep: 0.25, ..no_render() };
    let base = run_template(&scene, &ValidatedProfile::baseline(), TemplateId::T2Lookaround, &config, &mut CostModelProbe::default()).unwrap();
    let opt = run_template(&scene, &p, TemplateId::T2Lookaround, &config, &mut CostModelProbe::default()).unwrap();
    for (b, o) in base.samples.iter().zip(&opt.samples) {
        assert!(o.frame_time_ms < b.frame_time_ms);
        assert!(o.gpu_frame_time_ms <= b.gpu_frame_time_ms);
    }
}

#[test]
fn rendered_runs_are_reproducible() {
    let scene = synthetic_scene(1_000, 5).unwrap();
    let p = validate_profile(with_scaled_params(RunProfile::new("occ").with(technique::OCCLUSION_CULLING), &scene)).unwrap();
    let config = HarnessConfig { timestep: 0.5, started_at: Some(chrono::DateTime::UNIX_EPOCH), ..Default::default() };
    let run = || {
        let mut draws = Vec::new();
        let s = run_template_observed(&scene, &p, TemplateId::T3Stress, &config, &mut CostModelProbe::default(), |f| {
            let d = f.draw.unwrap();
            draws.push((d.primitives_rasterized, d.pixels_shaded, d.overdraw_events, f.stats));
        })
        .unwrap();
        (session_to_json(&s).unwrap(), draws)
    };
    assert_eq!(run(), run());
}

#[test]
fn invalid_timestep() {
    let scene = synthetic_scene(10, 6).unwrap();
    let config = HarnessConfig { timestep: 0.0, ..no_render() };
    assert!(run_template(&scene, &ValidatedProfile::baseline(), TemplateId::T1Spawn, &config, &mut CostModelProbe::default()).is_err());
}
