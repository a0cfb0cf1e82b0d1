//! Shared fixtures for the criterion benches.

use vizlab_core::catalog::{technique, validate_profile, RunProfile, ValidatedProfile};
use vizlab_core::field::{build_time_array, FieldTexture, FieldTextureArray};
use vizlab_core::rng::CounterRng;
use vizlab_core::synthetic::{synthetic_scene, with_scaled_params};
use vizlab_core::telemetry::{FrameSample, Session};
use vizlab_core::templates::{build_schedule, camera_at, SceneFrame, TemplateId};
use vizlab_core::{Camera, Scene};

pub const SEED: u64 = 7;

pub fn scene(count: usize) -> Scene {
    synthetic_scene(count, SEED).expect("synthetic scene")
}

/// Camera of `template` at time `t`.
pub fn camera(scene: &Scene, template: TemplateId, t: f64) -> Camera {
    let schedule = build_schedule(template, &SceneFrame::from_scene(scene)).expect("schedule");
    camera_at(&schedule, t).expect("camera")
}

pub fn profile(scene: &Scene, name: &str, techniques: &[&str]) -> ValidatedProfile {
    let p = techniques.iter().fold(RunProfile::new(name), |p, t| p.with(t));
    validate_profile(with_scaled_params(p, scene)).expect("valid profile")
}

/// Baseline plus one profile per executable pass and everything combined.
pub fn profiles(scene: &Scene) -> Vec<ValidatedProfile> {
    let all = [
        technique::FRUSTUM_CULLING,
        technique::DISTANCE_CULLING,
        technique::OCCLUSION_CULLING,
        technique::LOD,
        technique::LEVEL_STREAMING,
        technique::INSTANCING,
    ];
    let mut out = vec![ValidatedProfile::baseline()];
    out.extend(all.iter().map(|t| profile(scene, t, &[t])));
    out.push(profile(scene, "all", &all));
    out
}

/// `n` samples at 60 Hz with noisy frame times.
pub fn session(name: &str, n: usize, seed: u64) -> Session {
    let mut rng = CounterRng::new(seed, 1);
    let mut s = Session::new(name, "synth-1");
    s.samples = (0..n)
        .map(|k| {
            let ft = 10.0 + 20.0 * rng.next_f64();
            FrameSample {
                t: k as f64 / 60.0,
                fps: 1000.0 / ft,
                frame_time_ms: ft,
                cpu_load_pct: 100.0 * rng.next_f64(),
                ram_mb: 512.0 + rng.next_f64(),
                gpu_frame_time_ms: ft * 0.5,
            }
        })
        .collect();
    s
}

pub fn texture(width: usize, height: usize, seed: u64) -> FieldTexture {
    let mut rng = CounterRng::new(seed, 2);
    let mut tex = FieldTexture::zeros(width, height);
    for j in 0..height {
        for i in 0..width {
            let v = [0.0; 4].map(|_| rng.next_f64() as f32);
            tex.set_texel(i, j, v);
        }
    }
    tex
}

/// Rotating flow with `slices` time slices.
pub fn vortex(size: usize, slices: usize) -> FieldTextureArray {
    let textures = (0..slices)
        .map(|k| {
            let mut tex = FieldTexture::zeros(size, size);
            for j in 0..size {
                for i in 0..size {
                    let (x, y) = ((i as f64 + 0.5) / size as f64 - 0.5, (j as f64 + 0.5) / size as f64 - 0.5);
                    tex.set_texel(i, j, [-y as f32, x as f32, 300.0 + k as f32, 0.1]);
                }
            }
            tex
        })
        .collect();
    build_time_array(textures, (0..slices).map(|k| k as f64).collect()).expect("time array")
}
