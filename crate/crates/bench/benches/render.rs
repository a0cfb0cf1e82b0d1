use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use vizlab_core::optimizer::run_pipeline;
use vizlab_core::render::{reference_render, render_frame, Shading};
use vizlab_core::scene::WhiskerFlags;
use vizlab_core::templates::TemplateId;
use vizlab_core::ValidatedProfile;

fn raster(c: &mut Criterion) {
    let scene = vizlab_bench::scene(20_000);
    let camera = vizlab_bench::camera(&scene, TemplateId::T1Spawn, 0.0);
    let none = WhiskerFlags::none(scene.len());
    let (visible, _) = run_pipeline(&scene, &none, &camera, &ValidatedProfile::baseline());
    let mut group = c.benchmark_group("render/20k");
    group.sample_size(20);
    for size in [(160, 90), (640, 360)] {
        group.bench_with_input(BenchmarkId::new("frame", format!("{}x{}", size.0, size.1)), &size, |b, &s| {
            b.iter(|| black_box(render_frame(&visible, &scene, &camera, s, Shading::Flat).unwrap()))
        });
    }
    group.bench_function("reference/640x360", |b| b.iter(|| black_box(reference_render(&scene, &camera, (640, 360)).unwrap())));
    group.finish();
}

criterion_group!(benches, raster);
criterion_main!(benches);
