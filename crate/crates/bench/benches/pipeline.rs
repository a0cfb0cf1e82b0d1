use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use vizlab_core::optimizer::run_pipeline;
use vizlab_core::scene::WhiskerFlags;
use vizlab_core::templates::{run_template, HarnessConfig, TemplateId};
use vizlab_core::telemetry::CostModelProbe;

fn passes(c: &mut Criterion) {
    let scene = vizlab_bench::scene(100_000);
    let camera = vizlab_bench::camera(&scene, TemplateId::T3Stress, 120.0);
    let none = WhiskerFlags::none(scene.len());
    let mut group = c.benchmark_group("pipeline/100k");
    group.throughput(Throughput::Elements(scene.len() as u64));
    group.sample_size(20);
    for profile in vizlab_bench::profiles(&scene) {
        let name = if profile.profile().name.is_empty() { "baseline".to_string() } else { profile.profile().name.clone() };
        group.bench_with_input(BenchmarkId::from_parameter(name), &profile, |b, p| {
            b.iter(|| black_box(run_pipeline(&scene, &none, &camera, p)))
        });
    }
    group.finish();
}

fn scaling(c: &mut Criterion) {
    let mut group = c.benchmark_group("pipeline/frustum+lod");
    for n in [10_000, 50_000, 200_000] {
        let scene = vizlab_bench::scene(n);
        let camera = vizlab_bench::camera(&scene, TemplateId::T2Lookaround, 7.5);
        let profile = vizlab_bench::profile(&scene, "fl", &["frustum_culling", "lod"]);
        let none = WhiskerFlags::none(scene.len());
        group.throughput(Throughput::Elements(n as u64));
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| black_box(run_pipeline(&scene, &none, &camera, &profile)))
        });
    }
    group.finish();
}

fn template_run(c: &mut Criterion) {
    let scene = vizlab_bench::scene(5_000);
    let profile = vizlab_bench::profile(&scene, "fl", &["frustum_culling", "lod", "instancing"]);
    let config = HarnessConfig { timestep: 0.25, render: None, ..Default::default() };
    let mut group = c.benchmark_group("template");
    group.sample_size(10);
    group.bench_function("t2/5k/120 frames", |b| {
        b.iter(|| run_template(&scene, &profile, TemplateId::T2Lookaround, &config, &mut CostModelProbe::default()).unwrap())
    });
    group.finish();
}

criterion_group!(benches, passes, scaling, template_run);
criterion_main!(benches);
