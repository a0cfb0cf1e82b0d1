use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion, Throughput};
use vizlab_core::field::{decode_exr, encode_exr};
use vizlab_core::ingest::{infer_bonds, parse_pdb, write_pdb};
use vizlab_core::particles::{seed, Emitter, ParticleConfig};
use vizlab_core::synthetic::synthetic_molecule;
use vizlab_core::DVec2;

fn exr(c: &mut Criterion) {
    let tex = vizlab_bench::texture(256, 256, 3);
    let bytes = encode_exr(&tex).unwrap();
    let mut group = c.benchmark_group("exr/256x256");
    group.throughput(Throughput::Bytes(bytes.len() as u64));
    group.bench_function("encode", |b| b.iter(|| black_box(encode_exr(&tex).unwrap())));
    group.bench_function("decode", |b| b.iter(|| black_box(decode_exr(&bytes).unwrap())));
    group.finish();
}

fn advection(c: &mut Criterion) {
    let field = vizlab_bench::vortex(128, 4);
    let emitters = [Emitter::new(DVec2::new(0.3, 0.3), DVec2::new(0.7, 0.7))];
    let system = seed(10_000, &emitters, 5, ParticleConfig::default()).unwrap();
    let mut group = c.benchmark_group("particles/10k");
    group.throughput(Throughput::Elements(system.len() as u64));
    group.bench_function("rk2 step", |b| {
        let mut s = system.clone();
        let mut t = 0.0;
        b.iter(|| {
            s.step(&field, t);
            t = (t + 1.0 / 60.0) % 3.0;
        })
    });
    group.finish();
}

fn molecules(c: &mut Criterion) {
    let molecule = synthetic_molecule(20_000, 9);
    let text = write_pdb(&molecule);
    let mut group = c.benchmark_group("ingest/20k");
    group.sample_size(20);
    group.bench_function("parse_pdb", |b| b.iter(|| black_box(parse_pdb(&text).unwrap())));
    group.bench_function("infer_bonds", |b| b.iter(|| black_box(infer_bonds(&molecule.atoms).unwrap())));
    group.finish();
}

criterion_group!(benches, exr, advection, molecules);
criterion_main!(benches);
