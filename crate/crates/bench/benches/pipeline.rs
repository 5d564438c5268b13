use criterion::{black_box, criterion_group, criterion_main, Criterion};
use csiwave::pipeline::{preprocess, PreprocessConfig};
use csiwave_bench::recording;

fn preprocessing(c: &mut Criterion) {
    let rec = recording(7, 0);
    let cfg = PreprocessConfig::default();
    c.bench_function("preprocess_recording", |b| b.iter(|| preprocess(black_box(&rec), &cfg).unwrap()));
}

fn synthesis(c: &mut Criterion) {
    let mut group = c.benchmark_group("synthesize_recording");
    group.sample_size(20);
    group.bench_function("preset_7", |b| b.iter(|| recording(black_box(7), 0)));
    group.finish();
}

criterion_group!(benches, preprocessing, synthesis);
criterion_main!(benches);
