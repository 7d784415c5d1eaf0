use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::Rng;
use std::hint::black_box;
use wavefp_core::image::{prepare, DomainKind, ImageTensor};
use wavefp_core::metrics::evaluate;
use wavefp_core::nn::{build_model, forward, loss_and_gradients, ModelConfig};
use wavefp_core::rng::rng_from;
use wavefp_core::wavelet::{dwt2d, idwt2d, wavedec2, BoundaryMode, Wavelet};

fn random_image(side: usize, seed: u64) -> ImageTensor {
    let mut rng = rng_from(&[seed]);
    ImageTensor::new(side, side, 3, (0..side * side * 3).map(|_| rng.random()).collect()).unwrap()
}

fn dwt(c: &mut Criterion) {
    let mut g = c.benchmark_group("dwt2d");
    for side in [64, 256] {
        let plane = random_image(side, 1).channel(0);
        for w in [Wavelet::Haar, Wavelet::Db2] {
            let fb = w.filter_bank();
            for mode in [BoundaryMode::Periodization, BoundaryMode::Symmetric] {
                let id = format!("{w}/{mode:?}/{side}");
                g.bench_function(BenchmarkId::new("forward", &id), |b| {
                    b.iter(|| dwt2d(black_box(plane.view()), &fb, mode).unwrap())
                });
                let quad = dwt2d(plane.view(), &fb, mode).unwrap();
                g.bench_function(BenchmarkId::new("inverse", &id), |b| {
                    b.iter(|| idwt2d(black_box(&quad), &fb, mode).unwrap())
                });
            }
        }
        let fb = Wavelet::Db2.filter_bank();
        g.bench_function(BenchmarkId::new("wavedec2_3", side), |b| {
            b.iter(|| wavedec2(black_box(plane.view()), &fb, 3, BoundaryMode::Periodization).unwrap())
        });
    }
    g.finish();
}

fn pipeline(c: &mut Criterion) {
    let img = random_image(128, 2);
    let mut g = c.benchmark_group("prepare");
    for d in [DomainKind::Spatial, DomainKind::Wavelet(Wavelet::Haar), DomainKind::Wavelet(Wavelet::Db2)] {
        g.bench_function(d.name(), |b| b.iter(|| prepare(black_box(&img), d, 64).unwrap()));
    }
    g.finish();
}

fn network(c: &mut Criterion) {
    let cfg = ModelConfig::default();
    let model = build_model(&cfg).unwrap();
    let params = model.params_f64();
    let batch: Vec<ImageTensor> = (0..32).map(|i| random_image(64, 10 + i)).collect();
    let labels: Vec<f64> = (0..32).map(|i| (i % 2) as f64).collect();
    let mut g = c.benchmark_group("cnn_batch32");
    g.sample_size(10);
    g.bench_function("forward", |b| b.iter(|| forward(&model, black_box(&batch)).unwrap()));
    g.bench_function("loss_and_gradients", |b| {
        b.iter(|| loss_and_gradients(&cfg, black_box(&params), &batch, &labels).unwrap())
    });
    g.finish();
}

fn metrics(c: &mut Criterion) {
    let mut rng = rng_from(&[3]);
    let labels: Vec<u8> = (0..10_000).map(|i| (i % 2) as u8).collect();
    let scores: Vec<f64> = (0..10_000).map(|_| rng.random()).collect();
    c.bench_function("evaluate_10k", |b| b.iter(|| evaluate(black_box(&labels), &scores).unwrap()));
}

criterion_group!(benches, dwt, pipeline, network, metrics);
criterion_main!(benches);
