use criterion::{black_box, criterion_group, criterion_main, Criterion};
use wxcast_core::dataset::{build_windows, chronological_split, generate_synthetic, seasonal_runs, NormalizationParams, SyntheticProfile};
use wxcast_core::math::{lstsq, svd, uniform_matrix, SeededRng};
use wxcast_core::models::{feedforward_forward, sequence_forward, FeedforwardParams, LstmParams, LstmPcParams, ModelKind};
use wxcast_core::training::{backprop_feedforward, bptt, elm_ensemble_fit, ensemble_seeds, train_iterative, TrainConfig};
use wxcast_core::{SampleSet, Season, WindowSpec};

fn summer_samples(testing: u8) -> SampleSet {
    let data = generate_synthetic("bench", 1, 7, &SyntheticProfile::temperate());
    let (train, _) = chronological_split(&data, &Default::default()).unwrap();
    let runs = seasonal_runs(&train, Season::Summer);
    let norm = NormalizationParams::fit(&runs).unwrap();
    build_windows(&runs, WindowSpec::new(testing).unwrap(), &norm)
}

fn forward_backward(c: &mut Criterion) {
    let mut rng = SeededRng::new(1);
    let spec = WindowSpec::new(3).unwrap();
    let x = vec![0.3, 0.5, 0.7, 0.2, 0.4, 0.6];
    let dnn = FeedforwardParams::init(ModelKind::Dnn, 6, &mut rng);
    let lstm = LstmParams::init(4, &mut rng);
    let pc = LstmPcParams::init(4, &mut rng);

    c.bench_function("dnn_forward", |b| b.iter(|| feedforward_forward(&dnn, black_box(&x)).unwrap().0));
    c.bench_function("dnn_backprop", |b| b.iter(|| backprop_feedforward(&dnn, black_box(&x), 0.5).unwrap()));
    c.bench_function("lstm_forward", |b| b.iter(|| sequence_forward(&lstm, black_box(&x), spec).unwrap().0));
    c.bench_function("lstm_bptt", |b| b.iter(|| bptt(&lstm, black_box(&x), 0.5, spec).unwrap()));
    c.bench_function("lstm_pc_bptt", |b| b.iter(|| bptt(&pc, black_box(&x), 0.5, spec).unwrap()));
}

fn fitting(c: &mut Criterion) {
    let samples = summer_samples(3);
    let mut rng = SeededRng::new(2);
    let g = uniform_matrix(&mut rng, samples.len(), 20, 0.0, 1.0);

    c.bench_function("svd_season_x20", |b| b.iter(|| svd(black_box(&g))));
    c.bench_function("lstsq_season_x20", |b| b.iter(|| lstsq(black_box(&g), &samples.targets).unwrap()));
    c.bench_function("elm_ensemble_fit", |b| b.iter(|| elm_ensemble_fit(&samples, 20, &ensemble_seeds(3)).unwrap()));

    let mut group = c.benchmark_group("train_25_epochs");
    group.sample_size(10);
    for kind in [ModelKind::Ann, ModelKind::Dnn, ModelKind::Lstm, ModelKind::LstmPc] {
        let lr = if kind.is_recurrent() { 0.005 } else { 0.5 };
        let config = TrainConfig::new(lr, 25, 4);
        group.bench_function(kind.name(), |b| b.iter(|| train_iterative(kind, &samples, &config).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, forward_backward, fitting);
criterion_main!(benches);
