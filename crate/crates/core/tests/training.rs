use wavefp_core::data::{SplitSpec, SynthConfig};
use wavefp_core::experiment::{run_domain, SplitData};
use wavefp_core::image::{DomainKind, ImageTensor};
use wavefp_core::nn::{bce_loss, build_model, forward, predict, ModelConfig, TrainConfig};
use wavefp_core::wavelet::Wavelet;

fn tiny_data() -> SplitData {
    let synth = SynthConfig { side: 16, ..Default::default() };
    SplitData::from_synth(12, &synth, 3, &SplitSpec::new(0.5, 0.25, 0.25, 3).unwrap()).unwrap()
}

fn tiny_model() -> ModelConfig {
    ModelConfig {
        input_side: 16,
        channels_per_block: vec![4, 8],
        seed: 5,
        ..Default::default()
    }
}

fn tiny_train() -> TrainConfig {
    TrainConfig {
        learning_rate: 1e-3,
        batch_size: 4,
        max_epochs: 6,
        plateau_patience: 1,
        early_stop_patience: 3,
        ..Default::default()
    }
}

/// Regression guard on the forward pass of a fixed model and fixture.
#[test]
fn forward_pass_matches_recorded_values() {
    let model = build_model(&ModelConfig {
        input_side: 16,
        dense_hidden: 5,
        seed: 42,
        ..Default::default()
    })
    .unwrap();
    let images: Vec<ImageTensor> = (0..3)
        .map(|k| {
            let data = (0..16 * 16 * 3).map(|i| ((i * 7 + k * 13) % 11) as f64 / 10.0).collect();
            ImageTensor::new(16, 16, 3, data).unwrap()
        })
        .collect();
    let probs = forward(&model, &images).unwrap();
    let recorded = [0.7984391420531582, 0.7960571153702608, 0.7892705704588535];
    for (p, r) in probs.iter().zip(recorded) {
        assert!((p - r).abs() < 1e-10, "{p} vs {r}");
    }
}

#[test]
fn training_is_bit_reproducible() {
    let data = tiny_data();
    let domain = DomainKind::Wavelet(Wavelet::Db2);
    let a = run_domain(&data, domain, &tiny_model(), &tiny_train(), |_| {}).unwrap();
    let b = run_domain(&data, domain, &tiny_model(), &tiny_train(), |_| {}).unwrap();
    assert_eq!(a.history.to_csv(), b.history.to_csv());
    assert_eq!(a.model.params(), b.model.params());
    assert_eq!(a.report.record(), b.report.record());
}

#[test]
fn history_obeys_checkpoint_and_schedule_invariants() {
    let data = tiny_data();
    let run = run_domain(&data, DomainKind::Spatial, &tiny_model(), &tiny_train(), |_| {}).unwrap();
    let epochs = &run.history.epochs;
    assert!(!epochs.is_empty() && epochs.len() <= 6);
    assert_eq!(epochs.iter().filter(|e| e.checkpointed).count(), 1);
    for w in epochs.windows(2) {
        assert!(w[1].lr <= w[0].lr);
        assert_eq!(w[1].epoch, w[0].epoch + 1);
    }
    let best = run.history.best_epoch().unwrap();
    let min = epochs.iter().map(|e| e.val_loss).fold(f64::INFINITY, f64::min);
    assert_eq!(best.val_loss, min);

    // The returned parameters reproduce the checkpointed validation loss.
    let images: Vec<ImageTensor> = data.val.iter().map(|e| e.image.clone()).collect();
    let labels: Vec<u8> = data.val.iter().map(|e| e.label.as_u8()).collect();
    let probs = predict(&run.model, &images, DomainKind::Spatial).unwrap();
    let loss = bce_loss(&probs, &labels).unwrap();
    assert!((loss - best.val_loss).abs() < 1e-9, "{loss} vs {}", best.val_loss);
    assert_eq!(run.model.training_seed, Some(tiny_train().seed));
}

#[test]
fn identical_architecture_across_domains() {
    let data = tiny_data();
    let cfg = TrainConfig { max_epochs: 1, ..tiny_train() };
    let counts: Vec<usize> = [DomainKind::Spatial, DomainKind::Wavelet(Wavelet::Haar)]
        .into_iter()
        .map(|d| run_domain(&data, d, &tiny_model(), &cfg, |_| {}).unwrap().param_count)
        .collect();
    assert_eq!(counts[0], counts[1]);
}
