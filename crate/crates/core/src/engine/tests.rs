use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Duration;

use super::threaded::ThreadedEngine;
use super::*;
use crate::gbrt::GbrtError;

fn small_pipeline() -> PipelineParams {
    PipelineParams {
        w: 2,
        n_img: 3,
        t0: 0.2,
        n_r: 5,
        t_f: 0.5,
        frame_rate: 10.0,
    }
}

fn config(n_stas: usize, capacity: QueueCapacity, min_train: usize) -> EngineConfig {
    EngineConfig {
        n_stas,
        queue_capacity: capacity,
        retrain_min_interval_s: 1.0,
        min_train_samples: min_train,
        gbrt: GbrtParams {
            num_leaves: 4,
            max_depth: 3,
            num_rounds: 5,
            min_samples_leaf: 2,
            ..GbrtParams::default()
        },
        pipeline: small_pipeline(),
    }
}

fn power(tick: usize, sta: usize) -> PowerSample {
    let t = tick as f64 / 10.0;
    PowerSample {
        t,
        tx: sta,
        power_dbm: -50.0 + 3.0 * (0.7 * t + sta as f64).sin(),
    }
}

fn image(tick: usize) -> Arc<GrayImage<f64>> {
    let t = tick as f64 / 10.0;
    Arc::new(GrayImage {
        t,
        w: 2,
        pixels: (0..4).map(|i| ((tick * 7 + i * 13) % 29) as f64).collect(),
    })
}

/// Ticks `0..n` at 10 Hz, power for every STA before the frame.
fn drive(engine: &mut Engine<f64>, ticks: std::ops::Range<usize>) -> Vec<PredictionRecord> {
    let mut out = Vec::new();
    for k in ticks {
        for sta in 0..engine.config().n_stas {
            engine.ingest_power(power(k, sta)).unwrap();
        }
        out.extend(engine.ingest_image(image(k)).unwrap());
        engine.schedule_training(k as f64 / 10.0);
    }
    out
}

#[test]
fn first_frame_yields_nothing() {
    let mut e = Engine::<f64>::new(config(1, QueueCapacity::Bounded(10), 5), FeatureKind::RpIm).unwrap();
    e.ingest_power(power(0, 0)).unwrap();
    assert!(e.ingest_image(image(0)).unwrap().is_empty());
    assert_eq!(e.slot(0).unwrap().pending_features(), 0);
}

#[test]
fn power_sample_labels_pending_features_by_hand_count() {
    // Window 0.4 s: features exist at t = 0.4 ... 0.9, six of them. The
    // power sample at 0.9 already labels t = 0.4.
    let mut e = Engine::<f64>::new(config(1, QueueCapacity::Bounded(4), 50), FeatureKind::Rp).unwrap();
    for k in 0..10 {
        e.ingest_power(power(k, 0)).unwrap();
        e.ingest_image(image(k)).unwrap();
    }
    assert_eq!(e.slot(0).unwrap().pending_features(), 5);
    assert_eq!(e.slot(0).unwrap().queue().len(), 1);
    // t* = 1.1 completes t <= 0.6: two more.
    assert_eq!(e.ingest_power(power(11, 0)).unwrap(), 2);
    assert_eq!(e.slot(0).unwrap().queue().len(), 3);
    // t* = 1.4 completes the other three; the queue caps at 4.
    assert_eq!(e.ingest_power(power(14, 0)).unwrap(), 3);
    let q = e.slot(0).unwrap().queue();
    assert_eq!(q.len(), 4);
    assert!((q.oldest().unwrap().feature.t - 0.6).abs() < 1e-9);
    assert_eq!(e.slot(0).unwrap().pending_features(), 0);
}

#[test]
fn too_few_samples_skips_training() {
    let mut e = Engine::<f64>::new(config(1, QueueCapacity::Bounded(100), 20), FeatureKind::Rp).unwrap();
    drive(&mut e, 0..12);
    assert_eq!(e.slot(0).unwrap().queue().len(), 3);
    assert!(e.schedule_training(2.0).is_empty());
    assert!(e.slot(0).unwrap().model().is_none());
}

#[test]
fn one_prediction_per_feature_once_trained() {
    let mut e = Engine::<f64>::new(config(2, QueueCapacity::Bounded(100), 10), FeatureKind::RpIm).unwrap();
    let preds = drive(&mut e, 0..60);
    let first = e.training_log()[0].clock;
    for sta in 0..2 {
        let trained_at = e
            .training_log()
            .iter()
            .find(|r| r.sta == sta)
            .map(|r| r.clock)
            .unwrap();
        let mine: Vec<_> = preds.iter().filter(|p| p.sta == sta).collect();
        // Every frame strictly after the first training predicts exactly once.
        let expected = (0..60).filter(|k| *k as f64 / 10.0 > trained_at + 1e-9).count();
        assert_eq!(mine.len(), expected, "sta {sta}");
        assert!(mine.windows(2).all(|w| w[1].t > w[0].t));
        assert!(mine.iter().all(|p| p.model_version >= 1 && p.method == MethodKind::RpIm));
    }
    assert!(first >= 1.4);
}

#[test]
fn round_robin_order() {
    let mut e = Engine::<f64>::new(config(2, QueueCapacity::Bounded(100), 10), FeatureKind::Rp).unwrap();
    // Only STA 0 gets power, so only slot 0 becomes eligible.
    for k in 0..20 {
        e.ingest_power(power(k, 0)).unwrap();
        e.ingest_image(image(k)).unwrap();
    }
    let done = e.schedule_training(1.9);
    assert_eq!(done.iter().map(|r| r.sta).collect::<Vec<_>>(), vec![0]);
    // Now both slots hold enough samples; slot 1 is next in line.
    for k in 0..20 {
        e.ingest_power(power(k, 1)).unwrap();
    }
    for k in 20..40 {
        e.ingest_power(power(k, 0)).unwrap();
        e.ingest_power(power(k, 1)).unwrap();
        e.ingest_image(image(k)).unwrap();
    }
    let done = e.schedule_training(3.9);
    assert_eq!(done.iter().map(|r| r.sta).collect::<Vec<_>>(), vec![1, 0]);
    // Slot 0 was served last, so slot 1 leads again.
    let done = e.schedule_training(4.9);
    assert_eq!(done.iter().map(|r| r.sta).collect::<Vec<_>>(), vec![1, 0]);
}

#[test]
fn retrain_interval_gates_eligibility() {
    let mut e = Engine::<f64>::new(config(1, QueueCapacity::Bounded(100), 10), FeatureKind::Rp).unwrap();
    drive(&mut e, 0..40);
    let clocks: Vec<f64> = e.training_log().iter().map(|r| r.clock).collect();
    assert!(clocks.windows(2).all(|w| w[1] - w[0] >= 1.0 - 1e-9), "{clocks:?}");
}

struct FailAfter {
    ok_calls: usize,
    calls: AtomicUsize,
}

impl Trainer<f64> for FailAfter {
    fn train(&self, samples: &[LabeledSample<f64>], params: &GbrtParams) -> Result<GbrtModel<f64>, GbrtError> {
        if self.calls.fetch_add(1, Ordering::SeqCst) >= self.ok_calls {
            return Err(GbrtError::TooFewSamples { got: 0, need: 5 });
        }
        GbrtTrainer.train(samples, params)
    }
}

#[test]
fn failed_training_keeps_previous_model() {
    let trainer = FailAfter {
        ok_calls: 1,
        calls: AtomicUsize::new(0),
    };
    let cfg = config(1, QueueCapacity::Bounded(100), 10);
    let mut e = Engine::<f64>::with_trainer(cfg, FeatureKind::Rp, Box::new(trainer)).unwrap();
    let preds = drive(&mut e, 0..50);
    assert!(e.training_log().len() >= 2);
    assert!(matches!(e.training_log()[1].outcome, TrainingOutcome::Skipped(_)));
    assert_eq!(e.slot(0).unwrap().model().unwrap().version, 1);
    assert!(preds.iter().all(|p| p.model_version == 1));
}

#[test]
fn replay_is_deterministic() {
    let run = || {
        let mut e = Engine::<f64>::new(config(2, QueueCapacity::Bounded(30), 10), FeatureKind::RpIm).unwrap();
        let p = drive(&mut e, 0..80);
        (p, e.training_log().to_vec())
    };
    let a = run();
    assert!(!a.0.is_empty());
    assert_eq!(a, run());
}

#[test]
fn timestamp_regression_is_an_error() {
    let mut e = Engine::<f64>::new(config(1, QueueCapacity::Bounded(10), 5), FeatureKind::Rp).unwrap();
    e.ingest_power(power(5, 0)).unwrap();
    assert!(matches!(
        e.ingest_power(power(4, 0)),
        Err(EngineError::TimestampRegression { sta: 0, .. })
    ));
    e.ingest_image(image(5)).unwrap();
    assert!(matches!(e.ingest_image(image(3)), Err(EngineError::FrameRegression { .. })));
    assert!(matches!(e.ingest_power(power(6, 3)), Err(EngineError::UnknownSta(3))));
}

#[test]
fn config_toml_round_trip_and_validation() {
    let cfg = EngineConfig {
        queue_capacity: QueueCapacity::Unbounded,
        ..EngineConfig::default()
    };
    let text = cfg.to_toml_string();
    assert!(text.contains("queue_capacity = \"inf\""));
    assert_eq!(EngineConfig::from_toml_str(&text).unwrap(), cfg);

    let minimal = "n_stas = 2\nqueue_capacity = 150\nretrain_min_interval_s = 5.0\nmin_train_samples = 50\n";
    let parsed = EngineConfig::from_toml_str(minimal).unwrap();
    assert_eq!(parsed.gbrt, GbrtParams::default());
    assert_eq!(parsed.pipeline, PipelineParams::default());

    let bad = minimal.replace("n_stas = 2", "n_stas = 0");
    assert!(matches!(
        EngineConfig::from_toml_str(&bad),
        Err(EngineError::Invalid { field: "n_stas", .. })
    ));
    let bad = minimal.replace("5.0", "-1.0");
    assert!(EngineConfig::from_toml_str(&bad).is_err());
    let bad = minimal.replace("150", "0");
    assert!(matches!(EngineConfig::from_toml_str(&bad), Err(EngineError::Parse(_))));
}

/// Sleeps before delegating, so training jobs take real time.
struct SlowTrainer(Duration);

impl Trainer<f64> for SlowTrainer {
    fn train(&self, samples: &[LabeledSample<f64>], params: &GbrtParams) -> Result<GbrtModel<f64>, GbrtError> {
        std::thread::sleep(self.0);
        GbrtTrainer.train(samples, params)
    }
}

#[test]
fn threaded_predictions_use_previous_model_while_training() {
    let cfg = config(2, QueueCapacity::Bounded(100), 10);
    let trainer: Arc<dyn Trainer<f64>> = Arc::new(SlowTrainer(Duration::from_millis(40)));
    let mut e = ThreadedEngine::with_trainer(cfg, FeatureKind::RpIm, trainer, 3).unwrap();
    for k in 0..120 {
        for sta in 0..2 {
            e.ingest_power(power(k, sta)).unwrap();
        }
        e.ingest_image(image(k)).unwrap();
        e.schedule_training(k as f64 / 10.0);
        std::thread::sleep(Duration::from_millis(3));
    }
    let report = e.shutdown();
    assert!(report.intervals.len() >= 4);
    assert_eq!(report.overlapping_intervals(), 0);
    assert_eq!(report.max_concurrent_jobs, 1);
    assert!(report.predictions_during_training() > 0);
    // A prediction made during a job on its own STA uses an older version.
    for p in &report.predictions {
        for iv in &report.intervals {
            if iv.sta == p.record.sta && p.wall_s > iv.start_s && p.wall_s < iv.end_s {
                assert!(p.record.model_version < iv.version.unwrap());
            }
        }
    }
}
