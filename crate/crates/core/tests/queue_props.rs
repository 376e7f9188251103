use std::collections::VecDeque;
use std::sync::Arc;

use linkpred::engine::{Engine, EngineConfig, QueueCapacity, TrainingQueue};
use linkpred::gbrt::GbrtParams;
use linkpred::pipeline::{FeatureKind, FeatureVector, GrayImage, LabeledSample, PipelineParams};
use linkpred::scene::PowerSample;
use proptest::prelude::*;

fn sample(t: f64) -> LabeledSample<f64> {
    LabeledSample {
        feature: FeatureVector::from_values(t, FeatureKind::Rp, vec![t]),
        label: -t,
        label_t: t + 1.0,
    }
}

proptest! {
    #[test]
    fn fifo_matches_model(cap in 1usize..40, n in 0usize..200) {
        let mut q = TrainingQueue::new(QueueCapacity::Bounded(cap));
        let mut model: VecDeque<f64> = VecDeque::new();
        for k in 0..n {
            let t = k as f64 * 0.1;
            q.push_sample(sample(t));
            model.push_back(t);
            if model.len() > cap {
                model.pop_front();
            }
            prop_assert!(q.len() <= cap);
            let got: Vec<f64> = q.iter().map(|s| s.feature.t).collect();
            prop_assert_eq!(&got, &model.iter().copied().collect::<Vec<_>>());
        }
    }

    #[test]
    fn unbounded_never_evicts(n in 0usize..500) {
        let mut q = TrainingQueue::new(QueueCapacity::Unbounded);
        for k in 0..n {
            q.push_sample(sample(k as f64));
        }
        prop_assert_eq!(q.len(), n);
        prop_assert_eq!(q.oldest().map(|s| s.feature.t), (n > 0).then_some(0.0));
    }

    /// Drives an engine at F = 10 with power on the beacon grid. After every
    /// tick the oldest entry is at most N_q/F + T_f + 1/F old.
    #[test]
    fn age_bound_holds(cap in 1usize..80, ticks in 10usize..400, tf_ticks in 1usize..15, n_img in 1usize..4) {
        let t_f = tf_ticks as f64 / 10.0;
        let cfg = EngineConfig {
            n_stas: 1,
            queue_capacity: QueueCapacity::Bounded(cap),
            retrain_min_interval_s: 1e9,
            min_train_samples: 1_000_000,
            gbrt: GbrtParams::default(),
            pipeline: PipelineParams { w: 1, n_img, t0: 0.1, n_r: 2, t_f, frame_rate: 10.0 },
        };
        let mut e = Engine::<f64>::new(cfg, FeatureKind::Rp).unwrap();
        for k in 0..ticks {
            let now = k as f64 / 10.0;
            e.ingest_power(PowerSample { t: now, tx: 0, power_dbm: -50.0 - (k % 7) as f64 }).unwrap();
            e.ingest_image(Arc::new(GrayImage { t: now, w: 1, pixels: vec![0.0] })).unwrap();
            let q = e.slot(0).unwrap().queue();
            prop_assert!(q.len() <= cap);
            let times: Vec<f64> = q.iter().map(|s| s.feature.t).collect();
            prop_assert!(times.windows(2).all(|w| w[0] < w[1]));
            if let Some(oldest) = q.oldest() {
                let bound = cap as f64 / 10.0 + t_f + 0.1;
                prop_assert!(now - oldest.feature.t <= bound + 1e-9, "age {} > {}", now - oldest.feature.t, bound);
            }
        }
        if ticks > n_img + tf_ticks + 3 {
            prop_assert!(!e.slot(0).unwrap().queue().is_empty());
        }
    }
}
