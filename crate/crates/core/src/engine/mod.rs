//! Online training and prediction: one slot per STA, a shared camera feed,
//! bounded training queues and a single sequential training worker.
//!
//! [`Engine`] interleaves ingestion, prediction and training on one thread in
//! simulated time, which makes runs replayable. [`threaded`] runs the same
//! steps with real threads.

pub mod log;
mod queue;
mod record;
pub mod threaded;

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gbrt::{self, GbrtError, GbrtModel, GbrtParams};
use crate::pipeline::{to_gray, FeatureKind, FeatureVector, FeaturePipeline, GrayImage, ImageHistory, LabeledSample, PipelineError, PipelineParams};
use crate::scene::{splitmix64, Frame, PowerSample, SceneEvent};
use crate::Scalar;

pub use queue::{QueueCapacity, TrainingQueue};
pub use record::{MethodKind, PredictionRecord, TrainingOutcome, TrainingRecord};

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Gbrt(#[from] GbrtError),
    #[error("stream error: STA {sta} timestamp went back from {last} s to {got} s")]
    TimestampRegression { sta: usize, last: f64, got: f64 },
    #[error("stream error: frame timestamp went back from {last} s to {got} s")]
    FrameRegression { last: f64, got: f64 },
    #[error("unknown STA {0}")]
    UnknownSta(usize),
    #[error("invalid engine config `{field}`: {message}")]
    Invalid { field: &'static str, message: String },
    #[error("engine profile parse error: {0}")]
    Parse(String),
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngineConfig {
    pub n_stas: usize,
    pub queue_capacity: QueueCapacity,
    pub retrain_min_interval_s: f64,
    pub min_train_samples: usize,
    #[serde(default)]
    pub gbrt: GbrtParams,
    #[serde(default)]
    pub pipeline: PipelineParams,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            n_stas: 2,
            queue_capacity: QueueCapacity::Bounded(500),
            retrain_min_interval_s: 5.0,
            min_train_samples: 50,
            gbrt: GbrtParams::default(),
            pipeline: PipelineParams::default(),
        }
    }
}

impl EngineConfig {
    pub fn validate(&self) -> Result<(), EngineError> {
        if self.n_stas < 1 {
            return Err(EngineError::Invalid {
                field: "n_stas",
                message: "must be >= 1".into(),
            });
        }
        if !(self.retrain_min_interval_s >= 0.0) {
            return Err(EngineError::Invalid {
                field: "retrain_min_interval_s",
                message: "must be >= 0".into(),
            });
        }
        if self.min_train_samples < gbrt::MIN_TRAIN_SAMPLES {
            return Err(EngineError::Invalid {
                field: "min_train_samples",
                message: format!("must be >= {}", gbrt::MIN_TRAIN_SAMPLES),
            });
        }
        self.gbrt.validate()?;
        self.pipeline.validate()?;
        Ok(())
    }

    pub fn from_toml_str(text: &str) -> Result<Self, EngineError> {
        let cfg: EngineConfig = toml::from_str(text).map_err(|e| EngineError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, EngineError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| EngineError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        Self::from_toml_str(&text).map_err(|e| match e {
            EngineError::Parse(m) => EngineError::Parse(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("engine config serializes")
    }
}

/// Fits a model to a queue snapshot. Tests substitute slow or failing
/// trainers.
pub trait Trainer<T>: Send + Sync {
    fn train(&self, samples: &[LabeledSample<T>], params: &GbrtParams) -> Result<GbrtModel<T>, GbrtError>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct GbrtTrainer;

impl<T: Scalar> Trainer<T> for GbrtTrainer {
    fn train(&self, samples: &[LabeledSample<T>], params: &GbrtParams) -> Result<GbrtModel<T>, GbrtError> {
        let rows: Vec<_> = samples.iter().map(|s| &s.feature).collect();
        let labels: Vec<T> = samples.iter().map(|s| s.label).collect();
        gbrt::train(&rows, &labels, params)
    }
}

/// Published model with its version number.
#[derive(Debug)]
pub struct PublishedModel<T> {
    pub version: u64,
    pub model: Arc<GbrtModel<T>>,
}

#[derive(Debug)]
pub struct StaSlot<T> {
    pub sta: usize,
    pipeline: FeaturePipeline<T>,
    queue: TrainingQueue<T>,
    model: Option<PublishedModel<T>>,
    last_trained_at: Option<f64>,
    last_power_t: Option<f64>,
    trainings: u64,
}

impl<T: Scalar> StaSlot<T> {
    fn new(sta: usize, config: &EngineConfig, kind: FeatureKind) -> Result<Self, EngineError> {
        Ok(StaSlot {
            sta,
            pipeline: FeaturePipeline::new(config.pipeline, kind)?,
            queue: TrainingQueue::new(config.queue_capacity),
            model: None,
            last_trained_at: None,
            last_power_t: None,
            trainings: 0,
        })
    }

    pub fn queue(&self) -> &TrainingQueue<T> {
        &self.queue
    }

    pub fn model(&self) -> Option<&PublishedModel<T>> {
        self.model.as_ref()
    }

    pub fn last_trained_at(&self) -> Option<f64> {
        self.last_trained_at
    }

    pub fn pending_features(&self) -> usize {
        self.pipeline.pending_labels()
    }

    fn ingest_power(&mut self, sample: PowerSample) -> Result<usize, EngineError> {
        if let Some(last) = self.last_power_t {
            if sample.t < last {
                return Err(EngineError::TimestampRegression {
                    sta: self.sta,
                    last,
                    got: sample.t,
                });
            }
        }
        self.last_power_t = Some(sample.t);
        let labeled = self.pipeline.on_power(sample);
        let n = labeled.len();
        for s in labeled {
            self.queue.push_sample(s);
        }
        Ok(n)
    }

    /// Builds this STA's feature for the newest image; `None` while the
    /// window is still warming up.
    fn next_feature(&mut self, t: f64, images: &ImageHistory<T>) -> Result<Option<FeatureVector<T>>, EngineError> {
        match self.pipeline.on_frame(t, images) {
            Ok(f) => Ok(Some(f)),
            Err(PipelineError::WarmUp(_)) => Ok(None),
            Err(e) => Err(e.into()),
        }
    }

    fn eligible(&self, now: f64, config: &EngineConfig) -> bool {
        self.queue.len() >= config.min_train_samples
            && self
                .last_trained_at
                .is_none_or(|last| now - last >= config.retrain_min_interval_s - 1e-9)
    }

    fn training_params(&self, base: &GbrtParams) -> GbrtParams {
        GbrtParams {
            rng_seed: splitmix64(base.rng_seed ^ ((self.sta as u64) << 40) ^ self.trainings),
            ..*base
        }
    }
}

fn predict_with<T: Scalar>(
    published: &PublishedModel<T>,
    feature: &FeatureVector<T>,
    sta: usize,
    kind: FeatureKind,
) -> Result<PredictionRecord, EngineError> {
    let predicted = published.model.predict(feature)?;
    Ok(PredictionRecord {
        t: feature.t,
        sta,
        method: MethodKind::from(kind),
        predicted_dbm: predicted.to_f64_lossy(),
        measured_dbm: None,
        model_version: published.version,
    })
}

/// Deterministic single-threaded engine driven in simulated time.
pub struct Engine<T> {
    config: EngineConfig,
    kind: FeatureKind,
    images: ImageHistory<T>,
    slots: Vec<StaSlot<T>>,
    trainer: Box<dyn Trainer<T>>,
    last_frame_t: Option<f64>,
    next_rr: usize,
    training_log: Vec<TrainingRecord>,
}

impl<T: Scalar> Engine<T> {
    pub fn new(config: EngineConfig, kind: FeatureKind) -> Result<Self, EngineError> {
        Self::with_trainer(config, kind, Box::new(GbrtTrainer))
    }

    pub fn with_trainer(config: EngineConfig, kind: FeatureKind, trainer: Box<dyn Trainer<T>>) -> Result<Self, EngineError> {
        config.validate()?;
        let slots = (0..config.n_stas)
            .map(|sta| StaSlot::new(sta, &config, kind))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Engine {
            images: ImageHistory::new(&config.pipeline),
            slots,
            trainer,
            last_frame_t: None,
            next_rr: 0,
            training_log: Vec::new(),
            config,
            kind,
        })
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    pub fn kind(&self) -> FeatureKind {
        self.kind
    }

    pub fn slot(&self, sta: usize) -> Option<&StaSlot<T>> {
        self.slots.get(sta)
    }

    pub fn training_log(&self) -> &[TrainingRecord] {
        &self.training_log
    }

    /// Routes a power sample to its STA; completed labels enter the queue.
    /// Returns how many samples were labeled.
    pub fn ingest_power(&mut self, sample: PowerSample) -> Result<usize, EngineError> {
        let slot = self.slots.get_mut(sample.tx).ok_or(EngineError::UnknownSta(sample.tx))?;
        slot.ingest_power(sample)
    }

    /// Adds a reduced camera image and returns one prediction per STA that
    /// has a model and a complete feature window.
    pub fn ingest_image(&mut self, image: Arc<GrayImage<T>>) -> Result<Vec<PredictionRecord>, EngineError> {
        let t = image.t;
        if let Some(last) = self.last_frame_t {
            if t < last {
                return Err(EngineError::FrameRegression { last, got: t });
            }
        }
        self.last_frame_t = Some(t);
        self.images.push(image);
        let mut out = Vec::new();
        for slot in &mut self.slots {
            let Some(feature) = slot.next_feature(t, &self.images)? else {
                continue;
            };
            if let Some(published) = &slot.model {
                out.push(predict_with(published, &feature, slot.sta, self.kind)?);
            }
        }
        Ok(out)
    }

    pub fn ingest_frame(&mut self, frame: &Frame) -> Result<Vec<PredictionRecord>, EngineError> {
        let image = to_gray(frame, self.config.pipeline.w)?;
        self.ingest_image(Arc::new(image))
    }

    /// Ingests one event; after a frame, runs any training that became due.
    pub fn step(&mut self, event: &SceneEvent) -> Result<Vec<PredictionRecord>, EngineError> {
        let out = self.ingest(event)?;
        if let SceneEvent::Frame(f) = event {
            self.schedule_training(f.t);
        }
        Ok(out)
    }

    pub fn ingest(&mut self, event: &SceneEvent) -> Result<Vec<PredictionRecord>, EngineError> {
        match event {
            SceneEvent::Power(p) => self.ingest_power(*p).map(|_| Vec::new()),
            SceneEvent::Frame(f) => self.ingest_frame(f),
        }
    }

    /// Runs every eligible slot's training job, one after another, in
    /// round-robin order starting after the slot served last. Each job
    /// trains on a snapshot of the queue and publishes atomically.
    pub fn schedule_training(&mut self, now: f64) -> Vec<TrainingRecord> {
        let n = self.slots.len();
        let mut done = Vec::new();
        let start = self.next_rr;
        for step in 0..n {
            let idx = (start + step) % n;
            if !self.slots[idx].eligible(now, &self.config) {
                continue;
            }
            let record = self.train_slot(idx, now);
            self.next_rr = (idx + 1) % n;
            done.push(record);
        }
        self.training_log.extend(done.iter().cloned());
        done
    }

    fn train_slot(&mut self, idx: usize, now: f64) -> TrainingRecord {
        let slot = &mut self.slots[idx];
        let snapshot = slot.queue.snapshot();
        let params = slot.training_params(&self.config.gbrt);
        slot.trainings += 1;
        slot.last_trained_at = Some(now);
        let outcome = match self.trainer.train(&snapshot, &params) {
            Ok(model) => {
                let version = slot.model.as_ref().map_or(1, |m| m.version + 1);
                let outcome = TrainingOutcome::Trained {
                    rounds_run: model.trained_rounds,
                    best_round: model.best_round,
                    val_rmse: model.best_validation_rmse().map_or(f64::NAN, |v| v.to_f64_lossy()),
                };
                slot.model = Some(PublishedModel {
                    version,
                    model: Arc::new(model),
                });
                outcome
            }
            Err(e) => TrainingOutcome::Skipped(e.to_string()),
        };
        TrainingRecord {
            clock: now,
            sta: idx,
            n_samples: snapshot.len(),
            outcome,
        }
    }

    /// End of stream; drops features still waiting for labels.
    pub fn finish(&mut self) -> usize {
        self.slots.iter_mut().map(|s| s.pipeline.finish()).sum()
    }
}

#[cfg(test)]
mod tests;
