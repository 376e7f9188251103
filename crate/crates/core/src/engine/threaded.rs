//! Multi-threaded mode. Ingestion and prediction run on the caller's thread
//! while training jobs run on worker threads. A global training lock keeps
//! at most one job running at any instant, however many workers exist, and
//! each slot's model lives in a [`ModelCell`] swapped atomically.

use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::mpsc::{self, Receiver, Sender};
use std::sync::{Arc, Mutex, RwLock};
use std::thread::JoinHandle;
use std::time::Instant;

use super::{
    predict_with, EngineConfig, EngineError, GbrtTrainer, PredictionRecord, PublishedModel, StaSlot, Trainer,
    TrainingOutcome, TrainingRecord,
};
use crate::gbrt::{GbrtModel, GbrtParams};
use crate::pipeline::{to_gray, FeatureKind, GrayImage, ImageHistory, LabeledSample};
use crate::scene::{Frame, PowerSample, Scene, SceneEvent};
use crate::Scalar;

/// Holder of one slot's published model.
#[derive(Debug)]
pub struct ModelCell<T> {
    inner: RwLock<Option<PublishedModel<T>>>,
}

impl<T> Default for ModelCell<T> {
    fn default() -> Self {
        ModelCell { inner: RwLock::new(None) }
    }
}

impl<T> ModelCell<T> {
    /// Current model; the returned handle stays valid across later swaps.
    pub fn load(&self) -> Option<PublishedModel<T>> {
        self.inner.read().unwrap_or_else(|e| e.into_inner()).clone()
    }

    /// Installs `model` as the next version and returns that version.
    pub fn publish(&self, model: GbrtModel<T>) -> u64 {
        let mut guard = self.inner.write().unwrap_or_else(|e| e.into_inner());
        let version = guard.as_ref().map_or(1, |m| m.version + 1);
        *guard = Some(PublishedModel {
            version,
            model: Arc::new(model),
        });
        version
    }
}

impl<T> Clone for PublishedModel<T> {
    fn clone(&self) -> Self {
        PublishedModel {
            version: self.version,
            model: Arc::clone(&self.model),
        }
    }
}

/// Wall-clock span of one training job, in seconds since engine start.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingInterval {
    pub sta: usize,
    pub start_s: f64,
    pub end_s: f64,
    /// Version published by the job, or `None` if training failed.
    pub version: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimedPrediction {
    pub record: PredictionRecord,
    pub wall_s: f64,
}

struct Job<T> {
    sta: usize,
    snapshot: Vec<LabeledSample<T>>,
    params: GbrtParams,
    clock: f64,
}

struct Shared<T> {
    cells: Vec<ModelCell<T>>,
    in_flight: Vec<AtomicBool>,
    train_lock: Mutex<()>,
    running: AtomicUsize,
    max_running: AtomicUsize,
    intervals: Mutex<Vec<TrainingInterval>>,
    records: Mutex<Vec<TrainingRecord>>,
    epoch: Instant,
}

impl<T> Shared<T> {
    fn now(&self) -> f64 {
        self.epoch.elapsed().as_secs_f64()
    }
}

pub struct ThreadedEngine<T: Scalar> {
    config: EngineConfig,
    kind: FeatureKind,
    images: ImageHistory<T>,
    slots: Vec<StaSlot<T>>,
    shared: Arc<Shared<T>>,
    jobs: Option<Sender<Job<T>>>,
    workers: Vec<JoinHandle<()>>,
    next_rr: usize,
    last_frame_t: Option<f64>,
    predictions: Vec<TimedPrediction>,
}

impl<T: Scalar> ThreadedEngine<T> {
    pub fn new(config: EngineConfig, kind: FeatureKind) -> Result<Self, EngineError> {
        Self::with_trainer(config, kind, Arc::new(GbrtTrainer), 1)
    }

    /// `n_workers` worker threads pull jobs; the training lock still admits
    /// one job at a time.
    pub fn with_trainer(
        config: EngineConfig,
        kind: FeatureKind,
        trainer: Arc<dyn Trainer<T>>,
        n_workers: usize,
    ) -> Result<Self, EngineError> {
        config.validate()?;
        if n_workers == 0 {
            return Err(EngineError::Invalid {
                field: "n_workers",
                message: "must be >= 1".into(),
            });
        }
        let slots = (0..config.n_stas)
            .map(|sta| StaSlot::new(sta, &config, kind))
            .collect::<Result<Vec<_>, _>>()?;
        let shared = Arc::new(Shared {
            cells: (0..config.n_stas).map(|_| ModelCell::default()).collect(),
            in_flight: (0..config.n_stas).map(|_| AtomicBool::new(false)).collect(),
            train_lock: Mutex::new(()),
            running: AtomicUsize::new(0),
            max_running: AtomicUsize::new(0),
            intervals: Mutex::new(Vec::new()),
            records: Mutex::new(Vec::new()),
            epoch: Instant::now(),
        });
        let (tx, rx) = mpsc::channel::<Job<T>>();
        let rx = Arc::new(Mutex::new(rx));
        let workers = (0..n_workers)
            .map(|_| {
                let shared = Arc::clone(&shared);
                let rx = Arc::clone(&rx);
                let trainer = Arc::clone(&trainer);
                std::thread::spawn(move || worker_loop(&shared, &rx, trainer.as_ref()))
            })
            .collect();
        Ok(ThreadedEngine {
            images: ImageHistory::new(&config.pipeline),
            slots,
            shared,
            jobs: Some(tx),
            workers,
            next_rr: 0,
            last_frame_t: None,
            predictions: Vec::new(),
            config,
            kind,
        })
    }

    pub fn model_cell(&self, sta: usize) -> Option<&ModelCell<T>> {
        self.shared.cells.get(sta)
    }

    pub fn ingest_power(&mut self, sample: PowerSample) -> Result<usize, EngineError> {
        let slot = self.slots.get_mut(sample.tx).ok_or(EngineError::UnknownSta(sample.tx))?;
        slot.ingest_power(sample)
    }

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
            if let Some(published) = self.shared.cells[slot.sta].load() {
                let record = predict_with(&published, &feature, slot.sta, self.kind)?;
                self.predictions.push(TimedPrediction {
                    record: record.clone(),
                    wall_s: self.shared.now(),
                });
                out.push(record);
            }
        }
        Ok(out)
    }

    pub fn ingest_frame(&mut self, frame: &Frame) -> Result<Vec<PredictionRecord>, EngineError> {
        let image = to_gray(frame, self.config.pipeline.w)?;
        self.ingest_image(Arc::new(image))
    }

    /// Queues a job for every eligible slot without one in flight, in
    /// round-robin order. Returns the slots submitted.
    pub fn schedule_training(&mut self, now: f64) -> Vec<usize> {
        let n = self.slots.len();
        let mut submitted = Vec::new();
        let Some(jobs) = &self.jobs else {
            return submitted;
        };
        let start = self.next_rr;
        for step in 0..n {
            let idx = (start + step) % n;
            let slot = &mut self.slots[idx];
            if self.shared.in_flight[idx].load(Ordering::Acquire) || !slot.eligible(now, &self.config) {
                continue;
            }
            let params = slot.training_params(&self.config.gbrt);
            slot.trainings += 1;
            slot.last_trained_at = Some(now);
            self.shared.in_flight[idx].store(true, Ordering::Release);
            let job = Job {
                sta: idx,
                snapshot: slot.queue.snapshot(),
                params,
                clock: now,
            };
            if jobs.send(job).is_err() {
                self.shared.in_flight[idx].store(false, Ordering::Release);
                break;
            }
            self.next_rr = (idx + 1) % n;
            submitted.push(idx);
        }
        submitted
    }

    pub fn step(&mut self, event: &SceneEvent) -> Result<Vec<PredictionRecord>, EngineError> {
        match event {
            SceneEvent::Power(p) => self.ingest_power(*p).map(|_| Vec::new()),
            SceneEvent::Frame(f) => {
                let out = self.ingest_frame(f)?;
                self.schedule_training(f.t);
                Ok(out)
            }
        }
    }

    /// Waits for queued jobs, stops the workers and returns the run report.
    pub fn shutdown(mut self) -> ThreadedReport {
        self.jobs = None;
        for w in self.workers.drain(..) {
            let _ = w.join();
        }
        let mut intervals = std::mem::take(&mut *self.shared.intervals.lock().unwrap_or_else(|e| e.into_inner()));
        intervals.sort_by(|a, b| a.start_s.total_cmp(&b.start_s));
        let training = std::mem::take(&mut *self.shared.records.lock().unwrap_or_else(|e| e.into_inner()));
        ThreadedReport {
            predictions: std::mem::take(&mut self.predictions),
            max_concurrent_jobs: self.shared.max_running.load(Ordering::SeqCst),
            intervals,
            training,
        }
    }
}

impl<T: Scalar> Drop for ThreadedEngine<T> {
    fn drop(&mut self) {
        self.jobs = None;
        for w in self.workers.drain(..) {
            let _ = w.join();
        }
    }
}

fn worker_loop<T: Scalar>(shared: &Shared<T>, rx: &Mutex<Receiver<Job<T>>>, trainer: &dyn Trainer<T>) {
    loop {
        let job = {
            let rx = rx.lock().unwrap_or_else(|e| e.into_inner());
            match rx.recv() {
                Ok(job) => job,
                Err(_) => return,
            }
        };
        let _exclusive = shared.train_lock.lock().unwrap_or_else(|e| e.into_inner());
        let running = shared.running.fetch_add(1, Ordering::SeqCst) + 1;
        shared.max_running.fetch_max(running, Ordering::SeqCst);
        let start_s = shared.now();
        let result = trainer.train(&job.snapshot, &job.params);
        let (outcome, version) = match result {
            Ok(model) => {
                let outcome = TrainingOutcome::Trained {
                    rounds_run: model.trained_rounds,
                    best_round: model.best_round,
                    val_rmse: model.best_validation_rmse().map_or(f64::NAN, |v| v.to_f64_lossy()),
                };
                (outcome, Some(shared.cells[job.sta].publish(model)))
            }
            Err(e) => (TrainingOutcome::Skipped(e.to_string()), None),
        };
        let end_s = shared.now();
        shared.running.fetch_sub(1, Ordering::SeqCst);
        shared.in_flight[job.sta].store(false, Ordering::Release);
        shared.intervals.lock().unwrap_or_else(|e| e.into_inner()).push(TrainingInterval {
            sta: job.sta,
            start_s,
            end_s,
            version,
        });
        shared.records.lock().unwrap_or_else(|e| e.into_inner()).push(TrainingRecord {
            clock: job.clock,
            sta: job.sta,
            n_samples: job.snapshot.len(),
            outcome,
        });
    }
}

#[derive(Debug, Clone)]
pub struct ThreadedReport {
    pub predictions: Vec<TimedPrediction>,
    /// Training spans sorted by start.
    pub intervals: Vec<TrainingInterval>,
    pub training: Vec<TrainingRecord>,
    /// Highest number of jobs observed running at once.
    pub max_concurrent_jobs: usize,
}

impl ThreadedReport {
    /// Pairs of training intervals that overlap in time.
    pub fn overlapping_intervals(&self) -> usize {
        let mut n = 0;
        for (i, a) in self.intervals.iter().enumerate() {
            for b in &self.intervals[i + 1..] {
                if b.start_s < a.end_s && a.start_s < b.end_s {
                    n += 1;
                }
            }
        }
        n
    }

    /// Predictions whose wall time falls strictly inside some training job.
    pub fn predictions_during_training(&self) -> usize {
        self.predictions
            .iter()
            .filter(|p| self.intervals.iter().any(|iv| p.wall_s > iv.start_s && p.wall_s < iv.end_s))
            .count()
    }
}

/// Feeds the whole scene through a threaded engine as fast as ingestion
/// allows and returns the report once all jobs have finished.
pub fn run_threaded<T: Scalar>(
    scene: &Scene,
    config: EngineConfig,
    kind: FeatureKind,
    trainer: Arc<dyn Trainer<T>>,
    n_workers: usize,
) -> Result<ThreadedReport, EngineError> {
    let mut engine = ThreadedEngine::with_trainer(config, kind, trainer, n_workers)?;
    let mut frame = Frame {
        t: 0.0,
        width: 0,
        height: 0,
        pixels: Vec::new(),
    };
    let mut events = scene.events();
    while let Some(ev) = events.next_into(&mut frame) {
        match ev {
            Some(p) => {
                engine.ingest_power(p)?;
            }
            None => {
                engine.ingest_frame(&frame)?;
                engine.schedule_training(frame.t);
            }
        }
    }
    Ok(engine.shutdown())
}
