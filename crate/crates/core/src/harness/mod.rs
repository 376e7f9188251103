//! Scenario runs, windowed error tables, queue-size ablation and per-step
//! timing on top of the scene simulator and the online engine.

mod plot;
mod table;
mod timing;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use thiserror::Error;

use crate::engine::{Engine, EngineConfig, EngineError, MethodKind, PredictionRecord, QueueCapacity, TrainingRecord};
use crate::pipeline::{to_gray, PipelineError};
use crate::scene::{Frame, PowerSample, Scene, SceneConfig, SceneError};
use crate::Scalar;

pub use plot::plot_svg;
pub use table::{rmse, windowed_rmse, ErrorRow, ErrorTable, DEFAULT_WINDOW_S, SCORE_START_S};
pub use timing::{measure_timing, TimingReport};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Scene(#[from] SceneError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error("config mismatch: {0}")]
    Mismatch(String),
    #[error("{0}")]
    Invalid(String),
}

/// Output of one scenario run: joined predictions of every method, the
/// training log of each learned method and the raw power trace.
#[derive(Debug, Clone, PartialEq)]
pub struct RunLog {
    pub seed: u64,
    /// Sorted by method, then STA, then time.
    pub predictions: Vec<PredictionRecord>,
    pub training: BTreeMap<MethodKind, Vec<TrainingRecord>>,
    pub power: Vec<PowerSample>,
}

impl RunLog {
    pub fn method(&self, method: MethodKind) -> impl Iterator<Item = &PredictionRecord> {
        self.predictions.iter().filter(move |p| p.method == method)
    }
}

fn check_configs(scene: &SceneConfig, engine: &EngineConfig) -> Result<(), HarnessError> {
    scene.validate()?;
    engine.validate()?;
    if engine.n_stas != scene.n_tx() {
        return Err(HarnessError::Mismatch(format!(
            "engine n_stas = {} but the scene has {} transmitters",
            engine.n_stas,
            scene.n_tx()
        )));
    }
    if (engine.pipeline.frame_rate - scene.frame_rate).abs() > 1e-9 {
        return Err(HarnessError::Mismatch(format!(
            "pipeline frame_rate = {} but the scene runs at {}",
            engine.pipeline.frame_rate, scene.frame_rate
        )));
    }
    Ok(())
}

/// Runs `methods` side by side over one simulated scene. Every frame is
/// reduced once and shared by all learned methods; the native rule
/// predicts the latest measured power at each frame. The scene and the
/// learner both take `seed`.
pub fn run_scenario<T: Scalar>(
    scene: &SceneConfig,
    engine: &EngineConfig,
    methods: &[MethodKind],
    seed: u64,
) -> Result<RunLog, HarnessError> {
    check_configs(scene, engine)?;
    if methods.is_empty() {
        return Err(HarnessError::Invalid("no methods given".into()));
    }
    let sim = Scene::with_seed(scene.clone(), seed)?;
    let mut cfg = engine.clone();
    cfg.gbrt.rng_seed = seed;
    let mut engines: Vec<Engine<T>> = Vec::new();
    let mut native = false;
    for &m in methods {
        match m.feature_kind() {
            Some(kind) => engines.push(Engine::new(cfg.clone(), kind)?),
            None => native = true,
        }
    }
    let needs_images = engines.iter().any(|e| e.kind().uses_images());
    let w = cfg.pipeline.w;

    let n = sim.n_tx();
    let mut latest: Vec<Option<f64>> = vec![None; n];
    let mut power = Vec::new();
    let mut predictions = Vec::new();
    let mut frame = Frame {
        t: 0.0,
        width: 0,
        height: 0,
        pixels: Vec::new(),
    };
    let mut events = if needs_images { sim.events() } else { sim.events().without_pixels() };
    while let Some(ev) = events.next_into(&mut frame) {
        match ev {
            Some(p) => {
                latest[p.tx] = Some(p.power_dbm);
                power.push(p);
                for e in &mut engines {
                    e.ingest_power(p)?;
                }
            }
            None => {
                let t = frame.t;
                let image = if needs_images {
                    Arc::new(to_gray::<T>(&frame, w)?)
                } else {
                    Arc::new(crate::pipeline::GrayImage { t, w, pixels: Vec::new() })
                };
                for e in &mut engines {
                    predictions.extend(e.ingest_image(Arc::clone(&image))?);
                    e.schedule_training(t);
                }
                if native {
                    for (sta, r) in latest.iter().enumerate() {
                        if let Some(r) = r {
                            predictions.push(PredictionRecord {
                                t,
                                sta,
                                method: MethodKind::Native,
                                predicted_dbm: *r,
                                measured_dbm: None,
                                model_version: 0,
                            });
                        }
                    }
                }
            }
        }
    }
    let training = engines
        .iter_mut()
        .map(|e| {
            e.finish();
            (MethodKind::from(e.kind()), e.training_log().to_vec())
        })
        .collect();
    join_measurements(&mut predictions, &power, n, cfg.pipeline.t_f);
    predictions.sort_by(|a, b| {
        (a.method, a.sta)
            .cmp(&(b.method, b.sta))
            .then(a.t.total_cmp(&b.t))
    });
    Ok(RunLog {
        seed,
        predictions,
        training,
        power,
    })
}

/// Fills `measured_dbm` with the STA's power sample nearest `t + t_f`
/// (earlier sample on a tie). Predictions whose horizon lies past the last
/// sample stay unjoined.
pub fn join_measurements(records: &mut [PredictionRecord], power: &[PowerSample], n_stas: usize, t_f: f64) {
    const EPS: f64 = 1e-9;
    let mut per_sta: Vec<Vec<&PowerSample>> = vec![Vec::new(); n_stas];
    for p in power {
        if p.tx < n_stas {
            per_sta[p.tx].push(p);
        }
    }
    for r in records.iter_mut() {
        let Some(trace) = per_sta.get(r.sta) else {
            continue;
        };
        let target = r.t + t_f;
        let idx = trace.partition_point(|s| s.t < target - EPS);
        let Some(next) = trace.get(idx) else {
            r.measured_dbm = None;
            continue;
        };
        let chosen = match idx.checked_sub(1).map(|i| trace[i]) {
            Some(prev) if target - prev.t <= next.t - target + EPS => prev,
            _ => next,
        };
        r.measured_dbm = Some(chosen.power_dbm);
    }
}

/// Training queue length in seconds; `inf` means unbounded.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QueueSeconds(pub f64);

impl QueueSeconds {
    pub fn capacity(self, frame_rate: f64) -> QueueCapacity {
        QueueCapacity::from_seconds(self.0, frame_rate)
    }
}

impl fmt::Display for QueueSeconds {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_infinite() {
            f.write_str("inf")
        } else {
            write!(f, "{} s", self.0)
        }
    }
}

impl FromStr for QueueSeconds {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let s = s.trim();
        if matches!(s, "inf" | "Inf" | "INF" | "∞") {
            return Ok(QueueSeconds(f64::INFINITY));
        }
        match s.parse::<f64>() {
            Ok(v) if v.is_finite() && v > 0.0 => Ok(QueueSeconds(v)),
            _ => Err(format!("bad queue length '{s}' (expected seconds > 0 or inf)")),
        }
    }
}

/// One run per queue length, same scene and seed, so only the queue
/// capacity differs. Returns the logs in the order given.
pub fn ablate_queue<T: Scalar>(
    scene: &SceneConfig,
    engine: &EngineConfig,
    t_q: &[QueueSeconds],
    method: MethodKind,
    seed: u64,
) -> Result<Vec<(QueueSeconds, RunLog)>, HarnessError> {
    if method == MethodKind::Native {
        return Err(HarnessError::Invalid("queue ablation needs a learned method".into()));
    }
    for q in t_q {
        if q.capacity(engine.pipeline.frame_rate) == QueueCapacity::Bounded(0) {
            return Err(HarnessError::Invalid(format!("queue length {q} holds no samples")));
        }
    }
    t_q.iter()
        .map(|&q| {
            let mut cfg = engine.clone();
            cfg.queue_capacity = q.capacity(cfg.pipeline.frame_rate);
            run_scenario::<T>(scene, &cfg, &[method], seed).map(|log| (q, log))
        })
        .collect()
}

/// Combines per-T_q tables of one method into a table with one column per
/// queue length.
pub fn ablation_table(results: &[(QueueSeconds, ErrorTable)], method: MethodKind) -> ErrorTable {
    let columns: Vec<String> = results.iter().map(|(q, _)| q.to_string()).collect();
    let Some((_, first)) = results.first() else {
        return ErrorTable::empty(DEFAULT_WINDOW_S, columns);
    };
    let rows = first
        .rows
        .iter()
        .enumerate()
        .map(|(i, row)| ErrorRow {
            start: row.start,
            end: row.end,
            values: results
                .iter()
                .map(|(_, t)| t.rows.get(i).and_then(|r| t.value(r, method.label())))
                .collect(),
        })
        .collect();
    ErrorTable {
        window_length: first.window_length,
        columns,
        rows,
    }
}
