use std::sync::Arc;
use std::time::Instant;

use super::{check_configs, HarnessError};
use crate::engine::{Engine, EngineConfig, EngineError, PublishedModel};
use crate::pipeline::{to_gray, FeatureKind, FeaturePipeline, ImageHistory};
use crate::scene::{Frame, Scene, SceneConfig};
use crate::Scalar;

/// Mean wall time per tick of each step, milliseconds.
#[derive(Debug, Clone, PartialEq)]
pub struct TimingReport {
    pub n_ticks: usize,
    pub image_load: f64,
    pub image_reduction: f64,
    pub data_combination: f64,
    pub ml_prediction: f64,
    /// Measured around the whole tick (power ingestion included), not
    /// summed from the steps.
    pub total: f64,
}

impl TimingReport {
    pub fn steps_sum(&self) -> f64 {
        self.image_load + self.image_reduction + self.data_combination + self.ml_prediction
    }

    pub fn rows(&self) -> [(&'static str, f64); 5] {
        [
            ("image_load", self.image_load),
            ("image_reduction", self.image_reduction),
            ("data_combination", self.data_combination),
            ("ml_prediction", self.ml_prediction),
            ("total", self.total),
        ]
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("step,mean_ms\n");
        for (name, v) in self.rows() {
            s.push_str(&format!("{name},{v}\n"));
        }
        s
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("{:<18}{:>12}\n", "step", "mean (ms)");
        for (name, v) in self.rows() {
            s.push_str(&format!("{name:<18}{v:>12.3}\n"));
        }
        s
    }
}

/// Times the per-frame path of STA 0: render the frame (image load),
/// reduce it, assemble the feature, predict. The engine first runs
/// normally until STA 0 has a model; the next `n_ticks` frames are timed.
pub fn measure_timing<T: Scalar>(
    scene: &SceneConfig,
    engine: &EngineConfig,
    kind: FeatureKind,
    n_ticks: usize,
    seed: u64,
) -> Result<TimingReport, HarnessError> {
    check_configs(scene, engine)?;
    if n_ticks == 0 {
        return Err(HarnessError::Invalid("ticks must be at least 1".into()));
    }
    let sim = Scene::with_seed(scene.clone(), seed)?;
    let mut cfg = engine.clone();
    cfg.gbrt.rng_seed = seed;
    let w = cfg.pipeline.w;
    let mut warm: Option<Engine<T>> = Some(Engine::new(cfg.clone(), kind)?);
    let mut model: Option<PublishedModel<T>> = None;
    let mut images = ImageHistory::<T>::new(&cfg.pipeline);
    let mut pipeline = FeaturePipeline::<T>::new(cfg.pipeline, kind)?;

    let mut frame = Frame {
        t: 0.0,
        width: 0,
        height: 0,
        pixels: Vec::new(),
    };
    let (mut load, mut reduce, mut combine, mut predict, mut total) = (0.0, 0.0, 0.0, 0.0, 0.0);
    let mut ticks = 0;
    let mut events = sim.events().without_pixels();
    let mut power_time = 0.0;
    let ms = |a: Instant| a.elapsed().as_secs_f64() * 1e3;
    while ticks < n_ticks {
        let tick_start = Instant::now();
        let Some(ev) = events.next_into(&mut frame) else {
            return Err(HarnessError::Invalid(format!(
                "scene ended after {ticks} timed ticks; {n_ticks} requested"
            )));
        };
        match ev {
            Some(p) => {
                if let Some(e) = &mut warm {
                    e.ingest_power(p)?;
                }
                if p.tx == 0 {
                    let a = Instant::now();
                    pipeline.on_power(p);
                    power_time += ms(a);
                }
            }
            None => {
                let t = frame.t;
                let a = Instant::now();
                sim.render_into(t, &mut frame)?;
                let t_load = ms(a);
                let a = Instant::now();
                let image = Arc::new(to_gray::<T>(&frame, w)?);
                let t_reduce = ms(a);
                let a = Instant::now();
                images.push(Arc::clone(&image));
                let feature = pipeline.on_frame(t, &images).ok();
                let t_power = std::mem::take(&mut power_time);
                let t_combine = ms(a) + t_power;
                if let (Some(m), Some(feature)) = (&model, feature) {
                    let a = Instant::now();
                    let _ = std::hint::black_box(m.model.predict(&feature).map_err(EngineError::from)?);
                    let t_predict = ms(a);
                    load += t_load;
                    reduce += t_reduce;
                    combine += t_combine;
                    predict += t_predict;
                    total += ms(tick_start) + t_power;
                    ticks += 1;
                }
                if let Some(e) = &mut warm {
                    e.ingest_image(image)?;
                    e.schedule_training(t);
                    if let Some(m) = e.slot(0).and_then(|s| s.model()) {
                        model = Some(PublishedModel {
                            version: m.version,
                            model: Arc::clone(&m.model),
                        });
                        warm = None;
                    }
                }
            }
        }
    }
    let n = ticks as f64;
    Ok(TimingReport {
        n_ticks: ticks,
        image_load: load / n,
        image_reduction: reduce / n,
        data_combination: combine / n,
        ml_prediction: predict / n,
        total: total / n,
    })
}
