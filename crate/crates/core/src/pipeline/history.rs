use std::collections::VecDeque;
use std::sync::Arc;

use crate::scene::{PowerSample, BEACON_PERIOD_S};
use crate::Scalar;

use super::{build_feature, FeatureKind, FeatureVector, GrayImage, LabeledSample, Labeler, PipelineError, PipelineParams};

/// Recent reduced images from the shared camera, long enough to cover one
/// feature window.
#[derive(Debug)]
pub struct ImageHistory<T> {
    images: VecDeque<Arc<GrayImage<T>>>,
    capacity: usize,
    half_frame: f64,
}

impl<T: Scalar> ImageHistory<T> {
    pub fn new(params: &PipelineParams) -> Self {
        ImageHistory {
            images: VecDeque::new(),
            capacity: (params.n_img - 1) * params.t0_ticks() + 3,
            half_frame: params.frame_period() / 2.0 + 1e-6,
        }
    }

    pub fn push(&mut self, image: Arc<GrayImage<T>>) {
        if self.images.len() == self.capacity {
            self.images.pop_front();
        }
        self.images.push_back(image);
    }

    pub fn latest(&self) -> Option<&Arc<GrayImage<T>>> {
        self.images.back()
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    fn find(&self, t: f64) -> Option<&Arc<GrayImage<T>>> {
        self.images.iter().rev().find(|img| (img.t - t).abs() <= self.half_frame)
    }

    /// The `n_img` images ending at `t`, oldest first.
    pub fn window(&self, t: f64, params: &PipelineParams) -> Option<Vec<Arc<GrayImage<T>>>> {
        (0..params.n_img)
            .map(|k| {
                let back = (params.n_img - 1 - k) as f64 * params.t0;
                self.find(t - back).cloned()
            })
            .collect()
    }
}

/// Recent power samples of one STA.
#[derive(Debug)]
pub struct PowerHistory {
    samples: VecDeque<PowerSample>,
    keep_s: f64,
}

impl PowerHistory {
    pub fn new(params: &PipelineParams) -> Self {
        PowerHistory {
            samples: VecDeque::new(),
            keep_s: params.window_s() + 3.0 * BEACON_PERIOD_S,
        }
    }

    pub fn push(&mut self, sample: PowerSample) {
        self.samples.push_back(sample);
        while let Some(front) = self.samples.front() {
            if sample.t - front.t > self.keep_s {
                self.samples.pop_front();
            } else {
                break;
            }
        }
    }

    pub fn latest(&self) -> Option<&PowerSample> {
        self.samples.back()
    }

    pub fn as_slice(&mut self) -> &[PowerSample] {
        self.samples.make_contiguous()
    }
}

/// Per-STA feature assembly and labeling. The image history is owned by the
/// caller because one camera serves every STA.
#[derive(Debug)]
pub struct FeaturePipeline<T> {
    params: PipelineParams,
    kind: FeatureKind,
    power: PowerHistory,
    labeler: Labeler<T>,
}

impl<T: Scalar> FeaturePipeline<T> {
    pub fn new(params: PipelineParams, kind: FeatureKind) -> Result<Self, PipelineError> {
        params.validate()?;
        Ok(FeaturePipeline {
            power: PowerHistory::new(&params),
            labeler: Labeler::new(params.t_f),
            params,
            kind,
        })
    }

    pub fn params(&self) -> &PipelineParams {
        &self.params
    }

    pub fn kind(&self) -> FeatureKind {
        self.kind
    }

    pub fn latest_power(&self) -> Option<&PowerSample> {
        self.power.latest()
    }

    pub fn pending_labels(&self) -> usize {
        self.labeler.pending()
    }

    pub fn on_power(&mut self, sample: PowerSample) -> Vec<LabeledSample<T>> {
        self.power.push(sample);
        self.labeler.on_power(sample)
    }

    /// Builds the feature for the frame at `t` and queues it for labeling.
    pub fn on_frame(&mut self, t: f64, images: &ImageHistory<T>) -> Result<FeatureVector<T>, PipelineError> {
        let window = if self.kind.uses_images() {
            images
                .window(t, &self.params)
                .ok_or_else(|| PipelineError::WarmUp("image history shorter than window".into()))?
        } else {
            Vec::new()
        };
        let feature = build_feature(t, &window, self.power.as_slice(), &self.params, self.kind)?;
        self.labeler.push(feature.clone());
        Ok(feature)
    }

    pub fn finish(&mut self) -> usize {
        self.labeler.finish()
    }
}
