//! Frame and power streams to feature vectors and labeled samples.
//!
//! A feature at time `t` stacks `n_img` reduced gray images taken every `t0`
//! seconds up to `t` (oldest first, each row-major) followed by `n_r` power
//! values resampled over the same window. Its label is the power measured
//! `t_f` seconds later.

mod feature;
mod gray;
mod history;
pub mod io;
mod label;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use feature::{build_feature, FeatureKind, FeatureVector};
pub use gray::{to_gray, GrayImage};
pub use history::{FeaturePipeline, ImageHistory, PowerHistory};
pub use label::{label_when_ready, LabeledSample, Labeler};

#[derive(Debug, Error, PartialEq)]
pub enum PipelineError {
    #[error("invalid pipeline parameter `{field}`: {message}")]
    InvalidParams { field: &'static str, message: String },
    #[error("cannot reduce {width}x{height} frame to {w}x{w}")]
    ImageTooSmall { w: usize, width: u32, height: u32 },
    #[error("warm-up: {0}")]
    WarmUp(String),
    #[error("feature has {got} values, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PipelineParams {
    /// Side of the reduced square gray image.
    pub w: usize,
    pub n_img: usize,
    /// Interval between the images of one feature, seconds.
    pub t0: f64,
    pub n_r: usize,
    /// Prediction horizon, seconds.
    pub t_f: f64,
    pub frame_rate: f64,
}

impl Default for PipelineParams {
    fn default() -> Self {
        PipelineParams {
            w: 40,
            n_img: 5,
            t0: 0.5,
            n_r: 21,
            t_f: 1.0,
            frame_rate: 10.0,
        }
    }
}

impl PipelineParams {
    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |field, message: &str| {
            Err(PipelineError::InvalidParams {
                field,
                message: message.to_string(),
            })
        };
        if self.w < 1 {
            return bad("w", "must be >= 1");
        }
        if self.n_img < 1 {
            return bad("n_img", "must be >= 1");
        }
        if self.n_r < 1 {
            return bad("n_r", "must be >= 1");
        }
        if !(self.t0 > 0.0) {
            return bad("t0", "must be positive");
        }
        if !(self.t_f > 0.0) {
            return bad("t_f", "must be positive");
        }
        if !(self.frame_rate > 0.0) {
            return bad("frame_rate", "must be positive");
        }
        let ticks = self.t0 * self.frame_rate;
        if (ticks - ticks.round()).abs() > 1e-6 || ticks.round() < 1.0 {
            return bad("t0", "must be an integer multiple of the frame period");
        }
        Ok(())
    }

    pub fn frame_period(&self) -> f64 {
        1.0 / self.frame_rate
    }

    /// Length of the history a feature looks back over, seconds.
    pub fn window_s(&self) -> f64 {
        (self.n_img - 1) as f64 * self.t0
    }

    /// Frames between consecutive images of a feature.
    pub fn t0_ticks(&self) -> usize {
        (self.t0 * self.frame_rate).round() as usize
    }

    pub fn feature_dim(&self, kind: FeatureKind) -> usize {
        let image = self.w * self.w * self.n_img;
        match kind {
            FeatureKind::RpIm => image + self.n_r,
            FeatureKind::Im => image,
            FeatureKind::Rp => self.n_r,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_dimensions() {
        let p = PipelineParams::default();
        p.validate().unwrap();
        assert_eq!(p.feature_dim(FeatureKind::RpIm), 8021);
        assert_eq!(p.feature_dim(FeatureKind::Im), 8000);
        assert_eq!(p.feature_dim(FeatureKind::Rp), 21);
        assert_eq!(p.t0_ticks(), 5);
        assert_eq!(p.window_s(), 2.0);
    }

    #[test]
    fn t0_must_land_on_frame_ticks() {
        let p = PipelineParams {
            t0: 0.25,
            ..Default::default()
        };
        assert!(matches!(p.validate(), Err(PipelineError::InvalidParams { field: "t0", .. })));
        let p = PipelineParams { w: 0, ..Default::default() };
        assert!(p.validate().is_err());
    }
}
