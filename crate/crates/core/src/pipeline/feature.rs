use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::scene::{PowerSample, BEACON_PERIOD_S};
use crate::Scalar;

use super::{GrayImage, PipelineError, PipelineParams};

const TIME_EPS: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FeatureKind {
    #[serde(rename = "RP-Im")]
    RpIm,
    #[serde(rename = "Im")]
    Im,
    #[serde(rename = "RP")]
    Rp,
}

impl FeatureKind {
    pub fn uses_images(self) -> bool {
        matches!(self, FeatureKind::RpIm | FeatureKind::Im)
    }

    pub fn uses_power(self) -> bool {
        matches!(self, FeatureKind::RpIm | FeatureKind::Rp)
    }

    pub fn label(self) -> &'static str {
        match self {
            FeatureKind::RpIm => "RP-Im",
            FeatureKind::Im => "Im",
            FeatureKind::Rp => "RP",
        }
    }
}

impl fmt::Display for FeatureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for FeatureKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "RP-Im" | "rp-im" | "rpim" => Ok(FeatureKind::RpIm),
            "Im" | "im" => Ok(FeatureKind::Im),
            "RP" | "rp" => Ok(FeatureKind::Rp),
            other => Err(format!("unknown feature kind '{other}'")),
        }
    }
}

#[derive(Debug, Clone)]
enum Storage<T> {
    /// Images are shared with the image history and with other features
    /// that overlap the same frames.
    Parts {
        images: Vec<Arc<GrayImage<T>>>,
        power: Vec<T>,
    },
    Flat(Vec<T>),
}

/// One input row `x_t`: stacked images (oldest first, row-major) followed by
/// resampled power values (oldest first), or either part alone.
#[derive(Debug, Clone)]
pub struct FeatureVector<T> {
    pub t: f64,
    pub kind: FeatureKind,
    storage: Storage<T>,
    len: usize,
}

impl<T: Scalar> FeatureVector<T> {
    pub fn from_values(t: f64, kind: FeatureKind, values: Vec<T>) -> Self {
        let len = values.len();
        FeatureVector {
            t,
            kind,
            storage: Storage::Flat(values),
            len,
        }
    }

    fn from_parts(t: f64, kind: FeatureKind, images: Vec<Arc<GrayImage<T>>>, power: Vec<T>) -> Self {
        let len = images.iter().map(|i| i.pixels.len()).sum::<usize>() + power.len();
        FeatureVector {
            t,
            kind,
            storage: Storage::Parts { images, power },
            len,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, j: usize) -> T {
        match &self.storage {
            Storage::Flat(v) => v[j],
            Storage::Parts { images, power } => {
                if let Some(first) = images.first() {
                    let per = first.pixels.len();
                    let k = j / per;
                    if k < images.len() {
                        return images[k].pixels[j - k * per];
                    }
                    return power[j - images.len() * per];
                }
                power[j]
            }
        }
    }

    /// Copies `out.len()` consecutive values starting at `start`.
    pub fn copy_range(&self, start: usize, out: &mut [T]) {
        match &self.storage {
            Storage::Flat(v) => out.copy_from_slice(&v[start..start + out.len()]),
            Storage::Parts { images, power } => {
                let mut pos = start;
                let mut written = 0;
                let mut offset = 0;
                for seg in images.iter().map(|i| i.pixels.as_slice()).chain(std::iter::once(power.as_slice())) {
                    let end = offset + seg.len();
                    if pos < end && written < out.len() {
                        let take = (end - pos).min(out.len() - written);
                        out[written..written + take].copy_from_slice(&seg[pos - offset..pos - offset + take]);
                        written += take;
                        pos += take;
                    }
                    offset = end;
                }
                assert_eq!(written, out.len(), "range past end of feature");
            }
        }
    }

    pub fn to_vec(&self) -> Vec<T> {
        let mut out = vec![T::zero(); self.len];
        self.copy_range(0, &mut out);
        out
    }

    pub fn iter(&self) -> impl Iterator<Item = T> + '_ {
        (0..self.len).map(move |j| self.get(j))
    }

    /// Image part (all but the trailing power values for RP-Im).
    pub fn image_part(&self, params: &PipelineParams) -> Vec<T> {
        let n = params.w * params.w * params.n_img;
        match self.kind {
            FeatureKind::Rp => Vec::new(),
            _ => {
                let mut out = vec![T::zero(); n];
                self.copy_range(0, &mut out);
                out
            }
        }
    }

    pub fn power_part(&self, params: &PipelineParams) -> Vec<T> {
        match self.kind {
            FeatureKind::Im => Vec::new(),
            _ => {
                let mut out = vec![T::zero(); params.n_r];
                self.copy_range(self.len - params.n_r, &mut out);
                out
            }
        }
    }
}

impl<T: Scalar> PartialEq for FeatureVector<T> {
    fn eq(&self, other: &Self) -> bool {
        self.t == other.t && self.kind == other.kind && self.len == other.len && self.iter().eq(other.iter())
    }
}

/// Resamples `window` onto `n_r` uniformly spaced points over `[start, end]`
/// (endpoints included), taking the nearest sample for each point.
fn resample_power(window: &[PowerSample], start: f64, end: f64, n_r: usize) -> Vec<f64> {
    (0..n_r)
        .map(|i| {
            let g = if n_r == 1 {
                end
            } else {
                start + (end - start) * i as f64 / (n_r - 1) as f64
            };
            let idx = window.partition_point(|s| s.t < g);
            let best = match (idx.checked_sub(1), window.get(idx)) {
                (Some(a), Some(b)) => {
                    if (g - window[a].t) <= (b.t - g) {
                        a
                    } else {
                        idx
                    }
                }
                (Some(a), None) => a,
                (None, _) => idx,
            };
            window[best].power_dbm
        })
        .collect()
}

/// Assembles the feature for time `t` from `images` (exactly `n_img`, oldest
/// first, spaced `t0`) and the power samples of one STA covering the window.
pub fn build_feature<T: Scalar>(
    t: f64,
    images: &[Arc<GrayImage<T>>],
    power_window: &[PowerSample],
    params: &PipelineParams,
    kind: FeatureKind,
) -> Result<FeatureVector<T>, PipelineError> {
    let start = t - params.window_s();
    let half_frame = params.frame_period() / 2.0 + TIME_EPS;
    let mut used_images = Vec::new();
    if kind.uses_images() {
        if images.len() != params.n_img {
            return Err(PipelineError::WarmUp(format!(
                "{} of {} images buffered",
                images.len(),
                params.n_img
            )));
        }
        for (k, img) in images.iter().enumerate() {
            let expected = start + k as f64 * params.t0;
            if (img.t - expected).abs() > half_frame {
                return Err(PipelineError::WarmUp(format!(
                    "image {k} at {} s, expected {expected} s",
                    img.t
                )));
            }
            if img.w != params.w {
                return Err(PipelineError::DimensionMismatch {
                    expected: params.w * params.w,
                    got: img.pixels.len(),
                });
            }
        }
        used_images = images.to_vec();
    }

    let mut power = Vec::new();
    if kind.uses_power() {
        let lo = power_window.partition_point(|s| s.t < start - half_frame);
        let hi = power_window.partition_point(|s| s.t <= t + TIME_EPS);
        let window = &power_window[lo..hi];
        let (Some(first), Some(last)) = (window.first(), window.last()) else {
            return Err(PipelineError::WarmUp("no power samples in window".into()));
        };
        let max_gap = BEACON_PERIOD_S + TIME_EPS;
        let max_edge = BEACON_PERIOD_S / 2.0 + TIME_EPS;
        if first.t - start > max_edge || t - last.t > max_edge {
            return Err(PipelineError::WarmUp("power history does not cover window".into()));
        }
        if window.windows(2).any(|w| w[1].t - w[0].t > max_gap) {
            return Err(PipelineError::WarmUp("gap in power history".into()));
        }
        power = resample_power(window, start, t, params.n_r)
            .into_iter()
            .map(T::from_f64_lossy)
            .collect();
    }
    Ok(FeatureVector::from_parts(t, kind, used_images, power))
}
