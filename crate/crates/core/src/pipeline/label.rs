use std::collections::VecDeque;

use crate::scene::PowerSample;
use crate::Scalar;

use super::FeatureVector;

const TIME_EPS: f64 = 1e-6;

/// Training pair `(x_t, r_{t+t_f})`.
#[derive(Debug, Clone)]
pub struct LabeledSample<T> {
    pub feature: FeatureVector<T>,
    pub label: T,
    /// Timestamp of the power sample used as the label.
    pub label_t: f64,
}

impl<T: Scalar> PartialEq for LabeledSample<T> {
    fn eq(&self, other: &Self) -> bool {
        self.feature == other.feature && self.label == other.label && self.label_t == other.label_t
    }
}

fn nearest(prev: Option<&PowerSample>, next: &PowerSample, target: f64) -> PowerSample {
    match prev {
        Some(p) if target - p.t <= next.t - target => *p,
        _ => *next,
    }
}

/// Labels `pending` from a time-ordered power stream once a sample at or
/// after `pending.t + t_f` exists. The label is the sample nearest to the
/// target time; ties go to the earlier sample.
pub fn label_when_ready<T: Scalar>(
    pending: &FeatureVector<T>,
    power_stream: &[PowerSample],
    t_f: f64,
) -> Option<LabeledSample<T>> {
    let target = pending.t + t_f;
    let idx = power_stream.partition_point(|s| s.t < target - TIME_EPS);
    let next = power_stream.get(idx)?;
    let prev = idx.checked_sub(1).map(|i| &power_stream[i]);
    let chosen = nearest(prev, next, target);
    Some(LabeledSample {
        feature: pending.clone(),
        label: T::from_f64_lossy(chosen.power_dbm),
        label_t: chosen.t,
    })
}

/// Streaming labeler for one STA: features wait here until their future
/// power sample arrives. Each feature leaves exactly once, labeled or
/// dropped.
#[derive(Debug)]
pub struct Labeler<T> {
    t_f: f64,
    pending: VecDeque<FeatureVector<T>>,
    last: Option<PowerSample>,
}

impl<T: Scalar> Labeler<T> {
    pub fn new(t_f: f64) -> Self {
        Labeler {
            t_f,
            pending: VecDeque::new(),
            last: None,
        }
    }

    pub fn push(&mut self, feature: FeatureVector<T>) {
        debug_assert!(self.pending.back().is_none_or(|b| b.t <= feature.t));
        self.pending.push_back(feature);
    }

    pub fn pending(&self) -> usize {
        self.pending.len()
    }

    /// Feeds the next power sample; returns the features it completes.
    pub fn on_power(&mut self, sample: PowerSample) -> Vec<LabeledSample<T>> {
        let mut out = Vec::new();
        while let Some(front) = self.pending.front() {
            let target = front.t + self.t_f;
            if sample.t < target - TIME_EPS {
                break;
            }
            let chosen = nearest(self.last.as_ref(), &sample, target);
            let feature = self.pending.pop_front().unwrap();
            out.push(LabeledSample {
                feature,
                label: T::from_f64_lossy(chosen.power_dbm),
                label_t: chosen.t,
            });
        }
        self.last = Some(sample);
        out
    }

    /// End of stream: drops whatever is still waiting and returns how many.
    pub fn finish(&mut self) -> usize {
        let n = self.pending.len();
        self.pending.clear();
        n
    }
}
