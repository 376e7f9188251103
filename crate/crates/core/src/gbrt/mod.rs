//! Gradient-boosted regression trees with squared loss, leaf-wise growth,
//! exact split finding, a random update/validation split and early stopping.

mod columns;
mod model;
pub mod serialize;
mod split;
mod tree;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pipeline::FeatureVector;
use crate::Scalar;

pub use model::{predict, train, GbrtModel};
pub use split::{split_dataset, split_indices};
pub use tree::{fit_tree, Node, RegressionTree};

/// Fewest samples `train` accepts.
pub const MIN_TRAIN_SAMPLES: usize = 5;

#[derive(Debug, Error, PartialEq)]
pub enum GbrtError {
    #[error("training skipped: {got} samples, need at least {need}")]
    TooFewSamples { got: usize, need: usize },
    #[error("invalid GBRT parameter `{field}`: {message}")]
    InvalidParams { field: &'static str, message: String },
    #[error("feature has {got} values, model expects {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("labels ({labels}) and rows ({rows}) differ in length")]
    LengthMismatch { rows: usize, labels: usize },
    #[error("model file: {0}")]
    Format(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GbrtParams {
    pub num_leaves: usize,
    pub max_depth: usize,
    pub num_rounds: usize,
    pub early_stop_rounds: usize,
    pub learning_rate: f64,
    pub min_samples_leaf: usize,
    /// Fraction of samples used for fitting; the rest validate.
    pub split_fraction: f64,
    pub rng_seed: u64,
}

impl Default for GbrtParams {
    fn default() -> Self {
        GbrtParams {
            num_leaves: 100,
            max_depth: 8,
            num_rounds: 10,
            early_stop_rounds: 2,
            learning_rate: 0.1,
            min_samples_leaf: 5,
            split_fraction: 0.8,
            rng_seed: 0,
        }
    }
}

impl GbrtParams {
    pub fn validate(&self) -> Result<(), GbrtError> {
        let bad = |field, message: &str| {
            Err(GbrtError::InvalidParams {
                field,
                message: message.to_string(),
            })
        };
        if self.num_leaves < 2 {
            return bad("num_leaves", "must be >= 2");
        }
        if self.max_depth < 1 {
            return bad("max_depth", "must be >= 1");
        }
        if self.num_rounds < 1 {
            return bad("num_rounds", "must be >= 1");
        }
        if self.early_stop_rounds < 1 {
            return bad("early_stop_rounds", "must be >= 1");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return bad("learning_rate", "must be in (0, 1]");
        }
        if self.min_samples_leaf < 1 {
            return bad("min_samples_leaf", "must be >= 1");
        }
        if !(self.split_fraction > 0.0 && self.split_fraction < 1.0) {
            return bad("split_fraction", "must be in (0, 1)");
        }
        Ok(())
    }
}

/// Read access to one input row.
pub trait FeatureRow<T> {
    fn dim(&self) -> usize;

    fn value(&self, j: usize) -> T;

    /// Copies `out.len()` consecutive values starting at `start`.
    fn copy_range(&self, start: usize, out: &mut [T]) {
        for (k, o) in out.iter_mut().enumerate() {
            *o = self.value(start + k);
        }
    }
}

impl<T: Copy> FeatureRow<T> for [T] {
    fn dim(&self) -> usize {
        self.len()
    }

    fn value(&self, j: usize) -> T {
        self[j]
    }

    fn copy_range(&self, start: usize, out: &mut [T]) {
        out.copy_from_slice(&self[start..start + out.len()]);
    }
}

impl<T: Copy> FeatureRow<T> for Vec<T> {
    fn dim(&self) -> usize {
        self.len()
    }

    fn value(&self, j: usize) -> T {
        self[j]
    }

    fn copy_range(&self, start: usize, out: &mut [T]) {
        out.copy_from_slice(&self[start..start + out.len()]);
    }
}

impl<T: Scalar> FeatureRow<T> for FeatureVector<T> {
    fn dim(&self) -> usize {
        self.len()
    }

    fn value(&self, j: usize) -> T {
        self.get(j)
    }

    fn copy_range(&self, start: usize, out: &mut [T]) {
        FeatureVector::copy_range(self, start, out)
    }
}

impl<T, R: FeatureRow<T> + ?Sized> FeatureRow<T> for &R {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn value(&self, j: usize) -> T {
        (**self).value(j)
    }

    fn copy_range(&self, start: usize, out: &mut [T]) {
        (**self).copy_range(start, out)
    }
}
