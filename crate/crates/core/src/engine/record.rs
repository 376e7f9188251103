use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::pipeline::FeatureKind;

/// Prediction method: one of the three learned feature sets, or the native
/// rule that repeats the current power.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MethodKind {
    #[serde(rename = "RP-Im")]
    RpIm,
    #[serde(rename = "Im")]
    Im,
    #[serde(rename = "RP")]
    Rp,
    #[serde(rename = "Native")]
    Native,
}

impl MethodKind {
    pub const ALL: [MethodKind; 4] = [MethodKind::RpIm, MethodKind::Im, MethodKind::Rp, MethodKind::Native];

    pub fn feature_kind(self) -> Option<FeatureKind> {
        match self {
            MethodKind::RpIm => Some(FeatureKind::RpIm),
            MethodKind::Im => Some(FeatureKind::Im),
            MethodKind::Rp => Some(FeatureKind::Rp),
            MethodKind::Native => None,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            MethodKind::RpIm => "RP-Im",
            MethodKind::Im => "Im",
            MethodKind::Rp => "RP",
            MethodKind::Native => "Native",
        }
    }
}

impl From<FeatureKind> for MethodKind {
    fn from(k: FeatureKind) -> Self {
        match k {
            FeatureKind::RpIm => MethodKind::RpIm,
            FeatureKind::Im => MethodKind::Im,
            FeatureKind::Rp => MethodKind::Rp,
        }
    }
}

impl fmt::Display for MethodKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for MethodKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "rp-im" | "rpim" => Ok(MethodKind::RpIm),
            "im" => Ok(MethodKind::Im),
            "rp" => Ok(MethodKind::Rp),
            "native" => Ok(MethodKind::Native),
            _ => Err(format!("unknown method '{s}' (expected RP-Im, Im, RP or Native)")),
        }
    }
}

/// Prediction of `r_{t+t_f}` made at feature time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionRecord {
    pub t: f64,
    pub sta: usize,
    pub method: MethodKind,
    pub predicted_dbm: f64,
    /// Power measured at `t + t_f`, joined after the run.
    pub measured_dbm: Option<f64>,
    /// Version of the published model used; 0 for the native rule.
    pub model_version: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TrainingOutcome {
    Trained {
        rounds_run: usize,
        best_round: usize,
        val_rmse: f64,
    },
    Skipped(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingRecord {
    /// Engine clock when the job ran: simulated seconds for [`super::Engine`],
    /// seconds since start for the threaded worker.
    pub clock: f64,
    pub sta: usize,
    pub n_samples: usize,
    pub outcome: TrainingOutcome,
}
