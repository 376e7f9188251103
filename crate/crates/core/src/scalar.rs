//! Scalar abstraction shared by the learner, the feature pipeline and the
//! online engine. Scene geometry and timing stay in `f64`; everything that
//! flows into or out of a model is generic over [`Scalar`].

use std::fmt::{Debug, Display};
use std::str::FromStr;

use num_traits::{Float, FromPrimitive, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Floating-point type usable for features, labels and model parameters.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + Default
    + Debug
    + Display
    + FromStr
    + Serialize
    + DeserializeOwned
    + Send
    + Sync
    + 'static
{
    /// Short type tag written into serialized models.
    const TAG: &'static str;

    fn from_f64_lossy(v: f64) -> Self {
        Self::from_f64(v).unwrap_or_else(Self::nan)
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).unwrap_or_else(Self::infinity)
    }
}

impl Scalar for f32 {
    const TAG: &'static str = "f32";
}

impl Scalar for f64 {
    const TAG: &'static str = "f64";
}
