//! Camera-assisted received power prediction: a synthetic blockage testbed,
//! feature assembly, gradient-boosted regression trees, an online engine
//! and the evaluation harness built on them.
//!
//! Everything numeric is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix the common choice.

// NaN-rejecting range checks read as `!(x > 0.0)` on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod engine;
pub mod gbrt;
pub mod harness;
pub mod pipeline;
pub mod scalar;
pub mod scene;

pub use scalar::Scalar;

pub type Engine = engine::Engine<f64>;
pub type Engine32 = engine::Engine<f32>;
pub type GbrtModel = gbrt::GbrtModel<f64>;
pub type GbrtModel32 = gbrt::GbrtModel<f32>;
pub type FeatureVector = pipeline::FeatureVector<f64>;
pub type LabeledSample = pipeline::LabeledSample<f64>;
pub type GrayImage = pipeline::GrayImage<f64>;
