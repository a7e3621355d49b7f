//! Background-oriented schlieren (BOS) toolkit.
//!
//! The pipeline runs from engineered background patterns ([`patterns`]), through a
//! first-order optics model ([`optics`]) and a forward simulator that produces image
//! pairs with exact ground truth ([`simulate`]), to displacement reconstruction
//! ([`reconstruct`]), scoring ([`metrics`]) and visualization ([`render`]).
//!
//! Displacement convention used everywhere: a field `δ` relates a reference frame and a
//! distorted frame by `distorted(x) = reference(x - δ(x))`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod imagecore;
pub mod metrics;
pub mod optics;
pub mod patterns;
pub mod reconstruct;
pub mod render;
pub mod rng;
pub mod simulate;

pub use error::{Error, Result};
pub use imagecore::{DisplacementField, GrayImage, Mask, Plane, RgbImage};
