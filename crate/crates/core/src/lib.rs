//! Refractive-flow mattes for transparent objects.
//!
//! A matte is a triple of object mask, attenuation and refractive flow;
//! compositing it over a background reproduces the object's appearance.
//! The crate covers:
//!
//! - [`matte`]: data model and compositing operators
//! - [`render`]: analytic Snell/Fresnel ray tracer producing ground-truth mattes
//! - [`graycode`]: Gray-code structured-light patterns and matte extraction
//! - [`augment`]: flow-consistent data augmentation
//! - [`metrics`]: training losses and evaluation metrics
//! - [`io`] and [`pipeline`]: file formats and the dataset/evaluation commands

pub mod augment;
mod error;
pub mod flow;
pub mod graycode;
pub mod io;
pub mod matte;
pub mod metrics;
pub mod pipeline;
pub mod raster;
pub mod render;

pub use error::{Error, Result};
pub use flow::FlowField;
pub use matte::{composite_alpha, composite_refractive, composite_refractive_with_summary, Matte};
pub use raster::{bilinear_sample, ImageBuffer};
