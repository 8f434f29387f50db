//! Annotation-free virtual restoration of craquelure in digitized paintings.
//!
//! The crate covers the whole classical pipeline:
//!
//! - [`synth`] builds aligned (clean, mask, damaged) training triplets from
//!   stochastic Bézier crack networks;
//! - [`morph`] finds candidate cracks with black/white top-hat transforms,
//!   a fixed threshold and size filtering;
//! - [`inpaint`] fills crack pixels with trimmed-mean passes or anisotropic
//!   diffusion;
//! - [`metrics`] scores detections and restorations;
//! - [`pipeline`] and [`config`] drive everything from the command line,
//!   with learned mask refinement delegated to an external command.

pub mod config;
pub mod error;
pub mod image;
pub mod inpaint;
pub mod metrics;
pub mod morph;
pub mod pipeline;
pub mod synth;

pub use error::{Error, Result};
pub use image::{BinaryMask, LabelMap, RasterImage};
