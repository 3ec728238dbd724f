//! Camera movement classification from directional grid motion encodings.
//!
//! The pipeline: [`videoio`] loads fixed-shape grayscale clips, [`flow`]
//! estimates dense motion between consecutive frames, [`dgme`] turns the
//! motion into a 3×3 grid of magnitude-weighted direction histograms and
//! calibrates it across domains, [`model`] trains the classification heads,
//! and [`eval`] handles label schemas, splits and metrics. [`synth`] renders
//! labelled clips with known motion for testing.

pub mod dgme;
pub mod error;
pub mod eval;
pub mod flow;
pub mod image;
pub mod meta;
pub mod model;
pub mod synth;
pub mod table;
pub mod videoio;

pub use error::{Error, Result};
