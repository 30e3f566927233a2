//! Supervised trajectory segmentation.
//!
//! The pipeline computes an interpolation error signal over each trajectory
//! ([`signal`]), slices it into labeled windows ([`training`]), fits a
//! random forest to recognize windows containing a behavior change
//! ([`forest`]), and segments new trajectories by majority vote over window
//! predictions ([`segment`]). [`baselines`] holds the comparison methods
//! and [`eval`] the scoring protocol.

pub mod algorithms;
pub mod cli;
pub mod baselines;
pub mod error;
pub mod eval;
pub mod forest;
pub mod geo;
pub mod io;
pub mod seeds;
pub mod segment;
pub mod signal;
pub mod training;
pub mod trajectory;

pub use error::{Error, Result};
pub use geo::{GeoPoint, KernelKind, TimedPoint};
pub use segment::{SegmentationResult, Segmenter};
pub use trajectory::Trajectory;
