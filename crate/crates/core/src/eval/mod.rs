//! Scoring, statistics, the k-fold protocol and synthetic data.

pub mod protocol;
pub mod score;
pub mod stats;
pub mod synth;

pub use protocol::{compare, kfold_protocol, AlgorithmReport, ComparisonReport, FoldPlan};
pub use score::{score, SegmentScore};
pub use stats::{mann_whitney_u, MannWhitney};
pub use synth::{generate_synthetic, SynthSpec};
