//! Discriminative correlation filter trackers with exact scale estimation,
//! plus the benchmark harness used to evaluate them.
//!
//! Grids are row-major with the last axis fastest. The forward DFT is
//! unnormalized and the inverse carries the `1/N` factor.

pub mod cli;
pub mod compression;
pub mod error;
pub mod evaluation;
pub mod features;
pub mod kv;
pub mod mcdcf;
pub mod spectral;
pub mod trackers;

pub use error::{Error, Result};
pub use features::{GrayImage, Patch};
pub use mcdcf::{CorrelationScores, DesiredOutput, FeatureSample, FilterModel};
pub use spectral::{ComplexGrid, RealGrid};
pub use trackers::{init, BoundingBox, FrameDiagnostics, TargetState, TrackerConfig, TrackerHandle, TrackerKind};
