//! Sequences, metrics, protocols and reports.

pub mod benchmark;
pub mod dataset;
pub mod metrics;
pub mod protocol;
pub mod report;
pub mod synthetic;

pub use benchmark::{evaluate_sequence, run_benchmark, Protocol, SequenceResult};
pub use dataset::{load_otb_sequence, write_otb_sequence, Sequence, SequenceSource};
pub use metrics::{center_error, compute_metrics, iou, MetricsReport};
pub use protocol::{
    generate_sre_initializations, generate_tre_segments, generate_tre_starts, run_reset_protocol,
    run_reset_protocol_with, run_tracker, DcfTracker, ResetOutcome, SequenceTracker,
};
pub use synthetic::{render_synthetic, SyntheticSpec};
