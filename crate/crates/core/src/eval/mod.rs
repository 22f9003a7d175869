//! Evaluation bench: brute-force oracle, equivalence fuzzing, accuracy
//! against ground truth, parameter sweeps, the hardware cost model and SVG
//! flow rendering.

pub mod accuracy;
pub mod cost;
pub mod fuzz;
pub mod oracle;
pub mod render;
pub mod scene;
pub mod sweep;

pub use accuracy::{directional_accuracy, load_segments, AccuracyReport, SegmentRow};
pub use cost::{cost_model, CostParams, CostReport};
pub use fuzz::{oracle_equivalence, variant_equivalence, FuzzReport};
pub use oracle::{oracle_score, oracle_winner, EventHistory};
pub use render::render_flow;
pub use scene::{scene_accuracy, SceneAccuracy};
pub use sweep::{sweep, Band, SweepCell};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("ground truth: {0}")]
    Segments(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Pipeline(#[from] crate::pipeline::PipelineError),
}
