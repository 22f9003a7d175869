//! Streaming, division-free velocity estimation for event cameras.
//!
//! Events are binned into fixed-duration windows, thresholded into one bit
//! per pixel and per axis, pushed into an `N x L` shift-register history, and
//! scored against `2J+1` integer velocity hypotheses by counting coincidences
//! along diagonal traces. Everything on the scoring path is fixed-width
//! integer logic; conversion to px/s happens host-side.
//!
//! Module map:
//!
//! - [`events`]: RPG text-format ingestion and ordered streaming.
//! - [`binning`]: per-axis saturating counters, occupancy thresholding and
//!   density-driven bin adaptation.
//! - [`grid`]: the occupancy history.
//! - [`scoring`]: trace and incremental scorers, comparators, winner selection.
//! - [`pipeline`]: the two-axis streaming estimator and `y` association.
//! - [`synth`]: synthetic scenes with ground truth.
//! - [`eval`]: brute-force oracle, accuracy reports, sweeps, cost model, SVG.

pub mod audit;
pub mod binning;
pub mod bits;
pub mod eval;
pub mod events;
pub mod grid;
pub mod par;
pub mod pipeline;
pub mod scoring;
pub mod synth;

pub use binning::{AdaptDecision, Axis, AxisAccumulator, BinConfig, OccupancyVector};
pub use events::{Event, EventError, Polarity, SensorGeometry};
pub use grid::OccupancyGrid;
pub use par::Execution;
pub use pipeline::{BinOutput, Detection, FlowEstimator, PipelineConfig, ScorerVariant};

pub use scoring::{HypothesisParams, HypothesisScore, PixelWinner, ScoreArray, ScorerMode};
