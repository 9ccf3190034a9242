//! Dataset generation, matte extraction, compositing and evaluation as
//! used by the command-line tool.

mod commands;
mod config;
mod generate;
mod manifest;

pub use commands::{
    capture, composite, evaluate, extract, EvalRow, METHOD_BACKGROUND, METHOD_PREDICTION,
};
pub use config::{CategoryWeights, DatasetSection, PipelineConfig, MIN_SIDE};
pub use generate::{background_pool, generate, GenerateOptions, SELF_CHECK_TOLERANCE};
pub use manifest::{DatasetManifest, SampleRecord, MANIFEST_FILE};
