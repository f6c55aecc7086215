//! Frame replay, benchmarking, rendering and synthetic scenes for the
//! `obsdet` pipeline.

pub mod bench;
pub mod commands;
pub mod config;
mod error;
pub mod pipeline;
pub mod render;
pub mod scene;

pub use bench::{bench, BenchReport, StageStats};
pub use config::PipelineConfig;
pub use error::{CliError, Result};
pub use pipeline::{run_pipeline, FrameOutput, FrameTiming, Pipeline, RunOutput};
pub use render::{render_topdown, Image, RenderOptions};
pub use scene::{gen_scene, write_scene, GroundTruth, Scene, SceneSpec};
