//! Optimization laboratory core: dataset ingestion, scene construction,
//! visibility and LOD passes, software rasterization, telemetry, benchmark
//! templates and session analytics.

pub mod analytics;
pub mod catalog;
pub mod field;
pub mod geometry;
pub mod ingest;
pub mod metrics;
pub mod optimizer;
pub mod particles;
pub mod render;
pub mod rng;
pub mod scene;
pub mod synthetic;
pub mod telemetry;
pub mod templates;

pub use glam::{DVec2, DVec3};

pub use analytics::{SessionSummary, ThresholdReport, TimeWindow, Verdict, Winner};
pub use catalog::{validate_profile, Catalog, RunProfile, ValidatedProfile};
pub use metrics::MetricKind;
pub use optimizer::{run_pipeline, FrameCullStats, VisibleSet};
pub use scene::{Camera, ObjectKind, Scene, SceneObject};
pub use telemetry::{FrameSample, Session};
pub use templates::{HarnessConfig, TemplateId};
