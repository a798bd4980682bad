//! Curvature-adaptive unsigned distance field reconstruction of point clouds.
//!
//! The pipeline normalizes a cloud, samples surface variation on a coarse
//! lattice, refines the lattice where curvature is high, estimates unsigned
//! distances from fixed-size local patches, fills the remaining fine vertices
//! by averaging, and extracts an offset level set with marching cubes.

pub mod curvature;
pub mod error;
pub mod estimator;
pub mod extract;
pub mod fixture;
pub mod grid;
pub mod io;
mod mc_tables;
pub mod metrics;
pub mod model;
pub mod patch;
pub mod pipeline;
pub mod pool;
pub mod schedule;
pub mod spatial;

pub use curvature::{CurvatureField, Percentiles};
pub use error::{Error, Result, Stage};
pub use estimator::{EstimatorKind, UdfEstimator};
pub use extract::IsoSpec;
pub use grid::{AdaptiveGrid, LatticeSpec, Tag};
pub use metrics::MetricReport;
pub use model::{NormalizationTransform, Point3, PointCloud, TriangleMesh};
pub use patch::{Patch, ResamplePolicy};
pub use pipeline::{PipelineConfig, TimingReport};
pub use pool::WorkerPool;
pub use schedule::{RadiusSchedule, ScheduleParams};
pub use spatial::SpatialIndex;
