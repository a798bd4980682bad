use std::fmt;

use thiserror::Error;

/// Where in an input file a parse failure happened.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Location {
    Line(usize),
    Byte(usize),
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Location::Line(l) => write!(f, "line {l}"),
            Location::Byte(b) => write!(f, "byte {b}"),
        }
    }
}

/// Pipeline stage, attached to errors surfaced by [`crate::pipeline::reconstruct`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Read,
    Normalize,
    Index,
    Curvature,
    Refine,
    Patch,
    Estimate,
    Fill,
    Extract,
    Write,
    Metrics,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Stage::Read => "read",
            Stage::Normalize => "normalize",
            Stage::Index => "index",
            Stage::Curvature => "curvature",
            Stage::Refine => "refine",
            Stage::Patch => "patch",
            Stage::Estimate => "estimate",
            Stage::Fill => "fill",
            Stage::Extract => "extract",
            Stage::Write => "write",
            Stage::Metrics => "metrics",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("point cloud is empty")]
    EmptyCloud,
    #[error("point cloud has zero extent (all points coincident)")]
    DegenerateExtent,
    #[error("parse error at {location}: {message}")]
    Parse { location: Location, message: String },
    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),
    #[error("empty input")]
    EmptyInput,
    #[error("no coarse query region contained at least 3 points")]
    NoCurvatureSamples,
    #[error("patch is empty")]
    EmptyPatch,
    #[error("patch points are collinear or coincident")]
    DegeneratePatch,
    #[error("vertex {0} is not an evaluated coarse vertex")]
    NotCoarseVertex(usize),
    #[error("coarse vertex {0} has no value")]
    MissingCoarseValue(usize),
    #[error("field is empty or does not match the lattice")]
    EmptyField,
    #[error("mesh has no face with positive area")]
    NoArea,
    #[error("point cloud has no normals")]
    MissingNormals,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("{stage}: {source}")]
    AtStage {
        stage: Stage,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn parse_line(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            location: Location::Line(line),
            message: message.into(),
        }
    }

    pub(crate) fn parse_byte(byte: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            location: Location::Byte(byte),
            message: message.into(),
        }
    }

    /// The innermost error, with stage wrappers removed.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtStage { source, .. } => source.root(),
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) trait StageExt<T> {
    fn at(self, stage: Stage) -> Result<T>;
}

impl<T> StageExt<T> for Result<T> {
    fn at(self, stage: Stage) -> Result<T> {
        self.map_err(|e| Error::AtStage {
            stage,
            source: Box::new(e),
        })
    }
}
