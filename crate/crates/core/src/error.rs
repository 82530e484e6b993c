use thiserror::Error;

use crate::mesh::ElementKind;

#[derive(Debug, Error)]
pub enum Error {
    #[error("element kind `{kind}` is not valid in dimension {dim}")]
    KindDimensionMismatch { kind: ElementKind, dim: usize },

    #[error("malformed mesh: {0}")]
    Malformed(String),

    #[error("non-conforming mesh: {0}")]
    NonConforming(String),

    #[error("degenerate element {element}: {detail}")]
    DegenerateElement { element: usize, detail: String },

    #[error("non-convex quadrilateral: element {element} ({detail})")]
    NonConvexQuadrilateral { element: usize, detail: String },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("radius formula inapplicable: {0}")]
    RadiusFormulaInapplicable(String),

    #[error("degenerate configuration: {0}")]
    DegenerateConfiguration(String),

    #[error("point lies outside element {element} (distance {distance:.3e})")]
    PointOutsideElement { element: usize, distance: f64 },

    #[error("singular Gram matrix on {context} (condition estimate {condition:.3e})")]
    SingularGram { context: String, condition: f64 },

    #[error("positivity violated: smallest eigenvalue {0:e}")]
    PositivityViolated(f64),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("unsupported norm exponent `{0}` (expected 1, 2 or inf)")]
    UnsupportedNorm(String),

    #[error("a target function is required for this quantity")]
    MissingTarget,

    #[error("target `{target}` provides derivatives only up to order {available}, order {needed} needed for the seminorm")]
    MissingSeminorm {
        target: String,
        available: u32,
        needed: u32,
    },

    #[error("insufficient refinement levels: need at least {need}, got {got}")]
    InsufficientLevels { need: usize, got: usize },

    #[error("ball of radius {radius:e} around interface {interface} crosses another interface")]
    DiskCrossesInterface { interface: usize, radius: f64 },

    #[error("scaled radius mismatch: quadratic form built for r_hat = {expected}, disk gives {got}")]
    RadiusMismatch { expected: f64, got: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
