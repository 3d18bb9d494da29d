use thiserror::Error;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid dimension count {0} (supported: 1..={max})", max = crate::MAX_DIM)]
    InvalidDimension(usize),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("label sequence is not a valid preorder tree: {0}")]
    MalformedTree(&'static str),
    #[error("child assignment must cover exactly the split dimensions")]
    InvalidChildAssignment,
    #[error("coordinate {value} in dimension {dim} lies outside [0, 1]")]
    PointOutOfDomain { dim: usize, value: f64 },
    #[error("node id {0} does not exist in the tree")]
    InvalidNode(usize),
    #[error("refinement markers must be non-negative and request at least one level")]
    InvalidMarker,
    #[error("refinement plan belongs to a different tree")]
    PlanMismatch,
    #[error("rectangle is not covered by the subtree root")]
    NotCovered,
    #[error("marker arithmetic left a label outside {{0, 1}} at node {0}")]
    InconsistentMarkers(usize),
    #[error("refinement would exceed the maximum level {max}", max = crate::MAX_LEVEL)]
    LevelCap,
    #[error("rectangle level/index out of range")]
    InvalidRectangle,
    #[error("bad magic or version in blob header")]
    BadHeader,
    #[error("blob ended before the declared payload")]
    Truncated,
    #[error("unexpected data after the declared payload")]
    TrailingData,
    #[error("declared node count {declared} does not match the self-delimiting walk")]
    CountMismatch { declared: u64 },
    #[error("tree has labels that are neither all-zero nor all-one")]
    NotAnOctree,
    #[error("field length {found} does not match leaf count {expected}")]
    FieldLength { expected: usize, found: usize },
    #[error("Saltelli base count {0} is not a power of two")]
    NotPowerOfTwo(usize),
    #[error("empty bit field")]
    EmptyField,
    #[error("mesh is not watertight: {0}")]
    NotWatertight(&'static str),
    #[error("mesh has zero extent")]
    DegenerateMesh,
    #[error("invalid shape parameters: {0}")]
    InvalidShape(&'static str),
    #[error("invalid configuration: {0}")]
    InvalidConfig(&'static str),
}
