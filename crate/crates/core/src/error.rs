use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("distance matrix is not square: {rows} rows, row {row} has {len} entries")]
    NotSquare { rows: usize, row: usize, len: usize },
    #[error("distance matrix is not symmetric at ({i}, {j})")]
    NotSymmetric { i: usize, j: usize },
    #[error("diagonal entry ({i}, {i}) is not zero")]
    NonZeroDiagonal { i: usize },
    #[error("off-diagonal distance ({i}, {j}) is not positive")]
    NonPositiveOffDiagonal { i: usize, j: usize },
    #[error(
        "triangle inequality violated: d({i},{k}) exceeds d({i},{j}) + d({j},{k}) by {excess:e}"
    )]
    TriangleViolation { i: usize, j: usize, k: usize, excess: f64 },
    #[error("base index {base} out of range for {len} points")]
    BadBaseIndex { base: usize, len: usize },
    #[error("unknown base label {0:?}")]
    UnknownLabel(String),
    #[error("label count {labels} does not match point count {points}")]
    LabelMismatch { labels: usize, points: usize },
    #[error("duplicate point at indices {0} and {1}")]
    DuplicatePoint(usize, usize),
    #[error("sample {value} outside the allowed range {range}")]
    OutOfRange { value: f64, range: &'static str },
    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("snowflake exponent {0} outside (0, 1]")]
    ThetaOutOfRange(f64),
    #[error("distance is irrational in exact mode")]
    Irrational,
    #[error("points are not distinct")]
    NotDistinct,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("map does not vanish at the base point")]
    NonZeroAtBase,
    #[error("unsupported target norm for this operation: {0}")]
    UnsupportedTarget(&'static str),
    #[error("extension constant is smaller than the norm of the restriction ({norm})")]
    LTooSmall { norm: String },
    #[error("subset must contain the base point")]
    SubsetMissingBase,
    #[error("the zero map has no attaining molecules")]
    ZeroMap,
    #[error("classification inconsistency at ({x}, {y}): extreme={extreme}, modulus={modulus}")]
    ConsistencyViolation { x: usize, y: usize, extreme: bool, modulus: String },
    #[error("molecule ({0}, {1}) is not strongly exposed")]
    MemberNotExposed(usize, usize),
    #[error("map does not attain its norm at ({0}, {1})")]
    NotAttaining(usize, usize),
    #[error("molecule ({0}, {1}) is not extreme")]
    NotExtreme(usize, usize),
    #[error("minimal attaining pair ({0}, {1}) has zero concavity modulus")]
    DegenerateLocal(usize, usize),
    #[error("functional does not expose the molecule: {0}")]
    BadFunctional(String),
    #[error("no strict gap: second value {second} reaches the norm {norm}")]
    GapViolation { norm: String, second: String },
    #[error("linear program failed: {0}")]
    SolverFailure(String),
    #[error("delta {delta} must lie in (0, K/2) with K = {k}")]
    DeltaTooLarge { delta: f64, k: f64 },
    #[error("eta {0} must lie in (0, 1)")]
    EtaOutOfRange(f64),
    #[error("extension breakpoint {0} does not fit below 2π")]
    BreakpointOverflow(f64),
    #[error("index ({n}, {k}) out of range at depth {depth}")]
    IndexOutOfRange { n: u32, k: u64, depth: u32 },
    #[error("certificate violation: {0}")]
    CertificateViolation(String),
    #[error("operation requires the {0} norm")]
    WrongNorm(&'static str),
    #[error("no witness pair exceeds the case-1 threshold at depth {depth}; increase the depth")]
    NoWitness { depth: u32 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
