use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("point is outside chart {chart}")]
    OutOfChart { chart: usize },
    #[error("map `{name}` is only C^{order}, order {needed} requested")]
    NotDifferentiable { name: String, order: u8, needed: u8 },
    #[error("domain violation: {0}")]
    DomainViolation(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("singular normalization: |det| = {det:e} below {tol:e}")]
    SingularNormalization { det: f64, tol: f64 },
    #[error("pair is not in the image of theta: {0}")]
    NotInThetaImage(String),
    #[error("arrows are not composable (mismatch {mismatch:e})")]
    NotComposable { mismatch: f64 },
    #[error("could not generate samples: {0}")]
    SamplingFailure(String),
    #[error("coherence lost at node {index}")]
    CoherenceLost { index: usize },
    #[error("graph leaves the domain at node {index}")]
    GraphOutsideDomain { index: usize },
    #[error("section leaves the domain of the local addition at node {index}")]
    NotInDomainU { index: usize },
    #[error("node {index} leaves its local-inverse patch")]
    OutsideNeighborhood { index: usize },
    #[error("ambiguous branch at node {index}")]
    BranchAmbiguity { index: usize },
    #[error("lift does not close up over the circle")]
    LiftNotClosed,
    #[error("rank drop: expected {expected}, found {found}")]
    RankDrop { expected: usize, found: usize },
    #[error("bracket leaves the kernel of T(alpha) by {residual:e}")]
    FrameProjectionError { residual: f64 },
    #[error("no admissible neighborhood after {halvings} halvings")]
    DegenerateNeighborhood { halvings: usize },
    #[error("start point is not in the orbit of the first representative")]
    StartNotInOrbit,
    #[error("config error: {0}")]
    Config(String),
    #[error("unknown suite `{0}`")]
    UnknownSuite(String),
    #[error("unknown id `{0}`")]
    UnknownId(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
