use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate element {0}: zero or negative area")]
    DegenerateElement(usize),
    #[error("polynomial degree {0} outside supported range {1}..={2}")]
    UnsupportedDegree(usize, usize, usize),
    #[error("singular local element block in element {0}")]
    SingularLocalBlock(usize),
    #[error("singular condensed trace system")]
    SingularSystem,
    #[error("Newton did not converge at step {step}: residual {residual:.3e} after {iters} iterations")]
    NewtonDidNotConverge {
        step: usize,
        residual: f64,
        iters: usize,
    },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("unknown example id {0} (expected 1..=4)")]
    UnknownExample(usize),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
