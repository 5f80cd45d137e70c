use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Gl4Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("no convergence after {iterations} iterations (last residual {residual:.3e})")]
    Convergence {
        iterations: usize,
        residual: f64,
        history: Vec<f64>,
    },
    #[error("degenerate fit: {0}")]
    DegenerateFit(String),
    #[error("singular parameter: {0}")]
    Singular(String),
    #[error("point outside the tubular neighbourhood: {0}")]
    OutsideTube(String),
    #[error("unsupported region: {0}")]
    UnsupportedRegion(String),
    #[error("mode {k} solve failed: {reason}")]
    ModeSolve { k: usize, reason: String },
    #[error("io: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Gl4Error>;

impl Gl4Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Gl4Error::InvalidInput(msg.into())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Gl4Error::Convergence { .. } | Gl4Error::ModeSolve { .. } => 2,
            _ => 1,
        }
    }
}

impl From<std::io::Error> for Gl4Error {
    fn from(e: std::io::Error) -> Self {
        Gl4Error::Io(e.to_string())
    }
}
