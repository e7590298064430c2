use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("resource limit: {0}")]
    Resource(String),

    #[error("degenerate geometry at edge {edge}: {reason}")]
    Geometry { edge: usize, reason: String },

    #[error("compound element construction failed in cell {cell}: {reason}")]
    ElementConstruction { cell: usize, reason: String },

    #[error("{solver} did not converge after {iterations} iterations (relative residual {residual:.3e})")]
    Solver {
        solver: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("{solver} diverged; residual history {history:?}")]
    Divergence {
        solver: &'static str,
        history: Vec<f64>,
    },

    #[error("diagonal approximation has zero response at dof {dof}")]
    Lumping { dof: usize },

    #[error("CFL violation: Courant number {courant:.3} in {side} cell {cell}")]
    Advection { side: &'static str, cell: usize, courant: f64 },

    #[error("invalid model state: {0}")]
    StateValidity(String),

    #[error("Newton iteration failed; residual trace {trace:?}")]
    Newton { trace: Vec<f64> },

    #[error("unknown test case `{0}`")]
    UnknownCase(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("format error: {0}")]
    Format(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
