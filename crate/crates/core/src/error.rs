use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("A is not Hurwitz: max eigenvalue real part {max_real:.3e}")]
    NotHurwitz { max_real: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("system is not normal: commutator norm {residual:.3e} exceeds {tol:.3e} at w = {omega}")]
    NotNormal { residual: f64, tol: f64, omega: f64 },

    #[error("unbounded scaled graph: hull touches the point at infinity")]
    UnboundedGraph,

    #[error("set is empty inside the raster window: {0}")]
    EmptyInWindow(&'static str),

    #[error("sweep produced no verified regions")]
    NoRegions,

    #[error("solver failure: {0}")]
    Solver(String),

    #[error("simulation failure: {0}")]
    Simulation(String),

    #[error("unsupported operation: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}
