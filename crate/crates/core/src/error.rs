use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("malformed input: {0}")]
    Structure(String),

    #[error("invalid value: {0}")]
    Validation(String),

    #[error("unknown configuration key `{0}`")]
    UnknownKey(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("singular system: {0}")]
    Singular(String),

    #[error("overflow at {digits} digits: {message}; increase the working precision")]
    Overflow { digits: u32, message: String },

    #[error("evaluation at or too close to a pole: {0}")]
    AtPole(String),

    #[error("pole {index} is not simple (nearest pole at distance {distance:e}); shrink the region or remove Froissart doublets")]
    NonSimplePole { index: usize, distance: f64 },

    #[error("quadrature did not converge: estimate {estimate}, error bound {error_bound:e}")]
    Quadrature { estimate: f64, error_bound: f64 },

    #[error("Mulholland denominator vanishes at lambda = {0}; the pole behaves like a bound state")]
    BoundStateLike(num_complex::Complex64),

    #[error("{0}")]
    Usage(String),

    #[error("no poles available at E = {energy} meV: {hint}")]
    NoPoles { energy: f64, hint: String },

    #[error("energy grids differ at E = {0:?}")]
    GridMismatch(Vec<f64>),

    #[error("root search did not converge after {iterations} iterations (last iterate {last})")]
    NoConvergence {
        iterations: usize,
        last: num_complex::Complex64,
    },

    #[error("Step I outputs are missing ({0}); run `step1` first")]
    MissingStepOne(PathBuf),

    #[error("serialization: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
