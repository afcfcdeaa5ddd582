use thiserror::Error;

/// Errors raised by the numerical routines and the experiment harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error(
        "point at distance {radius} from the mass center lies inside the inner boundary |x| <= 1"
    )]
    Singularity { radius: f64 },

    #[error("series did not converge: tail bound {tail_bound:e} exceeds tolerance {tolerance:e} at degree {max_degree}")]
    NonConvergence {
        max_degree: usize,
        tail_bound: f64,
        tolerance: f64,
    },

    #[error("point with |x| = {radius} is outside the plateau [{lower}, {upper}] of the shell")]
    OutOfPlateau { radius: f64, lower: f64, upper: f64 },

    #[error("integrand declares neither decay nor bounded support")]
    UnboundedSupport,

    #[error("ill-conditioned extrapolation: {0}")]
    IllConditioned(String),

    #[error("root bracketing failed: {0}")]
    RootBracketing(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("non-finite value {value} encountered in {context}")]
    NonFinite { context: &'static str, value: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
