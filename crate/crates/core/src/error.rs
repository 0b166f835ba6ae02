use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("grid too coarse: {reason}; use at least n_points = {required_n_points}")]
    GridTooCoarse { reason: String, required_n_points: usize },

    #[error("not a pulse train: found {peaks} peak(s) above 10% of the maximum")]
    NotATrain { peaks: usize },

    #[error("integrator failure: unitarity drift {drift:.3e} exceeds {limit:.1e}")]
    Integrator { drift: f64, limit: f64 },

    #[error("integrator parameters rejected: {0}")]
    IntegratorParams(String),

    #[error("undersampled trace: need at least {required_n} samples")]
    Sampling { required_n: usize },

    #[error("control failure: {0}")]
    Control(String),
}

pub type Result<T> = std::result::Result<T, Error>;
