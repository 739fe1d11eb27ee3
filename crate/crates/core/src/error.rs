use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong inside the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("divergent integral I_p^q with p = {p}, q = {q} (requires 0 < q < p)")]
    DivergentIntegral { p: f64, q: f64 },

    #[error("moment {moment} diverges for n = {n}, p = {p} (requires {condition})")]
    DivergentMoment {
        moment: &'static str,
        condition: &'static str,
        n: u32,
        p: f64,
    },

    #[error(
        "accuracy not reached after {subdivisions} subdivisions: estimate {estimate:e}, error {error:e}"
    )]
    AccuracyNotReached {
        estimate: f64,
        error: f64,
        subdivisions: usize,
    },

    #[error("profile decays too slowly: tail bound {tail:e} at truncation radius {radius}")]
    SlowDecay { radius: f64, tail: f64 },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("validity guard violated: {guard} (n = {n}, p = {p})")]
    Guard {
        guard: &'static str,
        n: u32,
        p: f64,
    },

    #[error("invalid exponent model: {0}")]
    InvalidModel(String),

    #[error("root bracketing failed: {0}")]
    Bracket(String),

    #[error("J(t v) stayed nonnegative up to t = {t_max}")]
    NoNegativeEnergy { t_max: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
