use thiserror::Error;

/// Errors raised by the scattering and timing routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The (1,1) entry of a transfer matrix vanished, so t = 1/M11 is undefined.
    #[error("degenerate transfer matrix: m11 vanishes")]
    DegenerateMatrix,

    #[error("energy {energy} is outside the tunneling regime 0 < E < V = {height}")]
    OutOfRegime { energy: f64, height: f64 },

    /// Chebyshev evaluation hit a vanishing pivot (band edge or resonance vicinity).
    #[error("near-singular Chebyshev evaluation at chi = {chi}")]
    NearSingular { chi: f64 },

    #[error("resonance within the differentiation stencil around E = {energy}")]
    ResonanceProximity { energy: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
