//! Error types shared across the library.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Normalization was requested for a state with no amplitude weight.
    #[error("cannot normalize a zero-norm state")]
    ZeroNorm,

    /// Squeeze parameter outside the unit disk.
    #[error("squeeze parameter must satisfy |r| < 1, got |r| = {0}")]
    SqueezeOutOfRange(f64),

    /// Detector efficiency outside (0, 1].
    #[error("detector efficiency must lie in (0, 1], got {0}")]
    EfficiencyOutOfRange(f64),

    /// Coupler parameters violate kappa > 0, z >= 0.
    #[error("invalid coupler config: {0}")]
    InvalidCoupler(String),

    /// Negative target for the center/outer intensity ratio.
    #[error("target intensity ratio must be non-negative, got {0}")]
    NegativeRatio(f64),

    /// Intensity ratio is undefined where all light sits in the center guide.
    #[error("intensity ratio diverges at theta = pi/2 + k*pi (no light in the outer guides)")]
    DivergentRatio,

    /// Conditioning on a detector outcome that carries zero probability.
    #[error("heralding on {subtracted} photons in the center guide has zero probability")]
    HeraldImpossible { subtracted: u32 },

    /// The multinomial evolution path only accepts (l, 0, l)-supported input.
    #[error("multinomial evolution requires support only on (l, 0, l) triples; found ({0}, {1}, {2})")]
    UnsupportedSupport(u32, u32, u32),

    /// A total-photon block exceeds the oracle's dense-diagonalization budget.
    #[error("block dimension {dim} exceeds the oracle safety limit {limit}")]
    BlockTooLarge { dim: usize, limit: usize },

    /// A probability dipped below the rounding floor; indicates a bug upstream.
    #[error("probability {value:e} at (m, n) = ({m}, {n}) is negative beyond rounding tolerance")]
    NegativeProbability { m: usize, n: usize, value: f64 },

    /// An operation required a normalized distribution or state.
    #[error("input is not normalized: total weight = {0}")]
    NotNormalized(f64),
}

pub type Result<T> = std::result::Result<T, Error>;
