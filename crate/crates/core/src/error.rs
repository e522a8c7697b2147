use thiserror::Error;

/// Errors produced by code construction, constellation design, decoding and simulation.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("symbol vector has {got} entries, dispersion set expects {expected}")]
    SymbolCount { expected: usize, got: usize },

    #[error("seed must be an orthogonal design, got {0}")]
    NotOrthogonalSeed(&'static str),

    #[error("dispersion set has no symbols")]
    EmptyDispersionSet,

    #[error("constellation needs at least {need} points, got {got}")]
    TooFewPoints { need: usize, got: usize },

    #[error("enumeration of {codewords} codewords exceeds the limit of {limit}")]
    EnumerationGuard { codewords: u128, limit: u128 },

    #[error("codebook is not full rank: minimum difference rank {min_rank} < {n_t}")]
    RankDeficient { min_rank: usize, n_t: usize },

    #[error("code matrix is not quasi-unitary (beta = {beta:.6e}, Gram residual = {residual:.3e})")]
    NotQuasiUnitary { beta: f64, residual: f64 },

    #[error("scale factor must be positive, got {0}")]
    NonPositiveScale(f64),

    #[error("codebook is empty")]
    EmptyCodebook,

    #[error("genie decoding requires the true scale factor")]
    GenieScaleMissing,

    #[error("infeasible constellation design: {0}")]
    Infeasible(String),

    #[error("invalid constellation size {0}: must be even and at least 4")]
    InvalidSize(usize),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("unsupported scheme/antenna combination: {0}")]
    Unsupported(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
