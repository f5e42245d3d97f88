//! Crate-wide error type.

use thiserror::Error;

use crate::lp::LpError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("site count {n} outside supported range 1..={max}")]
    SiteCountOutOfRange { n: usize, max: usize },

    #[error("invalid lattice: {0}")]
    InvalidLattice(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("local operators must act on 1 or 2 sites, got {0}")]
    UnsupportedSupport(usize),

    #[error("rate matrix has imaginary residue {0:e}")]
    ImaginaryResidue(f64),

    #[error("dissipator weight must be non-negative, got {0}")]
    NegativeWeight(f64),

    #[error("unknown term `{0}`")]
    UnknownTerm(String),

    #[error("linear program failed: {0}")]
    Lp(#[from] LpError),

    #[error("rank deficiency: expected rank {expected}, found {found}")]
    RankDeficient { expected: usize, found: usize },

    #[error("closed-form rates disagree with the superoperator construction for {term} (max deviation {deviation:e})")]
    ConventionMismatch { term: String, deviation: f64 },

    #[error("no non-negative noise weights classicalize the given Hamiltonian")]
    InfeasibleNoise,

    #[error("critical noise rate not bracketed below gamma_max = {gamma_max}")]
    NotBracketed { gamma_max: f64 },

    #[error("feasibility is not monotone in gamma: infeasible at {gamma} above a feasible point")]
    NonMonotone { gamma: f64 },

    #[error("ensemble is stationary (total escape rate is zero)")]
    Stationary,

    #[error("particle count {omega} exceeded cap {cap}")]
    OmegaCapExceeded { omega: u64, cap: u64 },

    #[error("occupation number overflow")]
    OccupationOverflow,

    #[error("bell pairs overlap at site {0}")]
    OverlappingPairs(usize),

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("growth fit window is empty")]
    EmptyFitWindow,

    #[error("saturation diverges: negative-mass ratio {ratio} >= 1")]
    DivergentSaturation { ratio: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
