use thiserror::Error;

use crate::lattice::KVector;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid lattice configuration: {0}")]
    InvalidLattice(String),

    #[error("no grid point falls inside the interaction shell")]
    EmptyShell,

    #[error("shell point {0} has no reflected partner inside the shell")]
    UnpairedMode(KVector),

    #[error("mode table has {0} modes, at most 64 fit in one occupation word")]
    TooManyModes(usize),

    #[error("state vectors or operators refer to different mode tables")]
    ModeTableMismatch,

    #[error("mode index {index} out of range for {modes} modes")]
    ModeOutOfRange { index: usize, modes: usize },

    #[error("sector dimension {dim} exceeds the basis cap {cap}")]
    BasisCap { dim: u128, cap: usize },

    #[error("operator degree {degree} exceeds the degree cap {cap}")]
    DegreeCap { degree: usize, cap: usize },

    #[error("{0} is not a shell wavevector")]
    NotInShell(KVector),

    #[error("{0} is not in the upper shell hemisphere")]
    NotInUpperShell(KVector),

    #[error("formfactor value given for off-shell pair ({0}, {1})")]
    OffShellFormfactor(KVector, KVector),

    #[error("operator does not conserve particle number")]
    NotNumberConserving,

    #[error("operator is not Hermitian")]
    NotHermitian,

    #[error("pair coefficients at {k} are not normalized (|u|^2 + |v|^2 = {norm})")]
    NotNormalized { k: KVector, norm: f64 },

    #[error("no pair coefficients supplied for shell wavevector {0}")]
    MissingCoefficients(KVector),

    #[error("eigensolver did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
