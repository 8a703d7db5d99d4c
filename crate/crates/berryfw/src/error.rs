use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("internal dimension mismatch: {0} vs {1}")]
    DimMismatch(usize, usize),
    #[error("factor declared {declared} contains a {found} exponent")]
    MixedFactor {
        declared: &'static str,
        found: &'static str,
    },
    #[error("factorizations are not equal as operators")]
    UnequalFactorizations,
    #[error("degree {0} exceeds the symmetrization cap {1}")]
    DegreeCap(usize, usize),
    #[error("|P| = {0:e} is too small for a massless model")]
    MomentumUnderflow(f64),
    #[error("invalid model configuration: {0}")]
    Config(String),
    #[error("eigenvalues inside band group {group} spread by {spread:e} (tolerance {tol:e})")]
    GroupSpread { group: usize, spread: f64, tol: f64 },
    #[error("near-degenerate bands: gap {gap:e} below tolerance {tol:e}")]
    NearDegenerate { gap: f64, tol: f64 },
    #[error("gauge alignment failed: overlap singular value {0:e}")]
    GaugeAlignment(f64),
    #[error("bracket term unavailable for this model")]
    BracketUnavailable,
    #[error("unsupported model: {0}")]
    Unsupported(String),
    #[error("integration failed: {0}")]
    Integration(String),
}

pub type Result<T> = std::result::Result<T, Error>;
